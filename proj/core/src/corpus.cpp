#include "taste/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "taste/error.hpp"

namespace taste {

using nlohmann::json;

std::string_view stance_symbol(Stance s) noexcept { return s == Stance::kPro ? "+" : "-"; }

std::optional<Stance> parse_stance(std::string_view symbol) noexcept {
  if (symbol == "+") return Stance::kPro;
  if (symbol == "-") return Stance::kCon;
  return std::nullopt;
}

std::vector<std::string> Conversation::authors() const {
  std::set<std::string> seen;
  for (const auto& u : utterances) seen.insert(u.author);
  return {seen.begin(), seen.end()};
}

const Utterance* Conversation::find(std::string_view utterance_id) const {
  for (const auto& u : utterances) {
    if (u.id == utterance_id) return &u;
  }
  return nullptr;
}

std::size_t Conversation::depth() const {
  std::unordered_map<std::string_view, std::string_view> parent_of;
  for (const auto& u : utterances) {
    if (u.parent) parent_of.emplace(u.id, *u.parent);
  }
  std::size_t deepest = 0;
  for (const auto& u : utterances) {
    std::size_t d = 0;
    for (auto it = parent_of.find(u.id); it != parent_of.end(); it = parent_of.find(it->second)) {
      ++d;
      if (d > utterances.size()) break;  // cycle; validate() reports it
    }
    deepest = std::max(deepest, d);
  }
  return deepest;
}

std::vector<Interaction> enumerate_interactions(const Conversation& conv) {
  std::unordered_map<std::string_view, const Utterance*> by_id;
  for (const auto& u : conv.utterances) by_id.emplace(u.id, &u);

  std::vector<Interaction> out;
  for (const auto& u : conv.utterances) {
    if (u.parent) {
      auto it = by_id.find(*u.parent);
      if (it != by_id.end() && it->second->author != u.author) {
        out.push_back({u.author, it->second->author, InteractionKind::kReply});
      }
    }
    for (const auto& q : u.quotes) {
      auto it = by_id.find(q);
      if (it != by_id.end() && it->second->author != u.author) {
        out.push_back({u.author, it->second->author, InteractionKind::kQuote});
      }
    }
  }
  return out;
}

void validate(const Conversation& conv) {
  if (conv.utterances.empty()) {
    throw ValidationError("conversation '" + conv.id + "' has no utterances");
  }
  std::unordered_map<std::string_view, const Utterance*> by_id;
  for (const auto& u : conv.utterances) {
    if (u.id.empty()) throw ValidationError("utterance with empty id in '" + conv.id + "'");
    if (u.author.empty()) throw ValidationError("utterance '" + u.id + "' has no author");
    if (!by_id.emplace(u.id, &u).second) {
      throw ValidationError("utterance '" + u.id + "' is duplicated");
    }
  }

  std::size_t roots = 0;
  for (const auto& u : conv.utterances) {
    if (!u.parent) {
      ++roots;
    } else if (*u.parent == u.id) {
      throw ValidationError("utterance '" + u.id + "' replies to itself");
    } else if (!by_id.contains(*u.parent)) {
      throw ValidationError("utterance '" + u.id + "': parent '" + *u.parent + "' not found");
    }
    for (const auto& q : u.quotes) {
      if (q == u.id) throw ValidationError("utterance '" + u.id + "' quotes itself");
      if (!by_id.contains(q)) {
        throw ValidationError("utterance '" + u.id + "': quoted utterance '" + q + "' not found");
      }
    }
  }
  if (roots != 1) {
    throw ValidationError("conversation '" + conv.id + "' must have exactly one root, found " +
                          std::to_string(roots));
  }

  // With one root and every other node holding one parent, the reply graph is a
  // tree iff every node reaches the root.
  std::unordered_map<std::string_view, int> state;  // 1 = reaches root
  for (const auto& u : conv.utterances) {
    std::vector<std::string_view> path;
    std::unordered_set<std::string_view> on_path;
    std::string_view cur = u.id;
    while (true) {
      if (state[cur] == 1) break;
      const Utterance* node = by_id.at(cur);
      if (!node->parent) break;
      if (!on_path.insert(cur).second) {
        throw ValidationError("utterance '" + std::string(cur) + "' is part of a reply cycle");
      }
      path.push_back(cur);
      cur = *node->parent;
    }
    for (auto id : path) state[id] = 1;
    state[u.id] = 1;
  }

  std::set<std::string_view> authors;
  for (const auto& u : conv.utterances) authors.insert(u.author);
  for (const auto& [author, stance] : conv.author_labels) {
    if (!authors.contains(author)) {
      throw ValidationError("author label for '" + author + "' but the author wrote nothing in '" +
                            conv.id + "'");
    }
  }
}

namespace {

void check_fields(const json& obj, std::initializer_list<std::string_view> known,
                  const std::string& where, const LoadOptions& options, std::size_t line) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) != known.end()) continue;
    std::string msg = "unknown field '" + key + "' in " + where;
    if (!options.lenient) throw ParseError(line, msg);
    if (options.warn) options.warn((line > 0 ? "line " + std::to_string(line) + ": " : "") + msg);
  }
}

const json& require(const json& obj, const char* key, const std::string& where, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "' in " + where);
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where,
                           std::size_t line) {
  const json& v = require(obj, key, where, line);
  if (!v.is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string in " + where);
  return v.get<std::string>();
}

Stance stance_from_json(const json& v, const std::string& where, std::size_t line) {
  if (v.is_string()) {
    if (auto s = parse_stance(v.get<std::string>())) return *s;
  }
  throw ParseError(line, "stance must be \"+\" or \"-\" in " + where);
}

}  // namespace

Conversation parse_conversation(std::string_view text, const LoadOptions& options,
                                std::size_t line) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(line, "record must be a JSON object");

  Conversation conv;
  check_fields(doc, {"id", "topic", "utterances", "author_labels"}, "conversation", options, line);
  conv.id = require_string(doc, "id", "conversation", line);
  const std::string where = "conversation '" + conv.id + "'";
  conv.topic = require_string(doc, "topic", where, line);

  const json& utts = require(doc, "utterances", where, line);
  if (!utts.is_array()) throw ParseError(line, "'utterances' must be an array in " + where);
  for (const json& ju : utts) {
    if (!ju.is_object()) throw ParseError(line, "utterance must be an object in " + where);
    Utterance u;
    u.id = require_string(ju, "id", "utterance of " + where, line);
    const std::string uwhere = "utterance '" + u.id + "'";
    check_fields(ju, {"id", "author", "parent", "text", "quotes", "label"}, uwhere, options, line);
    u.author = require_string(ju, "author", uwhere, line);
    u.text = require_string(ju, "text", uwhere, line);
    if (auto it = ju.find("parent"); it != ju.end() && !it->is_null()) {
      if (!it->is_string()) throw ParseError(line, "'parent' must be a string or null in " + uwhere);
      u.parent = it->get<std::string>();
    }
    if (auto it = ju.find("quotes"); it != ju.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(line, "'quotes' must be an array in " + uwhere);
      for (const json& q : *it) {
        if (!q.is_string()) throw ParseError(line, "quote ids must be strings in " + uwhere);
        u.quotes.push_back(q.get<std::string>());
      }
    }
    if (auto it = ju.find("label"); it != ju.end() && !it->is_null()) {
      u.label = stance_from_json(*it, uwhere, line);
    }
    conv.utterances.push_back(std::move(u));
  }

  if (auto it = doc.find("author_labels"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError(line, "'author_labels' must be an object in " + where);
    for (const auto& [author, v] : it->items()) {
      conv.author_labels[author] = stance_from_json(v, "author_labels of " + where, line);
    }
  }

  try {
    validate(conv);
  } catch (const ValidationError& e) {
    throw ValidationError(line > 0 ? "line " + std::to_string(line) + ": " + e.what() : e.what());
  }
  if (options.broadcast_author_labels) broadcast_author_labels(conv);
  return conv;
}

std::string to_json_line(const Conversation& conv) {
  json doc;
  doc["id"] = conv.id;
  doc["topic"] = conv.topic;
  json utts = json::array();
  for (const auto& u : conv.utterances) {
    json ju;
    ju["id"] = u.id;
    ju["author"] = u.author;
    ju["parent"] = u.parent ? json(*u.parent) : json(nullptr);
    ju["text"] = u.text;
    ju["quotes"] = u.quotes;
    ju["label"] = u.label ? json(std::string(stance_symbol(*u.label))) : json(nullptr);
    utts.push_back(std::move(ju));
  }
  doc["utterances"] = std::move(utts);
  json labels = json::object();
  for (const auto& [author, s] : conv.author_labels) labels[author] = std::string(stance_symbol(s));
  doc["author_labels"] = std::move(labels);
  return doc.dump();
}

std::vector<Conversation> read_corpus(std::istream& in, const LoadOptions& options) {
  std::vector<Conversation> out;
  std::unordered_map<std::string, std::string> owner;  // utterance id -> conversation id
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Conversation conv = parse_conversation(text, options, line);
    for (const auto& u : conv.utterances) {
      auto [it, inserted] = owner.emplace(u.id, conv.id);
      if (!inserted) {
        throw ValidationError("line " + std::to_string(line) + ": utterance '" + u.id +
                              "' already appears in conversation '" + it->second + "'");
      }
    }
    out.push_back(std::move(conv));
  }
  if (in.bad()) throw IoError("read failure after line " + std::to_string(line));
  return out;
}

std::vector<Conversation> load_corpus(const std::filesystem::path& path,
                                      const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
  return read_corpus(in, options);
}

void write_corpus(std::ostream& out, std::span<const Conversation> corpus) {
  for (const auto& conv : corpus) out << to_json_line(conv) << '\n';
}

void write_corpus(const std::filesystem::path& path, std::span<const Conversation> corpus) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus '" + path.string() + "'");
  write_corpus(out, corpus);
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

CorpusStats compute_stats(std::span<const Conversation> corpus) {
  if (corpus.empty()) throw ValidationError("cannot compute statistics of an empty corpus");

  struct Acc {
    std::size_t posts = 0, conversations = 0, interactions = 0, tokens = 0;
    std::set<std::string> authors;
  };
  std::map<std::string, Acc> acc;
  for (const auto& conv : corpus) {
    Acc& a = acc[conv.topic];
    ++a.conversations;
    a.interactions += enumerate_interactions(conv).size();
    for (const auto& u : conv.utterances) {
      ++a.posts;
      a.authors.insert(u.author);
      std::istringstream words(u.text);
      std::string w;
      while (words >> w) ++a.tokens;
    }
  }

  CorpusStats stats;
  for (const auto& [topic, a] : acc) {
    TopicStats& t = stats.topics[topic];
    t.posts = a.posts;
    t.authors = a.authors.size();
    t.conversations = a.conversations;
    t.interactions = a.interactions;
    t.mean_tokens = a.posts ? static_cast<double>(a.tokens) / static_cast<double>(a.posts) : 0.0;
  }
  return stats;
}

Stance label_of_author_by_majority_tag(const Conversation& conv, std::string_view author) {
  std::size_t pro = 0, con = 0;
  for (const auto& u : conv.utterances) {
    if (u.author != author || !u.label) continue;
    (*u.label == Stance::kPro ? pro : con)++;
  }
  if (pro + con == 0) {
    throw ValidationError("author '" + std::string(author) + "' has no labeled utterances in '" +
                          conv.id + "'");
  }
  return pro >= con ? Stance::kPro : Stance::kCon;
}

void broadcast_author_labels(Conversation& conv) {
  for (auto& u : conv.utterances) {
    if (u.label) continue;
    if (auto it = conv.author_labels.find(u.author); it != conv.author_labels.end()) {
      u.label = it->second;
    }
  }
}

std::map<std::string, std::vector<Conversation>> group_by_topic(
    std::span<const Conversation> corpus) {
  std::map<std::string, std::vector<Conversation>> out;
  for (const auto& conv : corpus) out[conv.topic].push_back(conv);
  return out;
}

}  // namespace taste
