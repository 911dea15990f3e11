#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace taste {

/// Binary stance over the tagset {pro, con}.
enum class Stance : std::int8_t { kPro = 1, kCon = -1 };

constexpr Stance opposite(Stance s) noexcept {
  return s == Stance::kPro ? Stance::kCon : Stance::kPro;
}

/// "+" for pro, "-" for con.
std::string_view stance_symbol(Stance s) noexcept;
std::optional<Stance> parse_stance(std::string_view symbol) noexcept;

struct Utterance {
  std::string id;
  std::string author;
  std::optional<std::string> parent;  // absent for the root
  std::string text;
  std::vector<std::string> quotes;
  std::optional<Stance> label;

  bool operator==(const Utterance&) const = default;
};

struct Conversation {
  std::string id;
  std::string topic;
  std::vector<Utterance> utterances;
  std::map<std::string, Stance> author_labels;

  /// Distinct authors, sorted.
  std::vector<std::string> authors() const;
  const Utterance* find(std::string_view utterance_id) const;
  /// Length of the longest root-to-leaf reply path (a lone root has depth 0).
  std::size_t depth() const;

  bool operator==(const Conversation&) const = default;
};

enum class InteractionKind { kReply, kQuote };

/// One reply or quote event between two distinct authors. `source` wrote the
/// utterance that replies to / quotes an utterance written by `target`.
struct Interaction {
  std::string source;
  std::string target;
  InteractionKind kind;
};

/// Reply links come from parent ids, quote links from quote lists. Events where
/// an author replies to or quotes themselves are dropped. The graph module
/// weights exactly this enumeration.
std::vector<Interaction> enumerate_interactions(const Conversation& conv);

struct TopicStats {
  std::size_t posts = 0;
  std::size_t authors = 0;
  std::size_t conversations = 0;
  std::size_t interactions = 0;
  double mean_tokens = 0.0;

  bool operator==(const TopicStats&) const = default;
};

struct CorpusStats {
  std::map<std::string, TopicStats> topics;

  bool operator==(const CorpusStats&) const = default;
};

struct LoadOptions {
  /// Unknown fields produce a warning instead of an error.
  bool lenient = false;
  /// Fill missing utterance labels from the author's label (4Forums-style data).
  bool broadcast_author_labels = false;
  std::function<void(const std::string&)> warn;
};

/// Throws ValidationError naming the offending utterance id.
void validate(const Conversation& conv);

/// Parses one JSON Lines record. `line` is only used for error messages.
Conversation parse_conversation(std::string_view json, const LoadOptions& options = {},
                                std::size_t line = 0);
std::string to_json_line(const Conversation& conv);

std::vector<Conversation> read_corpus(std::istream& in, const LoadOptions& options = {});
std::vector<Conversation> load_corpus(const std::filesystem::path& path,
                                      const LoadOptions& options = {});
void write_corpus(std::ostream& out, std::span<const Conversation> corpus);
void write_corpus(const std::filesystem::path& path, std::span<const Conversation> corpus);

CorpusStats compute_stats(std::span<const Conversation> corpus);

/// Most frequent utterance label of `author`; ties go to pro.
Stance label_of_author_by_majority_tag(const Conversation& conv, std::string_view author);

/// Gives every unlabeled utterance its author's label, when one exists.
void broadcast_author_labels(Conversation& conv);

/// Topic name -> conversations of that topic, in corpus order.
std::map<std::string, std::vector<Conversation>> group_by_topic(
    std::span<const Conversation> corpus);

}  // namespace taste
