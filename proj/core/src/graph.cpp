#include "taste/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "taste/error.hpp"

namespace taste {

void WeightParams::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw ValidationError("alpha and beta must be finite and non-negative");
  }
  if (!(alpha + beta > 0.0)) throw ValidationError("alpha + beta must be positive");
}

std::string_view to_string(GraphScope scope) noexcept {
  return scope == GraphScope::kPerTopic ? "topic" : "conversation";
}

std::optional<GraphScope> parse_graph_scope(std::string_view name) noexcept {
  if (name == "topic") return GraphScope::kPerTopic;
  if (name == "conversation") return GraphScope::kPerConversation;
  return std::nullopt;
}

InteractionGraph::InteractionGraph(std::vector<std::string> nodes, std::vector<Edge> edges,
                                   GraphScope scope)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), scope_(scope) {
  index_.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i], i).second) {
      throw ValidationError("duplicate graph node '" + nodes_[i] + "'");
    }
  }
  for (auto& e : edges_) {
    if (e.u >= nodes_.size() || e.v >= nodes_.size()) throw ValidationError("edge endpoint out of range");
    if (e.u == e.v) throw ValidationError("self-loop on '" + nodes_[e.u] + "'");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw ValidationError("edge weight must be positive and finite");
    }
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i].u == edges_[i - 1].u && edges_[i].v == edges_[i - 1].v) {
      throw ValidationError("duplicate edge '" + nodes_[edges_[i].u] + "' - '" +
                            nodes_[edges_[i].v] + "'");
    }
  }
  adjacency_.resize(nodes_.size());
  for (const auto& e : edges_) {
    adjacency_[e.u].push_back({e.v, e.weight});
    adjacency_[e.v].push_back({e.u, e.weight});
  }
}

std::optional<std::size_t> InteractionGraph::index_of(std::string_view author) const {
  auto it = index_.find(std::string(author));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double InteractionGraph::weight(std::string_view a, std::string_view b) const {
  auto ia = index_of(a);
  auto ib = index_of(b);
  if (!ia || !ib) return 0.0;
  for (const auto& n : adjacency_[*ia]) {
    if (n.node == *ib) return n.weight;
  }
  return 0.0;
}

double InteractionGraph::total_weight() const noexcept {
  double total = 0.0;
  for (const auto& e : edges_) total += e.weight;
  return total;
}

InteractionGraph InteractionGraph::induced(std::span<const std::size_t> keep) const {
  std::vector<std::size_t> sorted(keep.begin(), keep.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<std::ptrdiff_t> remap(nodes_.size(), -1);
  std::vector<std::string> nodes;
  nodes.reserve(sorted.size());
  for (std::size_t i : sorted) {
    remap[i] = static_cast<std::ptrdiff_t>(nodes.size());
    nodes.push_back(nodes_[i]);
  }
  std::vector<Edge> edges;
  for (const auto& e : edges_) {
    if (remap[e.u] >= 0 && remap[e.v] >= 0) {
      edges.push_back({static_cast<std::size_t>(remap[e.u]), static_cast<std::size_t>(remap[e.v]),
                       e.weight});
    }
  }
  return InteractionGraph(std::move(nodes), std::move(edges), scope_);
}

InteractionGraph build_interaction_graph(std::span<const Conversation> convs,
                                         const WeightParams& params, GraphScope scope) {
  if (convs.empty()) throw ValidationError("cannot build a graph from no conversations");
  params.validate();

  struct Counts {
    std::size_t replies = 0;
    std::size_t quotes = 0;
  };
  std::set<std::string> authors;
  std::map<std::pair<std::string, std::string>, Counts> pairs;
  for (const auto& conv : convs) {
    for (const auto& u : conv.utterances) authors.insert(u.author);
    for (const auto& ev : enumerate_interactions(conv)) {
      auto key = std::minmax(ev.source, ev.target);
      Counts& c = pairs[{key.first, key.second}];
      (ev.kind == InteractionKind::kReply ? c.replies : c.quotes)++;
    }
  }

  std::vector<std::string> nodes(authors.begin(), authors.end());
  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) index.emplace(nodes[i], i);

  std::vector<Edge> edges;
  for (const auto& [key, c] : pairs) {
    const double w = params.alpha * static_cast<double>(c.replies) +
                     params.beta * static_cast<double>(c.quotes);
    if (w > 0.0) edges.push_back({index.at(key.first), index.at(key.second), w});
  }
  return InteractionGraph(std::move(nodes), std::move(edges), scope);
}

std::vector<ScopedGraph> build_scoped_graphs(std::span<const Conversation> convs,
                                             const WeightParams& params, GraphScope scope) {
  if (convs.empty()) throw ValidationError("cannot build a graph from no conversations");
  std::vector<ScopedGraph> out;
  if (scope == GraphScope::kPerConversation) {
    for (const auto& conv : convs) {
      out.push_back({conv.id, build_interaction_graph(std::span(&conv, 1), params, scope)});
    }
    return out;
  }
  for (const auto& [topic, group] : group_by_topic(convs)) {
    out.push_back({topic, build_interaction_graph(group, params, scope)});
  }
  return out;
}

InteractionGraph k_core(const InteractionGraph& g, std::size_t k) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> degree(n);
  std::vector<bool> removed(n, false);
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    degree[i] = g.degree(i);
    if (degree[i] < k) {
      removed[i] = true;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.back();
    queue.pop_back();
    for (const auto& nb : g.neighbors(i)) {
      if (removed[nb.node]) continue;
      if (--degree[nb.node] < k) {
        removed[nb.node] = true;
        queue.push_back(nb.node);
      }
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (!removed[i]) keep.push_back(i);
  }
  return g.induced(keep);
}

namespace {

constexpr std::string_view kGraphHeader = "# taste-graph v1";

std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", w);
  return buf;
}

}  // namespace

void write_graph_tsv(std::ostream& out, const InteractionGraph& g) {
  out << kGraphHeader << '\n';
  for (const auto& e : g.edges()) {
    out << g.nodes()[e.u] << '\t' << g.nodes()[e.v] << '\t' << format_weight(e.weight) << '\n';
  }
}

void write_graph_tsv(const std::filesystem::path& path, const InteractionGraph& g) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write graph '" + path.string() + "'");
  write_graph_tsv(out, g);
}

InteractionGraph read_graph_tsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kGraphHeader) {
    throw ParseError(1, "expected header '" + std::string(kGraphHeader) + "'");
  }
  std::set<std::string> authors;
  std::vector<std::tuple<std::string, std::string, double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw ParseError(lineno, "expected 3 tab-separated fields");
    }
    std::string a = line.substr(0, t1);
    std::string b = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string_view ws = std::string_view(line).substr(t2 + 1);
    double w = 0.0;
    auto [ptr, ec] = std::from_chars(ws.data(), ws.data() + ws.size(), w);
    if (ec != std::errc() || ptr != ws.data() + ws.size()) {
      throw ParseError(lineno, "bad weight '" + std::string(ws) + "'");
    }
    authors.insert(a);
    authors.insert(b);
    rows.emplace_back(std::move(a), std::move(b), w);
  }
  std::vector<std::string> nodes(authors.begin(), authors.end());
  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) index.emplace(nodes[i], i);
  std::vector<Edge> edges;
  for (const auto& [a, b, w] : rows) edges.push_back({index.at(a), index.at(b), w});
  return InteractionGraph(std::move(nodes), std::move(edges));
}

InteractionGraph read_graph_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph '" + path.string() + "'");
  return read_graph_tsv(in);
}

}  // namespace taste
