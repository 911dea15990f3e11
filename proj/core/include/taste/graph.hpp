#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "taste/corpus.hpp"

namespace taste {

/// Relative weight of replies (alpha) and quotes (beta) in an edge.
struct WeightParams {
  double alpha = 0.02;
  double beta = 1.0;

  /// alpha = 0.02, beta = 1 (reply-heavy forums with selective quoting).
  static constexpr WeightParams forums() { return {0.02, 1.0}; }
  /// alpha = 1, beta = 0 (platforms where quoting is rare).
  static constexpr WeightParams create_debate() { return {1.0, 0.0}; }

  void validate() const;
};

enum class GraphScope { kPerConversation, kPerTopic };

std::string_view to_string(GraphScope scope) noexcept;
std::optional<GraphScope> parse_graph_scope(std::string_view name) noexcept;

struct Edge {
  std::size_t u = 0;  // u < v
  std::size_t v = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

struct Neighbor {
  std::size_t node;
  double weight;
};

/// Undirected weighted speaker graph. Nodes are kept sorted by author id so
/// node indices (and everything seeded off them) are reproducible.
class InteractionGraph {
 public:
  InteractionGraph() = default;
  /// Throws ValidationError on self-loops, non-positive weights, duplicate
  /// edges or duplicate node ids.
  InteractionGraph(std::vector<std::string> nodes, std::vector<Edge> edges,
                   GraphScope scope = GraphScope::kPerTopic);

  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const Neighbor> neighbors(std::size_t node) const { return adjacency_[node]; }
  GraphScope scope() const noexcept { return scope_; }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t degree(std::size_t node) const { return adjacency_[node].size(); }

  std::optional<std::size_t> index_of(std::string_view author) const;
  /// 0 when the pair is not connected.
  double weight(std::string_view a, std::string_view b) const;
  double total_weight() const noexcept;

  /// Subgraph induced by `keep` (node indices); scope is preserved.
  InteractionGraph induced(std::span<const std::size_t> keep) const;

  bool operator==(const InteractionGraph& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_ && scope_ == other.scope_;
  }

 private:
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::unordered_map<std::string, std::size_t> index_;
  GraphScope scope_ = GraphScope::kPerTopic;
};

/// Aggregates every given conversation into one graph:
///   w_ab = alpha * (replies(a,b) + replies(b,a)) + beta * (quotes(a,b) + quotes(b,a)).
/// Every author becomes a node, including authors without interactions.
InteractionGraph build_interaction_graph(std::span<const Conversation> convs,
                                         const WeightParams& params,
                                         GraphScope scope = GraphScope::kPerTopic);

struct ScopedGraph {
  std::string key;  // topic name or conversation id
  InteractionGraph graph;
};

/// One graph per topic (kPerTopic) or per conversation (kPerConversation).
std::vector<ScopedGraph> build_scoped_graphs(std::span<const Conversation> convs,
                                             const WeightParams& params, GraphScope scope);

/// Maximal subgraph whose nodes all have (unweighted) degree >= k.
InteractionGraph k_core(const InteractionGraph& g, std::size_t k);

void write_graph_tsv(std::ostream& out, const InteractionGraph& g);
void write_graph_tsv(const std::filesystem::path& path, const InteractionGraph& g);
InteractionGraph read_graph_tsv(std::istream& in);
InteractionGraph read_graph_tsv(const std::filesystem::path& path);

}  // namespace taste
