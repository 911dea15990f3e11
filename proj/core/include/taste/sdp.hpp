#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "taste/graph.hpp"
#include "taste/textfeat.hpp"

namespace taste {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Low-rank max-cut solver settings.
struct SdpConfig {
  int rank = 16;            // raised to ceil(sqrt(2n)) on larger graphs
  int max_sweeps = 500;
  double tolerance = 1e-7;  // relative objective improvement per sweep
  std::uint64_t seed = 42;

  void validate() const;
};

/// One unit vector per author (zero for authors without edges), the rows of
/// the low-rank factor of the relaxed max-cut solution.
struct StructuralEmbedding {
  std::vector<std::string> authors;  // same order as the graph's nodes
  RowMatrix vectors;                 // |authors| x rank
  int rank = 0;
  double objective = 0.0;
  int sweeps = 0;

  /// Row of `author`, or the zero vector when the author is unknown.
  Eigen::VectorXd vector_of(const std::string& author) const;
  EmbeddingStore to_store() const;
};

/// Side of each author, +1 or -1.
using Partition = std::map<std::string, int>;

struct RoundingResult {
  Partition partition;
  double cut = 0.0;
};

/// Rank actually used for a graph of n nodes.
int effective_rank(std::size_t n, int requested);

/// Sum over edges of w_ab * (1 - <v_a, v_b>) / 2.
double sdp_objective(const InteractionGraph& g, const RowMatrix& vectors);

/// Called after every accepted coordinate update with the updated node index.
using UpdateObserver = std::function<void(std::size_t node, const RowMatrix& vectors)>;

/// Maximizes the relaxed cut by cyclic coordinate ascent over the rows: each
/// node moves to v_a = -s / |s| with s = sum_b w_ab v_b, which never lowers
/// the objective. Deterministic for a fixed (graph, config).
StructuralEmbedding solve_maxcut_sdp(const InteractionGraph& g, const SdpConfig& cfg,
                                     const UpdateObserver& observer = {});

/// Best of `rounds` random-hyperplane roundings. Round r draws its Gaussian
/// normal from derive_seed(seed, r). sign(0) is +1.
RoundingResult round_hyperplane(const InteractionGraph& g, const StructuralEmbedding& emb,
                                int rounds, std::uint64_t seed);

/// Weight of edges whose endpoints lie on different sides. Throws
/// ValidationError if a node is missing from the partition.
double cut_value(const InteractionGraph& g, const Partition& partition);

}  // namespace taste
