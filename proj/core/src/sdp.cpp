#include "taste/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "taste/error.hpp"
#include "taste/rng.hpp"

namespace taste {

void SdpConfig::validate() const {
  if (rank < 2) throw ValidationError("SDP rank must be at least 2");
  if (max_sweeps < 1) throw ValidationError("SDP max sweeps must be positive");
  if (!(tolerance > 0.0)) throw ValidationError("SDP tolerance must be positive");
}

Eigen::VectorXd StructuralEmbedding::vector_of(const std::string& author) const {
  auto it = std::find(authors.begin(), authors.end(), author);
  if (it == authors.end()) return Eigen::VectorXd::Zero(rank);
  return vectors.row(it - authors.begin()).transpose();
}

EmbeddingStore StructuralEmbedding::to_store() const {
  EmbeddingStore store(static_cast<std::size_t>(rank), EmbeddingSource::kExternal);
  for (std::size_t i = 0; i < authors.size(); ++i) {
    const auto row = vectors.row(static_cast<Eigen::Index>(i));
    store.insert(authors[i], std::vector<double>(row.data(), row.data() + row.size()));
  }
  return store;
}

int effective_rank(std::size_t n, int requested) {
  const int needed = static_cast<int>(std::ceil(std::sqrt(2.0 * static_cast<double>(n))));
  return std::max(requested, needed);
}

double sdp_objective(const InteractionGraph& g, const RowMatrix& vectors) {
  double total = 0.0;
  for (const auto& e : g.edges()) {
    const double dot = vectors.row(e.u).dot(vectors.row(e.v));
    total += e.weight * (1.0 - dot) / 2.0;
  }
  return total;
}

StructuralEmbedding solve_maxcut_sdp(const InteractionGraph& g, const SdpConfig& cfg,
                                     const UpdateObserver& observer) {
  cfg.validate();
  if (g.empty()) throw ValidationError("cannot embed an empty graph");

  const std::size_t n = g.node_count();
  const int k = effective_rank(n, cfg.rank);

  StructuralEmbedding emb;
  emb.authors = g.nodes();
  emb.rank = k;
  emb.vectors = RowMatrix::Zero(static_cast<Eigen::Index>(n), k);

  Rng rng(cfg.seed);
  std::normal_distribution<double> gauss;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd x(k);
    for (int j = 0; j < k; ++j) x[j] = gauss(rng);
    if (g.degree(i) == 0) continue;
    emb.vectors.row(static_cast<Eigen::Index>(i)) = x.normalized().transpose();
  }

  double objective = sdp_objective(g, emb.vectors);
  Eigen::RowVectorXd s(k);
  int sweep = 0;
  while (sweep < cfg.max_sweeps && g.edge_count() > 0) {
    ++sweep;
    for (std::size_t a = 0; a < n; ++a) {
      if (g.degree(a) == 0) continue;
      s.setZero();
      for (const auto& nb : g.neighbors(a)) {
        s.noalias() += nb.weight * emb.vectors.row(static_cast<Eigen::Index>(nb.node));
      }
      const double norm = s.norm();
      if (!(norm > 0.0)) continue;
      emb.vectors.row(static_cast<Eigen::Index>(a)) = -s / norm;
      if (observer) observer(a, emb.vectors);
    }
    const double next = sdp_objective(g, emb.vectors);
    const double gain = next - objective;
    objective = next;
    if (gain <= cfg.tolerance * std::max(std::abs(objective), std::numeric_limits<double>::min())) {
      break;
    }
  }
  emb.objective = objective;
  emb.sweeps = sweep;
  return emb;
}

double cut_value(const InteractionGraph& g, const Partition& partition) {
  std::vector<int> side(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    auto it = partition.find(g.nodes()[i]);
    if (it == partition.end()) {
      throw ValidationError("partition does not cover node '" + g.nodes()[i] + "'");
    }
    side[i] = it->second;
  }
  double cut = 0.0;
  for (const auto& e : g.edges()) {
    if (side[e.u] != side[e.v]) cut += e.weight;
  }
  return cut;
}

RoundingResult round_hyperplane(const InteractionGraph& g, const StructuralEmbedding& emb,
                                int rounds, std::uint64_t seed) {
  if (rounds < 1) throw ValidationError("rounding needs at least one round");
  if (emb.authors != g.nodes()) throw ValidationError("embedding does not match the graph");

  const auto n = static_cast<Eigen::Index>(emb.authors.size());
  std::vector<int> side(static_cast<std::size_t>(n));
  std::vector<int> best_side;
  double best_cut = -1.0;
  Eigen::VectorXd normal(emb.rank);
  for (int r = 0; r < rounds; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> gauss;
    for (int j = 0; j < emb.rank; ++j) normal[j] = gauss(rng);
    const Eigen::VectorXd proj = emb.vectors * normal;
    for (Eigen::Index i = 0; i < n; ++i) side[static_cast<std::size_t>(i)] = proj[i] < 0.0 ? -1 : 1;

    double cut = 0.0;
    for (const auto& e : g.edges()) {
      if (side[e.u] != side[e.v]) cut += e.weight;
    }
    if (cut > best_cut) {
      best_cut = cut;
      best_side = side;
    }
  }

  RoundingResult result;
  result.cut = best_cut;
  for (Eigen::Index i = 0; i < n; ++i) {
    result.partition.emplace(emb.authors[static_cast<std::size_t>(i)],
                             best_side[static_cast<std::size_t>(i)]);
  }
  return result;
}

}  // namespace taste
