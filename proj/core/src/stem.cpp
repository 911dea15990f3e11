#include "taste/stem.hpp"

#include <vector>

#include <json.hpp>

#include "taste/error.hpp"

namespace taste {

namespace {

Stance stance_for(int side, Alignment a) {
  const bool pro = (side > 0) == (a == Alignment::kDirect);
  return pro ? Stance::kPro : Stance::kCon;
}

}  // namespace

AlignedPartition align_partition(const Partition& partition,
                                 const std::map<std::string, Stance>& train_labels) {
  std::size_t direct = 0, flipped = 0, seen = 0;
  for (const auto& [author, gold] : train_labels) {
    auto it = partition.find(author);
    if (it == partition.end()) continue;
    ++seen;
    if (stance_for(it->second, Alignment::kDirect) == gold) {
      ++direct;
    } else {
      ++flipped;
    }
  }
  if (seen == 0) throw ValidationError("no labeled author available to align the partition");

  AlignedPartition out;
  out.alignment = flipped > direct ? Alignment::kFlipped : Alignment::kDirect;
  out.train_accuracy =
      static_cast<double>(std::max(direct, flipped)) / static_cast<double>(seen);
  for (const auto& [author, side] : partition) out.labels.emplace(author, stance_for(side, out.alignment));
  return out;
}

Partition sdp_classify(const InteractionGraph& g, const SdpConfig& cfg, int rounds) {
  const StructuralEmbedding emb = solve_maxcut_sdp(g, cfg);
  return round_hyperplane(g, emb, rounds, cfg.seed).partition;
}

StemResult stem_classify(const InteractionGraph& g, const SdpConfig& cfg, int rounds,
                         const std::map<std::string, Stance>& train_labels) {
  if (g.empty()) throw ValidationError("cannot classify an empty graph");

  StemResult result;
  const InteractionGraph core = k_core(g, 2);
  if (core.empty()) {
    result.used_fallback = true;
    result.core_partition = sdp_classify(g, cfg, rounds);
    result.full_partition = result.core_partition;
  } else {
    result.core_partition = sdp_classify(core, cfg, rounds);

    const std::size_t n = g.node_count();
    std::vector<int> side(n, 0);  // 0 = unlabeled
    std::vector<double> attach(n, 0.0);
    std::vector<bool> pending(n, false);
    auto label = [&](std::size_t i, int s) {
      side[i] = s;
      pending[i] = false;
      for (const auto& nb : g.neighbors(i)) {
        if (side[nb.node] == 0) attach[nb.node] += nb.weight;
      }
    };
    for (std::size_t i = 0; i < n; ++i) pending[i] = true;
    for (const auto& [author, s] : result.core_partition) label(*g.index_of(author), s);

    // Nodes are sorted by id, so the first maximum wins lexicographic ties.
    while (true) {
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (pending[i] && attach[i] > 0.0 && (pick == n || attach[i] > attach[pick])) pick = i;
      }
      if (pick == n) break;
      double vote = 0.0;
      for (const auto& nb : g.neighbors(pick)) vote += nb.weight * side[nb.node];
      label(pick, vote > 0.0 ? -1 : 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (pending[i]) label(i, 1);
    }
    for (std::size_t i = 0; i < n; ++i) result.full_partition.emplace(g.nodes()[i], side[i]);
  }

  if (train_labels.empty()) {
    result.alignment = Alignment::kDirect;
    for (const auto& [author, s] : result.full_partition) {
      result.aligned_labels.emplace(author, stance_for(s, Alignment::kDirect));
    }
  } else {
    AlignedPartition aligned = align_partition(result.full_partition, train_labels);
    result.alignment = aligned.alignment;
    result.aligned_labels = std::move(aligned.labels);
  }
  return result;
}

std::string stem_result_to_json(const StemResult& result) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [author, side] : result.full_partition) {
    arr.push_back({{"author", author},
                   {"side", side},
                   {"stance", std::string(stance_symbol(result.aligned_labels.at(author)))}});
  }
  return arr.dump(2);
}

}  // namespace taste
