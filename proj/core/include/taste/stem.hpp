#pragma once

#include <map>
#include <string>

#include "taste/corpus.hpp"
#include "taste/graph.hpp"
#include "taste/sdp.hpp"

namespace taste {

enum class Alignment { kDirect, kFlipped };

/// Mapping of an unsigned partition onto stances.
struct AlignedPartition {
  std::map<std::string, Stance> labels;
  Alignment alignment = Alignment::kDirect;
  double train_accuracy = 0.0;
};

struct StemResult {
  Partition core_partition;
  Partition full_partition;
  std::map<std::string, Stance> aligned_labels;
  Alignment alignment = Alignment::kDirect;
  /// True when the 2-core was empty and the whole graph went through the SDP.
  bool used_fallback = false;
};

/// Picks direct (+1 -> pro) or flipped (+1 -> con), whichever is more accurate
/// on `train_labels`; ties go to direct. Authors in `train_labels` that are not
/// in the partition are ignored. Throws ValidationError if none overlap.
AlignedPartition align_partition(const Partition& partition,
                                 const std::map<std::string, Stance>& train_labels);

/// Plain SDP baseline: solve on the whole graph and round best-of-`rounds`.
Partition sdp_classify(const InteractionGraph& g, const SdpConfig& cfg, int rounds);

/// 2-core, SDP on the core, best-of-`rounds` rounding, then greedy propagation
/// to the periphery. Non-core nodes are labeled heaviest attachment to the
/// labeled set first (ties by author id), each taking the side opposite the
/// weighted majority of its labeled neighbors. Nodes never reached get +1.
/// When `train_labels` is empty the alignment is direct.
StemResult stem_classify(const InteractionGraph& g, const SdpConfig& cfg, int rounds,
                         const std::map<std::string, Stance>& train_labels = {});

/// `[{"author": str, "side": 1|-1, "stance": "+"|"-"}, ...]`
std::string stem_result_to_json(const StemResult& result);

}  // namespace taste
