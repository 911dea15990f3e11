#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taste/corpus.hpp"
#include "taste/fusion.hpp"
#include "taste/graph.hpp"
#include "taste/sdp.hpp"
#include "taste/textfeat.hpp"

namespace taste {

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

/// Author-disjoint cross-validation plan. Utterances follow their author.
struct FoldPlan {
  int folds = 5;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> authors;  // per fold, sorted

  /// Fold of `author`, or -1.
  int fold_of(std::string_view author) const;
  /// Throws ValidationError unless the fold author sets are pairwise disjoint.
  void validate() const;

  bool operator==(const FoldPlan&) const = default;
};

/// Authors shuffled by `seed`, then dealt round-robin into k folds.
FoldPlan make_folds(std::span<const Conversation> corpus, int k, std::uint64_t seed);

/// Throws LeakageError if any author of `training_authors` belongs to the test
/// fold `fold` of `plan`.
void assert_no_leakage(const FoldPlan& plan, int fold, std::span<const std::string> training_authors);

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

struct UtterancePrediction {
  std::string utterance;
  std::string author;
  double pro_probability = 0.5;
  Stance predicted = Stance::kPro;
  std::optional<Stance> gold;
};

/// Majority of the predicted labels. A tie goes to pro when the mean predicted
/// pro-probability is at least 0.5. Throws ValidationError on empty input.
Stance author_vote(std::span<const UtterancePrediction> predictions);

/// Fraction of exact matches. Throws ValidationError on empty or unequal input.
double accuracy(std::span<const Stance> predicted, std::span<const Stance> gold);

struct TTestResult {
  std::string label;
  double t = 0.0;
  double p = 1.0;
  int dof = 0;
  bool degenerate = false;  // every paired difference was zero

  bool operator==(const TTestResult&) const = default;
};

/// Two-sided paired t-test on matched samples (n >= 2).
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

struct AuthorOutcome {
  std::string author;
  std::size_t utterances = 0;
  bool correct = false;
};

struct BucketStat {
  std::size_t authors = 0;
  std::size_t errors = 0;
  double error_rate = 0.0;

  bool operator==(const BucketStat&) const = default;
};

/// Error rate of author-level predictions by utterance count:
/// "1-2", "3-9", "10-19", "20+". Every bucket is present.
std::map<std::string, BucketStat> error_by_activity(std::span<const AuthorOutcome> outcomes);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

enum class ModelKind { kTasteGrn, kTasteConcat, kSdpOnly, kStem, kTextOnly };

std::string_view to_string(ModelKind kind) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept;

struct ExperimentConfig {
  ModelKind model = ModelKind::kTasteGrn;
  WeightParams weights;
  GraphScope scope = GraphScope::kPerTopic;
  SdpConfig sdp;
  int rounds = 100;
  TrainConfig train;
  int folds = 5;
  std::uint64_t seed = 42;
  double validation_fraction = 0.1;
  int jobs = 1;
  std::size_t hashed_dim = kDefaultHashedDim;
};

struct FoldResult {
  double post_accuracy = 0.0;
  double author_accuracy = 0.0;
  std::vector<UtterancePrediction> predictions;  // test utterances with a gold label
  std::vector<AuthorOutcome> authors;            // test authors with a gold label
  std::map<std::string, Stance> author_predictions;
};

struct TopicReport {
  std::vector<FoldResult> folds;
  double mean_post_accuracy = 0.0;
  double mean_author_accuracy = 0.0;
  double sd_post_accuracy = 0.0;
  double sd_author_accuracy = 0.0;
};

struct EvalReport {
  ExperimentConfig config;
  std::map<std::string, TopicReport> topics;
  std::vector<TTestResult> t_tests;
  std::map<std::string, BucketStat> activity;
};

/// Author-disjoint k-fold evaluation of `cfg.model`, topic by topic. The
/// interaction graph and SDP embedding of a topic use every author (the SDP
/// sees no labels). When `text` is null, hashed text vectors are used. Errors
/// are rethrown with the failing topic and fold in the message.
EvalReport run_experiment(std::span<const Conversation> corpus, const EmbeddingStore* text,
                          const ExperimentConfig& cfg);

/// Trains `cfg.model` (a neural model) on every labeled utterance of a
/// single-topic corpus, holding out `cfg.validation_fraction` of the authors
/// for the learning-rate schedule.
TrainResult train_on_topic(std::span<const Conversation> corpus, const EmbeddingStore* text,
                           const ExperimentConfig& cfg);

/// Paired t-tests of `report` against `baseline` on per-fold post and author
/// accuracy, one pair per topic present in both.
std::vector<TTestResult> compare_reports(const EvalReport& report, const EvalReport& baseline);

/// taste-report-v1 JSON (deterministic key order and number formatting),
/// including the per-utterance test predictions of every fold.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view json);

}  // namespace taste
