#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "taste/corpus.hpp"

namespace taste {

/// kGrn: GRN(content, context) -> MLP. kConcat: MLP([content; context]).
/// kTextOnly: MLP(content), the context is ignored.
enum class FusionMode { kGrn, kConcat, kTextOnly };

std::string_view to_string(FusionMode mode) noexcept;
std::optional<FusionMode> parse_fusion_mode(std::string_view name) noexcept;

struct ModelDims {
  Eigen::Index content = 0;  // d
  Eigen::Index context = 0;  // k
  Eigen::Index hidden = 0;   // h, GRN hidden width
  Eigen::Index mlp_hidden = 64;

  bool operator==(const ModelDims&) const = default;
};

/// GRN(a, c) = LayerNorm(a + GLU(eta1))
///   eta2 = ELU(W2 a + W3 c + b2)
///   eta1 = W1 eta2 + b1
///   GLU(x) = sigmoid(W4 x + b4) * (W5 x + b5)
struct GrnParams {
  Eigen::MatrixXd w1;  // d x h
  Eigen::VectorXd b1;  // d
  Eigen::MatrixXd w2;  // h x d
  Eigen::MatrixXd w3;  // h x k
  Eigen::VectorXd b2;  // h
  Eigen::MatrixXd w4;  // d x d
  Eigen::VectorXd b4;  // d
  Eigen::MatrixXd w5;  // d x d
  Eigen::VectorXd b5;  // d
  Eigen::VectorXd ln_gain;  // d
  Eigen::VectorXd ln_bias;  // d
};

/// ReLU hidden layer then a 2-way softmax; row 0 is pro, row 1 is con.
struct MlpParams {
  Eigen::MatrixXd w_hidden;  // m x input
  Eigen::VectorXd b_hidden;  // m
  Eigen::MatrixXd w_out;     // 2 x m
  Eigen::VectorXd b_out;     // 2
};

struct FusionParams {
  GrnParams grn;  // empty unless the mode is kGrn
  MlpParams mlp;
};

/// Mutable view of one parameter tensor (column-major storage).
struct TensorRef {
  std::string_view name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Map<Eigen::MatrixXd> map() const { return {data, rows, cols}; }
  Eigen::Index size() const { return rows * cols; }
};

struct ConstTensorRef {
  std::string_view name;
  const double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Map<const Eigen::MatrixXd> map() const { return {data, rows, cols}; }
  Eigen::Index size() const { return rows * cols; }
};

/// Parameter tensors used by `mode`, in a fixed order.
std::vector<TensorRef> tensors(FusionParams& params, FusionMode mode);
std::vector<ConstTensorRef> tensors(const FusionParams& params, FusionMode mode);

/// Parameters shaped for (mode, dims), all zero.
FusionParams zero_params(FusionMode mode, const ModelDims& dims);

class FusionModel {
 public:
  /// Throws ShapeError if `params` does not match (mode, dims).
  FusionModel(FusionMode mode, ModelDims dims, FusionParams params);

  /// Glorot-uniform weights, zero biases, unit LayerNorm gain.
  static FusionModel initialize(FusionMode mode, ModelDims dims, std::uint64_t seed);

  FusionMode mode() const noexcept { return mode_; }
  const ModelDims& dims() const noexcept { return dims_; }
  const FusionParams& params() const noexcept { return params_; }
  FusionParams& mutable_params() noexcept { return params_; }
  Eigen::Index mlp_input_dim() const noexcept;

 private:
  FusionMode mode_;
  ModelDims dims_;
  FusionParams params_;
};

inline constexpr double kLayerNormEps = 1e-5;

/// Column-wise LayerNorm with population variance.
Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& gain,
                           const Eigen::VectorXd& bias, double eps = kLayerNormEps);

struct GrnCache {
  Eigen::MatrixXd content, context, z2, eta2, eta1, gate, linear, normalized;
  Eigen::RowVectorXd inv_std;
};

/// Each column of `content` (d x B) and `context` (k x B) is one example.
Eigen::MatrixXd grn_forward(const GrnParams& p, const Eigen::MatrixXd& content,
                            const Eigen::MatrixXd& context, GrnCache* cache = nullptr);

/// [a; c]
Eigen::VectorXd fuse_concat(const Eigen::VectorXd& content, const Eigen::VectorXd& context);

/// 2 x B probabilities; row 0 pro, row 1 con.
Eigen::MatrixXd model_forward(const FusionModel& model, const Eigen::MatrixXd& content,
                              const Eigen::MatrixXd& context);

/// argmax with ties to pro.
Stance predicted_stance(double pro_probability, double con_probability) noexcept;

struct Batch {
  Eigen::MatrixXd content;  // d x B
  Eigen::MatrixXd context;  // k x B
  std::vector<Stance> labels;
};

/// Mean cross-entropy of the batch.
double batch_loss(const FusionModel& model, const Batch& batch);

struct Gradients {
  FusionParams params;
  Eigen::MatrixXd content;
  Eigen::MatrixXd context;
  double loss = 0.0;
};

/// Gradients of the mean cross-entropy with respect to every parameter and
/// both inputs.
Gradients backward(const FusionModel& model, const Batch& batch);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(const FusionModel& model, AdamWConfig cfg);
  void step(FusionModel& model, const FusionParams& grads, double lr);
  long steps() const noexcept { return t_; }

 private:
  AdamWConfig cfg_;
  FusionParams m_, v_;
  long t_ = 0;
};

/// Halves the learning rate after `patience` consecutive observations without
/// a strict improvement of the best validation loss.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, int patience, double factor, double min_lr);

  double lr() const noexcept { return lr_; }
  bool exhausted() const noexcept { return lr_ < min_lr_; }
  double best() const noexcept { return best_; }
  /// Returns true when `validation_loss` is a new best.
  bool observe(double validation_loss);

 private:
  double lr_;
  int patience_;
  double factor_;
  double min_lr_;
  double best_;
  int bad_epochs_ = 0;
};

struct TrainConfig {
  int max_epochs = 10;
  int batch_size = 16;
  double learning_rate = 3e-5;
  int patience = 3;
  double lr_factor = 0.5;
  double min_lr = 1e-8;
  double weight_decay = 0.01;
  std::uint64_t seed = 42;
  FusionMode fusion = FusionMode::kGrn;
  Eigen::Index hidden = 0;  // 0 -> content dim
  Eigen::Index mlp_hidden = 64;

  void validate() const;
};

/// Column-per-example features with gold labels.
struct Dataset {
  Eigen::MatrixXd content;  // d x N
  Eigen::MatrixXd context;  // k x N
  std::vector<Stance> labels;
  std::vector<std::string> authors;  // optional, one per column

  Eigen::Index size() const noexcept { return content.cols(); }
  Batch gather(std::span<const Eigen::Index> columns) const;
  Batch all() const;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  bool improved = false;

  bool operator==(const EpochLog&) const = default;
};

struct TrainResult {
  FusionModel model;            // best validation-loss checkpoint
  std::vector<EpochLog> log;
  double best_validation_loss = 0.0;
  int best_epoch = 0;           // 0 = the initial parameters
};

/// AdamW training with the plateau schedule; stops at max_epochs or once the
/// learning rate drops below min_lr. Validation loss of the initial parameters
/// is the first schedule observation. An empty validation set falls back to
/// the training set. Throws TrainingError on a non-finite loss.
TrainResult train(const Dataset& train_set, const Dataset& validation_set, const TrainConfig& cfg);

struct Checkpoint {
  FusionModel model;
  std::uint64_t seed = 0;
};

/// `{"format":"taste-ckpt-v1","dims":{...},"fusion":...,"params":{name: row-major array},"seed":int}`
std::string checkpoint_to_json(const FusionModel& model, std::uint64_t seed);
Checkpoint checkpoint_from_json(std::string_view json);
void save_checkpoint(const std::filesystem::path& path, const FusionModel& model, std::uint64_t seed);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace taste
