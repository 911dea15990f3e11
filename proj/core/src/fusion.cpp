#include "taste/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <utility>

#include "taste/error.hpp"
#include "taste/rng.hpp"

namespace taste {

std::string_view to_string(FusionMode mode) noexcept {
  switch (mode) {
    case FusionMode::kGrn: return "grn";
    case FusionMode::kConcat: return "concat";
    case FusionMode::kTextOnly: return "text";
  }
  return "grn";
}

std::optional<FusionMode> parse_fusion_mode(std::string_view name) noexcept {
  if (name == "grn") return FusionMode::kGrn;
  if (name == "concat") return FusionMode::kConcat;
  if (name == "text") return FusionMode::kTextOnly;
  return std::nullopt;
}

namespace {

template <class Params, class Ref>
std::vector<Ref> collect(Params& p, FusionMode mode) {
  std::vector<Ref> out;
  auto add = [&](std::string_view name, auto& t) {
    out.push_back(Ref{name, t.data(), t.rows(), t.cols()});
  };
  if (mode == FusionMode::kGrn) {
    add("grn.w1", p.grn.w1);
    add("grn.b1", p.grn.b1);
    add("grn.w2", p.grn.w2);
    add("grn.w3", p.grn.w3);
    add("grn.b2", p.grn.b2);
    add("grn.w4", p.grn.w4);
    add("grn.b4", p.grn.b4);
    add("grn.w5", p.grn.w5);
    add("grn.b5", p.grn.b5);
    add("grn.ln_gain", p.grn.ln_gain);
    add("grn.ln_bias", p.grn.ln_bias);
  }
  add("mlp.w_hidden", p.mlp.w_hidden);
  add("mlp.b_hidden", p.mlp.b_hidden);
  add("mlp.w_out", p.mlp.w_out);
  add("mlp.b_out", p.mlp.b_out);
  return out;
}

Eigen::Index mlp_input(FusionMode mode, const ModelDims& dims) {
  return mode == FusionMode::kConcat ? dims.content + dims.context : dims.content;
}

void require_shape(std::string_view what, Eigen::Index rows, Eigen::Index cols,
                   Eigen::Index want_rows, Eigen::Index want_cols) {
  if (rows != want_rows || cols != want_cols) {
    throw ShapeError(std::string(what) + " is " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", expected " + std::to_string(want_rows) + "x" +
                     std::to_string(want_cols));
  }
}

}  // namespace

std::vector<TensorRef> tensors(FusionParams& params, FusionMode mode) {
  return collect<FusionParams, TensorRef>(params, mode);
}

std::vector<ConstTensorRef> tensors(const FusionParams& params, FusionMode mode) {
  return collect<const FusionParams, ConstTensorRef>(params, mode);
}

FusionParams zero_params(FusionMode mode, const ModelDims& dims) {
  const Eigen::Index d = dims.content, k = dims.context, h = dims.hidden, m = dims.mlp_hidden;
  FusionParams p;
  if (mode == FusionMode::kGrn) {
    p.grn.w1 = Eigen::MatrixXd::Zero(d, h);
    p.grn.b1 = Eigen::VectorXd::Zero(d);
    p.grn.w2 = Eigen::MatrixXd::Zero(h, d);
    p.grn.w3 = Eigen::MatrixXd::Zero(h, k);
    p.grn.b2 = Eigen::VectorXd::Zero(h);
    p.grn.w4 = Eigen::MatrixXd::Zero(d, d);
    p.grn.b4 = Eigen::VectorXd::Zero(d);
    p.grn.w5 = Eigen::MatrixXd::Zero(d, d);
    p.grn.b5 = Eigen::VectorXd::Zero(d);
    p.grn.ln_gain = Eigen::VectorXd::Zero(d);
    p.grn.ln_bias = Eigen::VectorXd::Zero(d);
  }
  p.mlp.w_hidden = Eigen::MatrixXd::Zero(m, mlp_input(mode, dims));
  p.mlp.b_hidden = Eigen::VectorXd::Zero(m);
  p.mlp.w_out = Eigen::MatrixXd::Zero(2, m);
  p.mlp.b_out = Eigen::VectorXd::Zero(2);
  return p;
}

FusionModel::FusionModel(FusionMode mode, ModelDims dims, FusionParams params)
    : mode_(mode), dims_(dims), params_(std::move(params)) {
  if (dims_.content <= 0 || dims_.mlp_hidden <= 0) throw ShapeError("model dimensions must be positive");
  if (mode_ == FusionMode::kGrn && dims_.hidden <= 0) throw ShapeError("GRN hidden width must be positive");
  FusionParams expected = zero_params(mode_, dims_);
  const auto want = tensors(std::as_const(expected), mode_);
  const auto have = tensors(std::as_const(params_), mode_);
  for (std::size_t i = 0; i < want.size(); ++i) {
    require_shape(want[i].name, have[i].rows, have[i].cols, want[i].rows, want[i].cols);
    if (!have[i].map().allFinite()) throw ShapeError(std::string(have[i].name) + " has non-finite values");
  }
}

FusionModel FusionModel::initialize(FusionMode mode, ModelDims dims, std::uint64_t seed) {
  FusionParams p = zero_params(mode, dims);
  Rng rng(seed);
  for (auto& t : tensors(p, mode)) {
    const std::string_view name = t.name;
    if (name == "grn.ln_gain") {
      t.map().setOnes();
      continue;
    }
    if (t.cols == 1) continue;  // biases stay zero
    const double limit = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto m = t.map();
    for (Eigen::Index r = 0; r < t.rows; ++r) {
      for (Eigen::Index c = 0; c < t.cols; ++c) m(r, c) = dist(rng);
    }
  }
  return FusionModel(mode, dims, std::move(p));
}

Eigen::Index FusionModel::mlp_input_dim() const noexcept { return mlp_input(mode_, dims_); }

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& gain,
                           const Eigen::VectorXd& bias, double eps) {
  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const Eigen::VectorXd centered = x.col(j).array() - mean;
    const double var = centered.squaredNorm() / n;
    out.col(j) = gain.cwiseProduct(centered / std::sqrt(var + eps)) + bias;
  }
  return out;
}

namespace {

Eigen::MatrixXd elu(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
}

Eigen::MatrixXd elu_grad(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

void check_inputs(const FusionModel& model, const Eigen::MatrixXd& content,
                  const Eigen::MatrixXd& context) {
  const ModelDims& d = model.dims();
  if (content.rows() != d.content) {
    throw ShapeError("content vectors have " + std::to_string(content.rows()) +
                     " rows, model expects " + std::to_string(d.content));
  }
  if (model.mode() != FusionMode::kTextOnly) {
    if (context.rows() != d.context) {
      throw ShapeError("context vectors have " + std::to_string(context.rows()) +
                       " rows, model expects " + std::to_string(d.context));
    }
    if (context.cols() != content.cols()) throw ShapeError("content and context batch sizes differ");
  }
}

struct ForwardPass {
  GrnCache grn;
  Eigen::MatrixXd mlp_in, hidden_pre, hidden, logits, probs;
};

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    const Eigen::VectorXd e = (logits.col(j).array() - mx).exp();
    p.col(j) = e / e.sum();
  }
  return p;
}

void forward_pass(const FusionModel& model, const Eigen::MatrixXd& content,
                  const Eigen::MatrixXd& context, ForwardPass& fp) {
  check_inputs(model, content, context);
  const FusionParams& p = model.params();
  switch (model.mode()) {
    case FusionMode::kGrn:
      fp.mlp_in = grn_forward(p.grn, content, context, &fp.grn);
      break;
    case FusionMode::kConcat:
      fp.mlp_in.resize(content.rows() + context.rows(), content.cols());
      fp.mlp_in << content, context;
      break;
    case FusionMode::kTextOnly:
      fp.mlp_in = content;
      break;
  }
  fp.hidden_pre = (p.mlp.w_hidden * fp.mlp_in).colwise() + p.mlp.b_hidden;
  fp.hidden = fp.hidden_pre.cwiseMax(0.0);
  fp.logits = (p.mlp.w_out * fp.hidden).colwise() + p.mlp.b_out;
  fp.probs = softmax_columns(fp.logits);
}

double mean_cross_entropy(const Eigen::MatrixXd& logits, std::span<const Stance> labels) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    const double lse = mx + std::log((logits.col(j).array() - mx).exp().sum());
    const Eigen::Index row = labels[static_cast<std::size_t>(j)] == Stance::kPro ? 0 : 1;
    total += lse - logits(row, j);
  }
  return total / static_cast<double>(logits.cols());
}

}  // namespace

Eigen::MatrixXd grn_forward(const GrnParams& p, const Eigen::MatrixXd& content,
                            const Eigen::MatrixXd& context, GrnCache* cache) {
  if (content.rows() != p.w2.cols()) throw ShapeError("GRN content dimension mismatch");
  if (context.rows() != p.w3.cols()) throw ShapeError("GRN context dimension mismatch");
  if (content.cols() != context.cols()) throw ShapeError("GRN batch sizes differ");

  const Eigen::MatrixXd z2 = ((p.w2 * content + p.w3 * context).colwise() + p.b2);
  const Eigen::MatrixXd eta2 = elu(z2);
  const Eigen::MatrixXd eta1 = (p.w1 * eta2).colwise() + p.b1;
  const Eigen::MatrixXd gate = sigmoid((p.w4 * eta1).colwise() + p.b4);
  const Eigen::MatrixXd linear = (p.w5 * eta1).colwise() + p.b5;
  const Eigen::MatrixXd x = content + gate.cwiseProduct(linear);

  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd normalized(x.rows(), x.cols());
  Eigen::RowVectorXd inv_std(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const Eigen::VectorXd centered = x.col(j).array() - mean;
    const double var = centered.squaredNorm() / n;
    inv_std[j] = 1.0 / std::sqrt(var + kLayerNormEps);
    normalized.col(j) = centered * inv_std[j];
  }
  Eigen::MatrixXd out = (p.ln_gain.asDiagonal() * normalized).colwise() + p.ln_bias;

  if (cache) {
    cache->content = content;
    cache->context = context;
    cache->z2 = z2;
    cache->eta2 = eta2;
    cache->eta1 = eta1;
    cache->gate = gate;
    cache->linear = linear;
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

Eigen::VectorXd fuse_concat(const Eigen::VectorXd& content, const Eigen::VectorXd& context) {
  Eigen::VectorXd out(content.size() + context.size());
  out << content, context;
  return out;
}

Eigen::MatrixXd model_forward(const FusionModel& model, const Eigen::MatrixXd& content,
                              const Eigen::MatrixXd& context) {
  ForwardPass fp;
  forward_pass(model, content, context, fp);
  return fp.probs;
}

Stance predicted_stance(double pro_probability, double con_probability) noexcept {
  return pro_probability >= con_probability ? Stance::kPro : Stance::kCon;
}

double batch_loss(const FusionModel& model, const Batch& batch) {
  if (batch.labels.size() != static_cast<std::size_t>(batch.content.cols())) {
    throw ShapeError("label count does not match the batch size");
  }
  ForwardPass fp;
  forward_pass(model, batch.content, batch.context, fp);
  return mean_cross_entropy(fp.logits, batch.labels);
}

Gradients backward(const FusionModel& model, const Batch& batch) {
  const Eigen::Index bsz = batch.content.cols();
  if (bsz == 0) throw ShapeError("empty batch");
  if (batch.labels.size() != static_cast<std::size_t>(bsz)) {
    throw ShapeError("label count does not match the batch size");
  }
  ForwardPass fp;
  forward_pass(model, batch.content, batch.context, fp);

  const FusionParams& p = model.params();
  Gradients g;
  g.params = zero_params(model.mode(), model.dims());
  g.loss = mean_cross_entropy(fp.logits, batch.labels);

  // Softmax + cross-entropy.
  Eigen::MatrixXd d_logits = fp.probs;
  for (Eigen::Index j = 0; j < bsz; ++j) {
    d_logits(batch.labels[static_cast<std::size_t>(j)] == Stance::kPro ? 0 : 1, j) -= 1.0;
  }
  d_logits /= static_cast<double>(bsz);

  g.params.mlp.w_out = d_logits * fp.hidden.transpose();
  g.params.mlp.b_out = d_logits.rowwise().sum();
  const Eigen::MatrixXd d_hidden_pre =
      (p.mlp.w_out.transpose() * d_logits).cwiseProduct(
          fp.hidden_pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
  g.params.mlp.w_hidden = d_hidden_pre * fp.mlp_in.transpose();
  g.params.mlp.b_hidden = d_hidden_pre.rowwise().sum();
  const Eigen::MatrixXd d_in = p.mlp.w_hidden.transpose() * d_hidden_pre;

  const Eigen::Index d = model.dims().content;
  const Eigen::Index k = batch.context.rows();
  switch (model.mode()) {
    case FusionMode::kTextOnly:
      g.content = d_in;
      g.context = Eigen::MatrixXd::Zero(k, bsz);
      return g;
    case FusionMode::kConcat:
      g.content = d_in.topRows(d);
      g.context = d_in.bottomRows(k);
      return g;
    case FusionMode::kGrn:
      break;
  }

  const GrnCache& c = fp.grn;
  const GrnParams& w = p.grn;
  GrnParams& dw = g.params.grn;

  dw.ln_gain = d_in.cwiseProduct(c.normalized).rowwise().sum();
  dw.ln_bias = d_in.rowwise().sum();
  const Eigen::MatrixXd d_norm = w.ln_gain.asDiagonal() * d_in;

  Eigen::MatrixXd d_x(d, bsz);
  for (Eigen::Index j = 0; j < bsz; ++j) {
    const double mean_dn = d_norm.col(j).mean();
    const double mean_dn_xhat = d_norm.col(j).dot(c.normalized.col(j)) / static_cast<double>(d);
    d_x.col(j) = c.inv_std[j] *
                 (d_norm.col(j).array() - mean_dn - c.normalized.col(j).array() * mean_dn_xhat).matrix();
  }

  const Eigen::MatrixXd d_gate = d_x.cwiseProduct(c.linear);
  const Eigen::MatrixXd d_linear = d_x.cwiseProduct(c.gate);
  const Eigen::MatrixXd d_z4 =
      d_gate.cwiseProduct(c.gate.cwiseProduct((1.0 - c.gate.array()).matrix()));
  dw.w4 = d_z4 * c.eta1.transpose();
  dw.b4 = d_z4.rowwise().sum();
  dw.w5 = d_linear * c.eta1.transpose();
  dw.b5 = d_linear.rowwise().sum();

  const Eigen::MatrixXd d_eta1 = w.w4.transpose() * d_z4 + w.w5.transpose() * d_linear;
  dw.w1 = d_eta1 * c.eta2.transpose();
  dw.b1 = d_eta1.rowwise().sum();
  const Eigen::MatrixXd d_z2 = (w.w1.transpose() * d_eta1).cwiseProduct(elu_grad(c.z2));
  dw.w2 = d_z2 * c.content.transpose();
  dw.w3 = d_z2 * c.context.transpose();
  dw.b2 = d_z2.rowwise().sum();

  g.content = d_x + w.w2.transpose() * d_z2;
  g.context = w.w3.transpose() * d_z2;
  return g;
}

AdamW::AdamW(const FusionModel& model, AdamWConfig cfg)
    : cfg_(cfg), m_(zero_params(model.mode(), model.dims())), v_(m_) {}

void AdamW::step(FusionModel& model, const FusionParams& grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const FusionMode mode = model.mode();
  auto params = tensors(model.mutable_params(), mode);
  const auto g = tensors(grads, mode);
  auto m = tensors(m_, mode);
  auto v = tensors(v_, mode);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].map();
    const auto grad = g[i].map();
    auto mi = m[i].map();
    auto vi = v[i].map();
    mi = cfg_.beta1 * mi + (1.0 - cfg_.beta1) * grad;
    vi = cfg_.beta2 * vi + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const Eigen::ArrayXXd update =
        (mi.array() / bc1) / ((vi.array() / bc2).sqrt() + cfg_.eps) + cfg_.weight_decay * theta.array();
    theta.array() -= lr * update;
  }
}

PlateauScheduler::PlateauScheduler(double initial_lr, int patience, double factor, double min_lr)
    : lr_(initial_lr),
      patience_(patience),
      factor_(factor),
      min_lr_(min_lr),
      best_(std::numeric_limits<double>::infinity()) {}

bool PlateauScheduler::observe(double validation_loss) {
  if (validation_loss < best_) {
    best_ = validation_loss;
    bad_epochs_ = 0;
    return true;
  }
  if (++bad_epochs_ >= patience_) {
    lr_ *= factor_;
    bad_epochs_ = 0;
  }
  return false;
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ValidationError("max epochs must be positive");
  if (batch_size < 1) throw ValidationError("batch size must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (patience < 1) throw ValidationError("patience must be at least 1");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw ValidationError("LR factor must be in (0, 1)");
  if (!(min_lr > 0.0)) throw ValidationError("minimum LR must be positive");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight decay must be non-negative");
  if (hidden < 0 || mlp_hidden < 1) throw ValidationError("hidden sizes must be positive");
}

Batch Dataset::gather(std::span<const Eigen::Index> columns) const {
  Batch b;
  const auto n = static_cast<Eigen::Index>(columns.size());
  b.content.resize(content.rows(), n);
  b.context.resize(context.rows(), n);
  b.labels.reserve(columns.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = columns[static_cast<std::size_t>(j)];
    b.content.col(j) = content.col(src);
    b.context.col(j) = context.col(src);
    b.labels.push_back(labels[static_cast<std::size_t>(src)]);
  }
  return b;
}

Batch Dataset::all() const { return Batch{content, context, labels}; }

TrainResult train(const Dataset& train_set, const Dataset& validation_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() == 0) throw TrainingError("empty training set");
  if (train_set.labels.size() != static_cast<std::size_t>(train_set.size()) ||
      train_set.context.cols() != train_set.size()) {
    throw ShapeError("training set columns and labels disagree");
  }
  const Dataset& val = validation_set.size() > 0 ? validation_set : train_set;
  if (val.content.rows() != train_set.content.rows() || val.context.rows() != train_set.context.rows()) {
    throw ShapeError("validation features do not match training features");
  }

  ModelDims dims;
  dims.content = train_set.content.rows();
  dims.context = train_set.context.rows();
  dims.hidden = cfg.hidden > 0 ? cfg.hidden : dims.content;
  dims.mlp_hidden = cfg.mlp_hidden;

  FusionModel model = FusionModel::initialize(cfg.fusion, dims, derive_seed(cfg.seed, 0));
  AdamW opt(model, AdamWConfig{.weight_decay = cfg.weight_decay});
  PlateauScheduler schedule(cfg.learning_rate, cfg.patience, cfg.lr_factor, cfg.min_lr);

  const Batch val_batch = val.all();
  const double initial_val = batch_loss(model, val_batch);
  if (!std::isfinite(initial_val)) throw TrainingError("non-finite validation loss before training");
  schedule.observe(initial_val);

  TrainResult result{model, {}, initial_val, 0};
  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 1; epoch <= cfg.max_epochs && !schedule.exhausted(); ++epoch) {
    const double lr = schedule.lr();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const Batch batch = train_set.gather(std::span(order).subspan(start, end - start));
      const Gradients grads = backward(model, batch);
      if (!std::isfinite(grads.loss)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) +
                            ", examples " + std::to_string(start) + ".." + std::to_string(end));
      }
      loss_sum += grads.loss * static_cast<double>(end - start);
      opt.step(model, grads.params, lr);
    }
    const double val_loss = batch_loss(model, val_batch);
    if (!std::isfinite(val_loss)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    const bool improved = schedule.observe(val_loss);
    if (improved) {
      result.model = model;
      result.best_validation_loss = val_loss;
      result.best_epoch = epoch;
    }
    result.log.push_back({epoch, lr, loss_sum / static_cast<double>(order.size()), val_loss, improved});
  }
  return result;
}

}  // namespace taste
