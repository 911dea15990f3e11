#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "taste/fusion.hpp"

namespace taste::oracle {

/// A GRN+MLP model with every tensor (biases and LayerNorm affine included)
/// drawn from N(0, 0.5^2), plus a random batch of matching shape.
struct GradFixture {
  FusionModel model;
  Batch batch;
};

inline GradFixture random_fixture(FusionMode mode, std::uint64_t seed, Eigen::Index d = 6, Eigen::Index k = 4,
                                  Eigen::Index h = 5, Eigen::Index m = 7, Eigen::Index batch = 5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.5);
  const ModelDims dims{d, k, h, m};
  FusionParams p = zero_params(mode, dims);
  for (auto& t : tensors(p, mode)) {
    auto map = t.map();
    for (Eigen::Index i = 0; i < t.size(); ++i) map.data()[i] = gauss(rng);
  }
  Batch b;
  b.content.resize(d, batch);
  b.context.resize(k, batch);
  for (Eigen::Index i = 0; i < b.content.size(); ++i) b.content.data()[i] = 2.0 * gauss(rng);
  for (Eigen::Index i = 0; i < b.context.size(); ++i) b.context.data()[i] = 2.0 * gauss(rng);
  for (Eigen::Index j = 0; j < batch; ++j) b.labels.push_back(rng() % 2 ? Stance::kPro : Stance::kCon);
  return {FusionModel(mode, dims, std::move(p)), std::move(b)};
}

struct TensorError {
  std::string name;
  double relative_error;
};

/// Relative error ||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-12)
/// for every parameter tensor, numeric gradients by central differences.
inline std::vector<TensorError> gradient_errors(const GradFixture& f, double h = 1e-5) {
  const Gradients analytic = backward(f.model, f.batch);
  FusionModel probe = f.model;
  const auto grads = tensors(analytic.params, probe.mode());
  auto params = tensors(probe.mutable_params(), probe.mode());
  std::vector<TensorError> out;
  for (std::size_t t = 0; t < params.size(); ++t) {
    double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
    for (Eigen::Index i = 0; i < params[t].size(); ++i) {
      double& x = params[t].data[i];
      const double saved = x;
      x = saved + h;
      const double up = batch_loss(probe, f.batch);
      x = saved - h;
      const double down = batch_loss(probe, f.batch);
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grads[t].data[i];
      diff += (a - numeric) * (a - numeric);
      norm_a += a * a;
      norm_n += numeric * numeric;
    }
    out.push_back({std::string(params[t].name),
                   std::sqrt(diff) / std::max(std::sqrt(norm_a) + std::sqrt(norm_n), 1e-12)});
  }
  return out;
}

}  // namespace taste::oracle
