#include <benchmark/benchmark.h>

#include <random>

#include "taste/fusion.hpp"

namespace {

using namespace taste;

struct Fixture {
  FusionModel model;
  Batch batch;
};

Fixture make_fixture(FusionMode mode, Eigen::Index batch) {
  const ModelDims dims{768, 64, 768, 64};
  FusionModel model = FusionModel::initialize(mode, dims, 1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss;
  Batch b;
  b.content.resize(dims.content, batch);
  b.context.resize(dims.context, batch);
  for (Eigen::Index i = 0; i < b.content.size(); ++i) b.content.data()[i] = gauss(rng);
  for (Eigen::Index i = 0; i < b.context.size(); ++i) b.context.data()[i] = gauss(rng);
  for (Eigen::Index j = 0; j < batch; ++j) b.labels.push_back(j % 2 ? Stance::kPro : Stance::kCon);
  return {std::move(model), std::move(b)};
}

void BM_Forward(benchmark::State& state) {
  const auto f = make_fixture(static_cast<FusionMode>(state.range(0)), 16);
  for (auto _ : state) benchmark::DoNotOptimize(model_forward(f.model, f.batch.content, f.batch.context));
  state.SetLabel(std::string(to_string(f.model.mode())));
}
BENCHMARK(BM_Forward)->Arg(static_cast<int>(FusionMode::kGrn))->Arg(static_cast<int>(FusionMode::kConcat));

void BM_Backward(benchmark::State& state) {
  const auto f = make_fixture(static_cast<FusionMode>(state.range(0)), 16);
  for (auto _ : state) benchmark::DoNotOptimize(backward(f.model, f.batch));
  state.SetLabel(std::string(to_string(f.model.mode())));
}
BENCHMARK(BM_Backward)->Arg(static_cast<int>(FusionMode::kGrn))->Arg(static_cast<int>(FusionMode::kConcat));

}  // namespace
