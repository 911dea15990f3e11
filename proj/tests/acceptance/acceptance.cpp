// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "taste/error.hpp"
#include "taste/eval.hpp"
#include "taste/fusion.hpp"
#include "taste/sdp.hpp"
#include "taste/stem.hpp"
#include "taste/synthetic.hpp"

namespace {

using namespace taste;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* spec, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, spec, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

InteractionGraph instance(int i) {
  return oracle::random_weighted_graph(4 + i % 13, 0.5, 7000 + static_cast<std::uint64_t>(i));
}

Outcome sdp_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  SdpConfig cfg;
  cfg.tolerance = 1e-12;
  cfg.max_sweeps = 5000;
  int bound_ok = 0, ratio_ok = 0;
  for (int i = 0; i < 50; ++i) {
    const auto g = instance(i);
    const double opt = oracle::brute_force_maxcut(g);
    const auto emb = solve_maxcut_sdp(g, cfg);
    bound_ok += emb.objective >= opt * (1.0 - 1e-9);
    ratio_ok += round_hyperplane(g, emb, 100, static_cast<std::uint64_t>(i)).cut >= 0.878 * opt;
  }
  const double secs = seconds_since(t0);
  return {bound_ok == 50 && ratio_ok == 50 && secs < 60.0,
          fmt("bound %g/50, rounding %g/50, %.2f s", bound_ok, ratio_ok, secs)};
}

Outcome monotone_ascent() {
  long updates = 0, violations = 0;
  for (int i = 0; i < 50; ++i) {
    const auto g = instance(i);
    double last = -1.0;
    solve_maxcut_sdp(g, {}, [&](std::size_t, const RowMatrix& v) {
      const double now = sdp_objective(g, v);
      if (last >= 0.0 && now < last - 1e-12) ++violations;
      last = now;
      ++updates;
    });
  }
  return {violations == 0, fmt("%g violations in %g updates", static_cast<double>(violations),
                               static_cast<double>(updates))};
}

Outcome triangle_geometry() {
  const InteractionGraph g({"a", "b", "c"}, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
  StructuralEmbedding emb;
  emb.authors = g.nodes();
  emb.rank = 2;
  emb.vectors.resize(3, 2);
  for (int i = 0; i < 3; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / 3.0;
    emb.vectors.row(i) << std::cos(angle), std::sin(angle);
  }
  constexpr int kTrials = 100000;
  double cut = 0.0;
  for (int t = 0; t < kTrials; ++t) cut += round_hyperplane(g, emb, 1, static_cast<std::uint64_t>(t)).cut;
  const double freq = cut / (3.0 * kTrials);
  return {std::abs(freq - 2.0 / 3.0) <= 0.01, fmt("edge-cut frequency %.5f", freq)};
}

Outcome gradient_fidelity() {
  double worst = 0.0;
  std::string where;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& e : oracle::gradient_errors(oracle::random_fixture(FusionMode::kGrn, seed))) {
      if (e.relative_error > worst) {
        worst = e.relative_error;
        where = e.name;
      }
    }
  }
  return {worst < 1e-4, fmt("max relative error %.3g", worst) + " (" + where + ")"};
}

Outcome grn_identities() {
  double gate = 0.0, mean = 0.0, var = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto f = oracle::random_fixture(FusionMode::kGrn, seed);
    GrnParams p = f.model.params().grn;
    p.w4.setZero();
    p.b4.setConstant(-1e3);
    const auto out = grn_forward(p, f.batch.content, f.batch.context);
    gate = std::max(gate, (out - layer_norm(f.batch.content, p.ln_gain, p.ln_bias)).cwiseAbs().maxCoeff());

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(3.0, 10.0);
    Eigen::MatrixXd x(32, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
    const auto y = layer_norm(x, Eigen::VectorXd::Ones(32), Eigen::VectorXd::Zero(32));
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const double m = y.col(j).mean();
      mean = std::max(mean, std::abs(m));
      var = std::max(var, std::abs((y.col(j).array() - m).square().mean() - 1.0));
    }
  }
  return {gate <= 1e-6 && mean <= 1e-6 && var <= 1e-6,
          fmt("gate gap %.3g, |mean| %.3g, |var-1| %.3g", gate, mean, var)};
}

double post_accuracy(const SyntheticCorpus& c, ModelKind model) {
  ExperimentConfig cfg;
  cfg.model = model;
  cfg.train.learning_rate = 1e-3;
  const auto report = run_experiment(c.conversations, &c.text, cfg);
  return report.topics.begin()->second.mean_post_accuracy;
}

Outcome synthetic_benchmark() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto structure = generate_synthetic_corpus(structure_informative_spec(1));
  const auto text = generate_synthetic_corpus(text_informative_spec(1));
  const auto both = generate_synthetic_corpus(both_informative_spec(1));

  const double s_sdp = post_accuracy(structure, ModelKind::kSdpOnly);
  const double s_grn = post_accuracy(structure, ModelKind::kTasteGrn);
  const double t_txt = post_accuracy(text, ModelKind::kTextOnly);
  const double t_grn = post_accuracy(text, ModelKind::kTasteGrn);
  const double b_grn = post_accuracy(both, ModelKind::kTasteGrn);
  const double b_cat = post_accuracy(both, ModelKind::kTasteConcat);
  const double secs = seconds_since(t0);

  const bool pass = s_sdp >= 0.85 && s_grn >= s_sdp && t_txt >= 0.85 && t_grn >= t_txt - 0.02 && b_grn >= 0.90 &&
                    b_grn >= b_cat && secs < 300.0;
  return {pass, fmt("structure: sdp-only %.4f grn %.4f; ", s_sdp, s_grn) +
                    fmt("text: text-only %.4f grn %.4f; ", t_txt, t_grn) +
                    fmt("both: grn %.4f concat %.4f; %.1f s", b_grn, b_cat, secs)};
}

Outcome leakage_guard() {
  const auto c = generate_synthetic_corpus(both_informative_spec(2));
  int runs = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const FoldPlan plan = make_folds(c.conversations, 5, seed);
    plan.validate();
    for (int fold = 0; fold < plan.folds; ++fold) {
      std::vector<std::string> train;
      for (int f = 0; f < plan.folds; ++f)
        if (f != fold) train.insert(train.end(), plan.authors[f].begin(), plan.authors[f].end());
      assert_no_leakage(plan, fold, train);
      ++runs;
    }
  }
  ExperimentConfig cfg;
  cfg.model = ModelKind::kSdpOnly;
  run_experiment(c.conversations, &c.text, cfg);

  const FoldPlan plan = make_folds(c.conversations, 5, 1);
  std::vector<std::string> corrupt(plan.authors[1].begin(), plan.authors[1].end());
  corrupt.push_back(plan.authors[0].front());
  bool caught = false;
  try {
    assert_no_leakage(plan, 0, corrupt);
  } catch (const LeakageError&) {
    caught = true;
  }
  return {caught, fmt("%g clean fold checks passed, corrupted plan ", runs) + (caught ? "rejected" : "accepted")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "taste-acceptance-determinism";
  fs::remove_all(dir);
  std::ostringstream out, err;
  auto run = [&](std::vector<std::string> args) { return cli::run(args, out, err); };
  if (run({"synth", "--preset", "both", "--seed", "5", "--out", (dir / "data").string()}) != 0)
    return {false, "synth failed: " + err.str()};
  const std::vector<std::string> base{"eval",         (dir / "data" / "corpus.jsonl").string(),
                                      "--embeddings", (dir / "data" / "text.emb").string(),
                                      "--lr",         "1e-3",
                                      "--seed",       "7",
                                      "--out"};
  auto a = base, b = base;
  a.push_back((dir / "a").string());
  b.push_back((dir / "b").string());
  b.insert(b.end(), {"--jobs", "4"});
  if (run(a) != 0 || run(b) != 0) return {false, "eval failed: " + err.str()};
  const std::string ra = slurp(dir / "a" / "report.json"), rb = slurp(dir / "b" / "report.json");
  fs::remove_all(dir);
  return {!ra.empty() && ra == rb, fmt("%g-byte reports ", static_cast<double>(ra.size())) +
                                       (ra == rb ? "identical" : "differ")};
}

Outcome stem_recovery() {
  int ok = 0;
  double worst = 1.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto planted = generate_planted_graph(40, 0.4, 0.05, seed);
    const auto r = stem_classify(planted.graph, {}, 100);
    std::size_t same = 0;
    for (const auto& [node, side] : planted.factions) same += r.full_partition.at(node) == side;
    const double frac = static_cast<double>(same) / static_cast<double>(planted.factions.size());
    const double agree = std::max(frac, 1.0 - frac);
    worst = std::min(worst, agree);
    ok += agree >= 0.95;
  }
  return {ok == 10, fmt("%g/10 seeds, worst agreement %.3f", ok, worst)};
}

Outcome t_test_oracle() {
  const std::vector<double> a{1, 2, 3, 4, 5}, b(5, 0.0);
  const auto r = paired_t_test(a, b);
  return {std::abs(r.t - 4.2426) <= 1e-3 && std::abs(r.p - 0.0132) <= 5e-4, fmt("t %.5f p %.5f", r.t, r.p)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"sdp-correctness", sdp_correctness},   {"monotone-ascent", monotone_ascent},
      {"rounding-geometry", triangle_geometry}, {"gradient-fidelity", gradient_fidelity},
      {"grn-identities", grn_identities},     {"synthetic-benchmark", synthetic_benchmark},
      {"leakage-guard", leakage_guard},       {"determinism", determinism},
      {"stem-recovery", stem_recovery},       {"t-test-oracle", t_test_oracle},
  };
  int failures = 0;
  for (const auto& [name, check] : checks) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failures, checks.size());
  return failures == 0 ? 0 : 1;
}
