#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <random>

#include "taste/error.hpp"
#include "taste/eval.hpp"
#include "taste/synthetic.hpp"

namespace taste {
namespace {

SyntheticCorpus small_corpus(std::uint64_t seed = 1, double separation = 2.0) {
  return generate_synthetic_corpus({.topic = "small", .authors = 20, .conversations = 4, .posts_per_conversation = 30,
                                    .p_inter = 0.8, .p_intra = 0.2, .text_dim = 8, .separation = separation,
                                    .seed = seed});
}

ExperimentConfig fast_config(ModelKind model) {
  ExperimentConfig cfg;
  cfg.model = model;
  cfg.train.learning_rate = 1e-3;
  cfg.train.max_epochs = 4;
  cfg.rounds = 20;
  return cfg;
}

TEST(Folds, RoundRobinOverShuffledAuthors) {
  Conversation c;
  c.id = "c";
  c.topic = "t";
  for (int i = 0; i < 10; ++i) {
    Utterance u{"u" + std::to_string(i), "a" + std::to_string(i), {}, "", {}, {}};
    if (i > 0) u.parent = "u0";
    c.utterances.push_back(u);
  }
  const std::vector<Conversation> corpus{c};
  const FoldPlan plan = make_folds(corpus, 5, 3);
  std::set<std::string> all;
  for (const auto& fold : plan.authors) {
    EXPECT_EQ(fold.size(), 2u);
    all.insert(fold.begin(), fold.end());
  }
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(plan, make_folds(corpus, 5, 3));
  EXPECT_NE(plan, make_folds(corpus, 5, 4));
  EXPECT_EQ(plan.fold_of(plan.authors[3][1]), 3);
  EXPECT_EQ(plan.fold_of("stranger"), -1);
  EXPECT_THROW(make_folds(corpus, 11, 1), ValidationError);
}

TEST(Folds, LeakageGuard) {
  const auto synth = small_corpus();
  const FoldPlan plan = make_folds(synth.conversations, 5, 42);
  std::vector<std::string> train;
  for (int f = 1; f < 5; ++f) train.insert(train.end(), plan.authors[f].begin(), plan.authors[f].end());
  EXPECT_NO_THROW(assert_no_leakage(plan, 0, train));
  train.push_back(plan.authors[0].front());
  EXPECT_THROW(assert_no_leakage(plan, 0, train), LeakageError);

  FoldPlan corrupt = plan;
  corrupt.authors[1].push_back(plan.authors[0].front());
  EXPECT_THROW(corrupt.validate(), ValidationError);
}

UtterancePrediction pred(Stance s, double p) { return {"u", "a", p, s, {}}; }

TEST(Scoring, AuthorVote) {
  EXPECT_EQ(author_vote(std::vector{pred(Stance::kPro, 0.9), pred(Stance::kPro, 0.8), pred(Stance::kCon, 0.1)}),
            Stance::kPro);
  EXPECT_EQ(author_vote(std::vector{pred(Stance::kPro, 0.9), pred(Stance::kCon, 0.2)}), Stance::kPro);
  EXPECT_EQ(author_vote(std::vector{pred(Stance::kPro, 0.6), pred(Stance::kCon, 0.1)}), Stance::kCon);
  EXPECT_THROW(author_vote(std::vector<UtterancePrediction>{}), ValidationError);
}

TEST(Scoring, AuthorVoteMatchesCountingOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 7);
    std::vector<UtterancePrediction> ps;
    int pro = 0;
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
      const double p = u01(rng);
      const Stance s = rng() % 2 ? Stance::kPro : Stance::kCon;
      pro += s == Stance::kPro;
      mass += p;
      ps.push_back(pred(s, p));
    }
    const Stance expect = 2 * pro > n ? Stance::kPro : 2 * pro < n ? Stance::kCon : mass / n >= 0.5 ? Stance::kPro : Stance::kCon;
    ASSERT_EQ(author_vote(ps), expect);
  }
}

TEST(Scoring, Accuracy) {
  const std::vector<Stance> a{Stance::kPro, Stance::kCon, Stance::kPro};
  const std::vector<Stance> b{Stance::kCon, Stance::kPro, Stance::kCon};
  EXPECT_DOUBLE_EQ(accuracy(a, a), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(a, b), 0.0);
  EXPECT_THROW(accuracy(a, std::vector<Stance>{Stance::kPro}), ValidationError);
  EXPECT_THROW(accuracy(std::vector<Stance>{}, std::vector<Stance>{}), ValidationError);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Stance> x, y;
    int hits = 0;
    for (int i = 0; i < 50; ++i) {
      x.push_back(rng() % 2 ? Stance::kPro : Stance::kCon);
      y.push_back(rng() % 2 ? Stance::kPro : Stance::kCon);
      hits += x.back() == y.back();
    }
    EXPECT_DOUBLE_EQ(accuracy(x, y), hits / 50.0);
  }
}

TEST(Stats, IncompleteBetaMatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 10.0}) {
    for (double b : {0.5, 3.0, 7.0}) {
      for (double x : {0.01, 0.2, 0.5, 0.8, 0.99}) {
        EXPECT_NEAR(regularized_incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12);
      }
    }
  }
}

TEST(Stats, PairedTTestKnownValue) {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{0, 0, 0, 0, 0};
  const auto r = paired_t_test(a, b);
  EXPECT_NEAR(r.t, 3.0 / (std::sqrt(2.5) / std::sqrt(5.0)), 1e-12);
  EXPECT_NEAR(r.p, 0.0132, 5e-4);
  EXPECT_EQ(r.dof, 4);
  EXPECT_FALSE(r.degenerate);
}

TEST(Stats, PairedTTestMatchesBoostCdf) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss(0.1, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 9);
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(gauss(rng));
      b.push_back(gauss(rng));
    }
    const auto r = paired_t_test(a, b);
    const boost::math::students_t dist(n - 1);
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    ASSERT_NEAR(r.p, p, 1e-10);
    ASSERT_GE(r.p, 0.0);
    ASSERT_LE(r.p, 1.0);
  }
}

TEST(Stats, DegenerateTTests) {
  const std::vector<double> a{0.5, 0.6, 0.7};
  const auto same = paired_t_test(a, a);
  EXPECT_TRUE(same.degenerate);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p, 1.0);
  const std::vector<double> lo{0.5, 1.5, 2.5}, hi{1.0, 2.0, 3.0};
  const auto constant = paired_t_test(hi, lo);
  EXPECT_TRUE(constant.degenerate);
  EXPECT_EQ(constant.t, std::numeric_limits<double>::infinity());
  EXPECT_EQ(constant.p, 0.0);
  EXPECT_THROW(paired_t_test(std::vector<double>{1.0}, std::vector<double>{2.0}), ValidationError);
}

TEST(Stats, ErrorByActivity) {
  const auto clean = error_by_activity(std::vector<AuthorOutcome>{{"a", 1, true}, {"b", 25, true}});
  ASSERT_EQ(clean.size(), 4u);
  for (const auto& [bucket, s] : clean) EXPECT_EQ(s.error_rate, 0.0);
  const auto lone = error_by_activity(std::vector<AuthorOutcome>{{"a", 1, false}});
  EXPECT_EQ(lone.at("1-2").error_rate, 1.0);

  std::mt19937_64 rng(3);
  std::vector<AuthorOutcome> mix;
  std::map<std::string, std::pair<int, int>> manual;
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 1 + rng() % 40;
    const bool ok = rng() % 3 != 0;
    mix.push_back({"x", n, ok});
    const std::string bucket = n <= 2 ? "1-2" : n < 10 ? "3-9" : n < 20 ? "10-19" : "20+";
    manual[bucket].first++;
    manual[bucket].second += !ok;
  }
  for (const auto& [bucket, s] : error_by_activity(mix)) {
    EXPECT_EQ(s.authors, static_cast<std::size_t>(manual[bucket].first));
    EXPECT_DOUBLE_EQ(s.error_rate, static_cast<double>(manual[bucket].second) / manual[bucket].first);
  }
}

TEST(Experiment, ModelNames) {
  for (auto k : {ModelKind::kTasteGrn, ModelKind::kTasteConcat, ModelKind::kSdpOnly, ModelKind::kStem,
                 ModelKind::kTextOnly}) {
    EXPECT_EQ(parse_model_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_model_kind("bert"));
}

TEST(Experiment, AuthorAccuracyRecomputesFromPredictions) {
  const auto synth = small_corpus(4);
  const auto report = run_experiment(synth.conversations, &synth.text, fast_config(ModelKind::kTasteGrn));
  const auto& t = report.topics.at("small");
  ASSERT_EQ(t.folds.size(), 5u);
  for (const auto& f : t.folds) {
    std::map<std::string, std::vector<UtterancePrediction>> by_author;
    std::size_t post_hits = 0;
    for (const auto& p : f.predictions) {
      by_author[p.author].push_back(p);
      post_hits += p.predicted == *p.gold;
    }
    EXPECT_DOUBLE_EQ(f.post_accuracy, static_cast<double>(post_hits) / f.predictions.size());
    std::size_t author_hits = 0;
    for (const auto& [author, ps] : by_author) author_hits += author_vote(ps) == synth.factions.at(author);
    EXPECT_DOUBLE_EQ(f.author_accuracy, static_cast<double>(author_hits) / by_author.size());
    EXPECT_GE(f.post_accuracy, 0.0);
    EXPECT_LE(f.post_accuracy, 1.0);
  }
  std::size_t authors = 0;
  for (const auto& [bucket, s] : report.activity) authors += s.authors;
  std::set<std::string> posting;
  for (const auto& c : synth.conversations)
    for (const auto& u : c.utterances) posting.insert(u.author);
  EXPECT_EQ(authors, posting.size());
}

TEST(Experiment, FoldsArePartitionedByAuthor) {
  const auto synth = small_corpus(5);
  const auto report = run_experiment(synth.conversations, &synth.text, fast_config(ModelKind::kSdpOnly));
  std::map<std::string, int> seen;
  for (const auto& f : report.topics.at("small").folds) {
    std::set<std::string> fold_authors;
    for (const auto& p : f.predictions) fold_authors.insert(p.author);
    for (const auto& a : fold_authors) ++seen[a];
  }
  std::set<std::string> posting;
  for (const auto& c : synth.conversations)
    for (const auto& u : c.utterances) posting.insert(u.author);
  EXPECT_EQ(seen.size(), posting.size());
  for (const auto& [a, n] : seen) EXPECT_EQ(n, 1) << a;
}

TEST(Experiment, JobsDoNotChangeTheReport) {
  const auto synth = small_corpus(6);
  auto cfg = fast_config(ModelKind::kTasteConcat);
  const auto serial = report_to_json(run_experiment(synth.conversations, &synth.text, cfg));
  cfg.jobs = 3;
  EXPECT_EQ(report_to_json(run_experiment(synth.conversations, &synth.text, cfg)), serial);
}

TEST(Experiment, EveryModelRunsUnderBothScopes) {
  const auto synth = small_corpus(7);
  for (auto scope : {GraphScope::kPerTopic, GraphScope::kPerConversation}) {
    for (auto k : {ModelKind::kTasteGrn, ModelKind::kTasteConcat, ModelKind::kSdpOnly, ModelKind::kStem,
                   ModelKind::kTextOnly}) {
      auto cfg = fast_config(k);
      cfg.scope = scope;
      const auto r = run_experiment(synth.conversations, nullptr, cfg);
      EXPECT_EQ(r.topics.at("small").folds.size(), 5u) << to_string(k);
    }
  }
}

TEST(Experiment, ErrorsNameTopicAndFold) {
  auto synth = small_corpus(8);
  EmbeddingStore partial(synth.text.dim());
  bool skipped = false;
  for (const auto& [key, v] : synth.text.entries()) {
    if (!skipped) {
      skipped = true;
      continue;
    }
    partial.insert(key, v);
  }
  try {
    run_experiment(synth.conversations, &partial, fast_config(ModelKind::kTasteGrn));
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("topic 'small'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("fold "), std::string::npos) << msg;
  }
}

TEST(Report, JsonRoundTrips) {
  const auto synth = small_corpus(9);
  auto report = run_experiment(synth.conversations, &synth.text, fast_config(ModelKind::kTasteGrn));
  const auto baseline = run_experiment(synth.conversations, &synth.text, fast_config(ModelKind::kSdpOnly));
  report.t_tests = compare_reports(report, baseline);
  ASSERT_EQ(report.t_tests.size(), 2u);
  report.t_tests.push_back({"inf", std::numeric_limits<double>::infinity(), 0.0, 4, true});
  const std::string json = report_to_json(report);
  EXPECT_NE(json.find("\"taste-report-v1\""), std::string::npos);
  const EvalReport back = report_from_json(json);
  EXPECT_EQ(report_to_json(back), json);
  EXPECT_EQ(back.t_tests, report.t_tests);
  EXPECT_EQ(back.activity, report.activity);
  EXPECT_EQ(back.topics.at("small").folds[2].author_predictions, report.topics.at("small").folds[2].author_predictions);
  EXPECT_THROW(report_from_json("{\"format\":\"nope\"}"), ValidationError);
  EXPECT_THROW(report_from_json("[1,"), ParseError);
}

}  // namespace
}  // namespace taste
