#include "taste/eval.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <set>

#include "taste/error.hpp"
#include "taste/rng.hpp"
#include "taste/stem.hpp"

namespace taste {

int FoldPlan::fold_of(std::string_view author) const {
  for (std::size_t f = 0; f < authors.size(); ++f) {
    if (std::binary_search(authors[f].begin(), authors[f].end(), author, std::less<>{})) {
      return static_cast<int>(f);
    }
  }
  return -1;
}

void FoldPlan::validate() const {
  if (static_cast<int>(authors.size()) != folds) throw ValidationError("fold plan has the wrong number of folds");
  std::set<std::string, std::less<>> seen;
  for (std::size_t f = 0; f < authors.size(); ++f) {
    for (const auto& a : authors[f]) {
      if (!seen.insert(a).second) {
        throw ValidationError("author '" + a + "' is assigned to more than one fold");
      }
    }
  }
}

FoldPlan make_folds(std::span<const Conversation> corpus, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("need at least 2 folds");
  std::set<std::string> unique;
  for (const auto& conv : corpus) {
    for (const auto& u : conv.utterances) unique.insert(u.author);
  }
  if (unique.size() < static_cast<std::size_t>(k)) {
    throw ValidationError("fewer authors (" + std::to_string(unique.size()) + ") than folds (" +
                          std::to_string(k) + ")");
  }
  std::vector<std::string> order(unique.begin(), unique.end());
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  FoldPlan plan;
  plan.folds = k;
  plan.seed = seed;
  plan.authors.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < order.size(); ++i) plan.authors[i % static_cast<std::size_t>(k)].push_back(order[i]);
  for (auto& fold : plan.authors) std::sort(fold.begin(), fold.end());
  return plan;
}

void assert_no_leakage(const FoldPlan& plan, int fold, std::span<const std::string> training_authors) {
  if (fold < 0 || fold >= static_cast<int>(plan.authors.size())) throw ValidationError("fold index out of range");
  const auto& test = plan.authors[static_cast<std::size_t>(fold)];
  for (const auto& a : training_authors) {
    if (std::binary_search(test.begin(), test.end(), a)) {
      throw LeakageError("test author '" + a + "' of fold " + std::to_string(fold) + " is in the training set");
    }
  }
}

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::kTasteGrn: return "taste-grn";
    case ModelKind::kTasteConcat: return "taste-concat";
    case ModelKind::kSdpOnly: return "sdp-only";
    case ModelKind::kStem: return "stem";
    case ModelKind::kTextOnly: return "text-only";
  }
  return "taste-grn";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept {
  for (auto k : {ModelKind::kTasteGrn, ModelKind::kTasteConcat, ModelKind::kSdpOnly, ModelKind::kStem,
                 ModelKind::kTextOnly}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

bool is_neural(ModelKind k) {
  return k == ModelKind::kTasteGrn || k == ModelKind::kTasteConcat || k == ModelKind::kTextOnly;
}

FusionMode fusion_of(ModelKind k) {
  switch (k) {
    case ModelKind::kTasteConcat: return FusionMode::kConcat;
    case ModelKind::kTextOnly: return FusionMode::kTextOnly;
    default: return FusionMode::kGrn;
  }
}

struct Post {
  const Utterance* utterance;
  std::size_t conversation;  // index within the topic
  std::optional<Stance> gold;
};

// Everything a fold needs about one topic; shared read-only across folds.
struct TopicData {
  std::string name;
  std::vector<Conversation> conversations;
  std::vector<Post> posts;
  std::map<std::string, std::optional<Stance>> author_gold;
  std::map<std::string, std::size_t> author_posts;
  // Structural context per (conversation index, author). Per-topic scope uses
  // conversation index 0 for every author.
  std::map<std::pair<std::size_t, std::string>, Eigen::VectorXd> context;
  Eigen::Index context_dim = 0;
  std::vector<InteractionGraph> graphs;     // one per topic, or one per conversation
  std::vector<StructuralEmbedding> embeddings;
};

std::optional<Stance> majority(int pro, int con) {
  if (pro == 0 && con == 0) return std::nullopt;
  return pro >= con ? Stance::kPro : Stance::kCon;
}

TopicData prepare_topic(std::string name, std::vector<Conversation> convs, const ExperimentConfig& cfg) {
  TopicData t;
  t.name = std::move(name);
  t.conversations = std::move(convs);

  std::map<std::string, std::pair<int, int>> declared, tagged;
  for (std::size_t c = 0; c < t.conversations.size(); ++c) {
    const auto& conv = t.conversations[c];
    for (const auto& [author, s] : conv.author_labels) {
      auto& [p, n] = declared[author];
      (s == Stance::kPro ? p : n)++;
    }
    for (const auto& u : conv.utterances) {
      std::optional<Stance> gold = u.label;
      if (!gold) {
        auto it = conv.author_labels.find(u.author);
        if (it != conv.author_labels.end()) gold = it->second;
      }
      t.posts.push_back({&u, c, gold});
      ++t.author_posts[u.author];
      auto& [p, n] = tagged[u.author];
      if (u.label) (*u.label == Stance::kPro ? p : n)++;
    }
  }
  for (const auto& [author, count] : t.author_posts) {
    (void)count;
    auto d = declared.find(author);
    std::optional<Stance> gold;
    if (d != declared.end()) gold = majority(d->second.first, d->second.second);
    if (!gold) gold = majority(tagged[author].first, tagged[author].second);
    t.author_gold[author] = gold;
  }

  if (cfg.scope == GraphScope::kPerTopic) {
    t.graphs.push_back(build_interaction_graph(t.conversations, cfg.weights, GraphScope::kPerTopic));
  } else {
    for (const auto& conv : t.conversations) {
      t.graphs.push_back(build_interaction_graph(std::span(&conv, 1), cfg.weights, GraphScope::kPerConversation));
    }
  }
  for (const auto& g : t.graphs) {
    t.embeddings.push_back(solve_maxcut_sdp(g, cfg.sdp));
    t.context_dim = std::max<Eigen::Index>(t.context_dim, t.embeddings.back().vectors.cols());
  }
  for (std::size_t gi = 0; gi < t.embeddings.size(); ++gi) {
    const auto& emb = t.embeddings[gi];
    for (std::size_t i = 0; i < emb.authors.size(); ++i) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(t.context_dim);
      v.head(emb.vectors.cols()) = emb.vectors.row(static_cast<Eigen::Index>(i)).transpose();
      t.context.emplace(std::pair{gi, emb.authors[i]}, std::move(v));
    }
  }
  return t;
}

const Eigen::VectorXd& context_of(const TopicData& t, const Post& p) {
  const std::size_t key = t.graphs.size() == 1 ? 0 : p.conversation;
  return t.context.at({key, p.utterance->author});
}

Dataset build_dataset(const TopicData& t, const std::vector<const Post*>& posts, const EmbeddingStore& text) {
  Dataset d;
  const auto n = static_cast<Eigen::Index>(posts.size());
  d.content.resize(static_cast<Eigen::Index>(text.dim()), n);
  d.context.resize(t.context_dim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Post& p = *posts[static_cast<std::size_t>(i)];
    const auto* vec = text.find(p.utterance->id);
    if (!vec) throw ValidationError("no text vector for utterance '" + p.utterance->id + "'");
    d.content.col(i) = Eigen::Map<const Eigen::VectorXd>(vec->data(), static_cast<Eigen::Index>(vec->size()));
    d.context.col(i) = context_of(t, p);
    d.labels.push_back(*p.gold);
    d.authors.push_back(p.utterance->author);
  }
  return d;
}

// Aligned author labels from a structural baseline, one map per graph.
std::vector<std::map<std::string, Stance>> structural_labels(const TopicData& t, const ExperimentConfig& cfg,
                                                             const std::map<std::string, Stance>& train_gold) {
  std::vector<std::map<std::string, Stance>> out;
  for (const auto& g : t.graphs) {
    std::map<std::string, Stance> known;
    for (const auto& a : g.nodes()) {
      auto it = train_gold.find(a);
      if (it != train_gold.end()) known.insert(*it);
    }
    if (cfg.model == ModelKind::kStem) {
      out.push_back(stem_classify(g, cfg.sdp, cfg.rounds, known).aligned_labels);
      continue;
    }
    const Partition part = sdp_classify(g, cfg.sdp, cfg.rounds);
    if (known.empty()) {
      std::map<std::string, Stance> direct;
      for (const auto& [a, side] : part) direct[a] = side >= 0 ? Stance::kPro : Stance::kCon;
      out.push_back(std::move(direct));
    } else {
      out.push_back(align_partition(part, known).labels);
    }
  }
  return out;
}

// At least one author when the fraction is positive, never all of them.
std::set<std::string> pick_validation_authors(std::vector<std::string> authors, double fraction, std::uint64_t seed) {
  std::set<std::string> out;
  if (authors.size() < 2 || fraction <= 0.0) return out;
  Rng rng(seed);
  std::shuffle(authors.begin(), authors.end(), rng);
  const auto n = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(fraction * static_cast<double>(authors.size()))), 1, authors.size() - 1);
  out.insert(authors.begin(), authors.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

FoldResult run_fold(const TopicData& t, const FoldPlan& plan, int fold, const EmbeddingStore& text,
                    const ExperimentConfig& cfg) {
  const auto& test_authors = plan.authors[static_cast<std::size_t>(fold)];
  std::vector<std::string> training_authors;
  for (const auto& [author, n] : t.author_posts) {
    (void)n;
    if (!std::binary_search(test_authors.begin(), test_authors.end(), author)) training_authors.push_back(author);
  }
  assert_no_leakage(plan, fold, training_authors);

  const std::set<std::string> validation_authors =
      pick_validation_authors(training_authors, cfg.validation_fraction,
                              derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(fold)));

  std::vector<const Post*> train_posts, validation_posts, test_posts;
  for (const auto& p : t.posts) {
    const std::string& a = p.utterance->author;
    if (std::binary_search(test_authors.begin(), test_authors.end(), a)) {
      test_posts.push_back(&p);
    } else if (p.gold) {
      (validation_authors.count(a) ? validation_posts : train_posts).push_back(&p);
    }
  }
  for (const Post* p : train_posts) {
    if (std::binary_search(test_authors.begin(), test_authors.end(), p->utterance->author)) {
      throw LeakageError("utterance '" + p->utterance->id + "' of a test author reached the training set");
    }
  }

  // Per-utterance predictions for every test utterance; only gold ones are scored.
  std::vector<UtterancePrediction> predictions;
  if (is_neural(cfg.model)) {
    if (train_posts.empty()) throw TrainingError("no labeled training utterances");
    TrainConfig tc = cfg.train;
    tc.fusion = fusion_of(cfg.model);
    tc.seed = derive_seed(cfg.train.seed, static_cast<std::uint64_t>(fold));
    const Dataset train_set = build_dataset(t, train_posts, text);
    const Dataset validation_set = build_dataset(t, validation_posts, text);
    const TrainResult trained = train(train_set, validation_set, tc);

    Eigen::MatrixXd content(static_cast<Eigen::Index>(text.dim()), static_cast<Eigen::Index>(test_posts.size()));
    Eigen::MatrixXd context(t.context_dim, static_cast<Eigen::Index>(test_posts.size()));
    for (std::size_t i = 0; i < test_posts.size(); ++i) {
      const Post& p = *test_posts[i];
      const auto* vec = text.find(p.utterance->id);
      if (!vec) throw ValidationError("no text vector for utterance '" + p.utterance->id + "'");
      content.col(static_cast<Eigen::Index>(i)) =
          Eigen::Map<const Eigen::VectorXd>(vec->data(), static_cast<Eigen::Index>(vec->size()));
      context.col(static_cast<Eigen::Index>(i)) = context_of(t, p);
    }
    const Eigen::MatrixXd probs = test_posts.empty() ? Eigen::MatrixXd(2, 0) : model_forward(trained.model, content, context);
    for (std::size_t i = 0; i < test_posts.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const Post& p = *test_posts[i];
      predictions.push_back({p.utterance->id, p.utterance->author, probs(0, col),
                             predicted_stance(probs(0, col), probs(1, col)), p.gold});
    }
  } else {
    std::map<std::string, Stance> train_gold;
    for (const auto& a : training_authors) {
      if (const auto& g = t.author_gold.at(a)) train_gold.emplace(a, *g);
    }
    const auto labels = structural_labels(t, cfg, train_gold);
    for (const Post* p : test_posts) {
      const std::size_t key = t.graphs.size() == 1 ? 0 : p->conversation;
      const Stance s = labels[key].at(p->utterance->author);
      predictions.push_back({p->utterance->id, p->utterance->author, s == Stance::kPro ? 1.0 : 0.0, s, p->gold});
    }
  }

  FoldResult r;
  std::vector<Stance> predicted, gold;
  std::map<std::string, std::vector<UtterancePrediction>> by_author;
  for (auto& p : predictions) {
    by_author[p.author].push_back(p);
    if (p.gold) {
      predicted.push_back(p.predicted);
      gold.push_back(*p.gold);
      r.predictions.push_back(p);
    }
  }
  if (gold.empty()) throw ValidationError("test fold has no labeled utterances");
  r.post_accuracy = accuracy(predicted, gold);

  std::vector<Stance> author_predicted, author_gold;
  for (const auto& a : test_authors) {
    const auto it = by_author.find(a);
    const auto g = t.author_gold.find(a);
    if (it == by_author.end() || g == t.author_gold.end() || !g->second) continue;
    const Stance vote = author_vote(it->second);
    r.author_predictions.emplace(a, vote);
    r.authors.push_back({a, t.author_posts.at(a), vote == *g->second});
    author_predicted.push_back(vote);
    author_gold.push_back(*g->second);
  }
  if (author_gold.empty()) throw ValidationError("test fold has no labeled authors");
  r.author_accuracy = accuracy(author_predicted, author_gold);
  return r;
}

[[noreturn]] void rethrow_with_context(const std::string& where) {
  try {
    throw;
  } catch (const LeakageError& e) {
    throw LeakageError(where + e.what());
  } catch (const TrainingError& e) {
    throw TrainingError(where + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(where + e.what());
  } catch (const IoError& e) {
    throw IoError(where + e.what());
  } catch (const ParseError& e) {
    throw ParseError(0, where + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(where + e.what());
  } catch (const std::exception& e) {
    throw Error(where + e.what());
  }
}

double mean_of(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

void validate_config(const ExperimentConfig& cfg) {
  cfg.weights.validate();
  cfg.sdp.validate();
  cfg.train.validate();
  if (cfg.rounds < 1) throw ValidationError("rounds must be positive");
  if (cfg.jobs < 1) throw ValidationError("jobs must be positive");
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0)) {
    throw ValidationError("validation fraction must lie in [0, 1)");
  }
}

}  // namespace

EvalReport run_experiment(std::span<const Conversation> corpus, const EmbeddingStore* text,
                          const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (corpus.empty()) throw ValidationError("empty corpus");

  std::optional<EmbeddingStore> hashed;
  if (!text && is_neural(cfg.model)) hashed = hash_embed_corpus(corpus, cfg.hashed_dim);
  const EmbeddingStore empty_store(1);
  const EmbeddingStore& features = text ? *text : hashed ? *hashed : empty_store;

  EvalReport report;
  report.config = cfg;
  std::vector<AuthorOutcome> outcomes;

  for (auto& [name, convs] : group_by_topic(corpus)) {
    const std::string where = "topic '" + name + "'";
    std::optional<TopicData> topic;
    FoldPlan plan;
    try {
      topic.emplace(prepare_topic(name, std::move(convs), cfg));
      plan = make_folds(topic->conversations, cfg.folds, cfg.seed);
      plan.validate();
    } catch (...) {
      rethrow_with_context(where + ": ");
    }

    std::vector<FoldResult> folds(static_cast<std::size_t>(cfg.folds));
    auto run_one = [&](int f) {
      try {
        return run_fold(*topic, plan, f, features, cfg);
      } catch (...) {
        rethrow_with_context(where + ", fold " + std::to_string(f) + ": ");
      }
    };
    for (int start = 0; start < cfg.folds; start += cfg.jobs) {
      const int end = std::min(cfg.folds, start + cfg.jobs);
      if (cfg.jobs == 1) {
        folds[static_cast<std::size_t>(start)] = run_one(start);
        continue;
      }
      std::vector<std::future<FoldResult>> pending;
      for (int f = start; f < end; ++f) pending.push_back(std::async(std::launch::async, run_one, f));
      for (int f = start; f < end; ++f) folds[static_cast<std::size_t>(f)] = pending[static_cast<std::size_t>(f - start)].get();
    }

    TopicReport tr;
    std::vector<double> post, author;
    for (auto& f : folds) {
      post.push_back(f.post_accuracy);
      author.push_back(f.author_accuracy);
      outcomes.insert(outcomes.end(), f.authors.begin(), f.authors.end());
    }
    tr.folds = std::move(folds);
    tr.mean_post_accuracy = mean_of(post);
    tr.mean_author_accuracy = mean_of(author);
    tr.sd_post_accuracy = sd_of(post);
    tr.sd_author_accuracy = sd_of(author);
    report.topics.emplace(name, std::move(tr));
  }
  report.activity = error_by_activity(outcomes);
  return report;
}

std::vector<TTestResult> compare_reports(const EvalReport& report, const EvalReport& baseline) {
  std::vector<TTestResult> out;
  for (const auto& [topic, tr] : report.topics) {
    const auto it = baseline.topics.find(topic);
    if (it == baseline.topics.end()) continue;
    const auto& base = it->second;
    if (tr.folds.size() != base.folds.size()) {
      throw ValidationError("topic '" + topic + "': fold counts differ from the baseline");
    }
    std::vector<double> a_post, b_post, a_author, b_author;
    for (std::size_t i = 0; i < tr.folds.size(); ++i) {
      a_post.push_back(tr.folds[i].post_accuracy);
      b_post.push_back(base.folds[i].post_accuracy);
      a_author.push_back(tr.folds[i].author_accuracy);
      b_author.push_back(base.folds[i].author_accuracy);
    }
    TTestResult post = paired_t_test(a_post, b_post);
    post.label = topic + "/post";
    TTestResult author = paired_t_test(a_author, b_author);
    author.label = topic + "/author";
    out.push_back(post);
    out.push_back(author);
  }
  return out;
}

TrainResult train_on_topic(std::span<const Conversation> corpus, const EmbeddingStore* text,
                           const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (!is_neural(cfg.model)) throw ValidationError("model '" + std::string(to_string(cfg.model)) + "' is not trainable");
  auto topics = group_by_topic(corpus);
  if (topics.size() != 1) throw ValidationError("training needs exactly one topic, got " + std::to_string(topics.size()));
  auto& [name, convs] = *topics.begin();

  std::optional<EmbeddingStore> hashed;
  if (!text) hashed = hash_embed_corpus(corpus, cfg.hashed_dim);
  const EmbeddingStore& features = text ? *text : *hashed;

  const TopicData t = prepare_topic(name, std::move(convs), cfg);
  std::vector<std::string> authors;
  for (const auto& [author, n] : t.author_posts) {
    (void)n;
    authors.push_back(author);
  }
  const auto validation_authors = pick_validation_authors(authors, cfg.validation_fraction, derive_seed(cfg.seed, 999));
  std::vector<const Post*> train_posts, validation_posts;
  for (const auto& p : t.posts) {
    if (p.gold) (validation_authors.count(p.utterance->author) ? validation_posts : train_posts).push_back(&p);
  }
  if (train_posts.empty()) throw TrainingError("no labeled training utterances");
  TrainConfig tc = cfg.train;
  tc.fusion = fusion_of(cfg.model);
  return train(build_dataset(t, train_posts, features), build_dataset(t, validation_posts, features), tc);
}

}  // namespace taste
