#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "taste/corpus.hpp"
#include "taste/error.hpp"
#include "taste/eval.hpp"
#include "taste/fusion.hpp"
#include "taste/graph.hpp"
#include "taste/sdp.hpp"
#include "taste/stem.hpp"
#include "taste/synthetic.hpp"
#include "taste/textfeat.hpp"

namespace taste::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string corpus;
  std::string graph;
  std::string embeddings;
  std::string baseline;
  std::string topic;
  std::string conversation;
  std::string out = ".";
  double alpha = WeightParams{}.alpha;
  double beta = WeightParams{}.beta;
  std::string scope = "topic";
  int rank = SdpConfig{}.rank;
  int rounds = 100;
  std::string fusion = "grn";
  std::string model = "taste-grn";
  int folds = 5;
  std::uint64_t seed = 42;
  int jobs = 1;
  double lr = TrainConfig{}.learning_rate;
  int epochs = TrainConfig{}.max_epochs;
  bool lenient = false;
  bool broadcast = false;
  std::string preset = "both";
};

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path output_dir(const Options& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::vector<Conversation> load(const Options& o) {
  if (o.corpus.empty()) throw IoError("no corpus given");
  LoadOptions lo;
  lo.lenient = o.lenient;
  lo.broadcast_author_labels = o.broadcast;
  lo.warn = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return load_corpus(o.corpus, lo);
}

// Conversations of --topic (required when the corpus has several), narrowed to
// --conversation when given.
std::vector<Conversation> select(std::vector<Conversation> corpus, const Options& o) {
  auto topics = group_by_topic(corpus);
  if (topics.empty()) throw ValidationError("empty corpus");
  std::string topic = o.topic;
  if (topic.empty()) {
    if (topics.size() > 1) throw ValidationError("corpus has " + std::to_string(topics.size()) + " topics; pick one with --topic");
    topic = topics.begin()->first;
  }
  auto it = topics.find(topic);
  if (it == topics.end()) throw ValidationError("no topic '" + topic + "' in the corpus");
  std::vector<Conversation> out = std::move(it->second);
  if (!o.conversation.empty()) {
    std::erase_if(out, [&](const Conversation& c) { return c.id != o.conversation; });
    if (out.empty()) throw ValidationError("no conversation '" + o.conversation + "' in topic '" + topic + "'");
  }
  return out;
}

WeightParams weights(const Options& o) {
  WeightParams w{o.alpha, o.beta};
  w.validate();
  return w;
}

SdpConfig sdp_config(const Options& o) {
  SdpConfig c;
  c.rank = o.rank;
  c.seed = o.seed;
  c.validate();
  return c;
}

ExperimentConfig experiment_config(const Options& o) {
  ExperimentConfig c;
  c.model = *parse_model_kind(o.model);
  c.weights = weights(o);
  c.scope = *parse_graph_scope(o.scope);
  c.sdp = sdp_config(o);
  c.rounds = o.rounds;
  c.train.learning_rate = o.lr;
  c.train.max_epochs = o.epochs;
  c.train.seed = o.seed;
  c.folds = o.folds;
  c.seed = o.seed;
  c.jobs = o.jobs;
  return c;
}

std::optional<EmbeddingStore> text_features(const Options& o, std::ostream& err) {
  if (o.embeddings.empty()) {
    err << "warning: no --embeddings given; using hashed bag-of-words text features\n";
    return std::nullopt;
  }
  return load_embeddings(o.embeddings);
}

InteractionGraph graph_input(const Options& o) {
  if (!o.graph.empty()) return read_graph_tsv(o.graph);
  const auto convs = select(load(o), o);
  return build_interaction_graph(convs, weights(o), *parse_graph_scope(o.scope));
}

int cmd_ingest(const Options& o, bool write_cache, std::ostream& out) {
  const auto corpus = load(o);
  const CorpusStats stats = compute_stats(corpus);
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %8s %8s %14s %13s %12s\n", "topic", "posts", "authors", "conversations",
                "interactions", "mean_tokens");
  out << line;
  for (const auto& [topic, s] : stats.topics) {
    std::snprintf(line, sizeof line, "%-24s %8zu %8zu %14zu %13zu %12.2f\n", topic.c_str(), s.posts, s.authors,
                  s.conversations, s.interactions, s.mean_tokens);
    out << line;
  }
  if (write_cache) write_corpus(output_dir(o) / "corpus.jsonl", corpus);
  return kExitOk;
}

int cmd_graph(const Options& o, std::ostream& out) {
  const InteractionGraph g = graph_input(o);
  write_graph_tsv(output_dir(o) / "graph.tsv", g);
  out << "nodes " << g.node_count() << " edges " << g.edge_count() << " total_weight "
      << fmt("%.9g", g.total_weight()) << '\n';
  return kExitOk;
}

int cmd_sdp(const Options& o, std::ostream& out) {
  const InteractionGraph g = graph_input(o);
  const StructuralEmbedding emb = solve_maxcut_sdp(g, sdp_config(o));
  write_embeddings(output_dir(o) / "struct.emb", emb.to_store());
  out << "nodes " << g.node_count() << " rank " << emb.rank << " sweeps " << emb.sweeps << " objective "
      << fmt("%.9g", emb.objective) << '\n';
  return kExitOk;
}

int cmd_stem(const Options& o, std::ostream& out) {
  std::map<std::string, Stance> labels;
  InteractionGraph g;
  if (!o.graph.empty()) {
    g = read_graph_tsv(o.graph);
  } else {
    const auto convs = select(load(o), o);
    g = build_interaction_graph(convs, weights(o), *parse_graph_scope(o.scope));
    for (const auto& c : convs) labels.insert(c.author_labels.begin(), c.author_labels.end());
  }
  const StemResult r = stem_classify(g, sdp_config(o), o.rounds, labels);
  write_text(output_dir(o) / "stem.json", stem_result_to_json(r) + "\n");
  out << "nodes " << g.node_count() << " core " << r.core_partition.size()
      << (r.used_fallback ? " (empty 2-core, plain SDP)" : "") << " alignment "
      << (r.alignment == Alignment::kDirect ? "direct" : "flipped") << '\n';
  return kExitOk;
}

std::string epoch_log(const std::vector<EpochLog>& log) {
  std::string s = "epoch\tlr\ttrain_loss\tvalidation_loss\timproved\n";
  for (const auto& e : log) {
    s += std::to_string(e.epoch) + '\t' + fmt("%.9g", e.lr) + '\t' + fmt("%.9g", e.train_loss) + '\t' +
         fmt("%.9g", e.validation_loss) + '\t' + (e.improved ? "1" : "0") + '\n';
  }
  return s;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const auto convs = select(load(o), o);
  ExperimentConfig cfg = experiment_config(o);
  cfg.model = *parse_fusion_mode(o.fusion) == FusionMode::kConcat ? ModelKind::kTasteConcat
              : *parse_fusion_mode(o.fusion) == FusionMode::kTextOnly ? ModelKind::kTextOnly
                                                                      : ModelKind::kTasteGrn;
  const auto text = text_features(o, err);
  const TrainResult r = train_on_topic(convs, text ? &*text : nullptr, cfg);
  const fs::path dir = output_dir(o);
  save_checkpoint(dir / "model.ckpt.json", r.model, o.seed);
  write_text(dir / "log.txt", epoch_log(r.log));
  out << "epochs " << r.log.size() << " best_epoch " << r.best_epoch << " best_validation_loss "
      << fmt("%.6f", r.best_validation_loss) << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  const auto corpus = load(o);
  const ExperimentConfig cfg = experiment_config(o);
  std::optional<EmbeddingStore> text;
  if (o.model != "sdp-only" && o.model != "stem") text = text_features(o, err);
  EvalReport report = run_experiment(corpus, text ? &*text : nullptr, cfg);
  if (!o.baseline.empty()) report.t_tests = compare_reports(report, report_from_json(read_text(o.baseline)));

  std::string log = "model " + o.model + " folds " + std::to_string(o.folds) + " seed " + std::to_string(o.seed) + "\n";
  for (const auto& [topic, t] : report.topics) {
    log += topic + "\tpost " + fmt("%.4f", t.mean_post_accuracy) + " +- " + fmt("%.4f", t.sd_post_accuracy) +
           "\tauthor " + fmt("%.4f", t.mean_author_accuracy) + " +- " + fmt("%.4f", t.sd_author_accuracy) + "\n";
  }
  for (const auto& t : report.t_tests) {
    log += "t-test " + t.label + "\tt " + fmt("%.4f", t.t) + "\tp " + fmt("%.4g", t.p) +
           (t.degenerate ? "\tdegenerate" : "") + "\n";
  }
  for (const auto& [bucket, b] : report.activity) {
    log += "activity " + bucket + "\tauthors " + std::to_string(b.authors) + "\terror_rate " + fmt("%.4f", b.error_rate) + "\n";
  }
  const fs::path dir = output_dir(o);
  write_text(dir / "report.json", report_to_json(report));
  write_text(dir / "log.txt", log);
  out << log;
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  SyntheticSpec spec = o.preset == "structure" ? structure_informative_spec(o.seed)
                       : o.preset == "text"    ? text_informative_spec(o.seed)
                                               : both_informative_spec(o.seed);
  const SyntheticCorpus c = generate_synthetic_corpus(spec);
  const fs::path dir = output_dir(o);
  write_corpus(dir / "corpus.jsonl", c.conversations);
  write_embeddings(dir / "text.emb", c.text);
  out << "conversations " << c.conversations.size() << " authors " << c.factions.size() << " utterances "
      << c.text.size() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Stance detection from interaction structure and text", "taste"};
  app.require_subcommand(1);

  auto seed_flag = [&](CLI::App* c) { c->add_option("--seed", o.seed, "Master random seed")->capture_default_str(); };
  auto out_flag = [&](CLI::App* c) { c->add_option("--out", o.out, "Output directory")->capture_default_str(); };
  auto corpus_flags = [&](CLI::App* c, bool required) {
    auto* opt = c->add_option("corpus", o.corpus, "JSON Lines corpus");
    if (required) opt->required();
    c->add_flag("--lenient", o.lenient, "Warn on unknown fields instead of failing");
    c->add_flag("--broadcast-labels", o.broadcast, "Give unlabeled utterances their author's label");
  };
  auto graph_flags = [&](CLI::App* c) {
    c->add_option("--alpha", o.alpha, "Reply weight")->capture_default_str();
    c->add_option("--beta", o.beta, "Quote weight")->capture_default_str();
    c->add_option("--scope", o.scope, "Graph scope")->check(CLI::IsMember({"conversation", "topic"}))->capture_default_str();
    c->add_option("--topic", o.topic, "Topic to use (required when the corpus has several)");
    c->add_option("--conversation", o.conversation, "Restrict to one conversation id");
  };
  auto sdp_flags = [&](CLI::App* c) {
    c->add_option("--rank", o.rank, "Minimum factor rank")->check(CLI::PositiveNumber)->capture_default_str();
  };
  auto round_flags = [&](CLI::App* c) {
    c->add_option("--rounds", o.rounds, "Hyperplane rounding trials")->check(CLI::PositiveNumber)->capture_default_str();
  };
  auto train_flags = [&](CLI::App* c) {
    c->add_option("--embeddings", o.embeddings, "TASTE-EMB v1 text vectors (default: hashed features)");
    c->add_option("--lr", o.lr, "Initial learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_option("--epochs", o.epochs, "Maximum epochs")->check(CLI::PositiveNumber)->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and print per-topic statistics");
  corpus_flags(ingest, true);
  auto* cache = ingest->add_option("--out", o.out, "Write the validated corpus to DIR/corpus.jsonl");
  seed_flag(ingest);

  auto* graph = app.add_subcommand("graph", "Build the weighted interaction graph (graph.tsv)");
  corpus_flags(graph, true);
  graph_flags(graph);
  out_flag(graph);
  seed_flag(graph);

  auto* sdp = app.add_subcommand("sdp", "Solve the max-cut relaxation (struct.emb)");
  corpus_flags(sdp, false);
  sdp->add_option("--graph", o.graph, "Read graph.tsv instead of a corpus");
  graph_flags(sdp);
  sdp_flags(sdp);
  out_flag(sdp);
  seed_flag(sdp);

  auto* stem = app.add_subcommand("stem", "Core-periphery classification (stem.json)");
  corpus_flags(stem, false);
  stem->add_option("--graph", o.graph, "Read graph.tsv instead of a corpus");
  graph_flags(stem);
  sdp_flags(stem);
  round_flags(stem);
  out_flag(stem);
  seed_flag(stem);

  auto* trn = app.add_subcommand("train", "Train a fusion model on one topic (model.ckpt.json, log.txt)");
  corpus_flags(trn, true);
  graph_flags(trn);
  sdp_flags(trn);
  train_flags(trn);
  trn->add_option("--fusion", o.fusion, "Fusion of text and structure")
      ->check(CLI::IsMember({"grn", "concat", "text"}))
      ->capture_default_str();
  out_flag(trn);
  seed_flag(trn);

  auto* ev = app.add_subcommand("eval", "Author-disjoint cross-validation (report.json, log.txt)");
  corpus_flags(ev, true);
  graph_flags(ev);
  sdp_flags(ev);
  round_flags(ev);
  train_flags(ev);
  ev->add_option("--model", o.model, "Model to evaluate")
      ->check(CLI::IsMember({"taste-grn", "taste-concat", "sdp-only", "stem", "text-only"}))
      ->capture_default_str();
  ev->add_option("--folds", o.folds, "Cross-validation folds")->check(CLI::Range(2, 1000))->capture_default_str();
  ev->add_option("--jobs", o.jobs, "Folds evaluated concurrently")->check(CLI::PositiveNumber)->capture_default_str();
  ev->add_option("--baseline", o.baseline, "report.json of a baseline run for paired t-tests");
  out_flag(ev);
  seed_flag(ev);

  auto* synth = app.add_subcommand("synth", "Write a seeded two-faction corpus (corpus.jsonl, text.emb)");
  synth->add_option("--preset", o.preset, "Which modality carries the stance signal")
      ->check(CLI::IsMember({"structure", "text", "both"}))
      ->capture_default_str();
  out_flag(synth);
  seed_flag(synth);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if ((sdp->parsed() || stem->parsed()) && o.corpus.empty() && o.graph.empty()) {
    err << "taste: error: give a corpus or --graph\n";
    return kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string stage = sub->get_name();
  try {
    if (ingest->parsed()) return cmd_ingest(o, cache->count() > 0, out);
    if (graph->parsed()) return cmd_graph(o, out);
    if (sdp->parsed()) return cmd_sdp(o, out);
    if (stem->parsed()) return cmd_stem(o, out);
    if (trn->parsed()) return cmd_train(o, out, err);
    if (ev->parsed()) return cmd_eval(o, out, err);
    if (synth->parsed()) return cmd_synth(o, out);
  } catch (const IoError& e) {
    err << "taste " << stage << ": I/O error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "taste " << stage << ": error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "taste " << stage << ": I/O error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace taste::cli
