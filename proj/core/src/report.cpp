#include <cmath>
#include <limits>

#include <json.hpp>

#include "taste/error.hpp"
#include "taste/eval.hpp"

namespace taste {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "taste-report-v1";

// JSON has no infinities; a constant non-zero difference gives t = +-inf.
json number_or_string(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double number_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ValidationError("expected a number, got '" + s + "'");
  }
  return j.get<double>();
}

json config_to_json(const ExperimentConfig& c) {
  const TrainConfig& t = c.train;
  return {{"model", to_string(c.model)},
          {"alpha", c.weights.alpha},
          {"beta", c.weights.beta},
          {"scope", to_string(c.scope)},
          {"sdp", {{"rank", c.sdp.rank}, {"max_sweeps", c.sdp.max_sweeps}, {"tolerance", c.sdp.tolerance}, {"seed", c.sdp.seed}}},
          {"rounds", c.rounds},
          {"train",
           {{"max_epochs", t.max_epochs},
            {"batch_size", t.batch_size},
            {"learning_rate", t.learning_rate},
            {"patience", t.patience},
            {"lr_factor", t.lr_factor},
            {"min_lr", t.min_lr},
            {"weight_decay", t.weight_decay},
            {"seed", t.seed},
            {"hidden", t.hidden},
            {"mlp_hidden", t.mlp_hidden}}},
          {"folds", c.folds},
          {"seed", c.seed},
          {"validation_fraction", c.validation_fraction},
          {"hashed_dim", c.hashed_dim}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  const auto model = parse_model_kind(j.at("model").get<std::string>());
  if (!model) throw ValidationError("unknown model '" + j.at("model").get<std::string>() + "'");
  c.model = *model;
  c.weights.alpha = j.at("alpha").get<double>();
  c.weights.beta = j.at("beta").get<double>();
  const auto scope = parse_graph_scope(j.at("scope").get<std::string>());
  if (!scope) throw ValidationError("unknown scope '" + j.at("scope").get<std::string>() + "'");
  c.scope = *scope;
  const json& s = j.at("sdp");
  c.sdp.rank = s.at("rank").get<int>();
  c.sdp.max_sweeps = s.at("max_sweeps").get<int>();
  c.sdp.tolerance = s.at("tolerance").get<double>();
  c.sdp.seed = s.at("seed").get<std::uint64_t>();
  c.rounds = j.at("rounds").get<int>();
  const json& t = j.at("train");
  c.train.max_epochs = t.at("max_epochs").get<int>();
  c.train.batch_size = t.at("batch_size").get<int>();
  c.train.learning_rate = t.at("learning_rate").get<double>();
  c.train.patience = t.at("patience").get<int>();
  c.train.lr_factor = t.at("lr_factor").get<double>();
  c.train.min_lr = t.at("min_lr").get<double>();
  c.train.weight_decay = t.at("weight_decay").get<double>();
  c.train.seed = t.at("seed").get<std::uint64_t>();
  c.train.hidden = t.at("hidden").get<Eigen::Index>();
  c.train.mlp_hidden = t.at("mlp_hidden").get<Eigen::Index>();
  c.folds = j.at("folds").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.hashed_dim = j.at("hashed_dim").get<std::size_t>();
  return c;
}

Stance stance_from(const json& j) {
  const auto s = parse_stance(j.get<std::string>());
  if (!s) throw ValidationError("bad stance '" + j.get<std::string>() + "'");
  return *s;
}

json fold_to_json(const FoldResult& f) {
  json preds = json::array();
  for (const auto& p : f.predictions) {
    json jp = {{"utterance", p.utterance},
               {"author", p.author},
               {"pro_prob", p.pro_probability},
               {"predicted", stance_symbol(p.predicted)}};
    if (p.gold) jp["gold"] = stance_symbol(*p.gold);
    preds.push_back(std::move(jp));
  }
  json authors = json::array();
  for (const auto& a : f.authors) {
    authors.push_back({{"author", a.author},
                       {"utterances", a.utterances},
                       {"correct", a.correct},
                       {"predicted", stance_symbol(f.author_predictions.at(a.author))}});
  }
  return {{"post_acc", f.post_accuracy}, {"author_acc", f.author_accuracy}, {"predictions", std::move(preds)},
          {"authors", std::move(authors)}};
}

FoldResult fold_from_json(const json& j) {
  FoldResult f;
  f.post_accuracy = j.at("post_acc").get<double>();
  f.author_accuracy = j.at("author_acc").get<double>();
  for (const auto& jp : j.at("predictions")) {
    UtterancePrediction p;
    p.utterance = jp.at("utterance").get<std::string>();
    p.author = jp.at("author").get<std::string>();
    p.pro_probability = jp.at("pro_prob").get<double>();
    p.predicted = stance_from(jp.at("predicted"));
    if (jp.contains("gold")) p.gold = stance_from(jp.at("gold"));
    f.predictions.push_back(std::move(p));
  }
  for (const auto& ja : j.at("authors")) {
    AuthorOutcome a;
    a.author = ja.at("author").get<std::string>();
    a.utterances = ja.at("utterances").get<std::size_t>();
    a.correct = ja.at("correct").get<bool>();
    f.author_predictions.emplace(a.author, stance_from(ja.at("predicted")));
    f.authors.push_back(std::move(a));
  }
  return f;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json doc;
  doc["format"] = kFormat;
  doc["config"] = config_to_json(report.config);
  json topics = json::object();
  for (const auto& [name, t] : report.topics) {
    json folds = json::array();
    for (const auto& f : t.folds) folds.push_back(fold_to_json(f));
    topics[name] = {{"folds", std::move(folds)},
                    {"mean_post_acc", t.mean_post_accuracy},
                    {"mean_author_acc", t.mean_author_accuracy},
                    {"sd_post_acc", t.sd_post_accuracy},
                    {"sd_author_acc", t.sd_author_accuracy}};
  }
  doc["topics"] = std::move(topics);
  json tests = json::array();
  for (const auto& t : report.t_tests) {
    tests.push_back({{"label", t.label},
                     {"t", number_or_string(t.t)},
                     {"p", t.p},
                     {"dof", t.dof},
                     {"degenerate", t.degenerate}});
  }
  doc["t_tests"] = std::move(tests);
  json activity = json::object();
  for (const auto& [bucket, b] : report.activity) {
    activity[bucket] = {{"authors", b.authors}, {"errors", b.errors}, {"error_rate", b.error_rate}};
  }
  doc["activity_breakdown"] = std::move(activity);
  return doc.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("malformed report: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw ValidationError("unsupported report format '" + doc.at("format").get<std::string>() + "'");
    }
    EvalReport r;
    r.config = config_from_json(doc.at("config"));
    for (const auto& [name, jt] : doc.at("topics").items()) {
      TopicReport t;
      for (const auto& jf : jt.at("folds")) t.folds.push_back(fold_from_json(jf));
      t.mean_post_accuracy = jt.at("mean_post_acc").get<double>();
      t.mean_author_accuracy = jt.at("mean_author_acc").get<double>();
      t.sd_post_accuracy = jt.at("sd_post_acc").get<double>();
      t.sd_author_accuracy = jt.at("sd_author_acc").get<double>();
      r.topics.emplace(name, std::move(t));
    }
    for (const auto& jt : doc.at("t_tests")) {
      TTestResult t;
      t.label = jt.at("label").get<std::string>();
      t.t = number_from(jt.at("t"));
      t.p = jt.at("p").get<double>();
      t.dof = jt.at("dof").get<int>();
      t.degenerate = jt.at("degenerate").get<bool>();
      r.t_tests.push_back(std::move(t));
    }
    for (const auto& [bucket, jb] : doc.at("activity_breakdown").items()) {
      r.activity[bucket] = {jb.at("authors").get<std::size_t>(), jb.at("errors").get<std::size_t>(),
                            jb.at("error_rate").get<double>()};
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report is missing or mistypes a field: ") + e.what());
  }
}

}  // namespace taste
