#include "taste/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include <Eigen/Core>

#include "taste/error.hpp"
#include "taste/rng.hpp"

namespace taste {

namespace {

std::string padded(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03d", prefix, i);
  return buf;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.authors < 4) throw ValidationError("synthetic corpus needs at least 4 authors");
  if (spec.topics < 1 || spec.conversations < 1 || spec.posts_per_conversation < 1) {
    throw ValidationError("synthetic corpus sizes must be positive");
  }
  if (!(spec.p_inter >= 0.0 && spec.p_intra >= 0.0 && spec.p_inter + spec.p_intra > 0.0)) {
    throw ValidationError("reply propensities must be non-negative with a positive sum");
  }

  SyntheticCorpus out;
  out.text = EmbeddingStore(spec.text_dim, EmbeddingSource::kExternal);
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;

  Eigen::VectorXd direction(static_cast<Eigen::Index>(spec.text_dim));
  for (auto& x : direction) x = gauss(rng);
  direction.normalize();

  const double p_cross = spec.p_inter / (spec.p_inter + spec.p_intra);

  for (int t = 0; t < spec.topics; ++t) {
    const std::string topic = spec.topics == 1 ? spec.topic : spec.topic + "-" + std::to_string(t);
    std::vector<std::string> names;
    std::vector<Stance> faction;
    std::vector<double> weight;
    for (int a = 0; a < spec.authors; ++a) {
      names.push_back(topic + "-" + padded("a", a));
      faction.push_back(a % 2 == 0 ? Stance::kPro : Stance::kCon);
      weight.push_back(1.0 / std::pow(static_cast<double>(a / 2 + 1), spec.activity_skew));
      out.factions.emplace(names.back(), faction.back());
    }
    std::vector<std::vector<std::size_t>> members(2);
    std::vector<std::vector<double>> member_weight(2);
    for (std::size_t a = 0; a < names.size(); ++a) {
      const std::size_t f = faction[a] == Stance::kPro ? 0 : 1;
      members[f].push_back(a);
      member_weight[f].push_back(weight[a]);
    }
    std::discrete_distribution<std::size_t> pick_any(weight.begin(), weight.end());

    for (int c = 0; c < spec.conversations; ++c) {
      Conversation conv;
      conv.id = topic + "-" + padded("c", c);
      conv.topic = topic;
      std::vector<std::size_t> post_author;

      for (int p = 0; p < spec.posts_per_conversation; ++p) {
        Utterance u;
        u.id = conv.id + "-" + padded("p", p);
        std::size_t author = 0;
        if (p == 0) {
          author = pick_any(rng);
        } else {
          const std::size_t parent = std::uniform_int_distribution<std::size_t>(0, post_author.size() - 1)(rng);
          u.parent = conv.utterances[parent].id;
          const std::size_t parent_author = post_author[parent];
          const std::size_t parent_faction = faction[parent_author] == Stance::kPro ? 0 : 1;
          const std::size_t f = unif(rng) < p_cross ? 1 - parent_faction : parent_faction;
          std::vector<double> w = member_weight[f];
          for (std::size_t i = 0; i < w.size(); ++i) {
            if (members[f][i] == parent_author) w[i] = 0.0;
          }
          author = members[f][std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng)];
          if (p > 1 && unif(rng) < spec.quote_probability) {
            const std::size_t q = std::uniform_int_distribution<std::size_t>(0, post_author.size() - 1)(rng);
            if (q != parent && post_author[q] != author) u.quotes.push_back(conv.utterances[q].id);
          }
        }
        u.author = names[author];
        u.label = faction[author];
        const int words = std::uniform_int_distribution<int>(5, 20)(rng);
        for (int w = 0; w < words; ++w) {
          if (w) u.text += ' ';
          u.text += "tok" + std::to_string(std::uniform_int_distribution<int>(0, 499)(rng));
        }

        const double sign = faction[author] == Stance::kPro ? 1.0 : -1.0;
        std::vector<double> vec(spec.text_dim);
        for (std::size_t i = 0; i < spec.text_dim; ++i) {
          vec[i] = sign * spec.separation / 2.0 * direction[static_cast<Eigen::Index>(i)] + gauss(rng);
        }
        out.text.insert(u.id, std::move(vec));
        post_author.push_back(author);
        conv.utterances.push_back(std::move(u));
      }
      for (std::size_t a : post_author) conv.author_labels[names[a]] = faction[a];
      validate(conv);
      out.conversations.push_back(std::move(conv));
    }
  }
  return out;
}

SyntheticSpec structure_informative_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.topic = "structure";
  s.p_inter = 0.9;
  s.p_intra = 0.1;
  s.separation = 0.5;
  s.seed = seed;
  return s;
}

SyntheticSpec text_informative_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.topic = "text";
  s.p_inter = 0.5;
  s.p_intra = 0.5;
  s.separation = 3.0;
  s.seed = seed;
  return s;
}

SyntheticSpec both_informative_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.topic = "both";
  s.p_inter = 0.8;
  s.p_intra = 0.2;
  s.separation = 2.0;
  s.seed = seed;
  return s;
}

PlantedGraph generate_planted_graph(int n, double p_inter, double p_intra, std::uint64_t seed) {
  if (n < 2) throw ValidationError("planted graph needs at least two nodes");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif;
  PlantedGraph out;
  std::vector<std::string> nodes;
  std::vector<int> side;
  for (int i = 0; i < n; ++i) {
    nodes.push_back(padded("n", i));
    side.push_back(i < n / 2 ? 1 : -1);
    out.factions.emplace(nodes.back(), side.back());
  }
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = side[i] != side[j] ? p_inter : p_intra;
      if (unif(rng) < p) {
        edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), 1.0});
      }
    }
  }
  out.graph = InteractionGraph(std::move(nodes), std::move(edges));
  return out;
}

}  // namespace taste
