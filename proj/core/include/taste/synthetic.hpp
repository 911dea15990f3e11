#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "taste/corpus.hpp"
#include "taste/graph.hpp"
#include "taste/textfeat.hpp"

namespace taste {

/// Two-faction discussion generator. Every post replies to a uniformly chosen
/// earlier post of its thread; the replier comes from the parent author's
/// opposite faction with probability p_inter / (p_inter + p_intra). Text
/// vectors are faction-conditional Gaussians: +-(separation/2) along a random
/// unit direction plus unit-variance noise.
struct SyntheticSpec {
  std::string topic = "synthetic";
  int topics = 1;
  int authors = 60;  // per topic, split evenly between the factions
  int conversations = 10;
  int posts_per_conversation = 60;
  double p_inter = 0.8;
  double p_intra = 0.2;
  double quote_probability = 0.0;  // chance a post also quotes a random earlier post
  double activity_skew = 0.5;      // author sampling weight ~ 1 / (rank + 1)^skew
  std::size_t text_dim = 16;
  double separation = 0.0;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<Conversation> conversations;
  EmbeddingStore text{1};
  std::map<std::string, Stance> factions;  // author -> planted stance
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

/// Structure informative, text weak.
SyntheticSpec structure_informative_spec(std::uint64_t seed);
/// Text informative, replies blind to faction.
SyntheticSpec text_informative_spec(std::uint64_t seed);
/// Both modalities carry signal.
SyntheticSpec both_informative_spec(std::uint64_t seed);

struct PlantedGraph {
  InteractionGraph graph;
  std::map<std::string, int> factions;  // +1 / -1
};

/// n nodes in two equal factions; each pair is joined with unit weight with
/// probability p_inter across factions and p_intra within one.
PlantedGraph generate_planted_graph(int n, double p_inter, double p_intra, std::uint64_t seed);

}  // namespace taste
