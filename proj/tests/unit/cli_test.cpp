#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "taste/textfeat.hpp"

namespace taste {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("taste-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  std::string write(const std::string& name, const std::string& body) {
    const auto path = dir_ / name;
    std::ofstream(path) << body;
    return path.string();
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

const char* kTwoNodes =
    R"({"id":"c1","topic":"t","utterances":[{"id":"u1","author":"alice","text":"yes"},)"
    R"({"id":"u2","author":"bob","parent":"u1","text":"no","label":"-"}],"author_labels":{"alice":"+"}})"
    "\n";

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_NE(out_.str().find("eval"), std::string::npos);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"ingest", "--frobnicate", "x"}), 2);
  EXPECT_EQ(run({"ingest", (dir_ / "missing.jsonl").string()}), 2);
  EXPECT_NE(err_.str().find("taste ingest"), std::string::npos);
  EXPECT_EQ(run({"sdp"}), 2);
  EXPECT_EQ(run({"eval", "--model", "bert", write("c.jsonl", kTwoNodes)}), 2);
}

TEST_F(Cli, MalformedLineIsAValidationError) {
  const auto path = write("bad.jsonl", std::string(kTwoNodes) + "{\"id\": \n");
  EXPECT_EQ(run({"ingest", path}), 1);
  EXPECT_NE(err_.str().find("line 2"), std::string::npos) << err_.str();
}

TEST_F(Cli, IngestPrintsStatsAndCachesCorpus) {
  const auto path = write("c.jsonl", kTwoNodes);
  const auto cache = dir_ / "cache";
  ASSERT_EQ(run({"ingest", path, "--out", cache.string()}), 0) << err_.str();
  EXPECT_NE(out_.str().find("t"), std::string::npos);
  ASSERT_TRUE(fs::exists(cache / "corpus.jsonl"));
  ASSERT_EQ(run({"ingest", (cache / "corpus.jsonl").string()}), 0) << err_.str();
}

TEST_F(Cli, GraphSdpAndStemOnTwoAuthors) {
  const auto path = write("c.jsonl", kTwoNodes);
  ASSERT_EQ(run({"graph", path, "--out", dir_.string()}), 0) << err_.str();
  EXPECT_NE(slurp(dir_ / "graph.tsv").find("alice\tbob"), std::string::npos);

  ASSERT_EQ(run({"sdp", "--graph", (dir_ / "graph.tsv").string(), "--out", dir_.string()}), 0) << err_.str();
  std::ifstream in(dir_ / "struct.emb");
  const EmbeddingStore emb = read_embeddings(in);
  const auto& a = emb.at("alice");
  const auto& b = emb.at("bob");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  EXPECT_NEAR(dot, -1.0, 1e-6);

  ASSERT_EQ(run({"stem", path, "--out", dir_.string()}), 0) << err_.str();
  const auto stem = nlohmann::json::parse(slurp(dir_ / "stem.json"));
  std::map<std::string, std::string> stance;
  for (const auto& row : stem) stance[row.at("author").get<std::string>()] = row.at("stance").get<std::string>();
  EXPECT_EQ(stance.at("alice"), "+");
  EXPECT_EQ(stance.at("bob"), "-");
}

TEST_F(Cli, SynthTrainAndDeterministicEval) {
  const auto data = dir_ / "data";
  ASSERT_EQ(run({"synth", "--preset", "both", "--seed", "3", "--out", data.string()}), 0) << err_.str();
  const auto corpus = (data / "corpus.jsonl").string();
  const auto text = (data / "text.emb").string();

  ASSERT_EQ(run({"train", corpus, "--embeddings", text, "--epochs", "2", "--lr", "1e-3", "--out",
                 (dir_ / "model").string()}),
            0)
      << err_.str();
  const auto ckpt = nlohmann::json::parse(slurp(dir_ / "model" / "model.ckpt.json"));
  EXPECT_TRUE(ckpt.is_object());
  EXPECT_FALSE(slurp(dir_ / "model" / "log.txt").empty());

  const std::vector<std::string> eval{"eval",   corpus,  "--embeddings", text, "--epochs", "2",
                                      "--lr",   "1e-3",  "--jobs",       "2",  "--out"};
  auto first = eval, second = eval;
  first.push_back((dir_ / "e1").string());
  second.push_back((dir_ / "e2").string());
  ASSERT_EQ(run(first), 0) << err_.str();
  ASSERT_EQ(run(second), 0) << err_.str();
  const std::string r1 = slurp(dir_ / "e1" / "report.json");
  EXPECT_FALSE(r1.empty());
  EXPECT_EQ(r1, slurp(dir_ / "e2" / "report.json"));

  ASSERT_EQ(run({"eval", corpus, "--model", "sdp-only", "--baseline", (dir_ / "e1" / "report.json").string(),
                 "--out", (dir_ / "e3").string()}),
            0)
      << err_.str();
  const auto report = nlohmann::json::parse(slurp(dir_ / "e3" / "report.json"));
  EXPECT_EQ(report.at("t_tests").size(), 2u);
}

TEST_F(Cli, MissingEmbeddingsFallBackToHashedFeatures) {
  const auto data = dir_ / "data";
  ASSERT_EQ(run({"synth", "--preset", "text", "--out", data.string()}), 0) << err_.str();
  ASSERT_EQ(run({"eval", (data / "corpus.jsonl").string(), "--model", "text-only", "--epochs", "1", "--out",
                 (dir_ / "e").string()}),
            0)
      << err_.str();
  EXPECT_NE(err_.str().find("hashed"), std::string::npos) << err_.str();
}

}  // namespace
}  // namespace taste
