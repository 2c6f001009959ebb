#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fraudgraph/pipeline.hpp"
#include "fraudgraph/synthetic.hpp"

namespace fraudgraph {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("fraudgraph_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Eleven accounts, four super-nodes after the hard-link merge.
void write_toy(const fs::path& dir) {
  write_file(dir / "hard.tsv",
             "A1\tphone\tA2\nA2\temail\tA4\nA4\tcredit_card\tA5\n"
             "A6\tnational_id\tA7\nA7\tphone\tA9\nA9\temail\tA10\nA10\tbank_account\tA11\n");
  write_file(dir / "soft.tsv",
             "A2\tdevice_fingerprint\tA3\nA5\tip_address\tA6\nA4\tcookie\tA7\nA8\tip_address\tA11\n"
             "A1\tcookie\tA2\n");
}

PipelineConfig small_config(const fs::path& dir) {
  PipelineConfig cfg;
  cfg.embedding.dim_total = 16;
  cfg.embedding.epochs = 5;
  cfg.clustering.min_cluster_size = 5;
  cfg.hard_links = dir / "hard.tsv";
  cfg.soft_links = dir / "soft.tsv";
  cfg.output_dir = dir / "out";
  return cfg;
}

void write_planted(const fs::path& dir, std::uint64_t seed) {
  SynthConfig s;
  s.n_legit = 200;
  s.n_rings = 5;
  s.seed = seed;
  write_dataset(dir, generate(s));
}

TEST(Config, ParsesAllSections) {
  std::istringstream in(
      "[embedding]\ndim = 32\nnegatives = 3\nepochs = 4\nlearning_rate = 0.05\nsamples_per_edge = 2.5\n"
      "seed = 9\nworkers = 2\n"
      "[clustering]\nmin_cluster_size = 3\nmin_samples = 2\n"
      "[incremental]\ndecay_lambda = 0.1\nnn_threshold = 0.2\nonline_samples_per_edge = 10\n"
      "[risk]\nsize = 0.5\ndensity = 0.25\nindicator = 0.25\n"
      "[paths]\nhard = h.tsv\nsoft = /abs/s.tsv\noutput = out\n");
  const auto cfg = read_config(in, "/base");
  EXPECT_EQ(cfg.embedding.dim_total, 32);
  EXPECT_EQ(cfg.embedding.negatives, 3);
  EXPECT_EQ(cfg.embedding.epochs, 4);
  EXPECT_DOUBLE_EQ(cfg.embedding.initial_learning_rate, 0.05);
  EXPECT_DOUBLE_EQ(cfg.embedding.samples_per_edge, 2.5);
  EXPECT_EQ(cfg.embedding.seed, 9u);
  EXPECT_EQ(cfg.embedding.workers, 2);
  EXPECT_EQ(cfg.clustering.min_cluster_size, 3);
  EXPECT_EQ(cfg.clustering.min_samples, 2);
  EXPECT_DOUBLE_EQ(cfg.decay_lambda, 0.1);
  EXPECT_DOUBLE_EQ(cfg.nn_threshold, 0.2);
  EXPECT_EQ(cfg.online_samples_per_edge, 10u);
  EXPECT_DOUBLE_EQ(cfg.risk.size, 0.5);
  EXPECT_EQ(cfg.hard_links, fs::path("/base/h.tsv"));
  EXPECT_EQ(cfg.soft_links, fs::path("/abs/s.tsv"));
  EXPECT_EQ(cfg.output_dir, fs::path("/base/out"));
  EXPECT_TRUE(cfg.risk_indicators.empty());
}

TEST(Config, DefaultsWhenEmpty) {
  std::istringstream in("");
  const auto cfg = read_config(in);
  EXPECT_EQ(cfg.embedding.dim_total, 128);
  EXPECT_EQ(cfg.clustering.min_cluster_size, 5);
  EXPECT_DOUBLE_EQ(cfg.risk.indicator, 0.5);
}

TEST(Config, RejectsUnknownAndInvalid) {
  for (const char* text : {"[embedding]\ndimm = 3\n", "[embeding]\ndim = 3\n", "[embedding]\ndim = x\n",
                           "[risk]\nsize = 0.5\n", "[risk]\nsize = -0.2\ndensity = 0.7\n",
                           "[clustering]\nmin_cluster_size = 1\n", "[incremental]\nonline_samples_per_edge = -1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_config(in), DataError) << text;
  }
}

TEST(Config, FileResolvesAgainstItsDirectory) {
  TempDir dir("config_file");
  write_file(dir.path() / "run.ini", "[paths]\nhard = data/h.tsv\n");
  EXPECT_EQ(read_config_file(dir.path() / "run.ini").hard_links, dir.path() / "data/h.tsv");
}

CombinedEmbedding rows(std::initializer_list<std::initializer_list<double>> values) {
  CombinedEmbedding e;
  e.vectors = RowMatrixd(values.size(), values.begin()->size());
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index j = 0;
    for (double v : r) e.vectors(i, j++) = v;
    ++i;
  }
  e.zero_rows.assign(values.size(), false);
  return e;
}

TEST(RiskScore, IdenticalEmbeddingsAtSizeCap) {
  CombinedEmbedding e;
  e.vectors = RowMatrixd::Constant(100, 2, 0.5);
  std::vector<SuperNodeIndex> members(100);
  for (SuperNodeIndex i = 0; i < 100; ++i) members[i] = i;
  const std::vector<double> risk(100, 0.0);
  const RiskWeights w;
  const auto c = risk_score(members, e, risk, w);
  EXPECT_DOUBLE_EQ(c.size, 1.0);
  EXPECT_NEAR(c.density, 1.0, 1e-12);
  EXPECT_EQ(c.indicator, 0.0);
  EXPECT_NEAR(c.score, w.size + w.density, 1e-12);
}

TEST(RiskScore, WorkedExample) {
  // Orthogonal pair: distance 1, density 0. Risks 1 and 3 against a max of 4.
  const auto e = rows({{1, 0}, {0, 1}, {1, 1}});
  const std::vector<SuperNodeIndex> members{0, 1};
  const std::vector<double> risk{1.0, 3.0, 4.0};
  const auto c = risk_score(members, e, risk, RiskWeights{});
  EXPECT_DOUBLE_EQ(c.size, 0.02);
  EXPECT_DOUBLE_EQ(c.density, 0.0);
  EXPECT_DOUBLE_EQ(c.indicator, 0.5);
  EXPECT_DOUBLE_EQ(c.score, 0.2 * 0.02 + 0.5 * 0.5);
}

TEST(RiskScore, OppositeVectorsClampDensity) {
  const auto e = rows({{1, 0}, {-1, 0}});
  const std::vector<SuperNodeIndex> members{0, 1};
  const std::vector<double> risk{0.0, 0.0};
  EXPECT_EQ(risk_score(members, e, risk, RiskWeights{}).density, 0.0);
}

TEST(RiskScore, MatchesScalarLoop) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    CombinedEmbedding e;
    e.vectors = RowMatrixd(n, 4);
    for (Eigen::Index i = 0; i < e.vectors.size(); ++i) e.vectors.data()[i] = normal(rng);
    std::vector<double> risk(n);
    for (auto& r : risk) r = unit(rng);
    std::vector<SuperNodeIndex> members;
    for (SuperNodeIndex i = 0; i < n; ++i) {
      if (rng() % 2) members.push_back(i);
    }
    if (members.size() < 2) continue;

    double dist = 0.0, pairs = 0.0, rsum = 0.0;
    for (std::size_t a = 0; a < members.size(); ++a) {
      rsum += risk[members[a]];
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const auto x = e.vectors.row(members[a]);
        const auto y = e.vectors.row(members[b]);
        dist += 1.0 - x.dot(y) / (x.norm() * y.norm());
        pairs += 1.0;
      }
    }
    const double rmax = *std::max_element(risk.begin(), risk.end());
    const double want = 0.2 * std::min(members.size() / 100.0, 1.0) +
                        0.3 * std::clamp(1.0 - dist / pairs, 0.0, 1.0) + 0.5 * (rsum / members.size() / rmax);
    EXPECT_NEAR(risk_score(members, e, risk, RiskWeights{}).score, want, 1e-12);
  }
}

TEST(RankClusters, InvariantUnderIndicatorScaling) {
  TempDir dir("rank_scaling");
  write_planted(dir.path(), 2);
  auto cfg = small_config(dir.path());
  cfg.risk_indicators = dir.path() / "risk.tsv";
  const auto result = run_pipeline(cfg);
  ASSERT_GT(result.ranked.size(), 1u);

  auto scaled = result.graph;
  for (auto& s : scaled.super_nodes) s.risk *= 7.5;
  const auto again = rank_clusters(scaled, result.embedding, result.assignment, cfg.risk);
  ASSERT_EQ(again.size(), result.ranked.size());
  for (std::size_t r = 0; r < again.size(); ++r) {
    EXPECT_EQ(again[r].cluster_id, result.ranked[r].cluster_id);
    EXPECT_NEAR(again[r].risk.score, result.ranked[r].risk.score, 1e-12);
  }
  for (std::size_t r = 1; r < again.size(); ++r) EXPECT_GE(again[r - 1].risk.score, again[r].risk.score);
}

TEST(RankClusters, RejectsMismatchedInputs) {
  TransformedGraph g;
  g.super_nodes.resize(2);
  ClusterAssignment a;
  a.labels = {0};
  EXPECT_THROW(rank_clusters(g, rows({{1, 0}, {0, 1}}), a, RiskWeights{}), DataError);
}

TEST(Report, Format) {
  TokenMap tokens;
  tokens.intern("x");
  tokens.intern("y");
  RankedCluster c;
  c.cluster_id = 3;
  c.accounts = {0, 1};
  c.risk.score = 0.123456;
  std::ostringstream out;
  write_report(out, {c}, tokens);
  EXPECT_EQ(out.str(), "#ranked_clusters 1\n1\t3\t0.1235\t2\tx,y\n");
}

TEST(RunPipeline, ToyGraph) {
  TempDir dir("pipeline_toy");
  write_toy(dir.path());
  auto cfg = small_config(dir.path());
  cfg.clustering.min_cluster_size = 2;
  const auto result = run_pipeline(cfg);
  EXPECT_EQ(result.graph.num_super_nodes(), 4u);
  EXPECT_EQ(result.graph.num_edges(), 3u);
  EXPECT_EQ(result.embedding.rows(), 4);
  for (const char* f : {PipelineOutputs::transformed, PipelineOutputs::embedding, PipelineOutputs::clusters,
                        PipelineOutputs::report, PipelineOutputs::components}) {
    EXPECT_TRUE(fs::exists(cfg.output_dir / f)) << f;
  }
  const auto first = read_file(cfg.output_dir / PipelineOutputs::report);
  run_pipeline(cfg);
  EXPECT_EQ(read_file(cfg.output_dir / PipelineOutputs::report), first);
}

TEST(RunPipeline, EmptySoftFileGivesNoClusters) {
  TempDir dir("pipeline_empty_soft");
  write_toy(dir.path());
  write_file(dir.path() / "soft.tsv", "");
  const auto result = run_pipeline(small_config(dir.path()));
  EXPECT_EQ(result.graph.num_edges(), 0u);
  EXPECT_TRUE(result.ranked.empty());
  EXPECT_EQ(read_file(dir.path() / "out" / PipelineOutputs::report), "#ranked_clusters 0\n");
}

TEST(RunPipeline, ByteIdenticalAcrossRuns) {
  TempDir dir("pipeline_repeat");
  write_planted(dir.path(), 4);
  auto cfg = small_config(dir.path());
  cfg.risk_indicators = dir.path() / "risk.tsv";
  run_pipeline(cfg);
  std::vector<std::string> first;
  for (const char* f : {PipelineOutputs::embedding, PipelineOutputs::clusters, PipelineOutputs::report,
                        PipelineOutputs::components}) {
    first.push_back(read_file(cfg.output_dir / f));
  }
  run_pipeline(cfg);
  std::size_t i = 0;
  for (const char* f : {PipelineOutputs::embedding, PipelineOutputs::clusters, PipelineOutputs::report,
                        PipelineOutputs::components}) {
    EXPECT_EQ(read_file(cfg.output_dir / f), first[i++]) << f;
  }
}

TEST(RunPipeline, StagesComposeThroughFiles) {
  TempDir dir("pipeline_compose");
  write_planted(dir.path(), 8);
  auto cfg = small_config(dir.path());
  cfg.risk_indicators = dir.path() / "risk.tsv";
  const auto result = run_pipeline(cfg);

  const auto stage_dir = dir.path() / "manual";
  fs::create_directories(stage_dir);
  const auto g = load_graph(cfg.hard_links, cfg.soft_links, cfg.risk_indicators);
  save_transformed(stage_dir / "t.tsv", transform(g), g.tokens());
  const auto loaded = load_transformed(stage_dir / "t.tsv");
  save_embedding(stage_dir / "e.tsv", embed(loaded.graph, cfg.embedding));
  const auto emb = load_embedding(stage_dir / "e.tsv");
  save_clusters(stage_dir / "c.tsv", cluster(emb, cfg.clustering));
  const auto clusters = load_clusters(stage_dir / "c.tsv");
  std::ostringstream report;
  write_report(report, rank_clusters(loaded.graph, emb, clusters, cfg.risk), loaded.tokens);

  EXPECT_EQ(read_file(stage_dir / "e.tsv"), read_file(cfg.output_dir / PipelineOutputs::embedding));
  EXPECT_EQ(report.str(), read_file(cfg.output_dir / PipelineOutputs::report));
  EXPECT_EQ(clusters.labels, result.assignment.labels);
}

TEST(RunPipeline, FailureRemovesPartialOutputs) {
  TempDir dir("pipeline_failure");
  write_toy(dir.path());
  write_file(dir.path() / "soft.tsv", "A1\tcookie\tA3\tnot-a-number\n");
  auto cfg = small_config(dir.path());
  try {
    run_pipeline(cfg);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "transform");
  }
  EXPECT_FALSE(fs::exists(cfg.output_dir / PipelineOutputs::transformed));

  // The embed stage cannot write over a directory; the transformed file
  // already on disk must go too.
  write_toy(dir.path());
  fs::create_directories(cfg.output_dir / PipelineOutputs::embedding / "blocker");
  try {
    run_pipeline(cfg);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "embed");
  }
  EXPECT_FALSE(fs::exists(cfg.output_dir / PipelineOutputs::transformed));
  fs::remove_all(cfg.output_dir);

  write_toy(dir.path());
  cfg.embedding.dim_total = 3;  // odd: rejected before any stage runs
  EXPECT_THROW(run_pipeline(cfg), StageError);

  cfg = small_config(dir.path());
  cfg.hard_links = dir.path() / "missing.tsv";
  EXPECT_THROW(run_pipeline(cfg), StageError);
  for (const char* f : {PipelineOutputs::transformed, PipelineOutputs::embedding, PipelineOutputs::report}) {
    EXPECT_FALSE(fs::exists(cfg.output_dir / f)) << f;
  }
}

TEST(RunPipeline, ClustersPlantedRings) {
  TempDir dir("pipeline_planted");
  write_planted(dir.path(), 3);
  auto cfg = small_config(dir.path());
  cfg.embedding.dim_total = 32;
  cfg.embedding.epochs = 10;
  const auto result = run_pipeline(cfg);
  EXPECT_GE(result.ranked.size(), 2u);
}

}  // namespace
}  // namespace fraudgraph
