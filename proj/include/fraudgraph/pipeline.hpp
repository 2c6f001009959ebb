#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fraudgraph/clustering.hpp"
#include "fraudgraph/embedding.hpp"
#include "fraudgraph/errors.hpp"
#include "fraudgraph/graph.hpp"
#include "fraudgraph/incremental.hpp"
#include "fraudgraph/io.hpp"

namespace fraudgraph {

struct RiskWeights {
  double size = 0.2;
  double density = 0.3;
  double indicator = 0.5;
};

/// All settings for one run. Loaded from INI-style text:
///
///     [embedding]   dim, negatives, epochs, learning_rate, samples_per_epoch,
///                   samples_per_edge, seed, workers
///     [clustering]  min_cluster_size, min_samples
///     [incremental] decay_lambda, nn_threshold, online_samples_per_edge
///     [risk]        size, density, indicator
///     [paths]       hard, soft, risk, output
///
/// Relative paths resolve against the config file's directory.
struct PipelineConfig {
  EmbeddingConfig embedding;
  ClusterParams clustering;
  double decay_lambda = 0.01;
  double nn_threshold = 0.3;
  std::size_t online_samples_per_edge = 100;
  RiskWeights risk;

  std::filesystem::path hard_links;
  std::filesystem::path soft_links;
  std::filesystem::path risk_indicators;  // optional
  std::filesystem::path output_dir;

  /// Throws std::invalid_argument; risk weights must be nonnegative and sum
  /// to 1 within 1e-9.
  void validate() const;
  IncrementalConfig incremental() const;
};

/// Throws DataError on unknown sections or keys and on unparsable values.
PipelineConfig read_config(std::istream& in, const std::filesystem::path& base_dir = {},
                           const std::string& name = "config");
PipelineConfig read_config_file(const std::filesystem::path& path);

constexpr double kRiskSizeCap = 100.0;

struct RiskComponents {
  double size = 0.0;       // min(|C| / cap, 1)
  double density = 0.0;    // 1 - mean pairwise cosine distance, clamped to [0, 1]
  double indicator = 0.0;  // mean super-node risk / global max
  double score = 0.0;
};

/// r(C) for the super-nodes in `members`. `supernode_risk` holds the
/// aggregated indicator of every super-node; its maximum is the rescaling
/// reference. |C| counts super-nodes.
RiskComponents risk_score(std::span<const SuperNodeIndex> members, const CombinedEmbedding& embedding,
                          std::span<const double> supernode_risk, const RiskWeights& weights);

struct RankedCluster {
  int cluster_id = 0;
  std::vector<SuperNodeIndex> super_nodes;  // ascending
  std::vector<AccountIndex> accounts;       // ascending
  RiskComponents risk;
};

/// Clusters sorted by score descending, ties by cluster id.
std::vector<RankedCluster> rank_clusters(const TransformedGraph& g, const CombinedEmbedding& embedding,
                                         const ClusterAssignment& assignment, const RiskWeights& weights);

/// `#ranked_clusters <m>` then `rank cluster_id score n_accounts tokens`.
void write_report(std::ostream& out, const std::vector<RankedCluster>& ranked, const TokenMap& tokens);
/// `rank cluster_id size density indicator score` at full precision.
void write_risk_components(std::ostream& out, const std::vector<RankedCluster>& ranked);

/// Failure inside one pipeline stage.
class StageError : public DataError {
 public:
  StageError(const std::string& stage, const std::string& cause)
      : DataError("stage '" + stage + "' failed: " + cause), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// File names written into the output directory.
struct PipelineOutputs {
  static constexpr const char* transformed = "transformed.tsv";
  static constexpr const char* embedding = "embedding.tsv";
  static constexpr const char* clusters = "clusters.tsv";
  static constexpr const char* report = "report.tsv";
  static constexpr const char* components = "risk_components.tsv";
};

struct PipelineResult {
  TransformedGraph graph;
  TokenMap tokens;
  CombinedEmbedding embedding;
  ClusterAssignment assignment;
  std::vector<RankedCluster> ranked;
};

/// transform -> embed -> cluster -> score -> rank. Every stage writes its
/// artifact and the next stage reads it back, so running the stages one by
/// one from the files gives the same report. On failure the files written
/// by this run are removed and StageError is thrown.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Stage helpers shared with the CLI.
HeterogeneousGraph load_graph(const std::filesystem::path& hard, const std::filesystem::path& soft,
                              const std::filesystem::path& risk = {});
void save_transformed(const std::filesystem::path& path, const TransformedGraph& g, const TokenMap& tokens);
LoadedTransformedGraph load_transformed(const std::filesystem::path& path);
void save_embedding(const std::filesystem::path& path, const CombinedEmbedding& embedding);
CombinedEmbedding load_embedding(const std::filesystem::path& path);
void save_clusters(const std::filesystem::path& path, const ClusterAssignment& assignment);
ClusterAssignment load_clusters(const std::filesystem::path& path);

}  // namespace fraudgraph
