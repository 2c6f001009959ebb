// Command-line front end. Exit status: 0 success, 1 usage, 2 data error,
// 3 internal error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fraudgraph/clustering.hpp"
#include "fraudgraph/embedding.hpp"
#include "fraudgraph/errors.hpp"
#include "fraudgraph/evaluation.hpp"
#include "fraudgraph/graph.hpp"
#include "fraudgraph/incremental.hpp"
#include "fraudgraph/io.hpp"
#include "fraudgraph/pipeline.hpp"
#include "fraudgraph/synthetic.hpp"

namespace fs = std::filesystem;
using namespace fraudgraph;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

/// Raised for argument combinations CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GraphInputs {
  fs::path hard;
  fs::path soft;
  fs::path risk;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--hard", hard, "hard-link TSV (u, kind, v)");
    cmd->add_option("--soft", soft, "soft-link TSV (u, kind, v[, w[, day]])");
    cmd->add_option("--risk", risk, "risk indicator TSV (token, value)");
  }

  void fill_from(const PipelineConfig& cfg) {
    if (hard.empty()) hard = cfg.hard_links;
    if (soft.empty()) soft = cfg.soft_links;
    if (risk.empty()) risk = cfg.risk_indicators;
    if (hard.empty() || soft.empty()) throw UsageError("--hard and --soft are required (or set [paths] in --config)");
  }
};

struct EmbedFlags {
  std::optional<int> dim, epochs, negatives, workers;
  std::optional<std::size_t> samples_per_epoch;
  std::optional<double> samples_per_edge, learning_rate;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--dim", dim, "total embedding dimension (even)");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--negatives", negatives, "negative samples per edge draw");
    cmd->add_option("--samples-per-epoch", samples_per_epoch, "edge draws per epoch (0: samples-per-edge * |E'|)");
    cmd->add_option("--samples-per-edge", samples_per_edge, "edge draws per epoch per super-node edge");
    cmd->add_option("--learning-rate", learning_rate, "initial learning rate");
    cmd->add_option("--workers", workers, "training threads (1 is deterministic)");
  }

  void apply(EmbeddingConfig& cfg) const {
    if (dim) cfg.dim_total = *dim;
    if (epochs) cfg.epochs = *epochs;
    if (negatives) cfg.negatives = *negatives;
    if (workers) cfg.workers = *workers;
    if (samples_per_epoch) cfg.samples_per_epoch = *samples_per_epoch;
    if (samples_per_edge) cfg.samples_per_edge = *samples_per_edge;
    if (learning_rate) cfg.initial_learning_rate = *learning_rate;
  }
};

struct ClusterFlags {
  std::optional<int> min_cluster_size, min_samples;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--min-cluster-size", min_cluster_size, "smallest reported cluster, in super-nodes");
    cmd->add_option("--min-samples", min_samples, "neighbour count for core distances (0: min-cluster-size)");
  }

  void apply(ClusterParams& params) const {
    if (min_cluster_size) params.min_cluster_size = *min_cluster_size;
    if (min_samples) params.min_samples = *min_samples;
  }
};

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void print_ranked(const std::vector<RankedCluster>& ranked, const TokenMap& tokens) {
  write_report(std::cout, ranked, tokens);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fraud-ring discovery on heterogeneous account graphs"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  fs::path config_path;
  app.add_option("--seed", seed, "random seed for training and generation");
  app.add_option("--config", config_path, "INI-style settings file")->check(CLI::ExistingFile);

  // transform
  auto* transform_cmd = app.add_subcommand("transform", "collapse hard-link components into super-nodes");
  GraphInputs transform_in;
  transform_in.add_to(transform_cmd);
  fs::path transform_out;
  transform_cmd->add_option("--out", transform_out, "transformed graph output")->required();

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "train first- and second-order embeddings");
  fs::path embed_in, embed_out;
  EmbedFlags embed_flags;
  embed_cmd->add_option("--in", embed_in, "transformed graph")->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--out", embed_out, "embedding output")->required();
  embed_flags.add_to(embed_cmd);

  // cluster
  auto* cluster_cmd = app.add_subcommand("cluster", "density-based clustering of an embedding");
  fs::path cluster_in, cluster_out;
  ClusterFlags cluster_flags;
  cluster_cmd->add_option("--in", cluster_in, "embedding")->required()->check(CLI::ExistingFile);
  cluster_cmd->add_option("--out", cluster_out, "cluster label output")->required();
  cluster_flags.add_to(cluster_cmd);

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "run every stage and write a ranked report");
  GraphInputs pipeline_in;
  fs::path pipeline_out;
  EmbedFlags pipeline_embed;
  ClusterFlags pipeline_cluster;
  pipeline_in.add_to(pipeline_cmd);
  pipeline_cmd->add_option("--out", pipeline_out, "output directory");
  pipeline_embed.add_to(pipeline_cmd);
  pipeline_cluster.add_to(pipeline_cmd);

  // generate
  auto* generate_cmd = app.add_subcommand("generate", "write a synthetic planted-ring dataset");
  SynthConfig synth;
  fs::path generate_out;
  generate_cmd->add_option("--out", generate_out, "output directory")->required();
  generate_cmd->add_option("--n-legit", synth.n_legit, "legitimate accounts")->capture_default_str();
  generate_cmd->add_option("--n-rings", synth.n_rings, "planted rings")->capture_default_str();
  generate_cmd->add_option("--ring-min", synth.ring_size_min, "smallest ring")->capture_default_str();
  generate_cmd->add_option("--ring-max", synth.ring_size_max, "largest ring")->capture_default_str();
  generate_cmd->add_option("--hard-density", synth.hard_link_density_in_ring, "in-ring hard-link probability")
      ->capture_default_str();
  generate_cmd->add_option("--soft-density", synth.soft_link_density_in_ring, "in-ring soft-link probability")
      ->capture_default_str();
  generate_cmd->add_option("--noise", synth.background_soft_noise, "background soft-link probability per pair")
      ->capture_default_str();
  generate_cmd->add_option("--family-rate", synth.family_hard_link_rate, "legitimate hard-link rate")
      ->capture_default_str();
  generate_cmd->add_option("--hard-ring-fraction", synth.hard_ring_fraction, "rings that also share hard links")
      ->capture_default_str();
  generate_cmd->add_option("--star-ring-fraction", synth.star_ring_fraction, "rings with a hub topology")
      ->capture_default_str();

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "coverage, precision and purity against ground truth");
  fs::path eval_transformed, eval_clusters, eval_truth;
  std::string eval_format = "text";
  evaluate_cmd->add_option("--transformed", eval_transformed, "transformed graph")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--clusters", eval_clusters, "cluster labels")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--truth", eval_truth, "ground truth (token, ring id)")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--format", eval_format, "text or kv")->check(CLI::IsMember({"text", "kv"}));

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "apply an update log to a base graph");
  GraphInputs replay_in;
  fs::path replay_log, replay_out;
  bool replay_refresh = false;
  replay_in.add_to(replay_cmd);
  replay_cmd->add_option("--log", replay_log, "update log")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--out", replay_out, "snapshot directory")->required();
  replay_cmd->add_flag("--refresh", replay_refresh, "retrain and recluster after the last event");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "transformation statistics");
  GraphInputs stats_in;
  stats_in.add_to(stats_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : read_config_file(config_path);
    if (seed) cfg.embedding.seed = *seed;

    if (*transform_cmd) {
      transform_in.fill_from(cfg);
      const auto g = load_graph(transform_in.hard, transform_in.soft, transform_in.risk);
      const auto t = transform(g);
      auto out = open_output(transform_out);
      write_transformed(out, t, g.tokens());
      std::cerr << "super-nodes " << t.num_super_nodes() << ", edges " << t.num_edges() << '\n';
    } else if (*embed_cmd) {
      embed_flags.apply(cfg.embedding);
      const auto loaded = load_transformed(embed_in);
      const auto emb = embed(loaded.graph, cfg.embedding);
      auto out = open_output(embed_out);
      write_embedding(out, emb);
    } else if (*cluster_cmd) {
      cluster_flags.apply(cfg.clustering);
      const auto emb = load_embedding(cluster_in);
      const auto assignment = cluster(emb, cfg.clustering);
      auto out = open_output(cluster_out);
      write_clusters(out, assignment);
      std::cerr << "clusters " << assignment.num_clusters() << ", noise " << assignment.noise_count() << '\n';
    } else if (*pipeline_cmd) {
      pipeline_in.fill_from(cfg);
      cfg.hard_links = pipeline_in.hard;
      cfg.soft_links = pipeline_in.soft;
      cfg.risk_indicators = pipeline_in.risk;
      if (!pipeline_out.empty()) cfg.output_dir = pipeline_out;
      if (cfg.output_dir.empty()) throw UsageError("--out is required (or set [paths] output in --config)");
      pipeline_embed.apply(cfg.embedding);
      pipeline_cluster.apply(cfg.clustering);
      const auto result = run_pipeline(cfg);
      std::cerr << "report written to " << (cfg.output_dir / PipelineOutputs::report).string() << '\n';
      print_ranked(result.ranked, result.tokens);
    } else if (*generate_cmd) {
      synth.seed = seed.value_or(synth.seed);
      const auto data = generate(synth);
      write_dataset(generate_out, data);
      std::cerr << "accounts " << data.graph.num_accounts() << ", fraud " << data.truth.total_fraud() << '\n';
    } else if (*evaluate_cmd) {
      const auto loaded = load_transformed(eval_transformed);
      const auto assignment = load_clusters(eval_clusters);
      if (assignment.labels.size() != loaded.graph.num_super_nodes()) {
        throw DataError("cluster file has " + std::to_string(assignment.labels.size()) + " labels for " +
                        std::to_string(loaded.graph.num_super_nodes()) + " super-nodes");
      }
      auto in = open_input(eval_truth);
      const auto truth = read_ground_truth(in, loaded.tokens, eval_truth.string());
      const auto report = evaluate(assignment.labels, truth, loaded.graph.membership);
      if (eval_format == "kv") {
        write_metrics_kv(std::cout, report);
      } else {
        write_metrics_text(std::cout, report);
      }
    } else if (*replay_cmd) {
      replay_in.fill_from(cfg);
      const auto g = load_graph(replay_in.hard, replay_in.soft, replay_in.risk);
      auto state = IncrementalState::from_graph(g, cfg.incremental());
      state.full_refresh();
      auto in = open_input(replay_log);
      const auto events = read_update_log(in, replay_log.string());
      // Each distinct day is one micro-batch.
      for (std::size_t i = 0; i < events.size(); ++i) {
        state.apply(events[i]);
        if (i + 1 == events.size() || events[i + 1].day != events[i].day) {
          state.online_update();
          state.assign_new_to_clusters();
        }
      }
      if (replay_refresh) state.full_refresh();
      const auto snap = state.snapshot(WeightView::base);
      fs::create_directories(replay_out);
      save_transformed(replay_out / PipelineOutputs::transformed, snap.graph, state.tokens());
      save_embedding(replay_out / PipelineOutputs::embedding, snap.embedding);
      save_clusters(replay_out / PipelineOutputs::clusters, snap.assignment);
      std::cerr << "events " << events.size() << ", super-nodes " << state.num_super_nodes() << ", edges "
                << state.num_edges() << '\n';
    } else if (*stats_cmd) {
      stats_in.fill_from(cfg);
      const auto g = load_graph(stats_in.hard, stats_in.soft, stats_in.risk);
      write_transform_stats(std::cout, transform_stats(g, transform(g)));
    }
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
