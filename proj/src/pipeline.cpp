#include "fraudgraph/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fraudgraph/io.hpp"

namespace fraudgraph {

namespace {

namespace pt = boost::property_tree;

class ConfigReader {
 public:
  ConfigReader(const pt::ptree& tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  template <typename T>
  void get(const std::string& section, const std::string& key, T& target) {
    known_[section].push_back(key);
    const auto node = tree_.get_child_optional(pt::ptree::path_type(section + "/" + key, '/'));
    if (!node) return;
    const auto& text = node->data();
    const auto fail = [&](const std::string& expected) {
      throw DataError(name_ + ": [" + section + "] " + key + ": expected " + expected + ", got '" + text + "'");
    };
    if constexpr (std::is_same_v<T, std::filesystem::path>) {
      target = text;
    } else if constexpr (std::is_floating_point_v<T>) {
      try {
        target = parse_double(text, name_, 0);
      } catch (const DataError&) {
        fail("a number");
      }
    } else {
      long long value = 0;
      try {
        value = parse_integer(text, name_, 0);
      } catch (const DataError&) {
        fail("an integer");
      }
      if (std::is_unsigned_v<T> && value < 0) fail("a non-negative integer");
      target = static_cast<T>(value);
    }
  }

  /// Rejects sections and keys nobody asked for; typos should not pass silently.
  void check_unknown() const {
    for (const auto& [section, body] : tree_) {
      const auto it = known_.find(section);
      if (it == known_.end()) throw DataError(name_ + ": unknown section [" + section + "]");
      if (body.empty() && !body.data().empty()) throw DataError(name_ + ": key '" + section + "' outside a section");
      for (const auto& [key, value] : body) {
        if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
          throw DataError(name_ + ": unknown key '" + key + "' in [" + section + "]");
        }
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::string name_;
  std::map<std::string, std::vector<std::string>> known_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw DataError("error while writing " + path.string());
}

}  // namespace

void PipelineConfig::validate() const {
  embedding.validate();
  clustering.validate();
  incremental().validate();
  for (double w : {risk.size, risk.density, risk.indicator}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("risk weights must be nonnegative");
  }
  if (std::abs(risk.size + risk.density + risk.indicator - 1.0) > 1e-9) {
    throw std::invalid_argument("risk weights must sum to 1");
  }
}

IncrementalConfig PipelineConfig::incremental() const {
  IncrementalConfig cfg;
  cfg.embedding = embedding;
  cfg.clustering = clustering;
  cfg.decay_lambda = decay_lambda;
  cfg.nn_threshold = nn_threshold;
  cfg.online_samples_per_edge = online_samples_per_edge;
  return cfg;
}

PipelineConfig read_config(std::istream& in, const std::filesystem::path& base_dir, const std::string& name) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(name, e.line(), e.message());
  }
  PipelineConfig cfg;
  ConfigReader r(tree, name);
  r.get("embedding", "dim", cfg.embedding.dim_total);
  r.get("embedding", "negatives", cfg.embedding.negatives);
  r.get("embedding", "epochs", cfg.embedding.epochs);
  r.get("embedding", "learning_rate", cfg.embedding.initial_learning_rate);
  r.get("embedding", "samples_per_epoch", cfg.embedding.samples_per_epoch);
  r.get("embedding", "samples_per_edge", cfg.embedding.samples_per_edge);
  r.get("embedding", "seed", cfg.embedding.seed);
  r.get("embedding", "workers", cfg.embedding.workers);
  r.get("clustering", "min_cluster_size", cfg.clustering.min_cluster_size);
  r.get("clustering", "min_samples", cfg.clustering.min_samples);
  r.get("incremental", "decay_lambda", cfg.decay_lambda);
  r.get("incremental", "nn_threshold", cfg.nn_threshold);
  r.get("incremental", "online_samples_per_edge", cfg.online_samples_per_edge);
  r.get("risk", "size", cfg.risk.size);
  r.get("risk", "density", cfg.risk.density);
  r.get("risk", "indicator", cfg.risk.indicator);
  r.get("paths", "hard", cfg.hard_links);
  r.get("paths", "soft", cfg.soft_links);
  r.get("paths", "risk", cfg.risk_indicators);
  r.get("paths", "output", cfg.output_dir);
  r.check_unknown();
  cfg.hard_links = resolve(base_dir, cfg.hard_links);
  cfg.soft_links = resolve(base_dir, cfg.soft_links);
  cfg.risk_indicators = resolve(base_dir, cfg.risk_indicators);
  cfg.output_dir = resolve(base_dir, cfg.output_dir);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(name + ": " + e.what());
  }
  return cfg;
}

PipelineConfig read_config_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_config(in, path.parent_path(), path.string());
}

RiskComponents risk_score(std::span<const SuperNodeIndex> members, const CombinedEmbedding& embedding,
                          std::span<const double> supernode_risk, const RiskWeights& weights) {
  RiskComponents c;
  const auto k = members.size();
  if (k == 0) return c;
  c.size = std::min(static_cast<double>(k) / kRiskSizeCap, 1.0);

  if (k < 2) {
    c.density = 1.0;
  } else {
    double total = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        total += cosine_distance(embedding.vectors.row(members[a]), embedding.vectors.row(members[b]));
      }
    }
    const double mean = total / (static_cast<double>(k) * static_cast<double>(k - 1) / 2.0);
    c.density = std::clamp(1.0 - mean, 0.0, 1.0);
  }

  const double global_max = supernode_risk.empty() ? 0.0 : *std::max_element(supernode_risk.begin(), supernode_risk.end());
  if (global_max > 0.0) {
    double sum = 0.0;
    for (auto s : members) sum += supernode_risk[s];
    c.indicator = std::clamp(sum / static_cast<double>(k) / global_max, 0.0, 1.0);
  }
  c.score = weights.size * c.size + weights.density * c.density + weights.indicator * c.indicator;
  return c;
}

std::vector<RankedCluster> rank_clusters(const TransformedGraph& g, const CombinedEmbedding& embedding,
                                         const ClusterAssignment& assignment, const RiskWeights& weights) {
  if (assignment.labels.size() != g.num_super_nodes() ||
      static_cast<std::size_t>(embedding.rows()) != g.num_super_nodes()) {
    throw DataError("graph, embedding and clusters disagree on the number of super-nodes");
  }
  std::map<int, RankedCluster> by_label;
  for (SuperNodeIndex s = 0; s < assignment.labels.size(); ++s) {
    const int label = assignment.labels[s];
    if (label == kNoise) continue;
    auto& rc = by_label[label];
    rc.cluster_id = label;
    rc.super_nodes.push_back(s);
    rc.accounts.insert(rc.accounts.end(), g.super_nodes[s].members.begin(), g.super_nodes[s].members.end());
  }
  std::vector<double> risk(g.num_super_nodes());
  for (const auto& s : g.super_nodes) risk[s.id] = s.risk;

  std::vector<RankedCluster> ranked;
  ranked.reserve(by_label.size());
  for (auto& [label, rc] : by_label) {
    std::sort(rc.accounts.begin(), rc.accounts.end());
    rc.risk = risk_score(rc.super_nodes, embedding, risk, weights);
    ranked.push_back(std::move(rc));
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedCluster& a, const RankedCluster& b) { return a.risk.score > b.risk.score; });
  return ranked;
}

void write_report(std::ostream& out, const std::vector<RankedCluster>& ranked, const TokenMap& tokens) {
  out << "#ranked_clusters " << ranked.size() << '\n';
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& c = ranked[r];
    out << r + 1 << '\t' << c.cluster_id << '\t' << format_fixed(c.risk.score, 4) << '\t' << c.accounts.size() << '\t';
    for (std::size_t i = 0; i < c.accounts.size(); ++i) {
      if (i) out << ',';
      out << tokens.token(c.accounts[i]);
    }
    out << '\n';
  }
}

void write_risk_components(std::ostream& out, const std::vector<RankedCluster>& ranked) {
  out << "#rank\tcluster_id\tsize\tdensity\tindicator\tscore\n";
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& c = ranked[r].risk;
    out << r + 1 << '\t' << ranked[r].cluster_id << '\t' << format_significant(c.size, 17) << '\t'
        << format_significant(c.density, 17) << '\t' << format_significant(c.indicator, 17) << '\t'
        << format_significant(c.score, 17) << '\n';
  }
}

HeterogeneousGraph load_graph(const std::filesystem::path& hard, const std::filesystem::path& soft,
                              const std::filesystem::path& risk) {
  auto result = ingest_edge_files(hard, soft);
  if (!risk.empty()) {
    auto in = open_input(risk);
    read_risk_indicators(in, result.graph, risk.string());
  }
  return std::move(result.graph);
}

void save_transformed(const std::filesystem::path& path, const TransformedGraph& g, const TokenMap& tokens) {
  auto out = open_output(path);
  write_transformed(out, g, tokens);
  finish(out, path);
}

LoadedTransformedGraph load_transformed(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_transformed(in, path.string());
}

void save_embedding(const std::filesystem::path& path, const CombinedEmbedding& embedding) {
  auto out = open_output(path);
  write_embedding(out, embedding);
  finish(out, path);
}

CombinedEmbedding load_embedding(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_embedding(in, path.string());
}

void save_clusters(const std::filesystem::path& path, const ClusterAssignment& assignment) {
  auto out = open_output(path);
  write_clusters(out, assignment);
  finish(out, path);
}

ClusterAssignment load_clusters(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_clusters(in, path.string());
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw StageError("config", e.what());
  }
  if (cfg.output_dir.empty()) throw StageError("config", "no output directory");

  std::vector<std::filesystem::path> written;
  auto stage = [&](const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      std::error_code ignored;
      for (const auto& p : written) std::filesystem::remove(p, ignored);
      throw StageError(name, e.what());
    }
  };
  const auto dir = cfg.output_dir;
  auto out_path = [&](const char* file) {
    written.push_back(dir / file);
    return dir / file;
  };

  PipelineResult result;
  stage("transform", [&] {
    std::filesystem::create_directories(dir);
    const auto g = load_graph(cfg.hard_links, cfg.soft_links, cfg.risk_indicators);
    save_transformed(out_path(PipelineOutputs::transformed), transform(g), g.tokens());
    auto loaded = load_transformed(dir / PipelineOutputs::transformed);
    result.graph = std::move(loaded.graph);
    result.tokens = std::move(loaded.tokens);
  });
  stage("embed", [&] {
    save_embedding(out_path(PipelineOutputs::embedding), embed(result.graph, cfg.embedding));
    result.embedding = load_embedding(dir / PipelineOutputs::embedding);
  });
  stage("cluster", [&] {
    save_clusters(out_path(PipelineOutputs::clusters), cluster(result.embedding, cfg.clustering));
    result.assignment = load_clusters(dir / PipelineOutputs::clusters);
  });
  stage("rank", [&] {
    result.ranked = rank_clusters(result.graph, result.embedding, result.assignment, cfg.risk);
    const auto report = out_path(PipelineOutputs::report);
    auto out = open_output(report);
    write_report(out, result.ranked, result.tokens);
    finish(out, report);
    const auto components = out_path(PipelineOutputs::components);
    auto comp = open_output(components);
    write_risk_components(comp, result.ranked);
    finish(comp, components);
  });
  return result;
}

}  // namespace fraudgraph
