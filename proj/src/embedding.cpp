#include "fraudgraph/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fraudgraph/errors.hpp"
#include "fraudgraph/io.hpp"

namespace fraudgraph {

namespace {

void check_rows(const TransformedGraph& g, const EmbeddingMatrix& emb) {
  if (static_cast<std::size_t>(emb.rows()) != g.num_super_nodes()) {
    throw DataError("embedding has " + std::to_string(emb.rows()) + " rows for " +
                    std::to_string(g.num_super_nodes()) + " super-nodes");
  }
}

}  // namespace

void EmbeddingConfig::validate() const {
  if (dim_total <= 0 || dim_total % 2 != 0) throw std::invalid_argument("embedding dimension must be positive and even");
  if (negatives < 1) throw std::invalid_argument("negative samples must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(initial_learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (!(samples_per_edge > 0.0) || !std::isfinite(samples_per_edge)) throw std::invalid_argument("samples_per_edge must be positive");
}

std::size_t CombinedEmbedding::zero_count() const {
  return static_cast<std::size_t>(std::count(zero_rows.begin(), zero_rows.end(), true));
}

double first_order_loss(const TransformedGraph& g, const EmbeddingMatrix& emb) {
  check_rows(g, emb);
  double loss = 0.0;
  for (const auto& e : g.edges) {
    loss -= e.weight * log_sigmoid(emb.vertex.row(e.i).dot(emb.vertex.row(e.j)));
  }
  return loss;
}

double second_order_loss(const TransformedGraph& g, const EmbeddingMatrix& emb) {
  check_rows(g, emb);
  if (emb.context.rows() != emb.vertex.rows()) throw DataError("second-order loss needs context vectors");
  // scores(i, k) = u'_k . u_i
  const RowMatrixd scores = emb.vertex * emb.context.transpose();
  Vectord log_norm(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double peak = scores.row(i).maxCoeff();
    log_norm[i] = peak + std::log((scores.row(i).array() - peak).exp().sum());
  }
  double loss = 0.0;
  for (const auto& e : g.edges) {
    loss -= e.weight * (scores(e.i, e.j) - log_norm[e.i]);
    loss -= e.weight * (scores(e.j, e.i) - log_norm[e.j]);
  }
  return loss;
}

NegativeObjectiveGradient second_order_negative_gradient(const Vectord& vertex_i, const Vectord& context_j,
                                                         std::span<const Vectord> negative_contexts) {
  NegativeObjectiveGradient grad;
  const double positive = 1.0 - sigmoid(context_j.dot(vertex_i));
  grad.vertex = positive * context_j;
  grad.context = positive * vertex_i;
  grad.negatives.reserve(negative_contexts.size());
  for (const auto& neg : negative_contexts) {
    const double s = sigmoid(neg.dot(vertex_i));
    grad.vertex -= s * neg;
    grad.negatives.push_back(-s * vertex_i);
  }
  return grad;
}

std::vector<double> NegativeSampler::noise_weights(std::span<const double> degrees) {
  std::vector<double> weights(degrees.size());
  for (std::size_t i = 0; i < degrees.size(); ++i) weights[i] = degrees[i] > 0.0 ? std::pow(degrees[i], 0.75) : 0.0;
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw DataError("negative sampler: every super-node has zero degree");
  return weights;
}

NegativeSampler::NegativeSampler(std::span<const double> degrees) : table_(noise_weights(degrees)) {}

NegativeSampler::NegativeSampler(const TransformedGraph& g) : NegativeSampler(g.weighted_degrees()) {}

AliasTable edge_sampling_table(const TransformedGraph& g) {
  std::vector<double> weights;
  weights.reserve(g.edges.size());
  for (const auto& e : g.edges) weights.push_back(e.weight);
  return AliasTable(weights);
}

void line_update(RowMatrixd& vertex, RowMatrixd& targets, SuperNodeIndex source, SuperNodeIndex target,
                 std::span<const SuperNodeIndex> negatives, double learning_rate, Vectord& scratch) {
  scratch.setZero(vertex.cols());
  auto step = [&](SuperNodeIndex t, double label) {
    const double score = vertex.row(source).dot(targets.row(t));
    const double g = (label - sigmoid(score)) * learning_rate;
    scratch.noalias() += g * targets.row(t).transpose();
    targets.row(t).noalias() += g * vertex.row(source);
  };
  step(target, 1.0);
  for (auto n : negatives) {
    if (n == target || n == source) continue;
    step(n, 0.0);
  }
  vertex.row(source).noalias() += scratch.transpose();
}

EmbeddingMatrix zero_embedding(std::size_t rows, int dim, bool with_context) {
  EmbeddingMatrix emb;
  emb.vertex = RowMatrixd::Zero(static_cast<Eigen::Index>(rows), dim);
  if (with_context) emb.context = RowMatrixd::Zero(static_cast<Eigen::Index>(rows), dim);
  return emb;
}

EmbeddingMatrix train_line(const TransformedGraph& g, ProximityOrder order, const EmbeddingConfig& cfg,
                           TrainingTrace* trace) {
  cfg.validate();
  if (g.edges.empty()) {
    throw DataError("transformed graph has no edges; emit zero embeddings for its super-nodes instead of training");
  }
  const auto n = static_cast<Eigen::Index>(g.num_super_nodes());
  const int dim = cfg.dim_per_order();
  const bool second = order == ProximityOrder::second;

  EmbeddingMatrix emb;
  emb.vertex.resize(n, dim);
  {
    std::mt19937_64 init_rng(splitmix64(cfg.seed));
    const double scale = 0.5 / dim;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int d = 0; d < dim; ++d) emb.vertex(i, d) = (2.0 * uniform_unit(init_rng) - 1.0) * scale;
    }
  }
  if (second) emb.context = RowMatrixd::Zero(n, dim);

  const auto degrees = g.weighted_degrees();
  const AliasTable edge_table = edge_sampling_table(g);
  const NegativeSampler negatives(degrees);

  const std::size_t per_epoch =
      cfg.samples_per_epoch ? cfg.samples_per_epoch
                            : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.samples_per_edge *
                                                                                          static_cast<double>(g.edges.size()))));
  const std::size_t total = per_epoch * static_cast<std::size_t>(cfg.epochs);
  const double lr0 = cfg.initial_learning_rate;

  auto loss_of = [&] { return second ? second_order_loss(g, emb) : first_order_loss(g, emb); };
  if (trace) {
    trace->epoch_loss.clear();
    trace->initial_loss = loss_of();
  }

  RowMatrixd& targets = second ? emb.context : emb.vertex;

  auto run_samples = [&](std::mt19937_64& rng, std::size_t begin, std::size_t end, std::size_t stride) {
    std::vector<SuperNodeIndex> drawn(static_cast<std::size_t>(cfg.negatives));
    Vectord scratch(dim);
    for (std::size_t t = begin; t < end; t += stride) {
      const double lr = lr0 * (1.0 - 0.99 * static_cast<double>(t) / static_cast<double>(total));
      const auto& e = g.edges[edge_table(rng)];
      const bool flip = (rng() >> 63) != 0;
      const SuperNodeIndex source = flip ? e.j : e.i;
      const SuperNodeIndex target = flip ? e.i : e.j;
      for (auto& s : drawn) s = negatives(rng);
      line_update(emb.vertex, targets, source, target, drawn, lr, scratch);
    }
  };

  std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x5bd1e995ULL));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::size_t begin = per_epoch * static_cast<std::size_t>(epoch);
    const std::size_t end = begin + per_epoch;
    if (cfg.workers == 1) {
      run_samples(rng, begin, end, 1);
    } else {
      // Lock-free shared updates; lost writes are tolerated.
      std::vector<std::thread> pool;
      for (int w = 0; w < cfg.workers; ++w) {
        pool.emplace_back([&, w] {
          std::mt19937_64 local(splitmix64(cfg.seed + 0x1000193ULL * static_cast<std::uint64_t>(w + 1) +
                                           static_cast<std::uint64_t>(epoch)));
          run_samples(local, begin + static_cast<std::size_t>(w), end, static_cast<std::size_t>(cfg.workers));
        });
      }
      for (auto& t : pool) t.join();
    }
    if (trace) trace->epoch_loss.push_back(loss_of());
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    if (degrees[static_cast<std::size_t>(i)] <= 0.0) {
      emb.vertex.row(i).setZero();
      if (second) emb.context.row(i).setZero();
    }
  }
  return emb;
}

CombinedEmbedding combine_and_normalize(const EmbeddingMatrix& first, const EmbeddingMatrix& second) {
  if (first.rows() != second.rows()) throw DataError("first- and second-order embeddings differ in row count");
  CombinedEmbedding out;
  const auto n = first.rows();
  out.vectors.resize(n, first.dim() + second.dim());
  out.vectors.leftCols(first.dim()) = first.vertex;
  out.vectors.rightCols(second.dim()) = second.vertex;
  out.zero_rows.assign(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = out.vectors.row(i).norm();
    if (norm > 0.0) {
      out.vectors.row(i) /= norm;
    } else {
      out.zero_rows[static_cast<std::size_t>(i)] = true;
    }
  }
  out.normalized = true;
  return out;
}

LineEmbedding embed_orders(const TransformedGraph& g, const EmbeddingConfig& cfg) {
  cfg.validate();
  const auto n = g.num_super_nodes();
  LineEmbedding out;
  if (g.edges.empty()) {
    out.first = zero_embedding(n, cfg.dim_per_order(), false);
    out.second = zero_embedding(n, cfg.dim_per_order(), true);
  } else {
    EmbeddingConfig second_cfg = cfg;
    second_cfg.seed = splitmix64(cfg.seed + 1);
    out.first = train_line(g, ProximityOrder::first, cfg);
    out.second = train_line(g, ProximityOrder::second, second_cfg);
  }
  out.combined = combine_and_normalize(out.first, out.second);
  return out;
}

CombinedEmbedding embed(const TransformedGraph& g, const EmbeddingConfig& cfg) {
  return embed_orders(g, cfg).combined;
}

void write_embedding(std::ostream& out, const CombinedEmbedding& emb) {
  out << "#embedding " << emb.vectors.rows() << ' ' << emb.vectors.cols() << '\n';
  for (Eigen::Index i = 0; i < emb.vectors.rows(); ++i) {
    out << i << '\t';
    for (Eigen::Index d = 0; d < emb.vectors.cols(); ++d) {
      if (d) out << ' ';
      out << format_significant(emb.vectors(i, d), 8);
    }
    out << '\n';
  }
}

CombinedEmbedding read_embedding(std::istream& in, const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  long long rows = -1;
  long long cols = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("#embedding ", 0) == 0) {
      std::istringstream header(line.substr(11));
      if (!(header >> rows >> cols) || rows < 0 || cols <= 0) throw ParseError(name, lineno, "bad #embedding header");
      break;
    }
    if (!split_record(line).empty()) throw ParseError(name, lineno, "record before #embedding header");
  }
  if (rows < 0) throw ParseError(name, lineno, "missing #embedding header");

  CombinedEmbedding emb;
  emb.vectors = RowMatrixd::Zero(rows, cols);
  std::vector<bool> seen(static_cast<std::size_t>(rows), false);
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_record(line);
    if (fields.empty()) continue;
    if (fields.size() != 2) throw ParseError(name, lineno, "expected <id> <TAB> <values>");
    const auto id = parse_integer(fields[0], name, lineno);
    if (id < 0 || id >= rows) throw ParseError(name, lineno, "super-node id out of range");
    if (seen[static_cast<std::size_t>(id)]) throw ParseError(name, lineno, "duplicate super-node id");
    seen[static_cast<std::size_t>(id)] = true;
    std::istringstream values(fields[1]);
    std::string tok;
    long long d = 0;
    while (values >> tok) {
      if (d >= cols) throw ParseError(name, lineno, "too many values");
      emb.vectors(id, d++) = parse_double(tok, name, lineno);
    }
    if (d != cols) throw ParseError(name, lineno, "expected " + std::to_string(cols) + " values");
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw DataError(name + ": missing row for super-node " + std::to_string(i));
  }
  emb.zero_rows.assign(static_cast<std::size_t>(rows), false);
  emb.normalized = true;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double norm = emb.vectors.row(i).norm();
    if (norm == 0.0) {
      emb.zero_rows[static_cast<std::size_t>(i)] = true;
    } else if (std::abs(norm - 1.0) > 1e-6) {
      emb.normalized = false;
    }
  }
  return emb;
}

}  // namespace fraudgraph
