#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fraudgraph/alias_table.hpp"
#include "fraudgraph/dense.hpp"
#include "fraudgraph/graph.hpp"

namespace fraudgraph {

enum class ProximityOrder { first, second };

struct EmbeddingConfig {
  int dim_total = 128;
  int negatives = 5;
  int epochs = 10;
  double initial_learning_rate = 0.025;
  /// Edge draws per epoch; 0 means samples_per_edge * |E'|.
  std::size_t samples_per_epoch = 0;
  double samples_per_edge = 5.0;
  std::uint64_t seed = 1;
  int workers = 1;

  int dim_per_order() const { return dim_total / 2; }
  /// Throws std::invalid_argument on odd/non-positive dims, K < 1, T < 1,
  /// non-positive learning rate or samples_per_edge.
  void validate() const;
};

/// Vertex vectors u_i, and context vectors u'_i for second-order training
/// (empty for first order).
struct EmbeddingMatrix {
  RowMatrixd vertex;
  RowMatrixd context;

  Eigen::Index rows() const { return vertex.rows(); }
  Eigen::Index dim() const { return vertex.cols(); }
  bool all_finite() const { return vertex.allFinite() && (context.size() == 0 || context.allFinite()); }
};

struct CombinedEmbedding {
  RowMatrixd vectors;
  bool normalized = false;
  std::vector<bool> zero_rows;  // rows left at the origin

  Eigen::Index rows() const { return vectors.rows(); }
  std::size_t zero_count() const;
};

/// Numerically stable logistic function.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(sigmoid(x)) without underflow for large |x|.
inline double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

/// O_1 = -sum_{(i,j)} w_ij log sigmoid(u_i . u_j) over the vertex vectors.
/// Throws DataError when the matrix does not have one row per super-node.
double first_order_loss(const TransformedGraph& g, const EmbeddingMatrix& emb);

/// O_2 with the exact softmax, each undirected edge counted in both
/// directions. Quadratic in |V'|; meant for diagnostics on small graphs.
double second_order_loss(const TransformedGraph& g, const EmbeddingMatrix& emb);

/// log sigmoid(u'_j . u_i) + sum_n log sigmoid(-u'_n . u_i).
template <typename DerivedV, typename DerivedC>
double second_order_negative_objective(const Eigen::MatrixBase<DerivedV>& vertex_i,
                                       const Eigen::MatrixBase<DerivedC>& context_j,
                                       std::span<const Vectord> negative_contexts) {
  double value = log_sigmoid(context_j.dot(vertex_i));
  for (const auto& neg : negative_contexts) value += log_sigmoid(-neg.dot(vertex_i));
  return value;
}

struct NegativeObjectiveGradient {
  Vectord vertex;                 // d/du_i
  Vectord context;                // d/du'_j
  std::vector<Vectord> negatives; // d/du'_n, one per negative
};

/// Analytic gradient of second_order_negative_objective.
NegativeObjectiveGradient second_order_negative_gradient(const Vectord& vertex_i, const Vectord& context_j,
                                                         std::span<const Vectord> negative_contexts);

/// Draws super-nodes with probability proportional to weighted degree^(3/4).
class NegativeSampler {
 public:
  /// Throws DataError if every super-node has degree 0.
  explicit NegativeSampler(const TransformedGraph& g);
  explicit NegativeSampler(std::span<const double> degrees);

  template <typename Engine>
  SuperNodeIndex operator()(Engine& engine) const {
    return table_(engine);
  }
  const AliasTable& table() const { return table_; }

 private:
  static std::vector<double> noise_weights(std::span<const double> degrees);
  AliasTable table_;
};

/// Edge draws proportional to w'_ij.
AliasTable edge_sampling_table(const TransformedGraph& g);

struct TrainingTrace {
  /// Objective after each epoch (O_1 for first order, exact O_2 for second).
  std::vector<double> epoch_loss;
  double initial_loss = 0.0;
};

/// One SGD step on a sampled directed edge (source, target) with the given
/// negatives; `targets` is the vertex matrix for first order and the context
/// matrix for second order.
void line_update(RowMatrixd& vertex, RowMatrixd& targets, SuperNodeIndex source, SuperNodeIndex target,
                 std::span<const SuperNodeIndex> negatives, double learning_rate, Vectord& scratch);

/// LINE training with edge sampling and negative sampling. Super-nodes with
/// no incident edge end up at the zero vector. Throws DataError on an
/// edgeless graph; callers should emit zero embeddings instead.
EmbeddingMatrix train_line(const TransformedGraph& g, ProximityOrder order, const EmbeddingConfig& cfg,
                           TrainingTrace* trace = nullptr);

/// Zero vectors for every super-node (the edgeless case).
EmbeddingMatrix zero_embedding(std::size_t rows, int dim, bool with_context);

/// Row-wise [first ; second] scaled to unit L2 norm; zero rows stay zero and
/// are flagged. Throws DataError on a row-count mismatch.
CombinedEmbedding combine_and_normalize(const EmbeddingMatrix& first, const EmbeddingMatrix& second);

struct LineEmbedding {
  EmbeddingMatrix first;
  EmbeddingMatrix second;
  CombinedEmbedding combined;
};

/// Both orders at dim_total/2 each. The second order is seeded from
/// splitmix64(seed + 1). An edgeless graph yields zero vectors.
LineEmbedding embed_orders(const TransformedGraph& g, const EmbeddingConfig& cfg);

/// embed_orders(g, cfg).combined.
CombinedEmbedding embed(const TransformedGraph& g, const EmbeddingConfig& cfg);

/// `#embedding <n> <dim>` then `<id> <TAB> v_1 ... v_dim` at 8 significant digits.
void write_embedding(std::ostream& out, const CombinedEmbedding& emb);
CombinedEmbedding read_embedding(std::istream& in, const std::string& name = "embedding");

}  // namespace fraudgraph
