#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fraudgraph/dense.hpp"
#include "fraudgraph/embedding.hpp"

namespace fraudgraph {

constexpr int kNoise = -1;

struct ClusterParams {
  int min_cluster_size = 5;
  /// k for core distances; 0 means min_cluster_size.
  int min_samples = 0;

  int effective_min_samples() const { return min_samples > 0 ? min_samples : min_cluster_size; }
  void validate() const;
};

/// One edge of the condensed cluster tree. `child` is a point index when
/// below the number of points, otherwise a cluster node id.
struct CondensedEdge {
  std::uint32_t parent;
  std::uint32_t child;
  double lambda;
  std::uint32_t child_size;
};

struct ClusterAssignment {
  std::vector<int> labels;          // per point; kNoise or 0..m-1
  std::vector<double> stabilities;  // per cluster label
  std::vector<CondensedEdge> hierarchy;

  std::size_t num_clusters() const { return stabilities.size(); }
  std::size_t noise_count() const;
  std::vector<std::size_t> cluster_sizes() const;
};

/// Rows pre-normalized once so that pairwise cosine distance is a single dot
/// product. Zero rows stay zero and sit at distance 1 from every row.
class CosineSpace {
 public:
  template <typename Derived>
  explicit CosineSpace(const Eigen::MatrixBase<Derived>& points) : unit_(points) {
    for (Eigen::Index i = 0; i < unit_.rows(); ++i) {
      const double norm = unit_.row(i).norm();
      if (norm > 0.0) unit_.row(i) /= norm;
    }
  }

  std::size_t size() const { return static_cast<std::size_t>(unit_.rows()); }
  const RowMatrixd& unit_rows() const { return unit_; }

  double distance(std::size_t a, std::size_t b) const {
    if (a == b) return 0.0;
    const double d = 1.0 - unit_.row(static_cast<Eigen::Index>(a)).dot(unit_.row(static_cast<Eigen::Index>(b)));
    return std::clamp(d, 0.0, 2.0);
  }

 private:
  RowMatrixd unit_;
};

/// Distance to the k-th nearest other point. Throws std::invalid_argument
/// unless 1 <= k <= n-1.
std::vector<double> core_distances(const CosineSpace& space, int k);

inline double mutual_reachability(double distance, double core_a, double core_b) {
  return std::max({core_a, core_b, distance});
}

struct MstEdge {
  std::uint32_t a;
  std::uint32_t b;
  double weight;
};

/// Prim's algorithm over the implicit complete mutual-reachability graph.
/// Throws std::invalid_argument for fewer than two points.
std::vector<MstEdge> build_mst(const CosineSpace& space, std::span<const double> cores);

/// Density level of a merge distance: 1/d, capped for coincident points.
inline double lambda_from_distance(double distance) {
  constexpr double kMaxLambda = 1e12;
  return distance > 1.0 / kMaxLambda ? 1.0 / distance : kMaxLambda;
}

/// Condensed tree and excess-of-mass selection over an MST of `num_points`
/// points. Equal-weight edges split a cluster simultaneously. The root is
/// never selected, except when all mutual-reachability distances are zero,
/// in which case every point forms one cluster.
ClusterAssignment extract_clusters(std::span<const MstEdge> mst, std::size_t num_points, const ClusterParams& params);

/// Full HDBSCAN over cosine distance. Zero rows are labelled noise and kept
/// out of the distance computation.
ClusterAssignment cluster(const CombinedEmbedding& embedding, const ClusterParams& params);

template <typename Derived>
ClusterAssignment cluster_points(const Eigen::MatrixBase<Derived>& points, const ClusterParams& params) {
  CombinedEmbedding emb;
  emb.vectors = points;
  emb.zero_rows.assign(static_cast<std::size_t>(points.rows()), false);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    emb.zero_rows[static_cast<std::size_t>(i)] = points.row(i).squaredNorm() == 0.0;
  }
  return cluster(emb, params);
}

/// Relabels clusters so that ids follow the smallest member index.
std::vector<int> canonical_labels(std::span<const int> labels);

/// `<id> <TAB> <label>` per line, then `# clusters <m>` and `# noise <count>`.
void write_clusters(std::ostream& out, const ClusterAssignment& assignment);
/// Reads labels only; stabilities and hierarchy are not part of the file.
ClusterAssignment read_clusters(std::istream& in, const std::string& name = "clusters");

}  // namespace fraudgraph
