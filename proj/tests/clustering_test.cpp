#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fraudgraph/clustering.hpp"
#include "fraudgraph/dense.hpp"
#include "oracles.hpp"

namespace fraudgraph {
namespace {

RowMatrixd random_points(std::mt19937_64& rng, std::size_t n, int dim) {
  std::normal_distribution<double> normal;
  RowMatrixd p(static_cast<Eigen::Index>(n), dim);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (int d = 0; d < dim; ++d) p(i, d) = normal(rng);
  }
  return p;
}

/// `blobs` tight groups of `per` points around random unit centres.
RowMatrixd blob_points(std::mt19937_64& rng, int blobs, int per, int dim, double spread) {
  std::normal_distribution<double> normal;
  RowMatrixd p(blobs * per, dim);
  for (int b = 0; b < blobs; ++b) {
    Vectord centre(dim);
    for (int d = 0; d < dim; ++d) centre[d] = normal(rng);
    for (int k = 0; k < per; ++k) {
      for (int d = 0; d < dim; ++d) p(b * per + k, d) = centre[d] + spread * normal(rng);
    }
  }
  return p;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  return canonical_labels(a) == canonical_labels(b);
}

TEST(CosineDistance, Examples) {
  Vectord a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  EXPECT_DOUBLE_EQ(cosine_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, b), 1.0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, Vectord(-a)), 2.0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, Vectord(Vectord::Zero(2))), 1.0);
  Eigen::Vector2f af(1, 0), bf(1, 1);
  EXPECT_NEAR(cosine_distance(af, bf), 1.0f - std::sqrt(0.5f), 1e-6f);
}

TEST(CoreDistances, HandEnumeratedExample) {
  // Unit vectors at angles 0, 90 and 180 degrees: pairwise {1, 1, 2}.
  RowMatrixd p(3, 2);
  p << 1, 0, 0, 1, -1, 0;
  const CosineSpace space(p);
  EXPECT_EQ(core_distances(space, 1), (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(core_distances(space, 2), (std::vector<double>{2.0, 1.0, 2.0}));
  EXPECT_THROW(core_distances(space, 3), std::invalid_argument);
  EXPECT_THROW(core_distances(space, 0), std::invalid_argument);
}

TEST(CoreDistances, DuplicatedPairHasZeroCore) {
  RowMatrixd p(3, 2);
  p << 1, 1, 2, 2, -1, 0.5;
  const auto cores = core_distances(CosineSpace(p), 1);
  // Parallel rows are at distance zero up to rounding of the normalization.
  EXPECT_NEAR(cores[0], 0.0, 1e-15);
  EXPECT_NEAR(cores[1], 0.0, 1e-15);
}

TEST(CoreDistances, MatchSortOracle) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto n = 3 + rng() % 150;
    const CosineSpace space(random_points(rng, n, 5));
    const int k = 1 + static_cast<int>(rng() % (n - 1));
    EXPECT_EQ(core_distances(space, k), oracle::core_distances(space, k));
  }
}

TEST(MutualReachability, ExamplesAndProperties) {
  EXPECT_EQ(mutual_reachability(0.9, 0.2, 0.3), 0.9);
  EXPECT_EQ(mutual_reachability(0.1, 0.5, 0.3), 0.5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 2);
  for (int i = 0; i < 1000; ++i) {
    const double d = u(rng), a = u(rng), b = u(rng);
    EXPECT_EQ(mutual_reachability(d, a, b), mutual_reachability(d, b, a));
    EXPECT_GE(mutual_reachability(d, a, b), d);
  }
}

TEST(Mst, TwoPointsAndErrors) {
  RowMatrixd p(2, 2);
  p << 1, 0, 1, 1;
  const CosineSpace space(p);
  const std::vector<double> cores{0.5, 0.1};
  const auto mst = build_mst(space, cores);
  ASSERT_EQ(mst.size(), 1u);
  EXPECT_DOUBLE_EQ(mst[0].weight, std::max(0.5, space.distance(0, 1)));
  RowMatrixd one(1, 2);
  one << 1, 0;
  EXPECT_THROW(build_mst(CosineSpace(one), std::vector<double>{0.0}), std::invalid_argument);
}

TEST(Mst, SpanningTreeWithKruskalWeight) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto n = 2 + rng() % 200;
    const CosineSpace space(random_points(rng, n, 4));
    const int k = std::min<int>(5, static_cast<int>(n) - 1);
    const auto cores = core_distances(space, k);
    const auto mst = build_mst(space, cores);
    ASSERT_EQ(mst.size(), n - 1);
    UnionFind uf(n);
    double total = 0.0;
    for (const auto& e : mst) {
      EXPECT_TRUE(uf.unite(e.a, e.b));
      total += e.weight;
    }
    EXPECT_EQ(uf.component_count(), 1u);
    EXPECT_NEAR(total, oracle::kruskal_mst_weight(space, cores), 1e-9);
  }
}

TEST(Cluster, TwoSeparatedBlobs) {
  // 20 points each around e1 and e2: intra distance < 0.1, inter near 1.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  RowMatrixd p(40, 3);
  for (int i = 0; i < 40; ++i) {
    const bool first = i < 20;
    p.row(i) << (first ? 1.0 : 0.0) + jitter(rng), (first ? 0.0 : 1.0) + jitter(rng), jitter(rng);
  }
  ClusterParams params;
  const auto a = cluster_points(p, params);
  EXPECT_EQ(a.num_clusters(), 2u);
  EXPECT_EQ(a.noise_count(), 0u);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(a.labels[static_cast<std::size_t>(i)], i < 20 ? 0 : 1);
}

TEST(Cluster, UniformSphereIsMostlyNoise) {
  std::mt19937_64 rng(21);
  ClusterParams params;
  params.min_cluster_size = 10;
  const auto a = cluster_points(random_points(rng, 30, 16), params);
  EXPECT_GE(a.noise_count(), 15u);
}

TEST(Cluster, IdenticalPointsFormOneCluster) {
  RowMatrixd p = RowMatrixd::Constant(8, 3, 0.5);
  const auto a = cluster_points(p, ClusterParams{});
  EXPECT_EQ(a.num_clusters(), 1u);
  EXPECT_EQ(a.noise_count(), 0u);
}

TEST(Cluster, ZeroRowsAreNoiseAndExcluded) {
  std::mt19937_64 rng(2);
  RowMatrixd p = blob_points(rng, 2, 10, 6, 0.05);
  RowMatrixd with_zeros(22, 6);
  with_zeros << p.topRows(10), RowMatrixd::Zero(1, 6), p.bottomRows(10), RowMatrixd::Zero(1, 6);
  const auto a = cluster_points(with_zeros, ClusterParams{});
  EXPECT_EQ(a.labels[10], kNoise);
  EXPECT_EQ(a.labels[21], kNoise);
  const auto b = cluster_points(p, ClusterParams{});
  std::vector<int> kept;
  for (std::size_t i = 0; i < 22; ++i) {
    if (i != 10 && i != 21) kept.push_back(a.labels[i]);
  }
  EXPECT_EQ(kept, b.labels);
}

TEST(Cluster, TooFewPointsAreNoise) {
  RowMatrixd p(3, 2);
  p << 1, 0, 1, 0.1, 1, 0.2;
  const auto a = cluster_points(p, ClusterParams{});
  EXPECT_EQ(a.noise_count(), 3u);
  RowMatrixd one(1, 2);
  one << 1, 0;
  EXPECT_EQ(cluster_points(one, ClusterParams{}).labels, std::vector<int>{kNoise});
}

TEST(Cluster, MatchesBruteForceOracle) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 40; ++trial) {
    const int blobs = 1 + static_cast<int>(rng() % 5);
    const int per = 2 + static_cast<int>(rng() % 30);
    const double spread = 0.05 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto p = blob_points(rng, blobs, per, 3 + static_cast<int>(rng() % 6), spread);
    ClusterParams params;
    params.min_cluster_size = 2 + static_cast<int>(rng() % 8);
    params.min_samples = static_cast<int>(rng() % 6);
    const auto got = cluster_points(p, params);
    EXPECT_EQ(got.labels, oracle::hdbscan(p, params)) << "trial " << trial;
  }
}

TEST(Cluster, TiedDistancesMatchOracle) {
  // Points on a coarse grid of directions give many equal distances.
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = 10 + rng() % 60;
    RowMatrixd p(static_cast<Eigen::Index>(n), 3);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      p.row(i) << static_cast<double>(rng() % 3), static_cast<double>(rng() % 3), 1.0;
    }
    ClusterParams params;
    params.min_cluster_size = 2 + static_cast<int>(rng() % 5);
    EXPECT_EQ(cluster_points(p, params).labels, oracle::hdbscan(p, params)) << "trial " << trial;
  }
}

TEST(Cluster, PermutationInvariant) {
  std::mt19937_64 rng(55);
  const auto p = blob_points(rng, 4, 15, 8, 0.3);
  const ClusterParams params;
  const auto base = cluster_points(p, params);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p.rows()));
  std::iota(order.begin(), order.end(), 0);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    RowMatrixd q(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) q.row(i) = p.row(order[static_cast<std::size_t>(i)]);
    const auto shuffled = cluster_points(q, params);
    std::vector<int> restored(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) restored[static_cast<std::size_t>(order[i])] = shuffled.labels[i];
    EXPECT_TRUE(same_partition(restored, base.labels));
  }
}

TEST(Cluster, SizeFloorAndLabelRange) {
  std::mt19937_64 rng(66);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = blob_points(rng, 6, 8, 5, 0.4);
    ClusterParams params;
    params.min_cluster_size = 3 + trial % 5;
    const auto a = cluster_points(p, params);
    for (auto size : a.cluster_sizes()) EXPECT_GE(size, static_cast<std::size_t>(params.min_cluster_size));
    for (int l : a.labels) EXPECT_TRUE(l == kNoise || (l >= 0 && l < static_cast<int>(a.num_clusters())));
    EXPECT_EQ(a.labels, canonical_labels(a.labels));
    for (double s : a.stabilities) EXPECT_GE(s, 0.0);
  }
}

TEST(ClusterParams, Validation) {
  ClusterParams p;
  EXPECT_EQ(p.effective_min_samples(), 5);
  p.min_cluster_size = 1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Lambda, CapsCoincidentPoints) {
  EXPECT_DOUBLE_EQ(lambda_from_distance(0.5), 2.0);
  EXPECT_DOUBLE_EQ(lambda_from_distance(0.0), 1e12);
}

TEST(ClusterFile, RoundTrips) {
  ClusterAssignment a;
  a.labels = {0, -1, 1, 0};
  a.stabilities = {1.0, 2.0};
  std::stringstream buffer;
  write_clusters(buffer, a);
  EXPECT_NE(buffer.str().find("# clusters 2"), std::string::npos);
  EXPECT_NE(buffer.str().find("# noise 1"), std::string::npos);
  const auto back = read_clusters(buffer);
  EXPECT_EQ(back.labels, a.labels);
  EXPECT_EQ(back.num_clusters(), 2u);
}

}  // namespace
}  // namespace fraudgraph
