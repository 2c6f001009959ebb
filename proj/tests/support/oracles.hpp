#pragma once

// Independent reference implementations used by the tests. They favour
// obviousness over speed and share no code with the library beyond the
// data types and CosineSpace (the metric itself).

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "fraudgraph/clustering.hpp"
#include "fraudgraph/graph.hpp"
#include "fraudgraph/synthetic.hpp"

namespace oracle {

using fraudgraph::AccountIndex;

/// Components of the hard-link graph by breadth-first search, as sorted
/// member lists ordered by smallest member.
std::vector<std::vector<AccountIndex>> bfs_components(const fraudgraph::HeterogeneousGraph& g);

/// Sum of w_uv over soft links with u in S_i, v in S_j (or the reverse),
/// for every pair i < j of the given components. Pairs with no link are
/// absent; links inside a component are ignored.
std::map<std::pair<std::uint32_t, std::uint32_t>, double> aggregate_weights(
    const fraudgraph::HeterogeneousGraph& g, const std::vector<std::vector<AccountIndex>>& components);

/// Brute-force HDBSCAN: explicit all-pairs matrix, full-sort core
/// distances, Kruskal MST, recursive condensed tree, direct stability.
/// Same conventions as the library: zero rows are noise, k clamps to n-1,
/// equal-weight edges are removed together, lambda = 1/d capped at 1e12,
/// ties keep the parent, the root is never selected, and an all-zero MST
/// with n >= m is one cluster. Labels are canonical by smallest member.
std::vector<int> hdbscan(const fraudgraph::RowMatrixd& points, const fraudgraph::ClusterParams& params);

/// Total weight of the Kruskal MST over the mutual-reachability matrix.
double kruskal_mst_weight(const fraudgraph::CosineSpace& space, const std::vector<double>& cores);

/// Core distances by sorting each row of the all-pairs matrix.
std::vector<double> core_distances(const fraudgraph::CosineSpace& space, int k);

struct Metrics {
  double coverage = -1;  // -1 when undefined
  double precision = -1;
  double purity = -1;
};

/// Metrics straight from per-account labels.
Metrics metrics(const std::vector<int>& account_labels, const fraudgraph::GroundTruth& truth);

/// Index of the cosine-nearest row of `candidates` (first on ties), or -1.
int nearest(const fraudgraph::Vectord& query, const std::vector<fraudgraph::Vectord>& candidates);

/// A random heterogeneous graph: `n` accounts, hard links forming chains
/// and random pairs, soft links with weights drawn from {0.5, 1, 1.5, 2}.
fraudgraph::HeterogeneousGraph random_graph(std::mt19937_64& rng, std::size_t n, std::size_t hard, std::size_t soft);

}  // namespace oracle
