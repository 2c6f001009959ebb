#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fraudgraph/graph.hpp"
#include "fraudgraph/synthetic.hpp"

namespace fraudgraph {

/// Per-account cluster labels: each account inherits its super-node's label.
std::vector<int> expand_to_accounts(std::span<const int> supernode_labels, std::span<const SuperNodeIndex> membership);

// The metrics below return std::nullopt when undefined (no fraud accounts,
// no clustered accounts, no clusters).

/// Fraud accounts inside any non-noise cluster / all known fraud accounts.
std::optional<double> coverage(std::span<const int> supernode_labels, const GroundTruth& truth,
                               std::span<const SuperNodeIndex> membership);

/// Fraud accounts inside clusters / all accounts inside clusters.
std::optional<double> precision(std::span<const int> supernode_labels, const GroundTruth& truth,
                                std::span<const SuperNodeIndex> membership);

/// Mean over clusters of the largest ring-label share. Every legitimate
/// account counts as its own label.
std::optional<double> purity(std::span<const int> supernode_labels, const GroundTruth& truth,
                             std::span<const SuperNodeIndex> membership);

struct MetricsReport {
  std::optional<double> coverage;
  std::optional<double> precision;
  std::optional<double> purity;
  std::size_t clusters = 0;
  std::size_t clustered_accounts = 0;
  std::size_t detected_fraud = 0;
  std::size_t total_fraud = 0;
};

MetricsReport evaluate(std::span<const int> supernode_labels, const GroundTruth& truth,
                       std::span<const SuperNodeIndex> membership);

/// `coverage=0.1234` lines (4 decimals, `n/a` when undefined).
void write_metrics_text(std::ostream& out, const MetricsReport& report);
/// Flat key=value with full precision and the underlying counts.
void write_metrics_kv(std::ostream& out, const MetricsReport& report);

struct TransformStats {
  std::size_t nodes_before = 0;
  std::size_t nodes_after = 0;
  std::size_t edges_before = 0;  // soft links
  std::size_t edges_after = 0;
  double avg_degree_before = 0.0;
  double avg_degree_after = 0.0;
  double density_before = 0.0;
  double density_after = 0.0;
  double node_reduction = 1.0;  // after / before
  double edge_reduction = 1.0;
  double singleton_fraction = 0.0;
  double small_fraction = 0.0;  // sizes 2-5
  double large_fraction = 0.0;  // sizes > 5
  std::size_t max_size = 0;
  std::vector<std::size_t> size_histogram;  // index = super-node size
};

TransformStats transform_stats(const HeterogeneousGraph& g, const TransformedGraph& t);
void write_transform_stats(std::ostream& out, const TransformStats& stats);

}  // namespace fraudgraph
