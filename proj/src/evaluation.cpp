#include "fraudgraph/evaluation.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <stdexcept>

#include "fraudgraph/io.hpp"

namespace fraudgraph {

std::vector<int> expand_to_accounts(std::span<const int> supernode_labels, std::span<const SuperNodeIndex> membership) {
  std::vector<int> out(membership.size());
  for (std::size_t u = 0; u < membership.size(); ++u) {
    if (membership[u] >= supernode_labels.size()) throw std::out_of_range("membership refers to a missing super-node");
    out[u] = supernode_labels[membership[u]];
  }
  return out;
}

MetricsReport evaluate(std::span<const int> supernode_labels, const GroundTruth& truth,
                       std::span<const SuperNodeIndex> membership) {
  const auto labels = expand_to_accounts(supernode_labels, membership);
  MetricsReport r;
  r.total_fraud = truth.total_fraud();

  // cluster label -> (ring label -> count); legit accounts are singletons.
  std::map<int, std::map<std::int64_t, std::size_t>> histogram;
  std::map<int, std::size_t> cluster_size;
  for (std::size_t u = 0; u < labels.size(); ++u) {
    if (labels[u] < 0) continue;
    ++r.clustered_accounts;
    ++cluster_size[labels[u]];
    const auto it = truth.ring_of.find(static_cast<AccountIndex>(u));
    if (it != truth.ring_of.end()) {
      ++r.detected_fraud;
      ++histogram[labels[u]][static_cast<std::int64_t>(it->second)];
    } else {
      ++histogram[labels[u]][-1 - static_cast<std::int64_t>(u)];
    }
  }
  r.clusters = cluster_size.size();

  if (r.total_fraud > 0) r.coverage = static_cast<double>(r.detected_fraud) / static_cast<double>(r.total_fraud);
  if (r.clustered_accounts > 0) {
    r.precision = static_cast<double>(r.detected_fraud) / static_cast<double>(r.clustered_accounts);
  }
  if (r.clusters > 0) {
    double sum = 0.0;
    for (const auto& [label, counts] : histogram) {
      std::size_t top = 0;
      for (const auto& [ring, c] : counts) top = std::max(top, c);
      sum += static_cast<double>(top) / static_cast<double>(cluster_size[label]);
    }
    r.purity = sum / static_cast<double>(r.clusters);
  }
  return r;
}

std::optional<double> coverage(std::span<const int> supernode_labels, const GroundTruth& truth,
                               std::span<const SuperNodeIndex> membership) {
  return evaluate(supernode_labels, truth, membership).coverage;
}

std::optional<double> precision(std::span<const int> supernode_labels, const GroundTruth& truth,
                                std::span<const SuperNodeIndex> membership) {
  return evaluate(supernode_labels, truth, membership).precision;
}

std::optional<double> purity(std::span<const int> supernode_labels, const GroundTruth& truth,
                             std::span<const SuperNodeIndex> membership) {
  return evaluate(supernode_labels, truth, membership).purity;
}

namespace {

std::string metric_text(const std::optional<double>& v, int decimals) {
  return v ? format_fixed(*v, decimals) : std::string("n/a");
}

}  // namespace

void write_metrics_text(std::ostream& out, const MetricsReport& r) {
  out << "coverage=" << metric_text(r.coverage, 4) << '\n';
  out << "precision=" << metric_text(r.precision, 4) << '\n';
  out << "purity=" << metric_text(r.purity, 4) << '\n';
}

void write_metrics_kv(std::ostream& out, const MetricsReport& r) {
  auto full = [](const std::optional<double>& v) { return v ? format_significant(*v, 17) : std::string("n/a"); };
  out << "coverage=" << full(r.coverage) << '\n';
  out << "precision=" << full(r.precision) << '\n';
  out << "purity=" << full(r.purity) << '\n';
  out << "clusters=" << r.clusters << '\n';
  out << "clustered_accounts=" << r.clustered_accounts << '\n';
  out << "detected_fraud=" << r.detected_fraud << '\n';
  out << "total_fraud=" << r.total_fraud << '\n';
}

TransformStats transform_stats(const HeterogeneousGraph& g, const TransformedGraph& t) {
  TransformStats s;
  s.nodes_before = g.num_accounts();
  s.nodes_after = t.num_super_nodes();
  s.edges_before = g.soft_links().size();
  s.edges_after = t.num_edges();
  auto avg_degree = [](std::size_t e, std::size_t v) { return v ? 2.0 * static_cast<double>(e) / static_cast<double>(v) : 0.0; };
  auto density = [](std::size_t e, std::size_t v) {
    return v > 1 ? 2.0 * static_cast<double>(e) / (static_cast<double>(v) * static_cast<double>(v - 1)) : 0.0;
  };
  s.avg_degree_before = avg_degree(s.edges_before, s.nodes_before);
  s.avg_degree_after = avg_degree(s.edges_after, s.nodes_after);
  s.density_before = density(s.edges_before, s.nodes_before);
  s.density_after = density(s.edges_after, s.nodes_after);
  if (s.nodes_before) s.node_reduction = static_cast<double>(s.nodes_after) / static_cast<double>(s.nodes_before);
  if (s.edges_before) s.edge_reduction = static_cast<double>(s.edges_after) / static_cast<double>(s.edges_before);

  std::size_t singles = 0, small = 0, large = 0;
  for (const auto& node : t.super_nodes) {
    const auto size = node.size();
    s.max_size = std::max(s.max_size, size);
    if (s.size_histogram.size() <= size) s.size_histogram.resize(size + 1, 0);
    ++s.size_histogram[size];
    if (size == 1) {
      ++singles;
    } else if (size <= 5) {
      ++small;
    } else {
      ++large;
    }
  }
  if (s.nodes_after) {
    const auto k = static_cast<double>(s.nodes_after);
    s.singleton_fraction = static_cast<double>(singles) / k;
    s.small_fraction = static_cast<double>(small) / k;
    s.large_fraction = static_cast<double>(large) / k;
  }
  return s;
}

void write_transform_stats(std::ostream& out, const TransformStats& s) {
  out << "nodes_before=" << s.nodes_before << '\n'
      << "nodes_after=" << s.nodes_after << '\n'
      << "edges_before=" << s.edges_before << '\n'
      << "edges_after=" << s.edges_after << '\n'
      << "avg_degree_before=" << format_fixed(s.avg_degree_before, 4) << '\n'
      << "avg_degree_after=" << format_fixed(s.avg_degree_after, 4) << '\n'
      << "density_before=" << format_significant(s.density_before, 6) << '\n'
      << "density_after=" << format_significant(s.density_after, 6) << '\n'
      << "node_reduction=" << format_fixed(s.node_reduction, 4) << '\n'
      << "edge_reduction=" << format_fixed(s.edge_reduction, 4) << '\n'
      << "singleton_fraction=" << format_fixed(s.singleton_fraction, 4) << '\n'
      << "size_2_5_fraction=" << format_fixed(s.small_fraction, 4) << '\n'
      << "size_gt5_fraction=" << format_fixed(s.large_fraction, 4) << '\n'
      << "max_supernode_size=" << s.max_size << '\n';
  for (std::size_t size = 1; size < s.size_histogram.size(); ++size) {
    if (s.size_histogram[size]) out << "size_count." << size << '=' << s.size_histogram[size] << '\n';
  }
}

}  // namespace fraudgraph
