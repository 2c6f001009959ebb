#include "fraudgraph/clustering.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "fraudgraph/errors.hpp"
#include "fraudgraph/graph.hpp"
#include "fraudgraph/io.hpp"

namespace fraudgraph {

void ClusterParams::validate() const {
  if (min_cluster_size < 2) throw std::invalid_argument("min_cluster_size must be >= 2");
  if (min_samples < 0) throw std::invalid_argument("min_samples must be >= 1 (or 0 for the default)");
}

std::size_t ClusterAssignment::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

std::vector<std::size_t> ClusterAssignment::cluster_sizes() const {
  std::vector<std::size_t> sizes(num_clusters(), 0);
  for (int l : labels) {
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  }
  return sizes;
}

std::vector<double> core_distances(const CosineSpace& space, int k) {
  const std::size_t n = space.size();
  if (k < 1 || static_cast<std::size_t>(k) >= n) {
    throw std::invalid_argument("core distance needs 1 <= k <= n-1 (k=" + std::to_string(k) +
                                ", n=" + std::to_string(n) + ")");
  }
  std::vector<double> cores(n);
  std::vector<double> row(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row[c++] = space.distance(i, j);
    }
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    cores[i] = row[static_cast<std::size_t>(k - 1)];
  }
  return cores;
}

std::vector<MstEdge> build_mst(const CosineSpace& space, std::span<const double> cores) {
  const std::size_t n = space.size();
  if (n < 2) throw std::invalid_argument("minimum spanning tree needs at least two points");
  if (cores.size() != n) throw std::invalid_argument("core distance count does not match point count");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(n, kInf);
  std::vector<std::uint32_t> from(n, 0);
  std::vector<bool> in_tree(n, false);
  std::vector<MstEdge> mst;
  mst.reserve(n - 1);

  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double w = mutual_reachability(space.distance(current, v), cores[current], cores[v]);
      if (w < best[v]) {
        best[v] = w;
        from[v] = static_cast<std::uint32_t>(current);
      }
      if (next == n || best[v] < best[next]) next = v;
    }
    in_tree[next] = true;
    mst.push_back({from[next], static_cast<std::uint32_t>(next), best[next]});
    current = next;
  }
  return mst;
}

namespace {

/// Binary single-linkage dendrogram: leaves 0..n-1, merges n..2n-2.
struct Dendrogram {
  std::size_t num_points = 0;
  std::vector<std::uint32_t> left;
  std::vector<std::uint32_t> right;
  std::vector<double> distance;
  std::vector<std::uint32_t> size;

  bool is_leaf(std::uint32_t node) const { return node < num_points; }
  double dist(std::uint32_t node) const { return distance[node - num_points]; }
  std::uint32_t weight(std::uint32_t node) const { return is_leaf(node) ? 1 : size[node - num_points]; }
  std::uint32_t root() const { return static_cast<std::uint32_t>(num_points + left.size() - 1); }
};

Dendrogram single_linkage(std::span<const MstEdge> mst, std::size_t n) {
  std::vector<MstEdge> sorted(mst.begin(), mst.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const MstEdge& x, const MstEdge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    return std::min(x.a, x.b) < std::min(y.a, y.b);
  });
  Dendrogram tree;
  tree.num_points = n;
  UnionFind uf(n);
  std::vector<std::uint32_t> top(n);
  std::iota(top.begin(), top.end(), 0u);
  for (const auto& e : sorted) {
    const auto ra = uf.find(e.a);
    const auto rb = uf.find(e.b);
    if (ra == rb) throw std::invalid_argument("edge list is not a spanning tree (cycle)");
    const auto node = static_cast<std::uint32_t>(n + tree.left.size());
    tree.left.push_back(top[ra]);
    tree.right.push_back(top[rb]);
    tree.distance.push_back(e.weight);
    tree.size.push_back(tree.weight(top[ra]) + tree.weight(top[rb]));
    uf.unite(ra, rb);
    top[uf.find(ra)] = node;
  }
  if (tree.left.size() + 1 != n) throw std::invalid_argument("edge list does not span all points");
  return tree;
}

void collect_leaves(const Dendrogram& tree, std::uint32_t node, std::vector<std::uint32_t>& out) {
  std::vector<std::uint32_t> stack{node};
  while (!stack.empty()) {
    const auto x = stack.back();
    stack.pop_back();
    if (tree.is_leaf(x)) {
      out.push_back(x);
    } else {
      stack.push_back(tree.right[x - tree.num_points]);
      stack.push_back(tree.left[x - tree.num_points]);
    }
  }
}

/// Maximal sub-trees strictly below the level of `node` (ties at that level
/// are split through).
std::vector<std::uint32_t> split_at_level(const Dendrogram& tree, std::uint32_t node) {
  const double level = tree.dist(node);
  std::vector<std::uint32_t> parts;
  std::vector<std::uint32_t> stack{node};
  while (!stack.empty()) {
    const auto x = stack.back();
    stack.pop_back();
    if (!tree.is_leaf(x) && tree.dist(x) == level) {
      stack.push_back(tree.right[x - tree.num_points]);
      stack.push_back(tree.left[x - tree.num_points]);
    } else {
      parts.push_back(x);
    }
  }
  return parts;
}

}  // namespace

ClusterAssignment extract_clusters(std::span<const MstEdge> mst, std::size_t num_points, const ClusterParams& params) {
  params.validate();
  ClusterAssignment out;
  out.labels.assign(num_points, kNoise);
  if (num_points < 2) return out;
  const auto m = static_cast<std::uint32_t>(params.min_cluster_size);
  const auto n = static_cast<std::uint32_t>(num_points);

  const Dendrogram tree = single_linkage(mst, num_points);

  if (tree.dist(tree.root()) == 0.0) {
    if (num_points >= m) {
      std::fill(out.labels.begin(), out.labels.end(), 0);
      out.stabilities.push_back(0.0);
      for (std::uint32_t p = 0; p < n; ++p) out.hierarchy.push_back({n, p, lambda_from_distance(0.0), 1});
    }
    return out;
  }

  // Condensed tree. Cluster ids start at n (the root); children always get
  // larger ids than their parent.
  std::vector<double> birth{0.0};
  std::vector<std::uint32_t> parent_of{n};
  struct Pending {
    std::uint32_t node;
    std::uint32_t cluster;
  };
  std::vector<Pending> work{{tree.root(), n}};
  std::vector<std::uint32_t> leaves;
  auto drop_points = [&](std::uint32_t cluster, std::uint32_t node, double lambda) {
    leaves.clear();
    collect_leaves(tree, node, leaves);
    for (auto p : leaves) out.hierarchy.push_back({cluster, p, lambda, 1});
  };

  while (!work.empty()) {
    auto [node, cluster_id] = work.back();
    work.pop_back();
    while (true) {
      const double lambda = lambda_from_distance(tree.dist(node));
      const auto parts = split_at_level(tree, node);
      std::vector<std::uint32_t> big;
      for (auto part : parts) {
        if (tree.weight(part) >= m) big.push_back(part);
      }
      if (big.size() >= 2) {
        for (auto part : parts) {
          if (tree.weight(part) < m) {
            drop_points(cluster_id, part, lambda);
            continue;
          }
          const auto child = static_cast<std::uint32_t>(n + birth.size());
          birth.push_back(lambda);
          parent_of.push_back(cluster_id);
          out.hierarchy.push_back({cluster_id, child, lambda, tree.weight(part)});
          work.push_back({part, child});
        }
        break;
      }
      for (auto part : parts) {
        if (big.empty() || part != big.front()) drop_points(cluster_id, part, lambda);
      }
      if (big.empty()) break;
      node = big.front();
    }
  }

  const std::size_t num_nodes = birth.size();
  std::vector<double> stability(num_nodes, 0.0);
  for (const auto& e : out.hierarchy) {
    const auto c = e.parent - n;
    stability[c] += static_cast<double>(e.child_size) * (e.lambda - birth[c]);
  }

  // Excess of mass, leaves first. Ties keep the parent.
  std::vector<bool> selected(num_nodes, false);
  std::vector<double> subtree(num_nodes, 0.0);
  std::vector<std::vector<std::uint32_t>> children(num_nodes);
  for (std::size_t c = 1; c < num_nodes; ++c) children[parent_of[c] - n].push_back(static_cast<std::uint32_t>(c));
  for (std::size_t c = num_nodes; c-- > 1;) {
    double child_sum = 0.0;
    for (auto k : children[c]) child_sum += subtree[k];
    if (children[c].empty() || stability[c] >= child_sum) {
      selected[c] = true;
      subtree[c] = stability[c];
    } else {
      subtree[c] = child_sum;
    }
  }
  // A selected ancestor overrides its descendants.
  std::vector<std::int64_t> owner(num_nodes, -1);
  for (std::size_t c = 1; c < num_nodes; ++c) {
    const auto p = parent_of[c] - n;
    if (owner[p] >= 0) {
      owner[c] = owner[p];
    } else if (selected[c]) {
      owner[c] = static_cast<std::int64_t>(c);
    }
  }

  std::vector<int> raw(num_points, kNoise);
  for (const auto& e : out.hierarchy) {
    if (e.child < n && owner[e.parent - n] >= 0) raw[e.child] = static_cast<int>(owner[e.parent - n]);
  }
  // Canonical ids by smallest member; stabilities follow.
  std::map<int, int> remap;
  for (std::size_t p = 0; p < num_points; ++p) {
    if (raw[p] == kNoise) continue;
    auto [it, inserted] = remap.try_emplace(raw[p], static_cast<int>(remap.size()));
    if (inserted) out.stabilities.push_back(stability[static_cast<std::size_t>(raw[p])]);
    out.labels[p] = it->second;
  }
  return out;
}

ClusterAssignment cluster(const CombinedEmbedding& embedding, const ClusterParams& params) {
  params.validate();
  const auto rows = static_cast<std::size_t>(embedding.rows());
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < rows; ++i) {
    const bool zero = i < embedding.zero_rows.size() ? embedding.zero_rows[i]
                                                     : embedding.vectors.row(static_cast<Eigen::Index>(i)).isZero(0.0);
    if (!zero) active.push_back(i);
  }

  ClusterAssignment out;
  out.labels.assign(rows, kNoise);
  if (active.size() < 2 || active.size() < static_cast<std::size_t>(params.min_cluster_size)) return out;

  RowMatrixd points(static_cast<Eigen::Index>(active.size()), embedding.vectors.cols());
  for (std::size_t r = 0; r < active.size(); ++r) {
    points.row(static_cast<Eigen::Index>(r)) = embedding.vectors.row(static_cast<Eigen::Index>(active[r]));
  }
  const CosineSpace space(points);
  const int k = std::min(params.effective_min_samples(), static_cast<int>(active.size()) - 1);
  const auto cores = core_distances(space, k);
  const auto mst = build_mst(space, cores);
  auto local = extract_clusters(mst, active.size(), params);

  for (std::size_t r = 0; r < active.size(); ++r) out.labels[active[r]] = local.labels[r];
  out.stabilities = std::move(local.stabilities);
  const auto local_n = static_cast<std::uint32_t>(active.size());
  const auto shift = static_cast<std::uint32_t>(rows) - local_n;
  out.hierarchy.reserve(local.hierarchy.size());
  for (auto e : local.hierarchy) {
    e.parent += shift;
    e.child = e.child < local_n ? static_cast<std::uint32_t>(active[e.child]) : e.child + shift;
    out.hierarchy.push_back(e);
  }
  return out;
}

std::vector<int> canonical_labels(std::span<const int> labels) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size(), kNoise);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoise) continue;
    auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

void write_clusters(std::ostream& out, const ClusterAssignment& assignment) {
  for (std::size_t i = 0; i < assignment.labels.size(); ++i) out << i << '\t' << assignment.labels[i] << '\n';
  out << "# clusters " << assignment.num_clusters() << '\n';
  out << "# noise " << assignment.noise_count() << '\n';
}

ClusterAssignment read_clusters(std::istream& in, const std::string& name) {
  ClusterAssignment out;
  std::string line;
  std::size_t lineno = 0;
  int max_label = kNoise;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_record(line);
    if (fields.empty()) continue;
    if (fields.size() != 2) throw ParseError(name, lineno, "expected <supernode_id> <TAB> <label>");
    const auto id = parse_integer(fields[0], name, lineno);
    const auto label = parse_integer(fields[1], name, lineno);
    if (id != static_cast<long long>(out.labels.size())) throw ParseError(name, lineno, "super-node ids must be 0..n-1 in order");
    if (label < kNoise) throw ParseError(name, lineno, "labels must be -1 or non-negative");
    out.labels.push_back(static_cast<int>(label));
    max_label = std::max(max_label, static_cast<int>(label));
  }
  out.stabilities.assign(static_cast<std::size_t>(max_label + 1), 0.0);
  return out;
}

}  // namespace fraudgraph
