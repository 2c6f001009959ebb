#include "fraudgraph/graph.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>

namespace fraudgraph {

namespace {

constexpr std::array<std::string_view, 5> kHardNames = {"phone", "email", "credit_card", "national_id",
                                                        "bank_account"};
constexpr std::array<std::string_view, 3> kSoftNames = {"device_fingerprint", "cookie", "ip_address"};

}  // namespace

std::optional<HardLinkKind> parse_hard_kind(std::string_view text) {
  for (std::size_t k = 0; k < kHardNames.size(); ++k) {
    if (kHardNames[k] == text) return static_cast<HardLinkKind>(k);
  }
  return std::nullopt;
}

std::optional<SoftLinkKind> parse_soft_kind(std::string_view text) {
  for (std::size_t k = 0; k < kSoftNames.size(); ++k) {
    if (kSoftNames[k] == text) return static_cast<SoftLinkKind>(k);
  }
  return std::nullopt;
}

std::string_view to_string(HardLinkKind kind) { return kHardNames[static_cast<std::size_t>(kind)]; }
std::string_view to_string(SoftLinkKind kind) { return kSoftNames[static_cast<std::size_t>(kind)]; }

AccountIndex TokenMap::intern(std::string_view token) {
  auto [it, inserted] = index_.try_emplace(std::string(token), static_cast<AccountIndex>(tokens_.size()));
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

std::optional<AccountIndex> TokenMap::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void HeterogeneousGraph::check_endpoint(AccountIndex u) const {
  if (u >= tokens_.size()) throw std::out_of_range("account index " + std::to_string(u) + " out of range");
}

void HeterogeneousGraph::add_hard_link(AccountIndex u, AccountIndex v, HardLinkKind kind) {
  check_endpoint(u);
  check_endpoint(v);
  if (u == v) throw std::invalid_argument("hard link is a self-loop");
  hard_.push_back({u, v, kind});
}

void HeterogeneousGraph::add_soft_link(const SoftLink& link) {
  check_endpoint(link.u);
  check_endpoint(link.v);
  if (link.u == link.v) throw std::invalid_argument("soft link is a self-loop");
  if (!(link.weight > 0.0)) throw std::invalid_argument("soft link weight must be positive");
  soft_.push_back(link);
}

void HeterogeneousGraph::set_risk_indicator(AccountIndex u, double value) {
  check_endpoint(u);
  if (risk_.size() < tokens_.size()) risk_.resize(tokens_.size(), 0.0);
  risk_[u] = value;
}

double HeterogeneousGraph::risk_indicator(AccountIndex u) const { return u < risk_.size() ? risk_[u] : 0.0; }

// ---------------------------------------------------------------------------

UnionFind::UnionFind(std::size_t n) { resize(n); }

void UnionFind::resize(std::size_t n) {
  const std::size_t old = parent_.size();
  if (n <= old) return;
  parent_.resize(n);
  std::iota(parent_.begin() + static_cast<std::ptrdiff_t>(old), parent_.end(), static_cast<std::uint32_t>(old));
  rank_.resize(n, 0);
  components_ += n - old;
}

std::uint32_t UnionFind::find(std::uint32_t x) {
  std::uint32_t root = x;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[x] != root) {
    const std::uint32_t next = parent_[x];
    parent_[x] = root;
    x = next;
  }
  return root;
}

std::uint32_t UnionFind::find(std::uint32_t x) const {
  while (parent_[x] != x) x = parent_[x];
  return x;
}

bool UnionFind::unite(std::uint32_t a, std::uint32_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  parent_[b] = a;
  if (rank_[a] == rank_[b]) ++rank_[a];
  --components_;
  return true;
}

// ---------------------------------------------------------------------------

std::vector<double> TransformedGraph::weighted_degrees() const {
  std::vector<double> degree(super_nodes.size(), 0.0);
  for (const auto& e : edges) {
    degree[e.i] += e.weight;
    degree[e.j] += e.weight;
  }
  return degree;
}

UnionFind find_components(const HeterogeneousGraph& g) {
  UnionFind uf(g.num_accounts());
  for (const auto& link : g.hard_links()) uf.unite(link.u, link.v);
  return uf;
}

SuperNodePartition build_supernodes(const HeterogeneousGraph& g, UnionFind& uf) {
  const std::size_t n = g.num_accounts();
  constexpr auto kUnset = std::numeric_limits<SuperNodeIndex>::max();
  std::vector<SuperNodeIndex> root_to_super(n, kUnset);

  SuperNodePartition out;
  out.membership.resize(n);
  // Ascending account scan visits each component first at its smallest member.
  for (AccountIndex u = 0; u < n; ++u) {
    const auto root = uf.find(u);
    if (root_to_super[root] == kUnset) {
      root_to_super[root] = static_cast<SuperNodeIndex>(out.super_nodes.size());
      out.super_nodes.push_back({root_to_super[root], {}, 0.0});
    }
    auto& node = out.super_nodes[root_to_super[root]];
    node.members.push_back(u);
    node.risk += g.risk_indicator(u);
    out.membership[u] = root_to_super[root];
  }
  return out;
}

TransformedGraph aggregate_soft_links(const HeterogeneousGraph& g, SuperNodePartition partition) {
  TransformedGraph out;
  out.super_nodes = std::move(partition.super_nodes);
  out.membership = std::move(partition.membership);

  std::vector<WeightedEdge> cross;
  cross.reserve(g.soft_links().size());
  for (const auto& link : g.soft_links()) {
    auto i = out.membership[link.u];
    auto j = out.membership[link.v];
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    cross.push_back({i, j, link.weight});
  }

  // Two stable counting sorts (by j, then by i) order the pairs in
  // O(|V'| + |E_S|) and keep input order within a pair, so weights are
  // summed in observation order.
  const std::size_t k = out.super_nodes.size();
  std::vector<WeightedEdge> sorted(cross.size());
  std::vector<std::size_t> start(k + 1);
  auto counting_sort = [&](const std::vector<WeightedEdge>& in, std::vector<WeightedEdge>& dest, auto key) {
    std::fill(start.begin(), start.end(), 0);
    for (const auto& e : in) ++start[key(e) + 1];
    std::partial_sum(start.begin(), start.end(), start.begin());
    for (const auto& e : in) dest[start[key(e)]++] = e;
  };
  counting_sort(cross, sorted, [](const WeightedEdge& e) { return e.j; });
  counting_sort(sorted, cross, [](const WeightedEdge& e) { return e.i; });

  std::vector<WeightedEdge> edges;
  for (const auto& e : cross) {
    if (!edges.empty() && edges.back().i == e.i && edges.back().j == e.j) {
      edges.back().weight += e.weight;
    } else {
      edges.push_back(e);
    }
  }
  out.edges = std::move(edges);
  return out;
}

TransformedGraph transform(const HeterogeneousGraph& g) {
  auto uf = find_components(g);
  return aggregate_soft_links(g, build_supernodes(g, uf));
}

}  // namespace fraudgraph
