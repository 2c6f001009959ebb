#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fraudgraph {

/// Dense 0-based account index assigned at ingestion.
using AccountIndex = std::uint32_t;
/// Dense 0-based super-node index.
using SuperNodeIndex = std::uint32_t;

enum class HardLinkKind : std::uint8_t { phone, email, credit_card, national_id, bank_account };
enum class SoftLinkKind : std::uint8_t { device_fingerprint, cookie, ip_address };

std::optional<HardLinkKind> parse_hard_kind(std::string_view text);
std::optional<SoftLinkKind> parse_soft_kind(std::string_view text);
std::string_view to_string(HardLinkKind kind);
std::string_view to_string(SoftLinkKind kind);

struct HardLink {
  AccountIndex u;
  AccountIndex v;
  HardLinkKind kind;
};

struct SoftLink {
  AccountIndex u;
  AccountIndex v;
  SoftLinkKind kind;
  double weight = 1.0;
  std::optional<double> day{};
};

/// Bidirectional mapping between external account tokens and dense indices.
class TokenMap {
 public:
  /// Returns the index for `token`, assigning the next free one if unseen.
  AccountIndex intern(std::string_view token);
  std::optional<AccountIndex> find(std::string_view token) const;
  const std::string& token(AccountIndex index) const { return tokens_.at(index); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::unordered_map<std::string, AccountIndex> index_;
  std::vector<std::string> tokens_;
};

/// G = (V, E_H, E_S). Accounts are the entries of the token map; links refer to
/// them by dense index.
class HeterogeneousGraph {
 public:
  HeterogeneousGraph() = default;

  AccountIndex add_account(std::string_view token) { return tokens_.intern(token); }

  /// Adds an undirected hard link. Self-loops throw std::invalid_argument.
  void add_hard_link(AccountIndex u, AccountIndex v, HardLinkKind kind);
  /// Adds a soft link as given; no collapsing of repeated observations.
  void add_soft_link(const SoftLink& link);

  std::size_t num_accounts() const { return tokens_.size(); }
  const std::vector<HardLink>& hard_links() const { return hard_; }
  const std::vector<SoftLink>& soft_links() const { return soft_; }
  const TokenMap& tokens() const { return tokens_; }

  /// Optional per-account risk indicator (chargeback counts and the like).
  /// Missing entries read as 0.
  void set_risk_indicator(AccountIndex u, double value);
  double risk_indicator(AccountIndex u) const;
  bool has_risk_indicators() const { return !risk_.empty(); }

 private:
  void check_endpoint(AccountIndex u) const;

  TokenMap tokens_;
  std::vector<HardLink> hard_;
  std::vector<SoftLink> soft_;
  std::vector<double> risk_;
};

/// Disjoint-set forest with path compression and union by rank.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0);

  /// Grows the forest with singleton sets up to `n` elements.
  void resize(std::size_t n);
  std::uint32_t find(std::uint32_t x);
  std::uint32_t find(std::uint32_t x) const;
  /// Returns true if the two sets were distinct before the call.
  bool unite(std::uint32_t a, std::uint32_t b);
  bool connected(std::uint32_t a, std::uint32_t b) { return find(a) == find(b); }

  std::size_t size() const { return parent_.size(); }
  std::size_t component_count() const { return components_; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::size_t components_ = 0;
};

struct SuperNode {
  SuperNodeIndex id = 0;
  std::vector<AccountIndex> members;  // sorted ascending
  double risk = 0.0;                  // summed member risk indicators

  std::size_t size() const { return members.size(); }
};

struct WeightedEdge {
  SuperNodeIndex i;
  SuperNodeIndex j;  // i < j
  double weight;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// G' = (V', E'). Edges are unique per unordered pair, stored as (min, max)
/// and sorted lexicographically.
struct TransformedGraph {
  std::vector<SuperNode> super_nodes;
  std::vector<WeightedEdge> edges;
  std::vector<SuperNodeIndex> membership;  // account -> super-node

  std::size_t num_super_nodes() const { return super_nodes.size(); }
  std::size_t num_edges() const { return edges.size(); }
  /// Weighted degree sum_j w'_ij per super-node.
  std::vector<double> weighted_degrees() const;
};

struct SuperNodePartition {
  std::vector<SuperNode> super_nodes;
  std::vector<SuperNodeIndex> membership;
};

UnionFind find_components(const HeterogeneousGraph& g);

/// One super-node per union-find root, indexed by ascending smallest member.
SuperNodePartition build_supernodes(const HeterogeneousGraph& g, UnionFind& uf);

/// Sums soft-link weights across super-node pairs; intra-super-node links are dropped.
TransformedGraph aggregate_soft_links(const HeterogeneousGraph& g, SuperNodePartition partition);

TransformedGraph transform(const HeterogeneousGraph& g);

}  // namespace fraudgraph
