#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fraudgraph/clustering.hpp"
#include "fraudgraph/dense.hpp"
#include "fraudgraph/embedding.hpp"
#include "fraudgraph/graph.hpp"

namespace fraudgraph {

/// base * exp(-lambda * max(dt, 0)).
inline double decayed_weight(double base, double lambda, double dt) {
  return base * std::exp(-lambda * std::max(dt, 0.0));
}

/// (size_a * a + size_b * b) / (size_a + size_b), before renormalization.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> size_weighted_merge(const Eigen::MatrixBase<DerivedA>& a, std::size_t size_a,
                                                      const Eigen::MatrixBase<DerivedB>& b, std::size_t size_b) {
  using Scalar = typename DerivedA::Scalar;
  const auto sa = static_cast<Scalar>(size_a);
  const auto sb = static_cast<Scalar>(size_b);
  return (sa * a + sb * b) / (sa + sb);
}

enum class UpdateKind : std::uint8_t { hard_link, soft_link, new_account };

/// One line of an update log. `v`, the link kinds and `weight` are unused for
/// new-account events.
struct UpdateEvent {
  UpdateKind kind = UpdateKind::new_account;
  std::string u;
  std::string v;
  HardLinkKind hard_kind = HardLinkKind::phone;
  SoftLinkKind soft_kind = SoftLinkKind::device_fingerprint;
  double weight = 1.0;
  double day = 0.0;
};

/// `H u kind v day`, `S u kind v w day`, `A token day` (TAB separated).
/// Throws ParseError on malformed lines or decreasing days.
std::vector<UpdateEvent> read_update_log(std::istream& in, const std::string& name = "updates");
void write_update_log(std::ostream& out, const std::vector<UpdateEvent>& events);

struct IncrementalConfig {
  EmbeddingConfig embedding;
  ClusterParams clustering;
  double decay_lambda = 0.01;
  double nn_threshold = 0.3;
  std::size_t online_samples_per_edge = 100;

  void validate() const;
};

/// Published view of the live state in batch-transform numbering (super-nodes
/// by ascending smallest member).
struct StateSnapshot {
  TransformedGraph graph;
  CombinedEmbedding embedding;
  ClusterAssignment assignment;  // labels only; hierarchy left empty
};

enum class WeightView { base, effective };

/// Live super-node graph under micro-batch updates.
///
/// Each super-node is keyed by its union-find root. Edges store the raw
/// summed weight and the day of the latest observation; decay is applied
/// lazily as base * exp(-lambda * (now - day)).
class IncrementalState {
 public:
  explicit IncrementalState(IncrementalConfig cfg = {});

  /// Replays the raw links of `g` (soft links without a day count as day 0)
  /// and sets `now` to the latest day seen. No embedding is trained.
  static IncrementalState from_graph(const HeterogeneousGraph& g, IncrementalConfig cfg = {});

  /// New singleton super-node with a zero embedding, labelled noise.
  /// Throws DataError on a duplicate token.
  AccountIndex apply_new_account(std::string_view token);

  /// Returns false when both endpoints already share a super-node.
  /// Throws DataError on unknown endpoints.
  bool apply_hard_link(AccountIndex u, AccountIndex v, HardLinkKind kind = HardLinkKind::phone);

  /// Adds `weight` to the cross-super-node edge and resets its day to `day`
  /// (default: now). Returns false for intra-super-node links.
  bool apply_soft_link(AccountIndex u, AccountIndex v, double weight = 1.0, std::optional<double> day = {});

  /// Resolves tokens, creating unseen accounts for link events.
  void apply(const UpdateEvent& event);

  /// Advances the clock and prunes edges whose effective weight falls below
  /// 1e-9. Throws std::invalid_argument if `now` moves backwards.
  void apply_decay(double now);

  /// A bounded number of LINE steps on every edge touched since the last
  /// call, at the final learning rate of a full run. No-op before the first
  /// refresh. Returns the number of samples drawn.
  std::size_t online_update();

  /// Gives each pending super-node with a nonzero embedding the label of its
  /// cosine-nearest clustered super-node when that distance is at most tau,
  /// noise otherwise. Returns the number of nodes that joined a cluster.
  std::size_t assign_new_to_clusters();

  /// Retrains both embedding orders from scratch and reclusters.
  void full_refresh();

  StateSnapshot snapshot(WeightView view = WeightView::base) const;

  std::size_t num_accounts() const { return tokens_.size(); }
  std::size_t num_super_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const;
  double now() const { return now_; }
  std::size_t refresh_count() const { return refresh_count_; }
  const TokenMap& tokens() const { return tokens_; }
  const IncrementalConfig& config() const { return cfg_; }

  void set_risk_indicator(AccountIndex u, double value);

  /// Root of the super-node containing `u`.
  std::uint32_t super_node_of(AccountIndex u) const;
  const std::vector<AccountIndex>& members_of(AccountIndex u) const;
  /// 0 when the two accounts' super-nodes share no edge or coincide.
  double edge_weight(AccountIndex u, AccountIndex v, WeightView view = WeightView::base) const;
  const Vectord& embedding_of(AccountIndex u) const;
  int label_of(AccountIndex u) const;
  bool pending(AccountIndex u) const;

  /// Overwrites the combined vector and label of `u`'s super-node. Meant for
  /// seeding states in tests and tools.
  void set_node_embedding(AccountIndex u, const Vectord& combined, int label, bool pending);

 private:
  struct Edge {
    double base = 0.0;
    double day = 0.0;
  };
  struct Node {
    std::vector<AccountIndex> members;  // sorted ascending
    std::unordered_map<std::uint32_t, Edge> adjacency;
    Vectord first;    // first-order vertex vector
    Vectord second;   // second-order vertex vector
    Vectord context;  // second-order context vector
    Vectord combined;
    int label = kNoise;
    bool pending = true;
  };

  void check_account(AccountIndex u) const;
  const Node& node_of(AccountIndex u) const;
  Node& node_of(AccountIndex u);
  double effective(const Edge& e) const;
  Node make_node(AccountIndex u) const;
  std::vector<std::uint32_t> ordered_roots() const;

  IncrementalConfig cfg_;
  TokenMap tokens_;
  UnionFind uf_;
  std::unordered_map<std::uint32_t, Node> nodes_;
  std::vector<double> risk_;
  std::vector<std::pair<AccountIndex, AccountIndex>> modified_;
  std::vector<double> stabilities_;
  double now_ = 0.0;
  std::size_t refresh_count_ = 0;
  std::size_t online_rounds_ = 0;
  int dim_ = 0;  // combined dimension once trained
};

}  // namespace fraudgraph
