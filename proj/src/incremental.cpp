#include "fraudgraph/incremental.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include "fraudgraph/errors.hpp"
#include "fraudgraph/io.hpp"

namespace fraudgraph {

namespace {

constexpr double kPruneBelow = 1e-9;

Vectord normalized_or_zero(const Vectord& v) {
  const double norm = v.norm();
  return norm > 0.0 ? Vectord(v / norm) : v;
}

Vectord concat_normalized(const Vectord& first, const Vectord& second) {
  Vectord out(first.size() + second.size());
  out << first, second;
  return normalized_or_zero(out);
}

}  // namespace

std::vector<UpdateEvent> read_update_log(std::istream& in, const std::string& name) {
  std::vector<UpdateEvent> events;
  std::string line;
  std::size_t lineno = 0;
  double last_day = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = split_record(line);
    if (f.empty()) continue;
    UpdateEvent e;
    if (f[0] == "A") {
      if (f.size() != 3) throw ParseError(name, lineno, "expected A <TAB> token <TAB> day");
      e.kind = UpdateKind::new_account;
      e.u = f[1];
      e.day = parse_double(f[2], name, lineno);
    } else if (f[0] == "H") {
      if (f.size() != 5) throw ParseError(name, lineno, "expected H <TAB> u <TAB> kind <TAB> v <TAB> day");
      const auto kind = parse_hard_kind(f[2]);
      if (!kind) throw ParseError(name, lineno, "unknown hard-link kind '" + f[2] + "'");
      e.kind = UpdateKind::hard_link;
      e.u = f[1];
      e.hard_kind = *kind;
      e.v = f[3];
      e.day = parse_double(f[4], name, lineno);
    } else if (f[0] == "S") {
      if (f.size() != 6) throw ParseError(name, lineno, "expected S <TAB> u <TAB> kind <TAB> v <TAB> w <TAB> day");
      const auto kind = parse_soft_kind(f[2]);
      if (!kind) throw ParseError(name, lineno, "unknown soft-link kind '" + f[2] + "'");
      e.kind = UpdateKind::soft_link;
      e.u = f[1];
      e.soft_kind = *kind;
      e.v = f[3];
      e.weight = parse_double(f[4], name, lineno);
      if (!(e.weight > 0.0)) throw ParseError(name, lineno, "soft-link weight must be positive");
      e.day = parse_double(f[5], name, lineno);
    } else {
      throw ParseError(name, lineno, "unknown event type '" + f[0] + "'");
    }
    if (e.kind != UpdateKind::new_account && e.u == e.v) throw ParseError(name, lineno, "self-loop");
    if (e.day < last_day) throw ParseError(name, lineno, "event days must be non-decreasing");
    last_day = e.day;
    events.push_back(std::move(e));
  }
  return events;
}

void write_update_log(std::ostream& out, const std::vector<UpdateEvent>& events) {
  for (const auto& e : events) {
    const auto day = format_significant(e.day, 17);
    switch (e.kind) {
      case UpdateKind::new_account:
        out << "A\t" << e.u << '\t' << day << '\n';
        break;
      case UpdateKind::hard_link:
        out << "H\t" << e.u << '\t' << to_string(e.hard_kind) << '\t' << e.v << '\t' << day << '\n';
        break;
      case UpdateKind::soft_link:
        out << "S\t" << e.u << '\t' << to_string(e.soft_kind) << '\t' << e.v << '\t' << format_significant(e.weight, 17)
            << '\t' << day << '\n';
        break;
    }
  }
}

void IncrementalConfig::validate() const {
  embedding.validate();
  clustering.validate();
  if (!(decay_lambda >= 0.0) || !std::isfinite(decay_lambda)) throw std::invalid_argument("decay_lambda must be >= 0");
  if (!(nn_threshold >= 0.0 && nn_threshold <= 2.0)) throw std::invalid_argument("nn_threshold must lie in [0,2]");
}

IncrementalState::IncrementalState(IncrementalConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

IncrementalState IncrementalState::from_graph(const HeterogeneousGraph& g, IncrementalConfig cfg) {
  IncrementalState state(std::move(cfg));
  for (const auto& token : g.tokens().tokens()) state.apply_new_account(token);
  for (AccountIndex u = 0; u < g.num_accounts(); ++u) {
    if (g.risk_indicator(u) != 0.0) state.set_risk_indicator(u, g.risk_indicator(u));
  }
  for (const auto& h : g.hard_links()) state.apply_hard_link(h.u, h.v, h.kind);
  double latest = 0.0;
  for (const auto& s : g.soft_links()) {
    const double day = s.day.value_or(0.0);
    latest = std::max(latest, day);
    state.apply_soft_link(s.u, s.v, s.weight, day);
  }
  state.now_ = latest;
  state.modified_.clear();
  return state;
}

void IncrementalState::check_account(AccountIndex u) const {
  if (u >= tokens_.size()) throw DataError("unknown account index " + std::to_string(u));
}

std::uint32_t IncrementalState::super_node_of(AccountIndex u) const {
  check_account(u);
  return uf_.find(u);
}

const IncrementalState::Node& IncrementalState::node_of(AccountIndex u) const { return nodes_.at(super_node_of(u)); }
IncrementalState::Node& IncrementalState::node_of(AccountIndex u) { return nodes_.at(super_node_of(u)); }

double IncrementalState::effective(const Edge& e) const {
  return decayed_weight(e.base, cfg_.decay_lambda, now_ - e.day);
}

IncrementalState::Node IncrementalState::make_node(AccountIndex u) const {
  Node node;
  node.members = {u};
  if (dim_ > 0) {
    const auto half = dim_ / 2;
    node.first = Vectord::Zero(half);
    node.second = Vectord::Zero(half);
    node.context = Vectord::Zero(half);
    node.combined = Vectord::Zero(dim_);
  }
  return node;
}

AccountIndex IncrementalState::apply_new_account(std::string_view token) {
  if (tokens_.find(token)) throw DataError("account '" + std::string(token) + "' already exists");
  const auto u = tokens_.intern(token);
  uf_.resize(tokens_.size());
  risk_.resize(tokens_.size(), 0.0);
  nodes_.emplace(u, make_node(u));
  return u;
}

bool IncrementalState::apply_hard_link(AccountIndex u, AccountIndex v, HardLinkKind) {
  check_account(u);
  check_account(v);
  const auto ru = uf_.find(u);
  const auto rv = uf_.find(v);
  if (ru == rv) return false;
  uf_.unite(ru, rv);
  const auto keep = uf_.find(ru);
  const auto gone = keep == ru ? rv : ru;

  auto gone_node = std::move(nodes_.at(gone));
  nodes_.erase(gone);
  auto& merged = nodes_.at(keep);

  merged.adjacency.erase(gone);
  for (const auto& [k, edge] : gone_node.adjacency) {
    auto& neighbour = nodes_.at(k).adjacency;
    neighbour.erase(gone);
    if (k == keep) continue;
    auto& slot = merged.adjacency[k];
    slot.base += edge.base;
    slot.day = std::max(slot.day, edge.day);
    neighbour[keep] = slot;
  }

  const auto size_keep = merged.members.size();
  const auto size_gone = gone_node.members.size();
  if (dim_ > 0) {
    merged.first = size_weighted_merge(merged.first, size_keep, gone_node.first, size_gone);
    merged.second = size_weighted_merge(merged.second, size_keep, gone_node.second, size_gone);
    merged.context = size_weighted_merge(merged.context, size_keep, gone_node.context, size_gone);
    merged.combined = normalized_or_zero(size_weighted_merge(merged.combined, size_keep, gone_node.combined, size_gone));
  }
  std::vector<AccountIndex> members;
  members.reserve(size_keep + size_gone);
  std::merge(merged.members.begin(), merged.members.end(), gone_node.members.begin(), gone_node.members.end(),
             std::back_inserter(members));
  merged.members = std::move(members);
  merged.label = kNoise;
  merged.pending = true;
  return true;
}

bool IncrementalState::apply_soft_link(AccountIndex u, AccountIndex v, double weight, std::optional<double> day) {
  check_account(u);
  check_account(v);
  if (!(weight > 0.0) || !std::isfinite(weight)) throw DataError("soft-link weight must be positive");
  const auto ru = uf_.find(u);
  const auto rv = uf_.find(v);
  if (ru == rv) return false;
  const double when = day.value_or(now_);
  auto& forward = nodes_.at(ru).adjacency[rv];
  forward.base += weight;
  forward.day = std::max(forward.day, when);
  nodes_.at(rv).adjacency[ru] = forward;
  modified_.emplace_back(u, v);
  return true;
}

void IncrementalState::apply(const UpdateEvent& event) {
  if (event.day > now_) apply_decay(event.day);
  if (event.kind == UpdateKind::new_account) {
    apply_new_account(event.u);
    return;
  }
  auto resolve = [&](const std::string& token) {
    const auto found = tokens_.find(token);
    return found ? *found : apply_new_account(token);
  };
  const auto u = resolve(event.u);
  const auto v = resolve(event.v);
  if (event.kind == UpdateKind::hard_link) {
    apply_hard_link(u, v, event.hard_kind);
  } else {
    apply_soft_link(u, v, event.weight, event.day);
  }
}

void IncrementalState::apply_decay(double now) {
  if (now < now_) throw std::invalid_argument("decay clock cannot move backwards");
  now_ = now;
  for (auto& [root, node] : nodes_) {
    std::erase_if(node.adjacency, [&](const auto& entry) { return effective(entry.second) < kPruneBelow; });
  }
}

std::size_t IncrementalState::num_edges() const {
  std::size_t twice = 0;
  for (const auto& [root, node] : nodes_) twice += node.adjacency.size();
  return twice / 2;
}

void IncrementalState::set_risk_indicator(AccountIndex u, double value) {
  check_account(u);
  risk_[u] = value;
}

const std::vector<AccountIndex>& IncrementalState::members_of(AccountIndex u) const { return node_of(u).members; }

double IncrementalState::edge_weight(AccountIndex u, AccountIndex v, WeightView view) const {
  const auto& adjacency = node_of(u).adjacency;
  const auto it = adjacency.find(super_node_of(v));
  if (it == adjacency.end()) return 0.0;
  return view == WeightView::base ? it->second.base : effective(it->second);
}

const Vectord& IncrementalState::embedding_of(AccountIndex u) const { return node_of(u).combined; }
int IncrementalState::label_of(AccountIndex u) const { return node_of(u).label; }
bool IncrementalState::pending(AccountIndex u) const { return node_of(u).pending; }

void IncrementalState::set_node_embedding(AccountIndex u, const Vectord& combined, int label, bool pending) {
  if (dim_ == 0) {
    if (combined.size() == 0 || combined.size() % 2 != 0) throw std::invalid_argument("embedding dimension must be even");
    dim_ = static_cast<int>(combined.size());
    for (auto& [root, node] : nodes_) {
      node = Node{std::move(node.members), std::move(node.adjacency), Vectord::Zero(dim_ / 2), Vectord::Zero(dim_ / 2),
                  Vectord::Zero(dim_ / 2), Vectord::Zero(dim_), node.label, node.pending};
    }
  }
  if (combined.size() != dim_) throw std::invalid_argument("embedding dimension mismatch");
  auto& node = node_of(u);
  node.combined = combined;
  node.first = combined.head(dim_ / 2);
  node.second = combined.tail(dim_ / 2);
  node.label = label;
  node.pending = pending;
}

std::vector<std::uint32_t> IncrementalState::ordered_roots() const {
  std::vector<std::pair<AccountIndex, std::uint32_t>> keyed;
  keyed.reserve(nodes_.size());
  for (const auto& [root, node] : nodes_) keyed.emplace_back(node.members.front(), root);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::uint32_t> roots;
  roots.reserve(keyed.size());
  for (const auto& [first, root] : keyed) roots.push_back(root);
  return roots;
}

StateSnapshot IncrementalState::snapshot(WeightView view) const {
  StateSnapshot snap;
  const auto roots = ordered_roots();
  std::unordered_map<std::uint32_t, SuperNodeIndex> row;
  row.reserve(roots.size());
  auto& g = snap.graph;
  g.membership.assign(tokens_.size(), 0);
  g.super_nodes.reserve(roots.size());
  for (SuperNodeIndex id = 0; id < roots.size(); ++id) {
    const auto& node = nodes_.at(roots[id]);
    row.emplace(roots[id], id);
    SuperNode s{id, node.members, 0.0};
    for (auto u : node.members) {
      s.risk += risk_[u];
      g.membership[u] = id;
    }
    g.super_nodes.push_back(std::move(s));
  }
  for (SuperNodeIndex id = 0; id < roots.size(); ++id) {
    for (const auto& [k, edge] : nodes_.at(roots[id]).adjacency) {
      const auto other = row.at(k);
      if (other <= id) continue;
      g.edges.push_back({id, other, view == WeightView::base ? edge.base : effective(edge)});
    }
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const auto& a, const auto& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });

  const auto n = static_cast<Eigen::Index>(roots.size());
  const int dim = dim_ > 0 ? dim_ : cfg_.embedding.dim_total;
  snap.embedding.vectors = RowMatrixd::Zero(n, dim);
  snap.embedding.zero_rows.assign(roots.size(), true);
  snap.embedding.normalized = true;
  snap.assignment.labels.assign(roots.size(), kNoise);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& node = nodes_.at(roots[static_cast<std::size_t>(i)]);
    if (dim_ > 0 && node.combined.norm() > 0.0) {
      snap.embedding.vectors.row(i) = node.combined.transpose();
      snap.embedding.zero_rows[static_cast<std::size_t>(i)] = false;
    }
    snap.assignment.labels[static_cast<std::size_t>(i)] = node.label;
  }
  snap.assignment.stabilities = stabilities_;
  return snap;
}

std::size_t IncrementalState::online_update() {
  auto touched = std::move(modified_);
  modified_.clear();
  if (dim_ == 0 || touched.empty() || cfg_.online_samples_per_edge == 0) return 0;

  const auto roots = ordered_roots();
  std::unordered_map<std::uint32_t, SuperNodeIndex> row;
  for (SuperNodeIndex i = 0; i < roots.size(); ++i) row.emplace(roots[i], i);

  std::set<std::pair<SuperNodeIndex, SuperNodeIndex>> edges;
  for (const auto& [u, v] : touched) {
    const auto ru = uf_.find(u);
    const auto rv = uf_.find(v);
    if (ru == rv || !nodes_.at(ru).adjacency.contains(rv)) continue;
    edges.emplace(std::minmax(row.at(ru), row.at(rv)));
  }
  if (edges.empty()) return 0;

  const auto n = static_cast<Eigen::Index>(roots.size());
  const auto half = dim_ / 2;
  RowMatrixd first(n, half), second(n, half), context(n, half);
  std::vector<double> degrees(roots.size(), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& node = nodes_.at(roots[static_cast<std::size_t>(i)]);
    first.row(i) = node.first.transpose();
    second.row(i) = node.second.transpose();
    context.row(i) = node.context.transpose();
    for (const auto& [k, edge] : node.adjacency) degrees[static_cast<std::size_t>(i)] += effective(edge);
  }
  const RowMatrixd first_before = first;
  const RowMatrixd second_before = second;

  const NegativeSampler sampler(degrees);
  std::mt19937_64 rng(splitmix64(cfg_.embedding.seed ^ splitmix64((refresh_count_ << 32) + ++online_rounds_)));
  const double lr = cfg_.embedding.initial_learning_rate / 100.0;
  std::vector<SuperNodeIndex> negatives(static_cast<std::size_t>(cfg_.embedding.negatives));
  Vectord scratch;
  std::size_t drawn = 0;
  for (const auto& [a, b] : edges) {
    for (std::size_t s = 0; s < cfg_.online_samples_per_edge; ++s) {
      const bool flip = uniform_unit(rng) < 0.5;
      const auto src = flip ? b : a;
      const auto tgt = flip ? a : b;
      for (auto& neg : negatives) neg = sampler(rng);
      line_update(first, first, src, tgt, negatives, lr, scratch);
      for (auto& neg : negatives) neg = sampler(rng);
      line_update(second, context, src, tgt, negatives, lr, scratch);
      ++drawn;
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    auto& node = nodes_.at(roots[static_cast<std::size_t>(i)]);
    node.context = context.row(i).transpose();
    if (first.row(i) == first_before.row(i) && second.row(i) == second_before.row(i)) continue;
    node.first = first.row(i).transpose();
    node.second = second.row(i).transpose();
    node.combined = concat_normalized(node.first, node.second);
  }
  return drawn;
}

std::size_t IncrementalState::assign_new_to_clusters() {
  struct Reference {
    AccountIndex key;
    const Vectord* vector;
    int label;
  };
  std::vector<Reference> clustered;
  for (const auto& [root, node] : nodes_) {
    if (!node.pending && node.label != kNoise) clustered.push_back({node.members.front(), &node.combined, node.label});
  }
  // Nearest-neighbour ties resolve to the clustered node with the smallest member.
  std::sort(clustered.begin(), clustered.end(), [](const auto& a, const auto& b) { return a.key < b.key; });

  std::vector<std::pair<Node*, int>> decisions;
  for (auto& [root, node] : nodes_) {
    if (!node.pending || node.combined.size() == 0 || node.combined.norm() == 0.0) continue;
    int label = kNoise;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ref : clustered) {
      const double d = cosine_distance(node.combined, *ref.vector);
      if (d < best) {
        best = d;
        label = ref.label;
      }
    }
    decisions.emplace_back(&node, best <= cfg_.nn_threshold ? label : kNoise);
  }
  std::size_t joined = 0;
  for (auto& [node, label] : decisions) {
    node->label = label;
    node->pending = false;
    if (label != kNoise) ++joined;
  }
  return joined;
}

void IncrementalState::full_refresh() {
  const auto roots = ordered_roots();
  const auto snap = snapshot(WeightView::effective);
  EmbeddingConfig ecfg = cfg_.embedding;
  ecfg.seed = splitmix64(cfg_.embedding.seed ^ splitmix64(++refresh_count_));
  const auto line = embed_orders(snap.graph, ecfg);
  const auto assignment = cluster(line.combined, cfg_.clustering);

  dim_ = cfg_.embedding.dim_total;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    auto& node = nodes_.at(roots[i]);
    const auto r = static_cast<Eigen::Index>(i);
    node.first = line.first.vertex.row(r).transpose();
    node.second = line.second.vertex.row(r).transpose();
    node.context = line.second.context.row(r).transpose();
    node.combined = line.combined.vectors.row(r).transpose();
    node.label = assignment.labels[i];
    node.pending = false;
  }
  stabilities_ = assignment.stabilities;
  modified_.clear();
}

}  // namespace fraudgraph
