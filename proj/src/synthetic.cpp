#include "fraudgraph/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "fraudgraph/dense.hpp"
#include "fraudgraph/errors.hpp"
#include "fraudgraph/io.hpp"

namespace fraudgraph {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : engine_(seed) {}

  double unit() { return uniform_unit(engine_); }
  bool chance(double p) { return unit() < p; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(unit() * static_cast<double>(n)); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }

 private:
  std::mt19937_64 engine_;
};

/// Soft links keyed by (min, max, kind) so the in-memory graph matches what
/// ingestion of the written files produces.
class SoftLinkWriter {
 public:
  explicit SoftLinkWriter(HeterogeneousGraph& g) : g_(g) {}

  void add(AccountIndex u, AccountIndex v, SoftLinkKind kind, double day) {
    const std::uint64_t key = ((static_cast<std::uint64_t>(std::min(u, v)) << 32 | std::max(u, v)) << 2) |
                              static_cast<std::uint64_t>(kind);
    if (seen_.insert(key).second) g_.add_soft_link({u, v, kind, 1.0, day});
  }

 private:
  HeterogeneousGraph& g_;
  std::unordered_set<std::uint64_t> seen_;
};

void add_soft_pair(SoftLinkWriter& links, Draw& draw, AccountIndex u, AccountIndex v, double day) {
  // Each associated pair shares 1-3 behavioural identifiers.
  const auto kinds = draw.between(1, 3);
  const auto first = draw.below(3);
  for (std::size_t k = 0; k < kinds; ++k) links.add(u, v, static_cast<SoftLinkKind>((first + k) % 3), day);
}

}  // namespace

void SynthConfig::validate() const {
  for (double p : {hard_link_density_in_ring, soft_link_density_in_ring, background_soft_noise, family_hard_link_rate,
                   hard_ring_fraction, star_ring_fraction}) {
    if (!is_probability(p)) throw std::invalid_argument("synthetic config probabilities must lie in [0,1]");
  }
  if (ring_size_min < 2) throw std::invalid_argument("ring size must be at least 2");
  if (ring_size_min > ring_size_max) throw std::invalid_argument("ring_size_min exceeds ring_size_max");
  if (n_rings > 0 && ring_size_max > n_legit) throw std::invalid_argument("a ring cannot outnumber the legitimate population");
  const double accounts = static_cast<double>(n_legit) + static_cast<double>(n_rings) * static_cast<double>(ring_size_max);
  if (accounts > 4e9) throw std::invalid_argument("too many accounts for 32-bit indices");
}

SyntheticDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  SyntheticDataset out;
  auto& g = out.graph;
  Draw draw(cfg.seed);

  for (std::size_t i = 0; i < cfg.n_legit; ++i) g.add_account("L" + std::to_string(i));

  std::vector<std::vector<AccountIndex>> rings(cfg.n_rings);
  for (std::size_t r = 0; r < cfg.n_rings; ++r) {
    const auto size = draw.between(cfg.ring_size_min, cfg.ring_size_max);
    for (std::size_t k = 0; k < size; ++k) {
      const auto u = g.add_account("F" + std::to_string(r) + "_" + std::to_string(k));
      rings[r].push_back(u);
      out.truth.fraud_accounts.push_back(u);
      out.truth.ring_of.emplace(u, static_cast<std::uint32_t>(r));
    }
  }
  const std::size_t n = g.num_accounts();
  SoftLinkWriter links(g);

  // Family hard links among legitimate accounts.
  for (std::size_t i = 0; i < cfg.n_legit && cfg.n_legit > 1; ++i) {
    if (!draw.chance(cfg.family_hard_link_rate)) continue;
    auto j = draw.below(cfg.n_legit - 1);
    if (j >= i) ++j;
    g.add_hard_link(static_cast<AccountIndex>(i), static_cast<AccountIndex>(j),
                    static_cast<HardLinkKind>(draw.below(5)));
  }

  for (const auto& members : rings) {
    const bool star = draw.chance(cfg.star_ring_fraction);
    const bool shares_hard = draw.chance(cfg.hard_ring_fraction);
    const double day = static_cast<double>(draw.below(90));
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const double p = star ? (a == 0 ? 1.0 : 0.5 * cfg.soft_link_density_in_ring) : cfg.soft_link_density_in_ring;
        if (draw.chance(p)) add_soft_pair(links, draw, members[a], members[b], day);
        if (shares_hard && draw.chance(cfg.hard_link_density_in_ring)) {
          g.add_hard_link(members[a], members[b], static_cast<HardLinkKind>(draw.below(5)));
        }
      }
    }
  }

  // Background noise: every unordered pair independently with probability p,
  // enumerated by geometric skips over the pair index.
  if (cfg.background_soft_noise > 0.0 && n > 1) {
    const double p = cfg.background_soft_noise;
    const double log_q = std::log1p(-std::min(p, 1.0 - 1e-12));
    std::size_t u = 1;
    std::int64_t v = -1;
    while (u < n) {
      const double r = draw.unit();
      v += 1 + (p >= 1.0 ? 0 : static_cast<std::int64_t>(std::floor(std::log1p(-r) / log_q)));
      while (u < n && v >= static_cast<std::int64_t>(u)) {
        v -= static_cast<std::int64_t>(u);
        ++u;
      }
      if (u < n) {
        const auto kind = static_cast<SoftLinkKind>(draw.below(3));
        links.add(static_cast<AccountIndex>(u), static_cast<AccountIndex>(v), kind, static_cast<double>(draw.below(90)));
      }
    }
  }

  // Chargeback-style risk counts: rare for legitimate accounts.
  for (AccountIndex u = 0; u < n; ++u) {
    const double value = out.truth.is_fraud(u) ? static_cast<double>(draw.below(4)) : (draw.chance(0.02) ? 1.0 : 0.0);
    if (value > 0.0) g.set_risk_indicator(u, value);
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const SyntheticDataset& data) {
  std::filesystem::create_directories(dir);
  const auto& g = data.graph;
  const auto& tokens = g.tokens();
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("hard.tsv");
    for (const auto& h : g.hard_links()) out << tokens.token(h.u) << '\t' << to_string(h.kind) << '\t' << tokens.token(h.v) << '\n';
  }
  {
    auto out = open("soft.tsv");
    for (const auto& s : g.soft_links()) {
      out << tokens.token(s.u) << '\t' << to_string(s.kind) << '\t' << tokens.token(s.v) << '\t'
          << format_significant(s.weight, 17);
      if (s.day) out << '\t' << format_significant(*s.day, 17);
      out << '\n';
    }
  }
  {
    auto out = open("truth.tsv");
    for (auto u : data.truth.fraud_accounts) out << tokens.token(u) << '\t' << data.truth.ring_of.at(u) << '\n';
  }
  {
    auto out = open("risk.tsv");
    for (AccountIndex u = 0; u < g.num_accounts(); ++u) {
      if (g.risk_indicator(u) != 0.0) out << tokens.token(u) << '\t' << format_significant(g.risk_indicator(u), 17) << '\n';
    }
  }
}

GroundTruth read_ground_truth(std::istream& in, const TokenMap& tokens, const std::string& name) {
  GroundTruth truth;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_record(line);
    if (fields.empty()) continue;
    if (fields.size() != 2) throw ParseError(name, lineno, "expected <token> <TAB> <ring_id>");
    const auto ring = parse_integer(fields[1], name, lineno);
    if (ring < 0) throw ParseError(name, lineno, "ring id must be non-negative");
    const auto u = tokens.find(fields[0]);
    if (!u) {
      ++truth.unlinked_fraud;
      continue;
    }
    if (!truth.ring_of.emplace(*u, static_cast<std::uint32_t>(ring)).second) {
      throw ParseError(name, lineno, "duplicate account '" + fields[0] + "'");
    }
    truth.fraud_accounts.push_back(*u);
  }
  std::sort(truth.fraud_accounts.begin(), truth.fraud_accounts.end());
  return truth;
}

}  // namespace fraudgraph
