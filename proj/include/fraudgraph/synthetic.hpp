#pragma once

#include <cstdint>
#include <filesystem>
#include <unordered_map>
#include <vector>

#include "fraudgraph/graph.hpp"

namespace fraudgraph {

/// Planted fraud-ring benchmark.
///
/// Legitimate accounts get sparse "family" hard links and background soft
/// noise. Each ring is a group of fraud accounts tied together by dense soft
/// links (1-3 link kinds per associated pair). Star rings connect a hub to
/// every member and the remaining pairs at half density. A fraction of rings
/// also share hard links; the rest are soft-only, like synthetic-identity
/// rings that never reuse verified credentials.
struct SynthConfig {
  std::size_t n_legit = 1000;
  std::size_t n_rings = 20;
  std::size_t ring_size_min = 5;
  std::size_t ring_size_max = 15;
  double hard_link_density_in_ring = 0.03;
  double soft_link_density_in_ring = 0.5;
  double background_soft_noise = 0.001;
  double family_hard_link_rate = 0.05;
  double hard_ring_fraction = 0.3;
  double star_ring_fraction = 0.25;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument for probabilities outside [0,1], ring
  /// sizes below 2 or min above max, and rings larger than n_legit.
  void validate() const;
};

struct GroundTruth {
  std::vector<AccountIndex> fraud_accounts;             // ascending
  std::unordered_map<AccountIndex, std::uint32_t> ring_of;
  /// Fraud accounts named in a truth file but absent from the graph (no
  /// links); they count as missed.
  std::size_t unlinked_fraud = 0;

  std::size_t total_fraud() const { return fraud_accounts.size() + unlinked_fraud; }

  bool is_fraud(AccountIndex u) const { return ring_of.contains(u); }
};

struct SyntheticDataset {
  HeterogeneousGraph graph;
  GroundTruth truth;
};

SyntheticDataset generate(const SynthConfig& cfg);

/// Writes hard.tsv, soft.tsv, truth.tsv and risk.tsv into `dir`.
void write_dataset(const std::filesystem::path& dir, const SyntheticDataset& data);

/// `<token> <TAB> <ring_id>` per fraud account. Tokens unknown to `tokens`
/// are tallied in `unlinked_fraud`.
GroundTruth read_ground_truth(std::istream& in, const TokenMap& tokens, const std::string& name = "truth");

}  // namespace fraudgraph
