#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fraudgraph/dense.hpp"

namespace fraudgraph {

/// Walker/Vose alias table: O(n) construction, O(1) draws proportional to
/// the input weights. Throws std::invalid_argument for empty input, negative
/// or non-finite weights, or a zero total.
class AliasTable {
 public:
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const { return probability_.size(); }
  std::span<const double> probabilities() const { return probability_; }
  std::span<const std::uint32_t> aliases() const { return alias_; }

  /// Draw from two independent uniforms in [0, 1).
  std::uint32_t sample(double u_slot, double u_coin) const {
    auto slot = static_cast<std::uint32_t>(u_slot * static_cast<double>(probability_.size()));
    if (slot >= probability_.size()) slot = static_cast<std::uint32_t>(probability_.size() - 1);
    return u_coin < probability_[slot] ? slot : alias_[slot];
  }

  template <typename Engine>
  std::uint32_t operator()(Engine& engine) const {
    const double a = uniform_unit(engine);
    const double b = uniform_unit(engine);
    return sample(a, b);
  }

 private:
  std::vector<double> probability_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace fraudgraph
