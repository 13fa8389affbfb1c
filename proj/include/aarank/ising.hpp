#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aarank/game.hpp"

namespace aarank {

/// 2D Ising lattice viewed as a game: every site is an agent choosing a spin.
/// Strategy 0 is spin up (+1), strategy 1 is spin down (−1). Sites interact
/// with their 4-neighbours; boundaries are open.
struct IsingSpec {
  std::uint32_t rows = 3;
  std::uint32_t cols = 3;
  /// Per-site field h_j. A single entry is broadcast to every site.
  std::vector<double> field{0.0};
  double coupling = 2.0;
  double temperature = 1.0;

  std::uint32_t num_sites() const { return rows * cols; }
  double field_at(std::uint32_t site) const { return field.size() == 1 ? field[0] : field[site]; }
  void validate() const;
};

inline int spin_of_strategy(std::uint32_t strategy) { return strategy == 0 ? 1 : -1; }

/// Lattice neighbours of `site`, in (up, down, left, right) order where present.
std::vector<std::uint32_t> ising_neighbors(const IsingSpec& spec, std::uint32_t site);

/// r_j = h_j a_j + (λ/2) Σ_{k ∈ nbr(j)} a_j a_k.
double ising_payoff(const IsingSpec& spec, std::uint32_t site, std::span<const std::uint32_t> profile);

/// E(a) = −Σ_j r_j(a).
double ising_energy(const IsingSpec& spec, std::span<const std::uint32_t> profile);

/// ξ = |N↑ − N↓| / N.
double magnetization_imbalance(std::span<const std::uint32_t> profile);

class IsingPayoff final : public PayoffProvider {
 public:
  explicit IsingPayoff(IsingSpec spec);
  double payoff(std::size_t agent, Index profile) const override;
  const IsingSpec& spec() const { return spec_; }

 private:
  IsingSpec spec_;
  std::vector<std::vector<std::uint32_t>> neighbors_;
};

GameSpec make_ising_game(const IsingSpec& spec);

}  // namespace aarank
