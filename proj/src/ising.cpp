#include "aarank/ising.hpp"

#include <cmath>
#include <string>

namespace aarank {

void IsingSpec::validate() const {
  if (rows == 0 || cols == 0) throw DataError("Ising lattice needs positive dimensions");
  if (num_sites() < 2) throw DataError("Ising lattice needs at least two sites");
  if (num_sites() > 63) throw DataError("Ising lattice larger than 63 sites is not indexable");
  if (field.size() != 1 && field.size() != num_sites()) {
    throw DataError("Ising field has " + std::to_string(field.size()) +
                    " entries; expected 1 or " + std::to_string(num_sites()));
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DataError("Ising temperature must be positive");
  }
}

std::vector<std::uint32_t> ising_neighbors(const IsingSpec& spec, std::uint32_t site) {
  const std::uint32_t r = site / spec.cols;
  const std::uint32_t c = site % spec.cols;
  std::vector<std::uint32_t> out;
  if (r > 0) out.push_back(site - spec.cols);
  if (r + 1 < spec.rows) out.push_back(site + spec.cols);
  if (c > 0) out.push_back(site - 1);
  if (c + 1 < spec.cols) out.push_back(site + 1);
  return out;
}

double ising_payoff(const IsingSpec& spec, std::uint32_t site,
                    std::span<const std::uint32_t> profile) {
  if (profile.size() != spec.num_sites()) {
    throw DataError("spin configuration has " + std::to_string(profile.size()) +
                    " sites, expected " + std::to_string(spec.num_sites()));
  }
  if (site >= spec.num_sites()) throw DataError("site " + std::to_string(site) + " out of range");
  const int a = spin_of_strategy(profile[site]);
  int aligned = 0;
  for (std::uint32_t k : ising_neighbors(spec, site)) aligned += a * spin_of_strategy(profile[k]);
  return spec.field_at(site) * a + 0.5 * spec.coupling * aligned;
}

double ising_energy(const IsingSpec& spec, std::span<const std::uint32_t> profile) {
  double total = 0.0;
  for (std::uint32_t j = 0; j < spec.num_sites(); ++j) total += ising_payoff(spec, j, profile);
  return -total;
}

double magnetization_imbalance(std::span<const std::uint32_t> profile) {
  long up = 0;
  for (std::uint32_t s : profile) up += (s == 0);
  const long down = static_cast<long>(profile.size()) - up;
  return std::abs(static_cast<double>(up - down)) / static_cast<double>(profile.size());
}

IsingPayoff::IsingPayoff(IsingSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  neighbors_.reserve(spec_.num_sites());
  for (std::uint32_t j = 0; j < spec_.num_sites(); ++j) neighbors_.push_back(ising_neighbors(spec_, j));
}

double IsingPayoff::payoff(std::size_t agent, Index profile) const {
  // k = 2 everywhere, so agent j's digit is bit (N − 1 − j).
  const std::uint32_t n = spec_.num_sites();
  auto spin = [&](std::uint32_t site) {
    return ((profile >> (n - 1 - site)) & 1U) == 0 ? 1 : -1;
  };
  const auto site = static_cast<std::uint32_t>(agent);
  const int a = spin(site);
  int aligned = 0;
  for (std::uint32_t k : neighbors_[site]) aligned += a * spin(k);
  return spec_.field_at(site) * a + 0.5 * spec_.coupling * aligned;
}

GameSpec make_ising_game(const IsingSpec& spec) {
  auto provider = std::make_shared<IsingPayoff>(spec);
  std::vector<std::uint32_t> counts(spec.num_sites(), 2);
  GameSpec game(std::move(counts), provider,
                "ising(" + std::to_string(spec.rows) + "x" + std::to_string(spec.cols) + ")");
  game.set_labels(std::vector<std::vector<std::string>>(spec.num_sites(), {"up", "down"}));
  return game;
}

}  // namespace aarank
