#include "aarank/evo_chain.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace aarank {

void EvoParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DataError("alpha must be a positive finite number");
  }
  if (population < 2) throw DataError("population size m must be at least 2");
  if (!(tie_epsilon >= 0.0)) throw DataError("tie epsilon must be non-negative");
}

double fixation_probability(double invader, double incumbent, const EvoParams& params) {
  if (!std::isfinite(invader) || !std::isfinite(incumbent)) {
    throw DataError("non-finite payoff passed to fixation probability");
  }
  const double m = params.population;
  const double delta = invader - incumbent;
  if (std::abs(delta) <= params.tie_epsilon) return 1.0 / m;
  const double u = params.alpha * delta;
  if (std::abs(m * u) < 1e-8) return 1.0 / m;
  double rho;
  if (u > 0.0) {
    rho = std::expm1(-u) / std::expm1(-m * u);
  } else {
    // Multiply through by e^{mu} so every exponential is <= 1.
    rho = std::exp((m - 1.0) * u) * (std::expm1(u) / std::expm1(m * u));
  }
  return std::min(1.0, std::max(rho, std::numeric_limits<double>::min()));
}

double TransitionRow::prob_to(Index target) const {
  if (target == source) return self_prob;
  for (const auto& e : neighbors) {
    if (e.index == target) return e.value;
  }
  return 0.0;
}

EvoChain::EvoChain(GameSpec game, EvoParams params)
    : game_(std::move(game)), params_(params) {
  params_.validate();
  const std::size_t d = game_.index().num_deviations();
  eta_ = d == 0 ? 0.0 : 1.0 / static_cast<double>(d);
}

namespace {

[[noreturn]] void rethrow_with_context(const GameSpec& game, Index profile, const std::exception& e) {
  throw DataError("payoff evaluation failed at profile " + std::to_string(profile) + " " +
                  game.profile_label(profile) + ": " + e.what());
}

}  // namespace

void EvoChain::row(Index source, TransitionRow& out) const {
  const ProfileIndex& index = game_.index();
  if (source >= index.size()) {
    throw DataError("profile index " + std::to_string(source) + " out of range (n=" +
                    std::to_string(index.size()) + ")");
  }
  out.source = source;
  out.neighbors.clear();
  double out_mass = 0.0;
  Index at = source;
  try {
    for (std::size_t agent = 0; agent < index.num_agents(); ++agent) {
      const std::uint32_t current = index.digit(source, agent);
      const double incumbent = game_.payoff(agent, source);
      for (std::uint32_t s = 0; s < index.strategy_count(agent); ++s) {
        if (s == current) continue;
        at = index.with_strategy(source, agent, s);
        const double p = eta_ * fixation_probability(game_.payoff(agent, at), incumbent, params_);
        out.neighbors.push_back({at, p});
        out_mass += p;
      }
      at = source;
    }
  } catch (const DataError& e) {
    rethrow_with_context(game_, at, e);
  }
  out.out_mass = out_mass;
  out.self_prob = 1.0 - out_mass;
}

double EvoChain::out_mass(Index source) const {
  const ProfileIndex& index = game_.index();
  if (source >= index.size()) {
    throw DataError("profile index " + std::to_string(source) + " out of range (n=" +
                    std::to_string(index.size()) + ")");
  }
  double total = 0.0;
  Index at = source;
  try {
    for (std::size_t agent = 0; agent < index.num_agents(); ++agent) {
      const std::uint32_t current = index.digit(source, agent);
      const double incumbent = game_.payoff(agent, source);
      for (std::uint32_t s = 0; s < index.strategy_count(agent); ++s) {
        if (s == current) continue;
        at = index.with_strategy(source, agent, s);
        total += eta_ * fixation_probability(game_.payoff(agent, at), incumbent, params_);
      }
      at = source;
    }
  } catch (const DataError& e) {
    rethrow_with_context(game_, at, e);
  }
  return total;
}

void EvoChain::residual(Index i, std::vector<SparseEntry>& out) const {
  const ProfileIndex& index = game_.index();
  if (i >= index.size()) {
    throw DataError("profile index " + std::to_string(i) + " out of range (n=" +
                    std::to_string(index.size()) + ")");
  }
  out.clear();
  double out_mass = 0.0;
  Index at = i;
  try {
    for (std::size_t agent = 0; agent < index.num_agents(); ++agent) {
      const std::uint32_t current = index.digit(i, agent);
      const double here = game_.payoff(agent, i);
      for (std::uint32_t s = 0; s < index.strategy_count(agent); ++s) {
        if (s == current) continue;
        at = index.with_strategy(i, agent, s);
        const double there = game_.payoff(agent, at);
        // Inflow j -> i: i's strategy invades j's. Outflow i -> j: the reverse.
        out.push_back({at, eta_ * fixation_probability(here, there, params_)});
        out_mass += eta_ * fixation_probability(there, here, params_);
      }
      at = i;
    }
  } catch (const DataError& e) {
    rethrow_with_context(game_, at, e);
  }
  out.push_back({i, -out_mass});
}

ExplicitChain::ExplicitChain(Index n, std::vector<double> matrix)
    : n_(n), matrix_(std::move(matrix)) {
  if (matrix_.size() != n * n) throw DataError("explicit chain matrix has wrong size");
  for (Index r = 0; r < n; ++r) {
    double s = 0.0;
    for (Index c = 0; c < n; ++c) {
      const double v = matrix_[r * n + c];
      if (!(v >= 0.0 && v <= 1.0)) throw DataError("transition probability outside [0,1]");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw DataError("explicit chain row does not sum to 1");
  }
}

void ExplicitChain::row(Index source, TransitionRow& out) const {
  out.source = source;
  out.neighbors.clear();
  double out_mass = 0.0;
  for (Index c = 0; c < n_; ++c) {
    const double v = matrix_[source * n_ + c];
    if (c == source || v == 0.0) continue;
    out.neighbors.push_back({c, v});
    out_mass += v;
  }
  out.out_mass = out_mass;
  out.self_prob = 1.0 - out_mass;
}

void ExplicitChain::residual(Index i, std::vector<SparseEntry>& out) const {
  out.clear();
  double out_mass = 0.0;
  for (Index r = 0; r < n_; ++r) {
    if (r == i) continue;
    const double v = matrix_[r * n_ + i];
    if (v != 0.0) out.push_back({r, v});
    out_mass += matrix_[i * n_ + r];
  }
  out.push_back({i, -out_mass});
}

TransitionRow transition_row(Index source, const GameSpec& game, const EvoParams& params) {
  return EvoChain(game, params).row(source);
}

std::vector<SparseEntry> residual_column(Index i, const GameSpec& game, const EvoParams& params) {
  std::vector<SparseEntry> out;
  EvoChain(game, params).residual(i, out);
  return out;
}

std::vector<double> assemble_dense(const MarkovChain& chain) {
  const Index n = chain.size();
  std::vector<double> t(n * n, 0.0);
  TransitionRow r;
  for (Index i = 0; i < n; ++i) {
    chain.row(i, r);
    t[i * n + i] = r.self_prob;
    for (const auto& e : r.neighbors) t[i * n + e.index] += e.value;
  }
  return t;
}

}  // namespace aarank
