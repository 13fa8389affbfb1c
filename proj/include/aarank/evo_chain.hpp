#pragma once

#include <cstddef>
#include <vector>

#include "aarank/game.hpp"

namespace aarank {

/// Selection model parameters.
struct EvoParams {
  /// Ranking intensity α > 0.
  double alpha = 1.0;
  /// Population size m >= 2.
  int population = 50;
  /// |Δ| at or below this is treated as an exact payoff tie.
  double tie_epsilon = 1e-12;

  void validate() const;
};

/// Probability that a single mutant with payoff `invader` fixes in a
/// population playing a strategy with payoff `incumbent`:
///   (1 − e^{−αΔ}) / (1 − e^{−mαΔ}),  Δ = invader − incumbent,
/// and 1/m on ties. Never overflows; never returns 0.
double fixation_probability(double invader, double incumbent, const EvoParams& params);

struct SparseEntry {
  Index index;
  double value;
  bool operator==(const SparseEntry&) const = default;
};

/// One row of the transition matrix T.
struct TransitionRow {
  Index source = 0;
  /// Single-agent deviations, ordered by (agent, strategy).
  std::vector<SparseEntry> neighbors;
  double self_prob = 1.0;
  /// Σ neighbor probabilities, summed directly so 1 − self_prob never
  /// has to be formed by cancellation.
  double out_mass = 0.0;

  std::size_t stored_entries() const { return neighbors.size() + 1; }
  double prob_to(Index target) const;
};

/// Row/column access to a row-stochastic Markov chain.
class MarkovChain {
 public:
  virtual ~MarkovChain() = default;
  virtual Index size() const = 0;
  virtual void row(Index source, TransitionRow& out) const = 0;
  /// Column i of T minus e_i, i.e. row i of Tᵀ − I. The diagonal entry is
  /// −(out-mass of i).
  virtual void residual(Index i, std::vector<SparseEntry>& out) const = 0;
  /// Probability of leaving `source` in one step.
  virtual double out_mass(Index source) const { return row(source).out_mass; }

  TransitionRow row(Index source) const {
    TransitionRow r;
    row(source, r);
    return r;
  }
};

/// The α-Rank chain over joint profiles, evaluated row by row on demand.
class EvoChain final : public MarkovChain {
 public:
  EvoChain(GameSpec game, EvoParams params);

  Index size() const override { return game_.num_profiles(); }
  using MarkovChain::row;
  void row(Index source, TransitionRow& out) const override;
  void residual(Index i, std::vector<SparseEntry>& out) const override;
  double out_mass(Index source) const override;

  const GameSpec& game() const { return game_; }
  const EvoParams& params() const { return params_; }

 private:
  GameSpec game_;
  EvoParams params_;
  double eta_;  // 1 / Σ_l (k_l − 1)
};

/// Chain given by an explicit dense row-stochastic matrix (row-major).
class ExplicitChain final : public MarkovChain {
 public:
  ExplicitChain(Index n, std::vector<double> matrix);

  Index size() const override { return n_; }
  using MarkovChain::row;
  void row(Index source, TransitionRow& out) const override;
  void residual(Index i, std::vector<SparseEntry>& out) const override;

 private:
  Index n_;
  std::vector<double> matrix_;
};

TransitionRow transition_row(Index source, const GameSpec& game, const EvoParams& params);
std::vector<SparseEntry> residual_column(Index i, const GameSpec& game, const EvoParams& params);

/// Dense row-major T. Only for small chains; used by the exact solver and tests.
std::vector<double> assemble_dense(const MarkovChain& chain);

}  // namespace aarank
