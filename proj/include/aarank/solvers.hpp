#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aarank/evo_chain.hpp"

namespace aarank {

enum class StepRule { kConstant, kInvSqrt, kInvLinear };

StepRule parse_step_rule(const std::string& name);
std::string to_string(StepRule rule);

/// η_t for iteration t (0-based): η₀, η₀/√(t+1) or η₀/(t+1).
struct StepSchedule {
  StepRule rule = StepRule::kConstant;
  double eta0 = 0.1;
  double eta(std::uint64_t t) const;
};

/// kPlain is the literal step x − η g. kScaled runs the data step in
/// y = out ⊙ x (out = per-profile out-mass) with step η/‖b_i ⊘ out‖², and
/// damps the barrier step by its own curvature.
enum class UpdateRule { kPlain, kScaled };

UpdateRule parse_update_rule(const std::string& name);
std::string to_string(UpdateRule rule);

/// Configuration of the stochastic log-barrier solver.
struct SolverConfig {
  /// Slab half-width δ for |x·1 − 1| < δ.
  double delta = 0.1;
  double lambda0 = 0.01;
  /// λ_{t+1} = λ_t / γ.
  double gamma = 1.001;
  StepSchedule step{StepRule::kConstant, 0.5};
  UpdateRule update = UpdateRule::kScaled;
  std::uint64_t max_iters = 200000;
  /// Stop once the windowed mean of the sampled rows' relative flow
  /// imbalance |x·b_i| / Σ_j |b_ij| x_j falls to this value. Rows are
  /// weighted by x_i / (x_i + 1e-9/n).
  double grad_norm_tol = 1e-3;
  std::uint64_t grad_window = 1000;
  /// No stopping before this many iterations.
  std::uint64_t min_iters = 0;
  std::uint64_t seed = 0;
  double x_floor = 1e-300;
  /// Barrier terms are dropped once λ_t falls below this.
  double lambda_cutoff = 1e-10;
  /// Trace spacing; 0 picks max_iters / 100.
  std::uint64_t checkpoint_every = 0;

  void validate() const;
};

struct TracePoint {
  std::uint64_t iteration = 0;
  /// Barrier objective at the iterate (with the current λ).
  double objective = 0.0;
  /// Windowed statistic used by the stop rule.
  double grad_norm = 0.0;
  /// (1/n) Σ_i (v·b_i)² at the normalized iterate v.
  double residual = 0.0;
};

struct RankingResult {
  std::vector<double> distribution;
  /// Profiles by descending mass, ties by ascending index.
  std::vector<Index> ranking;
  std::vector<TracePoint> trace;
  std::uint64_t iterations = 0;
  bool converged = false;

  Index top() const { return ranking.front(); }
};

std::vector<Index> rank_profiles(std::span<const double> distribution);

/// (1/n) Σ_i (x·b_i)², exact.
double stationarity_residual(std::span<const double> x, const MarkovChain& chain);

/// ‖Tᵀv − v‖₂.
double eigen_residual(std::span<const double> v, const MarkovChain& chain);

/// Power iteration with rows streamed on demand, on the lazy jump chain
/// P = I + ½ W⁻¹(T − I), W = diag(out-mass), whose stationary vector is W v.
/// Stops on ‖Δu‖₁ <= tol for the iterate u of P; returns v = W⁻¹u normalized.
RankingResult power_method(const MarkovChain& chain, double tol = 1e-13,
                           std::uint64_t max_iters = 1'000'000);

/// Exact stationary distribution of a dense copy of the chain, by
/// subtraction-free Gaussian elimination (Grassmann–Taksar–Heyman).
RankingResult dense_eigensolve(const MarkovChain& chain, Index cap = 4096);

/// (1/n) Σ_i (x·b_i)² − λ log(δ² − (x·1 − 1)²) − (λ/n) Σ_i log x_i.
double barrier_objective(std::span<const double> x, const MarkovChain& chain, double lambda,
                         double delta);

/// Exact gradient of barrier_objective.
std::vector<double> barrier_gradient(std::span<const double> x, const MarkovChain& chain,
                                     double lambda, double delta);

/// One stochastic step x − η g followed by projection into the feasible set.
/// g = 2(x·b_i) b_i + [2λ(x·1 − 1)/(δ² − (x·1 − 1)²)] 1 − (λ/n) x^{−1},
/// whose expectation over uniform i is barrier_gradient.
std::vector<double> sgd_step(std::span<const double> x, Index sampled, const MarkovChain& chain,
                             double lambda, double eta, double delta, double x_floor = 1e-12);

/// Iterate of the stochastic solver. Every iterate satisfies x >= x_floor
/// and |x·1 − 1| <= δ.
class BarrierSgd {
 public:
  BarrierSgd(const MarkovChain& chain, double delta, double x_floor, UpdateRule rule);

  void assign(std::span<const double> x);
  struct StepStats {
    /// Relative flow imbalance |x·b_i| / Σ_j |b_ij| x_j at the pre-step
    /// iterate; 0 when x_i sits on its floor with net outflow.
    double imbalance;
    /// x_i before the step.
    double mass;
  };

  /// One step on row i with barrier weight λ (0 takes the sparse path).
  StepStats step(Index i, double lambda, double eta);

  Index size() const { return n_; }
  double x(Index k) const { return w_.empty() ? y_[k] : y_[k] / w_[k]; }
  std::vector<double> x() const;
  double sum() const { return sum_; }
  void resum();
  /// Consumes the state, returning x normalized to sum 1.
  std::vector<double> release_normalized();

 private:
  void project_to_slab();
  double floor_value(Index k) const;
  void floor_at(Index k);

  const MarkovChain& chain_;
  Index n_;
  double delta_;
  double floor_;
  UpdateRule rule_;
  std::vector<double> y_;
  std::vector<double> w_;  // out-mass per profile; empty for kPlain
  double sum_ = 1.0;
  std::vector<SparseEntry> b_;
  std::vector<double> delta_y_;
};

/// Stochastic log-barrier solver. Memory beyond two length-n vectors is
/// O(Σ_l k_l); the transition matrix is never formed.
RankingResult alpha_alpha_rank(const MarkovChain& chain, const SolverConfig& config);

// Game-level conveniences.
RankingResult power_method(const GameSpec& game, const EvoParams& params, double tol = 1e-13,
                           std::uint64_t max_iters = 1'000'000);
RankingResult dense_eigensolve(const GameSpec& game, const EvoParams& params, Index cap = 4096);
RankingResult alpha_alpha_rank(const GameSpec& game, const EvoParams& params,
                               const SolverConfig& config);

}  // namespace aarank
