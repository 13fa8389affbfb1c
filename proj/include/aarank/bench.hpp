#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aarank/ising.hpp"
#include "aarank/oracle.hpp"

namespace aarank {

// Alpha sweep ---------------------------------------------------------------

struct SweepSpec {
  std::string game_id = "pd";
  /// Strictly increasing, positive.
  std::vector<double> alphas;
  int population = 50;
  SolverConfig solver;
  unsigned workers = 1;

  void validate() const;
};

/// Log-spaced grid of `points` values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t points);

struct SweepPoint {
  double alpha = 0.0;
  std::vector<double> dense;
  std::vector<double> sgd;
  Index dense_top = 0;
  Index sgd_top = 0;
  std::uint64_t sgd_iterations = 0;
  bool sgd_converged = false;
};

struct SweepResult {
  std::string game_id;
  std::vector<std::string> profile_labels;
  std::vector<SweepPoint> points;
  /// Share of grid points where the stochastic top profile is a dense top
  /// profile (exact ties in the dense solve count as agreement).
  double top_agreement = 0.0;
};

SweepResult run_alpha_sweep(const SweepSpec& spec);

// Scaling -------------------------------------------------------------------

enum class ChainMode { kSparse, kDenseRandom };

ChainMode parse_chain_mode(const std::string& name);
std::string to_string(ChainMode mode);

struct ScalingSpec {
  /// Increasing profile counts.
  std::vector<Index> sizes;
  std::uint64_t seed = 0;
  /// Any of "dense", "power", "sgd".
  std::vector<std::string> solvers{"dense", "power", "sgd"};
  std::uint32_t repetitions = 3;
  ChainMode mode = ChainMode::kSparse;
  /// Largest strategy count per agent used when factoring a size into a game.
  std::uint32_t max_strategies = 10;
  EvoParams params;
  SolverConfig solver;
  Index dense_cap = 4096;
  double power_tol = 1e-10;
  std::uint64_t power_max_iters = 100000;

  void validate() const;
};

/// Per-agent strategy counts whose product is n, each ≤ max_strategies
/// where n's prime factors allow.
std::vector<std::uint32_t> shape_for_size(Index n, std::uint32_t max_strategies);

struct ScalingRow {
  Index n = 0;
  std::string solver;
  std::vector<std::uint32_t> shape;
  /// Median over repetitions.
  double wall_seconds = 0.0;
  /// Peak resident set sampled every 10 ms, and the kernel high-water mark.
  std::uint64_t peak_rss_bytes = 0;
  std::uint64_t hwm_bytes = 0;
  /// Resident set before the solve.
  std::uint64_t base_rss_bytes = 0;
  std::uint64_t iterations = 0;
  bool converged = false;
  bool dnf = false;
  std::string note;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  /// Log-log slope of (peak − base) memory against n for the sgd rows.
  std::optional<double> sgd_memory_exponent;
};

ScalingResult run_scaling_bench(const ScalingSpec& spec);

/// Memory of the calling process.
struct MemorySample {
  std::uint64_t rss_bytes = 0;
  std::uint64_t hwm_bytes = 0;
};
MemorySample read_memory();
/// Resets the kernel's high-water mark to the current RSS where supported.
void reset_peak_memory();

/// Samples RSS on a background thread every `period_ms` until stopped.
class PeakMemoryMonitor {
 public:
  explicit PeakMemoryMonitor(unsigned period_ms = 10);
  ~PeakMemoryMonitor();
  PeakMemoryMonitor(const PeakMemoryMonitor&) = delete;
  PeakMemoryMonitor& operator=(const PeakMemoryMonitor&) = delete;
  /// Stops sampling; returns max(sampled RSS, high-water mark).
  std::uint64_t stop();

 private:
  struct Impl;
  Impl* impl_;
};

// Cost ----------------------------------------------------------------------

struct CostReport {
  std::uint32_t agents = 0;
  std::uint32_t strategies = 0;
  /// 10·k^N·N·(k−1), exact, in decimal.
  std::string flops;
  double flops_approx = 0.0;
  double throughput = 0.0;
  double price_per_hour = 0.0;
  double seconds = 0.0;
  double days = 0.0;
  double dollars = 0.0;
};

CostReport estimate_cost(std::uint32_t agents, std::uint32_t strategies,
                         double throughput = 5.6e12, double price_per_hour = 0.9);

// Ising ---------------------------------------------------------------------

struct McmcConfig {
  std::uint64_t sweeps = 20000;
  /// Leading fraction of sweeps discarded.
  double burn_in = 0.5;
  std::uint64_t seed = 0;
};

struct McmcResult {
  /// Most visited configuration over the tail (ties: lowest index).
  Profile modal;
  double modal_xi = 0.0;
  /// Mean ξ over tail samples.
  double xi = 0.0;
  double acceptance_rate = 0.0;
  std::uint64_t samples = 0;
  /// Tail visit counts per configuration index (same encoding as the game).
  std::vector<std::pair<Index, std::uint64_t>> histogram;
};

/// Metropolis single-spin flips targeting exp(−E/τ).
McmcResult ising_mcmc_oracle(const IsingSpec& spec, const McmcConfig& config);

struct IsingPhaseSpec {
  IsingSpec lattice;
  std::vector<double> temperatures;
  /// The m = 2 lattice chains relax slowly out of domain states, so sub-game
  /// solves get a larger budget than a plain solve.
  OracleConfig oracle = [] {
    OracleConfig c;
    c.solver.max_iters = 4000000;
    return c;
  }();
  int population = 50;
  /// α = alpha_scale / τ.
  double alpha_scale = 1.0;
  McmcConfig mcmc;
  unsigned workers = 1;
  /// Also solve the full game exactly when n is at most this.
  Index exact_cap = 4096;

  void validate() const;
};

struct IsingPhaseRow {
  double temperature = 0.0;
  double alpha = 0.0;
  Profile top;
  double xi_top = 0.0;
  /// Σ_p v_p ξ(p) over the oracle's final sub-game distribution.
  double xi_ranking = 0.0;
  double xi_mcmc = 0.0;
  double mcmc_modal_xi = 0.0;
  double mcmc_acceptance = 0.0;
  double oracle_disagreement = 0.0;
  std::optional<Index> exact_top;
  std::optional<double> xi_exact;
};

std::vector<IsingPhaseRow> run_ising_phase_study(const IsingPhaseSpec& spec);

}  // namespace aarank
