#pragma once

#include <cstdint>
#include <vector>

#include "aarank/solvers.hpp"

namespace aarank {

/// A game restricted to per-agent active strategy subsets. Sub-game
/// strategy j of agent i is the j-th smallest member of sets()[i].
class SubGame {
 public:
  SubGame(GameSpec full, std::vector<std::vector<std::uint32_t>> sets);

  const GameSpec& full() const { return full_; }
  const std::vector<std::vector<std::uint32_t>>& sets() const { return sets_; }
  /// Game over the active subsets; payoffs delegate to the full game.
  const GameSpec& view() const { return view_; }

  bool contains(std::size_t agent, std::uint32_t strategy) const;
  /// Full-game profile for a sub-game index.
  Profile to_full(Index sub_index) const;
  Index full_index(Index sub_index) const;
  /// Union of `additions` (one full-game strategy per agent) into the sets.
  SubGame grown(const std::vector<std::uint32_t>& additions) const;

  bool operator==(const SubGame& other) const { return sets_ == other.sets_; }

 private:
  GameSpec full_;
  std::vector<std::vector<std::uint32_t>> sets_;
  GameSpec view_;
};

struct OracleConfig {
  std::uint32_t num_trials = 5;
  /// Initial strategies drawn per agent (capped at k_i).
  std::uint32_t init_subset_size = 1;
  /// Inner solver; its seed also seeds the trials.
  SolverConfig solver;
  /// Cap on expansions per trial; 0 means run to the fixed point.
  std::uint32_t max_expansions = 0;
  /// Concurrent trials.
  unsigned workers = 1;

  void validate() const;
};

/// argmax over the FULL strategy set of `agent` with the others fixed at
/// `profile`; ties go to the lowest index.
std::uint32_t best_response(std::size_t agent, std::span<const std::uint32_t> profile,
                            const GameSpec& game);

/// Adds every agent's best response to `top` (full-game strategies).
SubGame oracle_expand(const SubGame& state, std::span<const std::uint32_t> top);

struct TrialResult {
  /// Top profile (full-game index) of the last sub-game solve.
  Index top = 0;
  std::uint32_t expansions = 0;
  std::uint64_t iterations = 0;
  /// All inner solves converged.
  bool converged = true;
  /// Mass of `top` in the last sub-game solve.
  double top_mass = 0.0;
  std::vector<std::vector<std::uint32_t>> final_sets;
};

struct OracleResult {
  /// Plurality winner over trials (full-game index). Tied tops are settled
  /// by mass in a solve over the union of their trials' final sets.
  Index winner = 0;
  /// That tie-break solve if one ran, else the last sub-game solve of the
  /// first trial that produced the winner.
  RankingResult result;
  /// Full-game index of each entry of result.distribution.
  std::vector<Index> profiles;
  std::vector<TrialResult> trials;
  /// Fraction of trials whose top differs from the winner.
  double disagreement_rate = 0.0;
};

OracleResult alpha_alpha_oracle(const GameSpec& game, const EvoParams& params,
                                const OracleConfig& config);

}  // namespace aarank
