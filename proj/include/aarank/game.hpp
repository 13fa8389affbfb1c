#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aarank {

/// Flat index of a joint strategy profile.
using Index = std::uint64_t;

/// One strategy index per agent.
using Profile = std::vector<std::uint32_t>;

/// Raised for malformed inputs: bad shapes, out-of-range indices, bad files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a request is valid in form but exceeds a configured limit
/// (e.g. dense solver over its cap).
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Big-endian mixed-radix mapping between joint profiles and flat indices.
/// Agent 0 is the most significant digit.
class ProfileIndex {
 public:
  ProfileIndex() = default;
  explicit ProfileIndex(std::vector<std::uint32_t> strategy_counts);

  std::size_t num_agents() const { return counts_.size(); }
  Index size() const { return size_; }
  std::uint32_t strategy_count(std::size_t agent) const { return counts_[agent]; }
  std::span<const std::uint32_t> strategy_counts() const { return counts_; }

  /// ∏_{l>agent} k_l.
  Index stride(std::size_t agent) const { return strides_[agent]; }

  /// Σ_l (k_l − 1): number of single-agent deviations from any profile.
  std::size_t num_deviations() const { return deviations_; }

  Index encode(std::span<const std::uint32_t> profile) const;
  Profile decode(Index index) const;
  void decode_into(Index index, std::span<std::uint32_t> out) const;

  std::uint32_t digit(Index index, std::size_t agent) const {
    return static_cast<std::uint32_t>((index / strides_[agent]) % counts_[agent]);
  }

  /// Index of the profile equal to `index` except agent plays `strategy`.
  Index with_strategy(Index index, std::size_t agent, std::uint32_t strategy) const {
    const Index current = digit(index, agent);
    return index - current * strides_[agent] + Index{strategy} * strides_[agent];
  }

 private:
  std::vector<std::uint32_t> counts_;
  std::vector<Index> strides_;
  Index size_ = 1;
  std::size_t deviations_ = 0;
};

/// Payoff access: (agent, joint profile) -> real. Implementations must be
/// deterministic and safe for concurrent reads.
class PayoffProvider {
 public:
  virtual ~PayoffProvider() = default;
  virtual double payoff(std::size_t agent, Index profile) const = 0;
};

/// Dense payoff tensor: one flat array per agent in ProfileIndex order.
class DenseTablePayoff final : public PayoffProvider {
 public:
  DenseTablePayoff(const ProfileIndex& index, std::vector<std::vector<double>> tables);
  double payoff(std::size_t agent, Index profile) const override {
    return tables_[agent][profile];
  }
  const std::vector<std::vector<double>>& tables() const { return tables_; }

 private:
  std::vector<std::vector<double>> tables_;
};

/// Counter-based pseudo-random payoffs, uniform in [0, 1). Nothing is stored,
/// so arbitrarily large games cost no memory.
class RandomPayoff final : public PayoffProvider {
 public:
  explicit RandomPayoff(std::uint64_t seed) : seed_(seed) {}
  double payoff(std::size_t agent, Index profile) const override;

 private:
  std::uint64_t seed_;
};

/// Base random payoffs with one planted profile whose payoffs, for every
/// agent, are 1 + (maximum base payoff over the whole game).
class PlantedPayoff final : public PayoffProvider {
 public:
  PlantedPayoff(const ProfileIndex& index, std::uint64_t seed, Index planted);
  double payoff(std::size_t agent, Index profile) const override {
    return profile == planted_ ? top_ : base_.payoff(agent, profile);
  }
  Index planted() const { return planted_; }

 private:
  RandomPayoff base_;
  Index planted_;
  double top_;
};

/// An evaluation problem instance.
class GameSpec {
 public:
  /// Requires N >= 2 and every k_i >= 2.
  GameSpec(std::vector<std::uint32_t> strategy_counts,
           std::shared_ptr<const PayoffProvider> payoffs, std::string name = {});

  /// Sub-game views may hold single-strategy agents; only k_i >= 1 is enforced.
  static GameSpec restricted(std::vector<std::uint32_t> strategy_counts,
                             std::shared_ptr<const PayoffProvider> payoffs,
                             std::string name = {});

  const ProfileIndex& index() const { return index_; }
  std::size_t num_agents() const { return index_.num_agents(); }
  Index num_profiles() const { return index_.size(); }
  std::uint32_t strategy_count(std::size_t agent) const { return index_.strategy_count(agent); }

  double payoff(std::size_t agent, Index profile) const { return payoffs_->payoff(agent, profile); }
  const std::shared_ptr<const PayoffProvider>& payoffs() const { return payoffs_; }

  const std::string& name() const { return name_; }

  /// Strategy labels per agent; defaults to "0", "1", ...
  const std::vector<std::vector<std::string>>& labels() const { return labels_; }
  void set_labels(std::vector<std::vector<std::string>> labels);
  std::string profile_label(Index profile) const;

 private:
  GameSpec() = default;

  ProfileIndex index_;
  std::shared_ptr<const PayoffProvider> payoffs_;
  std::string name_;
  std::vector<std::vector<std::string>> labels_;
};

/// Materializes every payoff into a dense table.
std::shared_ptr<const DenseTablePayoff> to_dense(const GameSpec& game);

// Builtin games ----------------------------------------------------------

/// Two-player game from row/column payoff matrices (row-major, k0 x k1).
GameSpec make_bimatrix_game(std::uint32_t rows, std::uint32_t cols, std::vector<double> row_payoffs,
                            std::vector<double> col_payoffs,
                            std::vector<std::vector<std::string>> labels, std::string name);

/// T=5, R=3, P=1, S=0.
GameSpec make_prisoners_dilemma();
GameSpec make_battle_of_sexes();
GameSpec make_biased_rps();
/// Unbiased zero-sum RPS; used as a symmetry control.
GameSpec make_rps();

/// Uniform [0,1) payoffs for every agent and profile.
GameSpec make_random_game(std::vector<std::uint32_t> strategy_counts, std::uint64_t seed);

/// N agents with k strategies each and a planted dominant profile drawn from
/// `seed`. Retrieve the profile with planted_profile().
GameSpec make_synthetic_dominant_game(std::uint32_t num_agents, std::uint32_t num_strategies,
                                      std::uint64_t seed);
Index planted_profile(const GameSpec& game);

/// Looks up "pd", "bos", "brps", "rps" (and long-form aliases).
GameSpec make_builtin_game(const std::string& id);
std::vector<std::string> builtin_game_ids();

}  // namespace aarank
