#include "aarank/oracle.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "aarank/parallel.hpp"
#include "aarank/random.hpp"

namespace aarank {

namespace {

/// Payoffs of a sub-game, read through the full game under the index remap.
class SubGamePayoff final : public PayoffProvider {
 public:
  SubGamePayoff(const GameSpec& full, ProfileIndex sub_index,
                std::vector<std::vector<std::uint32_t>> sets)
      : payoffs_(full.payoffs()), full_index_(full.index()), sub_index_(std::move(sub_index)),
        sets_(std::move(sets)) {}

  double payoff(std::size_t agent, Index profile) const override {
    return payoffs_->payoff(agent, to_full(profile));
  }

  Index to_full(Index sub) const {
    Index full = 0;
    for (std::size_t a = 0; a < sets_.size(); ++a) {
      full += Index{sets_[a][sub_index_.digit(sub, a)]} * full_index_.stride(a);
    }
    return full;
  }

 private:
  std::shared_ptr<const PayoffProvider> payoffs_;
  ProfileIndex full_index_;
  ProfileIndex sub_index_;
  std::vector<std::vector<std::uint32_t>> sets_;
};

GameSpec make_view(const GameSpec& full, const std::vector<std::vector<std::uint32_t>>& sets) {
  std::vector<std::uint32_t> counts;
  counts.reserve(sets.size());
  for (const auto& s : sets) counts.push_back(static_cast<std::uint32_t>(s.size()));
  ProfileIndex sub_index(counts);
  auto provider = std::make_shared<SubGamePayoff>(full, sub_index, sets);
  GameSpec view = GameSpec::restricted(std::move(counts), provider, full.name());
  std::vector<std::vector<std::string>> labels(sets.size());
  for (std::size_t a = 0; a < sets.size(); ++a) {
    for (std::uint32_t s : sets[a]) labels[a].push_back(full.labels()[a][s]);
  }
  view.set_labels(std::move(labels));
  return view;
}

}  // namespace

SubGame::SubGame(GameSpec full, std::vector<std::vector<std::uint32_t>> sets)
    : full_(std::move(full)), sets_(std::move(sets)), view_(full_) {
  if (sets_.size() != full_.num_agents()) {
    throw DataError("sub-game has " + std::to_string(sets_.size()) + " strategy sets for " +
                    std::to_string(full_.num_agents()) + " agents");
  }
  for (std::size_t a = 0; a < sets_.size(); ++a) {
    auto& s = sets_[a];
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    if (s.empty()) throw DataError("agent " + std::to_string(a) + " has an empty strategy set");
    if (s.back() >= full_.strategy_count(a)) {
      throw DataError("agent " + std::to_string(a) + " strategy " + std::to_string(s.back()) +
                      " out of range");
    }
  }
  view_ = make_view(full_, sets_);
}

bool SubGame::contains(std::size_t agent, std::uint32_t strategy) const {
  return std::binary_search(sets_[agent].begin(), sets_[agent].end(), strategy);
}

Profile SubGame::to_full(Index sub_index) const {
  Profile p = view_.index().decode(sub_index);
  for (std::size_t a = 0; a < p.size(); ++a) p[a] = sets_[a][p[a]];
  return p;
}

Index SubGame::full_index(Index sub_index) const {
  return full_.index().encode(to_full(sub_index));
}

SubGame SubGame::grown(const std::vector<std::uint32_t>& additions) const {
  auto sets = sets_;
  for (std::size_t a = 0; a < sets.size(); ++a) sets[a].push_back(additions.at(a));
  return SubGame(full_, std::move(sets));
}

void OracleConfig::validate() const {
  if (num_trials == 0) throw DataError("oracle needs at least one trial");
  if (init_subset_size == 0) throw DataError("init_subset_size must be at least 1");
  if (workers == 0) throw DataError("workers must be at least 1");
  solver.validate();
}

std::uint32_t best_response(std::size_t agent, std::span<const std::uint32_t> profile,
                            const GameSpec& game) {
  const ProfileIndex& index = game.index();
  const Index base = index.encode(profile);
  std::uint32_t best = 0;
  double best_value = game.payoff(agent, index.with_strategy(base, agent, 0));
  for (std::uint32_t s = 1; s < index.strategy_count(agent); ++s) {
    const double v = game.payoff(agent, index.with_strategy(base, agent, s));
    if (v > best_value) {
      best_value = v;
      best = s;
    }
  }
  return best;
}

SubGame oracle_expand(const SubGame& state, std::span<const std::uint32_t> top) {
  std::vector<std::uint32_t> additions(state.full().num_agents());
  bool changed = false;
  for (std::size_t a = 0; a < additions.size(); ++a) {
    additions[a] = best_response(a, top, state.full());
    changed = changed || !state.contains(a, additions[a]);
  }
  return changed ? state.grown(additions) : state;
}

namespace {

struct TrialRun {
  TrialResult summary;
  RankingResult last;
  std::vector<Index> profiles;
};

TrialRun run_trial(const GameSpec& game, const EvoParams& params, const OracleConfig& config,
                   std::uint32_t trial) {
  // Trial 0 keeps the configured seed so full initial sets reproduce a
  // plain solve exactly.
  const std::uint64_t seed =
      trial == 0 ? config.solver.seed : derive_seed(config.solver.seed, trial);
  std::mt19937_64 rng(derive_seed(seed, 0x696e6974ULL));
  std::vector<std::vector<std::uint32_t>> sets(game.num_agents());
  for (std::size_t a = 0; a < sets.size(); ++a) {
    const std::uint32_t k = game.strategy_count(a);
    std::vector<std::uint32_t> pool(k);
    std::iota(pool.begin(), pool.end(), 0U);
    const std::uint32_t take = std::min(config.init_subset_size, k);
    for (std::uint32_t j = 0; j < take; ++j) {
      const std::uint32_t pick = j + static_cast<std::uint32_t>(rng() % (k - j));
      std::swap(pool[j], pool[pick]);
    }
    sets[a].assign(pool.begin(), pool.begin() + take);
  }

  SubGame state(game, std::move(sets));
  SolverConfig solver = config.solver;
  solver.seed = seed;
  TrialRun run;
  for (std::uint32_t step = 0;; ++step) {
    run.last = alpha_alpha_rank(state.view(), params, solver);
    run.summary.iterations += run.last.iterations;
    run.summary.converged = run.summary.converged && run.last.converged;
    const Index sub_top = run.last.top();
    const Profile top = state.to_full(sub_top);
    run.summary.top = game.index().encode(top);
    run.summary.top_mass = run.last.distribution[sub_top];
    if (config.max_expansions != 0 && step >= config.max_expansions) break;
    SubGame next = oracle_expand(state, top);
    if (next == state) break;
    state = std::move(next);
    ++run.summary.expansions;
    solver.seed = derive_seed(seed, step + 1);
  }
  run.summary.final_sets = state.sets();
  run.profiles.resize(state.view().num_profiles());
  for (Index i = 0; i < run.profiles.size(); ++i) run.profiles[i] = state.full_index(i);
  return run;
}

}  // namespace

OracleResult alpha_alpha_oracle(const GameSpec& game, const EvoParams& params,
                                const OracleConfig& config) {
  config.validate();
  params.validate();
  std::vector<TrialRun> runs(config.num_trials);
  parallel_for(config.num_trials, config.workers, [&](std::size_t t) {
    runs[t] = run_trial(game, params, config, static_cast<std::uint32_t>(t));
  });

  // Plurality vote. Tied tops are compared by mass in one solve over the
  // union of their trials' final sets, then by lower index.
  std::map<Index, std::uint32_t> votes;
  for (const auto& r : runs) ++votes[r.summary.top];
  std::uint32_t most = 0;
  for (const auto& [top, count] : votes) most = std::max(most, count);
  std::vector<Index> tied;
  for (const auto& [top, count] : votes) {
    if (count == most) tied.push_back(top);
  }

  OracleResult out;
  out.winner = tied.front();
  if (tied.size() > 1) {
    std::vector<std::vector<std::uint32_t>> sets(game.num_agents());
    for (const auto& r : runs) {
      if (std::find(tied.begin(), tied.end(), r.summary.top) == tied.end()) continue;
      for (std::size_t a = 0; a < sets.size(); ++a) {
        sets[a].insert(sets[a].end(), r.summary.final_sets[a].begin(),
                       r.summary.final_sets[a].end());
      }
    }
    for (auto& s : sets) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }
    const SubGame merged(game, std::move(sets));
    SolverConfig solver = config.solver;
    solver.seed = derive_seed(config.solver.seed, 0x7469650aULL);
    out.result = alpha_alpha_rank(merged.view(), params, solver);
    out.profiles.resize(merged.view().num_profiles());
    for (Index i = 0; i < out.profiles.size(); ++i) out.profiles[i] = merged.full_index(i);
    double best_mass = -1.0;
    for (Index top : tied) {
      const auto at = std::find(out.profiles.begin(), out.profiles.end(), top);
      const double mass = out.result.distribution[static_cast<Index>(at - out.profiles.begin())];
      if (mass > best_mass) {
        best_mass = mass;
        out.winner = top;
      }
    }
  }

  std::uint32_t agree = 0;
  bool taken = tied.size() > 1;
  for (auto& r : runs) {
    if (r.summary.top == out.winner) {
      ++agree;
      if (!taken) {
        out.result = std::move(r.last);
        out.profiles = std::move(r.profiles);
        taken = true;
      }
    }
    out.trials.push_back(std::move(r.summary));
  }
  out.disagreement_rate =
      1.0 - static_cast<double>(agree) / static_cast<double>(config.num_trials);
  return out;
}

}  // namespace aarank
