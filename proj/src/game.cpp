#include "aarank/game.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "aarank/random.hpp"

namespace aarank {

ProfileIndex::ProfileIndex(std::vector<std::uint32_t> strategy_counts)
    : counts_(std::move(strategy_counts)), strides_(counts_.size(), 1) {
  if (counts_.empty()) throw DataError("profile index needs at least one agent");
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] == 0) {
      throw DataError("agent " + std::to_string(i) + " has no strategies");
    }
  }
  Index n = 1;
  for (std::size_t i = counts_.size(); i-- > 0;) {
    strides_[i] = n;
    if (__builtin_mul_overflow(n, Index{counts_[i]}, &n)) {
      throw DataError("number of joint profiles overflows a 64-bit index");
    }
    deviations_ += counts_[i] - 1;
  }
  size_ = n;
}

Index ProfileIndex::encode(std::span<const std::uint32_t> profile) const {
  if (profile.size() != counts_.size()) {
    throw DataError("profile has " + std::to_string(profile.size()) + " entries, expected " +
                    std::to_string(counts_.size()));
  }
  Index out = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (profile[i] >= counts_[i]) {
      throw DataError("strategy " + std::to_string(profile[i]) + " out of range for agent " +
                      std::to_string(i) + " (k=" + std::to_string(counts_[i]) + ")");
    }
    out += Index{profile[i]} * strides_[i];
  }
  return out;
}

Profile ProfileIndex::decode(Index index) const {
  Profile out(counts_.size());
  decode_into(index, out);
  return out;
}

void ProfileIndex::decode_into(Index index, std::span<std::uint32_t> out) const {
  if (index >= size_) {
    throw DataError("profile index " + std::to_string(index) + " out of range (n=" +
                    std::to_string(size_) + ")");
  }
  for (std::size_t i = counts_.size(); i-- > 0;) {
    out[i] = static_cast<std::uint32_t>(index % counts_[i]);
    index /= counts_[i];
  }
}

DenseTablePayoff::DenseTablePayoff(const ProfileIndex& index,
                                   std::vector<std::vector<double>> tables)
    : tables_(std::move(tables)) {
  if (tables_.size() != index.num_agents()) {
    throw DataError("expected " + std::to_string(index.num_agents()) + " payoff arrays, got " +
                    std::to_string(tables_.size()));
  }
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (tables_[i].size() != index.size()) {
      throw DataError("payoff array for agent " + std::to_string(i) + " has length " +
                      std::to_string(tables_[i].size()) + ", expected " +
                      std::to_string(index.size()));
    }
  }
}

double RandomPayoff::payoff(std::size_t agent, Index profile) const {
  std::uint64_t h = splitmix64(seed_ ^ splitmix64(profile));
  h = splitmix64(h + 0x9e3779b97f4a7c15ULL * (agent + 1));
  return unit_double(h);
}

PlantedPayoff::PlantedPayoff(const ProfileIndex& index, std::uint64_t seed, Index planted)
    : base_(seed), planted_(planted) {
  double best = 0.0;
  for (Index p = 0; p < index.size(); ++p) {
    for (std::size_t i = 0; i < index.num_agents(); ++i) best = std::max(best, base_.payoff(i, p));
  }
  top_ = 1.0 + best;
}

namespace {

void check_counts(const std::vector<std::uint32_t>& counts, bool strict) {
  if (strict && counts.size() < 2) throw DataError("a game needs at least two agents");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::uint32_t minimum = strict ? 2 : 1;
    if (counts[i] < minimum) {
      throw DataError("agent " + std::to_string(i) + " needs at least " +
                      std::to_string(minimum) + " strategies");
    }
  }
}

std::vector<std::vector<std::string>> default_labels(const ProfileIndex& index) {
  std::vector<std::vector<std::string>> labels(index.num_agents());
  for (std::size_t i = 0; i < index.num_agents(); ++i) {
    for (std::uint32_t s = 0; s < index.strategy_count(i); ++s) labels[i].push_back(std::to_string(s));
  }
  return labels;
}

}  // namespace

GameSpec::GameSpec(std::vector<std::uint32_t> strategy_counts,
                   std::shared_ptr<const PayoffProvider> payoffs, std::string name) {
  check_counts(strategy_counts, true);
  if (!payoffs) throw DataError("game has no payoff provider");
  index_ = ProfileIndex(std::move(strategy_counts));
  payoffs_ = std::move(payoffs);
  name_ = std::move(name);
  labels_ = default_labels(index_);
}

GameSpec GameSpec::restricted(std::vector<std::uint32_t> strategy_counts,
                              std::shared_ptr<const PayoffProvider> payoffs, std::string name) {
  check_counts(strategy_counts, false);
  if (!payoffs) throw DataError("game has no payoff provider");
  GameSpec g;
  g.index_ = ProfileIndex(std::move(strategy_counts));
  g.payoffs_ = std::move(payoffs);
  g.name_ = std::move(name);
  g.labels_ = default_labels(g.index_);
  return g;
}

void GameSpec::set_labels(std::vector<std::vector<std::string>> labels) {
  if (labels.size() != num_agents()) {
    throw DataError("label list has " + std::to_string(labels.size()) + " agents, expected " +
                    std::to_string(num_agents()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].size() != strategy_count(i)) {
      throw DataError("agent " + std::to_string(i) + " has " + std::to_string(labels[i].size()) +
                      " labels, expected " + std::to_string(strategy_count(i)));
    }
  }
  labels_ = std::move(labels);
}

std::string GameSpec::profile_label(Index profile) const {
  const Profile p = index_.decode(profile);
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) os << ',';
    os << labels_[i][p[i]];
  }
  os << ')';
  return os.str();
}

std::shared_ptr<const DenseTablePayoff> to_dense(const GameSpec& game) {
  if (auto dense = std::dynamic_pointer_cast<const DenseTablePayoff>(game.payoffs())) return dense;
  std::vector<std::vector<double>> tables(game.num_agents(),
                                          std::vector<double>(game.num_profiles()));
  for (std::size_t i = 0; i < game.num_agents(); ++i) {
    for (Index p = 0; p < game.num_profiles(); ++p) tables[i][p] = game.payoff(i, p);
  }
  return std::make_shared<DenseTablePayoff>(game.index(), std::move(tables));
}

GameSpec make_bimatrix_game(std::uint32_t rows, std::uint32_t cols, std::vector<double> row_payoffs,
                            std::vector<double> col_payoffs,
                            std::vector<std::vector<std::string>> labels, std::string name) {
  ProfileIndex index({rows, cols});
  auto provider = std::make_shared<DenseTablePayoff>(
      index, std::vector<std::vector<double>>{std::move(row_payoffs), std::move(col_payoffs)});
  GameSpec game({rows, cols}, provider, std::move(name));
  game.set_labels(std::move(labels));
  return game;
}

GameSpec make_prisoners_dilemma() {
  return make_bimatrix_game(2, 2, {3, 0, 5, 1}, {3, 5, 0, 1},
                            {{"Cooperate", "Defect"}, {"Cooperate", "Defect"}}, "pd");
}

GameSpec make_battle_of_sexes() {
  return make_bimatrix_game(2, 2, {3, 0, 0, 2}, {2, 0, 0, 3},
                            {{"Opera", "Football"}, {"Opera", "Football"}}, "bos");
}

GameSpec make_biased_rps() {
  const std::vector<double> row{0.0, -0.5, 1.0, 0.5, 0.0, -0.1, -1.0, 0.1, 0.0};
  std::vector<double> col(row.size());
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) col[a * 3 + b] = -row[a * 3 + b];
  }
  return make_bimatrix_game(3, 3, row, col,
                            {{"Rock", "Paper", "Scissors"}, {"Rock", "Paper", "Scissors"}},
                            "brps");
}

GameSpec make_rps() {
  const std::vector<double> row{0, -1, 1, 1, 0, -1, -1, 1, 0};
  std::vector<double> col(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) col[i] = -row[i];
  return make_bimatrix_game(3, 3, row, col,
                            {{"Rock", "Paper", "Scissors"}, {"Rock", "Paper", "Scissors"}}, "rps");
}

GameSpec make_random_game(std::vector<std::uint32_t> strategy_counts, std::uint64_t seed) {
  return GameSpec(std::move(strategy_counts), std::make_shared<RandomPayoff>(seed),
                  "random(seed=" + std::to_string(seed) + ")");
}

GameSpec make_synthetic_dominant_game(std::uint32_t num_agents, std::uint32_t num_strategies,
                                      std::uint64_t seed) {
  std::vector<std::uint32_t> counts(num_agents, num_strategies);
  check_counts(counts, true);
  ProfileIndex index(counts);
  const Index planted = splitmix64(seed ^ 0x5bd1e995ULL) % index.size();
  auto provider = std::make_shared<PlantedPayoff>(index, seed, planted);
  return GameSpec(std::move(counts), provider, "dominant(seed=" + std::to_string(seed) + ")");
}

Index planted_profile(const GameSpec& game) {
  auto planted = std::dynamic_pointer_cast<const PlantedPayoff>(game.payoffs());
  if (!planted) throw DataError("game '" + game.name() + "' has no planted profile");
  return planted->planted();
}

GameSpec make_builtin_game(const std::string& id) {
  static const std::unordered_map<std::string, GameSpec (*)()> table{
      {"pd", make_prisoners_dilemma},   {"prisoners_dilemma", make_prisoners_dilemma},
      {"bos", make_battle_of_sexes},    {"battle_of_sexes", make_battle_of_sexes},
      {"brps", make_biased_rps},        {"biased_rps", make_biased_rps},
      {"rps", make_rps},
  };
  auto it = table.find(id);
  if (it == table.end()) throw DataError("unknown builtin game '" + id + "'");
  return it->second();
}

std::vector<std::string> builtin_game_ids() { return {"pd", "bos", "brps", "rps"}; }

}  // namespace aarank
