#include "aarank/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace aarank {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw DataError("cannot format number");
  return std::string(buf, end);
}

double parse_double(const std::string& text, const std::string& context) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  auto [end, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || end != last || text.empty()) {
    throw DataError(context + ": '" + text + "' is not a decimal number");
  }
  if (!std::isfinite(v)) throw DataError(context + ": payoff must be finite");
  return v;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

// Binary tensor ------------------------------------------------------------

namespace {

constexpr char kTensorMagic[8] = {'A', 'A', 'R', 'K', 'T', 'N', 'S', 'R'};

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::uint64_t bits;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(v);
  } else {
    bits = v;
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in, const std::string& what) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw DataError("tensor file truncated while reading " + what);
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= std::uint64_t{bytes[i]} << (8 * i);
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace

void write_tensor_file(const std::filesystem::path& path, const ProfileIndex& index,
                       const std::vector<std::vector<double>>& tables) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kTensorMagic, sizeof kTensorMagic);
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(index.num_agents()));
  for (std::uint32_t k : index.strategy_counts()) put_le<std::uint32_t>(out, k);
  for (const auto& t : tables) {
    for (double v : t) put_le<double>(out, v);
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<std::vector<double>> read_tensor_file(const std::filesystem::path& path,
                                                  std::vector<std::uint32_t>& counts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open tensor file " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kTensorMagic, sizeof magic) != 0) {
    throw DataError(path.string() + ": not a tensor file (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != 1) throw DataError(path.string() + ": unsupported tensor version " + std::to_string(version));
  const auto agents = get_le<std::uint32_t>(in, "agent count");
  if (agents == 0 || agents > 64) throw DataError(path.string() + ": implausible agent count");
  counts.resize(agents);
  for (auto& k : counts) k = get_le<std::uint32_t>(in, "strategy counts");
  const ProfileIndex index(counts);
  std::vector<std::vector<double>> tables(agents, std::vector<double>(index.size()));
  for (std::uint32_t a = 0; a < agents; ++a) {
    for (Index i = 0; i < index.size(); ++i) {
      tables[a][i] = get_le<double>(in, "payoffs of agent " + std::to_string(a));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError(path.string() + ": trailing bytes after payoff tables");
  }
  return tables;
}

// Game files -------------------------------------------------------------

namespace {

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("game file: missing field '") + key + "'");
  return *it;
}

std::uint32_t as_count(const json& v, const std::string& context) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1 ||
      v.get<std::int64_t>() > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError(context + ": expected a positive integer");
  }
  return v.get<std::uint32_t>();
}

}  // namespace

GameSpec parse_game_json(const std::string& text, bool strict, std::vector<std::string>& warnings,
                         const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError("game file: malformed JSON at " + line_column(text, e.byte == 0 ? 0 : e.byte - 1) +
                    ": " + e.what());
  }
  if (!doc.is_object()) throw DataError("game file: top level must be an object");

  static const std::set<std::string> known = {"format",  "version",         "name",
                                              "num_agents", "strategy_counts", "labels",
                                              "payoffs", "payoff_file"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (known.count(it.key())) continue;
    if (strict) throw DataError("game file: unknown field '" + it.key() + "'");
    warnings.push_back("ignoring unknown field '" + it.key() + "'");
  }
  if (auto f = doc.find("format"); f != doc.end() && *f != "aarank-game") {
    throw DataError("game file: field 'format' must be \"aarank-game\"");
  }
  const json& version = require(doc, "version");
  if (!version.is_number_integer() || version.get<int>() != kGameFileVersion) {
    throw DataError("game file: unsupported version " + version.dump() + " (expected " +
                    std::to_string(kGameFileVersion) + ")");
  }
  const json& counts_json = require(doc, "strategy_counts");
  if (!counts_json.is_array()) throw DataError("game file: 'strategy_counts' must be an array");
  std::vector<std::uint32_t> counts;
  for (std::size_t i = 0; i < counts_json.size(); ++i) {
    counts.push_back(as_count(counts_json[i], "game file: strategy_counts[" + std::to_string(i) + "]"));
  }
  const std::uint32_t agents = as_count(require(doc, "num_agents"), "game file: num_agents");
  if (agents != counts.size()) {
    throw DataError("game file: num_agents is " + std::to_string(agents) + " but strategy_counts has " +
                    std::to_string(counts.size()) + " entries");
  }
  const ProfileIndex index(counts);

  std::vector<std::vector<double>> tables;
  const bool inline_payoffs = doc.contains("payoffs");
  const bool sidecar = doc.contains("payoff_file");
  if (inline_payoffs == sidecar) {
    throw DataError("game file: exactly one of 'payoffs' and 'payoff_file' is required");
  }
  if (inline_payoffs) {
    const json& p = doc["payoffs"];
    if (!p.is_array() || p.size() != agents) {
      throw DataError("game file: 'payoffs' must hold one array per agent (" + std::to_string(agents) + ")");
    }
    for (std::uint32_t a = 0; a < agents; ++a) {
      const json& row = p[a];
      const std::string ctx = "game file: payoffs[" + std::to_string(a) + "]";
      if (!row.is_array()) throw DataError(ctx + ": expected an array");
      if (row.size() != index.size()) {
        throw DataError(ctx + ": has " + std::to_string(row.size()) + " values, expected " +
                        std::to_string(index.size()));
      }
      std::vector<double> t(index.size());
      for (Index i = 0; i < index.size(); ++i) {
        const json& v = row[i];
        const std::string vctx = ctx + "[" + std::to_string(i) + "]";
        if (v.is_string()) {
          t[i] = parse_double(v.get<std::string>(), vctx);
        } else if (v.is_number()) {
          t[i] = v.get<double>();
        } else {
          throw DataError(vctx + ": expected a decimal string");
        }
      }
      tables.push_back(std::move(t));
    }
  } else {
    const json& f = doc["payoff_file"];
    if (!f.is_string()) throw DataError("game file: 'payoff_file' must be a string");
    std::vector<std::uint32_t> file_counts;
    tables = read_tensor_file(base_dir / f.get<std::string>(), file_counts);
    if (file_counts != counts) throw DataError("game file: tensor sidecar shape does not match strategy_counts");
  }

  auto provider = std::make_shared<DenseTablePayoff>(index, std::move(tables));
  GameSpec game(counts, provider, doc.value("name", std::string("file")));
  if (auto l = doc.find("labels"); l != doc.end()) {
    if (!l->is_array()) throw DataError("game file: 'labels' must be an array");
    std::vector<std::vector<std::string>> labels;
    for (std::size_t a = 0; a < l->size(); ++a) {
      const json& row = (*l)[a];
      if (!row.is_array()) throw DataError("game file: labels[" + std::to_string(a) + "] must be an array");
      std::vector<std::string> names;
      for (const auto& s : row) {
        if (!s.is_string()) throw DataError("game file: labels[" + std::to_string(a) + "] must hold strings");
        names.push_back(s.get<std::string>());
      }
      labels.push_back(std::move(names));
    }
    try {
      game.set_labels(std::move(labels));
    } catch (const DataError& e) {
      throw DataError(std::string("game file: ") + e.what());
    }
  }
  return game;
}

GameSpec read_game_file(const std::filesystem::path& path, bool strict,
                        std::vector<std::string>& warnings) {
  try {
    return parse_game_json(read_text_file(path), strict, warnings, path.parent_path());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json game_to_json(const GameSpec& game) {
  json doc;
  doc["format"] = "aarank-game";
  doc["version"] = kGameFileVersion;
  doc["name"] = game.name();
  doc["num_agents"] = game.num_agents();
  doc["strategy_counts"] = std::vector<std::uint32_t>(game.index().strategy_counts().begin(),
                                                      game.index().strategy_counts().end());
  doc["labels"] = game.labels();
  return doc;
}

void write_game_file(const GameSpec& game, const std::filesystem::path& path,
                     const std::filesystem::path& sidecar) {
  json doc = game_to_json(game);
  const auto dense = to_dense(game);
  if (sidecar.empty()) {
    json payoffs = json::array();
    for (const auto& t : dense->tables()) {
      json row = json::array();
      for (double v : t) row.push_back(format_double(v));
      payoffs.push_back(std::move(row));
    }
    doc["payoffs"] = std::move(payoffs);
  } else {
    write_tensor_file(path.parent_path() / sidecar, game.index(), dense->tables());
    doc["payoff_file"] = sidecar.string();
  }
  write_text_file(path, doc.dump(1) + "\n");
}

// Configs ------------------------------------------------------------------

namespace {

template <class T>
void read_opt(const json& j, const char* key, T& dst) {
  if (auto it = j.find(key); it != j.end()) dst = it->get<T>();
}

}  // namespace

json to_json(const SolverConfig& c) {
  return {{"delta", c.delta},
          {"lambda0", c.lambda0},
          {"gamma", c.gamma},
          {"step_rule", to_string(c.step.rule)},
          {"eta0", c.step.eta0},
          {"update", to_string(c.update)},
          {"max_iters", c.max_iters},
          {"grad_norm_tol", c.grad_norm_tol},
          {"grad_window", c.grad_window},
          {"min_iters", c.min_iters},
          {"seed", c.seed},
          {"x_floor", c.x_floor},
          {"lambda_cutoff", c.lambda_cutoff},
          {"checkpoint_every", c.checkpoint_every}};
}

SolverConfig solver_config_from_json(const json& j) {
  SolverConfig c;
  read_opt(j, "delta", c.delta);
  read_opt(j, "lambda0", c.lambda0);
  read_opt(j, "gamma", c.gamma);
  if (j.contains("step_rule")) c.step.rule = parse_step_rule(j["step_rule"].get<std::string>());
  read_opt(j, "eta0", c.step.eta0);
  if (j.contains("update")) c.update = parse_update_rule(j["update"].get<std::string>());
  read_opt(j, "max_iters", c.max_iters);
  read_opt(j, "grad_norm_tol", c.grad_norm_tol);
  read_opt(j, "grad_window", c.grad_window);
  read_opt(j, "min_iters", c.min_iters);
  read_opt(j, "seed", c.seed);
  read_opt(j, "x_floor", c.x_floor);
  read_opt(j, "lambda_cutoff", c.lambda_cutoff);
  read_opt(j, "checkpoint_every", c.checkpoint_every);
  return c;
}

json to_json(const EvoParams& p) {
  return {{"alpha", p.alpha}, {"population", p.population}, {"tie_epsilon", p.tie_epsilon}};
}

EvoParams evo_params_from_json(const json& j) {
  EvoParams p;
  read_opt(j, "alpha", p.alpha);
  read_opt(j, "population", p.population);
  read_opt(j, "tie_epsilon", p.tie_epsilon);
  return p;
}

json to_json(const OracleConfig& c) {
  return {{"num_trials", c.num_trials},
          {"init_subset_size", c.init_subset_size},
          {"max_expansions", c.max_expansions},
          {"workers", c.workers},
          {"solver", to_json(c.solver)}};
}

OracleConfig oracle_config_from_json(const json& j) {
  OracleConfig c;
  read_opt(j, "num_trials", c.num_trials);
  read_opt(j, "init_subset_size", c.init_subset_size);
  read_opt(j, "max_expansions", c.max_expansions);
  read_opt(j, "workers", c.workers);
  if (j.contains("solver")) c.solver = solver_config_from_json(j["solver"]);
  return c;
}

json to_json(const IsingSpec& s) {
  return {{"rows", s.rows},         {"cols", s.cols},
          {"field", s.field},       {"coupling", s.coupling},
          {"temperature", s.temperature}};
}

IsingSpec ising_spec_from_json(const json& j) {
  IsingSpec s;
  read_opt(j, "rows", s.rows);
  read_opt(j, "cols", s.cols);
  read_opt(j, "field", s.field);
  read_opt(j, "coupling", s.coupling);
  read_opt(j, "temperature", s.temperature);
  return s;
}

// Results ------------------------------------------------------------------

json to_json(const RankingResult& r, const GameSpec& game, std::size_t max_entries) {
  json out;
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  out["top"] = {{"index", r.top()}, {"profile", game.profile_label(r.top())},
                {"mass", r.distribution[r.top()]}};
  const bool truncated = r.distribution.size() > max_entries;
  out["distribution_truncated"] = truncated;
  json ranking = json::array();
  const std::size_t count = std::min(r.ranking.size(), truncated ? std::size_t{1000} : r.ranking.size());
  for (std::size_t i = 0; i < count; ++i) {
    const Index p = r.ranking[i];
    ranking.push_back({{"index", p}, {"profile", game.profile_label(p)}, {"mass", r.distribution[p]}});
  }
  out["ranking"] = std::move(ranking);
  if (!truncated) out["distribution"] = r.distribution;
  json trace = json::array();
  for (const auto& t : r.trace) {
    trace.push_back({{"iteration", t.iteration},
                     {"objective", t.objective},
                     {"grad_norm", t.grad_norm},
                     {"residual", t.residual}});
  }
  out["trace"] = std::move(trace);
  return out;
}

json to_json(const OracleResult& r, const GameSpec& game) {
  json out;
  out["winner"] = {{"index", r.winner}, {"profile", game.profile_label(r.winner)}};
  out["disagreement_rate"] = r.disagreement_rate;
  json trials = json::array();
  for (std::size_t t = 0; t < r.trials.size(); ++t) {
    const auto& tr = r.trials[t];
    trials.push_back({{"trial", t},
                      {"top", tr.top},
                      {"profile", game.profile_label(tr.top)},
                      {"top_mass", tr.top_mass},
                      {"expansions", tr.expansions},
                      {"iterations", tr.iterations},
                      {"converged", tr.converged},
                      {"final_sets", tr.final_sets}});
  }
  out["trials"] = std::move(trials);
  json ranking = json::array();
  for (Index i : r.result.ranking) {
    ranking.push_back({{"index", r.profiles[i]},
                       {"profile", game.profile_label(r.profiles[i])},
                       {"mass", r.result.distribution[i]}});
  }
  out["subgame_ranking"] = std::move(ranking);
  out["subgame_profiles"] = r.profiles;
  out["subgame_distribution"] = r.result.distribution;
  out["iterations"] = r.result.iterations;
  out["converged"] = r.result.converged;
  return out;
}

json to_json(const SweepResult& r) {
  json out;
  out["game"] = r.game_id;
  out["profiles"] = r.profile_labels;
  out["top_agreement"] = r.top_agreement;
  json pts = json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"alpha", p.alpha},
                   {"dense", p.dense},
                   {"sgd", p.sgd},
                   {"dense_top", r.profile_labels[p.dense_top]},
                   {"sgd_top", r.profile_labels[p.sgd_top]},
                   {"sgd_iterations", p.sgd_iterations},
                   {"sgd_converged", p.sgd_converged}});
  }
  out["points"] = std::move(pts);
  return out;
}

json to_json(const ScalingRow& r) {
  return {{"n", r.n},
          {"solver", r.solver},
          {"shape", r.shape},
          {"wall_seconds", r.wall_seconds},
          {"peak_rss_bytes", r.peak_rss_bytes},
          {"hwm_bytes", r.hwm_bytes},
          {"base_rss_bytes", r.base_rss_bytes},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"dnf", r.dnf},
          {"note", r.note}};
}

json to_json(const IsingPhaseRow& r, const GameSpec& game) {
  json out = {{"temperature", r.temperature},
              {"alpha", r.alpha},
              {"top", game.profile_label(game.index().encode(r.top))},
              {"xi_top", r.xi_top},
              {"xi_ranking", r.xi_ranking},
              {"xi_mcmc", r.xi_mcmc},
              {"mcmc_modal_xi", r.mcmc_modal_xi},
              {"mcmc_acceptance", r.mcmc_acceptance},
              {"oracle_disagreement", r.oracle_disagreement}};
  out["exact_top"] = r.exact_top ? json(game.profile_label(*r.exact_top)) : json(nullptr);
  out["xi_exact"] = r.xi_exact ? json(*r.xi_exact) : json(nullptr);
  return out;
}

json to_json(const CostReport& r) {
  return {{"agents", r.agents},
          {"strategies", r.strategies},
          {"flops", r.flops},
          {"flops_approx", r.flops_approx},
          {"throughput", r.throughput},
          {"price_per_hour", r.price_per_hour},
          {"seconds", r.seconds},
          {"days", r.days},
          {"dollars", r.dollars}};
}

// CSV ----------------------------------------------------------------------

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_rank_csv(std::ostream& out, const RankingResult& r, const GameSpec& game,
                    const std::vector<Index>& profiles) {
  out << "rank,profile,mass\n";
  for (std::size_t i = 0; i < r.ranking.size(); ++i) {
    const Index p = r.ranking[i];
    const Index full = profiles.empty() ? p : profiles[p];
    out << i + 1 << ',' << csv_escape(game.profile_label(full)) << ','
        << format_double(r.distribution[p]) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << "alpha,solver,profile,mass\n";
  for (const auto& p : r.points) {
    for (const char* solver : {"dense", "sgd"}) {
      const auto& dist = std::strcmp(solver, "dense") == 0 ? p.dense : p.sgd;
      for (std::size_t i = 0; i < dist.size(); ++i) {
        out << format_double(p.alpha) << ',' << solver << ',' << csv_escape(r.profile_labels[i])
            << ',' << format_double(dist[i]) << '\n';
      }
    }
  }
}

void write_scaling_csv(std::ostream& out, const ScalingResult& r) {
  out << "n,solver,shape,wall_seconds,peak_rss_bytes,hwm_bytes,base_rss_bytes,iterations,"
         "converged,dnf,note\n";
  for (const auto& row : r.rows) {
    std::string shape;
    for (std::size_t i = 0; i < row.shape.size(); ++i) {
      if (i) shape += 'x';
      shape += std::to_string(row.shape[i]);
    }
    out << row.n << ',' << row.solver << ',' << shape << ',' << format_double(row.wall_seconds)
        << ',' << row.peak_rss_bytes << ',' << row.hwm_bytes << ',' << row.base_rss_bytes << ','
        << row.iterations << ',' << (row.converged ? 1 : 0) << ',' << (row.dnf ? 1 : 0) << ','
        << csv_escape(row.note) << '\n';
  }
}

void write_ising_csv(std::ostream& out, const std::vector<IsingPhaseRow>& rows,
                     const GameSpec& game) {
  out << "tau,alpha,top,xi_top,xi_ranking,xi_exact,xi_mcmc,mcmc_modal_xi,mcmc_acceptance,"
         "oracle_disagreement\n";
  for (const auto& r : rows) {
    out << format_double(r.temperature) << ',' << format_double(r.alpha) << ','
        << csv_escape(game.profile_label(game.index().encode(r.top))) << ','
        << format_double(r.xi_top) << ',' << format_double(r.xi_ranking) << ','
        << (r.xi_exact ? format_double(*r.xi_exact) : "") << ',' << format_double(r.xi_mcmc)
        << ',' << format_double(r.mcmc_modal_xi) << ',' << format_double(r.mcmc_acceptance)
        << ',' << format_double(r.oracle_disagreement) << '\n';
  }
}

void write_cost_csv(std::ostream& out, const std::vector<CostReport>& rows) {
  out << "agents,strategies,flops,throughput,price_per_hour,seconds,days,dollars\n";
  for (const auto& r : rows) {
    out << r.agents << ',' << r.strategies << ',' << r.flops << ',' << format_double(r.throughput)
        << ',' << format_double(r.price_per_hour) << ',' << format_double(r.seconds) << ','
        << format_double(r.days) << ',' << format_double(r.dollars) << '\n';
  }
}

}  // namespace aarank
