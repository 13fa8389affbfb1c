#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <sstream>

namespace aarank::cli {

using nlohmann::json;

const char* version() { return AARANK_VERSION; }

namespace {

std::vector<std::uint32_t> parse_shape(const std::string& text, const std::string& what) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(part, &used);
      if (used != part.size() || v == 0 || v > 0xffffffffUL) throw std::invalid_argument(part);
      out.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::exception&) {
      throw DataError(what + ": '" + text + "' is not a shape like 3x3");
    }
  }
  if (out.empty()) throw DataError(what + ": empty shape");
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json make_record(const std::string& command, const json& config) {
  json rec;
  rec["format"] = "aarank-run";
  rec["version"] = kRunRecordVersion;
  rec["tool_version"] = version();
  rec["command"] = command;
  rec["config"] = config;
  return rec;
}

}  // namespace

json game_source(const std::string& spec, std::uint64_t game_seed, double field, double coupling,
                 bool strict) {
  const auto colon = spec.find(':');
  const std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "random") {
    return {{"kind", "random"}, {"counts", parse_shape(arg, "random game")}, {"seed", game_seed}};
  }
  if (kind == "synthetic") {
    const auto s = parse_shape(arg, "synthetic game");
    if (s.size() != 2) throw DataError("synthetic game: expected AGENTSxSTRATEGIES, e.g. 20x2");
    return {{"kind", "synthetic"}, {"agents", s[0]}, {"strategies", s[1]}, {"seed", game_seed}};
  }
  if (kind == "ising") {
    const auto s = parse_shape(arg.empty() ? "3x3" : arg, "ising game");
    if (s.size() != 2) throw DataError("ising game: expected ROWSxCOLS, e.g. 3x3");
    IsingSpec is;
    is.rows = s[0];
    is.cols = s[1];
    is.field = {field};
    is.coupling = coupling;
    return {{"kind", "ising"}, {"lattice", to_json(is)}};
  }
  for (const auto& id : builtin_game_ids()) {
    if (id == spec) return {{"kind", "builtin"}, {"id", spec}};
  }
  try {
    (void)make_builtin_game(spec);
    return {{"kind", "builtin"}, {"id", spec}};
  } catch (const DataError&) {
  }
  if (std::filesystem::exists(spec)) {
    return {{"kind", "file"}, {"path", std::filesystem::absolute(spec).string()}, {"strict", strict}};
  }
  std::string ids;
  for (const auto& id : builtin_game_ids()) ids += (ids.empty() ? "" : ", ") + id;
  throw DataError("unknown game '" + spec + "': not a builtin (" + ids +
                  "), random:AxB.., synthetic:NxK, ising:RxC, or an existing file");
}

GameSpec load_game(const json& source, std::vector<std::string>& warnings) {
  const std::string kind = source.at("kind").get<std::string>();
  if (kind == "builtin") return make_builtin_game(source.at("id").get<std::string>());
  if (kind == "random") {
    return make_random_game(source.at("counts").get<std::vector<std::uint32_t>>(),
                            source.at("seed").get<std::uint64_t>());
  }
  if (kind == "synthetic") {
    return make_synthetic_dominant_game(source.at("agents").get<std::uint32_t>(),
                                        source.at("strategies").get<std::uint32_t>(),
                                        source.at("seed").get<std::uint64_t>());
  }
  if (kind == "ising") return make_ising_game(ising_spec_from_json(source.at("lattice")));
  if (kind == "file") {
    return read_game_file(source.at("path").get<std::string>(), source.value("strict", true), warnings);
  }
  throw DataError("unknown game source kind '" + kind + "'");
}

namespace {

CommandOutput run_rank(const json& config) {
  CommandOutput out;
  out.record = make_record("rank", config);
  std::vector<std::string> warnings;
  const GameSpec game = load_game(config.at("game"), warnings);
  const EvoParams params = evo_params_from_json(config.at("params"));
  params.validate();
  const std::string solver = config.at("solver").get<std::string>();
  const SolverConfig sgd = solver_config_from_json(config.at("sgd"));

  const auto t0 = std::chrono::steady_clock::now();
  RankingResult result;
  std::vector<Index> profiles;
  json result_json;
  if (solver == "dense") {
    result = dense_eigensolve(game, params, config.at("dense_cap").get<Index>());
  } else if (solver == "power") {
    const json& p = config.at("power");
    result = power_method(game, params, p.at("tol").get<double>(), p.at("max_iters").get<std::uint64_t>());
  } else if (solver == "sgd") {
    result = alpha_alpha_rank(game, params, sgd);
  } else if (solver == "oracle") {
    OracleConfig oc = oracle_config_from_json(config.at("oracle"));
    oc.solver = sgd;
    OracleResult r = alpha_alpha_oracle(game, params, oc);
    result_json = to_json(r, game);
    profiles = r.profiles;
    result = std::move(r.result);
  } else {
    throw DataError("unknown solver '" + solver + "' (expected dense, power, sgd, oracle)");
  }
  const double wall = seconds_since(t0);

  if (result_json.is_null()) result_json = to_json(result, game);
  out.record["result"] = std::move(result_json);
  out.record["wall_seconds"] = wall;
  out.record["warnings"] = warnings;

  std::ostringstream csv;
  write_rank_csv(csv, result, game, profiles);
  out.csv = csv.str();

  const Index top = profiles.empty() ? result.top() : profiles[result.top()];
  std::ostringstream summary;
  summary << "game " << game.name() << " (n=" << game.num_profiles() << "), solver " << solver
          << ": rank 1 = " << game.profile_label(top) << " mass "
          << format_double(result.distribution[result.top()]) << ", iterations " << result.iterations
          << (result.converged ? ", converged" : ", NOT converged");
  out.summary = summary.str();
  out.exit_code = result.converged ? kExitOk : kExitNotConverged;
  return out;
}

CommandOutput run_sweep(const json& config) {
  CommandOutput out;
  out.record = make_record("sweep", config);
  SweepSpec spec;
  spec.game_id = config.at("game").get<std::string>();
  spec.alphas = config.at("alphas").get<std::vector<double>>();
  spec.population = config.at("population").get<int>();
  spec.solver = solver_config_from_json(config.at("sgd"));
  spec.workers = config.at("workers").get<unsigned>();
  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult r = run_alpha_sweep(spec);
  out.record["result"] = to_json(r);
  out.record["wall_seconds"] = seconds_since(t0);
  std::ostringstream csv;
  write_sweep_csv(csv, r);
  out.csv = csv.str();
  out.summary = "sweep over " + std::to_string(r.points.size()) + " alpha values on " + r.game_id +
                ": dense/sgd top agreement " + format_double(r.top_agreement);
  return out;
}

CommandOutput run_scaling(const json& config) {
  CommandOutput out;
  out.record = make_record("scaling", config);
  ScalingSpec spec;
  spec.sizes = config.at("sizes").get<std::vector<Index>>();
  spec.seed = config.at("seed").get<std::uint64_t>();
  spec.solvers = config.at("solvers").get<std::vector<std::string>>();
  spec.repetitions = config.at("repetitions").get<std::uint32_t>();
  spec.mode = parse_chain_mode(config.at("mode").get<std::string>());
  spec.max_strategies = config.at("max_strategies").get<std::uint32_t>();
  spec.params = evo_params_from_json(config.at("params"));
  spec.solver = solver_config_from_json(config.at("sgd"));
  spec.dense_cap = config.at("dense_cap").get<Index>();
  spec.power_tol = config.at("power").at("tol").get<double>();
  spec.power_max_iters = config.at("power").at("max_iters").get<std::uint64_t>();
  const auto t0 = std::chrono::steady_clock::now();
  const ScalingResult r = run_scaling_bench(spec);
  json rows = json::array();
  for (const auto& row : r.rows) rows.push_back(to_json(row));
  out.record["result"] = {{"rows", rows},
                          {"sgd_memory_exponent", r.sgd_memory_exponent
                                                      ? json(*r.sgd_memory_exponent)
                                                      : json(nullptr)}};
  out.record["wall_seconds"] = seconds_since(t0);
  std::ostringstream csv;
  write_scaling_csv(csv, r);
  out.csv = csv.str();
  std::size_t dnf = 0;
  for (const auto& row : r.rows) dnf += row.dnf;
  out.summary = std::to_string(r.rows.size()) + " scaling rows (" + std::to_string(dnf) + " DNF)";
  return out;
}

CommandOutput run_ising(const json& config) {
  CommandOutput out;
  out.record = make_record("ising", config);
  IsingPhaseSpec spec;
  spec.lattice = ising_spec_from_json(config.at("lattice"));
  spec.temperatures = config.at("temperatures").get<std::vector<double>>();
  spec.oracle = oracle_config_from_json(config.at("oracle"));
  spec.oracle.solver = solver_config_from_json(config.at("sgd"));
  spec.population = config.at("population").get<int>();
  spec.alpha_scale = config.at("alpha_scale").get<double>();
  spec.mcmc.sweeps = config.at("mcmc").at("sweeps").get<std::uint64_t>();
  spec.mcmc.burn_in = config.at("mcmc").at("burn_in").get<double>();
  spec.mcmc.seed = config.at("mcmc").at("seed").get<std::uint64_t>();
  spec.workers = config.at("workers").get<unsigned>();
  spec.exact_cap = config.at("exact_cap").get<Index>();
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = run_ising_phase_study(spec);
  const GameSpec game = make_ising_game(spec.lattice);
  json res = json::array();
  for (const auto& r : rows) res.push_back(to_json(r, game));
  out.record["result"] = {{"rows", res}};
  out.record["wall_seconds"] = seconds_since(t0);
  std::ostringstream csv;
  write_ising_csv(csv, rows, game);
  out.csv = csv.str();
  std::ostringstream summary;
  for (const auto& r : rows) {
    summary << "tau " << format_double(r.temperature) << ": xi_ranking " << format_double(r.xi_ranking)
            << ", xi_mcmc " << format_double(r.xi_mcmc) << ", top xi " << format_double(r.xi_top) << '\n';
  }
  out.summary = summary.str();
  if (!out.summary.empty()) out.summary.pop_back();
  return out;
}

CommandOutput run_cost(const json& config) {
  CommandOutput out;
  out.record = make_record("cost", config);
  std::vector<CostReport> reports;
  for (auto n : config.at("agents").get<std::vector<std::uint32_t>>()) {
    for (auto k : config.at("strategies").get<std::vector<std::uint32_t>>()) {
      reports.push_back(estimate_cost(n, k, config.at("throughput").get<double>(),
                                      config.at("price_per_hour").get<double>()));
    }
  }
  json res = json::array();
  std::ostringstream summary;
  for (const auto& r : reports) {
    res.push_back(to_json(r));
    summary << "N=" << r.agents << " k=" << r.strategies << ": flops=" << r.flops
            << " days=" << format_double(r.days) << " dollars=" << format_double(r.dollars) << '\n';
  }
  out.record["result"] = {{"reports", res}};
  std::ostringstream csv;
  write_cost_csv(csv, reports);
  out.csv = csv.str();
  out.summary = summary.str();
  if (!out.summary.empty()) out.summary.pop_back();
  return out;
}

/// The parts of a result that must replay bit-exactly.
json reproducible_part(const std::string& command, const json& result) {
  if (command == "scaling") {
    json rows = json::array();
    for (const auto& r : result.at("rows")) {
      rows.push_back({{"n", r.at("n")},
                      {"solver", r.at("solver")},
                      {"shape", r.at("shape")},
                      {"iterations", r.at("iterations")},
                      {"converged", r.at("converged")},
                      {"dnf", r.at("dnf")}});
    }
    return rows;
  }
  return result;
}

}  // namespace

CommandOutput run_command(const std::string& command, const json& config) {
  try {
    if (command == "rank") return run_rank(config);
    if (command == "sweep") return run_sweep(config);
    if (command == "scaling") return run_scaling(config);
    if (command == "ising") return run_ising(config);
    if (command == "cost") return run_cost(config);
  } catch (const json::exception& e) {
    throw DataError("invalid " + command + " configuration: " + e.what());
  }
  throw DataError("unknown command '" + command + "'");
}

CommandOutput replay(const json& record, bool check, std::string& report) {
  if (record.value("format", "") != "aarank-run") throw DataError("not a run record");
  const std::string command = record.at("command").get<std::string>();
  CommandOutput out = run_command(command, record.at("config"));
  if (!check) return out;
  const json before = reproducible_part(command, record.at("result"));
  const json after = reproducible_part(command, json::parse(out.record.at("result").dump()));
  if (before == after) {
    report = "replay matches the record";
  } else {
    report = "replay DIFFERS from the record";
    out.exit_code = kExitReplayMismatch;
  }
  return out;
}

void write_outputs(const CommandOutput& out, const std::string& prefix) {
  write_text_file(prefix + ".json", out.record.dump(1) + "\n");
  write_text_file(prefix + ".csv", out.csv);
}

}  // namespace aarank::cli
