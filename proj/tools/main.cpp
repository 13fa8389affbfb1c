#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace aarank;
using nlohmann::json;

namespace {

struct SeedFlag {
  std::uint64_t value = 0;
  CLI::Option* opt = nullptr;

  void add(CLI::App* app) {
    opt = app->add_option("--seed", value, "RNG seed; drawn from entropy and recorded when omitted");
  }
  std::uint64_t resolve() {
    if (opt->count() == 0) {
      std::random_device rd;
      value = (std::uint64_t{rd()} << 32) ^ rd();
    }
    return value;
  }
};

void add_solver_flags(CLI::App* app, SolverConfig& c, std::string& step_rule, std::string& update) {
  app->add_option("--delta", c.delta, "slab half-width delta in (0,1)")->capture_default_str();
  app->add_option("--lambda0", c.lambda0, "initial barrier weight")->capture_default_str();
  app->add_option("--gamma", c.gamma, "barrier decay, lambda <- lambda/gamma")->capture_default_str();
  app->add_option("--step-rule", step_rule, "constant, inv_sqrt or inv_linear")->capture_default_str();
  app->add_option("--eta0", c.step.eta0, "base step size")->capture_default_str();
  app->add_option("--update", update, "plain or scaled")->capture_default_str();
  app->add_option("--max-iters", c.max_iters, "iteration budget")->capture_default_str();
  app->add_option("--tol", c.grad_norm_tol, "stop when the windowed flow imbalance drops to this")
      ->capture_default_str();
  app->add_option("--window", c.grad_window, "stop-rule window length")->capture_default_str();
  app->add_option("--min-iters", c.min_iters, "never stop before this many iterations")
      ->capture_default_str();
  app->add_option("--x-floor", c.x_floor, "lower clamp for iterate entries")->capture_default_str();
  app->add_option("--lambda-cutoff", c.lambda_cutoff, "drop the barrier once lambda is below this")
      ->capture_default_str();
  app->add_option("--checkpoint-every", c.checkpoint_every, "trace spacing (0 = max-iters/100)")
      ->capture_default_str();
}

void finish_solver(SolverConfig& c, const std::string& step_rule, const std::string& update,
                   std::uint64_t seed) {
  c.step.rule = parse_step_rule(step_rule);
  c.update = parse_update_rule(update);
  c.seed = seed;
}

void add_oracle_flags(CLI::App* app, OracleConfig& c) {
  app->add_option("--trials", c.num_trials, "oracle trials")->capture_default_str();
  app->add_option("--init-size", c.init_subset_size, "initial strategies per agent")
      ->capture_default_str();
  app->add_option("--max-expansions", c.max_expansions, "expansion cap per trial (0 = none)")
      ->capture_default_str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

int emit(const cli::CommandOutput& out, const std::string& prefix) {
  if (prefix.empty()) {
    std::cerr << out.summary << '\n';
    std::cout << out.csv;
  } else {
    cli::write_outputs(out, prefix);
    std::cout << out.summary << '\n' << "wrote " << prefix << ".json and " << prefix << ".csv\n";
  }
  return out.exit_code;
}

/// Oracle settings without the inner solver, which the record holds under "sgd".
json oracle_json(const OracleConfig& c) {
  json j = to_json(c);
  j.erase("solver");
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix-free alpha-rank evaluation of multi-agent games"};
  app.set_version_flag("--version", cli::version());
  app.require_subcommand(1);

  unsigned workers = 1;
  std::string out_prefix;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--workers", workers, "worker threads")->capture_default_str();
    sub->add_option("--out", out_prefix, "write PREFIX.json (run record) and PREFIX.csv");
  };

  // rank
  auto* rank = app.add_subcommand("rank", "rank the joint profiles of one game");
  std::string game_spec;
  std::uint64_t game_seed = 0;
  double field = 0.0, coupling = 2.0;
  bool lenient = false;
  EvoParams params;
  std::string solver = "sgd";
  SolverConfig sgd;
  std::string step_rule = to_string(sgd.step.rule), update = to_string(sgd.update);
  OracleConfig oracle;
  double power_tol = 1e-13;
  std::uint64_t power_max_iters = 1'000'000;
  Index dense_cap = 4096;
  SeedFlag rank_seed;
  CLI::Option* rank_game_seed = nullptr;
  {
    rank->add_option("--game", game_spec,
                     "builtin id (pd, bos, brps, rps), random:3x3x3, synthetic:20x2, ising:3x3, or a game file")
        ->required();
    rank_game_seed = rank->add_option("--game-seed", game_seed, "seed for random/synthetic games (default --seed)");
    rank->add_option("--field", field, "Ising field h")->capture_default_str();
    rank->add_option("--coupling", coupling, "Ising coupling lambda")->capture_default_str();
    rank->add_flag("--lenient", lenient, "ignore unknown game-file fields with a warning");
    rank->add_option("--alpha", params.alpha, "ranking intensity")->capture_default_str();
    rank->add_option("--population", params.population, "population size m")->capture_default_str();
    rank->add_option("--tie-epsilon", params.tie_epsilon, "payoff tie threshold")->capture_default_str();
    rank->add_option("--solver", solver, "dense, power, sgd or oracle")
        ->check(CLI::IsMember({"dense", "power", "sgd", "oracle"}))
        ->capture_default_str();
    add_solver_flags(rank, sgd, step_rule, update);
    add_oracle_flags(rank, oracle);
    rank->add_option("--power-tol", power_tol, "power method L1 tolerance")->capture_default_str();
    rank->add_option("--power-max-iters", power_max_iters, "power method budget")->capture_default_str();
    rank->add_option("--dense-cap", dense_cap, "largest n for the dense solver")->capture_default_str();
    rank_seed.add(rank);
    common(rank);
  }

  // sweep
  auto* sweep = app.add_subcommand("sweep", "alpha sweep on a builtin matrix game");
  std::string sweep_game = "pd", alpha_list;
  double alpha_min = 1e-2, alpha_max = 1e2;
  std::size_t alpha_points = 9;
  int sweep_population = 50;
  SeedFlag sweep_seed;
  {
    sweep->add_option("--game", sweep_game, "builtin game id")->capture_default_str();
    sweep->add_option("--alphas", alpha_list, "comma-separated alpha grid (overrides the range)");
    sweep->add_option("--alpha-min", alpha_min, "log grid start")->capture_default_str();
    sweep->add_option("--alpha-max", alpha_max, "log grid end")->capture_default_str();
    sweep->add_option("--points", alpha_points, "log grid size")->capture_default_str();
    sweep->add_option("--population", sweep_population, "population size m")->capture_default_str();
    add_solver_flags(sweep, sgd, step_rule, update);
    sweep_seed.add(sweep);
    common(sweep);
  }

  // scaling
  auto* scaling = app.add_subcommand("scaling", "solver time and memory against chain size");
  ScalingSpec scale;
  std::string sizes = "64,256,1024,4096", solvers = "dense,power,sgd", mode = "sparse";
  SeedFlag scaling_seed;
  {
    scaling->add_option("--sizes", sizes, "comma-separated increasing n")->capture_default_str();
    scaling->add_option("--solvers", solvers, "subset of dense,power,sgd")->capture_default_str();
    scaling->add_option("--mode", mode, "sparse (alpha-rank pattern) or dense-random")
        ->capture_default_str();
    scaling->add_option("--repetitions", scale.repetitions, "timed runs per cell")->capture_default_str();
    scaling->add_option("--max-strategies", scale.max_strategies, "largest k when factoring n")
        ->capture_default_str();
    scaling->add_option("--alpha", scale.params.alpha, "ranking intensity")->capture_default_str();
    scaling->add_option("--population", scale.params.population, "population size m")
        ->capture_default_str();
    scaling->add_option("--dense-cap", scale.dense_cap, "largest n for dense storage")->capture_default_str();
    scaling->add_option("--power-tol", scale.power_tol, "power method L1 tolerance")->capture_default_str();
    scaling->add_option("--power-max-iters", scale.power_max_iters, "power method budget")
        ->capture_default_str();
    add_solver_flags(scaling, sgd, step_rule, update);
    scaling_seed.add(scaling);
    common(scaling);
  }

  // ising
  auto* ising = app.add_subcommand("ising", "Ising phase study: ranking vs MCMC");
  IsingPhaseSpec phase;
  phase.population = 2;
  SolverConfig ising_sgd = phase.oracle.solver;
  std::string grid = "3x3", taus = "0.5,1,2,5,20";
  SeedFlag ising_seed;
  {
    ising->add_option("--grid", grid, "lattice ROWSxCOLS")->capture_default_str();
    ising->add_option("--field", field, "field h (all sites)")->capture_default_str();
    ising->add_option("--coupling", coupling, "coupling lambda")->capture_default_str();
    ising->add_option("--tau", taus, "comma-separated temperatures")->capture_default_str();
    ising->add_option("--population", phase.population, "population size m")->capture_default_str();
    ising->add_option("--alpha-scale", phase.alpha_scale, "alpha = scale / tau")->capture_default_str();
    ising->add_option("--sweeps", phase.mcmc.sweeps, "MCMC sweeps")->capture_default_str();
    ising->add_option("--burn-in", phase.mcmc.burn_in, "MCMC burn-in fraction")->capture_default_str();
    ising->add_option("--exact-cap", phase.exact_cap, "solve exactly when n is at most this")
        ->capture_default_str();
    add_oracle_flags(ising, phase.oracle);
    add_solver_flags(ising, ising_sgd, step_rule, update);
    ising_seed.add(ising);
    common(ising);
  }

  // cost
  auto* cost = app.add_subcommand("cost", "flops and dollars to build the transition matrix");
  std::string agents = "2", strategies = "2";
  double throughput = 5.6e12, price = 0.9;
  SeedFlag cost_seed;
  {
    cost->add_option("--agents", agents, "comma-separated N values")->capture_default_str();
    cost->add_option("--strategies", strategies, "comma-separated k values")->capture_default_str();
    cost->add_option("--throughput", throughput, "device flop/s")->capture_default_str();
    cost->add_option("--price", price, "device price per hour")->capture_default_str();
    cost_seed.add(cost);
    common(cost);
  }

  // export
  auto* exp = app.add_subcommand("export", "write a game as a game file");
  std::string export_path, sidecar;
  SeedFlag export_seed;
  {
    exp->add_option("--game", game_spec, "game spec as for rank")->required();
    exp->add_option("--game-seed", game_seed, "seed for random/synthetic games (same as --seed)");
    exp->add_option("--field", field, "Ising field h")->capture_default_str();
    exp->add_option("--coupling", coupling, "Ising coupling lambda")->capture_default_str();
    exp->add_option("--path", export_path, "output game file")->required();
    exp->add_option("--sidecar", sidecar, "store payoffs in this binary file next to the game file");
    export_seed.add(exp);
  }

  // replay
  auto* rep = app.add_subcommand("replay", "re-run a run record");
  std::string record_path;
  bool check = false;
  {
    rep->add_option("record", record_path, "run record JSON")->required();
    rep->add_flag("--check", check, "compare the rerun with the recorded result");
    rep->add_option("--out", out_prefix, "write PREFIX.json and PREFIX.csv");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (rank->parsed()) {
      const std::uint64_t seed = rank_seed.resolve();
      finish_solver(sgd, step_rule, update, seed);
      oracle.workers = workers;
      json config = {
          {"game", cli::game_source(game_spec, rank_game_seed->count() ? game_seed : seed, field,
                                    coupling, !lenient)},
          {"params", to_json(params)},
          {"solver", solver},
          {"sgd", to_json(sgd)},
          {"oracle", oracle_json(oracle)},
          {"power", {{"tol", power_tol}, {"max_iters", power_max_iters}}},
          {"dense_cap", dense_cap},
          {"seed", seed},
          {"workers", workers}};
      return emit(cli::run_command("rank", config), out_prefix);
    }
    if (sweep->parsed()) {
      const std::uint64_t seed = sweep_seed.resolve();
      finish_solver(sgd, step_rule, update, seed);
      std::vector<double> alphas;
      if (!alpha_list.empty()) {
        for (const auto& a : split_list(alpha_list)) alphas.push_back(parse_double(a, "--alphas"));
      } else {
        alphas = log_grid(alpha_min, alpha_max, alpha_points);
      }
      json config = {{"game", sweep_game},     {"alphas", alphas}, {"population", sweep_population},
                     {"sgd", to_json(sgd)},    {"seed", seed},     {"workers", workers}};
      return emit(cli::run_command("sweep", config), out_prefix);
    }
    if (scaling->parsed()) {
      const std::uint64_t seed = scaling_seed.resolve();
      finish_solver(sgd, step_rule, update, seed);
      std::vector<Index> ns;
      for (const auto& s : split_list(sizes)) {
        ns.push_back(static_cast<Index>(parse_double(s, "--sizes")));
      }
      json config = {{"sizes", ns},
                     {"solvers", split_list(solvers)},
                     {"mode", mode},
                     {"repetitions", scale.repetitions},
                     {"max_strategies", scale.max_strategies},
                     {"params", to_json(scale.params)},
                     {"sgd", to_json(sgd)},
                     {"dense_cap", scale.dense_cap},
                     {"power", {{"tol", scale.power_tol}, {"max_iters", scale.power_max_iters}}},
                     {"seed", seed},
                     {"workers", workers}};
      return emit(cli::run_command("scaling", config), out_prefix);
    }
    if (ising->parsed()) {
      const std::uint64_t seed = ising_seed.resolve();
      finish_solver(ising_sgd, step_rule, update, seed);
      phase.oracle.workers = 1;
      const json source = cli::game_source("ising:" + grid, 0, field, coupling, true);
      std::vector<double> ts;
      for (const auto& t : split_list(taus)) ts.push_back(parse_double(t, "--tau"));
      json config = {{"lattice", source.at("lattice")},
                     {"temperatures", ts},
                     {"oracle", oracle_json(phase.oracle)},
                     {"sgd", to_json(ising_sgd)},
                     {"population", phase.population},
                     {"alpha_scale", phase.alpha_scale},
                     {"mcmc", {{"sweeps", phase.mcmc.sweeps}, {"burn_in", phase.mcmc.burn_in}, {"seed", seed}}},
                     {"exact_cap", phase.exact_cap},
                     {"seed", seed},
                     {"workers", workers}};
      return emit(cli::run_command("ising", config), out_prefix);
    }
    if (cost->parsed()) {
      const std::uint64_t seed = cost_seed.resolve();
      std::vector<std::uint32_t> ns, ks;
      for (const auto& a : split_list(agents)) ns.push_back(static_cast<std::uint32_t>(std::stoul(a)));
      for (const auto& k : split_list(strategies)) ks.push_back(static_cast<std::uint32_t>(std::stoul(k)));
      json config = {{"agents", ns},
                     {"strategies", ks},
                     {"throughput", throughput},
                     {"price_per_hour", price},
                     {"seed", seed}};
      auto out = cli::run_command("cost", config);
      if (out_prefix.empty()) {
        std::cout << out.summary << '\n';
        return out.exit_code;
      }
      return emit(out, out_prefix);
    }
    if (exp->parsed()) {
      const std::uint64_t seed = exp->get_option("--game-seed")->count() ? game_seed : export_seed.resolve();
      std::vector<std::string> warnings;
      const GameSpec game = cli::load_game(cli::game_source(game_spec, seed, field, coupling, true), warnings);
      write_game_file(game, export_path, sidecar);
      std::cout << "wrote " << export_path << " (n=" << game.num_profiles() << ")\n";
      return cli::kExitOk;
    }
    if (rep->parsed()) {
      const json record = json::parse(read_text_file(record_path));
      std::string report;
      auto out = cli::replay(record, check, report);
      if (!report.empty()) std::cout << report << '\n';
      if (out_prefix.empty()) {
        std::cout << out.summary << '\n';
        return out.exit_code;
      }
      return emit(out, out_prefix);
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitData;
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return cli::kExitUsage;
  }
  return cli::kExitUsage;
}
