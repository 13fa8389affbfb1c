#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "aarank/bench.hpp"
#include "aarank/io.hpp"
#include "aarank/oracle.hpp"
#include "aarank/solvers.hpp"

namespace py = pybind11;
using namespace aarank;

namespace {

py::array_t<double> as_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

SolverConfig make_solver(std::uint64_t seed, std::uint64_t max_iters, double tol,
                         std::uint64_t window, double eta0, const std::string& step_rule,
                         const std::string& update, double delta, double lambda0, double gamma) {
  SolverConfig c;
  c.seed = seed;
  c.max_iters = max_iters;
  c.grad_norm_tol = tol;
  c.grad_window = window;
  c.step.eta0 = eta0;
  c.step.rule = parse_step_rule(step_rule);
  c.update = parse_update_rule(update);
  c.delta = delta;
  c.lambda0 = lambda0;
  c.gamma = gamma;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_aarank, m) {
  m.doc() = "Evolutionary ranking of joint strategy profiles";

  static py::exception<CapacityError> capacity_error(m, "CapacityError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DataError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const CapacityError& e) {
      capacity_error(e.what());
    }
  });

  py::class_<GameSpec>(m, "Game")
      .def_property_readonly("name", &GameSpec::name)
      .def_property_readonly("num_agents", &GameSpec::num_agents)
      .def_property_readonly("num_profiles", &GameSpec::num_profiles)
      .def_property_readonly("strategy_counts",
                             [](const GameSpec& g) {
                               const auto c = g.index().strategy_counts();
                               return std::vector<std::uint32_t>(c.begin(), c.end());
                             })
      .def_property_readonly("labels", &GameSpec::labels)
      .def("encode", [](const GameSpec& g, const Profile& p) { return g.index().encode(p); })
      .def("decode", [](const GameSpec& g, Index i) { return g.index().decode(i); })
      .def("payoff", &GameSpec::payoff, py::arg("agent"), py::arg("profile"))
      .def("profile_label", &GameSpec::profile_label)
      .def("__repr__", [](const GameSpec& g) {
        return "<Game " + g.name() + " n=" + std::to_string(g.num_profiles()) + ">";
      });

  m.def("builtin_game", &make_builtin_game, py::arg("id"));
  m.def("builtin_game_ids", &builtin_game_ids);
  m.def("random_game", &make_random_game, py::arg("strategy_counts"), py::arg("seed"));
  m.def("synthetic_dominant_game", &make_synthetic_dominant_game, py::arg("num_agents"),
        py::arg("num_strategies"), py::arg("seed"));
  m.def("planted_profile", &planted_profile);
  m.def(
      "bimatrix_game",
      [](std::uint32_t rows, std::uint32_t cols, std::vector<double> row_payoffs,
         std::vector<double> col_payoffs, std::string name) {
        return make_bimatrix_game(rows, cols, std::move(row_payoffs), std::move(col_payoffs), {},
                                  std::move(name));
      },
      py::arg("rows"), py::arg("cols"), py::arg("row_payoffs"), py::arg("col_payoffs"),
      py::arg("name") = "bimatrix");
  m.def(
      "ising_game",
      [](std::uint32_t rows, std::uint32_t cols, std::vector<double> field, double coupling,
         double temperature) {
        IsingSpec s;
        s.rows = rows;
        s.cols = cols;
        s.field = std::move(field);
        s.coupling = coupling;
        s.temperature = temperature;
        return make_ising_game(s);
      },
      py::arg("rows") = 3, py::arg("cols") = 3, py::arg("field") = std::vector<double>{0.0},
      py::arg("coupling") = 2.0, py::arg("temperature") = 1.0);
  m.def(
      "read_game",
      [](const std::filesystem::path& path, bool strict) {
        std::vector<std::string> warnings;
        GameSpec g = read_game_file(path, strict, warnings);
        return py::make_tuple(std::move(g), warnings);
      },
      py::arg("path"), py::arg("strict") = false,
      "Returns (game, warnings).");
  m.def(
      "write_game",
      [](const GameSpec& g, const std::filesystem::path& path,
         const std::optional<std::filesystem::path>& sidecar) {
        write_game_file(g, path, sidecar.value_or(std::filesystem::path{}));
      },
      py::arg("game"), py::arg("path"), py::arg("sidecar") = py::none(),
      "Payoffs go into a binary sidecar file when `sidecar` is given.");
  m.def(
      "fixation_probability",
      [](double invader, double incumbent, double alpha, int population) {
        return fixation_probability(invader, incumbent, EvoParams{alpha, population});
      },
      py::arg("invader"), py::arg("incumbent"), py::arg("alpha"), py::arg("population"));

  py::class_<RankingResult>(m, "RankingResult")
      .def_property_readonly("distribution",
                             [](const RankingResult& r) { return as_array(r.distribution); })
      .def_readonly("ranking", &RankingResult::ranking)
      .def_readonly("iterations", &RankingResult::iterations)
      .def_readonly("converged", &RankingResult::converged)
      .def_property_readonly("top", &RankingResult::top)
      .def_property_readonly("trace", [](const RankingResult& r) {
        py::list out;
        for (const auto& t : r.trace) {
          out.append(py::dict(py::arg("iteration") = t.iteration, py::arg("objective") = t.objective,
                              py::arg("grad_norm") = t.grad_norm, py::arg("residual") = t.residual));
        }
        return out;
      });

  m.def(
      "rank",
      [](const GameSpec& g, double alpha, int population, const std::string& solver,
         std::uint64_t seed, std::uint64_t max_iters, double tol, std::uint64_t window, double eta0,
         const std::string& step_rule, const std::string& update, double delta, double lambda0,
         double gamma) {
        const EvoParams p{alpha, population};
        p.validate();
        if (solver == "dense") {
          py::gil_scoped_release nogil;
          return dense_eigensolve(g, p);
        }
        if (solver == "power") {
          py::gil_scoped_release nogil;
          return power_method(g, p);
        }
        if (solver != "sgd") throw DataError("unknown solver '" + solver + "' (sgd, power, dense)");
        const SolverConfig c = make_solver(seed, max_iters, tol, window, eta0, step_rule, update,
                                           delta, lambda0, gamma);
        py::gil_scoped_release nogil;
        return alpha_alpha_rank(g, p, c);
      },
      py::arg("game"), py::arg("alpha") = 1.0, py::arg("population") = 50,
      py::arg("solver") = "sgd", py::arg("seed") = 0, py::arg("max_iters") = 200000,
      py::arg("tol") = 1e-3, py::arg("window") = 1000, py::arg("eta0") = 0.5,
      py::arg("step_rule") = "constant", py::arg("update") = "scaled", py::arg("delta") = 0.1,
      py::arg("lambda0") = 0.01, py::arg("gamma") = 1.001);

  m.def(
      "best_response",
      [](const GameSpec& g, std::size_t agent, const Profile& p) { return best_response(agent, p, g); },
      py::arg("game"), py::arg("agent"), py::arg("profile"));

  py::class_<TrialResult>(m, "TrialResult")
      .def_readonly("top", &TrialResult::top)
      .def_readonly("expansions", &TrialResult::expansions)
      .def_readonly("iterations", &TrialResult::iterations)
      .def_readonly("converged", &TrialResult::converged)
      .def_readonly("top_mass", &TrialResult::top_mass)
      .def_readonly("final_sets", &TrialResult::final_sets);

  py::class_<OracleResult>(m, "OracleResult")
      .def_readonly("winner", &OracleResult::winner)
      .def_readonly("result", &OracleResult::result)
      .def_readonly("profiles", &OracleResult::profiles)
      .def_readonly("trials", &OracleResult::trials)
      .def_readonly("disagreement_rate", &OracleResult::disagreement_rate);

  m.def(
      "oracle",
      [](const GameSpec& g, double alpha, int population, std::uint32_t num_trials,
         std::uint32_t init_subset_size, std::uint32_t max_expansions, unsigned workers,
         std::uint64_t seed, std::uint64_t max_iters, double tol) {
        OracleConfig c;
        c.num_trials = num_trials;
        c.init_subset_size = init_subset_size;
        c.max_expansions = max_expansions;
        c.workers = workers;
        c.solver.seed = seed;
        c.solver.max_iters = max_iters;
        c.solver.grad_norm_tol = tol;
        const EvoParams p{alpha, population};
        py::gil_scoped_release nogil;
        return alpha_alpha_oracle(g, p, c);
      },
      py::arg("game"), py::arg("alpha") = 1.0, py::arg("population") = 50,
      py::arg("num_trials") = 5, py::arg("init_subset_size") = 1, py::arg("max_expansions") = 0,
      py::arg("workers") = 1, py::arg("seed") = 0, py::arg("max_iters") = 200000,
      py::arg("tol") = 1e-3);

  m.def(
      "cost",
      [](std::uint32_t agents, std::uint32_t strategies, double throughput, double price) {
        const CostReport r = estimate_cost(agents, strategies, throughput, price);
        return py::dict(py::arg("agents") = r.agents, py::arg("strategies") = r.strategies,
                        py::arg("flops") = py::int_(py::str(r.flops)),
                        py::arg("seconds") = r.seconds, py::arg("days") = r.days,
                        py::arg("dollars") = r.dollars);
      },
      py::arg("agents"), py::arg("strategies"), py::arg("throughput") = 5.6e12,
      py::arg("price_per_hour") = 0.9);

  m.def(
      "ising_phase_study",
      [](std::uint32_t rows, std::uint32_t cols, double field, double coupling,
         std::vector<double> temperatures, int population, std::uint64_t seed,
         std::uint64_t sweeps, std::uint32_t num_trials) {
        IsingPhaseSpec s;
        s.lattice.rows = rows;
        s.lattice.cols = cols;
        s.lattice.field = {field};
        s.lattice.coupling = coupling;
        s.temperatures = std::move(temperatures);
        s.population = population;
        s.oracle.num_trials = num_trials;
        s.oracle.solver.seed = seed;
        s.mcmc.seed = seed;
        s.mcmc.sweeps = sweeps;
        std::vector<IsingPhaseRow> out;
        {
          py::gil_scoped_release nogil;
          out = run_ising_phase_study(s);
        }
        py::list rows_out;
        for (const auto& r : out) {
          py::dict d(py::arg("temperature") = r.temperature, py::arg("alpha") = r.alpha,
                     py::arg("top") = r.top, py::arg("xi_top") = r.xi_top,
                     py::arg("xi_ranking") = r.xi_ranking, py::arg("xi_mcmc") = r.xi_mcmc,
                     py::arg("oracle_disagreement") = r.oracle_disagreement);
          d["exact_top"] = r.exact_top ? py::object(py::int_(*r.exact_top)) : py::none();
          d["xi_exact"] = r.xi_exact ? py::object(py::float_(*r.xi_exact)) : py::none();
          rows_out.append(d);
        }
        return rows_out;
      },
      py::arg("rows") = 3, py::arg("cols") = 3, py::arg("field") = 0.5, py::arg("coupling") = 2.0,
      py::arg("temperatures") = std::vector<double>{0.5, 1, 2, 5, 20}, py::arg("population") = 2,
      py::arg("seed") = 0, py::arg("sweeps") = 20000, py::arg("num_trials") = 5);

  m.attr("__version__") = "0.1.0";
}
