#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "aarank/solvers.hpp"
#include "oracles.hpp"

using namespace aarank;

namespace {

GameSpec flat_game() {
  const ProfileIndex idx({2, 2});
  return GameSpec({2, 2}, std::make_shared<DenseTablePayoff>(
                              idx, std::vector<std::vector<double>>(2, std::vector<double>(4, 0.0))));
}

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

/// Random feasible point near the simplex.
std::vector<double> random_feasible(std::mt19937_64& rng, std::size_t n, double delta) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  const double s = std::accumulate(x.begin(), x.end(), 0.0);
  const double target = 1.0 + std::uniform_real_distribution<double>(-0.5, 0.5)(rng) * delta;
  for (auto& v : x) v *= target / s;
  return x;
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("ranking orders by mass then index") {
  const std::vector<double> d{0.1, 0.4, 0.1, 0.4};
  CHECK(rank_profiles(d) == std::vector<Index>{1, 3, 0, 2});
}

TEST_CASE("symmetric toy chain") {
  const ExplicitChain c(2, {0.5, 0.5, 0.5, 0.5});
  for (const auto& r : {power_method(c), dense_eigensolve(c)}) {
    CHECK(r.converged);
    CHECK(r.distribution[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.distribution[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("flat game gives the uniform distribution") {
  const GameSpec g = flat_game();
  const EvoParams p{1.0, 5};
  const std::vector<double> uniform(4, 0.25);
  const auto pm = power_method(g, p);
  const auto de = dense_eigensolve(g, p);
  CHECK(l1(pm.distribution, uniform) <= 1e-12);
  CHECK(l1(de.distribution, uniform) <= 1e-12);
  SolverConfig cfg;
  cfg.seed = 4;
  const auto sg = alpha_alpha_rank(g, p, cfg);
  CHECK(l1(sg.distribution, uniform) <= 0.05);
  // Data term of the stochastic gradient is zero at the uniform point.
  const EvoChain chain(g, p);
  for (Index i = 0; i < 4; ++i) {
    const auto next = sgd_step(uniform, i, chain, 0.0, 0.1, 0.1);
    for (double v : next) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("planted profile is the top under every solver") {
  const GameSpec g = make_synthetic_dominant_game(2, 2, 5);
  const EvoParams p{10.0, 50};
  const auto de = dense_eigensolve(g, p);
  const auto pm = power_method(g, p);
  CHECK(de.top() == planted_profile(g));
  CHECK(pm.top() == planted_profile(g));
  CHECK(l1(de.distribution, pm.distribution) <= 1e-8);
  SolverConfig cfg;
  cfg.seed = 1;
  CHECK(alpha_alpha_rank(g, p, cfg).top() == planted_profile(g));
}

TEST_CASE("dense eigensolve agrees with the independent oracle") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 12; ++t) {
    const std::uint32_t n_agents = 2 + t % 3;
    const std::uint32_t k = 2 + (t / 3) % 3;
    if (std::pow(k, n_agents) > 256) continue;
    const GameSpec g = make_random_game(std::vector<std::uint32_t>(n_agents, k), rng());
    const double alpha = t % 2 ? 10.0 : 0.5;
    const auto de = dense_eigensolve(g, EvoParams{alpha, 50});
    const Eigen::VectorXd v = oracle::stationary(oracle::dense_transition(g, alpha, 50));
    double err = 0.0;
    for (Index i = 0; i < g.num_profiles(); ++i) err += std::abs(de.distribution[i] - v(i));
    CHECK(err <= 1e-8);
    const EvoChain chain(g, EvoParams{alpha, 50});
    CHECK(eigen_residual(de.distribution, chain) <= 1e-10);
    CHECK(l1(power_method(chain).distribution, de.distribution) <= 1e-8);
  }
}

TEST_CASE("dense eigensolve handles masses beyond the double range") {
  const auto r = dense_eigensolve(make_prisoners_dilemma(), EvoParams{10.0, 50});
  for (double v : r.distribution) CHECK(std::isfinite(v));
  CHECK(r.top() == 3);
  CHECK(r.distribution[3] == doctest::Approx(1.0));
}

TEST_CASE("dense cap") {
  const GameSpec g = make_random_game({4, 4, 4}, 1);
  CHECK_THROWS_AS(dense_eigensolve(g, EvoParams{}, 32), CapacityError);
  try {
    (void)dense_eigensolve(g, EvoParams{}, 32);
  } catch (const CapacityError& e) {
    CHECK(std::string(e.what()).find("sgd") != std::string::npos);
  }
}

TEST_CASE("power method on periodic and stiff chains") {
  // Bipartite chain {0,2} <-> {1}: plain Tᵀv iteration alternates forever.
  const ExplicitChain c(3, {0, 1, 0, 0.5, 0, 0.5, 0, 1, 0});
  const auto r = power_method(c);
  CHECK(r.converged);
  CHECK(r.distribution[1] == doctest::Approx(0.5).epsilon(1e-12));
  // Budget exhaustion is reported, not thrown.
  const auto short_run = power_method(make_random_game({4, 4, 4}, 2), EvoParams{}, 1e-13, 3);
  CHECK_FALSE(short_run.converged);
  CHECK(short_run.iterations == 3);
  // Sinks with e^-400-scale exits.
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const GameSpec g = make_random_game({3, 3, 3}, seed);
    const EvoParams p{10.0, 50};
    const auto pm = power_method(g, p);
    CHECK(pm.converged);
    CHECK(l1(pm.distribution, dense_eigensolve(g, p).distribution) <= 1e-8);
  }
}

TEST_CASE("barrier objective examples") {
  const GameSpec g = flat_game();
  const EvoChain chain(g, EvoParams{1.0, 5});
  const std::vector<double> u(4, 0.25);
  const double lambda = 0.01, delta = 0.1;
  CHECK(barrier_objective(u, chain, lambda, delta) ==
        doctest::Approx(-lambda * std::log(delta * delta) + lambda * std::log(4.0)).epsilon(1e-14));
  CHECK_THROWS_AS(barrier_objective(std::vector<double>{0.5, 0.5, 0.5, 0.5}, chain, lambda, delta),
                  DataError);
  CHECK_THROWS_AS(barrier_objective(std::vector<double>{0.0, 0.5, 0.25, 0.25}, chain, lambda, delta),
                  DataError);

  const GameSpec r = make_random_game({3, 3}, 2);
  const EvoChain rc(r, EvoParams{1.0, 50});
  const auto v = dense_eigensolve(rc).distribution;
  double logs = 0.0;
  for (double x : v) logs += std::log(x);
  CHECK(barrier_objective(v, rc, lambda, delta) ==
        doctest::Approx(-lambda * std::log(delta * delta) - lambda / 9.0 * logs).epsilon(1e-9));
}

TEST_CASE("barrier gradient matches central differences") {
  std::mt19937_64 rng(8);
  const GameSpec g = make_random_game({4, 4}, 12);
  const EvoChain chain(g, EvoParams{2.0, 10});
  const double lambda = 0.05, delta = 0.1;
  for (int t = 0; t < 10; ++t) {
    auto x = random_feasible(rng, 16, delta);
    const auto grad = barrier_gradient(x, chain, lambda, delta);
    std::vector<double> fd(16);
    for (std::size_t k = 0; k < 16; ++k) {
      const double h = 1e-6 * x[k];
      auto xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      fd[k] = (barrier_objective(xp, chain, lambda, delta) -
               barrier_objective(xm, chain, lambda, delta)) / (2 * h);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < 16; ++k) {
      num += (grad[k] - fd[k]) * (grad[k] - fd[k]);
      den += fd[k] * fd[k];
    }
    CHECK(std::sqrt(num / den) <= 1e-5);
  }
}

TEST_CASE("stochastic gradient is unbiased for the full gradient") {
  std::mt19937_64 rng(9);
  const GameSpec g = make_random_game({2, 3, 2}, 4);
  const EvoChain chain(g, EvoParams{1.0, 20});
  const Index n = chain.size();
  const double lambda = 0.03, delta = 0.1, eta = 1e-3;
  const auto x = random_feasible(rng, n, delta);
  const auto full = barrier_gradient(x, chain, lambda, delta);
  // x − η g_i is linear in g_i while no clamp or projection fires.
  std::vector<double> mean(n, 0.0);
  for (Index i = 0; i < n; ++i) {
    const auto next = sgd_step(x, i, chain, lambda, eta, delta);
    for (Index k = 0; k < n; ++k) mean[k] += (x[k] - next[k]) / eta / static_cast<double>(n);
  }
  for (Index k = 0; k < n; ++k) CHECK(mean[k] == doctest::Approx(full[k]).epsilon(1e-6));
}

TEST_CASE("iterates stay feasible") {
  std::mt19937_64 rng(10);
  const GameSpec g = make_random_game({3, 3, 2}, 6);
  const EvoChain chain(g, EvoParams{10.0, 50});
  const double delta = 0.1, floor = 1e-12;
  for (UpdateRule rule : {UpdateRule::kPlain, UpdateRule::kScaled}) {
    BarrierSgd sgd(chain, delta, floor, rule);
    std::uniform_int_distribution<Index> pick(0, chain.size() - 1);
    double lambda = 0.5;
    for (int t = 0; t < 20000; ++t) {
      sgd.step(pick(rng), lambda, rule == UpdateRule::kPlain ? 0.5 : 2.0);
      lambda /= 1.001;
      if (t % 97 == 0) {
        const auto x = sgd.x();
        double s = 0.0;
        for (double v : x) {
          REQUIRE(v >= floor * (1 - 1e-12));
          s += v;
        }
        REQUIRE(std::abs(s - 1.0) <= delta * (1 - 1e-6) + 1e-12);
        REQUIRE(std::abs(s - sgd.sum()) <= 1e-9);
      }
    }
  }
  // A step from an infeasible-direction push is projected back.
  std::vector<double> x(chain.size(), 1.0 / chain.size());
  const auto next = sgd_step(x, 0, chain, 10.0, 10.0, delta);
  const double s = std::accumulate(next.begin(), next.end(), 0.0);
  CHECK(std::abs(s - 1.0) <= delta * (1 - 1e-6));
  for (double v : next) CHECK(v >= 1e-12);
}

TEST_CASE("stochastic solver matches the dense oracle on random games") {
  int total = 0, l1_ok = 0;
  for (std::uint32_t n_agents : {2u, 3u}) {
    for (std::uint32_t k : {2u, 3u}) {
      for (double alpha : {0.1, 1.0, 10.0}) {
        const GameSpec g = make_random_game(std::vector<std::uint32_t>(n_agents, k),
                                            100 * n_agents + k + static_cast<int>(alpha));
        const EvoParams p{alpha, 50};
        SolverConfig cfg;
        cfg.seed = total;
        const auto sg = alpha_alpha_rank(g, p, cfg);
        const auto de = dense_eigensolve(g, p);
        ++total;
        l1_ok += l1(sg.distribution, de.distribution) <= 0.05;
        // At α = 10 some games have several sinks whose mutual exits are
        // ~e^-150; the ratio between them relaxes too slowly to certify.
        if (alpha <= 1.0) CHECK(sg.converged);
        CHECK(std::accumulate(sg.distribution.begin(), sg.distribution.end(), 0.0) ==
              doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
  CHECK(l1_ok == total);
}

TEST_CASE("prisoner's dilemma at high intensity ranks (D,D) first") {
  SolverConfig cfg;
  cfg.seed = 3;
  const auto r = alpha_alpha_rank(make_prisoners_dilemma(), EvoParams{10.0, 50}, cfg);
  CHECK(r.top() == 3);
  CHECK(r.converged);
}

TEST_CASE("same seed, same trace") {
  const GameSpec g = make_random_game({3, 3}, 77);
  SolverConfig cfg;
  cfg.seed = 99;
  cfg.checkpoint_every = 500;
  const auto a = alpha_alpha_rank(g, EvoParams{}, cfg);
  const auto b = alpha_alpha_rank(g, EvoParams{}, cfg);
  CHECK(a.distribution == b.distribution);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].iteration == b.trace[i].iteration);
    CHECK(a.trace[i].objective == b.trace[i].objective);
    CHECK(a.trace[i].grad_norm == b.trace[i].grad_norm);
  }
  cfg.seed = 100;
  CHECK(alpha_alpha_rank(g, EvoParams{}, cfg).distribution != a.distribution);
}

TEST_CASE("residual falls over the run") {
  const GameSpec g = make_random_game({3, 3, 3}, 5);
  SolverConfig cfg;
  cfg.seed = 2;
  cfg.checkpoint_every = 200;
  const auto r = alpha_alpha_rank(g, EvoParams{1.0, 50}, cfg);
  REQUIRE(r.trace.size() >= 4);
  const std::size_t half = r.trace.size() / 2;
  CHECK(r.trace.back().residual <= r.trace[half].residual);
  CHECK(r.trace.back().residual <= r.trace.front().residual);
}

TEST_CASE("literal update rule and schedules remain available") {
  CHECK(parse_update_rule("plain") == UpdateRule::kPlain);
  CHECK(to_string(UpdateRule::kScaled) == "scaled");
  CHECK(parse_step_rule("inv_sqrt") == StepRule::kInvSqrt);
  CHECK_THROWS_AS(parse_step_rule("adam"), DataError);
  const StepSchedule s{StepRule::kInvSqrt, 0.1};
  CHECK(s.eta(3) == doctest::Approx(0.05));
  CHECK(StepSchedule{StepRule::kInvLinear, 1.0}.eta(1) == doctest::Approx(0.5));
  SolverConfig plain;
  plain.update = UpdateRule::kPlain;
  plain.step = {StepRule::kInvSqrt, 0.1};
  plain.seed = 1;
  const auto r = alpha_alpha_rank(flat_game(), EvoParams{1.0, 5}, plain);
  CHECK(l1(r.distribution, std::vector<double>(4, 0.25)) <= 0.05);
}

TEST_CASE("config validation") {
  SolverConfig c;
  c.delta = 1.0;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = {};
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = {};
  c.grad_window = 0;
  CHECK_THROWS_AS(c.validate(), DataError);
}

}  // TEST_SUITE
