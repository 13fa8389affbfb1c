#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "aarank/io.hpp"

using namespace aarank;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "aarank_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string game_text(const std::string& payoffs, const std::string& extra = "") {
  return R"({"format": "aarank-game", "version": 1, "num_agents": 2,
             "strategy_counts": [2, 2], "payoffs": )" +
         payoffs + extra + "}";
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("decimal round trip is exact") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5000; ++i) {
    double v;
    const std::uint64_t bits = rng();
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    REQUIRE(parse_double(format_double(v), "t") == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(parse_double("1.5x", "t"), DataError);
  CHECK_THROWS_AS(parse_double("", "t"), DataError);
  CHECK_THROWS_AS(parse_double("inf", "t"), DataError);
}

TEST_CASE("game file round trip is bit exact") {
  const GameSpec g = make_random_game({3, 2, 4}, 5);
  const fs::path p = scratch("random.json");
  write_game_file(g, p);
  std::vector<std::string> warnings;
  const GameSpec h = read_game_file(p, true, warnings);
  CHECK(warnings.empty());
  REQUIRE(h.num_profiles() == g.num_profiles());
  for (Index i = 0; i < g.num_profiles(); ++i) {
    for (std::size_t a = 0; a < 3; ++a) REQUIRE(h.payoff(a, i) == g.payoff(a, i));
  }
  const GameSpec pd = make_prisoners_dilemma();
  write_game_file(pd, scratch("pd.json"));
  const GameSpec pd2 = read_game_file(scratch("pd.json"), true, warnings);
  CHECK(pd2.labels() == pd.labels());
  CHECK(pd2.name() == "pd");
}

TEST_CASE("binary sidecar round trip is bit exact") {
  const GameSpec g = make_random_game({5, 4, 3}, 6);
  const fs::path p = scratch("side.json");
  write_game_file(g, p, "side.bin");
  CHECK(fs::exists(scratch("side.bin")));
  std::vector<std::string> warnings;
  const GameSpec h = read_game_file(p, true, warnings);
  for (Index i = 0; i < g.num_profiles(); ++i) {
    for (std::size_t a = 0; a < 3; ++a) REQUIRE(h.payoff(a, i) == g.payoff(a, i));
  }
  // Trailing bytes and bad magic are rejected.
  {
    std::ofstream out(scratch("side.bin"), std::ios::binary | std::ios::app);
    out.put('x');
  }
  CHECK_THROWS_AS(read_game_file(p, true, warnings), DataError);
  write_text_file(scratch("side.bin"), "NOTATENSORFILE..");
  CHECK_THROWS_AS(read_game_file(p, true, warnings), DataError);
}

TEST_CASE("parse errors carry context") {
  std::vector<std::string> w;
  auto message = [&](const std::string& text, bool strict = true) -> std::string {
    try {
      (void)parse_game_json(text, strict, w);
    } catch (const DataError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("{\n  \"version\": 1,\n  oops\n}").find("line 3") != std::string::npos);
  CHECK(message(game_text("[[], []]")).find("payoffs[0]") != std::string::npos);
  CHECK(message(game_text(R"([["1","2","3","4"], ["1","2","x","4"]])")).find("payoffs[1][2]") !=
        std::string::npos);
  CHECK(message(game_text(R"([["1","2","3","4"]])")).find("one array per agent") !=
        std::string::npos);
  CHECK(message(R"({"version": 1, "num_agents": 2, "payoffs": []})").find("strategy_counts") !=
        std::string::npos);
  CHECK(message(R"({"version": 2, "num_agents": 2, "strategy_counts": [2,2]})")
            .find("version") != std::string::npos);
  CHECK(message(game_text(R"([["1","2","3","4"], ["1","2","3","4"]])",
                          R"(, "labels": [["a","b"], ["c"]])"))
            .find("labels") != std::string::npos);
  CHECK(message(R"({"version": 1, "num_agents": 3, "strategy_counts": [2,2],
                    "payoffs": [[], []]})")
            .find("num_agents") != std::string::npos);
}

TEST_CASE("strict mode rejects unknown fields, lenient mode warns") {
  const std::string text = game_text(R"([["1","2","3","4"], [1, 2, 3, 4]])", R"(, "colour": "blue")");
  std::vector<std::string> w;
  CHECK_THROWS_AS(parse_game_json(text, true, w), DataError);
  const GameSpec g = parse_game_json(text, false, w);
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("colour") != std::string::npos);
  CHECK(g.payoff(1, 3) == 4.0);
}

TEST_CASE("config json round trips") {
  SolverConfig c;
  c.delta = 0.2;
  c.step = {StepRule::kInvSqrt, 0.3};
  c.update = UpdateRule::kPlain;
  c.seed = 0xfedcba9876543210ULL;
  const SolverConfig d = solver_config_from_json(to_json(c));
  CHECK(d.delta == c.delta);
  CHECK(d.step.rule == c.step.rule);
  CHECK(d.step.eta0 == c.step.eta0);
  CHECK(d.update == c.update);
  CHECK(d.seed == c.seed);
  CHECK(d.x_floor == c.x_floor);
  CHECK(to_json(d) == to_json(c));

  OracleConfig o;
  o.num_trials = 9;
  o.solver = c;
  CHECK(to_json(oracle_config_from_json(to_json(o))) == to_json(o));

  const EvoParams p{3.5, 7, 1e-9};
  const EvoParams q = evo_params_from_json(to_json(p));
  CHECK(q.alpha == p.alpha);
  CHECK(q.population == p.population);
  CHECK(q.tie_epsilon == p.tie_epsilon);

  IsingSpec s;
  s.rows = 2;
  s.field = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  CHECK(to_json(ising_spec_from_json(to_json(s))) == to_json(s));
}

TEST_CASE("csv writers") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");

  const GameSpec pd = make_prisoners_dilemma();
  const RankingResult r = dense_eigensolve(pd, EvoParams{10.0, 50});
  std::ostringstream os;
  write_rank_csv(os, r, pd);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "rank,profile,mass");
  std::getline(in, line);
  CHECK(line.rfind("1,\"(Defect,Defect)\",", 0) == 0);

  std::ostringstream cost;
  write_cost_csv(cost, {estimate_cost(2, 2)});
  CHECK(cost.str().find(",80,") != std::string::npos);
}

TEST_CASE("ranking json truncates very large results") {
  RankingResult r;
  r.distribution.assign(20, 0.05);
  r.ranking = rank_profiles(r.distribution);
  const GameSpec g = make_random_game({4, 5}, 1);
  const auto full = to_json(r, g);
  CHECK(full["ranking"].size() == 20);
  CHECK(full["distribution"].size() == 20);
  CHECK(full["distribution_truncated"] == false);
  const auto cut = to_json(r, g, 10);
  CHECK(cut["distribution_truncated"] == true);
  CHECK_FALSE(cut.contains("distribution"));
}

}  // TEST_SUITE
