#include "aarank/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <boost/multiprecision/cpp_int.hpp>

#include "aarank/parallel.hpp"
#include "aarank/random.hpp"

namespace aarank {

// Alpha sweep ---------------------------------------------------------------

void SweepSpec::validate() const {
  if (alphas.empty()) throw DataError("alpha grid is empty");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0) || !std::isfinite(alphas[i])) {
      throw DataError("alpha grid values must be positive and finite");
    }
    if (i > 0 && !(alphas[i] > alphas[i - 1])) {
      throw DataError("alpha grid must be strictly increasing");
    }
  }
  if (population < 2) throw DataError("population size m must be at least 2");
  solver.validate();
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi >= lo) || points == 0) {
    throw DataError("log grid needs 0 < lo <= hi and at least one point");
  }
  if (points == 1) return {lo};
  std::vector<double> out(points);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

SweepResult run_alpha_sweep(const SweepSpec& spec) {
  spec.validate();
  const GameSpec game = make_builtin_game(spec.game_id);
  SweepResult out;
  out.game_id = spec.game_id;
  for (Index i = 0; i < game.num_profiles(); ++i) out.profile_labels.push_back(game.profile_label(i));
  out.points.resize(spec.alphas.size());
  parallel_for(spec.alphas.size(), spec.workers, [&](std::size_t p) {
    const EvoParams params{spec.alphas[p], spec.population};
    auto dense = dense_eigensolve(game, params);
    auto sgd = alpha_alpha_rank(game, params, spec.solver);
    SweepPoint& pt = out.points[p];
    pt.alpha = spec.alphas[p];
    pt.dense_top = dense.top();
    pt.sgd_top = sgd.top();
    pt.dense = std::move(dense.distribution);
    pt.sgd = std::move(sgd.distribution);
    pt.sgd_iterations = sgd.iterations;
    pt.sgd_converged = sgd.converged;
  });
  std::size_t agree = 0;
  for (const auto& pt : out.points) {
    agree += pt.dense[pt.sgd_top] >= pt.dense[pt.dense_top] * (1.0 - 1e-9);
  }
  out.top_agreement = static_cast<double>(agree) / static_cast<double>(out.points.size());
  return out;
}

// Memory --------------------------------------------------------------------

MemorySample read_memory() {
  MemorySample out;
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    auto field = [&](const char* key, std::uint64_t& dst) {
      if (line.rfind(key, 0) != 0) return;
      std::istringstream ls(line.substr(std::char_traits<char>::length(key)));
      std::uint64_t kb = 0;
      ls >> kb;
      dst = kb * 1024;
    };
    field("VmRSS:", out.rss_bytes);
    field("VmHWM:", out.hwm_bytes);
  }
  return out;
}

void reset_peak_memory() {
  std::ofstream out("/proc/self/clear_refs");
  if (out) out << "5";
}

struct PeakMemoryMonitor::Impl {
  std::mutex mu;
  std::condition_variable cv;
  bool stop = false;
  std::uint64_t peak = 0;
  std::thread thread;
};

PeakMemoryMonitor::PeakMemoryMonitor(unsigned period_ms) : impl_(new Impl) {
  impl_->peak = read_memory().rss_bytes;
  impl_->thread = std::thread([this, period_ms] {
    std::unique_lock lock(impl_->mu);
    while (!impl_->stop) {
      const std::uint64_t rss = read_memory().rss_bytes;
      impl_->peak = std::max(impl_->peak, rss);
      impl_->cv.wait_for(lock, std::chrono::milliseconds(period_ms), [this] { return impl_->stop; });
    }
  });
}

PeakMemoryMonitor::~PeakMemoryMonitor() {
  stop();
  delete impl_;
}

std::uint64_t PeakMemoryMonitor::stop() {
  {
    std::lock_guard lock(impl_->mu);
    impl_->stop = true;
  }
  impl_->cv.notify_all();
  if (impl_->thread.joinable()) impl_->thread.join();
  const MemorySample now = read_memory();
  return std::max({impl_->peak, now.rss_bytes, now.hwm_bytes});
}

// Scaling -------------------------------------------------------------------

ChainMode parse_chain_mode(const std::string& name) {
  if (name == "sparse") return ChainMode::kSparse;
  if (name == "dense-random") return ChainMode::kDenseRandom;
  throw DataError("unknown chain mode '" + name + "' (expected sparse, dense-random)");
}

std::string to_string(ChainMode mode) {
  return mode == ChainMode::kSparse ? "sparse" : "dense-random";
}

void ScalingSpec::validate() const {
  if (sizes.empty()) throw DataError("scaling needs at least one size");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 4) throw DataError("scaling sizes must be at least 4");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw DataError("scaling sizes must be increasing");
  }
  if (repetitions < 3) throw DataError("repetitions must be at least 3");
  if (max_strategies < 2) throw DataError("max_strategies must be at least 2");
  for (const auto& s : solvers) {
    if (s != "dense" && s != "power" && s != "sgd") {
      throw DataError("unknown scaling solver '" + s + "' (expected dense, power, sgd)");
    }
  }
  params.validate();
  solver.validate();
}

std::vector<std::uint32_t> shape_for_size(Index n, std::uint32_t max_strategies) {
  std::vector<Index> primes;
  Index rest = n;
  for (Index p = 2; p * p <= rest; ++p) {
    while (rest % p == 0) {
      primes.push_back(p);
      rest /= p;
    }
  }
  if (rest > 1) primes.push_back(rest);
  if (primes.size() < 2) {
    throw DataError("size " + std::to_string(n) + " cannot be split into two or more agents");
  }
  std::sort(primes.rbegin(), primes.rend());
  std::vector<Index> agents;
  for (Index p : primes) {
    auto slot = agents.end();
    for (auto it = agents.begin(); it != agents.end(); ++it) {
      if (*it * p <= max_strategies && (slot == agents.end() || *it < *slot)) slot = it;
    }
    if (slot == agents.end()) {
      agents.push_back(p);
    } else {
      *slot *= p;
    }
  }
  if (agents.size() == 1) {
    agents.push_back(primes.back());
    agents.front() /= primes.back();
  }
  for (Index a : agents) {
    if (a > std::numeric_limits<std::uint32_t>::max()) {
      throw DataError("size " + std::to_string(n) + " has a prime factor too large for one agent");
    }
  }
  std::sort(agents.rbegin(), agents.rend());
  return {agents.begin(), agents.end()};
}

namespace {

std::unique_ptr<MarkovChain> make_scaling_chain(const ScalingSpec& spec, Index n,
                                                std::vector<std::uint32_t>& shape) {
  const std::uint64_t seed = derive_seed(spec.seed, n);
  if (spec.mode == ChainMode::kSparse) {
    shape = shape_for_size(n, spec.max_strategies);
    return std::make_unique<EvoChain>(make_random_game(shape, seed), spec.params);
  }
  shape = {static_cast<std::uint32_t>(n)};
  if (n > spec.dense_cap) {
    throw CapacityError("dense-random chain of size " + std::to_string(n) + " exceeds cap " +
                        std::to_string(spec.dense_cap));
  }
  std::vector<double> t(n * n);
  for (Index r = 0; r < n; ++r) {
    double s = 0.0;
    for (Index c = 0; c < n; ++c) {
      t[r * n + c] = unit_double(splitmix64(seed ^ splitmix64(r * n + c))) + 1e-3;
      s += t[r * n + c];
    }
    for (Index c = 0; c < n; ++c) t[r * n + c] /= s;
    // Fold the rounding residue into the diagonal so rows sum to 1.
    double total = 0.0;
    for (Index c = 0; c < n; ++c) {
      if (c != r) total += t[r * n + c];
    }
    t[r * n + r] = 1.0 - total;
  }
  return std::make_unique<ExplicitChain>(n, std::move(t));
}

}  // namespace

ScalingResult run_scaling_bench(const ScalingSpec& spec) {
  spec.validate();
  ScalingResult out;
  for (Index n : spec.sizes) {
    std::vector<std::uint32_t> shape;
    std::unique_ptr<MarkovChain> chain;
    std::string build_error;
    try {
      chain = make_scaling_chain(spec, n, shape);
    } catch (const CapacityError& e) {
      build_error = e.what();
    }
    for (const auto& solver : spec.solvers) {
      ScalingRow row;
      row.n = n;
      row.solver = solver;
      row.shape = shape;
      if (!chain) {
        row.dnf = true;
        row.note = build_error;
        out.rows.push_back(std::move(row));
        continue;
      }
      std::vector<double> times;
      for (std::uint32_t rep = 0; rep < spec.repetitions && !row.dnf; ++rep) {
        reset_peak_memory();
        const MemorySample base = read_memory();
        PeakMemoryMonitor monitor;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          RankingResult r;
          if (solver == "dense") {
            r = dense_eigensolve(*chain, spec.dense_cap);
          } else if (solver == "power") {
            r = power_method(*chain, spec.power_tol, spec.power_max_iters);
          } else {
            r = alpha_alpha_rank(*chain, spec.solver);
          }
          row.iterations = r.iterations;
          row.converged = r.converged;
        } catch (const CapacityError& e) {
          row.dnf = true;
          row.note = e.what();
        } catch (const std::bad_alloc&) {
          row.dnf = true;
          row.note = "out of memory";
        }
        times.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        const std::uint64_t peak = monitor.stop();
        const MemorySample after = read_memory();
        row.peak_rss_bytes = std::max(row.peak_rss_bytes, peak);
        row.hwm_bytes = std::max(row.hwm_bytes, after.hwm_bytes);
        row.base_rss_bytes = rep == 0 ? base.rss_bytes : std::min(row.base_rss_bytes, base.rss_bytes);
      }
      if (!row.dnf) {
        std::sort(times.begin(), times.end());
        row.wall_seconds = times[times.size() / 2];
      }
      out.rows.push_back(std::move(row));
    }
  }

  std::vector<double> lx, ly;
  for (const auto& r : out.rows) {
    if (r.solver != "sgd" || r.dnf || r.peak_rss_bytes <= r.base_rss_bytes) continue;
    lx.push_back(std::log(static_cast<double>(r.n)));
    ly.push_back(std::log(static_cast<double>(r.peak_rss_bytes - r.base_rss_bytes)));
  }
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx > 0.0) out.sgd_memory_exponent = sxy / sxx;
  }
  return out;
}

// Cost ----------------------------------------------------------------------

CostReport estimate_cost(std::uint32_t agents, std::uint32_t strategies, double throughput,
                         double price_per_hour) {
  if (agents < 2) throw DataError("cost estimate needs N >= 2 agents");
  if (strategies < 2) throw DataError("cost estimate needs k >= 2 strategies");
  if (!(throughput > 0.0)) throw DataError("device throughput must be positive");
  if (!(price_per_hour >= 0.0)) throw DataError("device price must be non-negative");
  using boost::multiprecision::cpp_int;
  const cpp_int flops = cpp_int(10) * boost::multiprecision::pow(cpp_int(strategies), agents) *
                        agents * (strategies - 1);
  CostReport r;
  r.agents = agents;
  r.strategies = strategies;
  r.flops = flops.str();
  r.flops_approx = flops.convert_to<double>();
  r.throughput = throughput;
  r.price_per_hour = price_per_hour;
  r.seconds = r.flops_approx / throughput;
  r.days = r.seconds / 86400.0;
  r.dollars = r.seconds / 3600.0 * price_per_hour;
  return r;
}

// Ising ---------------------------------------------------------------------

McmcResult ising_mcmc_oracle(const IsingSpec& spec, const McmcConfig& config) {
  spec.validate();
  if (config.sweeps == 0) throw DataError("MCMC needs at least one sweep");
  if (!(config.burn_in >= 0.0 && config.burn_in < 1.0)) {
    throw DataError("burn-in fraction must lie in [0, 1)");
  }
  const std::uint32_t n = spec.num_sites();
  std::vector<std::vector<std::uint32_t>> nbrs(n);
  for (std::uint32_t j = 0; j < n; ++j) nbrs[j] = ising_neighbors(spec, j);

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::uint32_t> site(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> a(n);
  for (auto& s : a) s = (rng() & 1U) ? -1 : 1;

  const auto burn = static_cast<std::uint64_t>(config.burn_in * static_cast<double>(config.sweeps));
  std::unordered_map<Index, std::uint64_t> counts;
  std::uint64_t accepted = 0, attempts = 0;
  double xi_sum = 0.0;
  McmcResult out;
  for (std::uint64_t sweep = 0; sweep < config.sweeps; ++sweep) {
    for (std::uint32_t step = 0; step < n; ++step) {
      const std::uint32_t j = site(rng);
      int field = 0;
      for (std::uint32_t k : nbrs[j]) field += a[k];
      const double dE = 2.0 * a[j] * (spec.field_at(j) + spec.coupling * field);
      ++attempts;
      if (dE <= 0.0 || unit(rng) < std::exp(-dE / spec.temperature)) {
        a[j] = -a[j];
        ++accepted;
      }
    }
    if (sweep < burn) continue;
    Index idx = 0;
    int up = 0;
    for (std::uint32_t j = 0; j < n; ++j) {
      idx = (idx << 1) | (a[j] < 0 ? 1U : 0U);
      up += a[j] > 0;
    }
    ++counts[idx];
    xi_sum += std::abs(2.0 * up - n) / n;
    ++out.samples;
  }
  out.xi = out.samples ? xi_sum / static_cast<double>(out.samples) : 0.0;
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(attempts);
  out.histogram.assign(counts.begin(), counts.end());
  std::sort(out.histogram.begin(), out.histogram.end());
  Index modal = 0;
  std::uint64_t best = 0;
  for (const auto& [idx, c] : out.histogram) {
    if (c > best) {
      best = c;
      modal = idx;
    }
  }
  out.modal.resize(n);
  for (std::uint32_t j = 0; j < n; ++j) out.modal[j] = (modal >> (n - 1 - j)) & 1U;
  out.modal_xi = magnetization_imbalance(out.modal);
  return out;
}

void IsingPhaseSpec::validate() const {
  lattice.validate();
  if (temperatures.empty()) throw DataError("temperature grid is empty");
  for (std::size_t i = 0; i < temperatures.size(); ++i) {
    const double t = temperatures[i];
    if (!(t > 0.0) || !std::isfinite(t)) throw DataError("temperatures must be positive");
    if (i > 0 && !(t > temperatures[i - 1])) {
      throw DataError("temperature grid must be strictly increasing");
    }
  }
  if (!(alpha_scale > 0.0)) throw DataError("alpha scale must be positive");
  if (population < 2) throw DataError("population size m must be at least 2");
  oracle.validate();
}

std::vector<IsingPhaseRow> run_ising_phase_study(const IsingPhaseSpec& spec) {
  spec.validate();
  std::vector<IsingPhaseRow> rows(spec.temperatures.size());
  parallel_for(rows.size(), spec.workers, [&](std::size_t p) {
    IsingSpec lattice = spec.lattice;
    lattice.temperature = spec.temperatures[p];
    const GameSpec game = make_ising_game(lattice);
    const EvoParams params{spec.alpha_scale / lattice.temperature, spec.population};
    IsingPhaseRow& row = rows[p];
    row.temperature = lattice.temperature;
    row.alpha = params.alpha;

    const OracleResult oracle = alpha_alpha_oracle(game, params, spec.oracle);
    row.top = game.index().decode(oracle.winner);
    row.xi_top = magnetization_imbalance(row.top);
    row.oracle_disagreement = oracle.disagreement_rate;
    Profile buf(game.num_agents());
    for (std::size_t i = 0; i < oracle.profiles.size(); ++i) {
      game.index().decode_into(oracle.profiles[i], buf);
      row.xi_ranking += oracle.result.distribution[i] * magnetization_imbalance(buf);
    }

    if (game.num_profiles() <= spec.exact_cap) {
      const RankingResult exact = dense_eigensolve(game, params, spec.exact_cap);
      row.exact_top = exact.top();
      double xi = 0.0;
      for (Index i = 0; i < game.num_profiles(); ++i) {
        game.index().decode_into(i, buf);
        xi += exact.distribution[i] * magnetization_imbalance(buf);
      }
      row.xi_exact = xi;
    }

    McmcConfig mcmc = spec.mcmc;
    mcmc.seed = derive_seed(spec.mcmc.seed, p);
    const McmcResult m = ising_mcmc_oracle(lattice, mcmc);
    row.xi_mcmc = m.xi;
    row.mcmc_modal_xi = m.modal_xi;
    row.mcmc_acceptance = m.acceptance_rate;
  });
  return rows;
}

}  // namespace aarank
