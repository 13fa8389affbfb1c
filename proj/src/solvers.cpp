#include "aarank/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

#include "aarank/random.hpp"

namespace aarank {

StepRule parse_step_rule(const std::string& name) {
  if (name == "constant") return StepRule::kConstant;
  if (name == "inv_sqrt") return StepRule::kInvSqrt;
  if (name == "inv_linear") return StepRule::kInvLinear;
  throw DataError("unknown step rule '" + name + "' (expected constant, inv_sqrt, inv_linear)");
}

std::string to_string(StepRule rule) {
  switch (rule) {
    case StepRule::kConstant: return "constant";
    case StepRule::kInvSqrt: return "inv_sqrt";
    case StepRule::kInvLinear: return "inv_linear";
  }
  return "?";
}

double StepSchedule::eta(std::uint64_t t) const {
  switch (rule) {
    case StepRule::kConstant: return eta0;
    case StepRule::kInvSqrt: return eta0 / std::sqrt(static_cast<double>(t) + 1.0);
    case StepRule::kInvLinear: return eta0 / (static_cast<double>(t) + 1.0);
  }
  return eta0;
}

void SolverConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw DataError("delta must lie in (0, 1)");
  if (!(lambda0 >= 0.0)) throw DataError("lambda0 must be non-negative");
  if (!(gamma > 1.0)) throw DataError("gamma must exceed 1");
  if (!(step.eta0 > 0.0)) throw DataError("step size eta0 must be positive");
  if (max_iters == 0) throw DataError("max_iters must be positive");
  if (!(grad_norm_tol > 0.0)) throw DataError("grad_norm_tol must be positive");
  if (grad_window == 0) throw DataError("grad_window must be positive");
  if (!(x_floor > 0.0)) throw DataError("x_floor must be positive");
}

std::vector<Index> rank_profiles(std::span<const double> distribution) {
  std::vector<Index> order(distribution.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return distribution[a] > distribution[b]; });
  return order;
}

double stationarity_residual(std::span<const double> x, const MarkovChain& chain) {
  const Index n = chain.size();
  std::vector<SparseEntry> b;
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    chain.residual(i, b);
    double dot = 0.0;
    for (const auto& e : b) dot += e.value * x[e.index];
    total += dot * dot;
  }
  return total / static_cast<double>(n);
}

double eigen_residual(std::span<const double> v, const MarkovChain& chain) {
  const Index n = chain.size();
  std::vector<double> y(n, 0.0);
  TransitionRow r;
  for (Index i = 0; i < n; ++i) {
    chain.row(i, r);
    y[i] += r.self_prob * v[i];
    for (const auto& e : r.neighbors) y[e.index] += e.value * v[i];
  }
  double s = 0.0;
  for (Index i = 0; i < n; ++i) s += (y[i] - v[i]) * (y[i] - v[i]);
  return std::sqrt(s);
}

namespace {

RankingResult finish(std::vector<double> dist, std::uint64_t iterations, bool converged) {
  RankingResult out;
  out.ranking = rank_profiles(dist);
  out.distribution = std::move(dist);
  out.iterations = iterations;
  out.converged = converged;
  return out;
}

}  // namespace

RankingResult power_method(const MarkovChain& chain, double tol, std::uint64_t max_iters) {
  const Index n = chain.size();
  // Iterates u ← Pᵀu with P = I + ½ W⁻¹(T − I), W = diag(out-mass), so every
  // state keeps half its mass and sends the rest out along its exits in
  // proportion. Stationary points satisfy u = W v; stiff sinks whose exits
  // are e^{-500}-unlikely under T mix in O(1) steps under P.
  std::vector<double> w(n);
  for (Index i = 0; i < n; ++i) {
    const double out = chain.out_mass(i);
    w[i] = out > 0.0 ? out : 1.0;
  }
  std::vector<double> u(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  TransitionRow r;
  std::vector<TracePoint> trace;
  const std::uint64_t every = std::max<std::uint64_t>(1, max_iters / 100);
  bool converged = false;
  std::uint64_t it = 0;
  while (it < max_iters) {
    ++it;
    std::fill(next.begin(), next.end(), 0.0);
    for (Index i = 0; i < n; ++i) {
      chain.row(i, r);
      const double push = 0.5 * u[i] / w[i];
      next[i] += u[i] - push * r.out_mass;
      for (const auto& e : r.neighbors) next[e.index] += e.value * push;
    }
    const double norm = std::accumulate(next.begin(), next.end(), 0.0);
    double change = 0.0;
    for (Index i = 0; i < n; ++i) {
      next[i] /= norm;
      change += std::abs(next[i] - u[i]);
    }
    u.swap(next);
    if (it % every == 0) trace.push_back({it, change, change, 0.0});
    if (change <= tol) {
      converged = true;
      break;
    }
  }
  // v = W⁻¹u, scaled through logs: u_i / w_i can exceed the double range.
  double top = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    if (u[i] > 0.0) top = std::max(top, std::log(u[i]) - std::log(w[i]));
  }
  for (Index i = 0; i < n; ++i) {
    u[i] = u[i] > 0.0 ? std::exp(std::log(u[i]) - std::log(w[i]) - top) : 0.0;
  }
  const double total = std::accumulate(u.begin(), u.end(), 0.0);
  for (double& x : u) x /= total;
  auto out = finish(std::move(u), it, converged);
  out.trace = std::move(trace);
  return out;
}

RankingResult dense_eigensolve(const MarkovChain& chain, Index cap) {
  const Index n = chain.size();
  if (n > cap) {
    throw CapacityError("dense solver refuses n=" + std::to_string(n) + " (cap " +
                        std::to_string(cap) +
                        "); use the stochastic solver (sgd) or the oracle solver instead");
  }
  if (n == 1) return finish({1.0}, 0, true);
  // GTH state reduction on the off-diagonal part of T.
  std::vector<double> p = assemble_dense(chain);
  auto at = [&](Index i, Index j) -> double& { return p[i * n + j]; };
  for (Index k = n - 1; k >= 1; --k) {
    double s = 0.0;
    for (Index j = 0; j < k; ++j) s += at(k, j);
    if (!(s > 0.0)) throw DataError("chain is reducible; stationary distribution not unique");
    for (Index i = 0; i < k; ++i) at(i, k) /= s;
    for (Index i = 0; i < k; ++i) {
      const double f = at(i, k);
      if (f == 0.0) continue;
      double* row_i = &p[i * n];
      const double* row_k = &p[k * n];
      for (Index j = 0; j < k; ++j) row_i[j] += f * row_k[j];
    }
  }
  std::vector<double> pi(n, 0.0);
  pi[0] = 1.0;
  for (Index k = 1; k < n; ++k) {
    double s = 0.0;
    for (Index i = 0; i < k; ++i) s += pi[i] * at(i, k);
    pi[k] = s;
    // Masses can span more than the double range relative to pi[0].
    if (s > 1e150) {
      for (Index i = 0; i <= k; ++i) pi[i] /= s;
    }
  }
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& x : pi) x /= total;
  return finish(std::move(pi), 0, true);
}

double barrier_objective(std::span<const double> x, const MarkovChain& chain, double lambda,
                         double delta) {
  const Index n = chain.size();
  if (x.size() != n) throw DataError("iterate length does not match chain size");
  double sum = 0.0;
  double log_sum = 0.0;
  for (double v : x) {
    if (!(v > 0.0)) throw DataError("barrier objective needs a strictly positive iterate");
    sum += v;
    log_sum += std::log(v);
  }
  const double dev = sum - 1.0;
  if (!(std::abs(dev) < delta)) throw DataError("iterate lies outside the barrier slab");
  return stationarity_residual(x, chain) - lambda * std::log(delta * delta - dev * dev) -
         lambda / static_cast<double>(n) * log_sum;
}

std::vector<double> barrier_gradient(std::span<const double> x, const MarkovChain& chain,
                                     double lambda, double delta) {
  const Index n = chain.size();
  const double nd = static_cast<double>(n);
  const double dev = std::accumulate(x.begin(), x.end(), 0.0) - 1.0;
  const double slab = 2.0 * lambda * dev / (delta * delta - dev * dev);
  std::vector<double> g(n);
  for (Index k = 0; k < n; ++k) g[k] = slab - lambda / nd / x[k];
  std::vector<SparseEntry> b;
  for (Index i = 0; i < n; ++i) {
    chain.residual(i, b);
    double dot = 0.0;
    for (const auto& e : b) dot += e.value * x[e.index];
    for (const auto& e : b) g[e.index] += 2.0 / nd * dot * e.value;
  }
  return g;
}

UpdateRule parse_update_rule(const std::string& name) {
  if (name == "plain") return UpdateRule::kPlain;
  if (name == "scaled") return UpdateRule::kScaled;
  throw DataError("unknown update rule '" + name + "' (expected plain, scaled)");
}

std::string to_string(UpdateRule rule) {
  return rule == UpdateRule::kPlain ? "plain" : "scaled";
}

BarrierSgd::BarrierSgd(const MarkovChain& chain, double delta, double x_floor, UpdateRule rule)
    : chain_(chain), n_(chain.size()), delta_(delta), floor_(x_floor), rule_(rule),
      y_(n_, 1.0 / static_cast<double>(n_)) {
  if (rule_ == UpdateRule::kScaled) {
    w_.resize(n_);
    for (Index k = 0; k < n_; ++k) {
      const double out = chain_.out_mass(k);
      // Absorbing states keep unit weight.
      w_[k] = out > 0.0 ? out : 1.0;
      y_[k] *= w_[k];
    }
  }
  resum();
}

void BarrierSgd::assign(std::span<const double> x) {
  if (x.size() != n_) throw DataError("iterate length does not match chain size");
  for (Index k = 0; k < n_; ++k) y_[k] = w_.empty() ? x[k] : x[k] * w_[k];
  resum();
}

std::vector<double> BarrierSgd::x() const {
  std::vector<double> out(n_);
  for (Index k = 0; k < n_; ++k) out[k] = x(k);
  return out;
}

void BarrierSgd::resum() {
  double s = 0.0;
  for (Index k = 0; k < n_; ++k) s += x(k);
  sum_ = s;
}

std::vector<double> BarrierSgd::release_normalized() {
  if (!w_.empty()) {
    for (Index k = 0; k < n_; ++k) y_[k] /= w_[k];
    std::vector<double>().swap(w_);
  }
  const double total = std::accumulate(y_.begin(), y_.end(), 0.0);
  for (double& v : y_) v /= total;
  sum_ = 1.0;
  return std::move(y_);
}

double BarrierSgd::floor_value(Index k) const {
  return w_.empty() ? floor_ : std::max(floor_ * w_[k], std::numeric_limits<double>::min());
}

void BarrierSgd::floor_at(Index k) {
  const double lo = floor_value(k);
  if (y_[k] < lo) y_[k] = lo;
}

BarrierSgd::StepStats BarrierSgd::step(Index i, double lambda, double eta) {
  chain_.residual(i, b_);
  const double xi = x(i);
  const bool scaled = rule_ == UpdateRule::kScaled;
  double dot = 0.0;
  double flow = 0.0;
  double cnorm2 = 0.0;
  for (const auto& e : b_) {
    const double xv = x(e.index);
    dot += e.value * xv;
    flow += std::abs(e.value) * xv;
    const double c = scaled ? e.value / w_[e.index] : e.value;
    cnorm2 += c * c;
  }
  // A row held at the floor with net outflow is pressing on its bound, not
  // out of balance.
  const bool pinned = dot < 0.0 && y_[i] <= floor_value(i) * (1.0 + 1e-9);
  const double data_eta = scaled && cnorm2 > 0.0 ? eta / cnorm2 : eta;
  delta_y_.resize(b_.size());
  for (std::size_t j = 0; j < b_.size(); ++j) {
    const double c = scaled ? b_[j].value / w_[b_[j].index] : b_[j].value;
    delta_y_[j] = -data_eta * 2.0 * dot * c;
  }

  if (lambda > 0.0) {
    const double nd = static_cast<double>(n_);
    const double dev = sum_ - 1.0;
    const double gap = delta_ * delta_ - dev * dev;
    const double slab = 2.0 * lambda * dev / gap;
    const double lam_n = lambda / nd;
    double s = 0.0;
    if (scaled) {
      // Each barrier part is stepped as g / (1 + η·curvature).
      const double curv = 2.0 * lambda * (delta_ * delta_ + dev * dev) / (gap * gap);
      const double slab_step = eta * slab / (1.0 + eta * nd * curv);
      const double el = eta * lam_n;
      for (Index k = 0; k < n_; ++k) {
        const double xk = y_[k] / w_[k];
        const double next = xk - slab_step + el * xk / (xk * xk + el);
        y_[k] = next * w_[k];
      }
    } else {
      for (Index k = 0; k < n_; ++k) y_[k] -= eta * (slab - lam_n / y_[k]);
    }
    for (std::size_t j = 0; j < b_.size(); ++j) y_[b_[j].index] += delta_y_[j];
    for (Index k = 0; k < n_; ++k) {
      floor_at(k);
      s += x(k);
    }
    sum_ = s;
  } else {
    for (std::size_t j = 0; j < b_.size(); ++j) {
      const Index k = b_[j].index;
      const double before = x(k);
      y_[k] += delta_y_[j];
      floor_at(k);
      sum_ += x(k) - before;
    }
  }
  project_to_slab();
  return {flow > 0.0 && !pinned ? std::abs(dot) / flow : 0.0, xi};
}

void BarrierSgd::project_to_slab() {
  const double dev = sum_ - 1.0;
  if (std::abs(dev) <= delta_ * (1.0 - 1e-6)) return;
  const double target = 1.0 + (dev > 0.0 ? 0.99 : -0.99) * delta_;
  const double factor = target / sum_;
  double s = 0.0;
  for (Index k = 0; k < n_; ++k) {
    y_[k] *= factor;
    floor_at(k);
    s += x(k);
  }
  sum_ = s;
}

namespace {

/// Data term of the objective at the normalized iterate; exact for small n,
/// otherwise a fixed-seed sample of rows.
double residual_estimate(const BarrierSgd& sgd, const MarkovChain& chain, std::uint64_t seed) {
  constexpr Index kExactLimit = 4096;
  const Index n = chain.size();
  const double norm = sgd.sum();
  std::vector<SparseEntry> b;
  auto term = [&](Index i) {
    chain.residual(i, b);
    double dot = 0.0;
    for (const auto& e : b) dot += e.value * sgd.x(e.index);
    dot /= norm;
    return dot * dot;
  };
  double total = 0.0;
  if (n <= kExactLimit) {
    for (Index i = 0; i < n; ++i) total += term(i);
    return total / static_cast<double>(n);
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  for (Index s = 0; s < kExactLimit; ++s) total += term(pick(rng));
  return total / static_cast<double>(kExactLimit);
}

double objective_estimate(const BarrierSgd& sgd, double lambda, double delta,
                          double residual_of_normalized) {
  const double sum = sgd.sum();
  // residual_of_normalized is for x/‖x‖₁; the data term is quadratic in x.
  double value = residual_of_normalized * sum * sum;
  if (lambda > 0.0) {
    double log_sum = 0.0;
    for (Index k = 0; k < sgd.size(); ++k) log_sum += std::log(sgd.x(k));
    const double dev = sum - 1.0;
    value += -lambda * std::log(delta * delta - dev * dev) -
             lambda / static_cast<double>(sgd.size()) * log_sum;
  }
  return value;
}

}  // namespace

std::vector<double> sgd_step(std::span<const double> x, Index sampled, const MarkovChain& chain,
                             double lambda, double eta, double delta, double x_floor) {
  if (x.size() != chain.size()) throw DataError("iterate length does not match chain size");
  if (sampled >= chain.size()) throw DataError("sampled profile out of range");
  BarrierSgd sgd(chain, delta, x_floor, UpdateRule::kPlain);
  sgd.assign(x);
  sgd.step(sampled, lambda, eta);
  return sgd.x();
}

RankingResult alpha_alpha_rank(const MarkovChain& chain, const SolverConfig& config) {
  config.validate();
  const Index n = chain.size();
  if (n == 1) return finish({1.0}, 0, true);

  BarrierSgd sgd(chain, config.delta, config.x_floor, config.update);
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  const std::uint64_t every =
      config.checkpoint_every ? config.checkpoint_every
                              : std::max<std::uint64_t>(1, config.max_iters / 100);
  const std::uint64_t trace_seed = derive_seed(config.seed, 0x7472616365ULL);

  // Rows are weighted by x_i / (x_i + 1e-9/n): states far below the uniform
  // share cannot be resolved against their neighbours in double precision
  // and carry no weight in any ranking.
  const double share = 1e-9 / static_cast<double>(n);
  std::vector<double> window(config.grad_window, 0.0);
  std::vector<double> weights(config.grad_window, 0.0);
  double window_sum = 0.0;
  double weight_sum = 0.0;
  double lambda = config.lambda0;
  bool converged = false;
  std::uint64_t t = 0;
  std::vector<TracePoint> trace;

  auto checkpoint = [&](std::uint64_t iteration, double stat) {
    const double res = residual_estimate(sgd, chain, trace_seed);
    const double active = lambda >= config.lambda_cutoff ? lambda : 0.0;
    trace.push_back({iteration, objective_estimate(sgd, active, config.delta, res), stat, res});
  };
  checkpoint(0, 0.0);

  while (t < config.max_iters) {
    const Index i = pick(rng);
    const double active = lambda >= config.lambda_cutoff ? lambda : 0.0;
    const auto st = sgd.step(i, active, config.step.eta(t));
    lambda /= config.gamma;

    const std::size_t slot = t % config.grad_window;
    const double w = st.mass / (st.mass + share);
    window_sum += w * st.imbalance - window[slot];
    weight_sum += w - weights[slot];
    window[slot] = w * st.imbalance;
    weights[slot] = w;
    ++t;
    double stat = weight_sum > 0.0 ? window_sum / weight_sum : 1.0;
    const bool may_stop = t >= config.grad_window && t >= config.min_iters;
    // Weights span hundreds of decades, so the running sums can cancel.
    // Any value that is reported or acted on is recomputed exactly.
    if (t % config.grad_window == 0 || t % every == 0 || (may_stop && stat <= config.grad_norm_tol)) {
      window_sum = std::accumulate(window.begin(), window.end(), 0.0);
      weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
      stat = weight_sum > 0.0 ? window_sum / weight_sum : 1.0;
    }
    if (t % config.grad_window == 0 && active == 0.0 && t % (config.grad_window * 64) == 0) sgd.resum();
    if (t % every == 0) checkpoint(t, stat);
    if (may_stop && stat <= config.grad_norm_tol) {
      converged = true;
      if (t % every != 0) checkpoint(t, stat);
      break;
    }
  }

  auto out = finish(sgd.release_normalized(), t, converged);
  out.trace = std::move(trace);
  return out;
}

RankingResult power_method(const GameSpec& game, const EvoParams& params, double tol,
                           std::uint64_t max_iters) {
  return power_method(EvoChain(game, params), tol, max_iters);
}

RankingResult dense_eigensolve(const GameSpec& game, const EvoParams& params, Index cap) {
  if (game.num_profiles() > cap) {
    throw CapacityError("dense solver refuses n=" + std::to_string(game.num_profiles()) +
                        " (cap " + std::to_string(cap) +
                        "); use the stochastic solver (sgd) or the oracle solver instead");
  }
  return dense_eigensolve(EvoChain(game, params), cap);
}

RankingResult alpha_alpha_rank(const GameSpec& game, const EvoParams& params,
                               const SolverConfig& config) {
  return alpha_alpha_rank(EvoChain(game, params), config);
}

}  // namespace aarank
