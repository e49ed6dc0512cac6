#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sigmatch/core.hpp"
#include "sigmatch/market.hpp"
#include "sigmatch/signal.hpp"

namespace sigmatch {

/// Fraction of students who ever apply at each rank; y[0] = 1.
struct RankVector {
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
  double operator[](std::size_t i) const { return y[i]; }
  double total() const {
    double t = 0.0;
    for (double v : y) t += v;
    return t;
  }
};

/// Monte Carlo estimate of the per-rank accepted fraction (of n).
struct AcceptanceEstimate {
  std::vector<double> f;
  std::vector<double> std_error;
  std::size_t trials = 0;
  std::size_t n = 0;
};

enum class SolveMethod { ClosedFormIid, DampedIteration };

inline std::string to_string(SolveMethod m) {
  return m == SolveMethod::ClosedFormIid ? "closed-form-iid" : "damped-iteration";
}

struct SolverResult {
  RankVector y;
  /// residual[i] = y_i - (y_{i-1} - f_{i-1}(y)); residual[0] is 0 by construction.
  std::vector<double> residual;
  /// Per-rank accepted fraction at the solution.
  std::vector<double> f;
  /// Largest Monte Carlo standard error of f (0 for closed form).
  double f_std_error = 0.0;
  std::size_t iterations = 0;
  SolveMethod method = SolveMethod::ClosedFormIid;

  double x_total() const { return y.total(); }

  double max_residual() const {
    double r = 0.0;
    for (double v : residual) r = std::max(r, std::abs(v));
    return r;
  }

  /// Fraction of students matched at rank i+1: y_i - y_{i+1}, with
  /// y_{k+1} = y_k - f_k.
  std::vector<double> rank_fractions() const {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double next = i + 1 < y.size() ? y[i + 1] : y[i] - f[i];
      out[i] = y[i] - next;
    }
    return out;
  }

  double unmatched_fraction() const { return y.y.back() - f.back(); }
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, SolverResult last)
      : Error(what), last_(std::move(last)) {}
  const SolverResult& last() const { return last_; }

 private:
  SolverResult last_;
};

/// Expected accepted proposals per student when x proposals per student land
/// on M universities per student with `capacity` seats each, in the Poisson
/// limit: M * E[min(N, capacity)] with N ~ Poisson(x / M).
inline double g_closed_form(double x, double m_ratio, std::size_t capacity) {
  if (x < 0.0) throw ArgumentError("g: x must be >= 0");
  if (x == 0.0) return 0.0;
  const double lambda = x / m_ratio;
  if (capacity == 1) return -m_ratio * std::expm1(-lambda);
  const auto L = static_cast<double>(capacity);
  // E[min(N, L)] = sum_{j<L} j P(j) + L P(N >= L)
  double pj = std::exp(-lambda);
  double cdf = 0.0, partial = 0.0;
  for (std::size_t j = 0; j < capacity; ++j) {
    if (j > 0) pj *= lambda / static_cast<double>(j);
    cdf += pj;
    partial += static_cast<double>(j) * pj;
  }
  double tail;
  if (lambda < L) {
    tail = 0.0;
    double term = pj;
    for (std::size_t j = capacity; j < capacity + 200; ++j) {
      term *= lambda / static_cast<double>(j);
      tail += term;
      if (term < 1e-18 * tail) break;
    }
  } else {
    tail = std::max(0.0, 1.0 - cdf);
  }
  return m_ratio * (partial + L * tail);
}

/// Left minus right side of the i.i.d. consistency equation
/// g(x)/n = 1 - (1 - g(x)/x)^k, per student.
inline double iid_equation_gap(double x, double m_ratio, std::size_t capacity, std::size_t k) {
  const double g = g_closed_form(x, m_ratio, capacity);
  return g - (1.0 - std::pow(1.0 - g / x, static_cast<double>(k)));
}

/// Per-rank accepted fraction when every proposal is equally likely to be
/// accepted (D = D'), in the Poisson limit.
inline std::vector<double> iid_acceptance(std::span<const double> y, double m_ratio,
                                          std::size_t capacity) {
  double total = 0.0;
  for (double v : y) total += v;
  std::vector<double> f(y.size(), 0.0);
  if (total <= 0.0) return f;
  const double rate = g_closed_form(total, m_ratio, capacity) / total;
  for (std::size_t i = 0; i < y.size(); ++i) f[i] = rate * y[i];
  return f;
}

inline std::vector<double> fixed_point_residual(std::span<const double> y,
                                                std::span<const double> f) {
  std::vector<double> r(y.size(), 0.0);
  r[0] = y[0] - 1.0;
  for (std::size_t i = 1; i < y.size(); ++i) r[i] = y[i] - (y[i - 1] - f[i - 1]);
  return r;
}

/// One-shot proposal experiment: floor(y_i * n_sim) rank-i proposals go to
/// uniform universities among M * n_sim; signals come from D for rank 1 and
/// D' otherwise; each university accepts its top `capacity`. Returns the mean
/// accepted count per rank over `trials`, divided by n_sim.
inline AcceptanceEstimate estimate_f(std::span<const double> y, const MarketConfig& config,
                                     std::size_t n_sim, std::size_t trials, Rng& rng) {
  if (y.size() != config.k) throw ArgumentError("rank vector must have k entries");
  for (double v : y)
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("rank vector entries must lie in [0,1]");
  if (n_sim < 100) throw ArgumentError("n_sim must be >= 100");
  if (trials < 1) throw ArgumentError("trials must be >= 1");
  const double m_real = config.m_ratio * static_cast<double>(n_sim);
  if (std::abs(m_real - std::round(m_real)) > 1e-9 * m_real)
    throw ArgumentError("m-ratio * n_sim must be an integer");
  const auto m = static_cast<std::size_t>(std::llround(m_real));
  const auto L = config.capacity;
  const auto k = config.k;

  std::vector<double> sum(k, 0.0), sum_sq(k, 0.0);
  // Per university: top-L (signal, rank) kept unsorted.
  std::vector<std::pair<double, std::uint32_t>> slots(m * L);
  std::vector<std::uint32_t> filled(m);
  std::uniform_int_distribution<std::size_t> uni{0, m - 1};
  for (std::size_t t = 0; t < trials; ++t) {
    std::fill(filled.begin(), filled.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
      const auto count = static_cast<std::size_t>(std::floor(y[i] * static_cast<double>(n_sim)));
      for (std::size_t p = 0; p < count; ++p) {
        const auto u = uni(rng);
        const double sig = draw_signal(config.signal, i == 0, rng);
        auto* row = &slots[u * L];
        if (filled[u] < L) {
          row[filled[u]++] = {sig, static_cast<std::uint32_t>(i)};
          continue;
        }
        auto* low = std::min_element(row, row + L);
        if (sig > low->first) *low = {sig, static_cast<std::uint32_t>(i)};
      }
    }
    std::vector<double> accepted(k, 0.0);
    for (std::size_t u = 0; u < m; ++u)
      for (std::size_t j = 0; j < filled[u]; ++j) accepted[slots[u * L + j].second] += 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double v = accepted[i] / static_cast<double>(n_sim);
      sum[i] += v;
      sum_sq[i] += v * v;
    }
  }
  AcceptanceEstimate est;
  est.trials = trials;
  est.n = n_sim;
  est.f.resize(k);
  est.std_error.resize(k);
  const auto T = static_cast<double>(trials);
  for (std::size_t i = 0; i < k; ++i) {
    est.f[i] = sum[i] / T;
    const double var = trials > 1 ? std::max(0.0, (sum_sq[i] - T * est.f[i] * est.f[i]) / (T - 1)) : 0.0;
    est.std_error[i] = std::sqrt(var / T);
  }
  return est;
}

/// Solves the i.i.d. case by bisection on total applications per student x
/// over [1, k]: the left side of the consistency equation rises with x and
/// the right side falls, so the root is unique. Then y_j = alpha^(j-1) with
/// alpha = 1 - g(x)/x.
inline SolverResult solve_iid(const MarketConfig& config) {
  config.validate();
  if (!is_iid(config.signal)) throw ArgumentError("solve_iid requires identical signal distributions");
  const auto k = config.k;
  const double M = config.m_ratio;
  const auto L = config.capacity;
  double lo = 1.0, hi = static_cast<double>(k);
  std::size_t it = 0;
  double x = lo;
  if (k > 1) {
    for (; it < 200; ++it) {
      x = 0.5 * (lo + hi);
      const double gap = iid_equation_gap(x, M, L, k);
      if (gap == 0.0) break;
      (gap < 0.0 ? lo : hi) = x;
      if (hi - lo < 1e-15 * hi) break;
    }
  }
  const double alpha = 1.0 - g_closed_form(x, M, L) / x;
  SolverResult res;
  res.method = SolveMethod::ClosedFormIid;
  res.iterations = it;
  res.y.y.resize(k);
  for (std::size_t j = 0; j < k; ++j) res.y.y[j] = std::pow(alpha, static_cast<double>(j));
  res.y.y[0] = 1.0;
  res.f = iid_acceptance(res.y.y, M, L);
  res.residual = fixed_point_residual(res.y.y, res.f);
  return res;
}

struct GeneralSolveOptions {
  double tol = 2e-3;
  std::size_t max_iter = 500;
  std::size_t n_sim = 10000;
  std::size_t trials = 4;
  double beta = 0.5;  // damping
};

/// Damped fixed-point iteration y <- (1-beta) y + beta T(y) with
/// T(y)_i = y_{i-1} - f_{i-1}(y), f estimated by `estimate_f`. Every
/// evaluation of f reuses the same random stream, so T is a deterministic
/// map and the iteration can settle.
inline SolverResult solve_general(const MarketConfig& config, const GeneralSolveOptions& opt,
                                  Rng& rng) {
  config.validate();
  if (!(opt.tol > 0.0)) throw ArgumentError("tol must be positive");
  if (!(opt.beta > 0.0 && opt.beta <= 1.0)) throw ArgumentError("beta must lie in (0, 1]");
  const auto k = config.k;
  const std::uint64_t stream = rng();
  auto eval = [&](const std::vector<double>& y) {
    Rng r{stream};
    return estimate_f(y, config, opt.n_sim, opt.trials, r);
  };

  SolverResult res;
  res.method = SolveMethod::DampedIteration;
  std::vector<double> y(k, 1.0);
  for (std::size_t it = 0;; ++it) {
    const auto est = eval(y);
    res.y.y = y;
    res.f = est.f;
    res.f_std_error = *std::max_element(est.std_error.begin(), est.std_error.end());
    res.residual = fixed_point_residual(y, est.f);
    res.iterations = it;
    if (res.max_residual() <= opt.tol) return res;
    if (it >= opt.max_iter)
      throw ConvergenceError("damped iteration did not reach tol " + std::to_string(opt.tol) +
                                 " in " + std::to_string(opt.max_iter) +
                                 " iterations (residual " + std::to_string(res.max_residual()) + ")",
                             res);
    std::vector<double> next(k);
    next[0] = 1.0;
    for (std::size_t i = 1; i < k; ++i) {
      const double t = std::clamp(y[i - 1] - est.f[i - 1], 0.0, 1.0);
      next[i] = std::min((1.0 - opt.beta) * y[i] + opt.beta * t, next[i - 1]);
    }
    y = std::move(next);
  }
}

}  // namespace sigmatch
