#include <gtest/gtest.h>

#include <cmath>

#include "sigmatch/fixed_point.hpp"
#include "sigmatch/matching.hpp"

namespace sigmatch {
namespace {

// Independent form: M * (L - sum_{j<L} (L - j) P(Poisson(x/M) = j)),
// with the pmf evaluated through lgamma.
double g_oracle(double x, double M, std::size_t L) {
  const double lambda = x / M;
  double missing = 0.0;
  for (std::size_t j = 0; j < L; ++j) {
    const double jj = static_cast<double>(j);
    const double pmf = std::exp(jj * std::log(lambda) - lambda - std::lgamma(jj + 1.0));
    missing += (static_cast<double>(L) - jj) * pmf;
  }
  return M * (static_cast<double>(L) - missing);
}

MarketConfig make(std::size_t k, double m_ratio = 1.0, std::size_t capacity = 1) {
  MarketConfig c;
  c.n = 100;
  c.m_ratio = m_ratio;
  c.capacity = capacity;
  c.k = k;
  return c;
}

TEST(ClosedForm, Examples) {
  EXPECT_EQ(g_closed_form(0.0, 1.0, 1), 0.0);
  EXPECT_EQ(g_closed_form(0.0, 2.0, 3), 0.0);
  EXPECT_NEAR(g_closed_form(1.0, 1.0, 1), 1.0 - std::exp(-1.0), 1e-15);
  for (double M : {0.5, 1.0, 2.0})
    for (std::size_t L : {1u, 2u, 3u}) EXPECT_NEAR(g_closed_form(1e3, M, L), M * L, 1e-6);
  EXPECT_THROW(g_closed_form(-1.0, 1.0, 1), ArgumentError);
}

TEST(ClosedForm, MatchesPoissonOracle) {
  for (double M : {0.5, 1.0, 2.0, 3.0})
    for (std::size_t L : {1u, 2u, 3u, 5u})
      for (double x : {0.01, 0.3, 1.0, 2.5, 4.0, 7.5, 15.0})
        EXPECT_NEAR(g_closed_form(x, M, L), g_oracle(x, M, L), 1e-12 * M * L) << M << ' ' << L << ' ' << x;
}

TEST(ClosedForm, MonotoneBracket) {
  for (double M : {0.5, 1.0, 2.0})
    for (std::size_t L : {1u, 2u})
      for (std::size_t k = 1; k <= 5; ++k) {
        double prev_lhs = -1.0, prev_rhs = 2.0;
        for (double x = 0.05; x <= 5.0; x += 0.05) {
          const double g = g_closed_form(x, M, L);
          const double rhs = 1.0 - std::pow(1.0 - g / x, static_cast<double>(k));
          EXPECT_GE(g, prev_lhs - 1e-15);
          EXPECT_LE(rhs, prev_rhs + 1e-12);
          prev_lhs = g;
          prev_rhs = rhs;
        }
      }
}

TEST(EstimateF, ZeroProposals) {
  const auto c = make(3);
  Rng rng{1};
  const std::vector<double> y{0.0, 0.0, 0.0};
  const auto est = estimate_f(y, c, 1000, 2, rng);
  for (double f : est.f) EXPECT_EQ(f, 0.0);
}

TEST(EstimateF, SingleRankOccupancy) {
  const auto c = make(3);
  const std::vector<double> y{1.0, 0.0, 0.0};
  Rng rng{2};
  const auto est = estimate_f(y, c, 10000, 4, rng);
  const double exact = 1.0 - std::pow(1.0 - 1e-4, 1e4);
  EXPECT_NEAR(est.f[0], exact, 0.01);
  EXPECT_EQ(est.f[1], 0.0);
  EXPECT_GT(est.std_error[0], 0.0);
  EXPECT_LT(est.std_error[0], 0.01);
}

TEST(EstimateF, BoundsAndConservation) {
  for (auto signal : {SignalSpec{IidSignal{}}, SignalSpec{GaussianShift{2.0}}})
    for (std::size_t L : {1u, 2u}) {
      auto c = make(4, 1.0, L);
      c.signal = signal;
      const std::vector<double> y{1.0, 0.6, 0.4, 0.3};
      Rng rng{3};
      const auto est = estimate_f(y, c, 2000, 3, rng);
      double total = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_GE(est.f[i], 0.0);
        EXPECT_LE(est.f[i], y[i]);
        total += est.f[i];
      }
      EXPECT_LE(total, static_cast<double>(L));
    }
}

TEST(EstimateF, IidMatchesPoissonRate) {
  const auto c = make(3, 1.0, 2);
  const std::vector<double> y{1.0, 0.5, 0.25};
  Rng rng{4};
  const auto est = estimate_f(y, c, 20000, 4, rng);
  const auto f = iid_acceptance(y, 1.0, 2);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(est.f[i], f[i], 0.01) << i;
}

TEST(EstimateF, LargeShiftFavorsFirstRank) {
  // One rank-1 and one rank-2 proposal per university (m = n): the rank-1
  // proposal loses only with probability Phi(-10 / sqrt 2).
  const double lose = 0.5 * std::erfc(10.0 / std::sqrt(2.0) / std::sqrt(2.0));
  EXPECT_LT(lose, 1e-3);
  auto c = make(2);
  c.signal = GaussianShift{10.0};
  const std::vector<double> y{1.0, 1.0};
  Rng rng{5};
  const auto est = estimate_f(y, c, 10000, 2, rng);
  // every university with a rank-1 proposal accepts a rank-1 proposal
  const double exact_first = 1.0 - std::pow(1.0 - 1e-4, 1e4);
  EXPECT_NEAR(est.f[0], exact_first, 0.01);
  // rank-2 acceptances only where no rank-1 proposal landed
  const double exact_second = std::pow(1.0 - 1e-4, 1e4) * (1.0 - std::pow(1.0 - 1e-4, 1e4));
  EXPECT_NEAR(est.f[1], exact_second, 0.01);
}

TEST(EstimateF, Errors) {
  const auto c = make(2);
  Rng rng{0};
  const std::vector<double> y{1.0, 0.5};
  const std::vector<double> short_y{1.0};
  EXPECT_THROW(estimate_f(y, c, 50, 1, rng), ArgumentError);
  EXPECT_THROW(estimate_f(short_y, c, 1000, 1, rng), ArgumentError);
  auto half = make(2, 0.5);
  EXPECT_THROW(estimate_f(y, half, 101, 1, rng), ArgumentError);
}

TEST(SolveIid, SingleApplication) {
  const auto r = solve_iid(make(1));
  EXPECT_EQ(r.y.y, std::vector<double>{1.0});
  EXPECT_DOUBLE_EQ(r.x_total(), 1.0);
  EXPECT_NEAR(r.rank_fractions()[0], 1.0 - std::exp(-1.0), 1e-12);
  EXPECT_NEAR(r.unmatched_fraction(), std::exp(-1.0), 1e-12);
  EXPECT_EQ(to_string(r.method), "closed-form-iid");
}

TEST(SolveIid, EquationHoldsTightly) {
  for (double M : {0.5, 1.0, 2.0})
    for (std::size_t L : {1u, 2u})
      for (std::size_t k = 1; k <= 6; ++k) {
        const auto r = solve_iid(make(k, M, L));
        const double x = r.x_total();
        EXPECT_LE(std::abs(iid_equation_gap(x, M, L, k)), 1e-10) << M << ' ' << L << ' ' << k;
        // y_j = alpha^(j-1) with alpha = 1 - g/x
        const double alpha = 1.0 - g_closed_form(x, M, L) / x;
        for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(r.y[j], std::pow(alpha, double(j)), 1e-12);
        EXPECT_LE(r.max_residual(), 1e-9);
      }
}

TEST(SolveIid, FirstChoiceFraction) {
  const auto r = solve_iid(make(5, 2.0));
  EXPECT_EQ(r.y[0], 1.0);
  for (std::size_t j = 1; j < 5; ++j) EXPECT_LE(r.y[j], r.y[j - 1]);
  EXPECT_NEAR(r.rank_fractions()[0], g_closed_form(r.x_total(), 2.0, 1) / r.x_total(), 1e-12);
}

TEST(SolveIid, TotalGrowsWithK) {
  for (double M : {0.5, 1.0, 2.0}) {
    double prev = 0.0;
    for (std::size_t k = 1; k <= 8; ++k) {
      const double x = solve_iid(make(k, M)).x_total();
      EXPECT_GT(x, prev);
      prev = x;
    }
  }
}

TEST(SolveIid, ConservationAndBounds) {
  for (std::size_t L : {1u, 2u}) {
    const auto r = solve_iid(make(4, 1.0, L));
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_LE(r.f[i], r.y[i]);
      total += r.f[i];
      if (i + 1 < 4) {
        EXPECT_NEAR(r.y[i] - r.f[i], r.y[i + 1], 1e-9);
      }
    }
    EXPECT_LE(total, std::min(1.0, static_cast<double>(L)) + 1e-12);
  }
}

TEST(SolveIid, ZeroShiftAcceptedOthersRejected) {
  auto c = make(3);
  c.signal = GaussianShift{0.0};
  EXPECT_NO_THROW(solve_iid(c));
  c.signal = GaussianShift{1.0};
  EXPECT_THROW(solve_iid(c), ArgumentError);
}

TEST(SolveIid, MatchesSimulatedProposals) {
  auto c = make(2);
  c.n = 10000;
  const auto r = solve_iid(c);
  const auto inst = sample_market(c);
  const auto m = student_proposing_da(inst);
  const auto p = rank_profile(inst, m);
  // students who propose at rank 2 are those rejected at rank 1
  const double proposals = 1.0 + static_cast<double>(c.n - p.counts[0]) / 1e4;
  EXPECT_NEAR(proposals, r.x_total(), 0.02);
}

TEST(SolveGeneral, AgreesWithIid) {
  for (std::size_t k : {2u, 3u}) {
    auto c = make(k);
    Rng rng{k};
    GeneralSolveOptions opt;
    const auto g = solve_general(c, opt, rng);
    const auto i = solve_iid(c);
    EXPECT_LE(g.max_residual(), opt.tol);
    EXPECT_EQ(to_string(g.method), "damped-iteration");
    for (std::size_t j = 0; j < k; ++j)
      EXPECT_NEAR(g.y[j], i.y[j], 2 * (g.f_std_error + opt.tol)) << j;
    c.signal = GaussianShift{0.0};
    Rng rng2{k};
    const auto z = solve_general(c, opt, rng2);
    for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(z.y[j], g.y[j], 0.02);
  }
}

TEST(SolveGeneral, ShiftMatchesSimulation) {
  auto c = make(3);
  c.n = 10000;
  c.signal = GaussianShift{2.0};
  Rng rng{9};
  const auto r = solve_general(c, {}, rng);
  const auto fr = r.rank_fractions();
  const auto inst = sample_market(c);
  const auto p = rank_profile(inst, school_proposing_da(inst));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(static_cast<double>(p.counts[i]) / 1e4, fr[i], 0.02) << i;
}

TEST(SolveGeneral, ReportsNonConvergence) {
  auto c = make(3);
  c.signal = GaussianShift{2.0};
  GeneralSolveOptions opt;
  opt.tol = 1e-9;
  opt.max_iter = 3;
  opt.n_sim = 1000;
  Rng rng{1};
  try {
    solve_general(c, opt, rng);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.last().iterations, 3u);
    EXPECT_EQ(e.last().y.size(), 3u);
    EXPECT_GT(e.last().max_residual(), opt.tol);
  }
  opt.tol = 0.0;
  EXPECT_THROW(solve_general(c, opt, rng), ArgumentError);
}

TEST(RankProfile, MatchesSolverFractions) {
  auto c = make(3);
  c.n = 10000;
  const auto fr = solve_iid(c).rank_fractions();
  const auto inst = sample_market(c);
  const auto p = rank_profile(inst, school_proposing_da(inst));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(static_cast<double>(p.counts[i]) / 1e4, fr[i], 0.02);
}

}  // namespace
}  // namespace sigmatch
