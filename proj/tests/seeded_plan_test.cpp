#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "sigmatch/analytics.hpp"
#include "sigmatch/fixed_point.hpp"
#include "sigmatch/rejection_chains.hpp"
#include "sigmatch/seeded_plan.hpp"

namespace sigmatch {
namespace {

MarketConfig iid_config(std::size_t n, std::size_t k) {
  MarketConfig c;
  c.n = n;
  c.k = k;
  return c;
}

void expect_plan_invariants(const SeededProposalPlan& plan, std::span<const double> y) {
  const auto& c = plan.config;
  const double slack = std::pow(static_cast<double>(c.n), 0.6);
  std::map<UniversityId, std::size_t> accepted;
  for (std::size_t r = 0; r < c.k; ++r) {
    const double want = std::floor(y[r] * static_cast<double>(c.n) - slack);
    EXPECT_EQ(plan.by_rank[r].size(), want > 0 ? static_cast<std::size_t>(want) : 0u) << "rank " << r;
    for (const auto& p : plan.by_rank[r]) accepted[p.university] += p.accepted;
  }
  for (const auto& [u, count] : accepted) EXPECT_LE(count, c.capacity);

  for (StudentId s = 0; s < c.n; ++s) {
    const auto& a = plan.assigned[s];
    ASSERT_LE(a.size(), c.k);
    for (std::size_t r = 0; r < a.size(); ++r) {
      EXPECT_EQ(plan.proposal(s, r).student, s);
      if (r + 1 < a.size()) {
        EXPECT_FALSE(plan.proposal(s, r).accepted);
      }
    }
    if (plan.inconsistent[s]) continue;
    // consistent: rank-i proposal present iff rank-(i-1) proposal rejected
    ASSERT_FALSE(a.empty());
    for (std::size_t i = 1; i < c.k; ++i) {
      const bool has_prev_rejected = i - 1 < a.size() && !plan.proposal(s, i - 1).accepted;
      EXPECT_EQ(i < a.size(), has_prev_rejected);
    }
  }
}

TEST(SeededPlan, OnlyFirstRankProposals) {
  const auto c = iid_config(2000, 3);
  const std::vector<double> y{1.0, 0.0, 0.0};
  Rng rng{1};
  auto plan = build_seeded_plan(y, c, rng);
  EXPECT_GT(plan.by_rank[0].size(), 0u);
  EXPECT_TRUE(plan.by_rank[1].empty());
  EXPECT_TRUE(plan.by_rank[2].empty());
  for (StudentId s = 0; s < c.n; ++s) {
    const auto& a = plan.assigned[s];
    const bool rejected = !a.empty() && !plan.proposal(s, 0).accepted;
    if (a.empty() || rejected) {
      EXPECT_TRUE(plan.inconsistent[s]);
    } else {
      EXPECT_FALSE(plan.inconsistent[s]);
    }
  }
  expect_plan_invariants(plan, y);
}

TEST(SeededPlan, RejectsBadRankVector) {
  const auto c = iid_config(100, 3);
  Rng rng{0};
  const std::vector<double> not_one{0.9, 0.5, 0.1};
  const std::vector<double> increasing{1.0, 0.2, 0.5};
  const std::vector<double> wrong_size{1.0, 0.5};
  EXPECT_THROW(build_seeded_plan(not_one, c, rng), ArgumentError);
  EXPECT_THROW(build_seeded_plan(increasing, c, rng), ArgumentError);
  EXPECT_THROW(build_seeded_plan(wrong_size, c, rng), ArgumentError);
}

TEST(SeededPlan, InvariantsForRandomRankVectors) {
  Rng gen{42};
  for (int trial = 0; trial < 40; ++trial) {
    MarketConfig c;
    c.n = 200 + gen() % 800;
    c.m_ratio = (gen() % 2) ? 1.0 : 2.0;
    c.capacity = 1 + gen() % 3;
    c.k = 1 + gen() % 5;
    if (gen() % 2) c.signal = GaussianShift{1.0};
    std::vector<double> y(c.k, 1.0);
    std::uniform_real_distribution<double> unif{0.0, 1.0};
    for (std::size_t i = 1; i < c.k; ++i) y[i] = y[i - 1] * unif(gen);
    Rng rng{static_cast<std::uint64_t>(trial)};
    auto plan = build_seeded_plan(y, c, rng);
    expect_plan_invariants(plan, y);
    auto inst = complete_seeded_market(plan, rng);
    for (StudentId s = 0; s < c.n; ++s)
      for (std::size_t r = 0; r < plan.assigned[s].size(); ++r) {
        EXPECT_EQ(inst.prefs(s)[r], plan.proposal(s, r).university);
        EXPECT_EQ(inst.signals(s)[r], plan.proposal(s, r).signal);
      }
  }
}

TEST(SeededPlan, FewInconsistentAtSolvedRankVector) {
  const auto c = iid_config(10000, 3);
  const auto y = solve_iid(c).y.y;
  Rng rng{2024};
  auto plan = build_seeded_plan(y, c, rng);
  expect_plan_invariants(plan, y);
  EXPECT_LT(static_cast<double>(plan.inconsistent_count()) / 1e4, 0.05);
  EXPECT_EQ(plan.unassigned_accepted(), 0u);
}

TEST(SeededPlan, BlockingPairsInvolveInconsistentStudents) {
  const auto c = iid_config(10000, 3);
  const auto y = solve_iid(c).y.y;
  Rng rng{7};
  auto plan = build_seeded_plan(y, c, rng);
  auto inst = complete_seeded_market(plan, rng);
  const auto blocking = find_blocking_pairs(inst, plan.seeded_matching());
  EXPECT_FALSE(blocking.empty());
  for (const auto& b : blocking) EXPECT_TRUE(plan.inconsistent[b.student]) << b.student;
}

TEST(RejectionChains, ConsistentPlanIsAlreadyStable) {
  MarketConfig c;
  c.n = 3;
  c.k = 2;
  SeededProposalPlan plan;
  plan.config = c;
  plan.by_rank = {{{0, 2.0, true, 0}, {1, 1.0, true, 1}, {0, 1.0, false, 2}},
                  {{2, 0.5, true, 2}}};
  plan.assigned = {{0}, {1}, {2, 0}};
  plan.inconsistent = {false, false, false};
  Rng rng{3};
  auto inst = complete_seeded_market(plan, rng);
  const auto seeded = plan.seeded_matching();
  EXPECT_EQ(seeded.partner(0), 0u);
  EXPECT_EQ(seeded.partner(1), 1u);
  EXPECT_EQ(seeded.partner(2), 2u);
  EXPECT_EQ(continue_rejection_chains(inst, plan), seeded);
}

TEST(RejectionChains, RepairsSeededMatching) {
  for (std::size_t k : {2u, 3u, 5u}) {
    const auto c = iid_config(10000, k);
    const auto y = solve_iid(c).y.y;
    RunningStat changed;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      Rng rng{seed * 10 + k};
      auto plan = build_seeded_plan(y, c, rng);
      auto inst = complete_seeded_market(plan, rng);
      const auto repaired = continue_rejection_chains(inst, plan);
      EXPECT_TRUE(find_blocking_pairs(inst, repaired).empty());
      changed.add(compare_matchings(plan.seeded_matching(), repaired));
    }
    if (k == 3) {
      EXPECT_LT(changed.mean(), 0.05);
    }
  }
}

TEST(RejectionChains, StableEvenForArbitraryPlans) {
  Rng gen{5};
  for (int trial = 0; trial < 30; ++trial) {
    MarketConfig c;
    c.n = 100 + gen() % 300;
    c.capacity = 1 + gen() % 2;
    c.k = 1 + gen() % 4;
    std::vector<double> y(c.k, 1.0);
    for (std::size_t i = 1; i < c.k; ++i) y[i] = y[i - 1] * 0.9;  // deliberately too many proposals
    Rng rng{static_cast<std::uint64_t>(trial)};
    auto plan = build_seeded_plan(y, c, rng);
    auto inst = complete_seeded_market(plan, rng);
    EXPECT_TRUE(find_blocking_pairs(inst, continue_rejection_chains(inst, plan)).empty());
  }
}

TEST(RejectionChains, RejectsForeignInstance) {
  const auto c = iid_config(500, 2);
  const auto y = solve_iid(c).y.y;
  Rng rng{1};
  auto plan = build_seeded_plan(y, c, rng);
  auto other = sample_market(c);
  EXPECT_THROW(continue_rejection_chains(other, plan), ArgumentError);
}

}  // namespace
}  // namespace sigmatch
