#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "sigmatch/core.hpp"
#include "sigmatch/market.hpp"
#include "sigmatch/matching.hpp"

namespace sigmatch {

/// A pre-made application of some rank, labeled by whether its university
/// keeps it among its top `capacity` proposals.
struct SeededProposal {
  UniversityId university = 0;
  double signal = 0.0;
  bool accepted = false;
  StudentId student = kNoStudent;  // kNoStudent while unassigned
};

/// Markets drawn "proposals first": the rank-i applications are generated
/// and labeled before they are attached to students. Students who were
/// rejected at some rank but received no next-rank proposal (or who got no
/// rank-1 proposal at all) are inconsistent.
struct SeededProposalPlan {
  MarketConfig config;
  std::vector<std::vector<SeededProposal>> by_rank;
  /// `assigned[s][r]` indexes into `by_rank[r]`; ranks are contiguous from 0.
  std::vector<std::vector<std::size_t>> assigned;
  std::vector<bool> inconsistent;

  const SeededProposal& proposal(StudentId s, std::size_t r) const {
    return by_rank[r][assigned[s][r]];
  }

  std::size_t inconsistent_count() const {
    return static_cast<std::size_t>(std::count(inconsistent.begin(), inconsistent.end(), true));
  }

  std::size_t unassigned_accepted() const {
    std::size_t c = 0;
    for (const auto& rank : by_rank)
      for (const auto& p : rank) c += (p.accepted && p.student == kNoStudent);
    return c;
  }

  /// Matching that follows the "accepted" labels.
  Matching seeded_matching() const {
    Matching m(config.n, config.universities());
    for (StudentId s = 0; s < config.n; ++s) {
      if (assigned[s].empty()) continue;
      const auto& last = proposal(s, assigned[s].size() - 1);
      if (last.accepted) m.assign(s, last.university);
    }
    return m;
  }
};

/// Slack subtracted from every per-rank proposal count.
inline double seeded_plan_slack(std::size_t n) { return std::pow(static_cast<double>(n), 0.6); }

inline void validate_rank_vector(std::span<const double> y, std::size_t k) {
  if (y.size() != k) throw ArgumentError("rank vector must have k entries");
  if (std::abs(y[0] - 1.0) > 1e-12) throw ArgumentError("rank vector must start at 1");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] >= 0.0 && y[i] <= 1.0)) throw ArgumentError("rank vector entries must lie in [0,1]");
    if (i > 0 && y[i] > y[i - 1] + 1e-12) throw ArgumentError("rank vector must be nonincreasing");
  }
}

namespace detail {

inline bool lists(std::span<const std::size_t> idx, const std::vector<std::vector<SeededProposal>>& by_rank,
                  UniversityId u) {
  for (std::size_t r = 0; r < idx.size(); ++r)
    if (by_rank[r][idx[r]].university == u) return true;
  return false;
}

}  // namespace detail

/// Draws floor(y_i n - n^0.6) rank-i proposals to uniform universities,
/// labels each university's top `capacity` proposals by signal as accepted,
/// then attaches rank-1 proposals to random students and rank-i proposals to
/// random students whose rank-(i-1) proposal was rejected.
///
/// When a rank has more proposals than eligible students, the surplus left
/// unassigned is taken from the rejected proposals first; dropping a rejected
/// proposal never changes any label. A proposal that would repeat a
/// university already on its student's list is swapped with another
/// recipient of the same rank; if no swap works it stays unassigned.
inline SeededProposalPlan build_seeded_plan(std::span<const double> y, const MarketConfig& config,
                                            Rng& rng) {
  config.validate();
  validate_rank_vector(y, config.k);
  const auto n = config.n;
  const auto m = config.universities();
  const double slack = seeded_plan_slack(n);

  SeededProposalPlan plan;
  plan.config = config;
  plan.by_rank.resize(config.k);
  std::uniform_int_distribution<UniversityId> uni{0, static_cast<UniversityId>(m - 1)};
  for (std::size_t r = 0; r < config.k; ++r) {
    const double want = std::floor(y[r] * static_cast<double>(n) - slack);
    const auto count = want > 0 ? static_cast<std::size_t>(want) : std::size_t{0};
    plan.by_rank[r].resize(count);
    for (auto& p : plan.by_rank[r]) {
      p.university = uni(rng);
      p.signal = draw_signal(config.signal, r == 0, rng);
    }
  }

  // Labels: top `capacity` proposals per university.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> at(m);  // (rank, index)
  for (std::size_t r = 0; r < config.k; ++r)
    for (std::size_t i = 0; i < plan.by_rank[r].size(); ++i)
      at[plan.by_rank[r][i].university].emplace_back(r, i);
  for (auto& list : at) {
    const auto keep = std::min(list.size(), config.capacity);
    std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(keep), list.end(),
                      [&](const auto& a, const auto& b) {
                        const double sa = plan.by_rank[a.first][a.second].signal;
                        const double sb = plan.by_rank[b.first][b.second].signal;
                        if (sa != sb) return sa > sb;
                        return a < b;
                      });
    for (std::size_t j = 0; j < keep; ++j) plan.by_rank[list[j].first][list[j].second].accepted = true;
  }

  plan.assigned.assign(n, {});
  std::vector<StudentId> eligible(n);
  std::iota(eligible.begin(), eligible.end(), StudentId{0});
  for (std::size_t r = 0; r < config.k; ++r) {
    auto& props = plan.by_rank[r];
    std::shuffle(eligible.begin(), eligible.end(), rng);
    const auto take = std::min(props.size(), eligible.size());
    if (take < props.size()) {
      // Surplus proposals stay unassigned; accepted ones are placed first so
      // that every accepted label belongs to a student whenever possible.
      std::shuffle(props.begin(), props.end(), rng);
      std::stable_partition(props.begin(), props.end(), [](const auto& p) { return p.accepted; });
    }
    // recipient[i] receives props[i]; surplus students sit past `take`.
    std::vector<StudentId> recipient(eligible.begin(), eligible.end());
    auto collides = [&](StudentId s, std::size_t i) {
      return detail::lists(plan.assigned[s], plan.by_rank, props[i].university);
    };
    std::vector<bool> dropped(take, false);
    for (std::size_t i = 0; i < take; ++i) {
      if (!collides(recipient[i], i)) continue;
      bool fixed = false;
      std::uniform_int_distribution<std::size_t> other{0, recipient.size() - 1};
      for (int attempt = 0; attempt < 64 && !fixed; ++attempt) {
        const auto j = other(rng);
        if (j == i) continue;
        const bool j_holds = j < take;
        if (collides(recipient[j], i)) continue;
        if (j_holds && collides(recipient[i], j)) continue;
        std::swap(recipient[i], recipient[j]);
        fixed = true;
      }
      if (!fixed) dropped[i] = true;
    }
    for (std::size_t i = 0; i < take; ++i) {
      if (dropped[i]) continue;
      props[i].student = recipient[i];
      plan.assigned[recipient[i]].push_back(i);
    }
    eligible.clear();
    for (std::size_t i = 0; i < take; ++i)
      if (!dropped[i] && !props[i].accepted) eligible.push_back(recipient[i]);
    std::sort(eligible.begin(), eligible.end());
  }

  plan.inconsistent.assign(n, false);
  for (StudentId s = 0; s < n; ++s) {
    const auto& a = plan.assigned[s];
    if (a.empty()) {
      plan.inconsistent[s] = true;
      continue;
    }
    const bool last_accepted = plan.proposal(s, a.size() - 1).accepted;
    plan.inconsistent[s] = !last_accepted && a.size() < config.k;
  }
  return plan;
}

/// Completes a plan into a full market: unfilled list positions get uniform
/// universities not yet listed, and their signals are fresh draws (from D at
/// rank 1, D' elsewhere). Planned applications keep their planned signals.
inline MarketInstance complete_seeded_market(const SeededProposalPlan& plan, Rng& rng) {
  const auto& config = plan.config;
  const auto m = config.universities();
  std::vector<std::vector<UniversityId>> prefs(config.n);
  std::vector<std::vector<double>> signals(config.n);
  std::uniform_int_distribution<UniversityId> uni{0, static_cast<UniversityId>(m - 1)};
  for (StudentId s = 0; s < config.n; ++s) {
    auto& p = prefs[s];
    auto& sig = signals[s];
    for (std::size_t r = 0; r < plan.assigned[s].size(); ++r) {
      p.push_back(plan.proposal(s, r).university);
      sig.push_back(plan.proposal(s, r).signal);
    }
    while (p.size() < config.k) {
      UniversityId u;
      if (2 * config.k <= m) {
        do u = uni(rng);
        while (std::find(p.begin(), p.end(), u) != p.end());
      } else {
        std::vector<UniversityId> pool;
        for (UniversityId v = 0; v < m; ++v)
          if (std::find(p.begin(), p.end(), v) == p.end()) pool.push_back(v);
        std::uniform_int_distribution<std::size_t> pick{0, pool.size() - 1};
        u = pool[pick(rng)];
      }
      sig.push_back(draw_signal(config.signal, p.empty(), rng));
      p.push_back(u);
    }
  }
  return MarketInstance::from_lists(config, std::move(prefs), std::move(signals), rng());
}

}  // namespace sigmatch
