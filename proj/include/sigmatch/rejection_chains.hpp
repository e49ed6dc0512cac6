#pragma once

#include <deque>
#include <vector>

#include "sigmatch/matching.hpp"
#include "sigmatch/seeded_plan.hpp"

namespace sigmatch {

/// Resumes student-proposing deferred acceptance from the plan's "accepted"
/// assignment: every inconsistent student proposes down the rest of its
/// list, and displaced students continue in turn.
///
/// `instance` must be the completion of `plan`. Before resuming, any student
/// whose earlier listed university does not hold `capacity` applicants it
/// prefers is reset to propose there again; this is a no-op whenever the
/// plan's labels are realized exactly, and makes the result stable for
/// every plan.
inline Matching continue_rejection_chains(const MarketInstance& instance,
                                          const SeededProposalPlan& plan) {
  if (plan.assigned.size() != instance.students() ||
      plan.config.universities() != instance.universities())
    throw ArgumentError("plan does not belong to this instance");
  detail::StudentProposalState state(instance);
  const auto k = instance.k();
  for (StudentId s = 0; s < instance.students(); ++s) {
    const auto& a = plan.assigned[s];
    for (std::size_t r = 0; r < a.size(); ++r)
      if (instance.prefs(s)[r] != plan.proposal(s, r).university)
        throw ArgumentError("instance lists disagree with the plan");
    if (!a.empty() && plan.proposal(s, a.size() - 1).accepted)
      state.hold(s, a.size() - 1);
    else
      state.next[s] = a.size();
  }

  auto beaten_at = [&](StudentId s, std::size_t r) {
    const auto& h = state.holders[instance.prefs(s)[r]];
    if (h.size() < instance.capacity()) return false;
    const auto prio = instance.priority(s, r);
    for (const auto& [p, t] : h)
      if (p > prio) return false;
    return true;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (StudentId s = 0; s < instance.students(); ++s) {
      const auto upto = state.held_rank[s] < k ? state.held_rank[s] : state.next[s];
      for (std::size_t r = 0; r < upto; ++r) {
        if (beaten_at(s, r)) continue;
        state.release(s);
        state.next[s] = r;
        changed = true;
        break;
      }
    }
  }

  std::deque<StudentId> queue;
  for (StudentId s = 0; s < instance.students(); ++s)
    if (state.held_rank[s] >= k && state.next[s] < k) queue.push_back(s);
  state.run(std::move(queue));
  return state.to_matching();
}

}  // namespace sigmatch
