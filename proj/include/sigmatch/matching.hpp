#pragma once

#include <algorithm>
#include <deque>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "sigmatch/core.hpp"
#include "sigmatch/market.hpp"

namespace sigmatch {

/// Partial assignment of students to universities.
class Matching {
 public:
  Matching() = default;
  Matching(std::size_t students, std::size_t universities)
      : assignment_(students, kUnmatched), universities_(universities) {}

  std::size_t students() const { return assignment_.size(); }
  std::size_t universities() const { return universities_; }

  UniversityId partner(StudentId s) const { return assignment_[s]; }
  bool is_matched(StudentId s) const { return assignment_[s] != kUnmatched; }
  void assign(StudentId s, UniversityId u) { assignment_[s] = u; }
  void unassign(StudentId s) { assignment_[s] = kUnmatched; }

  const std::vector<UniversityId>& assignment() const { return assignment_; }

  std::size_t matched_count() const {
    return static_cast<std::size_t>(
        std::count_if(assignment_.begin(), assignment_.end(),
                      [](UniversityId u) { return u != kUnmatched; }));
  }

  /// Inverse view: students held by each university, in student-id order.
  std::vector<std::vector<StudentId>> by_university() const {
    std::vector<std::vector<StudentId>> out(universities_);
    for (StudentId s = 0; s < assignment_.size(); ++s)
      if (assignment_[s] != kUnmatched) out[assignment_[s]].push_back(s);
    return out;
  }

  bool operator==(const Matching&) const = default;

 private:
  std::vector<UniversityId> assignment_;
  std::size_t universities_ = 0;
};

struct BlockingPair {
  StudentId student;
  UniversityId university;
  bool operator==(const BlockingPair&) const = default;
};

/// Per-rank match counts; `counts[r]` is the number of students matched to
/// their rank r+1 school.
struct RankProfile {
  std::vector<std::size_t> counts;
  std::size_t unmatched = 0;

  std::size_t matched() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

/// Throws InvalidMatchingError unless `matching` fits `instance`, respects
/// capacities and only uses applied pairs.
inline void validate_matching(const MarketInstance& instance, const Matching& matching) {
  if (matching.students() != instance.students() ||
      matching.universities() != instance.universities())
    throw InvalidMatchingError("matching dimensions do not match the instance");
  std::vector<std::size_t> load(instance.universities(), 0);
  for (StudentId s = 0; s < matching.students(); ++s) {
    const auto u = matching.partner(s);
    if (u == kUnmatched) continue;
    if (u >= instance.universities()) throw InvalidMatchingError("university id out of range");
    if (!instance.rank_of(s, u))
      throw InvalidMatchingError("student " + std::to_string(s) + " matched to university " +
                                 std::to_string(u) + " without applying");
    if (++load[u] > instance.capacity())
      throw InvalidMatchingError("university " + std::to_string(u) + " over capacity");
  }
}

namespace detail {

inline constexpr std::uint32_t kNoPriority = std::numeric_limits<std::uint32_t>::max();

// Student-proposing deferred acceptance state that can be resumed from any
// tentative assignment. `next[s]` is the next rank s will propose to.
struct StudentProposalState {
  const MarketInstance* inst;
  std::vector<std::vector<std::pair<std::uint32_t, StudentId>>> holders;  // (priority, s)
  std::vector<std::size_t> next;
  std::vector<std::size_t> held_rank;  // rank of current match, k() if none

  explicit StudentProposalState(const MarketInstance& instance)
      : inst(&instance),
        holders(instance.universities()),
        next(instance.students(), 0),
        held_rank(instance.students(), instance.k()) {}

  void hold(StudentId s, std::size_t r) {
    holders[inst->prefs(s)[r]].emplace_back(inst->priority(s, r), s);
    held_rank[s] = r;
    next[s] = r + 1;
  }

  void release(StudentId s) {
    if (held_rank[s] >= inst->k()) return;
    auto& h = holders[inst->prefs(s)[held_rank[s]]];
    h.erase(std::find_if(h.begin(), h.end(), [s](const auto& p) { return p.second == s; }));
    held_rank[s] = inst->k();
  }

  // Lets `s` propose down its list until it is held or exhausts it. Returns
  // the student left without a partner by this proposal (s itself, someone
  // displaced, or kNoStudent if nobody).
  StudentId propose_once(StudentId s) {
    const auto r = next[s]++;
    const auto u = inst->prefs(s)[r];
    const auto prio = inst->priority(s, r);
    auto& h = holders[u];
    if (h.size() < inst->capacity()) {
      h.emplace_back(prio, s);
      held_rank[s] = r;
      return kNoStudent;
    }
    auto worst = std::max_element(h.begin(), h.end());
    if (prio < worst->first) {
      const StudentId out = worst->second;
      *worst = {prio, s};
      held_rank[s] = r;
      held_rank[out] = inst->k();
      return out;
    }
    return s;
  }

  // Runs every queued chain to completion. Returns the number of proposals.
  std::size_t run(std::deque<StudentId> queue) {
    std::size_t proposals = 0;
    while (!queue.empty()) {
      StudentId s = queue.front();
      queue.pop_front();
      while (s != kNoStudent && held_rank[s] >= inst->k() && next[s] < inst->k()) {
        s = propose_once(s);
        ++proposals;
      }
    }
    return proposals;
  }

  Matching to_matching() const {
    Matching m(inst->students(), inst->universities());
    for (StudentId s = 0; s < inst->students(); ++s)
      if (held_rank[s] < inst->k()) m.assign(s, inst->prefs(s)[held_rank[s]]);
    return m;
  }
};

}  // namespace detail

/// Student-optimal stable matching over applied pairs. A student rejected by
/// all k listed schools stays unmatched.
inline Matching student_proposing_da(const MarketInstance& instance) {
  detail::StudentProposalState state(instance);
  std::deque<StudentId> queue;
  for (StudentId s = 0; s < instance.students(); ++s) queue.push_back(s);
  state.run(std::move(queue));
  return state.to_matching();
}

namespace detail {

// Worklist of unfilled universities; `Pool` decides which one offers next.
template <class Pool>
Matching school_proposing_da_impl(const MarketInstance& inst, Pool pool) {
  const auto m = inst.universities();
  const auto n = inst.students();
  std::vector<std::size_t> next_offer(m, 0);
  std::vector<std::size_t> held(m, 0);
  std::vector<bool> active(m, false);
  std::vector<UniversityId> holding(n, kUnmatched);
  std::vector<std::size_t> holding_rank(n, inst.k());

  auto activate = [&](UniversityId u) {
    if (!active[u] && held[u] < inst.capacity() && next_offer[u] < inst.applicants(u).size()) {
      active[u] = true;
      pool.push(u);
    }
  };
  for (UniversityId u = 0; u < m; ++u) activate(u);

  while (!pool.empty()) {
    const UniversityId u = pool.pop();
    active[u] = false;
    const StudentId s = inst.applicants(u)[next_offer[u]++];
    const auto r = *inst.rank_of(s, u);
    if (r < holding_rank[s]) {
      const auto prev = holding[s];
      holding[s] = u;
      holding_rank[s] = r;
      ++held[u];
      if (prev != kUnmatched) {
        --held[prev];
        activate(prev);
      }
    }
    activate(u);
  }

  Matching out(n, m);
  for (StudentId s = 0; s < n; ++s)
    if (holding[s] != kUnmatched) out.assign(s, holding[s]);
  return out;
}

struct RoundRobinPool {
  std::deque<UniversityId> q;
  void push(UniversityId u) { q.push_back(u); }
  UniversityId pop() {
    const auto u = q.front();
    q.pop_front();
    return u;
  }
  bool empty() const { return q.empty(); }
};

struct RandomPool {
  Rng* rng;
  std::vector<UniversityId> v;
  void push(UniversityId u) { v.push_back(u); }
  UniversityId pop() {
    std::uniform_int_distribution<std::size_t> pick{0, v.size() - 1};
    const auto i = pick(*rng);
    const auto u = v[i];
    v[i] = v.back();
    v.pop_back();
    return u;
  }
  bool empty() const { return v.empty(); }
};

}  // namespace detail

/// University-optimal stable matching over applied pairs. Unfilled
/// universities make one offer each in round-robin order.
inline Matching school_proposing_da(const MarketInstance& instance) {
  return detail::school_proposing_da_impl(instance, detail::RoundRobinPool{});
}

/// Same matching, but each step lets a uniformly random unfilled university
/// make the next offer.
inline Matching school_proposing_da(const MarketInstance& instance, Rng& order_rng) {
  return detail::school_proposing_da_impl(instance, detail::RandomPool{&order_rng, {}});
}

/// All applied pairs (s, u) where s prefers u to its partner and u either
/// has a free slot or ranks s above its worst partner. Empty iff stable.
inline std::vector<BlockingPair> find_blocking_pairs(const MarketInstance& instance,
                                                     const Matching& matching) {
  validate_matching(instance, matching);
  const auto m = instance.universities();
  std::vector<std::size_t> load(m, 0);
  std::vector<std::uint32_t> worst(m, 0);
  for (StudentId s = 0; s < instance.students(); ++s) {
    const auto u = matching.partner(s);
    if (u == kUnmatched) continue;
    ++load[u];
    worst[u] = std::max(worst[u], instance.priority_at(u, s));
  }
  std::vector<BlockingPair> out;
  for (StudentId s = 0; s < instance.students(); ++s) {
    const auto partner = matching.partner(s);
    const auto prefs = instance.prefs(s);
    for (std::size_t r = 0; r < prefs.size(); ++r) {
      const auto u = prefs[r];
      if (u == partner) break;
      if (load[u] < instance.capacity() || instance.priority(s, r) < worst[u])
        out.push_back({s, u});
    }
  }
  return out;
}

inline bool is_stable(const MarketInstance& instance, const Matching& matching) {
  return find_blocking_pairs(instance, matching).empty();
}

inline RankProfile rank_profile(const MarketInstance& instance, const Matching& matching) {
  validate_matching(instance, matching);
  RankProfile p;
  p.counts.assign(instance.k(), 0);
  for (StudentId s = 0; s < instance.students(); ++s) {
    if (!matching.is_matched(s)) {
      ++p.unmatched;
      continue;
    }
    ++p.counts[*instance.rank_of(s, matching.partner(s))];
  }
  return p;
}

/// CSV rows `student_id,university_id,rank` with NULL for unmatched students.
/// Ranks are 1-based.
inline void write_matching_csv(std::ostream& os, const MarketInstance& instance,
                               const Matching& matching) {
  validate_matching(instance, matching);
  os << "student_id,university_id,rank\n";
  for (StudentId s = 0; s < matching.students(); ++s) {
    os << s << ',';
    if (matching.is_matched(s)) {
      const auto u = matching.partner(s);
      os << u << ',' << (*instance.rank_of(s, u) + 1) << '\n';
    } else {
      os << "NULL,NULL\n";
    }
  }
}

}  // namespace sigmatch
