#pragma once

#include <algorithm>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "sigmatch/matching.hpp"

namespace sigmatch {

/// Whether university `university` has more than `capacity` stable partners.
/// When it does, `witness` is the student whose proposal proved it.
struct StablePartnerReport {
  UniversityId university = 0;
  bool verdict = false;
  std::optional<StudentId> witness;
};

namespace detail {

inline StudentProposalState state_from_matching(const MarketInstance& instance,
                                                const Matching& student_optimal) {
  StudentProposalState state(instance);
  for (StudentId s = 0; s < instance.students(); ++s) {
    if (student_optimal.is_matched(s))
      state.hold(s, *instance.rank_of(s, student_optimal.partner(s)));
    else
      state.next[s] = instance.k();
  }
  return state;
}

}  // namespace detail

/// Decides |S(u)| > capacity by rejection-chain search from the
/// student-optimal matching M.
///
/// If u has a free slot in M the answer is NO. Otherwise u's least preferred
/// partner w is detached and proposes down its list; whenever a proposal
/// displaces someone, the displaced student carries the chain on. A chain
/// ends with NO when its student is absorbed by a university with a free
/// slot or runs out of list, and with YES (witness = proposer) when a chain
/// student proposes to u and u ranks it above w.
///
/// With capacity 1 this is the subset search over M(u) verbatim. For larger
/// capacities, detaching other subsets of M(u) or comparing against u's best
/// partner both disagree with exhaustive enumeration, so only w is detached.
inline StablePartnerReport has_extra_stable_partners(const MarketInstance& instance,
                                                     const Matching& student_optimal,
                                                     UniversityId u) {
  if (u >= instance.universities()) throw ArgumentError("university id out of range");
  validate_matching(instance, student_optimal);
  StablePartnerReport report;
  report.university = u;

  StudentId worst_partner = kNoStudent;
  std::uint32_t worst_priority = 0;
  std::size_t held = 0;
  for (StudentId s = 0; s < instance.students(); ++s) {
    if (student_optimal.partner(s) != u) continue;
    ++held;
    const auto p = instance.priority_at(u, s);
    if (worst_partner == kNoStudent || p > worst_priority) {
      worst_partner = s;
      worst_priority = p;
    }
  }
  if (held < instance.capacity()) return report;

  auto state = detail::state_from_matching(instance, student_optimal);
  const auto k = instance.k();
  state.release(worst_partner);
  StudentId s = worst_partner;
  while (s != kNoStudent && state.next[s] < k) {
    const auto r = state.next[s]++;
    const auto target = instance.prefs(s)[r];
    const auto prio = instance.priority(s, r);
    if (target == u) {
      if (prio < worst_priority) {
        report.verdict = true;
        report.witness = s;
        return report;
      }
      continue;
    }
    auto& h = state.holders[target];
    if (h.size() < instance.capacity()) {
      h.emplace_back(prio, s);
      return report;
    }
    auto worst = std::max_element(h.begin(), h.end());
    if (prio < worst->first) {
      const auto out = worst->second;
      *worst = {prio, s};
      state.held_rank[s] = r;
      state.held_rank[out] = k;
      s = out;
    }
  }
  return report;
}

inline StablePartnerReport has_extra_stable_partners(const MarketInstance& instance,
                                                     UniversityId u) {
  if (u >= instance.universities()) throw ArgumentError("university id out of range");
  return has_extra_stable_partners(instance, student_proposing_da(instance), u);
}

/// Reports for every university of one instance.
inline std::vector<StablePartnerReport> stable_partner_reports(const MarketInstance& instance) {
  const auto so = student_proposing_da(instance);
  std::vector<StablePartnerReport> out;
  out.reserve(instance.universities());
  for (UniversityId u = 0; u < instance.universities(); ++u)
    out.push_back(has_extra_stable_partners(instance, so, u));
  return out;
}

inline void write_stable_partner_csv(std::ostream& os,
                                     const std::vector<StablePartnerReport>& reports,
                                     bool header = true) {
  if (header) os << "university_id,verdict,witness\n";
  for (const auto& r : reports) {
    os << r.university << ',' << (r.verdict ? "YES" : "NO") << ',';
    if (r.witness)
      os << *r.witness;
    else
      os << "NULL";
    os << '\n';
  }
}

inline constexpr std::size_t kEnumerationLimit = 10;

/// Every capacity-respecting matching over applied pairs with no blocking
/// pair. Exhaustive; limited to 10 students and 10 universities.
inline std::vector<Matching> enumerate_stable_matchings(const MarketInstance& instance) {
  if (instance.students() > kEnumerationLimit || instance.universities() > kEnumerationLimit)
    throw SizeError("enumeration is limited to 10 students and 10 universities");
  const auto n = instance.students();
  std::vector<Matching> out;
  Matching current(n, instance.universities());
  std::vector<std::size_t> load(instance.universities(), 0);

  auto recurse = [&](auto&& self, StudentId s) -> void {
    if (s == n) {
      if (find_blocking_pairs(instance, current).empty()) out.push_back(current);
      return;
    }
    current.unassign(s);
    self(self, s + 1);
    for (auto u : instance.prefs(s)) {
      if (load[u] >= instance.capacity()) continue;
      ++load[u];
      current.assign(s, u);
      self(self, s + 1);
      current.unassign(s);
      --load[u];
    }
  };
  recurse(recurse, 0);
  return out;
}

/// S(u) for every university, from the full enumeration.
inline std::vector<std::set<StudentId>> enumerate_stable_partners(const MarketInstance& instance) {
  std::vector<std::set<StudentId>> out(instance.universities());
  for (const auto& m : enumerate_stable_matchings(instance))
    for (StudentId s = 0; s < instance.students(); ++s)
      if (m.is_matched(s)) out[m.partner(s)].insert(s);
  return out;
}

}  // namespace sigmatch
