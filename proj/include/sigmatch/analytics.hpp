#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "sigmatch/market.hpp"
#include "sigmatch/matching.hpp"

namespace sigmatch {

/// Student base utility by 1-based rank (nonincreasing), a synergy bonus
/// paid to both sides for rank-1 matches, and a university base utility by
/// the 1-based position of the admit in the university's own ranking.
struct UtilityModel {
  std::function<double(std::size_t)> base = [](std::size_t) { return 1.0; };
  double bonus = 1.0;
  std::function<double(std::size_t)> university_base = [](std::size_t) { return 1.0; };

  void validate(std::size_t k) const {
    if (!(bonus >= 0.0)) throw ArgumentError("synergy bonus must be >= 0");
    for (std::size_t r = 2; r <= k; ++r)
      if (base(r) > base(r - 1)) throw ArgumentError("base utility must be nonincreasing in rank");
  }
};

struct UtilityTotals {
  double student_total = 0.0;
  double university_total = 0.0;
  std::size_t synergy_count = 0;
};

inline UtilityTotals compute_utilities(const MarketInstance& instance, const Matching& matching,
                                       const UtilityModel& model = {}) {
  validate_matching(instance, matching);
  model.validate(instance.k());
  UtilityTotals t;
  for (StudentId s = 0; s < instance.students(); ++s) {
    if (!matching.is_matched(s)) continue;
    const auto u = matching.partner(s);
    const auto rank = *instance.rank_of(s, u) + 1;
    const bool synergy = rank == 1;
    t.synergy_count += synergy;
    const double extra = synergy ? model.bonus : 0.0;
    t.student_total += model.base(rank) + extra;
    t.university_total += model.university_base(instance.priority_at(u, s) + 1) + extra;
  }
  return t;
}

/// Fraction of students whose partner (unmatched counts as a partner value)
/// differs between the two matchings.
inline double compare_matchings(const Matching& a, const Matching& b) {
  if (a.students() != b.students() || a.universities() != b.universities())
    throw ArgumentError("matchings belong to different instances");
  if (a.students() == 0) return 0.0;
  std::size_t diff = 0;
  for (StudentId s = 0; s < a.students(); ++s) diff += a.partner(s) != b.partner(s);
  return static_cast<double>(diff) / static_cast<double>(a.students());
}

/// One replication of one market.
struct ExperimentRecord {
  std::size_t k = 0;
  double delta = 0.0;
  std::string signal = "iid";
  std::uint64_t seed = 0;
  std::size_t n = 0, m = 0, l = 0;
  std::vector<std::size_t> rank_counts;
  std::size_t matched = 0, unmatched = 0, synergy = 0;
  double u_student = 0.0, u_university = 0.0;
};

inline ExperimentRecord make_record(const MarketInstance& instance, const Matching& matching,
                                    const UtilityModel& model, std::uint64_t seed) {
  const auto& c = instance.config();
  const auto profile = rank_profile(instance, matching);
  const auto u = compute_utilities(instance, matching, model);
  ExperimentRecord r;
  r.k = c.k;
  r.delta = signal_delta(c.signal);
  r.signal = signal_tag(c.signal);
  r.seed = seed;
  r.n = c.n;
  r.m = c.universities();
  r.l = c.capacity;
  r.rank_counts = profile.counts;
  r.matched = profile.matched();
  r.unmatched = profile.unmatched;
  r.synergy = u.synergy_count;
  r.u_student = u.student_total;
  r.u_university = u.university_total;
  return r;
}

/// Six significant digits.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string format_delta(double delta, const std::string& tag) {
  return std::isnan(delta) ? tag : format_number(delta);
}

inline void write_record_header(std::ostream& os, std::size_t k) {
  os << "k,delta,seed,n,m,l,matched";
  for (std::size_t r = 1; r <= k; ++r) os << ",rank" << r;
  os << ",unmatched,synergy,u_student,u_university\n";
}

inline void write_record(std::ostream& os, const ExperimentRecord& r) {
  os << r.k << ',' << format_delta(r.delta, r.signal) << ',' << r.seed << ',' << r.n << ','
     << r.m << ',' << r.l << ',' << r.matched;
  for (auto c : r.rank_counts) os << ',' << c;
  os << ',' << r.unmatched << ',' << r.synergy << ',' << format_number(r.u_student) << ','
     << format_number(r.u_university) << '\n';
}

/// Running mean and standard error (Welford).
class RunningStat {
 public:
  void add(double x) {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double std_error() const {
    return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace sigmatch
