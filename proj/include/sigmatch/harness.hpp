#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "sigmatch/analytics.hpp"
#include "sigmatch/fixed_point.hpp"
#include "sigmatch/market.hpp"
#include "sigmatch/matching.hpp"
#include "sigmatch/stable_partners.hpp"

namespace sigmatch {

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Callers write
/// into slot i of a preallocated buffer, so results never depend on
/// scheduling. threads == 0 means hardware concurrency.
inline void parallel_for(std::size_t count, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

enum class Mechanism { SchoolProposing, StudentProposing };

/// Replication r of a root seed uses market seed child_seed(root, r).
inline MarketInstance replicate_market(const MarketConfig& config, std::size_t r) {
  Rng rng{child_seed(config.seed, r)};
  return sample_market(config, rng);
}

inline Matching run_mechanism(const MarketInstance& inst, Mechanism mech) {
  return mech == Mechanism::SchoolProposing ? school_proposing_da(inst) : student_proposing_da(inst);
}

/// One record per replication, in replication order.
inline std::vector<ExperimentRecord> simulate_records(const MarketConfig& config, std::size_t reps,
                                                      const UtilityModel& model = {},
                                                      Mechanism mech = Mechanism::SchoolProposing,
                                                      std::size_t threads = 0) {
  config.validate();
  if (reps < 1) throw UsageError("replications must be >= 1");
  std::vector<ExperimentRecord> out(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    const auto inst = replicate_market(config, r);
    out[r] = make_record(inst, run_mechanism(inst, mech), model, child_seed(config.seed, r));
  });
  return out;
}

inline void cmd_simulate(const MarketConfig& config, std::size_t reps, std::ostream& out,
                         const UtilityModel& model = {}, Mechanism mech = Mechanism::SchoolProposing,
                         std::size_t threads = 0) {
  const auto records = simulate_records(config, reps, model, mech, threads);
  write_record_header(out, config.k);
  for (const auto& r : records) write_record(out, r);
}

/// Grid of (k, signal) cells over a base configuration.
struct SweepSpec {
  MarketConfig base;
  std::vector<std::size_t> ks;
  std::vector<SignalSpec> signals;
  std::size_t reps = 1;
  UtilityModel model;
  Mechanism mechanism = Mechanism::SchoolProposing;

  void validate() const {
    if (ks.empty() || signals.empty()) throw UsageError("sweep needs nonempty k and signal lists");
    if (reps < 1) throw UsageError("replications must be >= 1");
    for (auto k : ks) {
      auto c = base;
      c.k = k;
      c.validate();
    }
  }
};

struct SweepCell {
  std::size_t k = 0;
  double delta = 0.0;
  std::string signal;
  std::size_t n = 0, m = 0, l = 0;
  RunningStat matched, rank1, unmatched, synergy, u_student, u_university;
  std::vector<ExperimentRecord> records;
};

/// Cells are ordered signal-major, then by k. Replication r of every cell
/// uses the same market seed child_seed(root, r).
inline std::vector<SweepCell> run_sweep(const SweepSpec& spec, std::size_t threads = 0) {
  spec.validate();
  std::vector<SweepCell> cells;
  for (const auto& sig : spec.signals)
    for (auto k : spec.ks) {
      auto config = spec.base;
      config.k = k;
      config.signal = sig;
      SweepCell cell;
      cell.k = k;
      cell.delta = signal_delta(sig);
      cell.signal = signal_tag(sig);
      cell.n = config.n;
      cell.m = config.universities();
      cell.l = config.capacity;
      cell.records = simulate_records(config, spec.reps, spec.model, spec.mechanism, threads);
      for (const auto& r : cell.records) {
        cell.matched.add(static_cast<double>(r.matched));
        cell.rank1.add(static_cast<double>(r.rank_counts[0]));
        cell.unmatched.add(static_cast<double>(r.unmatched));
        cell.synergy.add(static_cast<double>(r.synergy));
        cell.u_student.add(r.u_student);
        cell.u_university.add(r.u_university);
      }
      cells.push_back(std::move(cell));
    }
  return cells;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  os << "k,delta,reps,n,m,l,matched_mean,matched_se,rank1_mean,rank1_se,unmatched_mean,"
        "unmatched_se,synergy_mean,synergy_se,u_student_mean,u_student_se,u_university_mean,"
        "u_university_se\n";
  for (const auto& c : cells) {
    os << c.k << ',' << format_delta(c.delta, c.signal) << ',' << c.matched.count() << ',' << c.n
       << ',' << c.m << ',' << c.l;
    for (const auto* s : {&c.matched, &c.rank1, &c.unmatched, &c.synergy, &c.u_student, &c.u_university})
      os << ',' << format_number(s->mean()) << ',' << format_number(s->std_error());
    os << '\n';
  }
}

/// Per-replication rows of every cell; rank columns run to the largest k in
/// the grid and are zero past a cell's own k.
inline void write_sweep_records_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  std::size_t kmax = 0;
  for (const auto& c : cells) kmax = std::max(kmax, c.k);
  write_record_header(os, kmax);
  for (const auto& c : cells)
    for (auto r : c.records) {
      r.rank_counts.resize(kmax, 0);
      write_record(os, r);
    }
}

inline void cmd_sweep(const SweepSpec& spec, std::ostream& out, std::ostream* records = nullptr,
                      std::size_t threads = 0) {
  const auto cells = run_sweep(spec, threads);
  write_sweep_csv(out, cells);
  if (records) write_sweep_records_csv(*records, cells);
}

enum class SolveKind { Iid, General };

inline SolverResult cmd_solve(const MarketConfig& config, SolveKind kind,
                              const GeneralSolveOptions& opt = {}) {
  config.validate();
  if (kind == SolveKind::Iid) {
    if (!is_iid(config.signal))
      throw UsageError("method 'iid' requires iid signals (or delta = 0)");
    return solve_iid(config);
  }
  Rng rng{config.seed};
  return solve_general(config, opt, rng);
}

inline constexpr std::size_t kStablePartnerMaxStudents = 2000;

struct StablePartnerSummary {
  std::vector<double> yes_fraction;  // per replication
  RunningStat stat;
};

/// Writes `rep,university_id,verdict,witness` rows and returns the YES
/// fraction of each replication.
inline StablePartnerSummary cmd_stable_partners(const MarketConfig& config, std::size_t reps,
                                                std::ostream* out, std::size_t threads = 0) {
  config.validate();
  if (config.n > kStablePartnerMaxStudents)
    throw UsageError("stable-partners is limited to n <= " + std::to_string(kStablePartnerMaxStudents));
  if (reps < 1) throw UsageError("replications must be >= 1");
  std::vector<std::vector<StablePartnerReport>> reports(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    reports[r] = stable_partner_reports(replicate_market(config, r));
  });
  StablePartnerSummary summary;
  if (out) *out << "rep,university_id,verdict,witness\n";
  for (std::size_t r = 0; r < reps; ++r) {
    std::size_t yes = 0;
    for (const auto& rep : reports[r]) {
      yes += rep.verdict;
      if (out) {
        *out << r << ',';
        write_stable_partner_csv(*out, {rep}, false);
      }
    }
    const double frac = static_cast<double>(yes) / static_cast<double>(reports[r].size());
    summary.yes_fraction.push_back(frac);
    summary.stat.add(frac);
  }
  return summary;
}

/// Fraction of students matched differently by the two mechanisms, per
/// replication.
inline std::vector<double> compare_mechanisms(const MarketConfig& config, std::size_t reps,
                                              std::size_t threads = 0) {
  config.validate();
  if (reps < 1) throw UsageError("replications must be >= 1");
  std::vector<double> out(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    const auto inst = replicate_market(config, r);
    out[r] = compare_matchings(student_proposing_da(inst), school_proposing_da(inst));
  });
  return out;
}

inline void cmd_compare(const MarketConfig& config, std::size_t reps, std::ostream& out,
                        std::size_t threads = 0) {
  const auto fractions = compare_mechanisms(config, reps, threads);
  out << "rep,seed,fraction_different\n";
  for (std::size_t r = 0; r < reps; ++r)
    out << r << ',' << child_seed(config.seed, r) << ',' << format_number(fractions[r]) << '\n';
}

}  // namespace sigmatch
