#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sigmatch/core.hpp"
#include "sigmatch/signal.hpp"

namespace sigmatch {

struct MarketConfig {
  std::size_t n = 1;       // students
  double m_ratio = 1.0;    // universities per student; m_ratio * n must be integral
  std::size_t capacity = 1;
  std::size_t k = 1;       // applications per student
  SignalSpec signal = IidSignal{};
  std::uint64_t seed = 0;

  std::size_t universities() const {
    return static_cast<std::size_t>(std::llround(m_ratio * static_cast<double>(n)));
  }

  void validate() const {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (!(m_ratio > 0.0)) throw ConfigError("m-ratio must be positive");
    const double m = m_ratio * static_cast<double>(n);
    if (std::abs(m - std::round(m)) > 1e-9 * std::max(1.0, m) || std::round(m) < 1.0)
      throw ConfigError("m-ratio * n must be a positive integer (got " + std::to_string(m) + ")");
    if (capacity < 1) throw ConfigError("capacity must be >= 1");
    if (k < 1 || k > universities())
      throw ConfigError("k must satisfy 1 <= k <= m (k=" + std::to_string(k) +
                        ", m=" + std::to_string(universities()) + ")");
    if (universities() > kUnmatched - 1 || n > kNoStudent - 1)
      throw ConfigError("market too large for 32-bit ids");
    sigmatch::validate(signal);
  }
};

/// One realized market: truncated preference lists, one signal per
/// application, and each university's strict ranking of its applicants.
///
/// University rankings sort applicants by decreasing signal; equal signals
/// are ordered by a per-university random permutation fixed at construction.
class MarketInstance {
 public:
  /// Builds an instance from explicit lists. `signals[s][r]` is the signal
  /// university `prefs[s][r]` observes for student s.
  static MarketInstance from_lists(MarketConfig config,
                                   std::vector<std::vector<UniversityId>> prefs,
                                   std::vector<std::vector<double>> signals,
                                   std::uint64_t tiebreak_seed = 0) {
    config.validate();
    if (prefs.size() != config.n || signals.size() != config.n)
      throw ConfigError("preference/signal tables must have one row per student");
    const auto m = config.universities();
    for (std::size_t s = 0; s < config.n; ++s) {
      if (prefs[s].size() != config.k || signals[s].size() != config.k)
        throw ConfigError("student " + std::to_string(s) + " must list exactly k universities");
      for (std::size_t r = 0; r < config.k; ++r) {
        if (prefs[s][r] >= m) throw ConfigError("university id out of range");
        for (std::size_t q = 0; q < r; ++q)
          if (prefs[s][q] == prefs[s][r])
            throw ConfigError("student " + std::to_string(s) + " lists a university twice");
      }
    }
    MarketInstance inst;
    inst.config_ = std::move(config);
    inst.prefs_ = std::move(prefs);
    inst.signals_ = std::move(signals);
    inst.build_rankings(tiebreak_seed);
    return inst;
  }

  const MarketConfig& config() const { return config_; }
  std::size_t students() const { return config_.n; }
  std::size_t universities() const { return applicants_.size(); }
  std::size_t capacity() const { return config_.capacity; }
  std::size_t k() const { return config_.k; }

  std::span<const UniversityId> prefs(StudentId s) const { return prefs_[s]; }
  std::span<const double> signals(StudentId s) const { return signals_[s]; }
  /// Position of s in the ranking of the university at s's rank r (0 = best).
  std::uint32_t priority(StudentId s, std::size_t r) const { return priority_[s][r]; }

  /// Applicants of u, best first.
  std::span<const StudentId> applicants(UniversityId u) const { return applicants_[u]; }
  std::span<const StudentId> special_of(UniversityId u) const { return special_of_[u]; }

  /// 0-based rank of u on s's list, or nullopt if s did not apply to u.
  std::optional<std::size_t> rank_of(StudentId s, UniversityId u) const {
    const auto& p = prefs_[s];
    for (std::size_t r = 0; r < p.size(); ++r)
      if (p[r] == u) return r;
    return std::nullopt;
  }

  std::optional<double> signal(UniversityId u, StudentId s) const {
    if (auto r = rank_of(s, u)) return signals_[s][*r];
    return std::nullopt;
  }

  /// Priority of applicant s at u; throws if s did not apply to u.
  std::uint32_t priority_at(UniversityId u, StudentId s) const {
    auto r = rank_of(s, u);
    if (!r) throw ArgumentError("student did not apply to university");
    return priority_[s][*r];
  }

  /// True when u ranks applicant a above applicant b.
  bool university_prefers(UniversityId u, StudentId a, StudentId b) const {
    return priority_at(u, a) < priority_at(u, b);
  }

  std::uint64_t tiebreak_seed() const { return tiebreak_seed_; }

  bool operator==(const MarketInstance& o) const {
    return prefs_ == o.prefs_ && signals_ == o.signals_ && applicants_ == o.applicants_;
  }

 private:
  void build_rankings(std::uint64_t tiebreak_seed) {
    tiebreak_seed_ = tiebreak_seed;
    const auto m = config_.universities();
    applicants_.assign(m, {});
    special_of_.assign(m, {});
    for (StudentId s = 0; s < config_.n; ++s) {
      special_of_[prefs_[s][0]].push_back(s);
      for (auto u : prefs_[s]) applicants_[u].push_back(s);
    }
    priority_.assign(config_.n, std::vector<std::uint32_t>(config_.k, 0));
    for (UniversityId u = 0; u < m; ++u) {
      auto& list = applicants_[u];
      std::vector<std::pair<double, std::uint64_t>> keys;
      keys.reserve(list.size());
      for (auto s : list)
        keys.emplace_back(*signal(u, s), child_seed(tiebreak_seed, u, s));
      std::vector<std::size_t> order(list.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (keys[a].first != keys[b].first) return keys[a].first > keys[b].first;
        return keys[a].second < keys[b].second;
      });
      std::vector<StudentId> sorted;
      sorted.reserve(list.size());
      for (auto i : order) sorted.push_back(list[i]);
      list = std::move(sorted);
      for (std::uint32_t pos = 0; pos < list.size(); ++pos)
        priority_[list[pos]][*rank_of(list[pos], u)] = pos;
    }
  }

  MarketConfig config_;
  std::vector<std::vector<UniversityId>> prefs_;
  std::vector<std::vector<double>> signals_;
  std::vector<std::vector<std::uint32_t>> priority_;
  std::vector<std::vector<StudentId>> applicants_;
  std::vector<std::vector<StudentId>> special_of_;
  std::uint64_t tiebreak_seed_ = 0;
};

namespace detail {

// First k entries of a uniformly random permutation of [0, m), by sparse
// Fisher-Yates. The first j picks do not depend on k.
inline std::vector<UniversityId> random_prefix(std::size_t m, std::size_t k, Rng& rng) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> swapped;  // position -> value
  auto value_at = [&](std::uint64_t pos) {
    for (const auto& [p, v] : swapped)
      if (p == pos) return v;
    return pos;
  };
  auto set_at = [&](std::uint64_t pos, std::uint64_t v) {
    for (auto& [p, old] : swapped)
      if (p == pos) {
        old = v;
        return;
      }
    swapped.emplace_back(pos, v);
  };
  std::vector<UniversityId> out;
  out.reserve(k);
  for (std::uint64_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::uint64_t> pick{i, m - 1};
    const auto j = pick(rng);
    const auto vj = value_at(j);
    const auto vi = value_at(i);
    set_at(j, vi);
    set_at(i, vj);
    out.push_back(static_cast<UniversityId>(vj));
  }
  return out;
}

}  // namespace detail

/// Samples a market: each student lists the top k of an independent uniform
/// permutation of the universities; each application carries one signal,
/// drawn from D for the rank-1 application and from D' otherwise.
///
/// Student s uses two private streams (list and signals) split from a base
/// seed taken from `rng`, so a student's rank-r entry and signal do not
/// depend on k or on other students.
inline MarketInstance sample_market(const MarketConfig& config, Rng& rng) {
  config.validate();
  const std::uint64_t base = rng();
  const auto m = config.universities();
  std::vector<std::vector<UniversityId>> prefs(config.n);
  std::vector<std::vector<double>> signals(config.n);
  for (std::size_t s = 0; s < config.n; ++s) {
    Rng list_rng{child_seed(base, 2 * s)};
    Rng signal_rng{child_seed(base, 2 * s + 1)};
    prefs[s] = detail::random_prefix(m, config.k, list_rng);
    signals[s].reserve(config.k);
    for (std::size_t r = 0; r < config.k; ++r)
      signals[s].push_back(draw_signal(config.signal, r == 0, signal_rng));
  }
  return MarketInstance::from_lists(config, std::move(prefs), std::move(signals),
                                    child_seed(base, ~std::uint64_t{0}));
}

/// Same as above with the stream seeded from `config.seed`.
inline MarketInstance sample_market(const MarketConfig& config) {
  Rng rng{config.seed};
  return sample_market(config, rng);
}

}  // namespace sigmatch
