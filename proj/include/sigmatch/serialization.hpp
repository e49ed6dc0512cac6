#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "sigmatch/fixed_point.hpp"
#include "sigmatch/market.hpp"

namespace sigmatch {

using nlohmann::json;

inline json to_json(const SignalSpec& spec) {
  json j{{"kind", signal_tag(spec)}};
  if (const auto* g = std::get_if<GaussianShift>(&spec)) j["delta"] = g->delta;
  return j;
}

inline SignalSpec signal_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "iid") return IidSignal{};
  if (kind == "gaussian") return GaussianShift{j.at("delta").get<double>()};
  throw ConfigError("signal kind '" + kind + "' cannot be restored from JSON");
}

inline json to_json(const MarketConfig& c) {
  return json{{"n", c.n},       {"m_ratio", c.m_ratio}, {"capacity", c.capacity},
              {"k", c.k},       {"signal", to_json(c.signal)}, {"seed", c.seed}};
}

inline MarketConfig config_from_json(const json& j) {
  MarketConfig c;
  c.n = j.at("n").get<std::size_t>();
  c.m_ratio = j.at("m_ratio").get<double>();
  c.capacity = j.at("capacity").get<std::size_t>();
  c.k = j.at("k").get<std::size_t>();
  c.signal = signal_from_json(j.at("signal"));
  c.seed = j.value("seed", std::uint64_t{0});
  c.validate();
  return c;
}

/// {config, tiebreak_seed, preferences: [[u...]...], signals: [[u, s, value]...]}
inline json to_json(const MarketInstance& inst) {
  json prefs = json::array();
  json signals = json::array();
  for (StudentId s = 0; s < inst.students(); ++s) {
    prefs.push_back(std::vector<UniversityId>(inst.prefs(s).begin(), inst.prefs(s).end()));
    for (std::size_t r = 0; r < inst.k(); ++r)
      signals.push_back(json::array({inst.prefs(s)[r], s, inst.signals(s)[r]}));
  }
  return json{{"config", to_json(inst.config())},
              {"tiebreak_seed", inst.tiebreak_seed()},
              {"preferences", std::move(prefs)},
              {"signals", std::move(signals)}};
}

inline MarketInstance market_from_json(const json& j) {
  auto config = config_from_json(j.at("config"));
  auto prefs = j.at("preferences").get<std::vector<std::vector<UniversityId>>>();
  if (prefs.size() != config.n) throw ConfigError("preferences must have one row per student");
  std::vector<std::vector<double>> signals(config.n);
  std::vector<std::vector<bool>> seen(config.n);
  for (std::size_t s = 0; s < config.n; ++s) {
    signals[s].assign(prefs[s].size(), 0.0);
    seen[s].assign(prefs[s].size(), false);
  }
  for (const auto& t : j.at("signals")) {
    const auto u = t.at(0).get<UniversityId>();
    const auto s = t.at(1).get<StudentId>();
    if (s >= config.n) throw ConfigError("signal for unknown student");
    const auto& p = prefs[s];
    const auto it = std::find(p.begin(), p.end(), u);
    if (it == p.end()) throw ConfigError("signal for a pair without an application");
    const auto r = static_cast<std::size_t>(it - p.begin());
    signals[s][r] = t.at(2).get<double>();
    seen[s][r] = true;
  }
  for (const auto& row : seen)
    for (bool b : row)
      if (!b) throw ConfigError("missing signal for an application");
  return MarketInstance::from_lists(std::move(config), std::move(prefs), std::move(signals),
                                    j.value("tiebreak_seed", std::uint64_t{0}));
}

inline json to_json(const SolverResult& r) {
  return json{{"y", r.y.y},
              {"residual", r.residual},
              {"max_residual", r.max_residual()},
              {"f", r.f},
              {"f_std_error", r.f_std_error},
              {"rank_fractions", r.rank_fractions()},
              {"unmatched_fraction", r.unmatched_fraction()},
              {"x_total", r.x_total()},
              {"method", to_string(r.method)},
              {"iterations", r.iterations}};
}

}  // namespace sigmatch
