#pragma once

#include <functional>
#include <string>
#include <variant>

#include "sigmatch/core.hpp"

namespace sigmatch {

/// Special and non-special applicants are indistinguishable (D = D').
struct IidSignal {};

/// D = Normal(delta, 1) for special applicants, D' = Normal(0, 1) otherwise.
struct GaussianShift {
  double delta = 0.0;
};

/// User-supplied samplers. Both must be deterministic functions of the
/// generator state.
struct CustomSignal {
  std::function<double(Rng&)> special;
  std::function<double(Rng&)> other;
  std::string label = "custom";
};

using SignalSpec = std::variant<IidSignal, GaussianShift, CustomSignal>;

inline bool is_iid(const SignalSpec& spec) {
  if (std::holds_alternative<IidSignal>(spec)) return true;
  if (const auto* g = std::get_if<GaussianShift>(&spec)) return g->delta == 0.0;
  return false;
}

/// Mean shift of special applicants, or 0 for IID. Custom specs report NaN.
inline double signal_delta(const SignalSpec& spec) {
  if (const auto* g = std::get_if<GaussianShift>(&spec)) return g->delta;
  if (std::holds_alternative<IidSignal>(spec)) return 0.0;
  return std::numeric_limits<double>::quiet_NaN();
}

inline std::string signal_tag(const SignalSpec& spec) {
  if (std::holds_alternative<IidSignal>(spec)) return "iid";
  if (std::holds_alternative<GaussianShift>(spec)) return "gaussian";
  return std::get<CustomSignal>(spec).label;
}

inline void validate(const SignalSpec& spec) {
  if (const auto* g = std::get_if<GaussianShift>(&spec)) {
    if (!(g->delta >= 0.0)) throw ConfigError("gaussian signal shift must be >= 0");
  }
  if (const auto* c = std::get_if<CustomSignal>(&spec)) {
    if (!c->special || !c->other) throw ConfigError("custom signal needs both samplers");
  }
}

// Gaussian variants draw a standard normal and shift it, so for a fixed
// stream the draws at different delta are coupled.
inline double draw_signal(const SignalSpec& spec, bool is_special, Rng& rng) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CustomSignal>) {
          return is_special ? s.special(rng) : s.other(rng);
        } else {
          std::normal_distribution<double> z{0.0, 1.0};
          double v = z(rng);
          if constexpr (std::is_same_v<T, GaussianShift>) {
            if (is_special) v += s.delta;
          }
          return v;
        }
      },
      spec);
}

}  // namespace sigmatch
