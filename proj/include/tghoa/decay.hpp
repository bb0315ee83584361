#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tghoa {

// Time-decay functions mapping a nonnegative visit gap to a weight in [0,1]:
//   g1 = 1, g2 = 1/ln(e+delta), g3 = e/(delta+e), g4 = max(0, 1 - delta/e).
enum class DecayKind { G1, G2, G3, G4 };

inline double decay(double delta, DecayKind kind) {
  if (delta < 0.0) throw std::invalid_argument("decay: negative time delta");
  constexpr double e = std::numbers::e;
  switch (kind) {
    case DecayKind::G1:
      return 1.0;
    case DecayKind::G2:
      return 1.0 / std::log(e + delta);
    case DecayKind::G3:
      return e / (delta + e);
    case DecayKind::G4:
      return std::max(0.0, 1.0 - delta / e);
  }
  throw std::logic_error("decay: bad kind");
}

inline DecayKind decay_from_name(const std::string& name) {
  if (name == "g1") return DecayKind::G1;
  if (name == "g2") return DecayKind::G2;
  if (name == "g3") return DecayKind::G3;
  if (name == "g4") return DecayKind::G4;
  throw std::invalid_argument("unknown decay function: " + name);
}

inline const char* decay_name(DecayKind k) {
  switch (k) {
    case DecayKind::G1: return "g1";
    case DecayKind::G2: return "g2";
    case DecayKind::G3: return "g3";
    case DecayKind::G4: return "g4";
  }
  return "?";
}

}  // namespace tghoa
