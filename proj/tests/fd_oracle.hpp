#pragma once

// Test-only central-difference gradient oracle. Kept independent of the tape's
// backward pass: it only re-runs the forward function with perturbed values.

#include <cmath>
#include <functional>
#include <vector>

#include "tghoa/tape.hpp"

namespace tghoa::testing {

// d f / d p[i] for every scalar slot of p, via (f(p+eps) - f(p-eps)) / 2eps.
inline std::vector<double> finite_difference(Param& p,
                                             const std::function<double()>& f,
                                             double eps = 1e-5) {
  std::vector<double> g(static_cast<size_t>(p.value.numel()));
  for (int i = 0; i < p.value.numel(); ++i) {
    double orig = p.value[i];
    p.value[i] = orig + eps;
    double fp = f();
    p.value[i] = orig - eps;
    double fm = f();
    p.value[i] = orig;
    g[static_cast<size_t>(i)] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

// relative error <= rel, falling back to absolute <= abs_tol near zero
inline bool grad_close(double analytic, double fd, double rel = 1e-4,
                       double abs_tol = 1e-6) {
  double diff = std::fabs(analytic - fd);
  double mag = std::max(std::fabs(analytic), std::fabs(fd));
  if (mag < 1e-6) return diff <= abs_tol;
  return diff / mag <= rel;
}

}  // namespace tghoa::testing
