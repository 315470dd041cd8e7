#pragma once

#include <limits>
#include <vector>

#include "moire/core.hpp"

namespace moire {

/// One row of a convergence study: finite-N value against the reference.
struct ConvergenceRecord {
  long N = 0;
  Complex value{0.0, 0.0};
  Complex reference{0.0, 0.0};
  double abs_error = 0.0;  // |value - reference|
  double bound = 0.0;      // theoretical bound, 0 when absent

  static ConvergenceRecord make(long N, Complex value, Complex reference, double bound = 0.0) {
    ConvergenceRecord r;
    r.N = N;
    r.value = value;
    r.reference = reference;
    r.abs_error = std::abs(value - reference);
    r.bound = bound;
    return r;
  }
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
  bool degenerate = false;  // errors underflowed; slope is the -inf sentinel
};

/// Least-squares fit of log(abs_error) against log(2N+1).
inline RateFit fit_rate(const std::vector<ConvergenceRecord>& records) {
  if (records.size() < 3)
    throw ValidationError("fit_rate: need at least 3 convergence records");
  RateFit fit;
  for (const auto& r : records) {
    if (!(r.abs_error > 1e-300)) {
      fit.degenerate = true;
      fit.slope = -std::numeric_limits<double>::infinity();
      return fit;
    }
  }
  const double n = static_cast<double>(records.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : records) {
    const double x = std::log(static_cast<double>(2 * r.N + 1));
    const double y = std::log(r.abs_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-14)
    throw ValidationError("fit_rate: degenerate abscissae (need distinct N)");
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  for (const auto& r : records) {
    const double x = std::log(static_cast<double>(2 * r.N + 1));
    const double y = std::log(r.abs_error);
    fit.max_residual = std::max(fit.max_residual,
                                std::abs(y - fit.slope * x - fit.intercept));
  }
  return fit;
}

}  // namespace moire
