#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "robin_gap/error.hpp"

namespace robin_gap {

/// Ordinary least-squares line y = slope * x + intercept.
struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points_used = 0;
};

inline FitResult fit_line(std::span<const double> x, std::span<const double> y,
                          std::size_t min_points = 3) {
  if (x.size() != y.size()) throw DomainError("fit_line: x and y differ in length");
  const std::size_t n = x.size();
  if (n < min_points)
    throw FitError("fit_line: " + std::to_string(n) + " points, need at least " +
                   std::to_string(min_points));
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 1e-300)) throw FitError("fit_line: abscissa has zero variance");
  FitResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  r.points_used = n;
  return r;
}

}  // namespace robin_gap
