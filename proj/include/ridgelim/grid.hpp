#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace ridgelim {

inline std::vector<double> linspace(double start, double stop, int steps) {
  std::vector<double> out(static_cast<std::size_t>(steps));
  if (steps == 1) {
    out[0] = start;
    return out;
  }
  const double h = (stop - start) / (steps - 1);
  for (int i = 0; i < steps; ++i) out[static_cast<std::size_t>(i)] = start + h * i;
  out.back() = stop;
  return out;
}

// Log-spaced grid between 10^e_start and 10^e_stop (inclusive).
inline std::vector<double> logspace(double e_start, double e_stop, int steps) {
  auto exps = linspace(e_start, e_stop, steps);
  for (double& e : exps) e = std::pow(10.0, e);
  return exps;
}

// Full-precision, locale-independent formatting for CSV output.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace ridgelim
