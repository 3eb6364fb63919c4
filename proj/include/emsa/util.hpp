#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>

namespace emsa {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double logsumexp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// Shortest decimal form that round-trips an IEEE754 double exactly.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace emsa
