#pragma once
// Minimal dense-vector helpers. Everything trains in double precision; the
// parameter counts are small enough that plain loops beat any BLAS setup cost.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "srkbqa/types.hpp"

namespace srkbqa {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw Error("vector width mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void add_scaled(Vec& dst, const Vec& src, double c) {
  if (dst.size() != src.size()) throw Error("vector width mismatch in add_scaled");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += c * src[i];
}

inline double l2_norm_squared(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// Numerically stable logistic function, clamped to the open interval (0,1)
// so downstream products of step probabilities never collapse to exact 0/1.
inline double sigmoid(double x) {
  double p;
  if (x >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    p = e / (1.0 + e);
  }
  const double lo = std::numeric_limits<double>::min();
  const double hi = 1.0 - 1e-16;
  return p < lo ? lo : (p > hi ? hi : p);
}

// -log(sigmoid(x)) without overflow for large |x|.
inline double softplus_neg(double x) {
  if (x >= 0.0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

}  // namespace srkbqa
