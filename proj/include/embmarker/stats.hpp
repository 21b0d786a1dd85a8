#pragma once

// Two-sample Kolmogorov-Smirnov test.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "embmarker/error.hpp"

namespace embmarker {

struct KsResult {
  double statistic = 0.0;  // D
  double p_value = 1.0;
};

// sup_x |F_a(x) - F_b(x)| by a merged sweep over both sorted samples. Tied
// values are consumed together so D is exact with ties.
inline double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kEmptySampleSet, "KS test needs two nonempty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

// Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2). Below
// lambda = 1.18 the alternating series converges slowly, so the equivalent
// form 1 - sqrt(2 pi)/lambda sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 lambda^2)) is
// used instead. Terms are summed until they drop below 1e-16; the result is
// clamped to [0, 1].
inline double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double kPi = 3.14159265358979323846;
  double result = 0.0;
  if (lambda < 1.18) {
    const double c = -kPi * kPi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k < 100; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(c * odd * odd);
      sum += term;
      if (term < 1e-16 * sum || term == 0.0) break;
    }
    result = 1.0 - std::sqrt(2.0 * kPi) / lambda * sum;
  } else {
    double sign = 1.0;
    for (int k = 1; k < 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      result += 2.0 * sign * term;
      sign = -sign;
      if (term < 1e-16) break;
    }
  }
  return std::clamp(result, 0.0, 1.0);
}

// Asymptotic two-sided p-value at lambda = sqrt(n m / (n + m)) * D.
inline double ks_p_value(double statistic, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
  return kolmogorov_survival(std::sqrt(ne) * statistic);
}

inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  const double d = ks_statistic(a, b);
  return {d, ks_p_value(d, a.size(), b.size())};
}

inline double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::kEmptySampleSet, "mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace embmarker
