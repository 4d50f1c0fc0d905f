#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace waveq {

/// Complement of the Kolmogorov distribution:
/// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  double prev = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-12 * prev || term < 1e-300) break;
    prev = term;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double d = 0.0;        // sup distance
  double p_value = 1.0;  // asymptotic, with the small-sample correction
  std::size_t n1 = 0;
  std::size_t n2 = 0;    // 0 for the one-sample test
};

inline double ks_p_from_d(double d, double n_effective) {
  const double rn = std::sqrt(n_effective);
  return kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
}

/// One-sample KS statistic of a sample against an exact CDF.
inline KsResult ks_one_sample(std::vector<double> sample,
                              const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f,
                             f - static_cast<double>(i) / n));
  }
  KsResult out;
  out.d = d;
  out.n1 = sample.size();
  out.p_value = ks_p_from_d(d, n);
  return out;
}

/// Two-sample KS statistic.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult out;
  out.d = d;
  out.n1 = a.size();
  out.n2 = b.size();
  out.p_value = ks_p_from_d(d, na * nb / (na + nb));
  return out;
}

}  // namespace waveq
