#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "waveq/rng.hpp"

namespace waveq {

enum class SpacingKind { uniform, two_point, triangular, atoms };

/// The spacing law: how far behind their predecessor a customer stops.
///
/// Supported on [c_minus, c_plus] with 0 < c_minus <= c_plus, rescaled at
/// construction so the mean is exactly 1. sigma is the exact standard
/// deviation of the rescaled law. Degenerate (zero-variance) laws are
/// rejected: the model needs sigma > 0.
class SpacingDistribution {
public:
  static SpacingDistribution uniform(double a, double b) {
    check_raw_support(a, b);
    if (a == b) throw std::invalid_argument("uniform spacing law: a == b is a point mass");
    const double m = 0.5 * (a + b);
    SpacingDistribution d;
    d.kind_ = SpacingKind::uniform;
    d.a_ = a / m;
    d.b_ = b / m;
    d.c_minus_ = d.a_;
    d.c_plus_ = d.b_;
    d.sigma_ = (d.b_ - d.a_) / std::sqrt(12.0);
    return d;
  }

  /// Two atoms at a and b, each with probability 1/2.
  static SpacingDistribution two_point(double a, double b) {
    check_raw_support(a, b);
    if (a == b) throw std::invalid_argument("two-point spacing law: a == b is a point mass");
    const double m = 0.5 * (a + b);
    SpacingDistribution d;
    d.kind_ = SpacingKind::two_point;
    d.a_ = a / m;
    d.b_ = b / m;
    d.c_minus_ = d.a_;
    d.c_plus_ = d.b_;
    d.sigma_ = 0.5 * (d.b_ - d.a_);
    return d;
  }

  static SpacingDistribution triangular(double a, double m, double b) {
    check_raw_support(a, b);
    if (m < a || m > b) throw std::invalid_argument("triangular spacing law: mode outside [a, b]");
    if (a == b) throw std::invalid_argument("triangular spacing law: a == b is a point mass");
    const double mean = (a + m + b) / 3.0;
    SpacingDistribution d;
    d.kind_ = SpacingKind::triangular;
    d.a_ = a / mean;
    d.m_ = m / mean;
    d.b_ = b / mean;
    d.c_minus_ = d.a_;
    d.c_plus_ = d.b_;
    const double var = (d.a_ * d.a_ + d.m_ * d.m_ + d.b_ * d.b_
                        - d.a_ * d.m_ - d.a_ * d.b_ - d.m_ * d.b_) / 18.0;
    d.sigma_ = std::sqrt(var);
    return d;
  }

  /// Arbitrary finite atom table (values, weights); weights need not sum to 1.
  static SpacingDistribution atoms(std::vector<double> values, std::vector<double> weights) {
    if (values.empty() || values.size() != weights.size())
      throw std::invalid_argument("atom spacing law: need matching nonempty values/weights");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    SpacingDistribution d;
    d.kind_ = SpacingKind::atoms;
    double wsum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("atom spacing law: negative weight");
      wsum += w;
    }
    if (wsum <= 0.0) throw std::invalid_argument("atom spacing law: zero total weight");
    double mean = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) mean += values[i] * weights[i] / wsum;
    if (mean <= 0.0 || values[order.front()] <= 0.0)
      throw std::invalid_argument("atom spacing law: support must be strictly positive");
    double var = 0.0;
    for (std::size_t k : order) {
      const double v = values[k] / mean;
      const double p = weights[k] / wsum;
      d.atom_values_.push_back(v);
      d.atom_cdf_.push_back((d.atom_cdf_.empty() ? 0.0 : d.atom_cdf_.back()) + p);
      var += p * (v - 1.0) * (v - 1.0);
    }
    d.atom_cdf_.back() = 1.0;
    if (var == 0.0) throw std::invalid_argument("atom spacing law: point mass (sigma = 0)");
    d.c_minus_ = d.atom_values_.front();
    d.c_plus_ = d.atom_values_.back();
    d.sigma_ = std::sqrt(var);
    return d;
  }

  SpacingKind kind() const { return kind_; }
  double c_minus() const { return c_minus_; }
  double c_plus() const { return c_plus_; }
  double mean() const { return 1.0; }
  double sigma() const { return sigma_; }

  double sample(Rng& rng) const {
    switch (kind_) {
      case SpacingKind::uniform:
        return a_ + rng.uniform() * (b_ - a_);
      case SpacingKind::two_point:
        return (rng.next() >> 63) ? b_ : a_;
      case SpacingKind::triangular: {
        const double u = rng.uniform();
        const double fm = (m_ - a_) / (b_ - a_);
        if (u < fm) return a_ + std::sqrt(u * (b_ - a_) * (m_ - a_));
        return b_ - std::sqrt((1.0 - u) * (b_ - a_) * (b_ - m_));
      }
      case SpacingKind::atoms: {
        const double u = rng.uniform();
        const auto it = std::lower_bound(atom_cdf_.begin(), atom_cdf_.end(), u);
        const std::size_t k = std::min<std::size_t>(it - atom_cdf_.begin(), atom_values_.size() - 1);
        return atom_values_[k];
      }
    }
    return 1.0;  // unreachable
  }

  /// Exact CDF of the rescaled law.
  double cdf(double x) const {
    switch (kind_) {
      case SpacingKind::uniform:
        if (x < a_) return 0.0;
        if (x >= b_) return 1.0;
        return (x - a_) / (b_ - a_);
      case SpacingKind::two_point:
        if (x < a_) return 0.0;
        if (x < b_) return 0.5;
        return 1.0;
      case SpacingKind::triangular:
        if (x <= a_) return 0.0;
        if (x >= b_) return 1.0;
        if (x <= m_) return (x - a_) * (x - a_) / ((b_ - a_) * (m_ - a_));
        return 1.0 - (b_ - x) * (b_ - x) / ((b_ - a_) * (b_ - m_));
      case SpacingKind::atoms: {
        double p = 0.0;
        for (std::size_t k = 0; k < atom_values_.size(); ++k) {
          if (atom_values_[k] <= x) p = atom_cdf_[k];
        }
        return p;
      }
    }
    return 0.0;  // unreachable
  }

  /// Atom values for the exact enumeration paths (two-point only).
  double atom_low() const { return a_; }
  double atom_high() const { return b_; }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case SpacingKind::uniform:    os << "uniform:" << a_ << "," << b_; break;
      case SpacingKind::two_point:  os << "twopoint:" << a_ << "," << b_; break;
      case SpacingKind::triangular: os << "tri:" << a_ << "," << m_ << "," << b_; break;
      case SpacingKind::atoms:      os << "atoms[" << atom_values_.size() << "]"; break;
    }
    return os.str();
  }

private:
  SpacingDistribution() = default;

  static void check_raw_support(double a, double b) {
    if (!(a > 0.0)) throw std::invalid_argument("spacing law: support must satisfy c_minus > 0");
    if (!(b >= a)) throw std::invalid_argument("spacing law: need a <= b");
    if (!std::isfinite(a) || !std::isfinite(b))
      throw std::invalid_argument("spacing law: support must be finite");
  }

  SpacingKind kind_ = SpacingKind::uniform;
  double a_ = 0.5, b_ = 1.5, m_ = 1.0;
  double c_minus_ = 0.5, c_plus_ = 1.5, sigma_ = 0.0;
  std::vector<double> atom_values_;
  std::vector<double> atom_cdf_;
};

/// Parse "uniform:a,b" | "twopoint:a,b" | "tri:a,m,b" into a rescaled law.
inline SpacingDistribution parse_distribution(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("distribution spec '" + text + "': expected kind:params");
  const std::string kind = text.substr(0, colon);
  std::vector<double> v;
  std::stringstream ss(text.substr(colon + 1));
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
  if (kind == "uniform" && v.size() == 2) return SpacingDistribution::uniform(v[0], v[1]);
  if (kind == "twopoint" && v.size() == 2) return SpacingDistribution::two_point(v[0], v[1]);
  if (kind == "tri" && v.size() == 3) return SpacingDistribution::triangular(v[0], v[1], v[2]);
  throw std::invalid_argument("distribution spec '" + text + "': unknown kind or wrong arity");
}

}  // namespace waveq
