#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "waveq/distribution.hpp"
#include "waveq/ks.hpp"
#include "waveq/queue.hpp"
#include "waveq/rng.hpp"

namespace waveq {

// ---------------------------------------------------------------------------
// Wave-tail estimation
// ---------------------------------------------------------------------------

/// Time-averaged tail of the wave-length law: rho_hat(j) is the fraction of
/// steps in (burn_in, tau] whose wave exceeded rank j. Counts are exact
/// integers; censored waves exceed every threshold.
struct TailEstimate {
  std::vector<std::int64_t> j_grid;
  std::vector<std::int64_t> counts;  // N_j over the window
  std::vector<double> rho_hat;
  std::vector<double> se;
  std::int64_t window = 0;  // tau - burn_in
  std::int64_t burn_in = 0;
  std::vector<std::string> warnings;
};

inline TailEstimate wave_tail(std::span<const WaveRecord> records,
                              std::vector<std::int64_t> j_grid,
                              std::int64_t burn_in) {
  std::sort(j_grid.begin(), j_grid.end());
  TailEstimate out;
  out.j_grid = j_grid;
  out.burn_in = burn_in;
  out.counts.assign(j_grid.size(), 0);
  std::int64_t window = 0;
  for (const auto& rec : records) {
    if (rec.t <= burn_in) continue;
    ++window;
    for (std::size_t k = 0; k < j_grid.size(); ++k) {
      if (rec.censored || rec.rank_len > j_grid[k]) ++out.counts[k];
      else break;  // grid sorted; larger thresholds cannot be exceeded either
    }
  }
  if (window <= 0) throw std::invalid_argument("wave_tail: empty window after burn-in");
  out.window = window;
  if (!j_grid.empty() && window < 10 * j_grid.back())
    out.warnings.push_back("window shorter than 10*max(j): tail estimates may be noisy");
  for (std::size_t k = 0; k < j_grid.size(); ++k) {
    const double p = static_cast<double>(out.counts[k]) / static_cast<double>(window);
    out.rho_hat.push_back(p);
    out.se.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(window)));
  }
  return out;
}

/// Ordinary least squares of log rho_hat on log j over [j_min, j_max].
struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::int64_t points_used = 0;
  std::vector<std::string> warnings;
};

inline PowerFit fit_exponent(const TailEstimate& est, std::int64_t j_min, std::int64_t j_max) {
  std::vector<double> xs, ys;
  bool dropped = false;
  for (std::size_t k = 0; k < est.j_grid.size(); ++k) {
    const std::int64_t j = est.j_grid[k];
    if (j < j_min || j > j_max || j < 1) continue;
    if (est.counts[k] <= 0) {
      dropped = true;
      continue;
    }
    xs.push_back(std::log(static_cast<double>(j)));
    ys.push_back(std::log(est.rho_hat[k]));
  }
  PowerFit fit;
  if (dropped) fit.warnings.push_back("zero-count grid points dropped; fit window shrunk");
  if (xs.size() < 2) throw std::invalid_argument("fit_exponent: fewer than 2 usable grid points");
  if (xs.size() < 4) fit.warnings.push_back("fewer than 4 grid points in the fit window");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double pred = fit.intercept + fit.slope * xs[i];
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.points_used = static_cast<std::int64_t>(xs.size());
  return fit;
}

// ---------------------------------------------------------------------------
// Symmetrized-walk maxima q(j, y) and (j, y)-goodness
// ---------------------------------------------------------------------------

struct QEstimate {
  std::int64_t j = 0;
  double y = 0.0;
  double q_hat = 0.0;
  double se = 0.0;
  std::int64_t replicates = 0;
  bool exact = false;
};

namespace detail {

/// All 2^(2j) equally likely outcomes of a two-point symmetrized walk.
inline double q_two_point_exact(std::int64_t j, double y, double lo, double hi) {
  const double d = hi - lo;
  const std::uint64_t total = 1ull << (2 * j);
  std::uint64_t ok = 0;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double s = 0.0;
    bool within = true;
    for (std::int64_t i = 0; i < j; ++i) {
      const bool up = (mask >> (2 * i)) & 1u;    // xi'
      const bool dn = (mask >> (2 * i + 1)) & 1u;  // xi''
      s += (up ? d : 0.0) - (dn ? d : 0.0);
      if (s > y) {
        within = false;
        break;
      }
    }
    if (within) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(total);
}

/// All 2^j outcomes of xi' against a fixed drift sequence.
inline double q_given_two_point_exact(std::int64_t j, double y, std::span<const double> x,
                                      double lo, double hi) {
  const std::uint64_t total = 1ull << j;
  std::uint64_t ok = 0;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double s = 0.0;
    bool within = true;
    for (std::int64_t i = 0; i < j; ++i) {
      s += (((mask >> i) & 1u) ? hi : lo) - x[static_cast<std::size_t>(i)];
      if (s > y) {
        within = false;
        break;
      }
    }
    if (within) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(total);
}

}  // namespace detail

/// q(j, y) = Pr(max_{1<=k<=j} sum_{i<=k} (xi'_i - xi''_i) <= y). Exact by
/// enumeration for two-point laws with j <= 6, Monte Carlo otherwise.
inline QEstimate q_mc(std::int64_t j, double y, const SpacingDistribution& dist,
                      std::int64_t replicates, Rng& rng) {
  if (j < 1) throw std::invalid_argument("q_mc: j must be >= 1");
  QEstimate out;
  out.j = j;
  out.y = y;
  const double range = dist.c_plus() - dist.c_minus();
  if (y >= static_cast<double>(j) * range) {  // walk cannot exceed y
    out.q_hat = 1.0;
    out.exact = true;
    return out;
  }
  if (y < -range) {  // the first increment already exceeds y
    out.q_hat = 0.0;
    out.exact = true;
    return out;
  }
  if (dist.kind() == SpacingKind::two_point && j <= 6) {
    out.q_hat = detail::q_two_point_exact(j, y, dist.atom_low(), dist.atom_high());
    out.exact = true;
    return out;
  }
  if (replicates < 1) throw std::invalid_argument("q_mc: replicates must be >= 1");
  std::int64_t ok = 0;
  for (std::int64_t r = 0; r < replicates; ++r) {
    double s = 0.0;
    bool within = true;
    for (std::int64_t k = 0; k < j; ++k) {
      s += dist.sample(rng) - dist.sample(rng);
      if (s > y) {
        within = false;
        break;
      }
    }
    if (within) ++ok;
  }
  out.q_hat = static_cast<double>(ok) / static_cast<double>(replicates);
  out.se = std::sqrt(out.q_hat * (1.0 - out.q_hat) / static_cast<double>(replicates));
  out.replicates = replicates;
  return out;
}

/// q_{j,y}(x_1..x_j) = Pr(max_k sum_{i<=k} (xi'_i - x_i) <= y) for a fixed
/// spacing sequence x.
inline QEstimate q_given(std::int64_t j, double y, std::span<const double> x,
                         const SpacingDistribution& dist, std::int64_t replicates,
                         Rng& rng) {
  if (static_cast<std::int64_t>(x.size()) != j)
    throw std::invalid_argument("q_given: x must have length j");
  for (double xi : x)
    if (xi < dist.c_minus() - 1e-12 || xi > dist.c_plus() + 1e-12)
      throw std::invalid_argument("q_given: x outside the support");
  QEstimate out;
  out.j = j;
  out.y = y;
  if (dist.kind() == SpacingKind::two_point && j <= 20) {
    out.q_hat = detail::q_given_two_point_exact(j, y, x, dist.atom_low(), dist.atom_high());
    out.exact = true;
    return out;
  }
  std::int64_t ok = 0;
  for (std::int64_t r = 0; r < replicates; ++r) {
    double s = 0.0;
    bool within = true;
    for (std::int64_t k = 0; k < j; ++k) {
      s += dist.sample(rng) - x[static_cast<std::size_t>(k)];
      if (s > y) {
        within = false;
        break;
      }
    }
    if (within) ++ok;
  }
  out.q_hat = static_cast<double>(ok) / static_cast<double>(replicates);
  out.se = std::sqrt(out.q_hat * (1.0 - out.q_hat) / static_cast<double>(replicates));
  out.replicates = replicates;
  return out;
}

/// Fraction of i.i.d. spacing sequences that are NOT (j, y)-good, i.e. whose
/// conditional walk-maximum probability exceeds twice the unconditional one.
/// The Markov bound puts this at <= 1/2.
struct GoodnessEstimate {
  std::int64_t j = 0;
  double y = 0.0;
  double q_ref = 0.0;
  double not_good_rate = 0.0;
  double se = 0.0;
  std::int64_t not_good_count = 0;
  std::int64_t sequences = 0;
  bool exact = false;
};

inline GoodnessEstimate goodness_rate(std::int64_t j, double y,
                                      const SpacingDistribution& dist,
                                      std::int64_t sequences,
                                      std::int64_t inner_replicates,
                                      Rng& rng, double q_ref) {
  GoodnessEstimate out;
  out.j = j;
  out.y = y;
  out.q_ref = q_ref;
  std::vector<double> x(static_cast<std::size_t>(j));
  if (dist.kind() == SpacingKind::two_point && j <= 6) {
    // enumerate every sequence exactly
    const std::uint64_t total = 1ull << j;
    double rate = 0.0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      for (std::int64_t i = 0; i < j; ++i)
        x[static_cast<std::size_t>(i)] = ((mask >> i) & 1u) ? dist.atom_high() : dist.atom_low();
      const double qx = detail::q_given_two_point_exact(j, y, x, dist.atom_low(), dist.atom_high());
      if (qx > 2.0 * q_ref) rate += 1.0;
    }
    out.not_good_count = static_cast<std::int64_t>(rate);
    out.not_good_rate = rate / static_cast<double>(total);
    out.exact = true;
    out.sequences = static_cast<std::int64_t>(total);
    return out;
  }
  std::int64_t not_good = 0;
  for (std::int64_t s = 0; s < sequences; ++s) {
    for (auto& xi : x) xi = dist.sample(rng);
    const QEstimate qx = q_given(j, y, x, dist, inner_replicates, rng);
    if (qx.q_hat > 2.0 * q_ref) ++not_good;
  }
  out.not_good_count = not_good;
  out.not_good_rate = static_cast<double>(not_good) / static_cast<double>(sequences);
  out.se = std::sqrt(out.not_good_rate * (1.0 - out.not_good_rate)
                     / static_cast<double>(sequences));
  out.sequences = sequences;
  return out;
}

// ---------------------------------------------------------------------------
// Block reconstruction
// ---------------------------------------------------------------------------

/// Comparison of the position X_k with the reconstructed i.i.d. walk S_k:
/// within a block the spacing itself is the i.i.d. draw, across block
/// boundaries a fresh draw replaces it, so the two sums differ only on the
/// bad (boundary) ranks.
struct BlockWalkComparison {
  std::int64_t t0 = 0;
  std::int64_t k = 0;
  double x_k = 0.0;
  double s_k = 0.0;
  std::int64_t bad_count = 0;
  double bound = 0.0;          // (c_plus - c_minus) * bad_count
  double bound_relaxed = 0.0;  // (2 c_plus - c_minus) * bad_count
  bool within_bound = false;
  bool within_relaxed = false;
};

/// Requires the configuration's move history for ranks 0..k (always retained
/// by QueueConfiguration).
template <class Dist>
BlockWalkComparison block_walk_compare(QueueConfiguration& q, const Dist& dist,
                                       std::int64_t k, Rng& rng,
                                       double tolerance = 1e-9) {
  q.ensure(k, dist);
  BlockWalkComparison out;
  out.t0 = q.time();
  out.k = k;
  double s = 0.0;
  for (std::int64_t i = 1; i <= k; ++i) {
    const std::int64_t lm_prev = q.last_move(i - 1);
    const std::int64_t lm_here = q.last_move(i);
    const bool same_block = (lm_prev == lm_here && lm_here != kNeverMoved);
    if (same_block) {
      s += q.spacing(i);
    } else {
      s += dist.sample(rng);
      ++out.bad_count;
    }
  }
  out.x_k = q.position(k);
  out.s_k = s;
  out.bound = (dist.c_plus() - dist.c_minus()) * static_cast<double>(out.bad_count);
  out.bound_relaxed = (2.0 * dist.c_plus() - dist.c_minus()) * static_cast<double>(out.bad_count);
  const double diff = std::abs(out.x_k - out.s_k);
  out.within_bound = diff <= out.bound + tolerance;
  out.within_relaxed = diff <= out.bound_relaxed + tolerance;
  return out;
}

// ---------------------------------------------------------------------------
// Conditional spacing samples (block interiors vs block boundaries)
// ---------------------------------------------------------------------------

struct SpacingSample {
  std::vector<double> values;
  KsResult ks;               // against the exact spacing CDF
  std::int64_t picks = 0;    // ranks inspected (including rejected ones)
};

struct SpacingSampleOptions {
  std::int64_t target = 10'000;   // sample size to collect
  std::int64_t gap_steps = 64;    // steps between picks
  std::int64_t rank_lo = 64;
  std::int64_t rank_hi = 512;
  bool boundary = false;          // collect block-boundary spacings instead
};

/// Collect spacings at independently pre-picked (t0, rank) points, keeping a
/// pick only when its same-block flag matches the request. Pre-picking the
/// rank before looking at the flag keeps the conditional law clean.
template <class Dist>
SpacingSample collect_conditional_spacings(Simulation<Dist>& sim,
                                           const SpacingSampleOptions& opt,
                                           Rng& pick_rng) {
  SpacingSample out;
  out.values.reserve(static_cast<std::size_t>(opt.target));
  while (static_cast<std::int64_t>(out.values.size()) < opt.target) {
    for (std::int64_t s = 0; s < opt.gap_steps; ++s) sim.step_once();
    const std::int64_t rank = opt.rank_lo +
        static_cast<std::int64_t>(pick_rng.uniform_index(
            static_cast<std::uint64_t>(opt.rank_hi - opt.rank_lo + 1)));
    ++out.picks;
    auto& q = sim.config();
    q.ensure(rank, sim.dist());
    const std::int64_t lm_prev = q.last_move(rank - 1);
    const std::int64_t lm_here = q.last_move(rank);
    const bool same_block = (lm_prev == lm_here && lm_here != kNeverMoved);
    const bool never_pair = (lm_prev == kNeverMoved && lm_here == kNeverMoved);
    if (!opt.boundary && same_block) {
      out.values.push_back(q.spacing(rank));
    } else if (opt.boundary && !same_block && !never_pair) {
      out.values.push_back(q.spacing(rank));
    }
  }
  const auto& dist = sim.dist();
  out.ks = ks_one_sample(out.values, [&dist](double x) { return dist.cdf(x); });
  return out;
}

/// Every block-boundary spacing in a rank window of the current
/// configuration (negative control: these exceed c_plus by construction).
template <class Dist>
void collect_boundary_spacings(QueueConfiguration& q, const Dist& dist,
                               std::int64_t rank_lo, std::int64_t rank_hi,
                               std::vector<double>& out) {
  q.ensure(rank_hi, dist);
  for (std::int64_t i = rank_lo; i <= rank_hi; ++i) {
    const std::int64_t a = q.last_move(i - 1);
    const std::int64_t b = q.last_move(i);
    if (a != b && b != kNeverMoved && a != kNeverMoved) out.push_back(q.spacing(i));
  }
}

}  // namespace waveq
