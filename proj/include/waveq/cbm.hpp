#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "waveq/parallel.hpp"
#include "waveq/representation.hpp"
#include "waveq/rng.hpp"

namespace waveq {

enum class IncrementLaw { gaussian, rademacher };

/// Coalescing random walkers on the line, the discrete-time stand-in for
/// coalescing Brownian motion.
///
/// Each cluster advances by an independent increment of variance dt per
/// step. Clusters merge when their paths meet or cross within a step, and
/// the merged cluster follows the path of the member with the lower starting
/// position; this keeps cluster positions strictly ordered and prevents
/// walkers tunneling through each other at finite dt.
class ParticleSystem {
public:
  ParticleSystem(std::vector<double> starts, double dt,
                 IncrementLaw law = IncrementLaw::gaussian)
      : dt_(dt), law_(law) {
    if (dt <= 0.0) throw std::invalid_argument("particle system: dt must be positive");
    std::sort(starts.begin(), starts.end());
    positions_ = starts;
    weights_.assign(starts.size(), 1);
  }

  static ParticleSystem grid(double lo, double hi, double eps, double dt,
                             IncrementLaw law = IncrementLaw::gaussian) {
    std::vector<double> starts;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / eps)) + 1;
    starts.reserve(count);
    for (std::size_t k = 0; k < count; ++k) starts.push_back(lo + static_cast<double>(k) * eps);
    return ParticleSystem(std::move(starts), dt, law);
  }

  double time() const { return t_; }
  double dt() const { return dt_; }
  std::size_t cluster_count() const { return positions_.size(); }
  const std::vector<double>& positions() const { return positions_; }
  const std::vector<std::int64_t>& weights() const { return weights_; }

  /// Advance to t_target; (t_target - time) must be a multiple of dt.
  void evolve(double t_target, Rng& rng) {
    const double span = t_target - t_;
    const double steps_real = span / dt_;
    const auto steps = static_cast<std::int64_t>(std::llround(steps_real));
    if (steps < 0 || std::abs(steps_real - static_cast<double>(steps)) > 1e-9)
      throw std::invalid_argument("particle system: dt must divide the evolution span");
    for (std::int64_t s = 0; s < steps; ++s) advance_one(rng);
    t_ = t_target;
  }

  /// One dt step.
  void step_once(Rng& rng) {
    advance_one(rng);
    t_ += dt_;
  }

  /// Cluster positions inside [lo, hi].
  PointProcessSample sample_window(double lo, double hi, int replicate = 0) const {
    PointProcessSample out;
    out.window_lo = lo;
    out.window_hi = hi;
    out.replicate = replicate;
    for (double p : positions_)
      if (p >= lo && p <= hi) out.points.push_back(p);
    return out;
  }

private:
  void advance_one(Rng& rng) {
    const double sd = std::sqrt(dt_);
    std::size_t out = 0;
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      const double inc = law_ == IncrementLaw::gaussian
                             ? sd * rng.normal()
                             : ((rng.next() >> 63) ? sd : -sd);
      const double cand = positions_[i] + inc;
      if (out > 0 && positions_[out - 1] >= cand) {
        // crossed (or met) the lower-start cluster: absorbed onto its path
        weights_[out - 1] += weights_[i];
      } else {
        positions_[out] = cand;
        weights_[out] = weights_[i];
        ++out;
      }
    }
    positions_.resize(out);
    weights_.resize(out);
  }

  std::vector<double> positions_;       // strictly increasing
  std::vector<std::int64_t> weights_;   // particles absorbed per cluster
  double dt_;
  double t_ = 0.0;
  IncrementLaw law_;
};

/// Mean cluster density of a grid start after evolving to time t.
struct DensityEstimate {
  double t = 0.0;
  double eps = 0.0;
  double rho_hat = 0.0;
  double se = 0.0;
  std::int64_t replicates = 0;
  std::string warning;  // set when the start grid is too coarse
};

struct DensityOptions {
  double domain_length = 24.0;
  double dt = 1e-4;
  std::int64_t replicates = 200;
  double boundary_margin_factor = 4.0;  // margin = factor * sqrt(t)
};

/// Clusters per unit length in the interior of [0, L] at time t, averaged
/// over independent replicates started from a grid of spacing eps.
/// Replicate r draws from stream (stream_base + r), so the estimate does not
/// depend on the thread count.
inline DensityEstimate estimate_density(double eps, double t, const DensityOptions& opt,
                                        std::uint64_t seed, std::uint64_t stream_base) {
  DensityEstimate out;
  out.t = t;
  out.eps = eps;
  out.replicates = opt.replicates;
  if (eps > 0.05 * std::sqrt(t))
    out.warning = "grid spacing above 0.05*sqrt(t): density will be underestimated";
  const double margin = opt.boundary_margin_factor * std::sqrt(t);
  const double lo = margin;
  const double hi = opt.domain_length - margin;
  if (hi <= lo) throw std::invalid_argument("estimate_density: domain shorter than its margins");

  std::vector<double> density(static_cast<std::size_t>(opt.replicates), 0.0);
  parallel_tasks(opt.replicates, [&](std::int64_t r) {
    Rng rng(seed, stream_base + static_cast<std::uint64_t>(r));
    ParticleSystem sys = ParticleSystem::grid(0.0, opt.domain_length, eps, opt.dt);
    sys.evolve(t, rng);
    std::int64_t count = 0;
    for (double p : sys.positions())
      if (p >= lo && p <= hi) ++count;
    density[static_cast<std::size_t>(r)] = static_cast<double>(count) / (hi - lo);
  });
  double sum = 0.0, sum_sq = 0.0;
  for (double d : density) {
    sum += d;
    sum_sq += d * d;
  }
  const double n = static_cast<double>(opt.replicates);
  out.rho_hat = sum / n;
  const double var = std::max(0.0, sum_sq / n - out.rho_hat * out.rho_hat);
  out.se = std::sqrt(var / n);
  return out;
}

/// The time-1 cluster density of coalescing Brownian motion, extrapolated to
/// a dense start from a refinement ladder in the grid spacing.
struct Rho1Estimate {
  double value = 0.0;
  double se = 0.0;
  std::vector<DensityEstimate> ladder;
};

/// Richardson extrapolation (linear in eps) from the two finest rungs; the
/// full ladder must be increasing as eps decreases, up to noise, or the
/// estimate is refused.
inline Rho1Estimate rho1_from_ladder(const std::vector<DensityEstimate>& ladder) {
  if (ladder.size() < 2) throw std::invalid_argument("rho1: need at least two ladder rungs");
  std::vector<DensityEstimate> rungs = ladder;
  std::sort(rungs.begin(), rungs.end(),
            [](const DensityEstimate& a, const DensityEstimate& b) { return a.eps > b.eps; });
  for (std::size_t i = 1; i < rungs.size(); ++i) {
    const double diff = rungs[i].rho_hat - rungs[i - 1].rho_hat;
    const double noise = 3.0 * std::hypot(rungs[i].se, rungs[i - 1].se);
    if (diff < -noise) {
      std::string msg = "rho1: density ladder not increasing as eps decreases:";
      for (const auto& r : rungs)
        msg += " (eps=" + std::to_string(r.eps) + ", rho=" + std::to_string(r.rho_hat) + ")";
      throw std::runtime_error(msg);
    }
  }
  const auto& coarse = rungs[rungs.size() - 2];
  const auto& fine = rungs[rungs.size() - 1];
  const double ratio = coarse.eps / (coarse.eps - fine.eps);
  Rho1Estimate out;
  out.value = fine.rho_hat + (fine.rho_hat - coarse.rho_hat) * fine.eps / (coarse.eps - fine.eps);
  out.se = std::hypot(ratio * fine.se, (ratio - 1.0) * coarse.se);
  out.ladder = std::move(rungs);
  return out;
}

struct Rho1Options {
  std::vector<double> eps_ladder = {0.05, 0.02, 0.01};
  DensityOptions density;
};

inline Rho1Estimate rho1(const Rho1Options& opt, std::uint64_t seed) {
  std::vector<DensityEstimate> ladder;
  std::uint64_t stream = 0xCB000000ULL;
  for (double eps : opt.eps_ladder) {
    ladder.push_back(estimate_density(eps, 1.0, opt.density, seed, stream));
    stream += 0x10000ULL;
  }
  return rho1_from_ladder(ladder);
}

/// Probability that two independent walkers started distance d apart have
/// not met by time t (reflection principle closed form for the Brownian
/// limit: erf(d / sqrt(4 t))).
inline double no_meet_probability_exact(double d, double t) {
  return std::erf(d / std::sqrt(4.0 * t));
}

struct MeetingProbe {
  double d = 1.0;
  double t = 1.0;
  double p_hat = 0.0;
  double se = 0.0;
  double p_exact = 0.0;
};

inline MeetingProbe no_meet_probability_mc(double d, double t, std::int64_t replicates,
                                           double dt, std::uint64_t seed,
                                           std::uint64_t stream_base) {
  const std::int64_t chunk = 500;
  const std::int64_t tasks = (replicates + chunk - 1) / chunk;
  std::vector<std::int64_t> survived_per(static_cast<std::size_t>(tasks), 0);
  parallel_tasks(tasks, [&](std::int64_t task) {
    Rng rng(seed, stream_base + static_cast<std::uint64_t>(task));
    const std::int64_t lo = task * chunk;
    const std::int64_t hi = std::min(replicates, lo + chunk);
    const auto steps = static_cast<std::int64_t>(std::llround(t / dt));
    std::int64_t survived = 0;
    for (std::int64_t r = lo; r < hi; ++r) {
      ParticleSystem sys({0.0, d}, dt);
      for (std::int64_t s = 0; s < steps && sys.cluster_count() == 2; ++s) sys.step_once(rng);
      if (sys.cluster_count() == 2) ++survived;
    }
    survived_per[static_cast<std::size_t>(task)] = survived;
  });
  std::int64_t survived = 0;
  for (std::int64_t s : survived_per) survived += s;
  MeetingProbe out;
  out.d = d;
  out.t = t;
  out.p_hat = static_cast<double>(survived) / static_cast<double>(replicates);
  out.se = std::sqrt(out.p_hat * (1.0 - out.p_hat) / static_cast<double>(replicates));
  out.p_exact = no_meet_probability_exact(d, t);
  return out;
}

}  // namespace waveq
