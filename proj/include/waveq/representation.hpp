#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "waveq/queue.hpp"

namespace waveq {

/// Centered counting function of a configuration: F(x) = max{k: x_k <= x} - x
/// on [0, x_max]. Stored as the exact list of unit up-jump positions
/// (x_0 = 0 first); between jumps the slope is -1.
struct CountingFunction {
  std::vector<double> jumps;  // 0 = x_0 < x_1 < ...
  double x_max = 0.0;

  static CountingFunction from_positions(std::vector<double> positions, double x_max) {
    if (positions.empty() || positions.front() != 0.0)
      throw std::invalid_argument("counting function: positions must start at x_0 = 0");
    CountingFunction f;
    f.jumps = std::move(positions);
    f.x_max = x_max;
    return f;
  }

  /// Index of the last jump at or before x (the rank of the last customer
  /// at or before x).
  std::int64_t rank_at(double x) const {
    auto it = std::upper_bound(jumps.begin(), jumps.end(), x);
    return static_cast<std::int64_t>(it - jumps.begin()) - 1;
  }

  double value(double x) const { return static_cast<double>(rank_at(x)) - x; }
};

/// The graph G(t, x) = t + F_t(x) for the configuration after step t.
struct GCurve {
  std::int64_t t = 0;
  CountingFunction f;

  double value(double x) const { return static_cast<double>(t) + f.value(x); }
};

/// Build the counting function of the current configuration on [0, x_max].
template <class Dist>
CountingFunction counting_function(QueueConfiguration& q, const Dist& dist, double x_max) {
  auto prefix = q.prefix_to_position(x_max, dist);
  // trim to the window, keeping one jump beyond for rank queries at x_max
  while (prefix.size() > 1 && prefix[prefix.size() - 2] > x_max) prefix.pop_back();
  return CountingFunction::from_positions(std::move(prefix), x_max);
}

struct CoalescenceResult {
  bool found = false;
  double position = 0.0;  // least common jump; equals L(t) for consecutive steps
};

/// First point where two G graphs make the same jump: the least x* that is a
/// jump of both curves with equal values after the jump. For the curves of
/// consecutive steps of one run this is exactly the wave length by position.
inline CoalescenceResult coalescence_position(const GCurve& prev, const GCurve& curr) {
  const auto& a = prev.f.jumps;
  const auto& b = curr.f.jumps;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (a[i] > b[j]) {
      ++j;
    } else {
      // same jump position; same jump means equal post-jump values
      if (prev.t + static_cast<std::int64_t>(i) == curr.t + static_cast<std::int64_t>(j))
        return {true, a[i]};
      ++i;
      ++j;
    }
  }
  return {false, 0.0};
}

/// Check that two curves agree (identical jumps, equal values) from position
/// x_from to the end of their common window.
inline bool agree_beyond(const GCurve& prev, const GCurve& curr, double x_from) {
  const double hi = std::min(prev.f.x_max, curr.f.x_max);
  auto ia = std::lower_bound(prev.f.jumps.begin(), prev.f.jumps.end(), x_from);
  auto ib = std::lower_bound(curr.f.jumps.begin(), curr.f.jumps.end(), x_from);
  const std::int64_t shift = (ia - prev.f.jumps.begin()) + prev.t;
  if ((ib - curr.f.jumps.begin()) + curr.t != shift) return false;
  while (ia != prev.f.jumps.end() && ib != curr.f.jumps.end()) {
    if (*ia > hi || *ib > hi) break;
    if (*ia != *ib) return false;
    ++ia;
    ++ib;
  }
  return true;
}

/// A point sample on the line (normalized wave times, CBM cluster positions).
struct PointProcessSample {
  std::vector<double> points;  // sorted
  double window_lo = 0.0;
  double window_hi = 0.0;
  int replicate = 0;

  double window_length() const { return window_hi - window_lo; }
  double intensity() const {
    return points.empty() ? 0.0 : static_cast<double>(points.size()) / window_length();
  }
};

/// A planar point sample (normalized move times and positions).
struct PlanarPointSample {
  std::vector<std::pair<double, double>> points;
  int replicate = 0;
  bool truncated = false;  // tracked individual served before the window ended
};

/// Normalized times of waves longer than n: {(t - t_ref) / (sigma sqrt(n))}
/// for steps with pos_len > n (or rank_len > n when by_rank is set).
/// Censored waves count as longer than every threshold.
inline PointProcessSample wave_time_points(std::span<const WaveRecord> records,
                                           double n, double sigma,
                                           std::int64_t t_ref,
                                           double window_lo, double window_hi,
                                           bool by_rank = false) {
  PointProcessSample out;
  out.window_lo = window_lo;
  out.window_hi = window_hi;
  const double scale = sigma * std::sqrt(n);
  for (const auto& rec : records) {
    const bool exceeds = rec.censored ||
        (by_rank ? static_cast<double>(rec.rank_len) > n : rec.pos_len > n);
    if (!exceeds) continue;
    const double u = static_cast<double>(rec.t - t_ref) / scale;
    if (u >= window_lo && u <= window_hi) out.points.push_back(u);
  }
  std::sort(out.points.begin(), out.points.end());
  return out;
}

/// Normalized move times and positions of one tracked individual:
/// ((t_u - t_ref) / sqrt(n), (n - x_u) / sqrt(n)).
inline PlanarPointSample trajectory_points(const TrajectoryRecord& traj,
                                           double n, std::int64_t t_ref,
                                           std::int64_t t_end) {
  PlanarPointSample out;
  const double root_n = std::sqrt(n);
  for (const auto& [t, x] : traj.moves) {
    if (t <= t_ref || t > t_end) continue;
    out.points.emplace_back(static_cast<double>(t - t_ref) / root_n, (n - x) / root_n);
  }
  out.truncated = traj.served;
  return out;
}

/// One member of a rescaled family: the graph G(t_raw, .) viewed through
/// H(y, t) = (G(t_raw, n t) - t_ref) / sqrt(n) on t in [1, T_max].
struct RescaledMember {
  std::int64_t t_raw = 0;       // first step of the coalesced group
  double y = 0.0;               // (t_raw - t_ref) / (sigma sqrt(n))
  CountingFunction f;

  double h(double t, double n, std::int64_t t_ref) const {
    return (static_cast<double>(t_raw) + f.value(n * t) - static_cast<double>(t_ref))
           / std::sqrt(n);
  }
};

/// The rescaled family: distinct graphs over a window of reference steps,
/// grouped exactly (two steps are one member iff every wave between them
/// stayed inside position n, so the graphs are identical on [n, n T_max]).
struct RescaledFamily {
  double n = 0.0;
  std::int64_t t_ref = 0;
  double sigma = 0.0;
  double t_max = 4.0;
  std::vector<RescaledMember> members;
  /// coalescence position (in raw x units) between consecutive members;
  /// entry k couples members k and k+1. Values > n * t_max mean the pair is
  /// still open at the right edge of the window.
  std::vector<double> pair_coalescence;

  std::vector<double> init_values() const {
    std::vector<double> out;
    out.reserve(members.size());
    for (const auto& m : members) out.push_back(m.h(1.0, n, t_ref));
    return out;
  }
};

/// Observer that builds a RescaledFamily while a simulation runs.
///
/// Capture steps are t_ref + sigma sqrt(n) y for y in [y_lo, y_hi]; a new
/// member starts whenever a wave reaches past position n (pos_len > n).
template <class Dist>
class RescaledFamilyBuilder {
public:
  RescaledFamilyBuilder(double n, std::int64_t t_ref, double sigma,
                        double y_lo, double y_hi, double t_max)
      : n_(n), t_ref_(t_ref), sigma_(sigma), t_max_(t_max) {
    const double scale = sigma * std::sqrt(n);
    first_step_ = t_ref + static_cast<std::int64_t>(std::floor(scale * y_lo));
    last_step_ = t_ref + static_cast<std::int64_t>(std::ceil(scale * y_hi));
    if (first_step_ < 1) throw std::invalid_argument(
        "rescaled family: window starts before step 1; need a longer run or larger t_ref");
  }

  std::int64_t first_step() const { return first_step_; }
  std::int64_t last_step() const { return last_step_; }

  /// Call after every simulation step. Consecutive steps share a member
  /// while every wave between them stays inside position n; a wave past n
  /// starts a new member and its pos_len is the pair's coalescence position.
  void observe(Simulation<Dist>& sim, const WaveRecord& rec) {
    if (rec.t < first_step_ || rec.t > last_step_) return;
    const bool boundary = rec.censored || rec.pos_len > n_;
    if (!members_.empty() && !boundary) return;
    if (!members_.empty())
      pair_coalescence_.push_back(rec.censored
                                      ? std::numeric_limits<double>::infinity()
                                      : rec.pos_len);
    RescaledMember m;
    m.t_raw = rec.t;
    m.y = static_cast<double>(rec.t - t_ref_) / (sigma_ * std::sqrt(n_));
    m.f = counting_function(sim.config(), sim.dist(), n_ * t_max_ + 2.0 * sim.dist().c_plus());
    members_.push_back(std::move(m));
  }

  RescaledFamily family() const {
    RescaledFamily fam;
    fam.n = n_;
    fam.t_ref = t_ref_;
    fam.sigma = sigma_;
    fam.t_max = t_max_;
    fam.members = members_;
    fam.pair_coalescence = pair_coalescence_;
    return fam;
  }

private:
  double n_;
  std::int64_t t_ref_;
  double sigma_;
  double t_max_;
  std::int64_t first_step_ = 0;
  std::int64_t last_step_ = 0;
  std::vector<RescaledMember> members_;
  std::vector<double> pair_coalescence_;
};

/// Nearest-neighbor distance of each interior point of a sorted sample.
inline std::vector<double> nearest_neighbor_spacings(std::span<const double> sorted_points) {
  std::vector<double> out;
  if (sorted_points.size() < 3) return out;
  for (std::size_t i = 1; i + 1 < sorted_points.size(); ++i) {
    out.push_back(std::min(sorted_points[i] - sorted_points[i - 1],
                           sorted_points[i + 1] - sorted_points[i]));
  }
  return out;
}

}  // namespace waveq
