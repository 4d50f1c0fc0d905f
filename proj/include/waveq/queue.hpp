#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "waveq/distribution.hpp"
#include "waveq/rng.hpp"

namespace waveq {

/// One service step: wave length by rank (rank_len = number of customers who
/// moved, head included), by position (pos_len = position of the first
/// customer who did not move), and whether the wave ran past the horizon cap.
struct WaveRecord {
  std::int64_t t = 0;
  std::int64_t rank_len = 0;   // W(t) >= 1
  double pos_len = 0.0;        // L(t), the unmoved customer's position
  bool censored = false;
};

/// Sentinel last-move time for customers that have not moved since time 0.
inline constexpr std::int64_t kNeverMoved = -1;

class QueueConfiguration;
struct StepHooks;

template <class Dist>
WaveRecord step(QueueConfiguration& q, const Dist& dist, Rng& rng,
                std::int64_t horizon_cap = 1'000'000, StepHooks* hooks = nullptr);

/// The queue configuration: the head pinned at position 0 and customers at
/// 0 < x_1 < x_2 < ... on the half-line.
///
/// Only a finite prefix is materialized; the i.i.d. tail is drawn lazily from
/// the configuration's own generator the first time a rank is inspected, so
/// the infinite queue is simulated exactly. Positions of customers a wave did
/// not reach are never recomputed, only re-indexed, which keeps cross-step
/// position identities bit-exact. A parallel array holds each customer's
/// last-move time (kNeverMoved until a wave reaches them), which is what the
/// block statistics read.
class QueueConfiguration {
public:
  explicit QueueConfiguration(Rng tail_rng) : tail_rng_(tail_rng) {}

  /// Configuration with a prescribed spacing prefix (lazy i.i.d. tail beyond).
  static QueueConfiguration from_spacings(std::span<const double> spacings, Rng tail_rng) {
    QueueConfiguration q(tail_rng);
    double x = 0.0;
    for (double s : spacings) {
      if (!(s > 0.0)) throw std::invalid_argument("from_spacings: spacings must be positive");
      x += s;
      q.pos_.push_back(x);
      q.lm_.push_back(kNeverMoved);
    }
    q.tail_last_ = x;
    return q;
  }

  std::int64_t time() const { return t_; }
  std::int64_t horizon() const { return static_cast<std::int64_t>(pos_.size() - head_); }

  /// Position of rank i (0 for the head). Requires i <= horizon().
  double position(std::int64_t rank) const {
    if (rank == 0) return 0.0;
    return pos_[head_ + static_cast<std::size_t>(rank) - 1];
  }

  double spacing(std::int64_t rank) const {
    return position(rank) - position(rank - 1);
  }

  /// Time of the last move of the rank-i customer; kNeverMoved if none.
  /// The head (rank 0) moved at the current step by construction.
  std::int64_t last_move(std::int64_t rank) const {
    if (rank == 0) return t_ >= 1 ? t_ : kNeverMoved;
    return lm_[head_ + static_cast<std::size_t>(rank) - 1];
  }

  /// Materialize the tail out to the given rank. The anchor is tracked
  /// separately from pos_ because a step overwrites prefix slots in place
  /// while the stopping rule may still extend the tail of the pre-step
  /// configuration.
  template <class Dist>
  void ensure(std::int64_t rank, const Dist& dist) {
    while (horizon() < rank) {
      tail_last_ += dist.sample(tail_rng_);
      pos_.push_back(tail_last_);
      lm_.push_back(tail_last_move_);
    }
  }

  /// Positions of ranks 0..count as a fresh vector (x_0 = 0 first).
  template <class Dist>
  std::vector<double> prefix_positions(std::int64_t count, const Dist& dist) {
    ensure(count, dist);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count) + 1);
    out.push_back(0.0);
    for (std::int64_t i = 1; i <= count; ++i) out.push_back(position(i));
    return out;
  }

  /// Positions of ranks 0..k covering [0, x_max].
  template <class Dist>
  std::vector<double> prefix_to_position(double x_max, const Dist& dist) {
    std::int64_t k = 1;
    ensure(k, dist);
    while (position(k) <= x_max) {
      ++k;
      ensure(k, dist);
    }
    return prefix_positions(k, dist);
  }

private:
  template <class Dist>
  friend WaveRecord step(QueueConfiguration& q, const Dist& dist, Rng& rng,
                         std::int64_t horizon_cap, struct StepHooks* hooks);

  void advance_head() {
    ++head_;
    // amortized O(1) compaction of the dead prefix
    if (head_ >= (1u << 20) && head_ * 2 >= pos_.size()) {
      pos_.erase(pos_.begin(), pos_.begin() + static_cast<std::ptrdiff_t>(head_));
      lm_.erase(lm_.begin(), lm_.begin() + static_cast<std::ptrdiff_t>(head_));
      head_ = 0;
    }
  }

  void reset_to_fresh_tail(std::int64_t wave_time) {
    pos_.clear();
    lm_.clear();
    head_ = 0;
    tail_last_ = 0.0;
    // a censored wave is treated as infinite: every visible customer moved
    tail_last_move_ = wave_time;
  }

  std::vector<double> pos_;        // pos_[head_ + i - 1] = x_i
  std::vector<std::int64_t> lm_;   // last-move time, aligned with pos_
  std::size_t head_ = 0;
  std::int64_t t_ = 0;
  double tail_last_ = 0.0;         // highest materialized pre-step position
  std::int64_t tail_last_move_ = kNeverMoved;
  Rng tail_rng_;
};

/// Optional per-step observation points. All fields may be left empty.
struct StepHooks {
  /// Sorted ranks (>= 1) to watch; moved(rank, new_position) fires when a
  /// watched customer is moved by the wave, in increasing rank order.
  std::span<const std::int64_t> watch_ranks;
  std::vector<std::pair<std::int64_t, double>> moved;

  /// When set, the pre-step positions x_1(t-1)..x_{W+1}(t-1) are recorded
  /// here as the wave sweeps them (the stopping rule reads each exactly once).
  std::vector<double>* old_prefix = nullptr;

  /// Structural validation of the step at the given tolerance; violations
  /// throw std::logic_error.
  bool validate = false;
  double tolerance = 1e-9;
};

/// One transition of the spatial queue chain.
///
/// Draws xi_1, xi_2, ... i.i.d. from the spacing law until the running sum
/// reaches x_{i+1} - c_plus; that index is the wave length W. Customers of
/// rank < W move to the partial sums, the head moves to 0, and everyone at
/// rank >= W keeps their position while their rank drops by one. If the wave
/// is still running at horizon_cap it is recorded as censored and the visible
/// configuration is replaced by a fresh i.i.d. tail.
template <class Dist>
WaveRecord step(QueueConfiguration& q, const Dist& dist, Rng& rng,
                std::int64_t horizon_cap, StepHooks* hooks) {
  if (horizon_cap < 1) throw std::invalid_argument("step: horizon_cap must be >= 1");
  const std::int64_t t = ++q.t_;
  const double c_plus = dist.c_plus();
  const double c_minus = dist.c_minus();

  std::size_t watch_cursor = 0;
  if (hooks) {
    hooks->moved.clear();
    if (hooks->old_prefix) {
      hooks->old_prefix->clear();
      q.ensure(1, dist);
      hooks->old_prefix->push_back(q.position(1));
    }
  }

  double newsum = 0.0;  // xi_1 + ... + xi_{i-1}
  std::int64_t w = 0;
  double pos_len = 0.0;
  bool censored = false;

  for (std::int64_t i = 1;; ++i) {
    q.ensure(i + 1, dist);
    const double x_next = q.pos_[q.head_ + static_cast<std::size_t>(i)];  // x_{i+1}(t-1)
    if (hooks && hooks->old_prefix) hooks->old_prefix->push_back(x_next);
    const double xi = dist.sample(rng);
    const double cand = newsum + xi;
    if (cand >= x_next - c_plus) {
      w = i;
      pos_len = x_next;
      break;
    }
    if (i >= horizon_cap) {
      w = horizon_cap;
      pos_len = x_next;
      censored = true;
      break;
    }
    if (hooks) {
      if (hooks->validate) {
        const double tol = hooks->tolerance;
        if (!(xi >= c_minus - tol && xi <= c_plus + tol))
          throw std::logic_error("step: drawn spacing outside the support at t=" + std::to_string(t));
        if (!(cand > newsum))
          throw std::logic_error("step: non-increasing positions inside the wave at t=" + std::to_string(t));
      }
      if (watch_cursor < hooks->watch_ranks.size()) {
        while (watch_cursor < hooks->watch_ranks.size() && hooks->watch_ranks[watch_cursor] < i)
          ++watch_cursor;
        if (watch_cursor < hooks->watch_ranks.size() && hooks->watch_ranks[watch_cursor] == i) {
          hooks->moved.emplace_back(i, cand);
          ++watch_cursor;
        }
      }
    }
    // the slot of old x_{i+1} becomes new x_i once the head advances
    q.pos_[q.head_ + static_cast<std::size_t>(i)] = cand;
    q.lm_[q.head_ + static_cast<std::size_t>(i)] = t;
    newsum = cand;
  }

  if (censored) {
    q.reset_to_fresh_tail(t);
  } else {
    if (hooks && hooks->validate) {
      const double tol = hooks->tolerance;
      const double boundary = pos_len - newsum;  // new spacing at rank W
      if (!(boundary > 0.0))
        throw std::logic_error("step: non-positive boundary spacing at t=" + std::to_string(t));
      if (!(boundary <= 2.0 * c_plus + tol))
        throw std::logic_error("step: boundary spacing above 2*c_plus at t=" + std::to_string(t));
      if (w >= 2 && !(boundary > c_minus + c_plus - tol))
        throw std::logic_error("step: boundary spacing below c_minus + c_plus at t=" + std::to_string(t));
    }
    q.advance_head();
  }
  return WaveRecord{t, w, pos_len, censored};
}

/// Fresh configuration with an i.i.d.(mu) spacing sequence (materialized
/// lazily from the given tail stream).
inline QueueConfiguration iid_start(Rng tail_rng) { return QueueConfiguration(tail_rng); }

/// A tracked individual: the customer who starts at rank s (service index s)
/// and reaches the head at time s. Records (t_u, x_u) at every move.
struct TrajectoryRecord {
  std::int64_t s = 0;
  std::vector<std::pair<std::int64_t, double>> moves;  // (move time, new position)
  std::int64_t final_rank_observed = 0;
  bool served = false;

  std::int64_t rank_at(std::int64_t t) const { return s - t; }
};

/// Drives a configuration, records the wave stream, and serves observers.
///
/// The chain is inherently sequential; independent replicas with distinct
/// rng streams may run on separate threads.
template <class Dist>
class Simulation {
public:
  Simulation(QueueConfiguration config, Dist dist, Rng rng,
             std::int64_t horizon_cap = 1'000'000)
      : config_(std::move(config)), dist_(std::move(dist)), rng_(rng),
        horizon_cap_(horizon_cap) {}

  const QueueConfiguration& config() const { return config_; }
  QueueConfiguration& config() { return config_; }
  const Dist& dist() const { return dist_; }
  std::int64_t time() const { return config_.time(); }

  /// Track individual s; must be called at a time <= s.
  void track(std::int64_t s) {
    if (s < 1) throw std::invalid_argument("track: service index must be >= 1");
    if (config_.time() > s) throw std::invalid_argument("track: individual already served");
    trackers_.push_back(TrajectoryRecord{s, {}, s - config_.time(), false});
  }

  std::span<const TrajectoryRecord> trajectories() const { return trackers_; }

  WaveRecord step_once(StepHooks* hooks = nullptr) {
    StepHooks local;
    StepHooks* use = hooks ? hooks : &local;

    watch_scratch_.clear();
    const std::int64_t t = config_.time() + 1;
    for (const auto& tr : trackers_) {
      const std::int64_t r = tr.s - t;
      if (!tr.served && r >= 1) watch_scratch_.push_back(r);
    }
    std::sort(watch_scratch_.begin(), watch_scratch_.end());
    watch_scratch_.erase(std::unique(watch_scratch_.begin(), watch_scratch_.end()),
                         watch_scratch_.end());
    use->watch_ranks = watch_scratch_;

    WaveRecord rec = step(config_, dist_, rng_, horizon_cap_, use);

    for (auto& tr : trackers_) {
      if (tr.served) continue;
      const std::int64_t r = tr.s - rec.t;
      if (r < 0) continue;
      if (r == 0) {
        tr.moves.emplace_back(rec.t, 0.0);
        tr.final_rank_observed = 0;
        tr.served = true;
        continue;
      }
      tr.final_rank_observed = r;
      if (rec.rank_len > r) {
        if (rec.censored) {
          // identity lost when the visible sequence is replaced
          tr.served = true;
          continue;
        }
        for (const auto& [rank, pos] : use->moved) {
          if (rank == r) {
            tr.moves.emplace_back(rec.t, pos);
            break;
          }
        }
      }
    }
    return rec;
  }

  /// Run `steps` steps, invoking sink(record) after each.
  template <class Sink>
  void run(std::int64_t steps, Sink&& sink) {
    for (std::int64_t k = 0; k < steps; ++k) {
      WaveRecord rec = step_once();
      sink(rec);
    }
  }

  std::vector<WaveRecord> run_collect(std::int64_t steps) {
    std::vector<WaveRecord> out;
    out.reserve(static_cast<std::size_t>(steps));
    run(steps, [&](const WaveRecord& r) { out.push_back(r); });
    return out;
  }

private:
  QueueConfiguration config_;
  Dist dist_;
  Rng rng_;
  std::int64_t horizon_cap_;
  std::vector<TrajectoryRecord> trackers_;
  std::vector<std::int64_t> watch_scratch_;
};

/// Last-move decomposition of the first k ranks at the configuration's
/// current time t0: L_s(t0) per rank and the same-block flags
/// A_{s+1}(t0) = {L_s = L_{s+1} < t0} for each spacing.
struct BlockDecomposition {
  std::int64_t t0 = 0;
  std::vector<std::int64_t> last_move;     // index i: time since last move of rank i (L), i = 0..k
  std::vector<bool> same_block;            // index i >= 1: flag for spacing (rank i-1, rank i)
};

template <class Dist>
BlockDecomposition block_decompose(QueueConfiguration& q, const Dist& dist, std::int64_t k) {
  q.ensure(k, dist);
  BlockDecomposition out;
  out.t0 = q.time();
  out.last_move.resize(static_cast<std::size_t>(k) + 1);
  out.same_block.assign(static_cast<std::size_t>(k) + 1, false);
  for (std::int64_t i = 0; i <= k; ++i) {
    const std::int64_t lm = q.last_move(i);
    out.last_move[static_cast<std::size_t>(i)] = (lm == kNeverMoved) ? out.t0 : out.t0 - lm;
  }
  for (std::int64_t i = 1; i <= k; ++i) {
    const std::int64_t a = q.last_move(i - 1);
    const std::int64_t b = q.last_move(i);
    out.same_block[static_cast<std::size_t>(i)] = (a == b && a != kNeverMoved);
  }
  return out;
}

}  // namespace waveq
