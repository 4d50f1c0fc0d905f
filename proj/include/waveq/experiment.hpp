#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "waveq/cbm.hpp"
#include "waveq/distribution.hpp"
#include "waveq/io.hpp"
#include "waveq/parallel.hpp"
#include "waveq/queue.hpp"
#include "waveq/representation.hpp"
#include "waveq/stats.hpp"

namespace waveq {

/// Everything one run needs; (spec, seed) determines all outputs.
struct ExperimentSpec {
  std::string dist_spec = "uniform:0.5,1.5";
  std::uint64_t seed = 20250811;
  std::int64_t steps = 2'000'000;
  std::int64_t burn_in = 100'000;
  std::int64_t horizon_cap = 1'000'000;
  std::vector<std::int64_t> j_grid = {16, 32, 64, 128, 256, 512, 1024};
  std::vector<std::int64_t> n_list = {4096};
  std::int64_t replicates = 50;
  std::string out_dir = "out";

  SpacingDistribution distribution() const { return parse_distribution(dist_spec); }

  /// All problems reported together, not just the first.
  std::vector<std::string> validate() const {
    std::vector<std::string> errors;
    if (steps < 1) errors.push_back("steps must be >= 1");
    if (burn_in < 0) errors.push_back("burn-in must be >= 0");
    if (burn_in >= steps) errors.push_back("burn-in must be smaller than steps");
    if (horizon_cap < 1) errors.push_back("horizon-cap must be >= 1");
    if (replicates < 1) errors.push_back("replicates must be >= 1");
    if (j_grid.empty()) errors.push_back("j-grid must be nonempty");
    for (auto j : j_grid)
      if (j < 0) errors.push_back("j-grid entries must be >= 0");
    for (auto n : n_list)
      if (n < 1) errors.push_back("n entries must be >= 1");
    try {
      (void)parse_distribution(dist_spec);
    } catch (const std::exception& e) {
      errors.push_back(e.what());
    }
    return errors;
  }
};

/// Rng stream ids under one seed; replicate k owns streams
/// kReplicateBase + kReplicateStride*k + offset.
namespace streams {
inline constexpr std::uint64_t kChain = 0;
inline constexpr std::uint64_t kTail = 1;
inline constexpr std::uint64_t kResample = 2;
inline constexpr std::uint64_t kPicks = 3;
inline constexpr std::uint64_t kReplicateBase = 1000;
inline constexpr std::uint64_t kReplicateStride = 8;
inline constexpr std::uint64_t kQBase = 0x51000000;
inline constexpr std::uint64_t kCbmScaling = 0xCC000000;
inline constexpr std::uint64_t kCbmMeeting = 0xCD000000;
inline constexpr std::uint64_t kCbmPoints = 0xCE000000;
}  // namespace streams

struct Verdict {
  std::string id;
  bool pass = false;
  std::string detail;
  bool informational = false;
};

inline std::string verdict_line(const Verdict& v) {
  std::string tag = v.informational ? "INFO" : (v.pass ? "PASS" : "FAIL");
  return "[" + v.id + "] " + tag + "  " + v.detail;
}

/// Acceptance thresholds, fixed here once for the test suite and the CLI.
namespace accept {
inline constexpr double kSlopeLo = -0.62;
inline constexpr double kSlopeHi = -0.40;
inline constexpr double kR2Min = 0.98;
inline constexpr double kTailRuntimeSeconds = 300.0;
inline constexpr std::array<std::int64_t, 2> kRateJs = {256, 1024};
inline constexpr double kRateTol = 0.20;
inline constexpr std::int64_t kBlockBurnIn = 200'000;
inline constexpr std::int64_t kBlockInstances = 1000;
inline constexpr std::int64_t kBlockGapSteps = 150;
inline constexpr std::array<std::int64_t, 3> kBlockKs = {100, 400, 1600};
inline constexpr double kExactTol = 1e-9;
inline constexpr double kSpreadGrowthMax = 2.4;
inline constexpr std::int64_t kSpacingSampleSize = 10'000;
inline constexpr std::int64_t kBoundarySampleSize = 2'000;
inline constexpr double kKsAlpha = 0.01;
inline constexpr std::array<std::int64_t, 3> kEnvelopeJs = {64, 256, 1024};
inline constexpr std::array<double, 3> kEnvelopeYs = {1.0, 2.0, 4.0};
inline constexpr double kEnvelopeFloorY = 0.01;
inline constexpr double kEnvelopeFactor = 1.5;
inline constexpr std::int64_t kQReplicates = 200'000;
inline constexpr std::array<std::int64_t, 2> kGoodnessJs = {64, 256};
inline constexpr std::array<double, 2> kGoodnessYs = {2.0, 4.0};
inline constexpr std::int64_t kGoodnessSequences = 10'000;
inline constexpr std::int64_t kGoodnessInner = 400;
inline constexpr std::int64_t kCoalescenceSteps = 10'000;
inline constexpr double kDensityScalingTol = 0.05;
inline constexpr std::array<double, 3> kDensityTimes = {1.0, 2.0, 4.0};
inline constexpr double kMeetingSeMultiple = 3.0;
inline constexpr std::int64_t kCompareN = 4096;
inline constexpr std::int64_t kCompareReplicates = 50;
inline constexpr double kIntensityTol = 0.15;
inline constexpr std::int64_t kStructuralSteps = 1'000'000;
inline constexpr double kRho1Analytic = 0.5641895835477563;  // 1/sqrt(pi), cross-check only
}  // namespace accept

// ---------------------------------------------------------------------------
// Tail study (criteria 1 and 2)
// ---------------------------------------------------------------------------

struct TailStudy {
  TailEstimate tail;
  PowerFit fit;
  double sigma = 0.0;
  double runtime_seconds = 0.0;
  std::int64_t censored_steps = 0;
  std::vector<Verdict> verdicts;
};

inline TailStudy run_tail_study(const ExperimentSpec& spec, const Rho1Estimate& rho1_est) {
  const auto dist = spec.distribution();
  Simulation<SpacingDistribution> sim(iid_start(Rng(spec.seed, streams::kTail)), dist,
                                      Rng(spec.seed, streams::kChain), spec.horizon_cap);
  TailStudy out;
  out.sigma = dist.sigma();

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<WaveRecord> records = sim.run_collect(spec.steps);
  for (const auto& rec : records)
    if (rec.censored) ++out.censored_steps;
  out.tail = wave_tail(records, spec.j_grid, spec.burn_in);
  out.fit = fit_exponent(out.tail, spec.j_grid.front(), spec.j_grid.back());
  out.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  {
    std::ostringstream d;
    d << "slope=" << out.fit.slope << " (band [" << accept::kSlopeLo << ", "
      << accept::kSlopeHi << "]), r2=" << out.fit.r2 << " (min " << accept::kR2Min
      << "), runtime=" << out.runtime_seconds << "s";
    const bool pass = out.fit.slope >= accept::kSlopeLo && out.fit.slope <= accept::kSlopeHi &&
                      out.fit.r2 >= accept::kR2Min &&
                      out.runtime_seconds <= accept::kTailRuntimeSeconds;
    out.verdicts.push_back({"C1", pass, "tail exponent: " + d.str()});
  }
  {
    bool pass = true;
    std::ostringstream d;
    d << "rho1=" << rho1_est.value << ";";
    for (std::int64_t j : accept::kRateJs) {
      double rho = 0.0;
      bool found = false;
      for (std::size_t k = 0; k < out.tail.j_grid.size(); ++k) {
        if (out.tail.j_grid[k] == j) {
          rho = out.tail.rho_hat[k];
          found = true;
        }
      }
      if (!found) {
        pass = false;
        d << " j=" << j << " missing from grid;";
        continue;
      }
      const double scaled = rho * std::sqrt(static_cast<double>(j)) * out.sigma;
      const double rel = std::abs(scaled - rho1_est.value) / rho1_est.value;
      pass = pass && rel <= accept::kRateTol;
      d << " j=" << j << ": rho*sqrt(j)*sigma=" << scaled << " (rel dev " << rel << ");";
    }
    out.verdicts.push_back({"C2", pass, "rate constant vs CBM: " + d.str()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Block study (criteria 3, 4, 5)
// ---------------------------------------------------------------------------

struct BlockStudy {
  std::vector<BlockWalkComparison> instances;
  std::int64_t stated_violations = 0;    // against (c+ - c-) * bad_count
  std::int64_t relaxed_violations = 0;   // against (2c+ - c-) * bad_count
  std::map<std::int64_t, double> mean_abs_diff;  // per k
  SpacingSample interior;
  SpacingSample boundary;
  std::vector<Verdict> verdicts;
};

inline BlockStudy run_block_study(const ExperimentSpec& spec) {
  const auto dist = spec.distribution();
  Simulation<SpacingDistribution> sim(iid_start(Rng(spec.seed, streams::kTail)), dist,
                                      Rng(spec.seed, streams::kChain), spec.horizon_cap);
  Rng resample(spec.seed, streams::kResample);
  Rng picks(spec.seed, streams::kPicks);
  BlockStudy out;

  for (std::int64_t t = 0; t < accept::kBlockBurnIn; ++t) sim.step_once();

  std::map<std::int64_t, double> abs_sum;
  std::map<std::int64_t, std::int64_t> abs_n;
  for (std::int64_t i = 0; i < accept::kBlockInstances; ++i) {
    for (std::int64_t s = 0; s < accept::kBlockGapSteps; ++s) sim.step_once();
    const std::int64_t k = accept::kBlockKs[static_cast<std::size_t>(i % 3)];
    auto cmp = block_walk_compare(sim.config(), dist, k, resample, accept::kExactTol);
    if (!cmp.within_bound) ++out.stated_violations;
    if (!cmp.within_relaxed) ++out.relaxed_violations;
    abs_sum[k] += std::abs(cmp.x_k - cmp.s_k);
    abs_n[k] += 1;
    out.instances.push_back(cmp);
  }
  for (const auto& [k, sum] : abs_sum)
    out.mean_abs_diff[k] = sum / static_cast<double>(abs_n[k]);

  {
    std::ostringstream d;
    d << out.stated_violations << "/" << accept::kBlockInstances
      << " instances violate |X_k - S_k| <= (c+ - c-)*bad (tol " << accept::kExactTol << ")"
      << "; dynamics-consistent bound (2c+ - c-)*bad violated on " << out.relaxed_violations;
    out.verdicts.push_back({"C3", out.stated_violations == 0, "block inequality: " + d.str()});
  }
  {
    bool pass = true;
    std::ostringstream d;
    double prev = 0.0;
    bool first = true;
    for (std::int64_t k : accept::kBlockKs) {
      const double m = out.mean_abs_diff[k];
      d << " k=" << k << ": mean|X-S|=" << m << ";";
      if (!first) {
        const double growth = m / prev;
        d << " growth=" << growth << ";";
        pass = pass && growth <= accept::kSpreadGrowthMax;
      }
      prev = m;
      first = false;
    }
    out.verdicts.push_back({"C4", pass, "spread growth per quadrupling:" + d.str()});
  }

  SpacingSampleOptions interior_opt;
  interior_opt.target = accept::kSpacingSampleSize;
  interior_opt.gap_steps = 48;
  interior_opt.rank_lo = 64;
  interior_opt.rank_hi = 512;
  out.interior = collect_conditional_spacings(sim, interior_opt, picks);

  while (static_cast<std::int64_t>(out.boundary.values.size()) < accept::kBoundarySampleSize) {
    for (std::int64_t s = 0; s < 48; ++s) sim.step_once();
    collect_boundary_spacings(sim.config(), dist, 64, 512, out.boundary.values);
  }
  out.boundary.ks =
      ks_one_sample(out.boundary.values, [&dist](double x) { return dist.cdf(x); });

  {
    const bool pass = out.interior.ks.p_value >= accept::kKsAlpha &&
                      out.boundary.ks.p_value < accept::kKsAlpha;
    std::ostringstream d;
    d << "within-block spacings vs mu: KS D=" << out.interior.ks.d
      << " p=" << out.interior.ks.p_value << " (n=" << out.interior.values.size()
      << "); boundary control p=" << out.boundary.ks.p_value << " (must reject)";
    out.verdicts.push_back({"C5", pass, d.str()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Walk-maximum study (criteria 6, 7)
// ---------------------------------------------------------------------------

struct QStudy {
  std::vector<QEstimate> table;  // all (j, y) pairs evaluated
  std::vector<GoodnessEstimate> goodness;
  std::vector<Verdict> verdicts;
};

inline QStudy run_q_study(const ExperimentSpec& spec) {
  const auto dist = spec.distribution();
  QStudy out;

  std::vector<std::pair<std::int64_t, double>> grid;
  for (std::int64_t j : accept::kEnvelopeJs) {
    grid.emplace_back(j, accept::kEnvelopeFloorY);
    for (double y : accept::kEnvelopeYs) grid.emplace_back(j, y);
  }
  out.table.resize(grid.size());
  parallel_tasks(static_cast<std::int64_t>(grid.size()), [&](std::int64_t i) {
    Rng rng(spec.seed, streams::kQBase + static_cast<std::uint64_t>(i));
    out.table[static_cast<std::size_t>(i)] =
        q_mc(grid[static_cast<std::size_t>(i)].first, grid[static_cast<std::size_t>(i)].second,
             dist, accept::kQReplicates, rng);
  });
  auto q_at = [&](std::int64_t j, double y) -> const QEstimate& {
    for (const auto& e : out.table)
      if (e.j == j && e.y == y) return e;
    throw std::logic_error("q table miss");
  };

  {
    bool pass = true;
    std::ostringstream d;
    for (double y : accept::kEnvelopeYs) {
      std::vector<double> env;
      for (std::int64_t j : accept::kEnvelopeJs) {
        const double floor_q = q_at(j, accept::kEnvelopeFloorY).q_hat;
        env.push_back((q_at(j, y).q_hat - floor_q) *
                      std::sqrt(static_cast<double>(j)) / y);
      }
      const double ratio = env.back() / env.front();
      pass = pass && ratio <= accept::kEnvelopeFactor && ratio >= 1.0 / accept::kEnvelopeFactor;
      d << " y=" << y << ": env(64)=" << env.front() << " env(1024)=" << env.back()
        << " ratio=" << ratio << ";";
    }
    out.verdicts.push_back(
        {"C6", pass, "walk-maximum envelope (q - floor)*sqrt(j)/y stability:" + d.str()});
  }

  {
    bool pass = true;
    std::ostringstream d;
    std::uint64_t combo = 0;
    for (std::int64_t j : accept::kGoodnessJs) {
      for (double y : accept::kGoodnessYs) {
        Rng qref_rng(spec.seed, streams::kQBase + 0x1000 + combo);
        const double q_ref = q_mc(j, y, dist, accept::kQReplicates, qref_rng).q_hat;
        const std::int64_t chunk = 250;
        const std::int64_t tasks = accept::kGoodnessSequences / chunk;
        std::vector<GoodnessEstimate> parts(static_cast<std::size_t>(tasks));
        parallel_tasks(tasks, [&](std::int64_t task) {
          Rng rng(spec.seed,
                  streams::kQBase + 0x2000 + combo * 0x100 + static_cast<std::uint64_t>(task));
          parts[static_cast<std::size_t>(task)] =
              goodness_rate(j, y, dist, chunk, accept::kGoodnessInner, rng, q_ref);
        });
        GoodnessEstimate merged;
        merged.j = j;
        merged.y = y;
        merged.q_ref = q_ref;
        for (const auto& p : parts) {
          merged.not_good_count += p.not_good_count;
          merged.sequences += p.sequences;
        }
        merged.not_good_rate =
            static_cast<double>(merged.not_good_count) / static_cast<double>(merged.sequences);
        merged.se = std::sqrt(merged.not_good_rate * (1.0 - merged.not_good_rate) /
                              static_cast<double>(merged.sequences));
        const double limit = 0.5 + accept::kMeetingSeMultiple * merged.se;
        pass = pass && merged.not_good_rate <= limit;
        d << " (j=" << j << ",y=" << y << "): rate=" << merged.not_good_rate
          << " limit=" << limit << ";";
        out.goodness.push_back(merged);
        ++combo;
      }
    }
    out.verdicts.push_back({"C7", pass, "not-(j,y)-good fraction <= 1/2 + 3se:" + d.str()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// CBM study (criterion 9, rho1 oracle)
// ---------------------------------------------------------------------------

struct CbmStudy {
  Rho1Estimate rho1;
  std::vector<DensityEstimate> scaling;  // fixed eps, t in {1, 2, 4}
  MeetingProbe meeting;
  std::vector<Verdict> verdicts;
};

inline Rho1Estimate compute_rho1(std::uint64_t seed) {
  Rho1Options opt;
  opt.density.domain_length = 24.0;
  opt.density.replicates = 400;
  return rho1(opt, seed);
}

inline CbmStudy run_cbm_study(const ExperimentSpec& spec,
                              std::optional<Rho1Estimate> precomputed = std::nullopt) {
  CbmStudy out;
  out.rho1 = precomputed ? *precomputed : compute_rho1(spec.seed);

  DensityOptions scaling_opt;
  scaling_opt.domain_length = 40.0;
  scaling_opt.replicates = 300;
  std::uint64_t stream = streams::kCbmScaling;
  for (double t : accept::kDensityTimes) {
    out.scaling.push_back(estimate_density(0.02, t, scaling_opt, spec.seed, stream));
    stream += 0x10000ULL;
  }
  out.meeting =
      no_meet_probability_mc(1.0, 1.0, 10'000, 1e-4, spec.seed, streams::kCbmMeeting);

  {
    const double base = out.scaling.front().rho_hat * std::sqrt(out.scaling.front().t);
    double max_rel = 0.0;
    std::ostringstream d;
    for (const auto& e : out.scaling) {
      const double scaled = e.rho_hat * std::sqrt(e.t);
      max_rel = std::max(max_rel, std::abs(scaled - base) / base);
      d << " t=" << e.t << ": rho*sqrt(t)=" << scaled << ";";
    }
    const double meet_dev = std::abs(out.meeting.p_hat - out.meeting.p_exact);
    const double meet_lim = accept::kMeetingSeMultiple * out.meeting.se;
    const bool pass = max_rel <= accept::kDensityScalingTol && meet_dev <= meet_lim;
    d << " max rel dev=" << max_rel << "; no-meet p_hat=" << out.meeting.p_hat
      << " vs erf=" << out.meeting.p_exact << " (|diff|=" << meet_dev << " <= " << meet_lim
      << ")";
    out.verdicts.push_back({"C9", pass, "CBM density scaling and meeting oracle:" + d.str()});
  }
  {
    const double rel = std::abs(out.rho1.value * std::sqrt(3.14159265358979323846) - 1.0);
    std::ostringstream d;
    d << "rho1=" << out.rho1.value << " +- " << out.rho1.se
      << "; rho1*sqrt(pi)=" << out.rho1.value * std::sqrt(3.14159265358979323846)
      << " (analytic cross-check, dev " << rel << ")";
    Verdict v{"C9-rho1", rel <= 0.03, d.str()};
    v.informational = true;
    out.verdicts.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Compare study (criteria 8, 10)
// ---------------------------------------------------------------------------

struct CompareStudy {
  std::int64_t steps_checked = 0;
  std::int64_t censored_steps = 0;
  std::int64_t identity_failures = 0;
  std::string first_failure;
  std::vector<PointProcessSample> zeta;        // one per replicate
  std::vector<PointProcessSample> cbm_points;  // one per replicate
  KsResult nn_ks;
  double zeta_intensity = 0.0;
  double cbm_intensity = 0.0;
  std::vector<Verdict> verdicts;
};

/// Coalescence identity: the first common jump of G(t-1, .) and G(t, .)
/// is the wave length by position, checked exactly on every step.
inline void run_coalescence_identity(const ExperimentSpec& spec, CompareStudy& out) {
  const auto dist = spec.distribution();
  Simulation<SpacingDistribution> sim(iid_start(Rng(spec.seed, streams::kTail)), dist,
                                      Rng(spec.seed, streams::kChain), spec.horizon_cap);
  StepHooks hooks;
  std::vector<double> old_prefix;
  hooks.old_prefix = &old_prefix;

  for (std::int64_t t = 1; t <= accept::kCoalescenceSteps; ++t) {
    const WaveRecord rec = sim.step_once(&hooks);
    ++out.steps_checked;
    auto& q = sim.config();
    if (rec.censored) {
      ++out.censored_steps;
      // fresh tail shares no jumps with the old graph: expect no coalescence
      const std::int64_t probe = std::min<std::int64_t>(4096, rec.rank_len);
      auto post = q.prefix_positions(probe, dist);
      const double x_hi = post.back();
      std::vector<double> prev_jumps{0.0};
      for (double x : old_prefix) {
        if (x > x_hi) break;
        prev_jumps.push_back(x);
      }
      GCurve prev{rec.t - 1, CountingFunction::from_positions(std::move(prev_jumps), x_hi)};
      GCurve curr{rec.t, CountingFunction::from_positions(std::move(post), x_hi)};
      const auto res = coalescence_position(prev, curr);
      if (res.found) {
        ++out.identity_failures;
        if (out.first_failure.empty())
          out.first_failure = "censored step " + std::to_string(rec.t) +
                              " reported a coalescence at " + fmt_g17(res.position);
      }
      continue;
    }
    const std::int64_t w = rec.rank_len;
    q.ensure(w + 2, dist);
    std::vector<double> prev_jumps;
    prev_jumps.reserve(old_prefix.size() + 3);
    prev_jumps.push_back(0.0);
    prev_jumps.insert(prev_jumps.end(), old_prefix.begin(), old_prefix.end());
    prev_jumps.push_back(q.position(w + 1));  // x_{W+2}(t-1)
    prev_jumps.push_back(q.position(w + 2));  // x_{W+3}(t-1)
    const double x_hi = prev_jumps.back();
    GCurve prev{rec.t - 1, CountingFunction::from_positions(std::move(prev_jumps), x_hi)};
    GCurve curr{rec.t, CountingFunction::from_positions(q.prefix_positions(w + 2, dist), x_hi)};
    const auto res = coalescence_position(prev, curr);
    const bool ok = res.found && res.position == rec.pos_len &&
                    agree_beyond(prev, curr, res.position);
    if (!ok) {
      ++out.identity_failures;
      if (out.first_failure.empty())
        out.first_failure = "step " + std::to_string(rec.t) + ": coalescence " +
                            (res.found ? fmt_g17(res.position) : std::string("not found")) +
                            " vs L(t)=" + fmt_g17(rec.pos_len);
    }
  }
}

inline CompareStudy run_compare_study(const ExperimentSpec& spec) {
  const auto dist = spec.distribution();
  const double sigma = dist.sigma();
  CompareStudy out;

  run_coalescence_identity(spec, out);
  {
    std::ostringstream d;
    d << out.identity_failures << " failures on " << out.steps_checked << " steps ("
      << out.censored_steps << " censored)";
    if (!out.first_failure.empty()) d << "; first: " << out.first_failure;
    out.verdicts.push_back(
        {"C8", out.identity_failures == 0, "coalescence position = L(t): " + d.str()});
  }

  const double n = static_cast<double>(accept::kCompareN);
  const double y_half = 6.0;
  const std::int64_t reps = accept::kCompareReplicates;
  const std::int64_t burn = 4000;
  const std::int64_t total = 8000;
  const auto window_steps = static_cast<std::int64_t>(std::ceil(y_half * sigma * std::sqrt(n)));

  out.zeta.resize(static_cast<std::size_t>(reps));
  parallel_tasks(reps, [&](std::int64_t k) {
    const std::uint64_t base =
        streams::kReplicateBase + streams::kReplicateStride * static_cast<std::uint64_t>(k);
    Simulation<SpacingDistribution> sim(iid_start(Rng(spec.seed, base + 1)), dist,
                                        Rng(spec.seed, base + 0), spec.horizon_cap);
    Rng pick(spec.seed, base + 2);
    auto records = sim.run_collect(total);
    const std::int64_t t_lo = burn;
    const std::int64_t t_hi = total - window_steps;
    const std::int64_t t_ref =
        t_lo + static_cast<std::int64_t>(pick.uniform_index(
                   static_cast<std::uint64_t>(t_hi - t_lo + 1)));
    auto sample = wave_time_points(records, n, sigma, t_ref, -y_half, y_half);
    sample.replicate = static_cast<int>(k);
    out.zeta[static_cast<std::size_t>(k)] = std::move(sample);
  });

  out.cbm_points.resize(static_cast<std::size_t>(reps));
  parallel_tasks(reps, [&](std::int64_t k) {
    Rng rng(spec.seed, streams::kCbmPoints + static_cast<std::uint64_t>(k));
    ParticleSystem sys = ParticleSystem::grid(0.0, 24.0, 0.01, 1e-4);
    sys.evolve(1.0, rng);
    out.cbm_points[static_cast<std::size_t>(k)] = sys.sample_window(4.0, 20.0, static_cast<int>(k));
  });

  std::vector<double> zeta_nn, cbm_nn;
  double zeta_count = 0.0, cbm_count = 0.0;
  for (const auto& s : out.zeta) {
    zeta_count += static_cast<double>(s.points.size());
    for (double v : nearest_neighbor_spacings(s.points)) zeta_nn.push_back(v);
  }
  for (const auto& s : out.cbm_points) {
    cbm_count += static_cast<double>(s.points.size());
    for (double v : nearest_neighbor_spacings(s.points)) cbm_nn.push_back(v);
  }
  out.zeta_intensity = zeta_count / (2.0 * y_half * static_cast<double>(reps));
  out.cbm_intensity = cbm_count / (16.0 * static_cast<double>(reps));
  out.nn_ks = ks_two_sample(zeta_nn, cbm_nn);

  {
    const double ratio = out.zeta_intensity / out.cbm_intensity;
    const bool pass = out.nn_ks.p_value >= accept::kKsAlpha &&
                      std::abs(ratio - 1.0) <= accept::kIntensityTol;
    std::ostringstream d;
    d << "NN-spacing KS D=" << out.nn_ks.d << " p=" << out.nn_ks.p_value << " (n="
      << out.nn_ks.n1 << "," << out.nn_ks.n2 << "); intensity zeta=" << out.zeta_intensity
      << " vs CBM=" << out.cbm_intensity << " (ratio " << ratio << ")";
    out.verdicts.push_back({"C10", pass, "wave points vs CBM time-1 clusters: " + d.str()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural study (criterion 11)
// ---------------------------------------------------------------------------

struct StructuralStudy {
  std::int64_t steps = 0;
  std::int64_t deep_checks = 0;
  std::int64_t moves_verified = 0;
  std::int64_t g_evaluations = 0;
  std::int64_t censored_steps = 0;
  std::int64_t violations = 0;
  std::string first_failure;
  std::vector<Verdict> verdicts;
};

inline StructuralStudy run_structural_study(const ExperimentSpec& spec,
                                            std::int64_t steps = accept::kStructuralSteps) {
  const auto dist = spec.distribution();
  Simulation<SpacingDistribution> sim(iid_start(Rng(spec.seed, streams::kTail)), dist,
                                      Rng(spec.seed, streams::kChain), spec.horizon_cap);
  // staggered individuals: one served early, one mid-run, one alive at the end
  const std::vector<std::int64_t> services = {steps / 4, (steps * 3) / 5, steps + steps / 20};
  for (std::int64_t s : services) sim.track(s);

  StructuralStudy out;
  out.steps = steps;
  const double tol = accept::kExactTol;
  StepHooks hooks;
  hooks.validate = true;
  hooks.tolerance = tol;

  auto fail = [&](std::int64_t t, const std::string& what) {
    ++out.violations;
    if (out.first_failure.empty())
      out.first_failure = "step " + std::to_string(t) + ": " + what;
  };

  std::vector<double> pre;  // deep-check snapshot of pre-step positions
  std::vector<std::size_t> move_counts(services.size(), 0);

  for (std::int64_t t = 1; t <= steps; ++t) {
    const bool deep = (t % 256) == 0;
    if (deep) {
      auto& q = sim.config();
      const auto depth = std::min<std::int64_t>(3000, std::max<std::int64_t>(q.horizon(), 64));
      pre = q.prefix_positions(depth, dist);
    }
    WaveRecord rec;
    try {
      rec = sim.step_once(&hooks);
    } catch (const std::logic_error& e) {
      fail(t, e.what());
      break;  // the configuration is inconsistent after a failed step
    }
    auto& q = sim.config();
    if (rec.censored) {
      ++out.censored_steps;
      continue;
    }
    if (rec.rank_len < 1) fail(t, "wave length below 1");
    if (q.position(0) != 0.0 || !(q.position(1) > 0.0)) fail(t, "head not at 0");
    if (q.position(rec.rank_len) != rec.pos_len)
      fail(t, "unmoved boundary customer changed position");
    if (deep) {
      ++out.deep_checks;
      const auto limit = static_cast<std::int64_t>(pre.size()) - 1;
      for (std::int64_t i = 1; i < limit; ++i) {
        const double post = q.position(i);
        if (i >= rec.rank_len) {
          if (post != pre[static_cast<std::size_t>(i) + 1]) {
            fail(t, "rank " + std::to_string(i) + " beyond the wave moved");
            break;
          }
        } else {
          if (!(post < pre[static_cast<std::size_t>(i) + 1])) {
            fail(t, "rank " + std::to_string(i) + " did not move forward");
            break;
          }
        }
        const double sp = q.spacing(i);
        if (!(sp > 0.0 && sp <= 2.0 * dist.c_plus() + tol)) {
          fail(t, "spacing outside (0, 2c+] at rank " + std::to_string(i));
          break;
        }
      }
    }
    // diagonal identity at every recorded move of every tracked individual
    const auto trajectories = sim.trajectories();
    for (std::size_t ti = 0; ti < trajectories.size(); ++ti) {
      const auto& tr = trajectories[ti];
      for (std::size_t mi = move_counts[ti]; mi < tr.moves.size(); ++mi) {
        const auto& [tu, xu] = tr.moves[mi];
        const std::int64_t rank = tr.s - tu;
        ++out.moves_verified;
        if (rank > 0) {
          // F_t(x_u) must count exactly `rank` customers at or before x_u
          if (q.position(rank) != xu || !(q.spacing(rank + 1) > 0.0) ||
              !(q.position(rank - 1) < xu)) {
            fail(tu, "diagonal identity bookkeeping off for individual " + std::to_string(tr.s));
          }
          if (out.moves_verified % 64 == 0) {
            auto f = counting_function(q, dist, xu + 2.0 * dist.c_plus());
            ++out.g_evaluations;
            const double g = static_cast<double>(tu) + f.value(xu);
            if (std::abs(xu + g - static_cast<double>(tr.s)) > tol)
              fail(tu, "x_u + G(t_u, x_u) != s for individual " + std::to_string(tr.s));
          }
        } else if (xu != 0.0) {
          fail(tu, "service move not at the head position");
        }
      }
      move_counts[ti] = tr.moves.size();
    }
  }

  std::ostringstream d;
  d << out.violations << " violations on " << out.steps << " steps (" << out.censored_steps
    << " censored); " << out.deep_checks << " deep window checks, " << out.moves_verified
    << " tracked moves, " << out.g_evaluations << " full G evaluations";
  if (!out.first_failure.empty()) d << "; first: " << out.first_failure;
  out.verdicts.push_back({"C11", out.violations == 0, "structural suite: " + d.str()});
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory study (no gating criterion; mirrors the scaling predictions)
// ---------------------------------------------------------------------------

struct TrajectoryStudy {
  std::int64_t n = 0;
  std::int64_t t_ref = 0;
  std::int64_t tracked_service = 0;
  TrajectoryRecord trajectory;
  PlanarPointSample points;
  double mean_move_gap = 0.0;     // raw steps between moves
  double predicted_gap = 0.0;     // sigma*sqrt(n)/rho1
  std::vector<Verdict> verdicts;
};

inline TrajectoryStudy run_trajectory_study(const ExperimentSpec& spec, std::int64_t n,
                                            const Rho1Estimate& rho1_est) {
  const auto dist = spec.distribution();
  const double sigma = dist.sigma();
  Simulation<SpacingDistribution> sim(iid_start(Rng(spec.seed, streams::kTail)), dist,
                                      Rng(spec.seed, streams::kChain), spec.horizon_cap);
  TrajectoryStudy out;
  out.n = n;
  const double scale = sigma * std::sqrt(static_cast<double>(n));
  const auto burn = static_cast<std::int64_t>(std::ceil(150.0 * scale));
  const auto window = static_cast<std::int64_t>(std::ceil(40.0 * scale));
  for (std::int64_t t = 0; t < burn; ++t) sim.step_once();
  out.t_ref = sim.time();

  auto f = counting_function(sim.config(), dist, static_cast<double>(n));
  const std::int64_t rank = f.rank_at(static_cast<double>(n));  // nearest at or below n
  out.tracked_service = out.t_ref + rank;
  sim.track(out.tracked_service);
  const std::int64_t t_end = std::min(out.t_ref + window, out.tracked_service);
  for (std::int64_t t = sim.time(); t < t_end; ++t) sim.step_once();

  out.trajectory = TrajectoryRecord(sim.trajectories().front());
  out.points = trajectory_points(out.trajectory, static_cast<double>(n), out.t_ref, t_end);

  if (out.trajectory.moves.size() >= 2) {
    const auto first = out.trajectory.moves.front().first;
    const auto last = out.trajectory.moves.back().first;
    out.mean_move_gap = static_cast<double>(last - first) /
                        static_cast<double>(out.trajectory.moves.size() - 1);
  }
  out.predicted_gap = scale / rho1_est.value;

  bool monotone = true;
  double prev = -1e300;
  for (const auto& [u, v] : out.points.points) {
    if (v < prev) monotone = false;
    prev = v;
  }
  std::ostringstream d;
  d << "n=" << n << ": " << out.points.points.size() << " moves in window; mean gap "
    << out.mean_move_gap << " steps vs sigma*sqrt(n)/rho1=" << out.predicted_gap
    << "; normalized positions monotone=" << (monotone ? "yes" : "no");
  Verdict v{"trajectory", monotone, d.str()};
  v.informational = true;
  out.verdicts.push_back(v);
  return out;
}

}  // namespace waveq
