#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "waveq/representation.hpp"

using namespace waveq;

namespace {
SpacingDistribution uniform_law() { return SpacingDistribution::uniform(0.5, 1.5); }
}  // namespace

TEST_CASE("centered counting function of the integer configuration") {
  auto f = CountingFunction::from_positions({0, 1, 2, 3, 4}, 4.0);
  CHECK(f.value(2.5) == -0.5);   // max{k: x_k <= 2.5} = 2
  CHECK(f.value(0.0) == 0.0);    // x_0 = 0 counts, minus 0
  CHECK(f.value(3.0) == 0.0);
  CHECK(f.rank_at(2.999) == 2);
  CHECK(f.rank_at(3.0) == 3);
}

TEST_CASE("counting function reconstructs the configuration exactly") {
  auto dist = uniform_law();
  Simulation<SpacingDistribution> sim(iid_start(Rng(21, 1)), dist, Rng(21, 0));
  for (int t = 0; t < 50; ++t) sim.step_once();
  auto& q = sim.config();
  auto f = counting_function(q, dist, 40.0);
  REQUIRE(f.jumps.size() >= 2);
  for (std::size_t k = 0; k < f.jumps.size(); ++k)
    CHECK(f.jumps[k] == q.position(static_cast<std::int64_t>(k)));
}

TEST_CASE("consecutive G graphs coalesce exactly at the wave position") {
  auto dist = uniform_law();
  Simulation<SpacingDistribution> sim(iid_start(Rng(22, 1)), dist, Rng(22, 0));
  StepHooks hooks;
  std::vector<double> old_prefix;
  hooks.old_prefix = &old_prefix;
  int checked = 0;
  for (int t = 1; t <= 300; ++t) {
    const WaveRecord rec = sim.step_once(&hooks);
    if (rec.censored) continue;
    auto& q = sim.config();
    const std::int64_t w = rec.rank_len;
    q.ensure(w + 2, dist);
    std::vector<double> prev_jumps{0.0};
    prev_jumps.insert(prev_jumps.end(), old_prefix.begin(), old_prefix.end());
    prev_jumps.push_back(q.position(w + 1));
    prev_jumps.push_back(q.position(w + 2));
    const double hi = prev_jumps.back();
    GCurve prev{rec.t - 1, CountingFunction::from_positions(std::move(prev_jumps), hi)};
    GCurve curr{rec.t, CountingFunction::from_positions(q.prefix_positions(w + 2, dist), hi)};
    const auto res = coalescence_position(prev, curr);
    REQUIRE(res.found);
    REQUIRE(res.position == rec.pos_len);
    REQUIRE(agree_beyond(prev, curr, res.position));
    ++checked;
  }
  CHECK(checked >= 299);
}

TEST_CASE("wave-time point process normalizes and filters by threshold") {
  std::vector<WaveRecord> records = {
      {100, 5, 50.0, false}, {110, 2, 8.0, false}, {120, 9, 90.0, false}, {130, 1, 2.0, true}};
  auto sample = wave_time_points(records, 10.0, 1.0, 110, -10.0, 10.0);
  // pos_len > 10 at t = 100, 120; censored at 130 counts as exceeding
  REQUIRE(sample.points.size() == 3);
  const double scale = std::sqrt(10.0);
  CHECK(sample.points[0] == Catch::Approx(-10.0 / scale));
  CHECK(sample.points[1] == Catch::Approx(10.0 / scale));
  CHECK(sample.points[2] == Catch::Approx(20.0 / scale));

  auto none = wave_time_points(records, 1e9, 1.0, 110, -10.0, 10.0);
  CHECK(none.points.empty());

  auto by_rank = wave_time_points(records, 4.0, 1.0, 110, -10.0, 10.0, true);
  CHECK(by_rank.points.size() == 3);  // rank_len > 4 at t = 100, 120; censored at 130
}

TEST_CASE("trajectory points are nonnegative and increasing for a below-n start") {
  TrajectoryRecord traj;
  traj.s = 1000;
  traj.moves = {{40, 95.0}, {52, 80.0}, {70, 61.0}};
  auto pts = trajectory_points(traj, 100.0, 30, 80);
  REQUIRE(pts.points.size() == 3);
  double prev = -1.0;
  for (const auto& [tn, xn] : pts.points) {
    CHECK(xn >= 0.0);
    CHECK(xn > prev);
    prev = xn;
  }
  CHECK(pts.points[0].first == Catch::Approx(1.0));  // (40 - 30) / sqrt(100)
}

TEST_CASE("rescaled family members group by waves crossing position n") {
  auto dist = uniform_law();
  Simulation<SpacingDistribution> sim(iid_start(Rng(23, 1)), dist, Rng(23, 0));
  const double n = 64.0;
  const std::int64_t t_ref = 400;
  RescaledFamilyBuilder<SpacingDistribution> builder(n, t_ref, dist.sigma(), -4.0, 4.0, 2.0);
  std::int64_t boundary_waves = -1;  // first capture step always opens a member
  for (std::int64_t t = 1; t <= builder.last_step(); ++t) {
    const auto rec = sim.step_once();
    if (t >= builder.first_step() && !rec.censored && rec.pos_len > n) ++boundary_waves;
    builder.observe(sim, rec);
  }
  const auto fam = builder.family();
  REQUIRE(fam.members.size() >= 2);
  CHECK(static_cast<std::int64_t>(fam.members.size()) == boundary_waves + 1);
  CHECK(fam.pair_coalescence.size() == fam.members.size() - 1);
  for (double c : fam.pair_coalescence) CHECK(c > n);
  // members are distinct on [n, n*T_max]; consecutive inits are ordered
  auto inits = fam.init_values();
  for (std::size_t i = 1; i < inits.size(); ++i) CHECK(inits[i] > inits[i - 1]);
}

TEST_CASE("unit-scale members are the raw graphs re-anchored at t_ref") {
  auto dist = uniform_law();
  Simulation<SpacingDistribution> sim(iid_start(Rng(24, 1)), dist, Rng(24, 0));
  for (int t = 0; t < 20; ++t) sim.step_once();
  RescaledMember m;
  m.t_raw = 20;
  m.f = counting_function(sim.config(), dist, 12.0);
  const std::int64_t t_ref = 18;
  for (double x : {1.0, 2.5, 7.0}) {
    const double expect = 20.0 + m.f.value(x) - 18.0;
    CHECK(m.h(x, 1.0, t_ref) == Catch::Approx(expect).margin(1e-12));
  }
}

TEST_CASE("rescaled increments have the renewal-scaling variance") {
  auto dist = uniform_law();
  const double n = 256.0;
  const std::int64_t reps = 48;
  std::vector<double> increments;
  for (std::int64_t r = 0; r < reps; ++r) {
    Simulation<SpacingDistribution> sim(iid_start(Rng(1000 + r, 1)), dist, Rng(1000 + r, 0));
    for (int t = 0; t < 800; ++t) sim.step_once();
    auto f = counting_function(sim.config(), dist, 2.0 * n + 4.0);
    // H(y, 2) - H(y, 1) = (customers in (n, 2n] - n) / sqrt(n)
    const double count = static_cast<double>(f.rank_at(2.0 * n) - f.rank_at(n));
    increments.push_back((count - n) / std::sqrt(n));
  }
  double mean = 0.0, var = 0.0;
  for (double v : increments) mean += v;
  mean /= static_cast<double>(reps);
  for (double v : increments) var += (v - mean) * (v - mean);
  var /= static_cast<double>(reps - 1);
  const double sigma2 = dist.sigma() * dist.sigma();
  CHECK(var / sigma2 > 0.5);
  CHECK(var / sigma2 < 1.8);
}

TEST_CASE("nearest-neighbor spacings of interior points") {
  std::vector<double> pts = {0.0, 1.0, 3.0, 3.5, 7.0};
  auto nn = nearest_neighbor_spacings(pts);
  REQUIRE(nn.size() == 3);
  CHECK(nn[0] == 1.0);   // point 1.0: min(1, 2)
  CHECK(nn[1] == 0.5);   // point 3.0: min(2, 0.5)
  CHECK(nn[2] == 0.5);   // point 3.5: min(0.5, 3.5)
}
