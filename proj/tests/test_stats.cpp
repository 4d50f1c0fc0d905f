#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "waveq/stats.hpp"

using namespace waveq;

namespace {
SpacingDistribution uniform_law() { return SpacingDistribution::uniform(0.5, 1.5); }
SpacingDistribution two_point_law() { return SpacingDistribution::two_point(0.5, 1.5); }
}  // namespace

TEST_CASE("tail of a constant wave stream") {
  std::vector<WaveRecord> records;
  for (int t = 1; t <= 1000; ++t) records.push_back({t, 1, 1.5, false});
  auto est = wave_tail(records, {0, 1, 2, 8}, 0);
  CHECK(est.rho_hat[0] == 1.0);  // W >= 1 always
  for (std::size_t k = 1; k < est.rho_hat.size(); ++k) CHECK(est.rho_hat[k] == 0.0);
}

TEST_CASE("tail counts are integers, monotone, and censor-aware") {
  std::vector<WaveRecord> records;
  for (int t = 1; t <= 400; ++t)
    records.push_back({t, t % 7 + 1, 1.0 * (t % 7 + 1), (t % 50) == 0});
  auto est = wave_tail(records, {1, 2, 4, 6}, 100);
  CHECK(est.window == 300);
  for (std::size_t k = 0; k < est.j_grid.size(); ++k) {
    const double recon = est.rho_hat[k] * static_cast<double>(est.window);
    CHECK(recon == Catch::Approx(static_cast<double>(est.counts[k])).margin(1e-9));
    if (k > 0) CHECK(est.counts[k] <= est.counts[k - 1]);
  }
  // every censored record exceeds every threshold
  std::int64_t censored = 0;
  for (const auto& r : records)
    if (r.t > 100 && r.censored) ++censored;
  CHECK(est.counts.back() >= censored);
}

TEST_CASE("exact power law fits with slope -1/2 and r2 = 1") {
  TailEstimate est;
  for (std::int64_t j : {16, 32, 64, 128, 256, 512, 1024}) {
    est.j_grid.push_back(j);
    est.counts.push_back(1);
    est.rho_hat.push_back(std::pow(static_cast<double>(j), -0.5));
    est.se.push_back(0.0);
  }
  est.window = 1;
  auto fit = fit_exponent(est, 16, 1024);
  CHECK(fit.slope == Catch::Approx(-0.5).margin(1e-12));
  CHECK(fit.r2 == Catch::Approx(1.0).margin(1e-12));

  for (auto& r : est.rho_hat) r = 0.25;
  auto flat = fit_exponent(est, 16, 1024);
  CHECK(flat.slope == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("zero-count grid points shrink the fit window with a warning") {
  TailEstimate est;
  for (std::int64_t j : {16, 32, 64, 128}) {
    est.j_grid.push_back(j);
    est.counts.push_back(j <= 32 ? 5 : 0);
    est.rho_hat.push_back(j <= 32 ? 0.1 : 0.0);
    est.se.push_back(0.0);
  }
  est.window = 50;
  auto fit = fit_exponent(est, 16, 128);
  CHECK(fit.points_used == 2);
  CHECK_FALSE(fit.warnings.empty());
}

TEST_CASE("two-point q values by exhaustive enumeration") {
  auto dist = two_point_law();
  Rng rng(31, 0);
  auto q1 = q_mc(1, 1.0, dist, 10, rng);
  CHECK(q1.exact);
  CHECK(q1.q_hat == 1.0);  // S_1 in {-1, 0, 1}, all <= 1
  auto q2 = q_mc(1, 0.5, dist, 10, rng);
  CHECK(q2.q_hat == 0.75);  // only S_1 = +1 exceeds 0.5
  auto q3 = q_mc(2, 0.25, dist, 10, rng);
  CHECK(q3.q_hat == 0.625);  // 1/4 + 1/2 * 3/4
}

TEST_CASE("q short-circuits at the increment range bounds") {
  auto dist = uniform_law();
  Rng rng(32, 0);
  auto hi = q_mc(5, 5.0 * (dist.c_plus() - dist.c_minus()), dist, 10, rng);
  CHECK((hi.exact && hi.q_hat == 1.0));
  auto lo = q_mc(5, dist.c_minus() - dist.c_plus() - 0.001, dist, 10, rng);
  CHECK((lo.exact && lo.q_hat == 0.0));
}

TEST_CASE("q is monotone: nonincreasing in j, nondecreasing in y") {
  auto dist = two_point_law();
  Rng rng(33, 0);
  for (double y : {0.25, 0.5, 1.0, 2.0}) {
    double prev = 1.0;
    for (std::int64_t j : {1, 2, 3, 4, 5}) {
      const double q = q_mc(j, y, dist, 10, rng).q_hat;
      CHECK(q <= prev + 1e-15);
      prev = q;
    }
  }
  for (std::int64_t j : {2, 4}) {
    double prev = 0.0;
    for (double y : {-0.5, 0.0, 0.5, 1.0, 2.0}) {
      const double q = q_mc(j, y, dist, 10, rng).q_hat;
      CHECK(q >= prev - 1e-15);
      prev = q;
    }
  }
}

TEST_CASE("conditional walk maximum against the single-increment closed form") {
  auto dist = uniform_law();
  Rng rng(34, 0);
  for (double x1 : {0.6, 1.0, 1.4}) {
    for (double y : {-0.2, 0.1, 0.4}) {
      std::vector<double> x = {x1};
      auto est = q_given(1, y, x, dist, 40'000, rng);
      const double expect = dist.cdf(x1 + y);  // Pr(xi' <= x1 + y)
      CHECK(std::abs(est.q_hat - expect) <= 3.0 * est.se + 1e-3);
    }
  }
}

TEST_CASE("maximal spacing sequence dominates the unconditional walk probability") {
  auto dist = uniform_law();
  Rng rng(35, 0);
  const std::int64_t j = 16;
  const double y = 1.0;
  std::vector<double> x(j, dist.c_plus());
  auto cond = q_given(j, y, x, dist, 40'000, rng);
  auto uncond = q_mc(j, y, dist, 40'000, rng);
  CHECK(cond.q_hat >= uncond.q_hat - 3.0 * (cond.se + uncond.se));
}

TEST_CASE("averaging the conditional walk probability recovers q") {
  auto dist = uniform_law();
  Rng rng(36, 0);
  const std::int64_t j = 8;
  const double y = 1.0;
  double avg = 0.0;
  const int outer = 400;
  std::vector<double> x(j);
  for (int r = 0; r < outer; ++r) {
    for (auto& xi : x) xi = dist.sample(rng);
    avg += q_given(j, y, x, dist, 400, rng).q_hat;
  }
  avg /= outer;
  auto ref = q_mc(j, y, dist, 100'000, rng);
  CHECK(std::abs(avg - ref.q_hat) < 0.02);
}

TEST_CASE("goodness rate is exact for small two-point cases") {
  auto dist = two_point_law();
  Rng rng(37, 0);
  // q(2, -0.5) = 3/16; only the (1.5, 1.5) sequence has q_x > 2q
  const double q_ref = q_mc(2, -0.5, dist, 10, rng).q_hat;
  CHECK(q_ref == 0.1875);
  auto g = goodness_rate(2, -0.5, dist, 0, 0, rng, q_ref);
  CHECK(g.exact);
  CHECK(g.not_good_rate == 0.25);

  // huge y: every sequence is good
  const double q_easy = q_mc(2, 10.0, dist, 10, rng).q_hat;
  auto easy = goodness_rate(2, 10.0, dist, 0, 0, rng, q_easy);
  CHECK(easy.not_good_rate == 0.0);
}

TEST_CASE("goodness rate stays below one half for a continuous law") {
  auto dist = uniform_law();
  Rng rng(38, 0);
  const double q_ref = q_mc(16, 1.0, dist, 50'000, rng).q_hat;
  auto g = goodness_rate(16, 1.0, dist, 800, 300, rng, q_ref);
  CHECK(g.not_good_rate <= 0.5 + 3.0 * g.se);
}

TEST_CASE("block walk comparison is exact when every rank shares a block") {
  auto dist = uniform_law();
  Simulation<SpacingDistribution> sim(iid_start(Rng(39, 1)), dist, Rng(39, 0));
  WaveRecord rec{};
  do {
    rec = sim.step_once();
  } while (rec.rank_len < 6);
  Rng resample(39, 2);
  auto cmp = block_walk_compare(sim.config(), dist, rec.rank_len - 2, resample);
  CHECK(cmp.bad_count == 0);
  CHECK(cmp.bound == 0.0);
  CHECK(std::abs(cmp.x_k - cmp.s_k) <= 1e-9);
  CHECK(cmp.within_bound);
}

TEST_CASE("block walk comparison before any step treats everyone as boundary") {
  auto dist = uniform_law();
  auto q = iid_start(Rng(40, 1));
  Rng resample(40, 2);
  auto cmp = block_walk_compare(q, dist, 32, resample);
  CHECK(cmp.bad_count == 32);
  CHECK(cmp.bound == Catch::Approx(32.0 * (dist.c_plus() - dist.c_minus())).margin(1e-12));
  // both X_k and S_k are sums of 32 values in [c-, c+]
  CHECK(cmp.within_bound);
}

TEST_CASE("block walk difference satisfies the dynamics-consistent bound per realization") {
  auto dist = uniform_law();
  Simulation<SpacingDistribution> sim(iid_start(Rng(41, 1)), dist, Rng(41, 0));
  for (int t = 0; t < 4000; ++t) sim.step_once();
  Rng resample(41, 2);
  for (int i = 0; i < 50; ++i) {
    for (int t = 0; t < 40; ++t) sim.step_once();
    auto cmp = block_walk_compare(sim.config(), dist, 200, resample);
    REQUIRE(cmp.within_relaxed);
  }
}

TEST_CASE("within-block spacings look like the spacing law, boundaries do not") {
  auto dist = uniform_law();
  Simulation<SpacingDistribution> sim(iid_start(Rng(42, 1)), dist, Rng(42, 0));
  for (int t = 0; t < 12'000; ++t) sim.step_once();
  Rng picks(42, 3);

  SpacingSampleOptions opt;
  opt.target = 600;
  opt.gap_steps = 24;
  opt.rank_lo = 32;
  opt.rank_hi = 256;
  auto interior = collect_conditional_spacings(sim, opt, picks);
  REQUIRE(interior.values.size() == 600);
  for (double v : interior.values) {
    CHECK(v >= dist.c_minus() - 1e-9);
    CHECK(v <= dist.c_plus() + 1e-9);
  }
  CHECK(interior.ks.p_value > 1e-4);

  std::vector<double> boundary;
  while (boundary.size() < 300) {
    for (int t = 0; t < 24; ++t) sim.step_once();
    collect_boundary_spacings(sim.config(), dist, 32, 256, boundary);
  }
  for (double v : boundary) {
    CHECK(v > dist.c_minus() + dist.c_plus() - 1e-9);
    CHECK(v <= 2.0 * dist.c_plus() + 1e-9);
  }
  auto ks = ks_one_sample(boundary, [&](double x) { return dist.cdf(x); });
  CHECK(ks.p_value < 1e-6);
}

TEST_CASE("kolmogorov tail matches its known values") {
  CHECK(kolmogorov_q(1.36) == Catch::Approx(0.0495).margin(0.002));
  CHECK(kolmogorov_q(0.5) == Catch::Approx(0.9639).margin(0.002));
  CHECK(kolmogorov_q(2.0) > 0.0);
  CHECK(kolmogorov_q(2.0) < 0.001);
}

TEST_CASE("ks tests accept the null and reject a shifted alternative") {
  auto dist = uniform_law();
  Rng rng(43, 0);
  std::vector<double> sample, shifted, other;
  for (int i = 0; i < 3000; ++i) {
    sample.push_back(dist.sample(rng));
    shifted.push_back(dist.sample(rng) + 0.08);
    other.push_back(dist.sample(rng));
  }
  auto null_fit = ks_one_sample(sample, [&](double x) { return dist.cdf(x); });
  CHECK(null_fit.p_value > 0.01);
  auto bad_fit = ks_one_sample(shifted, [&](double x) { return dist.cdf(x); });
  CHECK(bad_fit.p_value < 1e-6);
  auto two = ks_two_sample(sample, other);
  CHECK(two.p_value > 0.01);
  auto two_bad = ks_two_sample(sample, shifted);
  CHECK(two_bad.p_value < 1e-4);
}
