#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "waveq/experiment.hpp"
#include "waveq/io.hpp"

using namespace waveq;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_waves(const fs::path& p, const std::vector<WaveRecord>& records) {
  CsvFile csv(p, "t,W,L,censored");
  for (const auto& r : records) {
    csv.field(r.t).field(r.rank_len).field(r.pos_len).field(r.censored);
    csv.end_row();
  }
}

}  // namespace

TEST_CASE("floating values serialize with 17 significant digits") {
  CHECK(fmt_g17(1.0 / 3.0) == "0.33333333333333331");
  CHECK(fmt_g17(2.0) == "2");
  CHECK(fmt_g17(0.1 + 0.2) == "0.30000000000000004");
}

TEST_CASE("identical runs produce byte-identical wave files") {
  const auto dir = fs::temp_directory_path() / "waveq_test_csv";
  fs::create_directories(dir);
  auto dist = SpacingDistribution::uniform(0.5, 1.5);
  auto run_to = [&](const fs::path& p) {
    Simulation<SpacingDistribution> sim(iid_start(Rng(61, 1)), dist, Rng(61, 0), 4096);
    write_waves(p, sim.run_collect(1500));
  };
  run_to(dir / "a.csv");
  run_to(dir / "b.csv");
  const auto a = slurp(dir / "a.csv");
  CHECK(a == slurp(dir / "b.csv"));
  CHECK(a.rfind("t,W,L,censored\n", 0) == 0);
}

TEST_CASE("spec validation reports every problem at once") {
  ExperimentSpec spec;
  spec.steps = 0;
  spec.burn_in = 10;
  spec.horizon_cap = 0;
  spec.replicates = 0;
  spec.dist_spec = "nonsense";
  const auto errors = spec.validate();
  CHECK(errors.size() >= 5);
}

TEST_CASE("default spec validates cleanly") {
  ExperimentSpec spec;
  CHECK(spec.validate().empty());
}

TEST_CASE("verdict lines carry the criterion id and status") {
  Verdict v{"C4", true, "spread growth 1.9 <= 2.4"};
  CHECK(verdict_line(v) == "[C4] PASS  spread growth 1.9 <= 2.4");
  v.pass = false;
  CHECK(verdict_line(v).rfind("[C4] FAIL", 0) == 0);
  v.informational = true;
  CHECK(verdict_line(v).rfind("[C4] INFO", 0) == 0);
}

TEST_CASE("trajectory study tracks the individual nearest the target position") {
  ExperimentSpec spec;
  spec.seed = 62;
  Rho1Estimate rho1_est;
  rho1_est.value = 0.56;
  rho1_est.se = 0.01;
  auto study = run_trajectory_study(spec, 256, rho1_est);
  CHECK(study.tracked_service > study.t_ref);
  CHECK_FALSE(study.trajectory.moves.empty());
  double prev = -1e300;
  for (const auto& [tn, xn] : study.points.points) {
    CHECK(xn >= prev);
    prev = xn;
  }
  REQUIRE_FALSE(study.verdicts.empty());
  CHECK(study.verdicts.front().pass);
  // move gaps should be near sigma*sqrt(n)/rho1 (loose, diagnostic scale only)
  if (study.trajectory.moves.size() >= 8) {
    CHECK(study.mean_move_gap > 0.25 * study.predicted_gap);
    CHECK(study.mean_move_gap < 4.0 * study.predicted_gap);
  }
}
