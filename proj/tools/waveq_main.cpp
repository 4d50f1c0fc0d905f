// waveq: simulator and statistics suite for the spatial queue with wave
// dynamics, plus the coalescing-random-walk reference it is compared against.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "waveq/experiment.hpp"
#include "waveq/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace waveq;

namespace {

struct CliState {
  ExperimentSpec spec;
  std::string j_grid_text;
  std::string n_list_text;
  bool all_pass = true;
};

std::vector<std::int64_t> parse_int_list(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoll(tok));
  return out;
}

void apply_list_overrides(CliState& st) {
  if (!st.j_grid_text.empty()) st.spec.j_grid = parse_int_list(st.j_grid_text);
  if (!st.n_list_text.empty()) st.spec.n_list = parse_int_list(st.n_list_text);
  auto errors = st.spec.validate();
  if (!errors.empty()) {
    std::cerr << "invalid experiment spec:\n";
    for (const auto& e : errors) std::cerr << "  - " << e << "\n";
    std::exit(2);
  }
  ensure_directory(st.spec.out_dir);
}

void write_manifest(const CliState& st, const std::string& command) {
  json m;
  m["tool"] = "waveq";
  m["version"] = "0.1.0";
  m["command"] = command;
  m["seed"] = st.spec.seed;
  m["dist"] = st.spec.dist_spec;
  m["steps"] = st.spec.steps;
  m["burn_in"] = st.spec.burn_in;
  m["horizon_cap"] = st.spec.horizon_cap;
  m["j_grid"] = st.spec.j_grid;
  m["n_list"] = st.spec.n_list;
  m["replicates"] = st.spec.replicates;
  m["rng"] = "xoshiro256++ seeded by splitmix64(seed, stream)";
  m["float_env"] = "IEEE-754 binary64; libm transcendentals may vary by platform";
#ifdef __VERSION__
  m["compiler"] = __VERSION__;
#endif
  std::ofstream out(fs::path(st.spec.out_dir) / ("manifest_" + command + ".json"));
  out << m.dump(2) << "\n";
}

void report(CliState& st, const std::vector<Verdict>& verdicts) {
  for (const auto& v : verdicts) {
    std::cout << verdict_line(v) << "\n";
    if (!v.informational && !v.pass) st.all_pass = false;
  }
}

Rho1Estimate rho1_cached(CliState& st) {
  const fs::path cache = fs::path(st.spec.out_dir) / "rho1.json";
  if (fs::exists(cache)) {
    std::ifstream in(cache);
    json j = json::parse(in);
    if (j.contains("seed") && j["seed"] == st.spec.seed) {
      Rho1Estimate est;
      est.value = j["value"];
      est.se = j["se"];
      return est;
    }
  }
  std::cout << "computing CBM rho1 reference (cache " << cache.string() << ")...\n";
  Rho1Estimate est = compute_rho1(st.spec.seed);
  json j;
  j["seed"] = st.spec.seed;
  j["value"] = est.value;
  j["se"] = est.se;
  json rungs = json::array();
  for (const auto& r : est.ladder)
    rungs.push_back({{"eps", r.eps}, {"rho_hat", r.rho_hat}, {"se", r.se}});
  j["ladder"] = rungs;
  std::ofstream out(cache);
  out << j.dump(2) << "\n";
  return est;
}

// ---------------------------------------------------------------------------

int cmd_simulate(CliState& st) {
  write_manifest(st, "simulate");
  const auto dist = st.spec.distribution();
  Simulation<SpacingDistribution> sim(iid_start(Rng(st.spec.seed, streams::kTail)), dist,
                                      Rng(st.spec.seed, streams::kChain), st.spec.horizon_cap);
  StepHooks hooks;
  hooks.validate = true;

  CsvFile waves(fs::path(st.spec.out_dir) / "waves.csv", "t,W,L,censored");
  std::int64_t violations = 0;
  std::string first;
  for (std::int64_t t = 0; t < st.spec.steps; ++t) {
    try {
      const WaveRecord rec = sim.step_once(&hooks);
      waves.field(rec.t).field(rec.rank_len).field(rec.pos_len).field(rec.censored);
      waves.end_row();
    } catch (const std::logic_error& e) {
      // the configuration is inconsistent after a failed step; stop here
      ++violations;
      first = e.what();
      break;
    }
  }

  auto& q = sim.config();
  const std::int64_t depth = std::min<std::int64_t>(4096, std::max<std::int64_t>(q.horizon(), 16));
  q.ensure(depth, dist);
  CsvFile snap(fs::path(st.spec.out_dir) / "snapshot_final.csv",
               "rank,position,spacing,last_move_time");
  for (std::int64_t i = 0; i <= depth; ++i) {
    snap.field(i)
        .field(q.position(i))
        .field(i == 0 ? 0.0 : q.spacing(i))
        .field(q.last_move(i));
    snap.end_row();
  }

  Verdict v{"C11", violations == 0,
            "per-step structural validation over " + std::to_string(st.spec.steps) +
                " steps: " + std::to_string(violations) + " violations" +
                (first.empty() ? "" : "; first: " + first)};
  report(st, {v});
  std::cout << "wave records: " << (fs::path(st.spec.out_dir) / "waves.csv").string() << "\n";
  return 0;
}

int cmd_tail(CliState& st) {
  write_manifest(st, "tail");
  const Rho1Estimate rho1_est = rho1_cached(st);
  TailStudy study = run_tail_study(st.spec, rho1_est);

  CsvFile tail(fs::path(st.spec.out_dir) / "tail.csv", "j,N_j,rho_hat,se");
  for (std::size_t k = 0; k < study.tail.j_grid.size(); ++k) {
    tail.field(study.tail.j_grid[k])
        .field(study.tail.counts[k])
        .field(study.tail.rho_hat[k])
        .field(study.tail.se[k]);
    tail.end_row();
  }
  for (const auto& w : study.tail.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& w : study.fit.warnings) std::cerr << "warning: " << w << "\n";

  json summary;
  summary["slope"] = study.fit.slope;
  summary["intercept"] = study.fit.intercept;
  summary["r2"] = study.fit.r2;
  summary["sigma"] = study.sigma;
  summary["rho1"] = rho1_est.value;
  summary["runtime_seconds"] = study.runtime_seconds;
  summary["censored_steps"] = study.censored_steps;
  json verdicts = json::array();
  for (const auto& v : study.verdicts)
    verdicts.push_back({{"id", v.id}, {"pass", v.pass}, {"detail", v.detail}});
  summary["verdicts"] = verdicts;
  std::ofstream(fs::path(st.spec.out_dir) / "tail_summary.json") << summary.dump(2) << "\n";

  report(st, study.verdicts);
  return 0;
}

int cmd_blocks(CliState& st) {
  write_manifest(st, "blocks");
  BlockStudy study = run_block_study(st.spec);

  CsvFile blocks(fs::path(st.spec.out_dir) / "blocks.csv", "t0,k,X_k,S_k,bad_count,bound");
  for (const auto& c : study.instances) {
    blocks.field(c.t0).field(c.k).field(c.x_k).field(c.s_k).field(c.bad_count).field(c.bound);
    blocks.end_row();
  }
  CsvFile interior(fs::path(st.spec.out_dir) / "spacings_interior.csv", "spacing");
  for (double v : study.interior.values) {
    interior.field(v);
    interior.end_row();
  }
  CsvFile boundary(fs::path(st.spec.out_dir) / "spacings_boundary.csv", "spacing");
  for (double v : study.boundary.values) {
    boundary.field(v);
    boundary.end_row();
  }
  report(st, study.verdicts);
  return 0;
}

int cmd_q(CliState& st) {
  write_manifest(st, "q");
  QStudy study = run_q_study(st.spec);

  CsvFile qcsv(fs::path(st.spec.out_dir) / "q.csv", "j,y,q_hat,se,exact");
  for (const auto& e : study.table) {
    qcsv.field(e.j).field(e.y).field(e.q_hat).field(e.se).field(e.exact);
    qcsv.end_row();
  }
  CsvFile good(fs::path(st.spec.out_dir) / "goodness.csv",
               "j,y,q_ref,not_good_rate,se,sequences");
  for (const auto& g : study.goodness) {
    good.field(g.j).field(g.y).field(g.q_ref).field(g.not_good_rate).field(g.se).field(g.sequences);
    good.end_row();
  }
  report(st, study.verdicts);
  return 0;
}

int cmd_cbm(CliState& st) {
  write_manifest(st, "cbm");
  const Rho1Estimate rho1_est = rho1_cached(st);
  CbmStudy study = run_cbm_study(st.spec, rho1_est);

  CsvFile ladder(fs::path(st.spec.out_dir) / "cbm_ladder.csv", "eps,t,rho_hat,se,warning");
  for (const auto& r : study.rho1.ladder) {
    ladder.field(r.eps).field(r.t).field(r.rho_hat).field(r.se).field(r.warning);
    ladder.end_row();
  }
  for (const auto& r : study.scaling) {
    ladder.field(r.eps).field(r.t).field(r.rho_hat).field(r.se).field(r.warning);
    ladder.end_row();
  }
  report(st, study.verdicts);
  return 0;
}

int cmd_compare(CliState& st) {
  write_manifest(st, "compare");
  CompareStudy study = run_compare_study(st.spec);

  CsvFile zeta(fs::path(st.spec.out_dir) / "zeta_points.csv", "replicate,coordinate");
  for (const auto& s : study.zeta)
    for (double p : s.points) {
      zeta.field(s.replicate).field(p);
      zeta.end_row();
    }
  CsvFile cbm(fs::path(st.spec.out_dir) / "cbm_time1_points.csv", "replicate,coordinate");
  for (const auto& s : study.cbm_points)
    for (double p : s.points) {
      cbm.field(s.replicate).field(p);
      cbm.end_row();
    }
  json summary;
  summary["ks_d"] = study.nn_ks.d;
  summary["ks_p"] = study.nn_ks.p_value;
  summary["zeta_intensity"] = study.zeta_intensity;
  summary["cbm_intensity"] = study.cbm_intensity;
  std::ofstream(fs::path(st.spec.out_dir) / "compare_summary.json") << summary.dump(2) << "\n";
  report(st, study.verdicts);
  return 0;
}

int cmd_trajectories(CliState& st) {
  write_manifest(st, "trajectories");
  const Rho1Estimate rho1_est = rho1_cached(st);
  std::vector<Verdict> verdicts;

  CsvFile points(fs::path(st.spec.out_dir) / "trajectory_points.csv", "n,u,t_norm,x_norm");
  for (std::int64_t n : st.spec.n_list) {
    TrajectoryStudy study = run_trajectory_study(st.spec, n, rho1_est);
    std::int64_t u = 0;
    for (const auto& [tn, xn] : study.points.points) {
      points.field(n).field(u++).field(tn).field(xn);
      points.end_row();
    }
    for (const auto& v : study.verdicts) verdicts.push_back(v);
  }

  // small-scale trace exports for replotting a realization
  {
    const auto dist = st.spec.distribution();
    Simulation<SpacingDistribution> sim(iid_start(Rng(st.spec.seed, streams::kTail)), dist,
                                        Rng(st.spec.seed, streams::kChain), st.spec.horizon_cap);
    const std::int64_t trace_steps = 12;
    const std::int64_t depth = 24;
    CsvFile fig1(fs::path(st.spec.out_dir) / "trace_trajectories.csv", "individual,t,x");
    CsvFile fig3(fs::path(st.spec.out_dir) / "trace_gfamily.csv",
                 "t,jump_position,value_after_jump");
    auto emit = [&](std::int64_t t) {
      auto& q = sim.config();
      q.ensure(depth + t + 1, dist);
      for (std::int64_t r = 0; r <= depth; ++r) {
        fig1.field(t + r).field(t).field(q.position(r));
        fig1.end_row();
      }
      auto f = counting_function(q, dist, q.position(depth));
      for (std::size_t k = 0; k < f.jumps.size(); ++k) {
        fig3.field(t).field(f.jumps[k]).field(static_cast<double>(t) +
                                              static_cast<double>(k) - f.jumps[k]);
        fig3.end_row();
      }
    };
    emit(0);
    for (std::int64_t t = 1; t <= trace_steps; ++t) {
      sim.step_once();
      emit(t);
    }
  }

  report(st, verdicts);
  return 0;
}

int cmd_all(CliState& st) {
  write_manifest(st, "all");
  const Rho1Estimate rho1_est = rho1_cached(st);

  std::cout << "== tail ==\n";
  report(st, run_tail_study(st.spec, rho1_est).verdicts);
  std::cout << "== blocks ==\n";
  report(st, run_block_study(st.spec).verdicts);
  std::cout << "== q ==\n";
  report(st, run_q_study(st.spec).verdicts);
  std::cout << "== cbm ==\n";
  report(st, run_cbm_study(st.spec, rho1_est).verdicts);
  std::cout << "== compare ==\n";
  report(st, run_compare_study(st.spec).verdicts);
  std::cout << "== structural ==\n";
  report(st, run_structural_study(st.spec).verdicts);
  std::cout << "== trajectories ==\n";
  for (std::int64_t n : st.spec.n_list)
    report(st, run_trajectory_study(st.spec, n, rho1_est).verdicts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatial queue wave simulator and statistics suite"};
  app.require_subcommand(1);

  CliState st;
  app.set_config("--config", "", "key = value configuration file; flags override");
  app.add_option("--seed", st.spec.seed, "master seed (expands to per-replicate streams)");
  app.add_option("--steps", st.spec.steps, "chain steps");
  app.add_option("--burn-in", st.spec.burn_in, "steps discarded before estimation");
  app.add_option("--dist", st.spec.dist_spec, "uniform:a,b | twopoint:a,b | tri:a,m,b");
  app.add_option("--out", st.spec.out_dir, "output directory");
  app.add_option("--replicates", st.spec.replicates, "independent replicate count");
  app.add_option("--horizon-cap", st.spec.horizon_cap, "wave length cap before censoring");
  app.add_option("--n", st.n_list_text, "comma-separated rescaling levels");
  app.add_option("--j-grid", st.j_grid_text, "comma-separated rank thresholds");

  auto* simulate = app.add_subcommand("simulate", "run the chain, write wave records");
  auto* tail = app.add_subcommand("tail", "wave-tail table, exponent fit, rate check");
  auto* q = app.add_subcommand("q", "walk-maximum table, envelope and goodness checks");
  auto* blocks = app.add_subcommand("blocks", "block inequality, spread, conditional spacings");
  auto* cbm = app.add_subcommand("cbm", "coalescing-walk density ladder and oracle checks");
  auto* compare = app.add_subcommand("compare", "coalescence identity and CBM point comparison");
  auto* trajectories = app.add_subcommand("trajectories", "tracked-individual exports");
  auto* all = app.add_subcommand("all", "every analysis at acceptance scale");

  CLI11_PARSE(app, argc, argv);
  apply_list_overrides(st);

  try {
    if (simulate->parsed()) cmd_simulate(st);
    if (tail->parsed()) cmd_tail(st);
    if (q->parsed()) cmd_q(st);
    if (blocks->parsed()) cmd_blocks(st);
    if (cbm->parsed()) cmd_cbm(st);
    if (compare->parsed()) cmd_compare(st);
    if (trajectories->parsed()) cmd_trajectories(st);
    if (all->parsed()) cmd_all(st);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return st.all_pass ? 0 : 1;
}
