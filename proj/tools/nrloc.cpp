#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "nrloc/sim.hpp"

namespace {

using namespace nrloc;
using nlohmann::json;

int cmd_run(const RunSpec& spec, bool track) {
  const Scenario scenario = load_scenario(spec.scenario_path);
  const MetricsReport report = track ? run_track(spec, scenario) : run_static(spec, scenario);
  if (!spec.out_dir.empty()) write_report(report, spec.out_dir);
  std::cout << report.to_json_string() << "\n";
  return 0;
}

int cmd_grid_check(const std::string& config_path) {
  const Scenario scenario = load_scenario(config_path);
  std::vector<Collision> collisions;
  long span = 0;
  for (const auto& c : scenario.prs) span = std::max(span, c.slot_offset + c.repetition);
  const ResourceGrid grid =
      map_to_grid(scenario.prs, scenario.srs, scenario.ssb, scenario.rf.mu, 0,
                  std::max<long>(span, 1), &collisions);

  json out;
  out["mu"] = scenario.rf.mu;
  out["slots_checked"] = grid.last_slot() - grid.first_slot() + 1;
  out["occupied_res"] = grid.size();
  json coll = json::array();
  for (const auto& c : collisions) {
    coll.push_back({{"slot", c.where.slot},
                    {"symbol", c.where.symbol},
                    {"subcarrier", c.where.subcarrier},
                    {"cell_a", c.cell_a},
                    {"cell_b", c.cell_b}});
  }
  out["collisions"] = std::move(coll);
  out["ok"] = collisions.empty();
  std::cout << out.dump(2) << "\n";
  return collisions.empty() ? 0 : 2;
}

int cmd_replay(const std::string& scenario_path, const std::string& in_path,
               const std::string& out_path) {
  const Scenario scenario = load_scenario(scenario_path);
  std::ifstream in(in_path);
  if (!in) throw ValidationError("cannot open " + in_path);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    out = &file;
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const MeasurementSet set = measurement_set_from_json(line);
    SolverConfig cfg = scenario.solver;
    if (cfg.mode_2d && set.truth) cfg.fixed_z = set.truth->z();
    const PositionEstimate est = solve_nls(set, scenario.base_stations, cfg);
    json j;
    j["t"] = set.epoch_time_s;
    j["pos"] = {est.position.x(), est.position.y(), est.position.z()};
    std::vector<double> cov(est.covariance.data(), est.covariance.data() + 9);
    j["cov"] = cov;
    j["iterations"] = est.iterations;
    j["converged"] = est.converged;
    std::vector<double> res(est.residuals.data(), est.residuals.data() + est.residuals.size());
    j["residuals"] = res;
    if (set.truth)
      j["error_m"] = (est.position - *set.truth).norm();
    (*out) << j.dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"5G NR positioning simulator"};
  app.require_subcommand(1);

  RunSpec spec;
  std::string method = "dl_tdoa";
  std::string level = "geometric";

  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", spec.scenario_path, "scenario file")->required();
    cmd->add_option("--method", method, "dl_tdoa|multi_rtt|ul_aoa|dl_aod|fused");
    cmd->add_option("--level", level, "geometric|linklevel");
    cmd->add_option("--mu", spec.mu, "numerology override");
    cmd->add_option("--runs", spec.runs, "Monte-Carlo runs");
    cmd->add_option("--seed", spec.seed, "master seed");
    cmd->add_option("--out", spec.out_dir, "output directory");
    cmd->add_option("--dump-measurements", spec.dump_measurements,
                    "write the first run's epochs as JSON lines");
  };

  CLI::App* cmd_static = app.add_subcommand("static", "static positioning runs");
  add_run_options(cmd_static);
  CLI::App* cmd_track = app.add_subcommand("track", "EKF trajectory runs");
  add_run_options(cmd_track);

  std::string grid_config;
  CLI::App* cmd_grid = app.add_subcommand("grid-check", "validate signal configs");
  cmd_grid->add_option("--config", grid_config, "scenario/config file")->required();

  std::string replay_scenario, replay_in, replay_out;
  CLI::App* cmd_rep = app.add_subcommand("replay", "solve recorded measurement epochs");
  cmd_rep->add_option("--scenario", replay_scenario, "scenario file")->required();
  cmd_rep->add_option("--in", replay_in, "measurement JSONL")->required();
  cmd_rep->add_option("--out", replay_out, "estimate JSONL (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_static->parsed() || cmd_track->parsed()) {
      spec.method = nrloc::method_from_string(method);
      spec.level = nrloc::level_from_string(level);
      return cmd_run(spec, cmd_track->parsed());
    }
    if (cmd_grid->parsed()) return cmd_grid_check(grid_config);
    if (cmd_rep->parsed()) return cmd_replay(replay_scenario, replay_in, replay_out);
  } catch (const nrloc::HardFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const nrloc::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
