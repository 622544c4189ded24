#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "nrloc/scenario.hpp"

namespace nrloc {

enum class Method { dl_tdoa, multi_rtt, ul_aoa, dl_aod, fused };
enum class SimLevel { geometric, linklevel };

const char* to_string(Method m);
const char* to_string(SimLevel l);
Method method_from_string(const std::string& s);
SimLevel level_from_string(const std::string& s);

/// Raised when a run produces no usable fixes (all detections failed).
struct HardFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunSpec {
  std::string scenario_path;
  Method method = Method::dl_tdoa;
  SimLevel level = SimLevel::geometric;
  int mu = -1;  // -1: use the scenario's numerology
  int runs = 100;
  std::uint64_t seed = 42;
  std::string out_dir;
  std::string dump_measurements;  // optional JSONL path (first run only)
};

struct SigmaSummary {
  long count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double stddev() const;
};

struct MetricsReport {
  std::string method;
  std::string level;
  int mu = 0;
  int runs = 0;
  std::uint64_t seed = 0;
  Eigen::Vector3d bias{0, 0, 0};
  double bias_norm = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  std::vector<double> cdf_knots;     // sorted error norms
  std::vector<double> epoch_errors;  // run-major error series
  std::map<std::string, SigmaSummary> measurement_sigma;
  long fixes_used = 0;
  long fixes_rejected = 0;
  double map_rejected_fraction = 0.0;

  std::string to_json_string() const;
};

/// bias / RMSE / MAE / CDF over dims-dimensional error vectors.
MetricsReport compute_metrics(std::span<const Eigen::Vector3d> errors, int dims);

std::vector<Position3D> gen_random_walk(const Position3D& start, const Eigen::Vector3d& sigma,
                                        int n, std::uint64_t seed);

/// Trajectory sampled at the scenario's epoch interval (waypoint polyline or
/// seeded random walk).
std::vector<Position3D> trajectory_points(const Scenario& sc, std::uint64_t seed);

/// One epoch of measurements for the requested method at the given truth.
MeasurementSet synthesize_epoch(const Scenario& sc, Method method, SimLevel level, int mu,
                                const Position3D& u, double epoch_time, RngStream& rng);

MetricsReport run_static(const RunSpec& spec, const Scenario& scenario);
MetricsReport run_track(const RunSpec& spec, const Scenario& scenario);

void write_report(const MetricsReport& report, const std::string& out_dir);

/// Worker cap: NRLOC_THREADS when set, otherwise the OpenMP default.
int configured_threads();

}  // namespace nrloc
