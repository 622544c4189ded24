#pragma once

#include <string>
#include <vector>

#include "nrloc/beam.hpp"
#include "nrloc/estimators.hpp"

namespace nrloc {

struct RfConfig {
  int mu = 1;
  double fc_ghz = 3.5;
  int n_rb = 272;
  int n_fft = 4096;
  int oversampling = 1;
  double nf_dl_db = 9.0;
  double nf_ul_db = 5.0;
  double t_ant_k = 298.0;

  double wavelength() const { return kSpeedOfLight / (fc_ghz * 1e9); }
};

struct EkfConfig {
  Eigen::Vector3d q_sigma{0.5, 0.5, 0.0};
  double pos_sigma0 = 10.0;
  double gate_sigma = 0.0;  // 0 disables innovation gating
  bool with_velocity = false;
};

struct FilterPipelineConfig {
  bool use_residual_filter = false;
  ResidualFilterConfig residual;
  bool use_map_filter = false;
  MapConstraint map;
};

struct TrajectoryConfig {
  std::vector<Position3D> waypoints;
  double speed_mps = 1.4;
  Eigen::Vector3d random_walk_sigma{0.0, 0.0, 0.0};
  int random_walk_steps = 0;  // > 0 switches to a random walk from waypoint 0
};

struct Scenario {
  RfConfig rf;
  NoiseModel noise;
  bool noise_calibrated = false;  // sigma_TOF from the per-numerology table
  SolverConfig solver;
  EkfConfig ekf;
  FilterPipelineConfig filters;
  BeamBook beam;
  std::vector<BasePose> base_stations;
  ObstacleSet obstacles;
  std::vector<Position3D> ue_points;
  TrajectoryConfig trajectory;
  double epoch_interval_s = 0.7134;
  double rtt_reply_time_s = 100e-6;
  int max_bounces = 1;
  int music_snapshots = 100;
  std::vector<PrsConfig> prs;
  std::vector<SrsConfig> srs;
  std::vector<SsbConfig> ssb;

  /// Effective one-way ranging sigma in seconds for the given numerology.
  double sigma_tof_s(int mu) const;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text);

/// Fills per-BS default PRS configs (comb-12, staggered 2-slot offsets) when
/// the file does not configure them.
void apply_default_signals(Scenario& s);

}  // namespace nrloc
