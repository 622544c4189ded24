#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>

#include "nrloc/measurements.hpp"

namespace nrloc {

struct SolverConfig {
  double eta = 0.01;        // step-size scaling of the Gauss-Newton update
  int max_iterations = 1000;
  double tolerance_m = 1e-4;  // stop when the position step falls below this
  bool mode_2d = true;        // fix z and solve in the horizontal plane
  double fixed_z = 0.0;
  std::optional<Position3D> initial_guess;  // default: centroid of used BSs
  bool weighted = true;
  bool levenberg_marquardt = false;
  double lm_lambda0 = 1e-3;
};

struct PositionEstimate {
  Position3D position{0, 0, 0};
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (H^T R^-1 H)^-1
  Eigen::VectorXd residuals;           // final, in row units (m / rad / dB)
  std::vector<MeasKind> residual_kinds;
  int iterations = 0;
  bool converged = false;
  bool rank_warning = false;
};

/// Gradient of the measurement model with respect to the UE position.
/// ref is required for TDOA rows; alpha for RSS rows.
Eigen::RowVector3d jacobian_row(MeasKind kind, const Position3D& u, const Position3D& s,
                                const Position3D* ref = nullptr, double rss_alpha = 2.0);

/// Model value in row units (meters for time kinds, radians for angles,
/// dB for RSS), matching the residual convention of solve_nls.
double measurement_model(const Measurement& m, const Position3D& u, const BasePose& pose,
                         const BasePose* ref_pose);

/// Iterative (W)NLS position fix with the Gauss-Newton update
/// u_{k+1} = u_k + eta (H^T W H)^-1 H^T W dr, or the Levenberg-Marquardt
/// damped variant. Time rows are stacked in meters, angle rows in radians.
PositionEstimate solve_nls(const MeasurementSet& set, std::span<const BasePose> poses,
                           const SolverConfig& cfg);

struct TrackState {
  Eigen::VectorXd mean;          // position, optionally followed by velocity
  Eigen::MatrixXd covariance;
  Eigen::Vector3d process_sigma{1.0, 1.0, 1.0};  // diag(Q)^1/2, random walk
  double dt = 0.7134;
  bool with_velocity = false;

  Position3D position() const { return mean.head<3>(); }
};

TrackState make_track(const Position3D& start, double pos_sigma0, const Eigen::Vector3d& q_sigma,
                      double dt, bool with_velocity = false);

struct EkfOptions {
  double gate_sigma = 0.0;  // 0 disables innovation gating
  bool mode_2d = false;     // zero out vertical process noise
};

/// One predict+update cycle. Epochs without measurements advance by
/// prediction only. Gated rows are discarded before the update.
TrackState ekf_step(const TrackState& track, const MeasurementSet& set,
                    std::span<const BasePose> poses, const EkfOptions& opts = {});

struct ResidualFilterConfig {
  double angle_threshold_deg = 8.6;
  double range_threshold_m = std::numeric_limits<double>::infinity();
};

struct ResidualFilterDecision {
  bool accept = true;
  double mean_abs_angle_deg = 0.0;
  double mean_abs_range_m = 0.0;
};

/// Accepts a fix unless the mean absolute residual of either class exceeds
/// its threshold. Reordering the measurements does not change the decision.
ResidualFilterDecision residual_nlos_filter(const PositionEstimate& estimate,
                                            const ResidualFilterConfig& cfg = {});

struct MapConstraint {
  std::vector<Polygon3D> regions;  // admissible areas, tested in the xy plane
};

struct MapFilterResult {
  std::vector<std::size_t> kept;  // indices into the input
  double rejected_fraction = 0.0;
};

MapFilterResult map_constraint_filter(std::span<const PositionEstimate> estimates,
                                      const MapConstraint& constraint);

bool point_in_map(const Position3D& p, const MapConstraint& constraint);

struct ErrorEllipse {
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double orientation_rad = 0.0;  // major axis vs +x
  double area() const { return kPi * semi_major * semi_minor; }
};

/// Confidence ellipse of a 2D covariance: axes scaled by the chi-square
/// quantile with 2 degrees of freedom.
ErrorEllipse error_ellipse(const Eigen::Matrix2d& cov, double confidence);
ErrorEllipse error_ellipse(std::span<const Eigen::Vector2d> samples, double confidence);

}  // namespace nrloc
