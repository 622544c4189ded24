#include "nrloc/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace nrloc {

namespace {

constexpr double kGeomEps = 1e-9;

const BasePose& pose_by_id(std::span<const BasePose> poses, int id) {
  for (const auto& p : poses)
    if (p.id == id) return p;
  throw ValidationError("unknown BS id " + std::to_string(id));
}

bool is_angle(MeasKind k) {
  return k == MeasKind::aoa_az || k == MeasKind::aoa_el || k == MeasKind::aod_az ||
         k == MeasKind::aod_el;
}

}  // namespace

Eigen::RowVector3d jacobian_row(MeasKind kind, const Position3D& u, const Position3D& s,
                                const Position3D* ref, double rss_alpha) {
  const Eigen::Vector3d delta = u - s;  // UE minus BS
  const double d = delta.norm();
  const double dxy = std::hypot(delta.x(), delta.y());

  switch (kind) {
    case MeasKind::tof:
    case MeasKind::rtt: {
      if (d < kGeomEps) throw ValidationError("jacobian: UE coincides with BS");
      return delta.transpose() / d;
    }
    case MeasKind::tdoa: {
      if (ref == nullptr) throw ValidationError("jacobian: TDOA needs a reference BS");
      const Eigen::Vector3d dref = u - *ref;
      const double dr = dref.norm();
      if (d < kGeomEps || dr < kGeomEps) throw ValidationError("jacobian: degenerate TDOA");
      return delta.transpose() / d - dref.transpose() / dr;
    }
    case MeasKind::aoa_az:
    case MeasKind::aod_az: {
      if (dxy < kGeomEps) throw ValidationError("jacobian: UE on the BS vertical axis");
      // Row entries use the BS-minus-UE components (d_x = -delta_x, ...).
      return {-delta.y() / (dxy * dxy), delta.x() / (dxy * dxy), 0.0};
    }
    case MeasKind::aoa_el:
    case MeasKind::aod_el: {
      if (d < kGeomEps || dxy < kGeomEps)
        throw ValidationError("jacobian: degenerate elevation geometry");
      const double dz = -delta.z();  // s_z - u_z
      return {dz * (-delta.x()) / (d * d * dxy), dz * (-delta.y()) / (d * d * dxy),
              -dxy / (d * d)};
    }
    case MeasKind::rss: {
      if (d < kGeomEps) throw ValidationError("jacobian: UE coincides with BS");
      const double scale = -10.0 * rss_alpha / std::log(10.0) / (d * d);
      return scale * delta.transpose();
    }
  }
  throw ValidationError("jacobian: unsupported measurement kind");
}

double measurement_model(const Measurement& m, const Position3D& u, const BasePose& pose,
                         const BasePose* ref_pose) {
  const Eigen::Vector3d delta = u - pose.position;
  const double d = delta.norm();
  switch (m.kind) {
    case MeasKind::tof:
    case MeasKind::rtt:
      return d;
    case MeasKind::tdoa: {
      if (ref_pose == nullptr) throw ValidationError("model: TDOA needs a reference BS");
      return d - (u - ref_pose->position).norm();
    }
    case MeasKind::aoa_az:
    case MeasKind::aod_az:
      return wrap_angle(std::atan2(delta.y(), delta.x()) - pose.orientation.yaw);
    case MeasKind::aoa_el:
    case MeasKind::aod_el: {
      const double dxy = std::hypot(delta.x(), delta.y());
      return wrap_angle(std::atan2(-delta.z(), dxy) - pose.orientation.roll);
    }
    case MeasKind::rss:
      return m.rss.p0_dbm - 10.0 * m.rss.alpha * std::log10(d / m.rss.d0_m);
  }
  throw ValidationError("model: unsupported measurement kind");
}

namespace {

struct Row {
  const Measurement* meas;
  const BasePose* pose;
  const BasePose* ref_pose;
  double value;   // measured, in row units
  double sigma;   // in row units
};

std::vector<Row> build_rows(const MeasurementSet& set, std::span<const BasePose> poses) {
  std::vector<Row> rows;
  rows.reserve(set.items.size());
  for (const auto& m : set.items) {
    Row r;
    r.meas = &m;
    r.pose = &pose_by_id(poses, m.bs_id);
    r.ref_pose = m.kind == MeasKind::tdoa ? &pose_by_id(poses, m.ref_bs_id) : nullptr;
    switch (m.kind) {
      case MeasKind::tof:
        r.value = m.value * kSpeedOfLight;
        r.sigma = m.sigma * kSpeedOfLight;
        break;
      case MeasKind::tdoa:
        r.value = m.value * kSpeedOfLight;
        r.sigma = m.sigma * kSpeedOfLight;
        break;
      case MeasKind::rtt:
        r.value = (m.value - m.reply_time_s) / 2.0 * kSpeedOfLight;
        r.sigma = m.sigma / 2.0 * kSpeedOfLight;
        break;
      default:
        r.value = m.value;
        r.sigma = m.sigma;
        break;
    }
    if (!(r.sigma > 0.0)) r.sigma = 1e-12;  // exact measurements keep finite weight
    rows.push_back(r);
  }
  return rows;
}

double row_residual(const Row& r, const Position3D& u) {
  const double h = measurement_model(*r.meas, u, *r.pose, r.ref_pose);
  const double diff = r.value - h;
  return is_angle(r.meas->kind) ? wrap_angle(diff) : diff;
}

Position3D default_init(const std::vector<Row>& rows, const SolverConfig& cfg) {
  Position3D c{0, 0, 0};
  int n = 0;
  std::vector<int> seen;
  for (const auto& r : rows) {
    if (std::find(seen.begin(), seen.end(), r.pose->id) == seen.end()) {
      seen.push_back(r.pose->id);
      c += r.pose->position;
      ++n;
    }
  }
  c /= std::max(n, 1);
  if (cfg.mode_2d) c.z() = cfg.fixed_z;
  return c;
}

}  // namespace

PositionEstimate solve_nls(const MeasurementSet& set, std::span<const BasePose> poses,
                           const SolverConfig& cfg) {
  const std::vector<Row> rows = build_rows(set, poses);
  const int dims = cfg.mode_2d ? 2 : 3;
  if (static_cast<int>(rows.size()) < dims)
    throw ValidationError("solve_nls: not enough measurements for a fix");

  Position3D u = cfg.initial_guess.value_or(default_init(rows, cfg));
  if (cfg.mode_2d) u.z() = cfg.fixed_z;

  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd dr(n_rows);
  Eigen::MatrixXd h(n_rows, dims);
  Eigen::VectorXd w(n_rows);
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    const double s = rows[static_cast<std::size_t>(i)].sigma;
    w(i) = cfg.weighted ? 1.0 / (s * s) : 1.0;
  }

  auto fill = [&](const Position3D& at) {
    for (Eigen::Index i = 0; i < n_rows; ++i) {
      const Row& r = rows[static_cast<std::size_t>(i)];
      dr(i) = row_residual(r, at);
      const Eigen::RowVector3d full =
          jacobian_row(r.meas->kind, at, r.pose->position,
                       r.ref_pose != nullptr ? &r.ref_pose->position : nullptr,
                       r.meas->rss.alpha);
      h.row(i) = full.head(dims);
    }
  };

  PositionEstimate est;
  double lm_lambda = cfg.lm_lambda0;

  int k = 0;
  for (; k < cfg.max_iterations; ++k) {
    fill(u);
    const Eigen::MatrixXd hw = w.asDiagonal() * h;
    Eigen::MatrixXd normal = h.transpose() * hw;
    const Eigen::VectorXd rhs = hw.transpose() * dr;

    if (cfg.levenberg_marquardt) {
      const double cost = (w.array() * dr.array().square()).sum();
      normal.diagonal().array() += lm_lambda;
      const Eigen::VectorXd step = normal.ldlt().solve(rhs);
      Position3D trial = u;
      trial.head(dims) += step;
      Eigen::VectorXd trial_dr(n_rows);
      double trial_cost = 0.0;
      for (Eigen::Index i = 0; i < n_rows; ++i) {
        trial_dr(i) = row_residual(rows[static_cast<std::size_t>(i)], trial);
        trial_cost += w(i) * trial_dr(i) * trial_dr(i);
      }
      if (trial_cost < cost) {
        u = trial;
        lm_lambda = std::max(lm_lambda / 10.0, 1e-12);
        if (step.norm() < cfg.tolerance_m) {
          est.converged = true;
          ++k;
          break;
        }
      } else {
        lm_lambda *= 10.0;
        if (lm_lambda > 1e12) break;
      }
      continue;
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    Eigen::VectorXd step = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !step.allFinite() ||
        normal.fullPivLu().rank() < dims) {
      normal.diagonal().array() += 1e-9;
      step = normal.ldlt().solve(rhs);
      est.rank_warning = true;
    }
    step *= cfg.eta;
    u.head(dims) += step;
    if (step.norm() < cfg.tolerance_m) {
      est.converged = true;
      ++k;
      break;
    }
  }

  fill(u);
  est.position = u;
  est.iterations = k;
  est.residuals = dr;
  est.residual_kinds.reserve(rows.size());
  for (const auto& r : rows) est.residual_kinds.push_back(r.meas->kind);

  // Covariance from the weighted normal matrix at the fix.
  Eigen::MatrixXd hr(n_rows, dims);
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    const double s = rows[static_cast<std::size_t>(i)].sigma;
    hr.row(i) = h.row(i) / (s * s);
  }
  Eigen::MatrixXd info = h.transpose() * hr;
  info.diagonal().array() += 1e-12;
  const Eigen::MatrixXd cov = info.inverse();
  est.covariance.setZero();
  est.covariance.topLeftCorner(dims, dims) = cov;
  return est;
}

TrackState make_track(const Position3D& start, double pos_sigma0, const Eigen::Vector3d& q_sigma,
                      double dt, bool with_velocity) {
  TrackState t;
  const int n = with_velocity ? 6 : 3;
  t.mean = Eigen::VectorXd::Zero(n);
  t.mean.head<3>() = start;
  t.covariance = Eigen::MatrixXd::Identity(n, n) * pos_sigma0 * pos_sigma0;
  t.process_sigma = q_sigma;
  t.dt = dt;
  t.with_velocity = with_velocity;
  return t;
}

TrackState ekf_step(const TrackState& track, const MeasurementSet& set,
                    std::span<const BasePose> poses, const EkfOptions& opts) {
  const int n = static_cast<int>(track.mean.size());
  if ((track.with_velocity && n != 6) || (!track.with_velocity && n != 3))
    throw ValidationError("ekf_step: inconsistent state size");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> psd_check(track.covariance);
  if (psd_check.eigenvalues().minCoeff() < -1e-9)
    throw ValidationError("ekf_step: covariance not PSD");

  // Predict.
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  Eigen::Vector3d qs = track.process_sigma;
  if (opts.mode_2d) qs.z() = 0.0;
  if (track.with_velocity) {
    f.topRightCorner(3, 3) = Eigen::Matrix3d::Identity() * track.dt;
    const Eigen::Vector3d qv = qs.cwiseProduct(qs);
    q.topLeftCorner(3, 3) = (qv * track.dt * track.dt).asDiagonal();
    q.bottomRightCorner(3, 3) = qv.asDiagonal();
  } else {
    q.topLeftCorner(3, 3) = qs.cwiseProduct(qs).asDiagonal();
  }

  TrackState out = track;
  out.mean = f * track.mean;
  out.covariance = f * track.covariance * f.transpose() + q;
  if (set.items.empty()) return out;

  const std::vector<Row> rows = build_rows(set, poses);

  auto row_jacobian = [&](const Row& r, const Position3D& at) {
    return jacobian_row(r.meas->kind, at, r.pose->position,
                        r.ref_pose != nullptr ? &r.ref_pose->position : nullptr,
                        r.meas->rss.alpha);
  };

  if (opts.gate_sigma > 0.0) {
    // Sequential scalar updates, most-consistent row first; each accepted row
    // re-anchors the state so biased rows fail the gate against it.
    std::vector<const Row*> pending;
    pending.reserve(rows.size());
    for (const auto& r : rows) pending.push_back(&r);
    while (!pending.empty()) {
      const Position3D at = out.mean.head<3>();
      std::size_t best = pending.size();
      double best_ratio = std::numeric_limits<double>::infinity();
      double best_innov = 0.0, best_s = 0.0;
      Eigen::RowVectorXd best_h;
      for (std::size_t i = 0; i < pending.size(); ++i) {
        const Row& r = *pending[i];
        Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(n);
        h.head<3>() = row_jacobian(r, at);
        const double innov = row_residual(r, at);
        const double s = (h * out.covariance * h.transpose())(0) + r.sigma * r.sigma;
        const double ratio = std::abs(innov) / std::sqrt(s);
        if (ratio < best_ratio) {
          best_ratio = ratio;
          best = i;
          best_innov = innov;
          best_s = s;
          best_h = h;
        }
      }
      if (best == pending.size() || best_ratio > opts.gate_sigma) break;
      const Eigen::VectorXd gain = out.covariance * best_h.transpose() / best_s;
      out.mean += gain * best_innov;
      const Eigen::MatrixXd i_kh =
          Eigen::MatrixXd::Identity(n, n) - gain * best_h;
      const double r_var = pending[best]->sigma * pending[best]->sigma;
      out.covariance = i_kh * out.covariance * i_kh.transpose() +
                       gain * r_var * gain.transpose();
      pending.erase(pending.begin() + static_cast<long>(best));
    }
    return out;
  }

  const Position3D predicted = out.mean.head<3>();
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd h_mat = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd innov(m);
  Eigen::MatrixXd r_mat = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    innov(i) = row_residual(r, predicted);
    h_mat.block(i, 0, 1, 3) = row_jacobian(r, predicted);
    r_mat(i, i) = r.sigma * r.sigma;
  }

  const Eigen::MatrixXd s = h_mat * out.covariance * h_mat.transpose() + r_mat;
  const Eigen::MatrixXd gain = out.covariance * h_mat.transpose() * s.inverse();
  out.mean += gain * innov;
  const Eigen::MatrixXd i_kh =
      Eigen::MatrixXd::Identity(n, n) - gain * h_mat;
  // Joseph form keeps the covariance symmetric PSD.
  out.covariance = i_kh * out.covariance * i_kh.transpose() +
                   gain * r_mat * gain.transpose();
  return out;
}

ResidualFilterDecision residual_nlos_filter(const PositionEstimate& estimate,
                                            const ResidualFilterConfig& cfg) {
  ResidualFilterDecision d;
  double angle_sum = 0.0, range_sum = 0.0;
  int n_angle = 0, n_range = 0;
  for (Eigen::Index i = 0; i < estimate.residuals.size(); ++i) {
    const MeasKind k = estimate.residual_kinds[static_cast<std::size_t>(i)];
    if (is_angle(k)) {
      angle_sum += std::abs(estimate.residuals(i));
      ++n_angle;
    } else if (k != MeasKind::rss) {
      range_sum += std::abs(estimate.residuals(i));
      ++n_range;
    }
  }
  if (n_angle > 0) d.mean_abs_angle_deg = rad2deg(angle_sum / n_angle);
  if (n_range > 0) d.mean_abs_range_m = range_sum / n_range;
  d.accept = d.mean_abs_angle_deg <= cfg.angle_threshold_deg &&
             d.mean_abs_range_m <= cfg.range_threshold_m;
  return d;
}

bool point_in_map(const Position3D& p, const MapConstraint& constraint) {
  for (const auto& poly : constraint.regions) {
    // xy-plane test: crossing number over the polygon's footprint.
    bool inside = false;
    const std::size_t n = poly.vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const auto& a = poly.vertices[i];
      const auto& b = poly.vertices[j];
      if ((a.y() > p.y()) != (b.y() > p.y())) {
        const double x_cross = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
        if (p.x() < x_cross) inside = !inside;
      }
    }
    if (inside) return true;
  }
  return false;
}

MapFilterResult map_constraint_filter(std::span<const PositionEstimate> estimates,
                                      const MapConstraint& constraint) {
  for (const auto& poly : constraint.regions)
    if (poly.vertices.size() < 3) throw ValidationError("map filter: degenerate polygon");
  MapFilterResult res;
  for (std::size_t i = 0; i < estimates.size(); ++i)
    if (point_in_map(estimates[i].position, constraint)) res.kept.push_back(i);
  res.rejected_fraction =
      estimates.empty() ? 0.0
                        : 1.0 - static_cast<double>(res.kept.size()) /
                                    static_cast<double>(estimates.size());
  return res;
}

ErrorEllipse error_ellipse(const Eigen::Matrix2d& cov, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw ValidationError("error_ellipse: confidence in (0,1)");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  if (eig.eigenvalues().minCoeff() < -1e-12)
    throw ValidationError("error_ellipse: covariance not PSD");
  const double chi2 = -2.0 * std::log1p(-confidence);  // 2-dof quantile
  const double l_small = std::max(eig.eigenvalues()(0), 0.0);
  const double l_big = std::max(eig.eigenvalues()(1), 0.0);
  ErrorEllipse e;
  e.semi_major = std::sqrt(l_big * chi2);
  e.semi_minor = std::sqrt(l_small * chi2);
  const Eigen::Vector2d v = eig.eigenvectors().col(1);
  e.orientation_rad = std::atan2(v.y(), v.x());
  return e;
}

ErrorEllipse error_ellipse(std::span<const Eigen::Vector2d> samples, double confidence) {
  if (samples.size() < 3) throw ValidationError("error_ellipse: need >= 3 samples");
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& s : samples) {
    const Eigen::Vector2d d = s - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(samples.size() - 1);
  return error_ellipse(cov, confidence);
}

}  // namespace nrloc
