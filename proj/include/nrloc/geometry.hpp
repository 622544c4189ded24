#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "nrloc/common.hpp"

namespace nrloc {

using Position3D = Eigen::Vector3d;

/// Antenna panel orientation. Angles in radians; pitch must be zero, the
/// supported rotation combines yaw (about z) and roll (about x) only.
struct ArrayOrientation {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

/// Uniform rectangular array layout (panels x elements x polarization).
struct AntennaTuple {
  int m_g = 1;  // panels, vertical
  int n_g = 1;  // panels, horizontal
  int m_a = 4;  // elements, vertical
  int n_a = 4;  // elements, horizontal
  int pol = 1;
  int elements() const { return m_a * n_a; }
};

struct BasePose {
  int id = 0;
  Position3D position{0, 0, 0};
  ArrayOrientation orientation;
  int sector_id = 0;
  AntennaTuple antenna;
  double tx_power_dbm = 33.0;
};

struct Polygon3D {
  std::vector<Position3D> vertices;  // planar, >= 3 non-collinear
  double reflection_loss_db = 6.0;
};

struct ObstacleSet {
  std::vector<Polygon3D> polygons;
  bool empty() const { return polygons.empty(); }
};

/// True geometric quantities between a UE and one BS. Azimuth is measured
/// from +x toward +y; elevation is positive when the BS sits above the UE.
/// Local angles subtract the array orientation offsets.
struct TrueGeometry {
  double range = 0.0;         // m
  double ground_range = 0.0;  // m, horizontal component
  double azimuth = 0.0;       // rad, global frame
  double elevation = 0.0;     // rad, global frame
  double local_azimuth = 0.0;
  double local_elevation = 0.0;
};

/// Combined yaw/roll rotation. Throws ValidationError on nonzero pitch.
Eigen::Matrix3d rotation_matrix(const ArrayOrientation& o);

/// Throws ValidationError when u coincides with the BS position.
TrueGeometry true_geometry(const Position3D& u, const BasePose& pose);

/// True iff the open segment a-b crosses no obstacle polygon.
bool los_check(const Position3D& a, const Position3D& b, const ObstacleSet& obstacles);

/// True iff the open segment a-b intersects the polygon's interior.
bool segment_hits_polygon(const Position3D& a, const Position3D& b, const Polygon3D& poly);

/// Unit normal of a planar polygon (from its first three non-collinear vertices).
Eigen::Vector3d polygon_normal(const Polygon3D& poly);

/// Mirror image of p across the polygon's supporting plane.
Position3D mirror_across_polygon(const Position3D& p, const Polygon3D& poly);

/// A specular bounce path tx -> obstacle(s) -> rx.
struct BouncePath {
  std::vector<Position3D> points;  // tx, bounce points..., rx
  double total_length = 0.0;
  double loss_db = 0.0;  // accumulated reflection loss
  Eigen::Vector3d departure_dir;   // unit, at tx
  Eigen::Vector3d arrival_dir;     // unit, into rx
};

/// Enumerate specular reflection paths with up to max_bounces wall hits.
/// Each returned path is checked for occlusion against all other polygons.
std::vector<BouncePath> find_reflections(const Position3D& tx, const Position3D& rx,
                                         const ObstacleSet& obstacles, int max_bounces = 1);

}  // namespace nrloc
