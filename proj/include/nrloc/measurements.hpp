#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nrloc/geometry.hpp"

namespace nrloc {

enum class MeasKind { tof, tdoa, rtt, aoa_az, aoa_el, rss, aod_az, aod_el };

const char* to_string(MeasKind k);
MeasKind meas_kind_from_string(const std::string& s);

/// Log-distance path loss parameters for RSS synthesis and inversion.
struct RssModel {
  double p0_dbm = -40.0;  // power at the reference distance
  double d0_m = 1.0;
  double alpha = 2.0;
};

struct NoiseModel {
  double sigma_tof_s = 1e-9;
  double sigma_aoa_az_rad = deg2rad(1.0);
  double sigma_aoa_el_rad = deg2rad(1.0);
  double sigma_rss_db = 2.0;
  double nlos_excess_mean_m = 5.0;          // exponential excess range
  double nlos_el_bias_sigma_rad = deg2rad(3.0);  // -|N(0,s)| elevation pull
  RssModel rss;
};

/// Measured sigma_TDOA (in meters) per numerology, as observed at link level.
/// Geometric-level runs use sigma_TOF = sigma_TDOA / sqrt(2) per leg.
std::optional<double> calibrated_sigma_tdoa_m(int mu);

struct Measurement {
  MeasKind kind = MeasKind::tof;
  double value = 0.0;   // seconds, radians or dB/dBm depending on kind
  double sigma = 0.0;   // same unit as value
  int bs_id = 0;
  int ref_bs_id = -1;   // TDOA only
  bool los = true;
  double reply_time_s = 0.0;  // RTT only
  RssModel rss;               // RSS only: the model the value was drawn from
};

struct MeasurementSet {
  double epoch_time_s = 0.0;
  std::vector<Measurement> items;
  std::optional<Position3D> truth;  // carried for evaluation only
};

/// JSON-lines (one epoch per line) replay format.
std::string to_jsonl(const MeasurementSet& set);
MeasurementSet measurement_set_from_json(const std::string& line);

Measurement gen_tof(const Position3D& u, const BasePose& pose, const NoiseModel& noise,
                    bool los, RngStream& rng);

/// Index of the best BS by the quality metric, ties to the lowest id.
/// Throws with fewer than two entries.
int select_reference_bs(std::span<const double> quality, std::span<const int> bs_ids);

/// One TDOA per non-reference BS against the reference. All entries share the
/// reference BS's noise draw, so each entry carries twice the TOF variance.
std::vector<Measurement> gen_tdoa_set(const Position3D& u, std::span<const BasePose> poses,
                                      const NoiseModel& noise, int reference_bs,
                                      const std::vector<bool>& los_flags, RngStream& rng);

/// Raw two-leg round-trip value (2d/c + reply + per-leg noise).
Measurement gen_rtt(const Position3D& u, const BasePose& pose, const NoiseModel& noise,
                    double reply_time_s, bool los, RngStream& rng);

/// Recover the one-way TOF assuming the reply time is known exactly.
Measurement rtt_extract_tof(const Measurement& rtt);

std::pair<Measurement, Measurement> gen_aoa(const Position3D& u, const BasePose& pose,
                                            const NoiseModel& noise, bool los,
                                            RngStream& rng);

Measurement gen_rss(const Position3D& u, const BasePose& pose, const NoiseModel& noise,
                    RngStream& rng);

}  // namespace nrloc
