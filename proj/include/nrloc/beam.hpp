#pragma once

#include <optional>

#include "nrloc/linklevel.hpp"
#include "nrloc/measurements.hpp"

namespace nrloc {

/// Beam grid for the P1 (wide, SSB) and P2 (fine, PRS) sweeps. Angles are in
/// the BS local frame; beam centers tile the sector uniformly.
struct BeamBook {
  double sector_az_rad = deg2rad(120.0);  // A_phi
  double sector_el_rad = deg2rad(30.0);   // A_psi
  int n_ssb_az = 4;
  int n_ssb_el = 1;
  int n_prs_az = 12;
  int n_prs_el = 1;
  // Elements per axis forming the wide acquisition beams. Two elements give a
  // sidelobe-free pattern whose main lobe spans a whole SSB cell; the full
  // array is reserved for the fine PRS beams.
  int ssb_subarray = 2;
  double detection_floor_db = -240.0;
  double rsrp_noise_sigma_db = 0.0;  // per-beam measurement jitter

  double ssb_az_res() const { return sector_az_rad / n_ssb_az; }
  double ssb_el_res() const { return sector_el_rad / n_ssb_el; }
  double prs_az_res() const { return ssb_az_res() / n_prs_az; }
  double prs_el_res() const { return ssb_el_res() / n_prs_el; }
};

void validate(const BeamBook& book, double fc_ghz, SsbCase pattern);

struct SweepResult {
  std::vector<double> rsrp_db;  // one per beam, az-major
  int selected = -1;            // argmax, ties to the lowest index
  double beam_az = 0.0;         // selected beam center, local frame
  double beam_el = 0.0;
};

/// P1: sweep the wide SSB beams over the sector and pick the strongest.
/// RSRP is computed analytically from the array factor over the channel
/// paths. Empty when every beam stays below the detection floor.
std::optional<SweepResult> p1_acquire(const TapChannel& channel, const BeamBook& book,
                                      const AntennaTuple& array, double wavelength,
                                      RngStream* rng = nullptr);

/// P2: sweep at most 12 fine beams inside the selected P1 cell; the departure
/// estimate is the winning fine beam's center. Returns the AOD measurement
/// pair (azimuth, elevation) in the BS local frame.
std::optional<std::pair<Measurement, Measurement>> p2_refine(
    const SweepResult& p1, const TapChannel& channel, const BeamBook& book,
    const AntennaTuple& array, double wavelength, int bs_id, RngStream* rng = nullptr);

/// Analytic per-beam RSRP: |sum over paths of gain * normalized array factor|^2.
double beam_rsrp_db(const TapChannel& channel, const AntennaTuple& array, double wavelength,
                    double beam_az, double beam_el);

/// Steering angles for n beams over [a0, a0+span] whose response crossovers
/// fall on the uniform cell edges (the URA response is a kernel in sin-space).
std::vector<double> boundary_calibrated_steering(double a0, double span, int n);

}  // namespace nrloc
