#include "nrloc/beam.hpp"

#include <algorithm>
#include <cmath>

namespace nrloc {

void validate(const BeamBook& book, double fc_ghz, SsbCase pattern) {
  if (book.n_ssb_az < 1 || book.n_ssb_el < 1 || book.n_prs_az < 1 || book.n_prs_el < 1)
    throw ValidationError("beambook: beam counts must be >= 1");
  if (book.n_prs_az * book.n_prs_el > 12)
    throw ValidationError("beambook: at most 12 PRS fine beams per slot");
  if (book.n_ssb_az * book.n_ssb_el > ssb_count(pattern, fc_ghz))
    throw ValidationError("beambook: more SSB beams than the burst carries");
  if (book.sector_az_rad <= 0.0 || book.sector_el_rad <= 0.0)
    throw ValidationError("beambook: sector spans must be positive");
}

double beam_rsrp_db(const TapChannel& channel, const AntennaTuple& array, double wavelength,
                    double beam_az, double beam_el) {
  const int m = array.elements();
  const Eigen::VectorXcd w = steering_vector(array, wavelength, beam_az, beam_el);
  cplx acc{0.0, 0.0};
  for (const auto& p : channel.paths) {
    const Eigen::VectorXcd a = steering_vector(array, wavelength, p.aod_az, p.aod_el);
    // Conjugate beamforming weights, normalized so a boresight path through a
    // matched beam sees unit array gain factor.
    acc += p.gain * (w.adjoint() * a)(0) / static_cast<double>(m);
  }
  const double power = std::norm(acc);
  return 10.0 * std::log10(std::max(power, 1e-300));
}

// The URA response is a kernel in sin-space, so adjacent beams cross at the
// sin midpoint of their steering directions; the recursion places every
// crossover on a uniform angular cell edge.
std::vector<double> boundary_calibrated_steering(double a0, double span, int n) {
  const double width = span / n;
  std::vector<double> s(static_cast<std::size_t>(n));
  s[0] = std::sin(a0 + 0.5 * width);
  for (int i = 1; i < n; ++i) {
    const double edge = a0 + i * width;
    s[static_cast<std::size_t>(i)] = 2.0 * std::sin(edge) - s[static_cast<std::size_t>(i - 1)];
  }
  std::vector<double> angles(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    angles[static_cast<std::size_t>(i)] =
        std::asin(std::clamp(s[static_cast<std::size_t>(i)], -1.0, 1.0));
  return angles;
}

namespace {

struct BeamCell {
  double steer_az, steer_el;    // physical steering direction
  double center_az, center_el;  // reported cell center
};

std::vector<BeamCell> tile(double az0, double az_span, int n_az, double el0, double el_span,
                           int n_el) {
  const auto steer_az = boundary_calibrated_steering(az0, az_span, n_az);
  const auto steer_el = boundary_calibrated_steering(el0, el_span, n_el);
  std::vector<BeamCell> cells;
  cells.reserve(static_cast<std::size_t>(n_az) * n_el);
  for (int ie = 0; ie < n_el; ++ie) {
    for (int ia = 0; ia < n_az; ++ia) {
      cells.push_back({steer_az[static_cast<std::size_t>(ia)],
                       steer_el[static_cast<std::size_t>(ie)],
                       az0 + (ia + 0.5) * az_span / n_az,
                       el0 + (ie + 0.5) * el_span / n_el});
    }
  }
  return cells;
}

std::optional<SweepResult> sweep(const TapChannel& channel, const AntennaTuple& array,
                                 double wavelength, const std::vector<BeamCell>& cells,
                                 double floor_db, double jitter_db, RngStream* rng) {
  SweepResult res;
  res.rsrp_db.reserve(cells.size());
  for (const auto& c : cells) {
    double v = beam_rsrp_db(channel, array, wavelength, c.steer_az, c.steer_el);
    if (rng != nullptr && jitter_db > 0.0) v += rng->gauss(jitter_db);
    res.rsrp_db.push_back(v);
  }
  int best = 0;
  for (int i = 1; i < static_cast<int>(res.rsrp_db.size()); ++i)
    if (res.rsrp_db[static_cast<std::size_t>(i)] > res.rsrp_db[static_cast<std::size_t>(best)])
      best = i;
  if (res.rsrp_db[static_cast<std::size_t>(best)] < floor_db) return std::nullopt;
  res.selected = best;
  res.beam_az = cells[static_cast<std::size_t>(best)].center_az;
  res.beam_el = cells[static_cast<std::size_t>(best)].center_el;
  return res;
}

}  // namespace

std::optional<SweepResult> p1_acquire(const TapChannel& channel, const BeamBook& book,
                                      const AntennaTuple& array, double wavelength,
                                      RngStream* rng) {
  if (channel.paths.empty()) return std::nullopt;
  AntennaTuple wide = array;
  wide.m_a = std::min(array.m_a, book.ssb_subarray);
  wide.n_a = std::min(array.n_a, book.ssb_subarray);
  const auto cells = tile(-book.sector_az_rad / 2, book.sector_az_rad, book.n_ssb_az,
                          -book.sector_el_rad / 2, book.sector_el_rad, book.n_ssb_el);
  return sweep(channel, wide, wavelength, cells, book.detection_floor_db,
               book.rsrp_noise_sigma_db, rng);
}

std::optional<std::pair<Measurement, Measurement>> p2_refine(
    const SweepResult& p1, const TapChannel& channel, const BeamBook& book,
    const AntennaTuple& array, double wavelength, int bs_id, RngStream* rng) {
  if (p1.selected < 0) return std::nullopt;
  const double az0 = p1.beam_az - book.ssb_az_res() / 2;
  const double el0 = p1.beam_el - book.ssb_el_res() / 2;
  const auto cells = tile(az0, book.ssb_az_res(), book.n_prs_az, el0, book.ssb_el_res(),
                          book.n_prs_el);
  const auto fine = sweep(channel, array, wavelength, cells, book.detection_floor_db,
                          book.rsrp_noise_sigma_db, rng);
  if (!fine) return std::nullopt;

  // Quantization std of a uniform cell; the floor keeps weights finite for
  // degenerate single-beam books.
  const double sig_az = std::max(book.prs_az_res() / std::sqrt(12.0), 1e-6);
  const double sig_el = std::max(book.prs_el_res() / std::sqrt(12.0), 1e-6);

  Measurement az;
  az.kind = MeasKind::aod_az;
  az.value = fine->beam_az;
  az.sigma = sig_az;
  az.bs_id = bs_id;
  az.los = channel.has_los();

  Measurement el;
  el.kind = MeasKind::aod_el;
  el.value = fine->beam_el;
  el.sigma = sig_el;
  el.bs_id = bs_id;
  el.los = channel.has_los();
  return std::make_pair(az, el);
}

}  // namespace nrloc
