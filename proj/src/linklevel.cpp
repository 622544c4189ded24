#include "nrloc/linklevel.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nrloc/fft.hpp"

namespace nrloc {

double OfdmWaveform::energy() const {
  double e = 0.0;
  for (const auto& s : samples) e += std::norm(s);
  return e;
}

OfdmWaveform ofdm_modulate(const ResourceGrid& grid, int n_fft, int oversampling) {
  if (oversampling < 1) throw ValidationError("ofdm_modulate: oversampling >= 1");
  if (grid.subcarriers() > n_fft)
    throw ValidationError("ofdm_modulate: grid wider than the FFT size");

  const Numerology num = numerology_params(grid.mu());
  const int body = n_fft * oversampling;
  const double fs = num.scs_hz * body;
  const std::size_t cp_len =
      static_cast<std::size_t>(std::llround(num.cp_duration_s * fs));
  const std::size_t stride = cp_len + static_cast<std::size_t>(body);
  const int n_sc = grid.subcarriers();

  OfdmWaveform wave;
  wave.sample_rate = fs;
  wave.n_fft = n_fft;
  wave.oversampling = oversampling;
  if (grid.entries().empty()) return wave;

  const long slot0 = grid.entries().begin()->first.slot;
  const long last_slot = grid.entries().rbegin()->first.slot;
  int last_symbol = 0;
  for (const auto& [coord, entry] : grid.entries())
    if (coord.slot == last_slot) last_symbol = std::max(last_symbol, coord.symbol);

  const long n_symbols = (last_slot - slot0) * 14 + last_symbol + 1;
  wave.samples.assign(static_cast<std::size_t>(n_symbols) * stride, cplx{0.0, 0.0});
  wave.symbols.reserve(static_cast<std::size_t>(n_symbols));

  std::vector<cplx> spectrum(static_cast<std::size_t>(body));
  auto it = grid.entries().begin();
  for (long sym_idx = 0; sym_idx < n_symbols; ++sym_idx) {
    const long slot = slot0 + sym_idx / 14;
    const int symbol = static_cast<int>(sym_idx % 14);
    SymbolSlice slice;
    slice.start = static_cast<std::size_t>(sym_idx) * stride;
    slice.cp_len = cp_len;
    slice.body_len = static_cast<std::size_t>(body);
    slice.slot = slot;
    slice.symbol = symbol;

    std::fill(spectrum.begin(), spectrum.end(), cplx{0.0, 0.0});
    bool occupied = false;
    while (it != grid.entries().end() && it->first.slot == slot && it->first.symbol == symbol) {
      const int k = it->first.subcarrier;
      const int rel = k - n_sc / 2;  // center the allocation around DC
      const int bin = rel >= 0 ? rel : body + rel;
      spectrum[static_cast<std::size_t>(bin)] = it->second.symbol;
      occupied = true;
      ++it;
    }
    if (occupied) {
      std::vector<cplx> body_samples = spectrum;
      fft_inplace(body_samples.data(), body_samples.size(), true);
      cplx* dst = wave.samples.data() + slice.start;
      for (std::size_t i = 0; i < cp_len; ++i)
        dst[i] = body_samples[body_samples.size() - cp_len + i];
      std::copy(body_samples.begin(), body_samples.end(), dst + cp_len);
    }
    wave.symbols.push_back(slice);
  }
  return wave;
}

std::vector<std::pair<GridCoord, cplx>> ofdm_demodulate(const OfdmWaveform& wave, int n_sc) {
  std::vector<std::pair<GridCoord, cplx>> out;
  const int body = wave.n_fft * wave.oversampling;
  std::vector<cplx> buf(static_cast<std::size_t>(body));
  for (const auto& slice : wave.symbols) {
    if (slice.start + slice.cp_len + slice.body_len > wave.samples.size()) break;
    const cplx* src = wave.samples.data() + slice.start + slice.cp_len;
    std::copy(src, src + body, buf.begin());
    fft_inplace(buf.data(), buf.size(), false);
    for (int k = 0; k < n_sc; ++k) {
      const int rel = k - n_sc / 2;
      const int bin = rel >= 0 ? rel : body + rel;
      out.emplace_back(GridCoord{slice.slot, slice.symbol, k}, buf[static_cast<std::size_t>(bin)]);
    }
  }
  return out;
}

bool TapChannel::has_los() const {
  return std::any_of(paths.begin(), paths.end(), [](const Path& p) { return p.los; });
}

double TapChannel::min_delay() const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : paths) d = std::min(d, p.delay_s);
  return d;
}

namespace {

// Azimuth/elevation of a unit direction in the observer's local frame,
// elevation positive when the target sits below the horizontal.
std::pair<double, double> local_angles(const Eigen::Vector3d& dir,
                                       const ArrayOrientation& orient) {
  const double az = wrap_angle(std::atan2(dir.y(), dir.x()) - orient.yaw);
  const double el =
      wrap_angle(std::atan2(-dir.z(), std::hypot(dir.x(), dir.y())) - orient.roll);
  return {az, el};
}

}  // namespace

TapChannel build_channel(const Position3D& tx, const ArrayOrientation& tx_orient,
                         const Position3D& rx, const ArrayOrientation& rx_orient,
                         const ObstacleSet& obstacles, double fc_hz, double tx_power_dbm,
                         int max_bounces) {
  const double lambda = kSpeedOfLight / fc_hz;
  const double amp0 = std::sqrt(std::pow(10.0, (tx_power_dbm - 30.0) / 10.0));

  TapChannel ch;
  if (los_check(tx, rx, obstacles)) {
    const double d = (rx - tx).norm();
    Path p;
    p.delay_s = d / kSpeedOfLight;
    const double amp = amp0 * lambda / (4.0 * kPi * d);
    p.gain = std::polar(amp, -2.0 * kPi * fc_hz * p.delay_s);
    std::tie(p.aod_az, p.aod_el) = local_angles((rx - tx).normalized(), tx_orient);
    std::tie(p.aoa_az, p.aoa_el) = local_angles((tx - rx).normalized(), rx_orient);
    p.los = true;
    ch.paths.push_back(p);
  }
  for (const auto& bounce : find_reflections(tx, rx, obstacles, max_bounces)) {
    Path p;
    p.delay_s = bounce.total_length / kSpeedOfLight;
    const double amp = amp0 * lambda / (4.0 * kPi * bounce.total_length) *
                       std::pow(10.0, -bounce.loss_db / 20.0);
    p.gain = std::polar(amp, -2.0 * kPi * fc_hz * p.delay_s);
    std::tie(p.aod_az, p.aod_el) = local_angles(bounce.departure_dir, tx_orient);
    std::tie(p.aoa_az, p.aoa_el) = local_angles(-bounce.arrival_dir, rx_orient);
    p.los = false;
    ch.paths.push_back(p);
  }
  return ch;
}

namespace {

constexpr int kSincTaps = 32;
constexpr int kSincCenter = 15;

}  // namespace

OfdmWaveform apply_channel(const OfdmWaveform& wave, const TapChannel& channel,
                           double max_extra_s) {
  if (channel.paths.empty()) {
    OfdmWaveform out = wave;
    std::fill(out.samples.begin(), out.samples.end(), cplx{0.0, 0.0});
    return out;
  }
  double max_delay = 0.0;
  for (const auto& p : channel.paths) max_delay = std::max(max_delay, p.delay_s);
  if (max_delay > max_extra_s) throw ValidationError("apply_channel: delay overflow");

  const double fs = wave.sample_rate;
  const std::size_t extra =
      static_cast<std::size_t>(std::ceil(max_delay * fs)) + kSincTaps;
  OfdmWaveform out = wave;
  out.samples.assign(wave.samples.size() + extra, cplx{0.0, 0.0});

  const std::size_t n = wave.samples.size();
  for (const auto& p : channel.paths) {
    const double d_samples = p.delay_s * fs;
    const long d_int = static_cast<long>(std::floor(d_samples));
    const double frac = d_samples - static_cast<double>(d_int);
    if (frac < 1e-9 || frac > 1.0 - 1e-9) {
      const long shift = frac > 0.5 ? d_int + 1 : d_int;
      for (std::size_t i = 0; i < n; ++i)
        out.samples[i + static_cast<std::size_t>(shift)] += p.gain * wave.samples[i];
      continue;
    }
    // Hann-windowed sinc; the kernel's own group delay (kSincCenter) is
    // folded into the integer shift.
    double taps[kSincTaps];
    for (int k = 0; k < kSincTaps; ++k) {
      const double x = static_cast<double>(k) - kSincCenter - frac;
      const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
      const double w = 0.5 * (1.0 - std::cos(2.0 * kPi * (k + 0.5) / kSincTaps));
      taps[k] = sinc * w;
    }
    const long base = d_int - kSincCenter;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx v = p.gain * wave.samples[i];
      for (int k = 0; k < kSincTaps; ++k) {
        const long j = static_cast<long>(i) + base + k;
        if (j < 0) continue;
        out.samples[static_cast<std::size_t>(j)] += v * taps[k];
      }
    }
  }
  return out;
}

double noise_power_w(double bw_hz, double nf_db, double t_ant_k) {
  const double nf_lin = std::pow(10.0, nf_db / 10.0);
  const double t_e = t_ant_k + 290.0 * (nf_lin - 1.0);
  return kBoltzmann * bw_hz * t_e;
}

void add_awgn(OfdmWaveform& wave, double bw_hz, double nf_db, double t_ant_k, RngStream& rng) {
  const double n0 = noise_power_w(bw_hz, nf_db, t_ant_k);
  const double sigma = std::sqrt(n0 / 2.0);
  for (auto& s : wave.samples) s += cplx{rng.gauss(sigma), rng.gauss(sigma)};
}

void add_awgn_snr(OfdmWaveform& wave, double snr_db, RngStream& rng) {
  double power = 0.0;
  std::size_t active = 0;
  for (const auto& s : wave.samples) {
    power += std::norm(s);
    if (std::norm(s) > 0.0) ++active;
  }
  if (active == 0) return;
  power /= static_cast<double>(active);
  const double noise = power / std::pow(10.0, snr_db / 10.0);
  const double sigma = std::sqrt(noise / 2.0);
  for (auto& s : wave.samples) s += cplx{rng.gauss(sigma), rng.gauss(sigma)};
}

namespace {

inline double xcorr_lag_mag2(const cplx* rx, const cplx* ref, std::size_t ref_len,
                             std::size_t lag) {
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < ref_len; ++i) acc += std::conj(ref[i]) * rx[i + lag];
  return std::norm(acc);
}

}  // namespace

std::vector<double> xcorr_mag2_serial(std::span<const cplx> rx, std::span<const cplx> ref,
                                      std::size_t max_lag) {
  std::vector<double> out(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag; ++lag)
    out[lag] = xcorr_lag_mag2(rx.data(), ref.data(), ref.size(), lag);
  return out;
}

std::vector<double> xcorr_mag2_parallel(std::span<const cplx> rx, std::span<const cplx> ref,
                                        std::size_t max_lag) {
  std::vector<double> out(max_lag + 1, 0.0);
  const long n = static_cast<long>(max_lag) + 1;
#pragma omp parallel for schedule(static)
  for (long lag = 0; lag < n; ++lag)
    out[static_cast<std::size_t>(lag)] =
        xcorr_lag_mag2(rx.data(), ref.data(), ref.size(), static_cast<std::size_t>(lag));
  return out;
}

std::optional<double> estimate_toa(const OfdmWaveform& rx, const OfdmWaveform& ref,
                                   const ToaConfig& cfg) {
  if (ref.samples.empty() || ref.energy() == 0.0)
    throw ValidationError("estimate_toa: empty reference");
  if (rx.samples.size() < ref.samples.size()) return std::nullopt;

  std::size_t max_lag = cfg.max_lag;
  const std::size_t lag_cap = rx.samples.size() - ref.samples.size();
  if (max_lag == 0 || max_lag > lag_cap) max_lag = lag_cap;

  const auto corr = cfg.parallel ? xcorr_mag2_parallel(rx.samples, ref.samples, max_lag)
                                 : xcorr_mag2_serial(rx.samples, ref.samples, max_lag);

  const auto global_it = std::max_element(corr.begin(), corr.end());
  const double global_max = *global_it;
  if (global_max <= 0.0) return std::nullopt;

  const double thr = cfg.first_peak_threshold * cfg.first_peak_threshold * global_max;
  std::size_t peak = static_cast<std::size_t>(global_it - corr.begin());
  if (cfg.mode == PeakMode::first_peak) {
    bool found = false;
    for (std::size_t l = 0; l < corr.size(); ++l) {
      const bool left_ok = l == 0 || corr[l] >= corr[l - 1];
      const bool right_ok = l + 1 == corr.size() || corr[l] >= corr[l + 1];
      if (left_ok && right_ok && corr[l] >= thr) {
        peak = l;
        found = true;
        break;
      }
    }
    if (!found) return std::nullopt;
  }

  double lag = static_cast<double>(peak);
  if (cfg.refine && peak > 0 && peak + 1 < corr.size()) {
    const double ym = std::sqrt(corr[peak - 1]);
    const double y0 = std::sqrt(corr[peak]);
    const double yp = std::sqrt(corr[peak + 1]);
    const double denom = ym - 2.0 * y0 + yp;
    if (std::abs(denom) > 1e-30) {
      double delta = 0.5 * (ym - yp) / denom;
      delta = std::clamp(delta, -0.5, 0.5);
      lag += delta;
    }
  }
  return lag * rx.sample_time();
}

double rsrp_db(std::span<const cplx> re_values) {
  if (re_values.empty()) throw ValidationError("rsrp: empty input");
  double acc = 0.0;
  for (const auto& v : re_values) acc += std::norm(v);
  acc /= static_cast<double>(re_values.size());
  return 10.0 * std::log10(std::max(acc, 1e-300));
}

Eigen::VectorXcd steering_vector(const AntennaTuple& array, double wavelength, double az,
                                 double el) {
  if (wavelength <= 0.0) throw ValidationError("steering_vector: wavelength > 0 required");
  const int m = array.m_a, n = array.n_a;
  Eigen::VectorXcd v(m * n);
  // Propagation direction toward the source; elevation positive below horizon.
  const Eigen::Vector3d u(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                          -std::sin(el));
  const double half = wavelength / 2.0;
  int e = 0;
  for (int iz = 0; iz < m; ++iz) {
    for (int iy = 0; iy < n; ++iy, ++e) {
      const Eigen::Vector3d p(0.0, iy * half, iz * half);
      v(e) = std::polar(1.0, 2.0 * kPi / wavelength * p.dot(u));
    }
  }
  return v;
}

ArraySnapshot make_array_snapshots(const TapChannel& channel, const AntennaTuple& array,
                                   double wavelength, std::span<const double> pilot_freqs_hz,
                                   double noise_sigma, RngStream& rng) {
  ArraySnapshot snap;
  snap.array = array;
  snap.wavelength = wavelength;
  const int m = array.elements();
  snap.data.resize(m, static_cast<Eigen::Index>(pilot_freqs_hz.size()));
  snap.data.setZero();

  std::vector<Eigen::VectorXcd> responses;
  responses.reserve(channel.paths.size());
  for (const auto& p : channel.paths)
    responses.push_back(steering_vector(array, wavelength, p.aoa_az, p.aoa_el));

  const double comp_sigma = noise_sigma / std::sqrt(2.0);
  for (Eigen::Index s = 0; s < snap.data.cols(); ++s) {
    const double f = pilot_freqs_hz[static_cast<std::size_t>(s)];
    for (std::size_t pi = 0; pi < channel.paths.size(); ++pi) {
      const auto& p = channel.paths[pi];
      const cplx coeff = p.gain * std::polar(1.0, -2.0 * kPi * f * p.delay_s);
      snap.data.col(s) += coeff * responses[pi];
    }
    for (int e = 0; e < m; ++e)
      snap.data(e, s) += cplx{rng.gauss(comp_sigma), rng.gauss(comp_sigma)};
  }
  return snap;
}

std::vector<double> AngleGrid::points() const {
  std::vector<double> pts;
  if (step_rad <= 0.0) throw ValidationError("angle grid step must be positive");
  for (double a = min_rad; a <= max_rad + 1e-12; a += step_rad) pts.push_back(a);
  return pts;
}

MusicResult music_aoa(const ArraySnapshot& snap, int n_sources, const AngleGrid& az,
                      const AngleGrid& el, bool parallel) {
  const int m = static_cast<int>(snap.data.rows());
  const Eigen::Index n_snap = snap.data.cols();
  if (n_sources < 1 || n_sources >= m)
    throw ValidationError("music_aoa: need 1 <= n_sources < element count");
  if (n_snap < n_sources + 1)
    throw ValidationError("music_aoa: need more snapshots than sources");

  const Eigen::MatrixXcd cov =
      snap.data * snap.data.adjoint() / static_cast<double>(n_snap);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
  if (eig.info() != Eigen::Success) throw ValidationError("music_aoa: eigensolver failed");
  // Eigenvalues come out ascending: the trailing columns span the signal
  // subspace. The noise projection |En^H a|^2 equals |a|^2 - |Es^H a|^2,
  // which is much cheaper to evaluate when n_sources is small.
  const Eigen::MatrixXcd signal_basis = eig.eigenvectors().rightCols(n_sources);

  MusicResult res;
  res.az_grid = az.points();
  res.el_grid = el.points();
  const long na = static_cast<long>(res.az_grid.size());
  const long ne = static_cast<long>(res.el_grid.size());
  res.spectrum.resize(na, ne);

  auto eval_cell = [&](long ia, long ie) {
    const Eigen::VectorXcd a = steering_vector(
        snap.array, snap.wavelength, res.az_grid[static_cast<std::size_t>(ia)],
        res.el_grid[static_cast<std::size_t>(ie)]);
    const double sig = (signal_basis.adjoint() * a).squaredNorm();
    const double denom = std::max(static_cast<double>(m) - sig, 1e-12);
    return static_cast<double>(m) / denom;
  };

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (long idx = 0; idx < na * ne; ++idx) res.spectrum(idx / ne, idx % ne) = eval_cell(idx / ne, idx % ne);
  } else {
    for (long idx = 0; idx < na * ne; ++idx) res.spectrum(idx / ne, idx % ne) = eval_cell(idx / ne, idx % ne);
  }

  Eigen::Index best_a = 0, best_e = 0;
  res.spectrum.maxCoeff(&best_a, &best_e);
  res.az = res.az_grid[static_cast<std::size_t>(best_a)];
  res.el = res.el_grid[static_cast<std::size_t>(best_e)];
  return res;
}

void dump_waveform(const OfdmWaveform& wave, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("dump_waveform: cannot open " + path);
  f << "nrloc-iq float32 interleaved n=" << wave.samples.size()
    << " fs=" << wave.sample_rate << "\n";
  for (const auto& s : wave.samples) {
    const float re = static_cast<float>(s.real());
    const float im = static_cast<float>(s.imag());
    f.write(reinterpret_cast<const char*>(&re), sizeof(float));
    f.write(reinterpret_cast<const char*>(&im), sizeof(float));
  }
}

}  // namespace nrloc
