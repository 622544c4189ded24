#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "nrloc/geometry.hpp"
#include "nrloc/grid5g.hpp"

namespace nrloc {

using cplx = std::complex<double>;

struct SymbolSlice {
  std::size_t start = 0;    // index of the CP's first sample
  std::size_t cp_len = 0;
  std::size_t body_len = 0; // n_fft * oversampling
  long slot = 0;
  int symbol = 0;
};

struct OfdmWaveform {
  std::vector<cplx> samples;
  double sample_rate = 0.0;
  int n_fft = 0;
  int oversampling = 1;
  std::vector<SymbolSlice> symbols;

  double sample_time() const { return 1.0 / sample_rate; }
  double energy() const;
};

/// Per-symbol IFFT of the occupied subcarriers with cyclic prefix, subcarriers
/// centered around DC. Throws when the grid is wider than n_fft.
OfdmWaveform ofdm_modulate(const ResourceGrid& grid, int n_fft, int oversampling = 1);

/// Inverse of ofdm_modulate for the symbol layout carried by the waveform.
/// Returns (coordinate, value) pairs for the requested subcarrier count.
std::vector<std::pair<GridCoord, cplx>> ofdm_demodulate(const OfdmWaveform& wave, int n_sc);

/// One propagation path of the tapped-delay channel.
struct Path {
  double delay_s = 0.0;
  cplx gain{1.0, 0.0};
  double aod_az = 0.0, aod_el = 0.0;  // departure, BS local frame
  double aoa_az = 0.0, aoa_el = 0.0;  // arrival, receiver local frame
  bool los = true;
};

struct TapChannel {
  std::vector<Path> paths;
  bool has_los() const;
  double min_delay() const;
};

/// Geometric channel: LOS path (when visible) plus specular bounces.
/// Gains follow free-space loss over the total path length, reflections
/// additionally attenuated by the polygon loss. Departure/arrival angles are
/// expressed in the local frames of the two endpoints.
TapChannel build_channel(const Position3D& tx, const ArrayOrientation& tx_orient,
                         const Position3D& rx, const ArrayOrientation& rx_orient,
                         const ObstacleSet& obstacles, double fc_hz, double tx_power_dbm,
                         int max_bounces = 1);

/// Sum over paths of gain * delayed(wave). Fractional delays use a 32-tap
/// windowed-sinc interpolator. Throws when a delay exceeds max_extra_s.
OfdmWaveform apply_channel(const OfdmWaveform& wave, const TapChannel& channel,
                           double max_extra_s = 20e-6);

/// Noise temperature T_ant + 290(NF-1) and the resulting total power over bw.
double noise_power_w(double bw_hz, double nf_db, double t_ant_k);

/// Adds circular complex Gaussian noise with per-sample power N0(bw).
void add_awgn(OfdmWaveform& wave, double bw_hz, double nf_db, double t_ant_k, RngStream& rng);

/// Test/benchmark helper: noise power set relative to the waveform's mean
/// sample power for a target SNR.
void add_awgn_snr(OfdmWaveform& wave, double snr_db, RngStream& rng);

/// |cross-correlation|^2 between rx and ref for lags 0..max_lag. The serial
/// and OpenMP variants compute identical values; the parallel one splits by
/// lag index.
std::vector<double> xcorr_mag2_serial(std::span<const cplx> rx, std::span<const cplx> ref,
                                      std::size_t max_lag);
std::vector<double> xcorr_mag2_parallel(std::span<const cplx> rx, std::span<const cplx> ref,
                                        std::size_t max_lag);

enum class PeakMode { max_peak, first_peak };

struct ToaConfig {
  PeakMode mode = PeakMode::first_peak;
  bool refine = true;            // 3-point parabolic interpolation
  double first_peak_threshold = 0.5;  // fraction of the global |xcorr| max
  std::size_t max_lag = 0;       // 0: rx length - ref length
  bool parallel = true;
};

/// Cross-correlation TOA. Empty when no peak clears the detection threshold.
std::optional<double> estimate_toa(const OfdmWaveform& rx, const OfdmWaveform& ref,
                                   const ToaConfig& cfg = {});

/// Mean power of the given resource elements, in dB (10*log10 of mean |x|^2).
double rsrp_db(std::span<const cplx> re_values);

/// Unit-modulus response of a lambda/2-spaced rectangular array lying in the
/// local y-z plane, boresight +x. Angles in the paper's convention (elevation
/// positive below the horizontal).
Eigen::VectorXcd steering_vector(const AntennaTuple& array, double wavelength, double az,
                                 double el);

/// Per-element samples on demodulated pilot subcarriers.
struct ArraySnapshot {
  Eigen::MatrixXcd data;  // elements x snapshots
  AntennaTuple array;
  double wavelength = 0.0;
};

/// Synthesize uplink array snapshots for pilots on the given baseband
/// subcarrier frequencies (one snapshot per pilot RE), through the channel's
/// arrival angles. noise_sigma is per-element complex noise std.
ArraySnapshot make_array_snapshots(const TapChannel& channel, const AntennaTuple& array,
                                   double wavelength, std::span<const double> pilot_freqs_hz,
                                   double noise_sigma, RngStream& rng);

struct AngleGrid {
  double min_rad = -kPi / 2;
  double max_rad = kPi / 2;
  double step_rad = deg2rad(0.5);
  std::vector<double> points() const;
};

struct MusicResult {
  double az = 0.0;
  double el = 0.0;
  Eigen::MatrixXd spectrum;  // az index x el index, linear scale
  std::vector<double> az_grid, el_grid;
};

/// Subspace direction estimate: eigendecompose the sample covariance, project
/// candidate steering vectors onto the noise subspace, take the grid argmax of
/// the reciprocal projection. Throws when n_sources >= element count.
MusicResult music_aoa(const ArraySnapshot& snap, int n_sources, const AngleGrid& az,
                      const AngleGrid& el, bool parallel = true);

/// Dump interleaved little-endian complex floats with a small text header.
void dump_waveform(const OfdmWaveform& wave, const std::string& path);

}  // namespace nrloc
