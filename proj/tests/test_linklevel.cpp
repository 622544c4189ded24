#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nrloc/fft.hpp"
#include "nrloc/linklevel.hpp"

using namespace nrloc;

namespace {

PrsConfig small_prs(int n_rb = 8, int comb = 2, int n_symb = 2) {
  PrsConfig c;
  c.cell_id = 7;
  c.comb_size = comb;
  c.n_symb = n_symb;
  c.n_rb = n_rb;
  return c;
}

ResourceGrid prs_grid(const PrsConfig& c, int mu = 1) {
  return map_to_grid(std::span(&c, 1), {}, {}, mu, 0, 0);
}

TapChannel one_path(double delay_s, cplx gain = {1.0, 0.0}) {
  TapChannel ch;
  Path p;
  p.delay_s = delay_s;
  p.gain = gain;
  ch.paths.push_back(p);
  return ch;
}

}  // namespace

TEST_CASE("fft impulse and round trip") {
  std::vector<cplx> x(64, cplx{0, 0});
  x[0] = {1, 0};
  const auto spectrum = fft(x, false);
  for (const auto& v : spectrum) CHECK(std::abs(v - cplx{1, 0}) < 1e-12);

  RngStream rng(3);
  std::vector<cplx> y(256);
  for (auto& v : y) v = {rng.gauss(1.0), rng.gauss(1.0)};
  const auto back = fft(fft(y, false), true);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(back[i] - y[i]) < 1e-10);

  CHECK_THROWS(fft_inplace(x.data(), 48, false));
}

TEST_CASE("empty grid modulates to silence") {
  const ResourceGrid grid(0, 0, 1, 96);
  const OfdmWaveform w = ofdm_modulate(grid, 256);
  CHECK(w.samples.empty());
  CHECK(w.energy() == 0.0);
}

TEST_CASE("grid wider than the FFT is rejected") {
  const PrsConfig c = small_prs(64);  // 768 subcarriers
  CHECK_THROWS_AS(ofdm_modulate(prs_grid(c), 512), ValidationError);
}

TEST_CASE("single occupied subcarrier gives a complex exponential") {
  // One PRS RE only: comb 12, 1 RB -> a single subcarrier per symbol.
  PrsConfig c;
  c.comb_size = 12;
  c.n_symb = 12;
  c.n_rb = 1;
  const ResourceGrid grid = prs_grid(c);
  const int n_fft = 64;
  const OfdmWaveform w = ofdm_modulate(grid, n_fft);
  REQUIRE(!w.symbols.empty());

  // Analytic IDFT oracle for the first symbol.
  const auto& first = *grid.entries().begin();
  const int rel = first.first.subcarrier - grid.subcarriers() / 2;
  const int bin = rel >= 0 ? rel : n_fft + rel;
  const SymbolSlice slice = w.symbols.front();
  for (std::size_t n = 0; n < 8; ++n) {
    const cplx expect = first.second.symbol *
                        std::polar(1.0 / n_fft, 2.0 * kPi * bin * static_cast<double>(n) / n_fft) ;
    const cplx got = w.samples[slice.start + slice.cp_len + n];
    CHECK(std::abs(got - expect) < 1e-12);
  }
}

TEST_CASE("modulate then demodulate recovers the grid") {
  const PrsConfig c = small_prs(8, 4, 4);
  const ResourceGrid grid = prs_grid(c);
  const OfdmWaveform w = ofdm_modulate(grid, 128);
  const auto cells = ofdm_demodulate(w, grid.subcarriers());
  std::size_t matched = 0;
  for (const auto& [coord, value] : cells) {
    const GridEntry* e = grid.at(coord);
    if (e != nullptr) {
      CHECK(std::abs(value - e->symbol) < 1e-10);
      ++matched;
    } else {
      CHECK(std::abs(value) < 1e-10);
    }
  }
  CHECK(matched == grid.size());
}

TEST_CASE("channel identity and integer shift") {
  const ResourceGrid grid = prs_grid(small_prs());
  const OfdmWaveform w = ofdm_modulate(grid, 128);

  const OfdmWaveform same = apply_channel(w, one_path(0.0));
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(same.samples[i] - w.samples[i]) < 1e-15);

  const int k = 17;
  const OfdmWaveform shifted = apply_channel(w, one_path(k * w.sample_time()));
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(shifted.samples[i + k] - w.samples[i]) < 1e-12);

  CHECK_THROWS_AS(apply_channel(w, one_path(1.0)), ValidationError);
}

TEST_CASE("two equal paths bound the output energy") {
  const ResourceGrid grid = prs_grid(small_prs());
  const OfdmWaveform w = ofdm_modulate(grid, 128);
  TapChannel ch = one_path(0.0);
  ch.paths.push_back(one_path(3.7 * w.sample_time()).paths[0]);
  const OfdmWaveform out = apply_channel(w, ch);
  CHECK(out.energy() <= 4.0 * w.energy() * (1.0 + 1e-9));
}

TEST_CASE("noise temperature and power") {
  CHECK(noise_power_w(1e6, 0.0, 290.0) == doctest::Approx(kBoltzmann * 1e6 * 290.0));
  // Hand evaluation: T_e = 298 + 290*(10^0.9 - 1).
  const double t_e = 298.0 + 290.0 * (std::pow(10.0, 0.9) - 1.0);
  CHECK(noise_power_w(1e8, 9.0, 298.0) == doctest::Approx(kBoltzmann * 1e8 * t_e));
}

TEST_CASE("awgn empirical power matches the target") {
  OfdmWaveform w;
  w.sample_rate = 1e6;
  w.samples.assign(1000000, cplx{0, 0});
  RngStream rng(5);
  const double n0 = noise_power_w(100e6, 9.0, 298.0);
  add_awgn(w, 100e6, 9.0, 298.0, rng);
  const double measured = w.energy() / static_cast<double>(w.samples.size());
  CHECK(measured == doctest::Approx(n0).epsilon(0.02));
}

TEST_CASE("toa: noiseless integer delay is exact") {
  const ResourceGrid grid = prs_grid(small_prs());
  const OfdmWaveform ref = ofdm_modulate(grid, 128);
  for (int k : {0, 3, 41}) {
    const OfdmWaveform rx = apply_channel(ref, one_path(k * ref.sample_time()));
    ToaConfig cfg;
    cfg.refine = false;
    for (PeakMode mode : {PeakMode::max_peak, PeakMode::first_peak}) {
      cfg.mode = mode;
      const auto toa = estimate_toa(rx, ref, cfg);
      REQUIRE(toa.has_value());
      CHECK(*toa == k * ref.sample_time());  // bit-exact integer lag
    }
    cfg.refine = true;
    cfg.mode = PeakMode::first_peak;
    const auto refined = estimate_toa(rx, ref, cfg);
    REQUIRE(refined.has_value());
    CHECK(std::abs(*refined - k * ref.sample_time()) < 1e-9 * ref.sample_time());
  }
}

TEST_CASE("toa: fractional delays under refinement") {
  const ResourceGrid grid = prs_grid(small_prs(16));
  const OfdmWaveform ref = ofdm_modulate(grid, 256);
  const double ts = ref.sample_time();
  for (double frac : {0.37, 0.11, 0.63, 0.91}) {
    const double delay = (20.0 + frac) * ts;
    const OfdmWaveform rx = apply_channel(ref, one_path(delay));
    ToaConfig cfg;
    cfg.refine = true;
    const auto toa = estimate_toa(rx, ref, cfg);
    REQUIRE(toa.has_value());
    CHECK(std::abs(*toa - delay) < 0.1 * ts);
  }
}

TEST_CASE("toa: zero input fails detection") {
  const ResourceGrid grid = prs_grid(small_prs());
  const OfdmWaveform ref = ofdm_modulate(grid, 128);
  OfdmWaveform rx = ref;
  rx.samples.assign(rx.samples.size() + 64, cplx{0, 0});
  CHECK_FALSE(estimate_toa(rx, ref).has_value());

  OfdmWaveform zero_ref = ref;
  std::fill(zero_ref.samples.begin(), zero_ref.samples.end(), cplx{0, 0});
  CHECK_THROWS_AS(estimate_toa(rx, zero_ref), ValidationError);
}

TEST_CASE("toa: first peak never exceeds the max peak delay") {
  const ResourceGrid grid = prs_grid(small_prs(16));
  const OfdmWaveform ref = ofdm_modulate(grid, 256);
  RngStream rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    TapChannel ch;
    Path direct;
    direct.delay_s = (5.0 + rng.uniform() * 20.0) * ref.sample_time();
    direct.gain = {0.8, 0.0};
    Path echo;
    echo.delay_s = direct.delay_s + (5.0 + rng.uniform() * 30.0) * ref.sample_time();
    echo.gain = std::polar(0.7 + 0.6 * rng.uniform(), rng.uniform() * 2.0 * kPi);
    ch.paths = {direct, echo};
    const OfdmWaveform rx = apply_channel(ref, ch);

    ToaConfig cfg;
    cfg.refine = false;
    cfg.mode = PeakMode::first_peak;
    const auto first = estimate_toa(rx, ref, cfg);
    cfg.mode = PeakMode::max_peak;
    const auto max = estimate_toa(rx, ref, cfg);
    REQUIRE(first.has_value());
    REQUIRE(max.has_value());
    CHECK(*first <= *max + 1e-15);
  }
}

TEST_CASE("rsrp basics") {
  std::vector<cplx> unit(64, cplx{1.0, 0.0});
  CHECK(rsrp_db(unit) == doctest::Approx(0.0));
  std::vector<cplx> twice(64, cplx{2.0, 0.0});
  CHECK(rsrp_db(twice) == doctest::Approx(6.0206).epsilon(1e-4));
  CHECK_THROWS_AS(rsrp_db(std::span<const cplx>{}), ValidationError);
}

TEST_CASE("steering vector properties") {
  const AntennaTuple array{1, 1, 4, 4, 1};
  const double lambda = 0.1;

  const Eigen::VectorXcd broadside = steering_vector(array, lambda, 0.0, 0.0);
  for (int i = 0; i < broadside.size(); ++i)
    CHECK(std::abs(broadside(i) - cplx{1, 0}) < 1e-12);

  const Eigen::VectorXcd plus = steering_vector(array, lambda, 0.4, 0.0);
  const Eigen::VectorXcd minus = steering_vector(array, lambda, -0.4, 0.0);
  for (int i = 0; i < plus.size(); ++i)
    CHECK(std::abs(plus(i) - std::conj(minus(i))) < 1e-12);

  const cplx self = (plus.adjoint() * plus)(0);
  CHECK(std::abs(self) == doctest::Approx(16.0));
  CHECK_THROWS_AS(steering_vector(array, 0.0, 0.0, 0.0), ValidationError);
}

namespace {

ArraySnapshot synth_snapshot(double az, double el, int m_a, int n_a, double snr_db,
                             int n_snap, RngStream& rng) {
  const AntennaTuple array{1, 1, m_a, n_a, 1};
  const double lambda = 0.0857;
  TapChannel ch;
  Path p;
  p.aoa_az = az;
  p.aoa_el = el;
  p.gain = {1.0, 0.0};
  ch.paths.push_back(p);
  std::vector<double> freqs(static_cast<std::size_t>(n_snap));
  for (int i = 0; i < n_snap; ++i) freqs[static_cast<std::size_t>(i)] = 30e3 * i;
  const double sigma = std::pow(10.0, -snr_db / 20.0);
  return make_array_snapshots(ch, array, lambda, freqs, sigma, rng);
}

}  // namespace

TEST_CASE("music finds an on-grid source exactly in the noiseless case") {
  RngStream rng(21);
  const double az = deg2rad(12.0), el = deg2rad(-4.5);
  const ArraySnapshot snap = synth_snapshot(az, el, 8, 8, 300.0, 32, rng);
  const AngleGrid grid_az{-kPi / 3, kPi / 3, deg2rad(0.5)};
  const AngleGrid grid_el{-kPi / 6, kPi / 6, deg2rad(0.5)};
  const MusicResult res = music_aoa(snap, 1, grid_az, grid_el);
  CHECK(res.az == doctest::Approx(az).epsilon(1e-9));
  CHECK(res.el == doctest::Approx(el).epsilon(1e-9));
}

TEST_CASE("music survives a global phase rotation") {
  RngStream rng(22);
  ArraySnapshot snap = synth_snapshot(deg2rad(-8.0), deg2rad(3.0), 8, 8, 20.0, 64, rng);
  const AngleGrid grid_az{-kPi / 3, kPi / 3, deg2rad(0.5)};
  const AngleGrid grid_el{-kPi / 6, kPi / 6, deg2rad(0.5)};
  const MusicResult before = music_aoa(snap, 1, grid_az, grid_el);
  snap.data *= std::polar(1.0, 1.234);
  const MusicResult after = music_aoa(snap, 1, grid_az, grid_el);
  CHECK(before.az == after.az);
  CHECK(before.el == after.el);
  CHECK((before.spectrum - after.spectrum).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("music separates two well-spaced sources") {
  RngStream rng(23);
  const AntennaTuple array{1, 1, 8, 8, 1};
  const double lambda = 0.0857;
  TapChannel ch;
  Path a;
  a.aoa_az = deg2rad(-20.0);
  Path b;
  b.aoa_az = deg2rad(25.0);
  b.delay_s = 2e-7;  // decorrelates the two sources across the pilot comb
  ch.paths = {a, b};
  std::vector<double> freqs(128);
  for (std::size_t i = 0; i < freqs.size(); ++i) freqs[i] = 120e3 * static_cast<double>(i);
  const ArraySnapshot snap = make_array_snapshots(ch, array, lambda, freqs, 0.01, rng);
  const AngleGrid grid_az{-kPi / 3, kPi / 3, deg2rad(0.5)};
  const AngleGrid grid_el{0.0, 0.0, deg2rad(0.5)};
  const MusicResult res = music_aoa(snap, 2, grid_az, grid_el);

  // Both true azimuths must host a local spectrum peak within 1 degree.
  auto peak_near = [&](double target) {
    double best = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < res.az_grid.size(); ++i) {
      if (std::abs(res.az_grid[i] - target) < deg2rad(1.01) && res.spectrum(i, 0) > best) {
        best = res.spectrum(i, 0);
        best_i = i;
      }
    }
    const double here = res.spectrum(best_i, 0);
    const double left = best_i > 0 ? res.spectrum(best_i - 1, 0) : 0.0;
    const double right =
        best_i + 1 < res.az_grid.size() ? res.spectrum(best_i + 1, 0) : 0.0;
    return here >= left && here >= right;
  };
  CHECK(peak_near(deg2rad(-20.0)));
  CHECK(peak_near(deg2rad(25.0)));
}

TEST_CASE("music rejects impossible source counts") {
  RngStream rng(24);
  const ArraySnapshot snap = synth_snapshot(0.1, 0.0, 2, 2, 20.0, 8, rng);
  const AngleGrid g{-1.0, 1.0, 0.1};
  CHECK_THROWS_AS(music_aoa(snap, 4, g, g), ValidationError);
  CHECK_THROWS_AS(music_aoa(snap, 0, g, g), ValidationError);
}

TEST_CASE("serial and parallel kernels are bit-identical") {
  RngStream rng(31);
  std::vector<cplx> ref(2048), rx(2048 + 256);
  for (auto& v : ref) v = {rng.gauss(1.0), rng.gauss(1.0)};
  for (auto& v : rx) v = {rng.gauss(1.0), rng.gauss(1.0)};
  const auto serial = xcorr_mag2_serial(rx, ref, 256);
  const auto parallel = xcorr_mag2_parallel(rx, ref, 256);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i] == parallel[i]);

  const ArraySnapshot snap = synth_snapshot(0.2, -0.05, 8, 8, 15.0, 50, rng);
  const AngleGrid grid_az{-kPi / 3, kPi / 3, deg2rad(1.0)};
  const AngleGrid grid_el{-kPi / 6, kPi / 6, deg2rad(1.0)};
  const MusicResult s = music_aoa(snap, 1, grid_az, grid_el, false);
  const MusicResult p = music_aoa(snap, 1, grid_az, grid_el, true);
  CHECK(s.az == p.az);
  CHECK(s.el == p.el);
  CHECK((s.spectrum - p.spectrum).cwiseAbs().maxCoeff() == 0.0);
}
