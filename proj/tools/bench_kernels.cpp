// Timing comparison of the serial reference kernels against their OpenMP
// counterparts: cross-correlation lags and the MUSIC spectrum scan.
#include <omp.h>

#include <cstdio>
#include <vector>

#include "nrloc/linklevel.hpp"

using namespace nrloc;

namespace {

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = omp_get_wtime();
    fn();
    best = std::min(best, omp_get_wtime() - t0);
  }
  return best;
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());

  {
    RngStream rng(7);
    const std::size_t ref_len = 16384, max_lag = 2048;
    std::vector<cplx> ref(ref_len), rx(ref_len + max_lag);
    for (auto& v : ref) v = {rng.gauss(1.0), rng.gauss(1.0)};
    for (auto& v : rx) v = {rng.gauss(1.0), rng.gauss(1.0)};

    volatile double sink = 0.0;
    const double ts = time_best_of(3, [&] {
      auto c = xcorr_mag2_serial(rx, ref, max_lag);
      sink = c.back();
    });
    const double tp = time_best_of(3, [&] {
      auto c = xcorr_mag2_parallel(rx, ref, max_lag);
      sink = c.back();
    });
    std::printf("xcorr  (%zu x %zu lags): serial %.3f s  parallel %.3f s  speedup %.2fx\n",
                ref_len, max_lag + 1, ts, tp, ts / tp);
    (void)sink;
  }

  {
    RngStream rng(11);
    const AntennaTuple array{1, 1, 8, 8, 1};
    const double lambda = 0.0857;
    TapChannel ch;
    Path p;
    p.aoa_az = deg2rad(12.0);
    p.aoa_el = deg2rad(-4.0);
    ch.paths.push_back(p);
    std::vector<double> freqs(100);
    for (std::size_t i = 0; i < freqs.size(); ++i)
      freqs[i] = 30e3 * static_cast<double>(i);
    const ArraySnapshot snap = make_array_snapshots(ch, array, lambda, freqs, 0.05, rng);
    const AngleGrid az{-kPi / 3, kPi / 3, deg2rad(0.25)};
    const AngleGrid el{-kPi / 6, kPi / 6, deg2rad(0.25)};

    volatile double sink = 0.0;
    const double ts = time_best_of(3, [&] {
      auto r = music_aoa(snap, 1, az, el, /*parallel=*/false);
      sink = r.az;
    });
    const double tp = time_best_of(3, [&] {
      auto r = music_aoa(snap, 1, az, el, /*parallel=*/true);
      sink = r.az;
    });
    std::printf("music  (8x8, %zu x %zu grid): serial %.3f s  parallel %.3f s  speedup %.2fx\n",
                az.points().size(), el.points().size(), ts, tp, ts / tp);
    (void)sink;
  }
  return 0;
}
