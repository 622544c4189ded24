#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace nrloc {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kBoltzmann = 1.380649e-23;    // J/K
inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded random stream. Every Monte-Carlo run owns one, derived as
/// master_seed ^ run_index, so results do not depend on scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  static RngStream for_run(std::uint64_t master_seed, std::uint64_t run_index) {
    return RngStream(master_seed ^ run_index);
  }

  double uniform() { return uni_(eng_); }
  double gauss(double sigma) { return sigma > 0.0 ? sigma * norm_(eng_) : 0.0; }
  double exponential(double mean) {
    if (mean <= 0.0) return 0.0;
    return -mean * std::log1p(-uni_(eng_));
  }
  std::uint64_t bits() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  std::uniform_real_distribution<double> uni_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

/// Thrown when a configuration or input violates a documented precondition.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nrloc
