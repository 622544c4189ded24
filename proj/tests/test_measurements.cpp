#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nrloc/measurements.hpp"

using namespace nrloc;

namespace {

BasePose bs_at(int id, double x, double y, double z) {
  BasePose b;
  b.id = id;
  b.position = {x, y, z};
  return b;
}

NoiseModel quiet() {
  NoiseModel n;
  n.sigma_tof_s = 0.0;
  n.sigma_aoa_az_rad = 0.0;
  n.sigma_aoa_el_rad = 0.0;
  n.sigma_rss_db = 0.0;
  return n;
}

}  // namespace

TEST_CASE("TOF value is distance over c") {
  RngStream rng(1);
  const BasePose bs = bs_at(1, 0, 0, 0);
  const Measurement m = gen_tof({299.792458, 0, 0}, bs, quiet(), true, rng);
  CHECK(m.value == doctest::Approx(1e-6).epsilon(1e-12));  // exactly 1 us
  CHECK(m.kind == MeasKind::tof);
}

TEST_CASE("NLOS adds a nonnegative excess") {
  NoiseModel n = quiet();
  n.nlos_excess_mean_m = 5.0;
  const BasePose bs = bs_at(1, 0, 0, 0);
  const Position3D u{100, 0, 0};
  RngStream rng(2);
  double min_excess = 1e9;
  for (int i = 0; i < 100000; ++i) {
    const Measurement m = gen_tof(u, bs, n, false, rng);
    min_excess = std::min(min_excess, m.value * kSpeedOfLight - 100.0);
  }
  CHECK(min_excess >= 0.0);

  // With a pinned draw the model is purely additive.
  NoiseModel fixed = quiet();
  fixed.nlos_excess_mean_m = 0.0;  // exponential degenerates to zero
  RngStream rng2(3);
  const Measurement clean = gen_tof(u, bs, fixed, false, rng2);
  CHECK(clean.value == doctest::Approx(100.0 / kSpeedOfLight).epsilon(1e-12));
}

TEST_CASE("calibrated sigma table") {
  CHECK(calibrated_sigma_tdoa_m(0).value() == doctest::Approx(5.99));
  CHECK(calibrated_sigma_tdoa_m(1).value() == doctest::Approx(0.98));
  CHECK(calibrated_sigma_tdoa_m(2).value() == doctest::Approx(0.58));
  CHECK(calibrated_sigma_tdoa_m(3).value() == doctest::Approx(0.30));
  CHECK_FALSE(calibrated_sigma_tdoa_m(4).has_value());
}

TEST_CASE("reference BS selection") {
  const double q1[] = {10, 20, 15};
  const int id1[] = {1, 2, 3};
  CHECK(select_reference_bs(q1, id1) == 2);

  const double q2[] = {20, 20};
  const int id2[] = {1, 2};
  CHECK(select_reference_bs(q2, id2) == 1);

  const double q3[] = {7, 7, 7, 7, 7};
  const int id3[] = {5, 3, 9, 1, 4};
  CHECK(select_reference_bs(q3, id3) == 1);

  const double q4[] = {1.0};
  const int id4[] = {1};
  CHECK_THROWS_AS(select_reference_bs(q4, id4), ValidationError);
}

TEST_CASE("TDOA set values and variance") {
  const std::vector<BasePose> poses = {bs_at(1, 0, 0, 0), bs_at(2, 200, 0, 0)};
  const std::vector<bool> los = {true, true};

  SUBCASE("equidistant, noiseless") {
    RngStream rng(4);
    const auto set = gen_tdoa_set({100, 50, 0}, poses, quiet(), 1, los, rng);
    REQUIRE(set.size() == 1);
    CHECK(set[0].value == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(set[0].ref_bs_id == 1);
  }

  SUBCASE("150 m range difference") {
    RngStream rng(5);
    // d2 - d1 = 50 - 200 for u at (200+?,..): place u so d1 - d... use u on the
    // line: d1 = 175, d2 = 25 -> measured (d2 - d1) = -150 m against ref 1.
    const auto set = gen_tdoa_set({175, 0, 0}, poses, quiet(), 1, los, rng);
    REQUIRE(set.size() == 1);
    CHECK(set[0].value * kSpeedOfLight == doctest::Approx(-150.0).epsilon(1e-9));
    CHECK(std::abs(set[0].value) == doctest::Approx(150.0 / kSpeedOfLight).epsilon(1e-9));
  }

  SUBCASE("empirical variance is twice the TOF variance") {
    NoiseModel n = quiet();
    n.sigma_tof_s = 1e-8;
    RngStream rng(6);
    double sum = 0.0, sum_sq = 0.0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
      const auto set = gen_tdoa_set({100, 50, 0}, poses, n, 1, los, rng);
      sum += set[0].value;
      sum_sq += set[0].value * set[0].value;
    }
    const double var = sum_sq / trials - (sum / trials) * (sum / trials);
    const double ratio = var / (n.sigma_tof_s * n.sigma_tof_s);
    CHECK(ratio > 1.9);
    CHECK(ratio < 2.1);
  }

  SUBCASE("unknown reference is rejected") {
    RngStream rng(7);
    CHECK_THROWS_AS(gen_tdoa_set({100, 50, 0}, poses, quiet(), 99, los, rng),
                    ValidationError);
  }
}

TEST_CASE("RTT forms and extraction") {
  const BasePose bs = bs_at(1, 0, 0, 0);

  SUBCASE("reply time plus two legs") {
    RngStream rng(8);
    const Measurement m = gen_rtt({150, 0, 0}, bs, quiet(), 100e-6, true, rng);
    CHECK(m.value == doctest::Approx(100e-6 + 300.0 / kSpeedOfLight).epsilon(1e-12));
    const Measurement tof = rtt_extract_tof(m);
    CHECK(tof.value == doctest::Approx(150.0 / kSpeedOfLight).epsilon(1e-12));
  }

  SUBCASE("zero reply is twice the one-way time") {
    RngStream rng(9);
    const Measurement m = gen_rtt({150, 0, 0}, bs, quiet(), 0.0, true, rng);
    CHECK(m.value == doctest::Approx(2.0 * 150.0 / kSpeedOfLight).epsilon(1e-12));
  }

  SUBCASE("extracted TOF variance is half the leg variance") {
    NoiseModel n = quiet();
    n.sigma_tof_s = 1e-8;
    RngStream rng(10);
    double sum = 0.0, sum_sq = 0.0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
      const Measurement tof = rtt_extract_tof(gen_rtt({150, 0, 0}, bs, n, 0.0, true, rng));
      sum += tof.value;
      sum_sq += tof.value * tof.value;
    }
    const double var = sum_sq / trials - (sum / trials) * (sum / trials);
    const double ratio = var / (n.sigma_tof_s * n.sigma_tof_s);
    CHECK(ratio > 0.45);
    CHECK(ratio < 0.55);
  }

  SUBCASE("negative reply time is rejected") {
    RngStream rng(11);
    CHECK_THROWS_AS(gen_rtt({150, 0, 0}, bs, quiet(), -1.0, true, rng), ValidationError);
  }
}

TEST_CASE("AOA angles") {
  SUBCASE("due east with zero orientation") {
    RngStream rng(12);
    const auto [az, el] = gen_aoa({10, 0, 0}, bs_at(1, 0, 0, 0), quiet(), true, rng);
    CHECK(az.value == doctest::Approx(0.0));
    CHECK(el.value == doctest::Approx(0.0));
  }

  SUBCASE("yawed array shifts the local azimuth") {
    BasePose bs = bs_at(1, 0, 0, 0);
    bs.orientation.yaw = deg2rad(30.0);
    RngStream rng(13);
    const auto [az, el] = gen_aoa({10, 0, 0}, bs, quiet(), true, rng);
    CHECK(az.value == doctest::Approx(deg2rad(-30.0)).epsilon(1e-12));
  }

  SUBCASE("NLOS pulls the elevation down on average") {
    NoiseModel n = quiet();
    n.nlos_el_bias_sigma_rad = deg2rad(3.0);
    RngStream rng(14);
    double mean_los = 0.0, mean_nlos = 0.0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
      mean_los += gen_aoa({50, 0, 0}, bs_at(1, 0, 0, 10), n, true, rng).second.value;
      mean_nlos += gen_aoa({50, 0, 0}, bs_at(1, 0, 0, 10), n, false, rng).second.value;
    }
    CHECK(mean_nlos / trials < mean_los / trials);
  }
}

TEST_CASE("RSS path loss") {
  NoiseModel n = quiet();
  n.rss = {-40.0, 1.0, 2.0};

  SUBCASE("reference distance returns P0") {
    RngStream rng(15);
    const Measurement m = gen_rss({1, 0, 0}, bs_at(1, 0, 0, 0), n, rng);
    CHECK(m.value == doctest::Approx(-40.0));
  }

  SUBCASE("one decade costs 10*alpha dB") {
    RngStream rng(16);
    const Measurement m = gen_rss({10, 0, 0}, bs_at(1, 0, 0, 0), n, rng);
    CHECK(m.value == doctest::Approx(-60.0));
  }

  SUBCASE("monotone decreasing in distance") {
    RngStream rng(17);
    double prev = 1e9;
    for (double d = 1.0; d <= 100.0; d += 3.7) {
      const Measurement m = gen_rss({d, 0, 0}, bs_at(1, 0, 0, 0), n, rng);
      CHECK(m.value < prev);
      prev = m.value;
    }
  }
}

TEST_CASE("noiseless LOS values equal the model exactly") {
  RngStream rng(18);
  const BasePose bs = bs_at(1, 12, -7, 19);
  const Position3D u{-31, 44, 1.5};
  const double d = (u - bs.position).norm();

  CHECK(gen_tof(u, bs, quiet(), true, rng).value ==
        doctest::Approx(d / kSpeedOfLight).epsilon(1e-12));
  const auto [az, el] = gen_aoa(u, bs, quiet(), true, rng);
  const Eigen::Vector3d delta = u - bs.position;
  CHECK(az.value ==
        doctest::Approx(std::atan2(delta.y(), delta.x())).epsilon(1e-12));
  CHECK(el.value ==
        doctest::Approx(std::atan2(-delta.z(), std::hypot(delta.x(), delta.y())))
            .epsilon(1e-12));
}

TEST_CASE("same seed reproduces the same measurement set") {
  const std::vector<BasePose> poses = {bs_at(1, 0, 0, 10), bs_at(2, 200, 0, 10),
                                       bs_at(3, 200, 200, 10)};
  NoiseModel n;
  n.sigma_tof_s = 1e-9;
  const std::vector<bool> los = {true, false, true};
  auto generate = [&] {
    RngStream rng(99);
    MeasurementSet set;
    auto tdoas = gen_tdoa_set({70, 90, 1.5}, poses, n, 1, los, rng);
    set.items.insert(set.items.end(), tdoas.begin(), tdoas.end());
    for (const auto& p : poses) {
      auto [az, el] = gen_aoa({70, 90, 1.5}, p, n, true, rng);
      set.items.push_back(az);
      set.items.push_back(el);
    }
    return set;
  };
  const MeasurementSet a = generate();
  const MeasurementSet b = generate();
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i)
    CHECK(a.items[i].value == b.items[i].value);
}

TEST_CASE("JSONL round trip") {
  MeasurementSet set;
  set.epoch_time_s = 1.4268;
  set.truth = Position3D{10, 20, 1.5};
  Measurement tdoa;
  tdoa.kind = MeasKind::tdoa;
  tdoa.value = 3.2e-7;
  tdoa.sigma = 3.27e-9;
  tdoa.bs_id = 2;
  tdoa.ref_bs_id = 1;
  tdoa.los = false;
  set.items.push_back(tdoa);
  Measurement rtt;
  rtt.kind = MeasKind::rtt;
  rtt.value = 1.001e-4;
  rtt.sigma = 1e-9;
  rtt.bs_id = 3;
  rtt.reply_time_s = 1e-4;
  set.items.push_back(rtt);
  Measurement rss;
  rss.kind = MeasKind::rss;
  rss.value = -71.0;
  rss.sigma = 2.0;
  rss.bs_id = 1;
  rss.rss = {-40.0, 1.0, 2.1};
  set.items.push_back(rss);

  const MeasurementSet back = measurement_set_from_json(to_jsonl(set));
  REQUIRE(back.items.size() == set.items.size());
  CHECK(back.epoch_time_s == set.epoch_time_s);
  CHECK(back.truth->isApprox(*set.truth));
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    CHECK(back.items[i].kind == set.items[i].kind);
    CHECK(back.items[i].value == set.items[i].value);
    CHECK(back.items[i].sigma == set.items[i].sigma);
    CHECK(back.items[i].bs_id == set.items[i].bs_id);
    CHECK(back.items[i].los == set.items[i].los);
  }
  CHECK(back.items[0].ref_bs_id == 1);
  CHECK(back.items[1].reply_time_s == doctest::Approx(1e-4));
  CHECK(back.items[2].rss.alpha == doctest::Approx(2.1));
}
