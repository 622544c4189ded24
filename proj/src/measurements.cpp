#include "nrloc/measurements.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace nrloc {

using nlohmann::json;

const char* to_string(MeasKind k) {
  switch (k) {
    case MeasKind::tof: return "tof";
    case MeasKind::tdoa: return "tdoa";
    case MeasKind::rtt: return "rtt";
    case MeasKind::aoa_az: return "aoa_az";
    case MeasKind::aoa_el: return "aoa_el";
    case MeasKind::rss: return "rss";
    case MeasKind::aod_az: return "aod_az";
    case MeasKind::aod_el: return "aod_el";
  }
  return "?";
}

MeasKind meas_kind_from_string(const std::string& s) {
  for (MeasKind k : {MeasKind::tof, MeasKind::tdoa, MeasKind::rtt, MeasKind::aoa_az,
                     MeasKind::aoa_el, MeasKind::rss, MeasKind::aod_az, MeasKind::aod_el})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown measurement kind: " + s);
}

std::optional<double> calibrated_sigma_tdoa_m(int mu) {
  switch (mu) {
    case 0: return 5.99;
    case 1: return 0.98;
    case 2: return 0.58;
    case 3: return 0.30;
    default: return std::nullopt;
  }
}

std::string to_jsonl(const MeasurementSet& set) {
  json j;
  j["t"] = set.epoch_time_s;
  if (set.truth) j["truth"] = {set.truth->x(), set.truth->y(), set.truth->z()};
  json items = json::array();
  for (const auto& m : set.items) {
    json e;
    e["kind"] = to_string(m.kind);
    e["value"] = m.value;
    e["sigma"] = m.sigma;
    e["bs"] = m.bs_id;
    e["los"] = m.los;
    if (m.kind == MeasKind::tdoa) e["ref_bs"] = m.ref_bs_id;
    if (m.kind == MeasKind::rtt) e["reply"] = m.reply_time_s;
    if (m.kind == MeasKind::rss)
      e["rss_model"] = {{"p0", m.rss.p0_dbm}, {"d0", m.rss.d0_m}, {"alpha", m.rss.alpha}};
    items.push_back(std::move(e));
  }
  j["meas"] = std::move(items);
  return j.dump();
}

MeasurementSet measurement_set_from_json(const std::string& line) {
  const json j = json::parse(line);
  MeasurementSet set;
  set.epoch_time_s = j.at("t").get<double>();
  if (j.contains("truth")) {
    const auto& t = j.at("truth");
    set.truth = Position3D(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
  }
  for (const auto& e : j.at("meas")) {
    Measurement m;
    m.kind = meas_kind_from_string(e.at("kind").get<std::string>());
    m.value = e.at("value").get<double>();
    m.sigma = e.at("sigma").get<double>();
    m.bs_id = e.at("bs").get<int>();
    m.los = e.value("los", true);
    m.ref_bs_id = e.value("ref_bs", -1);
    m.reply_time_s = e.value("reply", 0.0);
    if (e.contains("rss_model")) {
      m.rss.p0_dbm = e.at("rss_model").at("p0").get<double>();
      m.rss.d0_m = e.at("rss_model").at("d0").get<double>();
      m.rss.alpha = e.at("rss_model").at("alpha").get<double>();
    }
    set.items.push_back(m);
  }
  return set;
}

namespace {

double nlos_excess_m(const NoiseModel& noise, RngStream& rng) {
  return rng.exponential(noise.nlos_excess_mean_m);
}

}  // namespace

Measurement gen_tof(const Position3D& u, const BasePose& pose, const NoiseModel& noise,
                    bool los, RngStream& rng) {
  const TrueGeometry g = true_geometry(u, pose);
  double d = g.range;
  if (!los) d += nlos_excess_m(noise, rng);
  Measurement m;
  m.kind = MeasKind::tof;
  m.value = d / kSpeedOfLight + rng.gauss(noise.sigma_tof_s);
  m.sigma = noise.sigma_tof_s;
  m.bs_id = pose.id;
  m.los = los;
  return m;
}

int select_reference_bs(std::span<const double> quality, std::span<const int> bs_ids) {
  if (quality.size() != bs_ids.size()) throw ValidationError("select_reference_bs: size mismatch");
  if (quality.size() < 2) throw ValidationError("select_reference_bs: need at least 2 BSs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < quality.size(); ++i) {
    if (quality[i] > quality[best] ||
        (quality[i] == quality[best] && bs_ids[i] < bs_ids[best]))
      best = i;
  }
  return bs_ids[best];
}

std::vector<Measurement> gen_tdoa_set(const Position3D& u, std::span<const BasePose> poses,
                                      const NoiseModel& noise, int reference_bs,
                                      const std::vector<bool>& los_flags, RngStream& rng) {
  if (poses.size() < 2) throw ValidationError("gen_tdoa_set: need at least 2 BSs");
  if (los_flags.size() != poses.size()) throw ValidationError("gen_tdoa_set: flags mismatch");

  // One noisy TOF per BS, differenced against the reference afterwards.
  std::vector<double> tofs(poses.size());
  std::size_t ref_idx = poses.size();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const TrueGeometry g = true_geometry(u, poses[i]);
    double d = g.range;
    if (!los_flags[i]) d += nlos_excess_m(noise, rng);
    tofs[i] = d / kSpeedOfLight + rng.gauss(noise.sigma_tof_s);
    if (poses[i].id == reference_bs) ref_idx = i;
  }
  if (ref_idx == poses.size())
    throw ValidationError("gen_tdoa_set: reference BS not in the pose list");

  std::vector<Measurement> out;
  out.reserve(poses.size() - 1);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (i == ref_idx) continue;
    Measurement m;
    m.kind = MeasKind::tdoa;
    m.value = tofs[i] - tofs[ref_idx];
    m.sigma = noise.sigma_tof_s * std::sqrt(2.0);
    m.bs_id = poses[i].id;
    m.ref_bs_id = reference_bs;
    m.los = los_flags[i] && los_flags[ref_idx];
    out.push_back(m);
  }
  return out;
}

Measurement gen_rtt(const Position3D& u, const BasePose& pose, const NoiseModel& noise,
                    double reply_time_s, bool los, RngStream& rng) {
  if (reply_time_s < 0.0) throw ValidationError("gen_rtt: negative reply time");
  const TrueGeometry g = true_geometry(u, pose);
  double d = g.range;
  if (!los) d += nlos_excess_m(noise, rng);
  Measurement m;
  m.kind = MeasKind::rtt;
  m.value = 2.0 * d / kSpeedOfLight + reply_time_s + rng.gauss(noise.sigma_tof_s) +
            rng.gauss(noise.sigma_tof_s);
  m.sigma = noise.sigma_tof_s * std::sqrt(2.0);
  m.bs_id = pose.id;
  m.reply_time_s = reply_time_s;
  m.los = los;
  return m;
}

Measurement rtt_extract_tof(const Measurement& rtt) {
  if (rtt.kind != MeasKind::rtt) throw ValidationError("rtt_extract_tof: not an RTT measurement");
  Measurement m = rtt;
  m.kind = MeasKind::tof;
  m.value = (rtt.value - rtt.reply_time_s) / 2.0;
  m.sigma = rtt.sigma / 2.0;
  m.reply_time_s = 0.0;
  return m;
}

std::pair<Measurement, Measurement> gen_aoa(const Position3D& u, const BasePose& pose,
                                            const NoiseModel& noise, bool los,
                                            RngStream& rng) {
  const TrueGeometry g = true_geometry(u, pose);
  Measurement az;
  az.kind = MeasKind::aoa_az;
  az.value = wrap_angle(g.local_azimuth + rng.gauss(noise.sigma_aoa_az_rad));
  az.sigma = noise.sigma_aoa_az_rad;
  az.bs_id = pose.id;
  az.los = los;

  Measurement el;
  el.kind = MeasKind::aoa_el;
  double bias = 0.0;
  if (!los) bias = -std::abs(rng.gauss(noise.nlos_el_bias_sigma_rad));
  el.value = wrap_angle(g.local_elevation + bias + rng.gauss(noise.sigma_aoa_el_rad));
  el.sigma = noise.sigma_aoa_el_rad;
  el.bs_id = pose.id;
  el.los = los;
  return {az, el};
}

Measurement gen_rss(const Position3D& u, const BasePose& pose, const NoiseModel& noise,
                    RngStream& rng) {
  const TrueGeometry g = true_geometry(u, pose);
  Measurement m;
  m.kind = MeasKind::rss;
  m.value = noise.rss.p0_dbm - 10.0 * noise.rss.alpha * std::log10(g.range / noise.rss.d0_m) +
            rng.gauss(noise.sigma_rss_db);
  m.sigma = noise.sigma_rss_db;
  m.bs_id = pose.id;
  m.rss = noise.rss;
  return m;
}

}  // namespace nrloc
