#include "nrloc/scenario.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace nrloc {

namespace {

struct Line {
  std::string section;
  std::string key;
  std::vector<std::string> values;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<Line> tokenize(const std::string& text) {
  std::vector<Line> lines;
  std::istringstream in(text);
  std::string raw, section;
  while (std::getline(in, raw)) {
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[' && s.back() == ']') {
      section = trim(s.substr(1, s.size() - 2));
      lines.push_back({section, "", {}});  // section marker
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ValidationError("scenario: expected 'key = value': " + s);
    Line l;
    l.section = section;
    l.key = trim(s.substr(0, eq));
    std::istringstream vs(s.substr(eq + 1));
    std::string tok;
    while (vs >> tok) l.values.push_back(tok);
    if (l.values.empty()) throw ValidationError("scenario: missing value for " + l.key);
    lines.push_back(std::move(l));
  }
  return lines;
}

double to_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("scenario: bad number '" + s + "'");
  }
}

int to_int(const std::string& s) { return static_cast<int>(to_double(s)); }

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ValidationError("scenario: bad boolean '" + s + "'");
}

Position3D to_vec3(const std::vector<std::string>& v) {
  if (v.size() != 3) throw ValidationError("scenario: expected 3 components");
  return {to_double(v[0]), to_double(v[1]), to_double(v[2])};
}

}  // namespace

double Scenario::sigma_tof_s(int mu) const {
  if (noise_calibrated) {
    const auto s = calibrated_sigma_tdoa_m(mu);
    if (!s) throw ValidationError("no calibrated sigma for mu=" + std::to_string(mu));
    return *s / std::sqrt(2.0) / kSpeedOfLight;
  }
  return noise.sigma_tof_s;
}

Scenario parse_scenario(const std::string& text) {
  Scenario sc;
  BasePose* bs = nullptr;
  Polygon3D* obstacle = nullptr;
  Polygon3D* map_region = nullptr;
  PrsConfig* prs = nullptr;
  SrsConfig* srs = nullptr;
  SsbConfig* ssb = nullptr;
  int next_bs_id = 1;

  for (const auto& l : tokenize(text)) {
    if (l.key.empty()) {  // new section begins
      if (l.section == "bs") {
        sc.base_stations.emplace_back();
        bs = &sc.base_stations.back();
        bs->id = next_bs_id++;
      } else if (l.section == "obstacle") {
        sc.obstacles.polygons.emplace_back();
        obstacle = &sc.obstacles.polygons.back();
      } else if (l.section == "map") {
        sc.filters.map.regions.emplace_back();
        map_region = &sc.filters.map.regions.back();
      } else if (l.section == "prs") {
        sc.prs.emplace_back();
        prs = &sc.prs.back();
      } else if (l.section == "srs") {
        sc.srs.emplace_back();
        srs = &sc.srs.back();
      } else if (l.section == "ssb") {
        sc.ssb.emplace_back();
        ssb = &sc.ssb.back();
      }
      continue;
    }
    const std::string& k = l.key;
    const std::string& v0 = l.values[0];

    if (l.section == "rf") {
      if (k == "mu") sc.rf.mu = to_int(v0);
      else if (k == "fc_ghz") sc.rf.fc_ghz = to_double(v0);
      else if (k == "n_rb") sc.rf.n_rb = to_int(v0);
      else if (k == "n_fft") sc.rf.n_fft = to_int(v0);
      else if (k == "oversampling") sc.rf.oversampling = to_int(v0);
      else if (k == "nf_dl_db") sc.rf.nf_dl_db = to_double(v0);
      else if (k == "nf_ul_db") sc.rf.nf_ul_db = to_double(v0);
      else if (k == "t_ant_k") sc.rf.t_ant_k = to_double(v0);
      else throw ValidationError("scenario: unknown rf key " + k);
    } else if (l.section == "noise") {
      if (k == "sigma_tof_m") {
        if (v0 == "calibrated") sc.noise_calibrated = true;
        else sc.noise.sigma_tof_s = to_double(v0) / kSpeedOfLight;
      } else if (k == "sigma_aoa_az_deg") sc.noise.sigma_aoa_az_rad = deg2rad(to_double(v0));
      else if (k == "sigma_aoa_el_deg") sc.noise.sigma_aoa_el_rad = deg2rad(to_double(v0));
      else if (k == "sigma_rss_db") sc.noise.sigma_rss_db = to_double(v0);
      else if (k == "nlos_excess_mean_m") sc.noise.nlos_excess_mean_m = to_double(v0);
      else if (k == "nlos_el_bias_deg") sc.noise.nlos_el_bias_sigma_rad = deg2rad(to_double(v0));
      else if (k == "rss_p0_dbm") sc.noise.rss.p0_dbm = to_double(v0);
      else if (k == "rss_d0_m") sc.noise.rss.d0_m = to_double(v0);
      else if (k == "rss_alpha") sc.noise.rss.alpha = to_double(v0);
      else throw ValidationError("scenario: unknown noise key " + k);
    } else if (l.section == "solver") {
      if (k == "eta") sc.solver.eta = to_double(v0);
      else if (k == "max_iterations") sc.solver.max_iterations = to_int(v0);
      else if (k == "tolerance_m") sc.solver.tolerance_m = to_double(v0);
      else if (k == "mode_2d") sc.solver.mode_2d = to_bool(v0);
      else if (k == "fixed_z") sc.solver.fixed_z = to_double(v0);
      else if (k == "weighted") sc.solver.weighted = to_bool(v0);
      else if (k == "levenberg_marquardt") sc.solver.levenberg_marquardt = to_bool(v0);
      else throw ValidationError("scenario: unknown solver key " + k);
    } else if (l.section == "ekf") {
      if (k == "q_sigma") sc.ekf.q_sigma = to_vec3(l.values);
      else if (k == "pos_sigma0") sc.ekf.pos_sigma0 = to_double(v0);
      else if (k == "gate_sigma") sc.ekf.gate_sigma = to_double(v0);
      else if (k == "with_velocity") sc.ekf.with_velocity = to_bool(v0);
      else throw ValidationError("scenario: unknown ekf key " + k);
    } else if (l.section == "filters") {
      if (k == "use_residual_filter") sc.filters.use_residual_filter = to_bool(v0);
      else if (k == "residual_angle_threshold_deg")
        sc.filters.residual.angle_threshold_deg = to_double(v0);
      else if (k == "residual_range_threshold_m")
        sc.filters.residual.range_threshold_m = to_double(v0);
      else if (k == "use_map_filter") sc.filters.use_map_filter = to_bool(v0);
      else throw ValidationError("scenario: unknown filters key " + k);
    } else if (l.section == "beam") {
      if (k == "sector_az_deg") sc.beam.sector_az_rad = deg2rad(to_double(v0));
      else if (k == "sector_el_deg") sc.beam.sector_el_rad = deg2rad(to_double(v0));
      else if (k == "n_ssb_az") sc.beam.n_ssb_az = to_int(v0);
      else if (k == "n_ssb_el") sc.beam.n_ssb_el = to_int(v0);
      else if (k == "n_prs_az") sc.beam.n_prs_az = to_int(v0);
      else if (k == "n_prs_el") sc.beam.n_prs_el = to_int(v0);
      else if (k == "rsrp_noise_sigma_db") sc.beam.rsrp_noise_sigma_db = to_double(v0);
      else throw ValidationError("scenario: unknown beam key " + k);
    } else if (l.section == "bs") {
      if (bs == nullptr) throw ValidationError("scenario: bs key outside [bs]");
      if (k == "id") bs->id = to_int(v0);
      else if (k == "pos") bs->position = to_vec3(l.values);
      else if (k == "yaw_deg") bs->orientation.yaw = deg2rad(to_double(v0));
      else if (k == "roll_deg") bs->orientation.roll = deg2rad(to_double(v0));
      else if (k == "pitch_deg") bs->orientation.pitch = deg2rad(to_double(v0));
      else if (k == "sector") bs->sector_id = to_int(v0);
      else if (k == "tx_power_dbm") bs->tx_power_dbm = to_double(v0);
      else if (k == "antenna") {
        if (l.values.size() != 5) throw ValidationError("scenario: antenna tuple needs 5 ints");
        bs->antenna = {to_int(l.values[0]), to_int(l.values[1]), to_int(l.values[2]),
                       to_int(l.values[3]), to_int(l.values[4])};
      } else throw ValidationError("scenario: unknown bs key " + k);
    } else if (l.section == "obstacle") {
      if (obstacle == nullptr) throw ValidationError("scenario: obstacle key outside section");
      if (k == "loss_db") obstacle->reflection_loss_db = to_double(v0);
      else if (k == "v") obstacle->vertices.push_back(to_vec3(l.values));
      else throw ValidationError("scenario: unknown obstacle key " + k);
    } else if (l.section == "map") {
      if (map_region == nullptr) throw ValidationError("scenario: map key outside section");
      if (k == "v") map_region->vertices.push_back(to_vec3(l.values));
      else throw ValidationError("scenario: unknown map key " + k);
    } else if (l.section == "ue") {
      if (k == "point") sc.ue_points.push_back(to_vec3(l.values));
      else throw ValidationError("scenario: unknown ue key " + k);
    } else if (l.section == "trajectory") {
      if (k == "waypoint") sc.trajectory.waypoints.push_back(to_vec3(l.values));
      else if (k == "speed_mps") sc.trajectory.speed_mps = to_double(v0);
      else if (k == "random_walk_sigma") sc.trajectory.random_walk_sigma = to_vec3(l.values);
      else if (k == "random_walk_steps") sc.trajectory.random_walk_steps = to_int(v0);
      else throw ValidationError("scenario: unknown trajectory key " + k);
    } else if (l.section == "epoch") {
      if (k == "interval_s") sc.epoch_interval_s = to_double(v0);
      else throw ValidationError("scenario: unknown epoch key " + k);
    } else if (l.section == "sim") {
      if (k == "rtt_reply_time_s") sc.rtt_reply_time_s = to_double(v0);
      else if (k == "max_bounces") sc.max_bounces = to_int(v0);
      else if (k == "music_snapshots") sc.music_snapshots = to_int(v0);
      else throw ValidationError("scenario: unknown sim key " + k);
    } else if (l.section == "prs") {
      if (prs == nullptr) throw ValidationError("scenario: prs key outside section");
      if (k == "cell_id") prs->cell_id = to_int(v0);
      else if (k == "comb_size") prs->comb_size = to_int(v0);
      else if (k == "n_symb") prs->n_symb = to_int(v0);
      else if (k == "re_offset") prs->re_offset = to_int(v0);
      else if (k == "rb_offset") prs->rb_offset = to_int(v0);
      else if (k == "start_symbol") prs->start_symbol = to_int(v0);
      else if (k == "slot_offset") prs->slot_offset = to_int(v0);
      else if (k == "periodicity") prs->periodicity = to_int(v0);
      else if (k == "repetition") prs->repetition = to_int(v0);
      else if (k == "n_rb") prs->n_rb = to_int(v0);
      else throw ValidationError("scenario: unknown prs key " + k);
    } else if (l.section == "srs") {
      if (srs == nullptr) throw ValidationError("scenario: srs key outside section");
      if (k == "cell_id") srs->cell_id = to_int(v0);
      else if (k == "comb_size") srs->comb_size = to_int(v0);
      else if (k == "n_symb") srs->n_symb = to_int(v0);
      else if (k == "f0") srs->f0 = to_int(v0);
      else if (k == "start_symbol") srs->start_symbol = to_int(v0);
      else if (k == "n_rrc") srs->n_rrc = to_int(v0);
      else if (k == "b_srs") srs->b_srs = to_int(v0);
      else if (k == "c_srs") srs->c_srs = to_int(v0);
      else if (k == "b_hop") srs->b_hop = to_int(v0);
      else if (k == "periodicity") srs->periodicity = to_int(v0);
      else if (k == "repetition") srs->repetition = to_int(v0);
      else if (k == "n_rb") srs->n_rb = to_int(v0);
      else if (k == "resource_type") {
        if (v0 == "periodic") srs->resource_type = SrsConfig::ResourceType::periodic;
        else if (v0 == "semi_persistent") srs->resource_type = SrsConfig::ResourceType::semi_persistent;
        else if (v0 == "aperiodic") srs->resource_type = SrsConfig::ResourceType::aperiodic;
        else throw ValidationError("scenario: bad srs resource_type " + v0);
      } else throw ValidationError("scenario: unknown srs key " + k);
    } else if (l.section == "ssb") {
      if (ssb == nullptr) throw ValidationError("scenario: ssb key outside section");
      if (k == "cell_id") ssb->cell_id = to_int(v0);
      else if (k == "case") ssb->pattern = ssb_case_from_string(v0);
      else if (k == "fc_ghz") ssb->fc_ghz = to_double(v0);
      else if (k == "slot_offset") ssb->slot_offset = to_int(v0);
      else if (k == "periodicity") ssb->periodicity = to_int(v0);
      else throw ValidationError("scenario: unknown ssb key " + k);
    } else {
      throw ValidationError("scenario: unknown section [" + l.section + "]");
    }
  }

  if (sc.base_stations.empty()) throw ValidationError("scenario: needs at least one BS");
  for (const auto& b : sc.base_stations)
    for (const auto& p : sc.ue_points)
      if ((b.position - p).norm() < 1e-9)
        throw ValidationError("scenario: UE point coincides with a BS");
  for (const auto& poly : sc.obstacles.polygons)
    polygon_normal(poly);  // rejects degenerate polygons
  apply_default_signals(sc);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_scenario(buf.str());
}

void apply_default_signals(Scenario& s) {
  if (s.prs.empty()) {
    // Comb-12 over the full grant, one BS per slot: offsets staggered by
    // 2 slots to avoid overlaps.
    for (std::size_t i = 0; i < s.base_stations.size(); ++i) {
      PrsConfig cfg;
      cfg.cell_id = s.base_stations[i].id;
      cfg.n_rb = s.rf.n_rb;
      cfg.slot_offset = static_cast<long>(2 * i);
      s.prs.push_back(cfg);
    }
  }
  if (s.srs.empty()) {
    SrsConfig cfg;
    cfg.cell_id = 0;  // the UE
    cfg.n_rb = s.rf.n_rb;
    s.srs.push_back(cfg);
  }
  if (s.ssb.empty()) {
    SsbConfig cfg;
    cfg.pattern = s.rf.fc_ghz > 6.0 ? SsbCase::D : (s.rf.mu >= 1 ? SsbCase::B : SsbCase::A);
    cfg.fc_ghz = s.rf.fc_ghz;
    s.ssb.push_back(cfg);
  }
}

}  // namespace nrloc
