#include "nrloc/sim.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace nrloc {

using nlohmann::json;

const char* to_string(Method m) {
  switch (m) {
    case Method::dl_tdoa: return "dl_tdoa";
    case Method::multi_rtt: return "multi_rtt";
    case Method::ul_aoa: return "ul_aoa";
    case Method::dl_aod: return "dl_aod";
    case Method::fused: return "fused";
  }
  return "?";
}

const char* to_string(SimLevel l) {
  return l == SimLevel::geometric ? "geometric" : "linklevel";
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::dl_tdoa, Method::multi_rtt, Method::ul_aoa, Method::dl_aod,
                   Method::fused})
    if (s == to_string(m)) return m;
  throw ValidationError("unknown method: " + s);
}

SimLevel level_from_string(const std::string& s) {
  if (s == "geometric") return SimLevel::geometric;
  if (s == "linklevel") return SimLevel::linklevel;
  throw ValidationError("unknown level: " + s);
}

double SigmaSummary::stddev() const {
  if (count < 2) return 0.0;
  const double mean = sum / static_cast<double>(count);
  const double var = sum_sq / static_cast<double>(count) - mean * mean;
  return std::sqrt(std::max(var, 0.0));
}

int configured_threads() {
  if (const char* env = std::getenv("NRLOC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

MetricsReport compute_metrics(std::span<const Eigen::Vector3d> errors, int dims) {
  if (errors.empty()) throw ValidationError("compute_metrics: empty input");
  MetricsReport r;
  Eigen::Vector3d bias = Eigen::Vector3d::Zero();
  double sq = 0.0, abs_sum = 0.0;
  std::vector<double> norms;
  norms.reserve(errors.size());
  for (const auto& e : errors) {
    Eigen::Vector3d v = e;
    if (dims == 2) v.z() = 0.0;
    bias += v;
    const double n = v.norm();
    norms.push_back(n);
    sq += n * n;
    abs_sum += n;
  }
  const double count = static_cast<double>(errors.size());
  r.bias = bias / count;
  r.bias_norm = r.bias.norm();
  r.rmse = std::sqrt(sq / count);
  r.mae = abs_sum / count;
  std::sort(norms.begin(), norms.end());
  r.cdf_knots = std::move(norms);
  return r;
}

std::vector<Position3D> gen_random_walk(const Position3D& start, const Eigen::Vector3d& sigma,
                                        int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("gen_random_walk: n >= 1");
  RngStream rng(seed);
  std::vector<Position3D> pts;
  pts.reserve(static_cast<std::size_t>(n));
  Position3D p = start;
  pts.push_back(p);
  for (int i = 1; i < n; ++i) {
    p += Position3D(rng.gauss(sigma.x()), rng.gauss(sigma.y()), rng.gauss(sigma.z()));
    pts.push_back(p);
  }
  return pts;
}

std::vector<Position3D> trajectory_points(const Scenario& sc, std::uint64_t seed) {
  const auto& tr = sc.trajectory;
  if (tr.random_walk_steps > 0) {
    if (tr.waypoints.empty())
      throw ValidationError("trajectory: random walk needs a start waypoint");
    return gen_random_walk(tr.waypoints.front(), tr.random_walk_sigma, tr.random_walk_steps,
                           seed);
  }
  if (tr.waypoints.size() < 2)
    throw ValidationError("trajectory: need >= 2 waypoints or a random walk");
  const double step = tr.speed_mps * sc.epoch_interval_s;
  std::vector<Position3D> pts;
  pts.push_back(tr.waypoints.front());
  std::size_t leg = 0;
  Position3D pos = tr.waypoints.front();
  while (leg + 1 < tr.waypoints.size()) {
    double remaining = step;
    while (remaining > 0.0 && leg + 1 < tr.waypoints.size()) {
      const Position3D target = tr.waypoints[leg + 1];
      const double to_target = (target - pos).norm();
      if (to_target > remaining) {
        pos += (target - pos).normalized() * remaining;
        remaining = 0.0;
      } else {
        pos = target;
        remaining -= to_target;
        ++leg;
      }
    }
    if (remaining <= 0.0) pts.push_back(pos);
  }
  return pts;
}

namespace {

NoiseModel effective_noise(const Scenario& sc, int mu) {
  NoiseModel n = sc.noise;
  n.sigma_tof_s = sc.sigma_tof_s(mu);
  return n;
}

std::vector<bool> los_flags(const Scenario& sc, const Position3D& u) {
  std::vector<bool> flags;
  flags.reserve(sc.base_stations.size());
  for (const auto& bs : sc.base_stations)
    flags.push_back(los_check(u, bs.position, sc.obstacles));
  return flags;
}

/// Noiseless received power per BS, the SNR proxy for reference selection.
std::vector<double> bs_quality(const Scenario& sc, const Position3D& u) {
  std::vector<double> q;
  q.reserve(sc.base_stations.size());
  for (const auto& bs : sc.base_stations) {
    const double d = (u - bs.position).norm();
    q.push_back(bs.tx_power_dbm - 10.0 * sc.noise.rss.alpha *
                                      std::log10(std::max(d, 1e-3) / sc.noise.rss.d0_m));
  }
  return q;
}

const PrsConfig* prs_for_cell(const Scenario& sc, int cell_id) {
  for (const auto& c : sc.prs)
    if (c.cell_id == cell_id) return &c;
  return nullptr;
}

/// Link-level TOA: modulate the grid, scale to the transmit power, run the
/// channel with AWGN, correlate against the clean replica.
std::optional<double> linklevel_toa_grid(const ResourceGrid& grid, const Scenario& sc,
                                         const TapChannel& channel, double tx_power_dbm,
                                         double bw_hz, double nf_db, RngStream& rng) {
  const OfdmWaveform ref = ofdm_modulate(grid, sc.rf.n_fft, sc.rf.oversampling);
  OfdmWaveform tx = ref;
  const double p_tx_w = std::pow(10.0, (tx_power_dbm - 30.0) / 10.0);
  const double mean_pow = tx.energy() / static_cast<double>(std::max<std::size_t>(tx.samples.size(), 1));
  if (mean_pow <= 0.0) return std::nullopt;
  const double scale = std::sqrt(p_tx_w / mean_pow);
  for (auto& s : tx.samples) s *= scale;

  // build_channel folded sqrt(P_tx) into the gains already; strip it here so
  // the power is applied exactly once.
  TapChannel ch = channel;
  for (auto& p : ch.paths) p.gain /= std::sqrt(p_tx_w);

  OfdmWaveform rx = apply_channel(tx, ch);
  add_awgn(rx, bw_hz, nf_db, sc.rf.t_ant_k, rng);

  ToaConfig toa;
  toa.mode = PeakMode::first_peak;
  toa.refine = true;
  return estimate_toa(rx, ref, toa);
}

/// Downlink TOA over one BS's PRS allocation.
std::optional<double> linklevel_toa(const Scenario& sc, int mu, const BasePose& bs,
                                    const TapChannel& channel, double nf_db,
                                    RngStream& rng) {
  const PrsConfig* cfg = prs_for_cell(sc, bs.id);
  PrsConfig prs = cfg != nullptr ? *cfg : PrsConfig{};
  if (cfg == nullptr) {
    prs.cell_id = bs.id;
    prs.n_rb = sc.rf.n_rb;
  }
  const long slot = prs.slot_offset;
  const ResourceGrid grid =
      map_to_grid(std::span<const PrsConfig>(&prs, 1), std::span<const SrsConfig>(),
                  std::span<const SsbConfig>(), mu, slot, slot + prs.repetition - 1);
  return linklevel_toa_grid(grid, sc, channel, bs.tx_power_dbm, bandwidth_hz(prs.n_rb, mu),
                            nf_db, rng);
}

/// Uplink TOA over the UE's SRS allocation.
std::optional<double> linklevel_toa_srs(const Scenario& sc, int mu,
                                        const TapChannel& uplink_channel, RngStream& rng) {
  SrsConfig srs = sc.srs.empty() ? SrsConfig{} : sc.srs.front();
  const ResourceGrid grid =
      map_to_grid(std::span<const PrsConfig>(), std::span<const SrsConfig>(&srs, 1),
                  std::span<const SsbConfig>(), mu, 0, 0);
  return linklevel_toa_grid(grid, sc, uplink_channel, 23.0, bandwidth_hz(srs.n_rb, mu),
                            sc.rf.nf_ul_db, rng);
}

/// Baseband frequencies of the SRS pilots, capped at the snapshot budget.
std::vector<double> srs_pilot_freqs(const Scenario& sc, int mu, int cap) {
  const SrsConfig srs = sc.srs.empty() ? SrsConfig{} : sc.srs.front();
  const auto& stagger = srs_re_offsets(srs.comb_size, srs.n_symb);
  const double scs = numerology_params(mu).scs_hz;
  const int n_sc = srs.n_rb * 12;
  std::vector<double> freqs;
  for (int rel = 0; rel < srs.n_symb && static_cast<int>(freqs.size()) < cap; ++rel) {
    const int shift = (srs.f0 + stagger[static_cast<std::size_t>(rel)]) % srs.comb_size;
    for (int k = shift; k < n_sc && static_cast<int>(freqs.size()) < cap;
         k += srs.comb_size) {
      freqs.push_back((k - n_sc / 2) * scs);
    }
  }
  return freqs;
}

std::optional<std::pair<double, double>> linklevel_aoa(const Scenario& sc, int mu,
                                                       const BasePose& bs,
                                                       const TapChannel& uplink_channel,
                                                       RngStream& rng) {
  const auto freqs = srs_pilot_freqs(sc, mu, sc.music_snapshots);
  if (static_cast<int>(freqs.size()) < 2) return std::nullopt;
  // Per-RE noise consistent with the OFDM chain: variance n_occ*N0/n_fft
  // relative to unit-power transmit pilots.
  const SrsConfig srs = sc.srs.empty() ? SrsConfig{} : sc.srs.front();
  const double n_occ = srs.n_rb * 12.0 / srs.comb_size;
  const double bw = bandwidth_hz(srs.n_rb, mu);
  const double n0 = noise_power_w(bw, sc.rf.nf_ul_db, sc.rf.t_ant_k);
  const double sigma = std::sqrt(n_occ * n0 / sc.rf.n_fft);

  const ArraySnapshot snap = make_array_snapshots(uplink_channel, bs.antenna,
                                                  sc.rf.wavelength(), freqs, sigma, rng);
  AngleGrid az_grid{-sc.beam.sector_az_rad / 2, sc.beam.sector_az_rad / 2, deg2rad(0.5)};
  AngleGrid el_grid{-sc.beam.sector_el_rad / 2, sc.beam.sector_el_rad / 2, deg2rad(0.5)};
  const MusicResult res = music_aoa(snap, 1, az_grid, el_grid);
  return std::make_pair(res.az, res.el);
}

}  // namespace

MeasurementSet synthesize_epoch(const Scenario& sc, Method method, SimLevel level, int mu,
                                const Position3D& u, double epoch_time, RngStream& rng) {
  MeasurementSet set;
  set.epoch_time_s = epoch_time;
  set.truth = u;
  const NoiseModel noise = effective_noise(sc, mu);
  const std::vector<bool> los = los_flags(sc, u);
  const auto& bss = sc.base_stations;

  auto channel_for = [&](const BasePose& bs) {
    return build_channel(bs.position, bs.orientation, u, ArrayOrientation{}, sc.obstacles,
                         sc.rf.fc_ghz * 1e9, bs.tx_power_dbm, sc.max_bounces);
  };
  auto uplink_channel_for = [&](const BasePose& bs) {
    // UE transmits; arrival angles are taken at the BS array.
    return build_channel(u, ArrayOrientation{}, bs.position, bs.orientation, sc.obstacles,
                         sc.rf.fc_ghz * 1e9, 23.0, sc.max_bounces);
  };

  const bool want_aoa = method == Method::ul_aoa || method == Method::fused;
  const bool want_aod = method == Method::dl_aod;

  if (method == Method::dl_tdoa || method == Method::fused) {
    if (bss.size() >= 2) {
      std::vector<int> ids;
      for (const auto& b : bss) ids.push_back(b.id);
      const int ref = select_reference_bs(bs_quality(sc, u), ids);
      if (level == SimLevel::geometric) {
        auto tdoas = gen_tdoa_set(u, bss, noise, ref, los, rng);
        set.items.insert(set.items.end(), tdoas.begin(), tdoas.end());
      } else {
        // Per-BS link-level TOAs differenced against the reference.
        std::vector<std::optional<double>> toas(bss.size());
        std::size_t ref_idx = 0;
        for (std::size_t i = 0; i < bss.size(); ++i) {
          toas[i] = linklevel_toa(sc, mu, bss[i], channel_for(bss[i]), sc.rf.nf_dl_db, rng);
          if (bss[i].id == ref) ref_idx = i;
        }
        if (toas[ref_idx].has_value()) {
          for (std::size_t i = 0; i < bss.size(); ++i) {
            if (i == ref_idx || !toas[i].has_value()) continue;
            Measurement m;
            m.kind = MeasKind::tdoa;
            m.value = *toas[i] - *toas[ref_idx];
            m.sigma = noise.sigma_tof_s * std::sqrt(2.0);
            m.bs_id = bss[i].id;
            m.ref_bs_id = ref;
            m.los = los[i] && los[ref_idx];
            set.items.push_back(m);
          }
        }
      }
    }
  }

  if (method == Method::multi_rtt) {
    for (std::size_t i = 0; i < bss.size(); ++i) {
      if (level == SimLevel::geometric) {
        set.items.push_back(gen_rtt(u, bss[i], noise, sc.rtt_reply_time_s, los[i], rng));
      } else {
        const auto dl = linklevel_toa(sc, mu, bss[i], channel_for(bss[i]), sc.rf.nf_dl_db, rng);
        const auto ul = linklevel_toa_srs(sc, mu, uplink_channel_for(bss[i]), rng);
        if (!dl || !ul) continue;
        Measurement m;
        m.kind = MeasKind::rtt;
        m.value = *dl + *ul + sc.rtt_reply_time_s;
        m.sigma = noise.sigma_tof_s * std::sqrt(2.0);
        m.bs_id = bss[i].id;
        m.reply_time_s = sc.rtt_reply_time_s;
        m.los = los[i];
        set.items.push_back(m);
      }
    }
  }

  if (want_aoa) {
    for (std::size_t i = 0; i < bss.size(); ++i) {
      if (level == SimLevel::geometric) {
        auto [az, el] = gen_aoa(u, bss[i], noise, los[i], rng);
        set.items.push_back(az);
        set.items.push_back(el);
      } else {
        const auto res = linklevel_aoa(sc, mu, bss[i], uplink_channel_for(bss[i]), rng);
        if (!res) continue;
        Measurement az;
        az.kind = MeasKind::aoa_az;
        az.value = res->first;
        az.sigma = noise.sigma_aoa_az_rad;
        az.bs_id = bss[i].id;
        az.los = los[i];
        Measurement el;
        el.kind = MeasKind::aoa_el;
        el.value = res->second;
        el.sigma = noise.sigma_aoa_el_rad;
        el.bs_id = bss[i].id;
        el.los = los[i];
        set.items.push_back(az);
        set.items.push_back(el);
      }
    }
  }

  if (want_aod) {
    for (std::size_t i = 0; i < bss.size(); ++i) {
      const TapChannel ch = channel_for(bss[i]);
      const auto p1 = p1_acquire(ch, sc.beam, bss[i].antenna, sc.rf.wavelength(), &rng);
      if (!p1) continue;
      const auto aod =
          p2_refine(*p1, ch, sc.beam, bss[i].antenna, sc.rf.wavelength(), bss[i].id, &rng);
      if (!aod) continue;
      set.items.push_back(aod->first);
      set.items.push_back(aod->second);
    }
  }

  return set;
}

namespace {

struct RunOutput {
  std::vector<Eigen::Vector3d> errors;
  std::map<std::string, SigmaSummary> sigma;
  long rejected = 0;
  long map_rejected = 0;
  long fixes = 0;
  std::vector<std::string> measurement_lines;
};

void accumulate_sigma(RunOutput& out, const Scenario& sc, const MeasurementSet& set) {
  for (const auto& m : set.items) {
    const BasePose* pose = nullptr;
    const BasePose* ref = nullptr;
    for (const auto& b : sc.base_stations) {
      if (b.id == m.bs_id) pose = &b;
      if (m.kind == MeasKind::tdoa && b.id == m.ref_bs_id) ref = &b;
    }
    if (pose == nullptr || !set.truth) continue;
    double err = m.value - measurement_model(m, *set.truth, *pose, ref);
    switch (m.kind) {
      case MeasKind::tof:
      case MeasKind::tdoa:
        err *= kSpeedOfLight;
        break;
      case MeasKind::rtt:
        err = err / 2.0 * kSpeedOfLight;
        break;
      default:
        err = rad2deg(wrap_angle(err));
        break;
    }
    auto& s = out.sigma[to_string(m.kind)];
    ++s.count;
    s.sum += err;
    s.sum_sq += err * err;
  }
}

void merge_sigma(std::map<std::string, SigmaSummary>& into,
                 const std::map<std::string, SigmaSummary>& from) {
  for (const auto& [k, v] : from) {
    auto& s = into[k];
    s.count += v.count;
    s.sum += v.sum;
    s.sum_sq += v.sum_sq;
  }
}

int effective_mu(const RunSpec& spec, const Scenario& sc) {
  const int mu = spec.mu >= 0 ? spec.mu : sc.rf.mu;
  numerology_params(mu);  // range check
  return mu;
}

}  // namespace

MetricsReport run_static(const RunSpec& spec, const Scenario& sc) {
  if (sc.ue_points.empty()) throw ValidationError("run_static: scenario has no UE points");
  if (spec.runs < 1) throw ValidationError("run_static: runs >= 1");
  const int mu = effective_mu(spec, sc);

  std::vector<RunOutput> outputs(static_cast<std::size_t>(spec.runs));
  omp_set_num_threads(configured_threads());

#pragma omp parallel for schedule(static)
  for (int run = 0; run < spec.runs; ++run) {
    RngStream rng = RngStream::for_run(spec.seed, static_cast<std::uint64_t>(run));
    RunOutput& out = outputs[static_cast<std::size_t>(run)];
    for (const auto& u : sc.ue_points) {
      MeasurementSet set =
          synthesize_epoch(sc, spec.method, spec.level, mu, u, 0.0, rng);
      if (run == 0 && !spec.dump_measurements.empty())
        out.measurement_lines.push_back(to_jsonl(set));
      const int dims = sc.solver.mode_2d ? 2 : 3;
      if (static_cast<int>(set.items.size()) < dims) {
        ++out.rejected;
        continue;
      }
      SolverConfig cfg = sc.solver;
      if (cfg.mode_2d) cfg.fixed_z = u.z();
      PositionEstimate est;
      try {
        est = solve_nls(set, sc.base_stations, cfg);
      } catch (const ValidationError&) {
        ++out.rejected;
        continue;
      }
      if (sc.filters.use_residual_filter &&
          !residual_nlos_filter(est, sc.filters.residual).accept) {
        ++out.rejected;
        continue;
      }
      if (sc.filters.use_map_filter && !point_in_map(est.position, sc.filters.map)) {
        ++out.map_rejected;
        continue;
      }
      accumulate_sigma(out, sc, set);
      out.errors.push_back(est.position - u);
      ++out.fixes;
    }
  }

  // Deterministic fold in run order, independent of the thread count.
  std::vector<Eigen::Vector3d> errors;
  MetricsReport report;
  long rejected = 0, map_rejected = 0, fixes = 0;
  for (const auto& out : outputs) {
    errors.insert(errors.end(), out.errors.begin(), out.errors.end());
    merge_sigma(report.measurement_sigma, out.sigma);
    rejected += out.rejected;
    map_rejected += out.map_rejected;
    fixes += out.fixes;
  }
  if (errors.empty()) throw HardFailure("run_static: no usable fixes");

  const auto sigma = std::move(report.measurement_sigma);
  report = compute_metrics(errors, sc.solver.mode_2d ? 2 : 3);
  report.measurement_sigma = sigma;
  report.method = to_string(spec.method);
  report.level = to_string(spec.level);
  report.mu = mu;
  report.runs = spec.runs;
  report.seed = spec.seed;
  report.fixes_used = fixes;
  report.fixes_rejected = rejected;
  report.map_rejected_fraction =
      fixes + map_rejected > 0
          ? static_cast<double>(map_rejected) / static_cast<double>(fixes + map_rejected)
          : 0.0;
  report.epoch_errors.reserve(errors.size());
  for (const auto& e : errors)
    report.epoch_errors.push_back(sc.solver.mode_2d ? std::hypot(e.x(), e.y()) : e.norm());

  if (!spec.dump_measurements.empty()) {
    std::ofstream f(spec.dump_measurements);
    for (const auto& line : outputs.front().measurement_lines) f << line << "\n";
  }
  return report;
}

MetricsReport run_track(const RunSpec& spec, const Scenario& sc) {
  if (spec.runs < 1) throw ValidationError("run_track: runs >= 1");
  const int mu = effective_mu(spec, sc);
  const std::vector<Position3D> truth = trajectory_points(sc, spec.seed);
  if (truth.size() < 2) throw ValidationError("run_track: trajectory too short");

  std::vector<RunOutput> outputs(static_cast<std::size_t>(spec.runs));
  omp_set_num_threads(configured_threads());

#pragma omp parallel for schedule(static)
  for (int run = 0; run < spec.runs; ++run) {
    RngStream rng = RngStream::for_run(spec.seed, static_cast<std::uint64_t>(run));
    RunOutput& out = outputs[static_cast<std::size_t>(run)];
    TrackState track = make_track(truth.front(), sc.ekf.pos_sigma0, sc.ekf.q_sigma,
                                  sc.epoch_interval_s, sc.ekf.with_velocity);
    EkfOptions opts;
    opts.gate_sigma = sc.ekf.gate_sigma;
    opts.mode_2d = sc.solver.mode_2d;
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double epoch_time = static_cast<double>(t) * sc.epoch_interval_s;
      MeasurementSet set =
          synthesize_epoch(sc, spec.method, spec.level, mu, truth[t], epoch_time, rng);
      if (run == 0 && !spec.dump_measurements.empty())
        out.measurement_lines.push_back(to_jsonl(set));
      track = ekf_step(track, set, sc.base_stations, opts);
      accumulate_sigma(out, sc, set);
      out.errors.push_back(track.position() - truth[t]);
      ++out.fixes;
    }
  }

  std::vector<Eigen::Vector3d> errors;
  MetricsReport report;
  long fixes = 0;
  for (const auto& out : outputs) {
    errors.insert(errors.end(), out.errors.begin(), out.errors.end());
    merge_sigma(report.measurement_sigma, out.sigma);
    fixes += out.fixes;
  }
  if (errors.empty()) throw HardFailure("run_track: no epochs");

  const auto sigma = std::move(report.measurement_sigma);
  report = compute_metrics(errors, sc.solver.mode_2d ? 2 : 3);
  report.measurement_sigma = sigma;
  report.method = to_string(spec.method);
  report.level = to_string(spec.level);
  report.mu = mu;
  report.runs = spec.runs;
  report.seed = spec.seed;
  report.fixes_used = fixes;
  report.epoch_errors.reserve(errors.size());
  for (const auto& e : errors)
    report.epoch_errors.push_back(sc.solver.mode_2d ? std::hypot(e.x(), e.y()) : e.norm());

  if (!spec.dump_measurements.empty()) {
    std::ofstream f(spec.dump_measurements);
    for (const auto& line : outputs.front().measurement_lines) f << line << "\n";
  }
  return report;
}

std::string MetricsReport::to_json_string() const {
  json j;
  j["method"] = method;
  j["level"] = level;
  j["mu"] = mu;
  j["runs"] = runs;
  j["seed"] = seed;
  j["bias"] = {bias.x(), bias.y(), bias.z()};
  j["bias_norm"] = bias_norm;
  j["rmse"] = rmse;
  j["mae"] = mae;
  j["fixes_used"] = fixes_used;
  j["fixes_rejected"] = fixes_rejected;
  j["map_rejected_fraction"] = map_rejected_fraction;
  json sig;
  for (const auto& [k, v] : measurement_sigma) {
    sig[k] = {{"count", v.count}, {"stddev", v.stddev()}};
  }
  j["measurement_sigma"] = std::move(sig);
  j["cdf_knots"] = cdf_knots;
  return j.dump(2);
}

void write_report(const MetricsReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "report.json");
    f << report.to_json_string() << "\n";
  }
  {
    std::ofstream f(fs::path(out_dir) / "errors.csv");
    f << "index,error_m\n";
    for (std::size_t i = 0; i < report.epoch_errors.size(); ++i)
      f << i << "," << report.epoch_errors[i] << "\n";
  }
  {
    std::ofstream f(fs::path(out_dir) / "cdf.csv");
    f << "error_m,probability\n";
    const double n = static_cast<double>(report.cdf_knots.size());
    for (std::size_t i = 0; i < report.cdf_knots.size(); ++i)
      f << report.cdf_knots[i] << "," << (static_cast<double>(i + 1) / n) << "\n";
  }
}

}  // namespace nrloc
