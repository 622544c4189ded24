#include "nrloc/grid5g.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace nrloc {

namespace {

const std::array<Numerology, 7> kNumerologyTable = {{
    {0, 15e3, "FR1", 50e6, 1, 1.0 / 15e3, 4.69e-6, kSpeedOfLight / 50e6, true, true},
    {1, 30e3, "FR1", 100e6, 2, 1.0 / 30e3, 2.34e-6, kSpeedOfLight / 100e6, true, true},
    {2, 60e3, "FR1/2", 200e6, 4, 1.0 / 60e3, 1.17e-6, kSpeedOfLight / 200e6, true, false},
    {3, 120e3, "FR2", 400e6, 8, 1.0 / 120e3, 0.57e-6, kSpeedOfLight / 400e6, true, true},
    {4, 240e3, "FR2", 400e6, 16, 1.0 / 240e3, 0.29e-6, std::nullopt, false, true},
    {5, 480e3, "FR2", 1600e6, 32, 1.0 / 480e3, 0.15e-6, kSpeedOfLight / 1600e6, true, true},
    {6, 960e3, "FR2", 2000e6, 64, 1.0 / 960e3, 0.07e-6, kSpeedOfLight / 2000e6, true, true},
}};

}  // namespace

Numerology numerology_params(int mu) {
  if (mu < 0 || mu > 6) throw ValidationError("numerology mu must be in 0..6");
  return kNumerologyTable[static_cast<std::size_t>(mu)];
}

double bandwidth_hz(int n_rb, int mu) {
  if (n_rb < 1) throw ValidationError("bandwidth: N_RB must be >= 1");
  const Numerology num = numerology_params(mu);
  const double bw = n_rb * num.scs_hz * 12.0;
  if (bw > num.max_bw_hz) {
    std::ostringstream os;
    os << "bandwidth " << bw / 1e6 << " MHz exceeds " << num.max_bw_hz / 1e6
       << " MHz allowed at mu=" << mu;
    throw ValidationError(os.str());
  }
  return bw;
}

double data_rate_mbps(std::span<const CarrierSpec> carriers) {
  constexpr double kRmax = 948.0 / 1024.0;
  double total = 0.0;
  for (const auto& c : carriers) {
    const bool f_ok = c.scaling == 1.0 || c.scaling == 0.8 || c.scaling == 0.75 || c.scaling == 0.4;
    if (!f_ok) throw ValidationError("data_rate: invalid scaling factor");
    const bool oh_ok = c.overhead == 0.0 || c.overhead == 0.08 || c.overhead == 0.10 ||
                       c.overhead == 0.14 || c.overhead == 0.18;
    if (!oh_ok) throw ValidationError("data_rate: invalid overhead");
    const Numerology num = numerology_params(c.mu);
    total += 1e-6 * c.layers * c.modulation_order * c.scaling * kRmax *
             (12.0 * c.n_rb / num.symbol_duration_s) * (1.0 - c.overhead);
  }
  return total;
}

SamplingResolution sampling_resolution(int mu, int n_fft) {
  if (n_fft < 64 || (n_fft & (n_fft - 1)) != 0)
    throw ValidationError("sampling_resolution: n_fft must be a power of two >= 64");
  const Numerology num = numerology_params(mu);
  SamplingResolution r;
  r.sample_time_s = 1.0 / (num.scs_hz * n_fft);
  r.range_resolution_m = r.sample_time_s * kSpeedOfLight;
  return r;
}

namespace {

struct OffsetKey {
  int comb;
  int symb;
  auto operator<=>(const OffsetKey&) const = default;
};

const std::map<OffsetKey, std::vector<int>> kPrsOffsets = {
    {{2, 2}, {0, 1}},
    {{2, 4}, {0, 1, 0, 1}},
    {{2, 6}, {0, 1, 0, 1, 0, 1}},
    {{2, 12}, {0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1}},
    {{4, 4}, {0, 2, 1, 3}},
    {{4, 12}, {0, 2, 1, 3, 0, 2, 1, 3, 0, 2, 1, 3}},
    {{6, 6}, {0, 3, 1, 4, 2, 5}},
    {{6, 12}, {0, 3, 1, 4, 2, 5, 0, 3, 1, 4, 2, 5}},
    {{12, 12}, {0, 6, 3, 9, 1, 7, 4, 10, 2, 8, 5, 11}},
};

const std::map<OffsetKey, std::vector<int>> kSrsOffsets = {
    {{2, 1}, {0}},
    {{2, 2}, {0, 1}},
    {{2, 4}, {0, 1, 0, 1}},
    {{4, 2}, {0, 2}},
    {{4, 4}, {0, 2, 1, 3}},
    {{4, 8}, {0, 2, 1, 3, 0, 2, 1, 3}},
    {{4, 12}, {0, 2, 1, 3, 0, 2, 1, 3, 0, 2, 1, 3}},
    {{8, 4}, {0, 4, 2, 6}},
    {{8, 8}, {0, 4, 2, 6, 1, 5, 3, 7}},
    {{8, 12}, {0, 4, 2, 6, 1, 5, 3, 7, 0, 4, 2, 6}},
};

const std::vector<int>& lookup_offsets(const std::map<OffsetKey, std::vector<int>>& table,
                                       int comb, int symb, const char* what) {
  auto it = table.find({comb, symb});
  if (it == table.end()) {
    std::ostringstream os;
    os << what << ": unsupported combination comb=" << comb << " symbols=" << symb;
    throw ValidationError(os.str());
  }
  return it->second;
}

}  // namespace

const std::vector<int>& prs_re_offsets(int comb_size, int n_symb) {
  return lookup_offsets(kPrsOffsets, comb_size, n_symb, "prs_re_offsets");
}

const std::vector<int>& srs_re_offsets(int comb_size, int n_symb) {
  return lookup_offsets(kSrsOffsets, comb_size, n_symb, "srs_re_offsets");
}

SsbCase ssb_case_from_string(const std::string& s) {
  if (s == "A" || s == "a") return SsbCase::A;
  if (s == "B" || s == "b") return SsbCase::B;
  if (s == "C" || s == "c") return SsbCase::C;
  if (s == "D" || s == "d") return SsbCase::D;
  if (s == "E" || s == "e") return SsbCase::E;
  throw ValidationError("unknown SSB case: " + s);
}

namespace {

struct SsbPattern {
  std::vector<int> base;
  int period;
};

SsbPattern ssb_pattern(SsbCase c) {
  switch (c) {
    case SsbCase::A: return {{2, 8}, 14};
    case SsbCase::B: return {{4, 8, 16, 20}, 28};
    case SsbCase::C: return {{2, 8}, 14};
    case SsbCase::D: return {{4, 8, 16, 20}, 28};
    case SsbCase::E: return {{8, 12, 16, 20, 32, 36, 40, 44}, 56};
  }
  throw ValidationError("invalid SSB case");
}

// Burst index sets per TS 38.213 section 4.1. Cases D and E skip indices
// (n = 4, 9, 14 and n = 4 respectively) so each burst carries exactly 64
// blocks over the n ranges usually quoted for them.
std::vector<int> ssb_n_set(SsbCase c, double fc_ghz) {
  const bool low = fc_ghz <= 3.0;
  const bool mid = fc_ghz > 3.0 && fc_ghz <= 6.0;
  const bool high = fc_ghz > 6.0;
  switch (c) {
    case SsbCase::A:
    case SsbCase::C:
      if (low) return {0, 1};
      if (mid) return {0, 1, 2, 3};
      break;
    case SsbCase::B:
      if (low) return {0};
      if (mid) return {0, 1};
      break;
    case SsbCase::D:
      if (high) {
        std::vector<int> n;
        for (int i = 0; i <= 18; ++i)
          if (i != 4 && i != 9 && i != 14) n.push_back(i);
        return n;
      }
      break;
    case SsbCase::E:
      if (high) return {0, 1, 2, 3, 5, 6, 7, 8};
      break;
  }
  std::ostringstream os;
  os << "SSB pattern not applicable at fc=" << fc_ghz << " GHz";
  throw ValidationError(os.str());
}

}  // namespace

std::vector<int> ssb_start_symbols(SsbCase pattern, double fc_ghz) {
  const SsbPattern p = ssb_pattern(pattern);
  const std::vector<int> ns = ssb_n_set(pattern, fc_ghz);
  std::vector<int> out;
  out.reserve(p.base.size() * ns.size());
  for (int n : ns)
    for (int b : p.base) out.push_back(b + p.period * n);
  return out;
}

int ssb_count(SsbCase pattern, double fc_ghz) {
  return static_cast<int>(ssb_start_symbols(pattern, fc_ghz).size());
}

namespace {

const long kPrsPeriodBase[] = {4,  5,  8,   10,  16,  20,  32,   40,  64,
                               80, 160, 320, 640, 1280, 2560, 5120, 10240};

bool prs_period_valid(long per, int mu) {
  for (long base : kPrsPeriodBase)
    if (per == base << mu) return true;
  return false;
}

const long kSrsPeriods[] = {1,  2,   4,   5,   8,    10,   16,   20,   32,  40,   64,
                            80, 160, 320, 640, 1280, 2560, 5120, 10240};

bool srs_period_valid(long per, int mu) {
  for (long p : kSrsPeriods)
    if (per == p) return true;
  // Extended periodicities are tied to specific subcarrier spacings.
  if (per == 20480) return mu >= 1 && mu <= 3;
  if (per == 40960) return mu == 2 || mu == 3;
  if (per == 81920) return mu == 3;
  return false;
}

}  // namespace

void validate(const PrsConfig& cfg, int mu) {
  prs_re_offsets(cfg.comb_size, cfg.n_symb);  // throws on a bad pair
  if (cfg.re_offset < 0 || cfg.re_offset >= cfg.comb_size)
    throw ValidationError("prs: re_offset out of comb range");
  if (!prs_period_valid(cfg.periodicity, mu))
    throw ValidationError("prs: periodicity not allowed for this numerology");
  if (cfg.slot_offset < 0 || cfg.slot_offset >= cfg.periodicity)
    throw ValidationError("prs: slot_offset must be in [0, T_per)");
  if (cfg.repetition < 1 || cfg.repetition > cfg.periodicity)
    throw ValidationError("prs: repetition out of range");
  if (cfg.start_symbol < 0 || cfg.start_symbol + cfg.n_symb > 14)
    throw ValidationError("prs: symbols exceed the slot");
  if (cfg.n_rb < 1) throw ValidationError("prs: n_rb must be >= 1");
}

void validate(const SrsConfig& cfg, int mu) {
  srs_re_offsets(cfg.comb_size, cfg.n_symb);
  if (cfg.b_hop < cfg.b_srs)
    throw ValidationError("srs: frequency hopping unsupported (need b_hop >= B_SRS)");
  if (cfg.b_srs < 0 || cfg.b_srs > 3) throw ValidationError("srs: B_SRS in 0..3");
  if (cfg.c_srs < 0 || cfg.c_srs > 63) throw ValidationError("srs: C_SRS in 0..63");
  if (cfg.n_rrc < 0 || cfg.n_rrc > 67) throw ValidationError("srs: n_RRC in 0..67");
  if (cfg.resource_type != SrsConfig::ResourceType::aperiodic) {
    if (!srs_period_valid(cfg.periodicity, mu))
      throw ValidationError("srs: periodicity not allowed for this numerology");
  }
  if (cfg.start_symbol < 0 || cfg.start_symbol + cfg.n_symb > 14)
    throw ValidationError("srs: symbols exceed the slot");
  if (cfg.f0 < 0 || cfg.f0 >= cfg.comb_size)
    throw ValidationError("srs: f0 out of comb range");
  if (cfg.n_rb < 1) throw ValidationError("srs: n_rb must be >= 1");
}

void validate(const SsbConfig& cfg) {
  const auto starts = ssb_start_symbols(cfg.pattern, cfg.fc_ghz);  // throws on NA cells
  if (cfg.slot_offset < 0) throw ValidationError("ssb: negative slot offset");
  if (cfg.periodicity > 0 && cfg.periodicity < starts.back() / 14 + 1)
    throw ValidationError("ssb: periodicity shorter than the burst span");
}

GridCollisionError::GridCollisionError(std::vector<Collision> c)
    : ValidationError("resource grid collision between cells"), collisions(std::move(c)) {}

const GridEntry* ResourceGrid::at(const GridCoord& c) const {
  auto it = entries_.find(c);
  return it == entries_.end() ? nullptr : &it->second;
}

std::complex<double> payload_symbol(int cell_id, long slot, int symbol, int subcarrier) {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(cell_id) * 0x100000001b3ULL ^
                               splitmix64(static_cast<std::uint64_t>(slot) << 20 ^
                                          static_cast<std::uint64_t>(symbol) << 14 ^
                                          static_cast<std::uint64_t>(subcarrier)));
  const double re = (h & 1) ? 1.0 : -1.0;
  const double im = (h & 2) ? 1.0 : -1.0;
  return {re / std::sqrt(2.0), im / std::sqrt(2.0)};
}

namespace {

void place(ResourceGrid& grid, std::map<GridCoord, GridEntry>& cells, const GridCoord& at,
           const GridEntry& entry, std::vector<Collision>& collisions) {
  auto [it, inserted] = cells.emplace(at, entry);
  if (!inserted) collisions.push_back({at, it->second.cell_id, entry.cell_id});
}

}  // namespace

ResourceGrid map_to_grid(std::span<const PrsConfig> prs, std::span<const SrsConfig> srs,
                         std::span<const SsbConfig> ssb, int mu, long first_slot,
                         long last_slot, std::vector<Collision>* collisions_out) {
  if (last_slot < first_slot) throw ValidationError("map_to_grid: empty slot span");
  for (const auto& c : prs) validate(c, mu);
  for (const auto& c : srs) validate(c, mu);
  for (const auto& c : ssb) validate(c);

  int n_sc = ssb.empty() ? 0 : 240;  // SSB blocks are 240 subcarriers wide
  for (const auto& c : prs) n_sc = std::max(n_sc, (c.rb_offset + c.n_rb) * 12);
  for (const auto& c : srs) n_sc = std::max(n_sc, c.n_rrc * 4 * 12 + c.n_rb * 12);
  if (n_sc == 0) n_sc = 12;

  ResourceGrid grid(first_slot, last_slot, mu, n_sc);
  std::vector<Collision> collisions;

  for (long slot = first_slot; slot <= last_slot; ++slot) {
    for (const auto& c : prs) {
      const long phase = ((slot - c.slot_offset) % c.periodicity + c.periodicity) % c.periodicity;
      if (phase >= c.repetition) continue;
      const auto& stagger = prs_re_offsets(c.comb_size, c.n_symb);
      for (int rel = 0; rel < c.n_symb; ++rel) {
        const int sym = c.start_symbol + rel;
        const int comb_shift = (c.re_offset + stagger[static_cast<std::size_t>(rel)]) % c.comb_size;
        for (int rb = 0; rb < c.n_rb; ++rb) {
          for (int k = comb_shift; k < 12; k += c.comb_size) {
            const int sc = (c.rb_offset + rb) * 12 + k;
            place(grid, grid.entries_, {slot, sym, sc},
                  {SignalKind::prs, c.cell_id, rel, payload_symbol(c.cell_id, slot, sym, sc)},
                  collisions);
          }
        }
      }
    }
    for (const auto& c : srs) {
      if (c.resource_type != SrsConfig::ResourceType::aperiodic) {
        const long phase = (slot % c.periodicity + c.periodicity) % c.periodicity;
        if (phase >= c.repetition) continue;
      } else if (slot != first_slot) {
        continue;  // aperiodic: single shot at span start
      }
      const auto& stagger = srs_re_offsets(c.comb_size, c.n_symb);
      const int rb_base = c.n_rrc * 4;
      for (int rel = 0; rel < c.n_symb; ++rel) {
        const int sym = c.start_symbol + rel;
        const int comb_shift = (c.f0 + stagger[static_cast<std::size_t>(rel)]) % c.comb_size;
        for (int rb = 0; rb < c.n_rb; ++rb) {
          for (int k = comb_shift; k < 12; k += c.comb_size) {
            const int sc = (rb_base + rb) * 12 + k;
            place(grid, grid.entries_, {slot, sym, sc},
                  {SignalKind::srs, c.cell_id, rel, payload_symbol(c.cell_id, slot, sym, sc)},
                  collisions);
          }
        }
      }
    }
    for (const auto& c : ssb) {
      // Burst start symbols are indexed from the burst's first slot; a burst
      // may span several consecutive slots.
      const auto starts = ssb_start_symbols(c.pattern, c.fc_ghz);
      const long burst_span_slots = starts.back() / 14 + 1;
      long base = c.slot_offset;
      if (c.periodicity > 0 && slot > base)
        base += (slot - base) / c.periodicity * c.periodicity;
      if (base > slot || slot - base >= burst_span_slots) continue;
      for (std::size_t idx = 0; idx < starts.size(); ++idx) {
        const long abs_symbol = base * 14 + starts[idx];
        if (abs_symbol / 14 != slot) continue;
        const int sym0 = static_cast<int>(abs_symbol % 14);
        for (int rel = 0; rel < 4 && sym0 + rel < 14; ++rel) {
          for (int sc = 0; sc < 240; ++sc) {
            place(grid, grid.entries_, {slot, sym0 + rel, sc},
                  {SignalKind::ssb, c.cell_id, static_cast<int>(idx),
                   payload_symbol(c.cell_id, slot, sym0 + rel, sc)},
                  collisions);
          }
        }
      }
    }
  }

  if (!collisions.empty()) {
    if (collisions_out == nullptr) throw GridCollisionError(std::move(collisions));
    collisions_out->insert(collisions_out->end(), collisions.begin(), collisions.end());
  }
  return grid;
}

}  // namespace nrloc
