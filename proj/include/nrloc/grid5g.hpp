#pragma once

#include <complex>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nrloc/common.hpp"

namespace nrloc {

/// One row of the NR numerology table. Durations are exact (1/scs), the
/// cyclic prefix carries the tabulated value.
struct Numerology {
  int mu = 0;
  double scs_hz = 15e3;
  std::string fr;              // "FR1", "FR1/2" or "FR2"
  double max_bw_hz = 50e6;
  int slots_per_subframe = 1;  // 2^mu
  double symbol_duration_s = 1.0 / 15e3;
  double cp_duration_s = 4.69e-6;
  std::optional<double> ranging_accuracy_m;  // ~c/BW; absent for mu=4
  bool supports_data = true;
  bool supports_sync = true;

  double slot_duration_s() const { return 1e-3 / slots_per_subframe; }
};

/// Throws ValidationError outside 0..6.
Numerology numerology_params(int mu);

/// N_RB * scs * 12. Throws when the result exceeds the numerology's max BW.
double bandwidth_hz(int n_rb, int mu);

struct CarrierSpec {
  int layers = 1;            // v
  int modulation_order = 2;  // Q_m
  double scaling = 1.0;      // f in {1, 0.8, 0.75, 0.4}
  int n_rb = 1;
  int mu = 0;
  double overhead = 0.0;     // OH in {0, 0.08, 0.10, 0.14, 0.18}
};

/// Aggregate peak data rate in Mbps, R_max = 948/1024 per carrier.
double data_rate_mbps(std::span<const CarrierSpec> carriers);

struct SamplingResolution {
  double sample_time_s = 0.0;
  double range_resolution_m = 0.0;
};

/// T_s = 1/(scs * n_fft); range granularity = c * T_s.
/// n_fft must be a power of two >= 64.
SamplingResolution sampling_resolution(int mu, int n_fft);

/// Per-symbol subcarrier offsets for a PRS comb. Throws on an
/// unsupported (comb, symbols) pair.
const std::vector<int>& prs_re_offsets(int comb_size, int n_symb);
const std::vector<int>& srs_re_offsets(int comb_size, int n_symb);

enum class SsbCase { A, B, C, D, E };

SsbCase ssb_case_from_string(const std::string& s);

/// Start symbols of every SSB in a burst set for (pattern case, carrier).
/// Throws for carrier bands the case does not support.
std::vector<int> ssb_start_symbols(SsbCase pattern, double fc_ghz);
int ssb_count(SsbCase pattern, double fc_ghz);

struct PrsConfig {
  int cell_id = 0;
  int comb_size = 12;
  int n_symb = 12;
  int re_offset = 0;
  int rb_offset = 0;
  int start_symbol = 0;     // l0
  long slot_offset = 0;     // T_offset, slots
  long periodicity = 10240; // T_per, slots
  long repetition = 1;      // T_rep, slots
  int n_rb = 272;
};

struct SrsConfig {
  enum class ResourceType { periodic, semi_persistent, aperiodic };
  int cell_id = 0;
  int comb_size = 8;
  int n_symb = 8;
  int f0 = 0;
  int start_symbol = 0;
  int n_rrc = 0;            // extra offset, blocks of 4 RBs
  int b_srs = 0;
  int c_srs = 63;
  int b_hop = 0;            // >= b_srs: hopping disabled (the only supported mode)
  ResourceType resource_type = ResourceType::periodic;
  long periodicity = 10240;
  long repetition = 2;
  int n_rb = 272;
};

struct SsbConfig {
  int cell_id = 0;
  SsbCase pattern = SsbCase::A;
  double fc_ghz = 3.5;
  long slot_offset = 0;     // slot where the burst set begins
  long periodicity = 0;     // slots between bursts; 0 = single burst
};

void validate(const PrsConfig& cfg, int mu);
void validate(const SrsConfig& cfg, int mu);
void validate(const SsbConfig& cfg);

enum class SignalKind { prs, srs, ssb };

struct GridEntry {
  SignalKind kind;
  int cell_id;
  int resource_index;  // symbol index within the resource / SSB index
  std::complex<double> symbol;
};

struct GridCoord {
  long slot;
  int symbol;      // 0..13 within the slot
  int subcarrier;
  auto operator<=>(const GridCoord&) const = default;
};

struct Collision {
  GridCoord where;
  int cell_a;
  int cell_b;
};

struct GridCollisionError : ValidationError {
  explicit GridCollisionError(std::vector<Collision> c);
  std::vector<Collision> collisions;
};

/// Sparse slot-range occupancy of one or more configured signals. Only the
/// slots a simulation epoch touches are materialized. Immutable once built.
class ResourceGrid {
 public:
  ResourceGrid(long first_slot, long last_slot, int mu, int n_sc)
      : first_slot_(first_slot), last_slot_(last_slot), mu_(mu), n_sc_(n_sc) {}

  long first_slot() const { return first_slot_; }
  long last_slot() const { return last_slot_; }
  int mu() const { return mu_; }
  int subcarriers() const { return n_sc_; }

  const std::map<GridCoord, GridEntry>& entries() const { return entries_; }
  const GridEntry* at(const GridCoord& c) const;

  std::size_t size() const { return entries_.size(); }

 private:
  friend ResourceGrid map_to_grid(std::span<const PrsConfig>, std::span<const SrsConfig>,
                                  std::span<const SsbConfig>, int, long, long,
                                  std::vector<Collision>*);
  long first_slot_, last_slot_;
  int mu_;
  int n_sc_;
  std::map<GridCoord, GridEntry> entries_;
};

/// Deterministic unit-magnitude QPSK payload symbol, distinct per cell.
std::complex<double> payload_symbol(int cell_id, long slot, int symbol, int subcarrier);

/// Populate the grid for [first_slot, last_slot]. Collisions are appended to
/// *collisions when given, otherwise a GridCollisionError is thrown.
ResourceGrid map_to_grid(std::span<const PrsConfig> prs, std::span<const SrsConfig> srs,
                         std::span<const SsbConfig> ssb, int mu, long first_slot,
                         long last_slot, std::vector<Collision>* collisions = nullptr);

}  // namespace nrloc
