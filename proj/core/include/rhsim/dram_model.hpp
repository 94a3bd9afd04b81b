#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhsim/addrmap.hpp"

namespace rhsim {

struct HammerParams {
  /// Flips become possible once a row's activation count in the current
  /// refresh window exceeds this value.
  std::uint64_t hc_first = 50'000;
  double flip_probability = 1e-4;
  std::uint64_t blast_radius = 1;
  /// Flip every candidate victim on the first eligible activation, at most
  /// once per victim row per window. Outcomes do not depend on rng_seed.
  bool deterministic = false;
  std::uint64_t rng_seed = 1;

  void check() const;
};

struct BitflipRecord {
  PhysAddr pa = 0;
  DramCoordinate coord;
  unsigned bit_index = 0;
  std::uint64_t aggressor_row = 0;
  std::uint8_t old_value = 0;
  std::uint8_t new_value = 0;

  friend bool operator==(const BitflipRecord&, const BitflipRecord&) = default;
};

struct Stats {
  std::uint64_t accesses = 0;
  std::uint64_t row_buffer_hits = 0;
  std::uint64_t activations = 0;
  std::uint64_t precharges = 0;
  std::uint64_t refresh_windows = 0;
  /// Indexed by BankTuple::index.
  std::vector<std::uint64_t> bank_activations;

  [[nodiscard]] double hit_rate() const noexcept {
    return accesses == 0 ? 0.0 : static_cast<double>(row_buffer_hits) / static_cast<double>(accesses);
  }

  friend bool operator==(const Stats&, const Stats&) = default;
};

enum class AccessKind { read, write };

struct AccessOutcome {
  bool hit = false;
  std::uint8_t value = 0;
};

/// Single-owner DRAM state: one open-page row buffer per bank tuple,
/// per-window activation counters, sparse byte contents and recorded flips.
///
/// Every access either hits the open row or precharges and activates, so
/// stats().accesses == row_buffer_hits + activations holds at all times.
/// Flips land only in rows of the aggressor's bank tuple and subarray, at
/// most blast_radius rows away.
class DramSim {
 public:
  DramSim(Mapper mapper, HammerParams params);

  [[nodiscard]] const Mapper& mapper() const noexcept { return mapper_; }
  [[nodiscard]] const Geometry& geometry() const noexcept { return mapper_.geometry(); }
  [[nodiscard]] const HammerParams& params() const noexcept { return params_; }

  /// Throws RangeError for pa out of range, ConfigError if `data` is
  /// present for a read or absent for a write.
  AccessOutcome access(PhysAddr pa, AccessKind kind, std::optional<std::uint8_t> data = std::nullopt);

  /// Activates coord's row regardless of the row buffer. This models one
  /// iteration of a flush+access hammer loop and counts as a missed access.
  void activate_row(const DramCoordinate& coord);

  /// Starts a new refresh window: clears activation counters and
  /// deterministic-mode latches. Row buffers stay open.
  void refresh();

  [[nodiscard]] const std::vector<BitflipRecord>& flips() const noexcept { return flips_; }
  [[nodiscard]] const Stats& stats() const noexcept { return stats_; }

  /// Content access without touching row buffers, counters or stats.
  [[nodiscard]] std::uint8_t read_byte(PhysAddr pa) const;
  void write_byte(PhysAddr pa, std::uint8_t value);

  [[nodiscard]] std::uint64_t activation_count(const DramCoordinate& coord) const;
  [[nodiscard]] std::optional<std::uint64_t> open_row(const BankTuple& bank) const;

 private:
  void check_pa(PhysAddr pa) const;
  void activate(const DramCoordinate& coord, std::uint64_t bank_index);
  void maybe_flip(const DramCoordinate& aggressor, std::uint64_t bank_index, std::uint64_t count);
  void flip_cell(const DramCoordinate& aggressor, std::uint64_t bank_index, std::uint64_t victim_row);
  [[nodiscard]] std::uint64_t row_key(std::uint64_t bank_index, std::uint64_t row) const noexcept {
    return bank_index * geometry().rows + row;
  }

  Mapper mapper_;
  HammerParams params_;
  std::vector<std::optional<std::uint64_t>> open_row_;
  std::unordered_map<std::uint64_t, std::uint64_t> act_count_;
  std::unordered_set<std::uint64_t> latched_;
  std::unordered_map<PhysAddr, std::uint8_t> contents_;
  std::vector<BitflipRecord> flips_;
  Stats stats_;
  std::mt19937_64 rng_;
};

/// Free-function spellings of the DramSim operations.
[[nodiscard]] inline DramSim new_state(const Mapper& mapper, const HammerParams& params) { return {mapper, params}; }
[[nodiscard]] inline const std::vector<BitflipRecord>& collect_flips(const DramSim& s) { return s.flips(); }
[[nodiscard]] inline const Stats& stats(const DramSim& s) { return s.stats(); }

[[nodiscard]] nlohmann::ordered_json to_json(const Stats& s);
[[nodiscard]] nlohmann::ordered_json to_json(const BitflipRecord& f);
[[nodiscard]] nlohmann::ordered_json to_json(const HammerParams& p);

}  // namespace rhsim
