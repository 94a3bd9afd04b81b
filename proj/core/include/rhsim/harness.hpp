#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhsim/allocator.hpp"
#include "rhsim/dram_model.hpp"

namespace rhsim {

inline constexpr const char* kToolVersion = "0.3.1";

enum class Mitigation { none, siloz, citadel };

[[nodiscard]] std::string_view to_string(Mitigation m) noexcept;
[[nodiscard]] Mitigation parse_mitigation(std::string_view text);

struct AggressorSelection {
  enum class Mode { first, all, explicit_rows };
  Mode mode = Mode::first;
  std::vector<std::uint64_t> rows;  // for explicit_rows
};

struct Scenario {
  std::string name;
  /// How the mapping was named in the input (preset, path or "inline").
  std::string mapping_ref;
  AddressMapping mapping;
  HammerParams hammer;
  Mitigation mitigation = Mitigation::none;
  std::uint64_t guard_global_rows = 1;
  std::vector<std::uint64_t> vm_sizes;
  /// Replaces planning when present.
  std::optional<MemoryLayout> layout;
  VmId attacker_vm = 1;
  VmId victim_vm = 0;
  /// Defaults to hc_first + 1000.
  std::optional<std::uint64_t> hammer_count;
  /// Activations per refresh window; defaults to hammer_count.
  std::optional<std::uint64_t> refresh_every;
  AggressorSelection selection;
  std::uint8_t check_pattern = 0xAA;

  [[nodiscard]] std::uint64_t effective_hammer_count() const noexcept {
    return hammer_count.value_or(hammer.hc_first + 1000);
  }
  [[nodiscard]] std::uint64_t effective_refresh_every() const noexcept {
    return refresh_every.value_or(effective_hammer_count());
  }

  /// Throws ConfigError on a broken precondition.
  void check() const;

  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

/// Parses a scenario document. `mapping` may be a preset name, a path
/// (relative to base_dir) or an inline mapping object; `layout` may be a
/// path or an inline layout.
[[nodiscard]] Scenario scenario_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
[[nodiscard]] Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});

/// Resolves a preset name (under the given geometry) or a mapping file path.
[[nodiscard]] AddressMapping resolve_mapping(const std::string& ref, const std::filesystem::path& base_dir,
                                             const Geometry& preset_geometry = Geometry::ddr4_reference());

enum class Verdict { mitigated, not_mitigated };

[[nodiscard]] std::string_view to_string(Verdict v) noexcept;

struct ClassifiedFlip {
  BitflipRecord flip;
  Owner owner;
};

struct HammeredRow {
  PhysAddr pa = 0;
  DramCoordinate coord;
  /// Victim rows within blast radius; empty when the row was chosen as the
  /// nearest boundary row because no victim-adjacent aggressor exists.
  std::vector<std::uint64_t> victim_rows;
};

struct AttackReport {
  nlohmann::ordered_json scenario;
  std::string scenario_hash;
  MemoryLayout layout;
  std::vector<SilozAssignment> siloz;
  std::uint64_t victim_adjacent_aggressors = 0;
  std::vector<HammeredRow> aggressors;
  std::vector<ClassifiedFlip> flips;
  Verdict verdict = Verdict::mitigated;
  /// Flip count per owner label.
  std::map<std::string, std::uint64_t> histogram;
  Stats stats;
  /// Set when the scenario failed; other fields are then empty.
  std::optional<std::string> error;
  std::optional<std::string> error_kind;

  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

/// Builds the layout, seeds check patterns, hammers and classifies flips.
/// Throws on an invalid scenario or infeasible plan.
[[nodiscard]] AttackReport run_attack(const Scenario& scenario);

/// A finished attack together with the simulator it ran on, for post-hoc
/// inspection of memory contents.
struct AttackRun {
  AttackReport report;
  DramSim sim;
};

[[nodiscard]] AttackRun execute_attack(const Scenario& scenario);

/// Layout for the scenario's mitigation (or its explicit layout).
[[nodiscard]] MemoryLayout build_layout(const Scenario& scenario, const Mapper& mapper,
                                        std::vector<SilozAssignment>* siloz = nullptr);

/// Runs scenarios independently on up to `threads` workers (0 = hardware
/// concurrency). Reports are in input order; a failing scenario yields a
/// report whose `error` is set.
[[nodiscard]] std::vector<AttackReport> run_matrix(const std::vector<Scenario>& scenarios, unsigned threads = 0);

/// The 3 presets x {none, siloz, citadel(1)} grid: two 8 MiB VMs for none
/// and siloz, two 256 MiB VMs for citadel; VM1 attacks VM0.
[[nodiscard]] std::vector<Scenario> default_matrix(const HammerParams& hammer,
                                                   const Geometry& geometry = Geometry::ddr4_reference());

/// Table-style grid: one row per mitigation, one column per mapping.
[[nodiscard]] std::string summary_table(const std::vector<AttackReport>& reports);
[[nodiscard]] nlohmann::ordered_json summary_json(const std::vector<AttackReport>& reports);

/// FNV-1a 64 over the text, as 16 hex digits.
[[nodiscard]] std::string fnv1a_hex(std::string_view text);

}  // namespace rhsim
