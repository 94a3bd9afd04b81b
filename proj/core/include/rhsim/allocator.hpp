#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhsim/addrmap.hpp"

namespace rhsim {

using VmId = unsigned;

struct Owner {
  enum class Kind { vm, unused, hypervisor, unallocated };

  Kind kind = Kind::unallocated;
  VmId vm = 0;

  [[nodiscard]] static Owner of_vm(VmId id) noexcept { return {Kind::vm, id}; }
  [[nodiscard]] static Owner unused() noexcept { return {Kind::unused, 0}; }
  [[nodiscard]] static Owner hypervisor() noexcept { return {Kind::hypervisor, 0}; }
  [[nodiscard]] static Owner unallocated() noexcept { return {Kind::unallocated, 0}; }

  [[nodiscard]] bool is_vm(VmId id) const noexcept { return kind == Kind::vm && vm == id; }

  /// "vm<N>", "unused", "hypervisor" or "unallocated".
  [[nodiscard]] std::string to_string() const;
  [[nodiscard]] static Owner parse(std::string_view text);

  friend bool operator==(const Owner&, const Owner&) = default;
};

struct Region {
  Owner owner;
  PhysAddr start_pa = 0;
  std::uint64_t size = 0;

  [[nodiscard]] PhysAddr end_pa() const noexcept { return start_pa + size; }
  [[nodiscard]] bool contains(PhysAddr pa) const noexcept { return pa >= start_pa && pa < end_pa(); }

  friend bool operator==(const Region&, const Region&) = default;
};

/// Static, straight (guest PA == host PA) placement of VMs and unused ranges.
struct MemoryLayout {
  std::vector<Region> regions;

  [[nodiscard]] const Region* find_vm(VmId id) const noexcept;
  [[nodiscard]] std::vector<VmId> vms() const;

  [[nodiscard]] nlohmann::ordered_json to_json() const;
  [[nodiscard]] static MemoryLayout from_json(const nlohmann::json& doc);

  friend bool operator==(const MemoryLayout&, const MemoryLayout&) = default;
};

[[nodiscard]] MemoryLayout parse_layout(std::string_view text);

struct LayoutViolation {
  enum class Kind { overlap, out_of_bounds, duplicate_vm, misaligned };
  Kind kind;
  std::string message;
};

[[nodiscard]] std::string_view to_string(LayoutViolation::Kind kind) noexcept;

/// Empty result means the layout is valid. Region boundaries must be
/// multiples of `alignment`.
[[nodiscard]] std::vector<LayoutViolation> check_layout(const MemoryLayout& layout, const Geometry& geometry,
                                                        std::uint64_t alignment);
/// Aligns to one row of one bank (geometry.columns bytes).
[[nodiscard]] std::vector<LayoutViolation> check_layout(const MemoryLayout& layout, const Geometry& geometry);
/// Aligns to the mapping's row stride.
[[nodiscard]] std::vector<LayoutViolation> check_layout(const MemoryLayout& layout, const Mapper& mapper);

/// (bank tuple index, subarray index): the unit Siloz keeps apart.
using SubarrayKey = std::pair<std::uint64_t, std::uint64_t>;

struct RowFootprint {
  /// Sorted, unique.
  std::vector<RowTuple> rows;
  /// A PA inside the region for each entry of `rows` (the lowest one).
  std::vector<PhysAddr> representative;
  /// Sorted, unique.
  std::vector<SubarrayKey> subarrays;

  [[nodiscard]] std::vector<std::uint64_t> subarray_groups() const;
};

/// Exact set of rows touched by any byte of `region`. Each maximal aligned
/// power-of-two block of the region maps onto an affine subspace of
/// coordinate space, which is enumerated directly.
[[nodiscard]] RowFootprint row_footprint(const Mapper& mapper, const Region& region);

struct SilozAssignment {
  VmId vm = 0;
  /// Distinct subarray indices (subarray groups) the VM occupies.
  std::vector<std::uint64_t> subarray_groups;
  /// True when the VM lies inside a single subarray group.
  bool contained = false;
};

struct SilozPlan {
  MemoryLayout layout;
  std::vector<SilozAssignment> assignments;
};

/// VM i gets id i. Each VM takes the lowest-addressed contiguous range whose
/// (bank tuple, subarray) set is disjoint from every earlier VM's.
/// Throws InfeasibleError.
[[nodiscard]] SilozPlan plan_siloz(const Mapper& mapper, const std::vector<std::uint64_t>& vm_sizes);

/// VMs are placed in ascending PA order; every row of VM i+1 is more than
/// guard_global_rows above the highest row of VM i, and the PA gap between
/// them is marked unused. Throws ConfigError for zero guards and
/// InfeasibleError when no such range exists.
[[nodiscard]] MemoryLayout plan_citadel(const Mapper& mapper, const std::vector<std::uint64_t>& vm_sizes,
                                        std::uint64_t guard_global_rows);

/// No mitigation: VMs back to back from PA 0.
[[nodiscard]] MemoryLayout plan_packed(const Geometry& geometry, const std::vector<std::uint64_t>& vm_sizes);

struct AggressorCandidate {
  /// A PA inside the attacker's region that opens the aggressor row.
  PhysAddr pa = 0;
  DramCoordinate coord;
  /// Victim-owned rows within blast_radius, same bank tuple and subarray.
  std::vector<std::uint64_t> victim_rows;
};

/// Every attacker-owned row with at least one victim-owned row within
/// blast_radius in the same bank tuple and subarray, ordered by row tuple.
[[nodiscard]] std::vector<AggressorCandidate> find_aggressors(const Mapper& mapper, const MemoryLayout& layout,
                                                              VmId attacker, VmId victim,
                                                              std::uint64_t blast_radius);

/// Same, from precomputed footprints of the two VMs.
[[nodiscard]] std::vector<AggressorCandidate> find_aggressors(const Mapper& mapper, const RowFootprint& attacker,
                                                              const RowFootprint& victim, std::uint64_t blast_radius);

[[nodiscard]] Owner classify_pa(const MemoryLayout& layout, PhysAddr pa);

}  // namespace rhsim
