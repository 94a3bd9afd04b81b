#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace rhsim {

using PhysAddr = std::uint64_t;

enum class CoordKind : unsigned { channel = 0, rank, bankgroup, bank, row, column };

inline constexpr std::array<CoordKind, 6> kCoordKinds = {
    CoordKind::channel, CoordKind::rank, CoordKind::bankgroup,
    CoordKind::bank,    CoordKind::row,  CoordKind::column};

[[nodiscard]] std::string_view to_string(CoordKind kind) noexcept;
[[nodiscard]] bool parse_coord_kind(std::string_view name, CoordKind& out) noexcept;

/// DRAM dimensions. `columns` is the number of bytes in one row of one bank.
///
/// Every count must be a power of two; `rows_per_subarray` must divide `rows`.
/// Subarrays are row-contiguous: subarray(row) == row / rows_per_subarray.
struct Geometry {
  std::uint64_t channels = 1;
  std::uint64_t ranks = 1;
  std::uint64_t bankgroups = 1;
  std::uint64_t banks = 1;  // per bankgroup
  std::uint64_t rows = 1;
  std::uint64_t columns = 1;
  std::uint64_t rows_per_subarray = 1;

  /// Throws StructuralError when an invariant does not hold.
  void check() const;

  [[nodiscard]] std::uint64_t extent(CoordKind kind) const noexcept;
  [[nodiscard]] unsigned bits(CoordKind kind) const noexcept;
  [[nodiscard]] std::uint64_t total_bytes() const noexcept;
  [[nodiscard]] unsigned address_width() const noexcept;
  [[nodiscard]] std::uint64_t subarray_count() const noexcept { return rows / rows_per_subarray; }
  /// Number of independent row buffers: channels * ranks * bankgroups * banks.
  [[nodiscard]] std::uint64_t bank_tuple_count() const noexcept;

  /// 1 channel, 1 rank, 4 bankgroups, 2 banks, 65536 rows, 8 KiB rows and
  /// 512-row subarrays (4 GiB, DDR4 4Gb x8 organisation).
  [[nodiscard]] static Geometry ddr4_reference() noexcept;

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

/// Identifies one row buffer: (channel, rank, bankgroup, bank).
struct BankTuple {
  std::uint64_t channel = 0;
  std::uint64_t rank = 0;
  std::uint64_t bankgroup = 0;
  std::uint64_t bank = 0;

  [[nodiscard]] std::uint64_t index(const Geometry& g) const noexcept {
    return ((channel * g.ranks + rank) * g.bankgroups + bankgroup) * g.banks + bank;
  }
  [[nodiscard]] static BankTuple from_index(const Geometry& g, std::uint64_t idx) noexcept;

  friend auto operator<=>(const BankTuple&, const BankTuple&) = default;
};

struct DramCoordinate {
  std::uint64_t channel = 0;
  std::uint64_t rank = 0;
  std::uint64_t bankgroup = 0;
  std::uint64_t bank = 0;
  std::uint64_t row = 0;
  std::uint64_t column = 0;

  [[nodiscard]] std::uint64_t get(CoordKind kind) const noexcept;
  void set(CoordKind kind, std::uint64_t value) noexcept;

  [[nodiscard]] BankTuple bank_tuple() const noexcept { return {channel, rank, bankgroup, bank}; }
  [[nodiscard]] std::uint64_t subarray(const Geometry& g) const noexcept { return row / g.rows_per_subarray; }
  [[nodiscard]] std::uint64_t row_in_subarray(const Geometry& g) const noexcept {
    return row % g.rows_per_subarray;
  }
  [[nodiscard]] bool within(const Geometry& g) const noexcept;

  [[nodiscard]] std::string to_string() const;

  friend auto operator<=>(const DramCoordinate&, const DramCoordinate&) = default;
};

/// A row of one bank: the unit that is activated and disturbed.
struct RowTuple {
  std::uint64_t bank_tuple = 0;  // BankTuple::index
  std::uint64_t row = 0;

  friend auto operator<=>(const RowTuple&, const RowTuple&) = default;
};

[[nodiscard]] constexpr bool is_pow2(std::uint64_t v) noexcept { return v != 0 && (v & (v - 1)) == 0; }

[[nodiscard]] constexpr unsigned log2_exact(std::uint64_t v) noexcept {
  unsigned n = 0;
  while (v > 1) {
    v >>= 1;
    ++n;
  }
  return n;
}

}  // namespace rhsim
