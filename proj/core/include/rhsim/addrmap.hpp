#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhsim/geometry.hpp"
#include "rhsim/gf2.hpp"

namespace rhsim {

/// PA bit indices combined by XOR into one coordinate bit.
using XorTerm = std::vector<unsigned>;

/// One coordinate bit as a matrix row label.
struct OutputBit {
  CoordKind kind = CoordKind::channel;
  unsigned bit = 0;

  friend bool operator==(const OutputBit&, const OutputBit&) = default;
};

/// A GF(2)-linear DRAM address mapping. Coordinate bit i of kind k is the
/// XOR of the PA bits listed in functions[k][i] (LSB first).
///
/// The validation matrix concatenates output bits in the fixed order
/// channel, rank, bankgroup, bank, row, column, each LSB first. Packed
/// coordinate vectors use the same order, so the low bits of a packed
/// vector (everything below the column field) identify a RowTuple.
struct AddressMapping {
  std::string name;
  Geometry geometry;
  std::array<std::vector<XorTerm>, 6> functions;

  [[nodiscard]] const std::vector<XorTerm>& function(CoordKind k) const {
    return functions[static_cast<unsigned>(k)];
  }
  [[nodiscard]] std::vector<XorTerm>& function(CoordKind k) { return functions[static_cast<unsigned>(k)]; }

  /// Throws StructuralError on a bad geometry, wrong output-bit count, empty
  /// or duplicated XOR set, or a PA bit index >= address_width.
  void check_structure() const;

  /// One XOR mask per output bit, in validation-matrix order.
  [[nodiscard]] std::vector<std::uint64_t> output_masks() const;
  [[nodiscard]] std::vector<OutputBit> output_labels() const;

  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

/// Parses the JSON mapping-file format. Does not check invertibility.
[[nodiscard]] AddressMapping parse_mapping(std::string_view text);
[[nodiscard]] AddressMapping mapping_from_json(const nlohmann::json& doc);
[[nodiscard]] Geometry geometry_from_json(const nlohmann::json& doc, const std::string& where = "geometry");
[[nodiscard]] nlohmann::ordered_json geometry_to_json(const Geometry& g);

struct ValidationReport {
  bool valid = false;
  unsigned address_width = 0;
  unsigned output_bits = 0;
  unsigned rank = 0;
  /// Set when output_bits != address_width; rank is not computed then.
  bool width_mismatch = false;
  /// Inverse matrix (packed coordinate bits -> PA bits) when valid.
  std::optional<gf2::BitMatrix> inverse;
  /// Output bits whose masks XOR to zero when invalid by rank.
  std::vector<OutputBit> witness;
  std::string message;

  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

[[nodiscard]] ValidationReport validate(const AddressMapping& mapping);

/// A validated mapping with its forward and inverse matrices.
/// Immutable after construction.
class Mapper {
 public:
  /// Throws StructuralError or InvalidMappingError.
  explicit Mapper(AddressMapping mapping);

  [[nodiscard]] const AddressMapping& mapping() const noexcept { return mapping_; }
  [[nodiscard]] const Geometry& geometry() const noexcept { return mapping_.geometry; }
  [[nodiscard]] const std::string& name() const noexcept { return mapping_.name; }
  [[nodiscard]] const gf2::BitMatrix& forward_matrix() const noexcept { return forward_; }
  [[nodiscard]] const gf2::BitMatrix& inverse_matrix() const noexcept { return inverse_; }

  /// Throws RangeError if pa >= total_bytes.
  [[nodiscard]] DramCoordinate to_coord(PhysAddr pa) const;
  /// Throws RangeError if any index is outside the geometry.
  [[nodiscard]] PhysAddr to_pa(const DramCoordinate& coord) const;

  [[nodiscard]] std::uint64_t pack(const DramCoordinate& c) const noexcept;
  [[nodiscard]] DramCoordinate unpack(std::uint64_t bits) const noexcept;
  /// Packed coordinate vector without range checks.
  [[nodiscard]] std::uint64_t coord_bits(PhysAddr pa) const noexcept { return forward_.apply(pa); }

  [[nodiscard]] RowTuple row_tuple(PhysAddr pa) const;
  /// Bits of a packed vector that select the row tuple (all but column).
  [[nodiscard]] unsigned row_tuple_bits() const noexcept { return row_tuple_bits_; }
  [[nodiscard]] RowTuple row_tuple_from_bits(std::uint64_t packed) const noexcept;

  /// Largest power-of-two byte stride such that every aligned block of that
  /// size lies within a single row index (no PA bit below it feeds a row bit).
  [[nodiscard]] std::uint64_t row_stride() const noexcept { return row_stride_; }

 private:
  AddressMapping mapping_;
  gf2::BitMatrix forward_;
  gf2::BitMatrix inverse_;
  std::array<unsigned, 6> offset_{};
  std::array<std::uint64_t, 6> field_mask_{};
  unsigned row_tuple_bits_ = 0;
  std::uint64_t row_stride_ = 1;
};

[[nodiscard]] inline DramCoordinate pa_to_coord(const Mapper& m, PhysAddr pa) { return m.to_coord(pa); }
[[nodiscard]] inline PhysAddr coord_to_pa(const Mapper& m, const DramCoordinate& c) { return m.to_pa(c); }

inline constexpr std::array<std::string_view, 3> kPresetNames = {"simple", "bank-xor",
                                                                 "bank-xor-noncontig-row"};

/// The three reference mappings: column = x12..0, bankgroup = x14,13 and
///   simple:                 bank = x31,      row = x30..15
///   bank-xor:               bank = x31^x6,   row = x30..15
///   bank-xor-noncontig-row: bank = x21^x6,   row = x31..22,20..15
/// Throws StructuralError when the geometry does not have the
/// 13/2/1/16-bit column/bankgroup/bank/row shape with one channel and rank.
[[nodiscard]] std::vector<AddressMapping> builtin_mappings(const Geometry& g);
[[nodiscard]] std::optional<AddressMapping> builtin_mapping(std::string_view name, const Geometry& g);

[[nodiscard]] std::string hex(std::uint64_t v);
/// Accepts decimal, 0x-prefixed hex and K/M/G/KiB/MiB/GiB suffixes.
[[nodiscard]] std::uint64_t parse_u64(std::string_view text);
[[nodiscard]] std::uint64_t json_u64(const nlohmann::json& v, const std::string& where);

}  // namespace rhsim
