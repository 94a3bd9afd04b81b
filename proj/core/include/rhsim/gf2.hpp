#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <vector>

namespace rhsim::gf2 {

// XOR folding: std::popcount becomes a libgcc call on baseline x86-64.
[[nodiscard]] inline unsigned parity(std::uint64_t v) noexcept {
  v ^= v >> 32;
  v ^= v >> 16;
  v ^= v >> 8;
  v ^= v >> 4;
  return (0x6996U >> (v & 0xfU)) & 1U;
}

/// Dense bit matrix over GF(2) with at most 64 columns; each row is one word.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(unsigned rows, unsigned cols);

  [[nodiscard]] static BitMatrix identity(unsigned n);

  [[nodiscard]] unsigned rows() const noexcept { return static_cast<unsigned>(rows_.size()); }
  [[nodiscard]] unsigned cols() const noexcept { return cols_; }

  [[nodiscard]] std::uint64_t row(unsigned i) const { return rows_.at(i); }
  void set_row(unsigned i, std::uint64_t bits);
  [[nodiscard]] bool get(unsigned i, unsigned j) const { return (rows_.at(i) >> j) & 1U; }
  void set(unsigned i, unsigned j, bool value);

  /// Matrix-vector product: bit i of the result is parity(row(i) & v).
  [[nodiscard]] std::uint64_t apply(std::uint64_t v) const noexcept;

  [[nodiscard]] BitMatrix operator*(const BitMatrix& rhs) const;
  [[nodiscard]] bool is_identity() const noexcept;

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::vector<std::uint64_t> rows_;
  unsigned cols_ = 0;
};

struct Elimination {
  unsigned rank = 0;
  /// Present iff the matrix is square and full rank.
  std::optional<BitMatrix> inverse;
  /// Indices of rows whose XOR is zero; empty when the rows are independent.
  /// This is the first dependency met when rows are inserted in order.
  std::vector<unsigned> dependency;
};

/// Gaussian elimination on bit-packed rows.
[[nodiscard]] Elimination eliminate(const BitMatrix& m);

/// Basis of the row space of `vectors` in reduced echelon form.
[[nodiscard]] std::vector<std::uint64_t> row_space_basis(const std::vector<std::uint64_t>& vectors);

}  // namespace rhsim::gf2
