#include "rhsim/gf2.hpp"

#include <array>
#include <stdexcept>

namespace rhsim::gf2 {

namespace {

std::uint64_t col_mask(unsigned cols) noexcept { return cols >= 64 ? ~0ULL : (1ULL << cols) - 1; }

}  // namespace

BitMatrix::BitMatrix(unsigned rows, unsigned cols) : rows_(rows, 0), cols_(cols) {
  if (cols > 64) throw std::invalid_argument("BitMatrix supports at most 64 columns");
}

BitMatrix BitMatrix::identity(unsigned n) {
  BitMatrix m(n, n);
  for (unsigned i = 0; i < n; ++i) m.rows_[i] = 1ULL << i;
  return m;
}

void BitMatrix::set_row(unsigned i, std::uint64_t bits) { rows_.at(i) = bits & col_mask(cols_); }

void BitMatrix::set(unsigned i, unsigned j, bool value) {
  if (j >= cols_) throw std::out_of_range("BitMatrix column");
  auto& r = rows_.at(i);
  r = value ? (r | (1ULL << j)) : (r & ~(1ULL << j));
}

std::uint64_t BitMatrix::apply(std::uint64_t v) const noexcept {
  std::uint64_t out = 0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    out |= static_cast<std::uint64_t>(parity(rows_[i] & v)) << i;
  }
  return out;
}

BitMatrix BitMatrix::operator*(const BitMatrix& rhs) const {
  if (cols_ != rhs.rows()) throw std::invalid_argument("BitMatrix product dimension mismatch");
  BitMatrix out(rows(), rhs.cols());
  for (unsigned i = 0; i < rows(); ++i) {
    std::uint64_t acc = 0;
    for (unsigned k = 0; k < cols_; ++k) {
      if ((rows_[i] >> k) & 1U) acc ^= rhs.rows_[k];
    }
    out.rows_[i] = acc;
  }
  return out;
}

bool BitMatrix::is_identity() const noexcept {
  if (rows() != cols_) return false;
  for (unsigned i = 0; i < rows(); ++i) {
    if (rows_[i] != (1ULL << i)) return false;
  }
  return true;
}

Elimination eliminate(const BitMatrix& m) {
  Elimination result;
  const unsigned n = m.rows();

  // Rank and first dependency: insert rows one by one into an echelon basis
  // keyed by leading bit, tracking which original rows each basis vector mixes.
  // Witness tracking needs one bit per row, so it is limited to 64 rows.
  std::array<std::uint64_t, 64> basis{};
  std::array<std::uint64_t, 64> combo{};
  std::array<bool, 64> used{};
  for (unsigned i = 0; i < n; ++i) {
    std::uint64_t v = m.row(i);
    std::uint64_t c = i < 64 ? 1ULL << i : 0;
    while (v != 0) {
      const unsigned lead = 63U - static_cast<unsigned>(std::countl_zero(v));
      if (!used[lead]) {
        used[lead] = true;
        basis[lead] = v;
        combo[lead] = c;
        ++result.rank;
        break;
      }
      v ^= basis[lead];
      c ^= combo[lead];
    }
    if (v == 0 && result.dependency.empty()) {
      for (unsigned j = 0; j < 64; ++j) {
        if ((c >> j) & 1U) result.dependency.push_back(j);
      }
    }
  }

  if (n != m.cols() || result.rank != n) return result;

  // Gauss-Jordan on [M | I]. After reduction row i of the left part is e_i and
  // the right part holds row i of M^-1.
  std::vector<std::uint64_t> left(n);
  std::vector<std::uint64_t> right(n);
  for (unsigned i = 0; i < n; ++i) {
    left[i] = m.row(i);
    right[i] = 1ULL << i;
  }
  for (unsigned col = 0; col < n; ++col) {
    unsigned pivot = col;
    while (pivot < n && !((left[pivot] >> col) & 1U)) ++pivot;
    if (pivot == n) throw std::logic_error("full-rank matrix without pivot");
    std::swap(left[pivot], left[col]);
    std::swap(right[pivot], right[col]);
    for (unsigned r = 0; r < n; ++r) {
      if (r != col && ((left[r] >> col) & 1U)) {
        left[r] ^= left[col];
        right[r] ^= right[col];
      }
    }
  }
  BitMatrix inv(n, n);
  for (unsigned i = 0; i < n; ++i) inv.set_row(i, right[i]);
  result.inverse = std::move(inv);
  return result;
}

std::vector<std::uint64_t> row_space_basis(const std::vector<std::uint64_t>& vectors) {
  std::array<std::uint64_t, 64> basis{};
  for (std::uint64_t v : vectors) {
    while (v != 0) {
      const unsigned lead = 63U - static_cast<unsigned>(std::countl_zero(v));
      if (basis[lead] == 0) {
        basis[lead] = v;
        break;
      }
      v ^= basis[lead];
    }
  }
  // Back-substitute so each leading bit appears in exactly one vector.
  for (int i = 63; i >= 0; --i) {
    if (basis[i] == 0) continue;
    for (int j = i + 1; j < 64; ++j) {
      if (basis[j] != 0 && ((basis[j] >> i) & 1U)) basis[j] ^= basis[i];
    }
  }
  std::vector<std::uint64_t> out;
  for (auto b : basis) {
    if (b != 0) out.push_back(b);
  }
  return out;
}

}  // namespace rhsim::gf2
