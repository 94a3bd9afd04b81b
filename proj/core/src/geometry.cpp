#include "rhsim/geometry.hpp"

#include <sstream>

#include "rhsim/error.hpp"

namespace rhsim {

std::string_view to_string(CoordKind kind) noexcept {
  switch (kind) {
    case CoordKind::channel: return "channel";
    case CoordKind::rank: return "rank";
    case CoordKind::bankgroup: return "bankgroup";
    case CoordKind::bank: return "bank";
    case CoordKind::row: return "row";
    case CoordKind::column: return "column";
  }
  return "?";
}

bool parse_coord_kind(std::string_view name, CoordKind& out) noexcept {
  for (auto k : kCoordKinds) {
    if (to_string(k) == name) {
      out = k;
      return true;
    }
  }
  return false;
}

void Geometry::check() const {
  static constexpr std::array<std::pair<const char*, std::uint64_t Geometry::*>, 7> fields = {{
      {"channels", &Geometry::channels},
      {"ranks", &Geometry::ranks},
      {"bankgroups", &Geometry::bankgroups},
      {"banks", &Geometry::banks},
      {"rows", &Geometry::rows},
      {"columns", &Geometry::columns},
      {"rows_per_subarray", &Geometry::rows_per_subarray},
  }};
  for (const auto& [name, member] : fields) {
    if (!is_pow2(this->*member)) {
      throw StructuralError(std::string("geometry.") + name + " must be a power of two >= 1, got " +
                            std::to_string(this->*member));
    }
  }
  if (rows_per_subarray > rows) {
    throw StructuralError("geometry.rows_per_subarray exceeds geometry.rows");
  }
  unsigned width = 0;
  for (auto k : kCoordKinds) width += bits(k);
  if (width > 63) {
    throw StructuralError("geometry describes more than 2^63 bytes");
  }
}

std::uint64_t Geometry::extent(CoordKind kind) const noexcept {
  switch (kind) {
    case CoordKind::channel: return channels;
    case CoordKind::rank: return ranks;
    case CoordKind::bankgroup: return bankgroups;
    case CoordKind::bank: return banks;
    case CoordKind::row: return rows;
    case CoordKind::column: return columns;
  }
  return 1;
}

unsigned Geometry::bits(CoordKind kind) const noexcept { return log2_exact(extent(kind)); }

std::uint64_t Geometry::total_bytes() const noexcept {
  return channels * ranks * bankgroups * banks * rows * columns;
}

unsigned Geometry::address_width() const noexcept { return log2_exact(total_bytes()); }

std::uint64_t Geometry::bank_tuple_count() const noexcept { return channels * ranks * bankgroups * banks; }

Geometry Geometry::ddr4_reference() noexcept {
  Geometry g;
  g.channels = 1;
  g.ranks = 1;
  g.bankgroups = 4;
  g.banks = 2;
  g.rows = 65536;
  g.columns = 8192;
  g.rows_per_subarray = 512;
  return g;
}

BankTuple BankTuple::from_index(const Geometry& g, std::uint64_t idx) noexcept {
  BankTuple t;
  t.bank = idx % g.banks;
  idx /= g.banks;
  t.bankgroup = idx % g.bankgroups;
  idx /= g.bankgroups;
  t.rank = idx % g.ranks;
  t.channel = idx / g.ranks;
  return t;
}

std::uint64_t DramCoordinate::get(CoordKind kind) const noexcept {
  switch (kind) {
    case CoordKind::channel: return channel;
    case CoordKind::rank: return rank;
    case CoordKind::bankgroup: return bankgroup;
    case CoordKind::bank: return bank;
    case CoordKind::row: return row;
    case CoordKind::column: return column;
  }
  return 0;
}

void DramCoordinate::set(CoordKind kind, std::uint64_t value) noexcept {
  switch (kind) {
    case CoordKind::channel: channel = value; break;
    case CoordKind::rank: rank = value; break;
    case CoordKind::bankgroup: bankgroup = value; break;
    case CoordKind::bank: bank = value; break;
    case CoordKind::row: row = value; break;
    case CoordKind::column: column = value; break;
  }
}

bool DramCoordinate::within(const Geometry& g) const noexcept {
  for (auto k : kCoordKinds) {
    if (get(k) >= g.extent(k)) return false;
  }
  return true;
}

std::string DramCoordinate::to_string() const {
  std::ostringstream os;
  os << "(ch " << channel << ", rank " << rank << ", bg " << bankgroup << ", bank " << bank
     << ", row " << row << ", col 0x" << std::hex << column << ")";
  return os.str();
}

}  // namespace rhsim
