#include "rhsim/addrmap.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <set>
#include <sstream>

#include "rhsim/error.hpp"

namespace rhsim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::array<std::pair<const char*, std::uint64_t Geometry::*>, 7> kGeometryFields = {{
    {"channels", &Geometry::channels},
    {"ranks", &Geometry::ranks},
    {"bankgroups", &Geometry::bankgroups},
    {"banks", &Geometry::banks},
    {"rows", &Geometry::rows},
    {"columns", &Geometry::columns},
    {"rows_per_subarray", &Geometry::rows_per_subarray},
}};

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

std::string label(const OutputBit& b) { return std::string(to_string(b.kind)) + " bit " + std::to_string(b.bit); }

}  // namespace

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

std::uint64_t parse_u64(std::string_view text) {
  std::string s(text);
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) || c == '_'; }),
          s.end());
  if (s.empty()) throw ParseError("empty number");
  std::uint64_t scale = 1;
  auto ends_with = [&](std::string_view suf) {
    if (s.size() <= suf.size()) return false;
    for (std::size_t i = 0; i < suf.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(s[s.size() - suf.size() + i])) != suf[i]) return false;
    }
    return true;
  };
  static constexpr std::array<std::pair<std::string_view, std::uint64_t>, 6> suffixes = {{
      {"kib", 1ULL << 10}, {"mib", 1ULL << 20}, {"gib", 1ULL << 30},
      {"k", 1ULL << 10},   {"m", 1ULL << 20},   {"g", 1ULL << 30},
  }};
  const bool is_hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
  if (!is_hex) {
    for (const auto& [suf, mult] : suffixes) {
      if (ends_with(suf)) {
        scale = mult;
        s.resize(s.size() - suf.size());
        break;
      }
    }
  }
  std::uint64_t value = 0;
  const char* first = s.data() + (is_hex ? 2 : 0);
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value, is_hex ? 16 : 10);
  if (ec != std::errc() || ptr != last || first == last) throw ParseError("not a number: '" + std::string(text) + "'");
  if (scale != 1 && value > (~0ULL) / scale) throw ParseError("number overflows 64 bits: '" + std::string(text) + "'");
  return value * scale;
}

std::uint64_t json_u64(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    auto i = v.get<std::int64_t>();
    if (i < 0) throw ParseError(where + ": negative value");
    return static_cast<std::uint64_t>(i);
  }
  if (v.is_string()) {
    try {
      return parse_u64(v.get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  throw ParseError(where + ": expected a non-negative integer or numeric string");
}

Geometry geometry_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw ParseError(where + ": expected an object");
  Geometry g;
  for (const auto& [key, member] : kGeometryFields) {
    if (!doc.contains(key)) throw ParseError(where + "." + key + ": missing");
    g.*member = json_u64(doc.at(key), where + "." + key);
  }
  for (const auto& [key, _] : doc.items()) {
    const bool known = std::any_of(kGeometryFields.begin(), kGeometryFields.end(),
                                   [&](const auto& f) { return key == f.first; });
    if (!known) throw ParseError(where + "." + key + ": unknown field");
  }
  g.check();
  return g;
}

ordered_json geometry_to_json(const Geometry& g) {
  ordered_json out = ordered_json::object();
  for (const auto& [key, member] : kGeometryFields) out[key] = g.*member;
  return out;
}

void AddressMapping::check_structure() const {
  geometry.check();
  const unsigned width = geometry.address_width();
  for (auto k : kCoordKinds) {
    const auto& fn = function(k);
    const std::string name(to_string(k));
    if (fn.size() != geometry.bits(k)) {
      throw StructuralError("coordinate '" + name + "' defines " + std::to_string(fn.size()) +
                            " output bits but geometry needs " + std::to_string(geometry.bits(k)));
    }
    for (std::size_t i = 0; i < fn.size(); ++i) {
      const auto& term = fn[i];
      const std::string where = "coordinate '" + name + "' bit " + std::to_string(i);
      if (term.empty()) throw StructuralError(where + ": empty XOR set");
      std::set<unsigned> seen;
      for (unsigned b : term) {
        if (b >= width) {
          throw StructuralError(where + ": PA bit " + std::to_string(b) + " >= address width " +
                                std::to_string(width));
        }
        if (!seen.insert(b).second) throw StructuralError(where + ": PA bit " + std::to_string(b) + " repeated");
      }
    }
  }
}

std::vector<std::uint64_t> AddressMapping::output_masks() const {
  std::vector<std::uint64_t> masks;
  for (auto k : kCoordKinds) {
    for (const auto& term : function(k)) {
      std::uint64_t m = 0;
      for (unsigned b : term) m ^= 1ULL << b;
      masks.push_back(m);
    }
  }
  return masks;
}

std::vector<OutputBit> AddressMapping::output_labels() const {
  std::vector<OutputBit> labels;
  for (auto k : kCoordKinds) {
    for (unsigned i = 0; i < function(k).size(); ++i) labels.push_back({k, i});
  }
  return labels;
}

ordered_json AddressMapping::to_json() const {
  ordered_json out = ordered_json::object();
  if (!name.empty()) out["name"] = name;
  out["geometry"] = geometry_to_json(geometry);
  ordered_json fns = ordered_json::object();
  for (auto k : kCoordKinds) {
    if (function(k).empty()) continue;
    ordered_json arr = ordered_json::array();
    for (const auto& term : function(k)) arr.push_back(term);
    fns[std::string(to_string(k))] = std::move(arr);
  }
  out["functions"] = std::move(fns);
  return out;
}

AddressMapping mapping_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("mapping: expected a JSON object");
  if (!doc.contains("geometry")) throw ParseError("mapping.geometry: missing");
  if (!doc.contains("functions")) throw ParseError("mapping.functions: missing");

  AddressMapping m;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ParseError("mapping.name: expected a string");
    m.name = doc["name"].get<std::string>();
  }
  m.geometry = geometry_from_json(doc["geometry"], "mapping.geometry");

  const json& fns = doc["functions"];
  if (!fns.is_object()) throw ParseError("mapping.functions: expected an object");
  for (const auto& [key, value] : fns.items()) {
    CoordKind kind{};
    if (!parse_coord_kind(key, kind)) throw ParseError("mapping.functions." + key + ": unknown coordinate");
    const std::string where = "mapping.functions." + key;
    if (!value.is_array()) throw ParseError(where + ": expected an array of XOR sets");
    auto& fn = m.function(kind);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const auto& term = value[i];
      const std::string twhere = where + "[" + std::to_string(i) + "]";
      if (!term.is_array()) throw ParseError(twhere + ": expected an array of PA bit indices");
      XorTerm t;
      for (std::size_t j = 0; j < term.size(); ++j) {
        const auto& b = term[j];
        if (!b.is_number_integer() || b.get<std::int64_t>() < 0) {
          throw ParseError(twhere + "[" + std::to_string(j) + "]: expected a non-negative integer");
        }
        const auto v = b.get<std::int64_t>();
        if (v > 63) throw StructuralError("coordinate '" + key + "' bit " + std::to_string(i) + ": PA bit " +
                                          std::to_string(v) + " out of range");
        t.push_back(static_cast<unsigned>(v));
      }
      fn.push_back(std::move(t));
    }
  }
  m.check_structure();
  return m;
}

AddressMapping parse_mapping(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_of(text, e.byte));
  }
  return mapping_from_json(doc);
}

ordered_json ValidationReport::to_json() const {
  ordered_json out = ordered_json::object();
  out["valid"] = valid;
  out["address_width"] = address_width;
  out["output_bits"] = output_bits;
  if (width_mismatch) {
    out["width_mismatch"] = true;
  } else {
    out["rank"] = rank;
  }
  if (!witness.empty()) {
    ordered_json w = ordered_json::array();
    for (const auto& b : witness) {
      w.push_back(ordered_json{{"coordinate", std::string(to_string(b.kind))}, {"bit", b.bit}});
    }
    out["witness"] = std::move(w);
  }
  if (inverse) {
    // Row j: mask over packed coordinate bits producing PA bit j.
    ordered_json inv = ordered_json::array();
    for (unsigned j = 0; j < inverse->rows(); ++j) inv.push_back(hex(inverse->row(j)));
    out["inverse"] = std::move(inv);
  }
  out["message"] = message;
  return out;
}

ValidationReport validate(const AddressMapping& mapping) {
  ValidationReport r;
  r.address_width = mapping.geometry.address_width();
  const auto masks = mapping.output_masks();
  r.output_bits = static_cast<unsigned>(masks.size());
  if (r.output_bits != r.address_width) {
    r.width_mismatch = true;
    r.message = "mapping defines " + std::to_string(r.output_bits) + " output bits for a " +
                std::to_string(r.address_width) + "-bit address space";
    return r;
  }
  gf2::BitMatrix m(r.address_width, r.address_width);
  for (unsigned i = 0; i < r.address_width; ++i) m.set_row(i, masks[i]);
  auto elim = gf2::eliminate(m);
  r.rank = elim.rank;
  r.valid = elim.rank == r.address_width;
  if (r.valid) {
    r.inverse = std::move(elim.inverse);
    r.message = "mapping is bijective";
  } else {
    const auto labels = mapping.output_labels();
    for (unsigned idx : elim.dependency) r.witness.push_back(labels.at(idx));
    std::string names;
    for (const auto& b : r.witness) names += (names.empty() ? "" : " ^ ") + label(b);
    r.message = "rank " + std::to_string(r.rank) + " < " + std::to_string(r.address_width) + ": " + names +
                " == 0";
  }
  return r;
}

Mapper::Mapper(AddressMapping mapping) : mapping_(std::move(mapping)) {
  mapping_.check_structure();
  auto report = validate(mapping_);
  if (!report.valid) throw InvalidMappingError("mapping '" + mapping_.name + "' is not invertible: " + report.message);
  const unsigned n = report.address_width;
  forward_ = gf2::BitMatrix(n, n);
  const auto masks = mapping_.output_masks();
  for (unsigned i = 0; i < n; ++i) forward_.set_row(i, masks[i]);
  inverse_ = std::move(*report.inverse);

  unsigned off = 0;
  for (auto k : kCoordKinds) {
    offset_[static_cast<unsigned>(k)] = off;
    field_mask_[static_cast<unsigned>(k)] = mapping_.geometry.extent(k) - 1;
    off += mapping_.geometry.bits(k);
  }
  row_tuple_bits_ = offset_[static_cast<unsigned>(CoordKind::column)];

  std::uint64_t row_pa_bits = 0;
  for (const auto& term : mapping_.function(CoordKind::row)) {
    for (unsigned b : term) row_pa_bits |= 1ULL << b;
  }
  const unsigned low = row_pa_bits == 0 ? n : static_cast<unsigned>(std::countr_zero(row_pa_bits));
  row_stride_ = 1ULL << low;
}

std::uint64_t Mapper::pack(const DramCoordinate& c) const noexcept {
  std::uint64_t v = 0;
  for (auto k : kCoordKinds) v |= c.get(k) << offset_[static_cast<unsigned>(k)];
  return v;
}

DramCoordinate Mapper::unpack(std::uint64_t bits) const noexcept {
  auto field = [&](CoordKind k) {
    const auto i = static_cast<unsigned>(k);
    return (bits >> offset_[i]) & field_mask_[i];
  };
  return {field(CoordKind::channel), field(CoordKind::rank), field(CoordKind::bankgroup),
          field(CoordKind::bank),    field(CoordKind::row),  field(CoordKind::column)};
}

DramCoordinate Mapper::to_coord(PhysAddr pa) const {
  if (pa >= mapping_.geometry.total_bytes()) {
    throw RangeError("physical address " + hex(pa) + " outside " + hex(mapping_.geometry.total_bytes()) +
                     "-byte address space");
  }
  return unpack(forward_.apply(pa));
}

PhysAddr Mapper::to_pa(const DramCoordinate& coord) const {
  if (!coord.within(mapping_.geometry)) throw RangeError("coordinate " + coord.to_string() + " outside geometry");
  return inverse_.apply(pack(coord));
}

RowTuple Mapper::row_tuple(PhysAddr pa) const {
  const auto c = to_coord(pa);
  return {c.bank_tuple().index(mapping_.geometry), c.row};
}

RowTuple Mapper::row_tuple_from_bits(std::uint64_t packed) const noexcept {
  const auto c = unpack(packed);
  return {c.bank_tuple().index(mapping_.geometry), c.row};
}

namespace {

std::vector<XorTerm> bit_range(unsigned lo, unsigned hi) {
  std::vector<XorTerm> out;
  for (unsigned b = lo; b <= hi; ++b) out.push_back({b});
  return out;
}

}  // namespace

std::vector<AddressMapping> builtin_mappings(const Geometry& g) {
  g.check();
  if (g.channels != 1 || g.ranks != 1 || g.bits(CoordKind::column) != 13 || g.bits(CoordKind::bankgroup) != 2 ||
      g.bits(CoordKind::bank) != 1 || g.bits(CoordKind::row) != 16) {
    throw StructuralError(
        "preset mappings need 1 channel, 1 rank and 13/2/1/16 column/bankgroup/bank/row bits");
  }
  AddressMapping base;
  base.geometry = g;
  base.function(CoordKind::column) = bit_range(0, 12);
  base.function(CoordKind::bankgroup) = bit_range(13, 14);

  AddressMapping simple = base;
  simple.name = "simple";
  simple.function(CoordKind::bank) = {{31}};
  simple.function(CoordKind::row) = bit_range(15, 30);

  AddressMapping bank_xor = base;
  bank_xor.name = "bank-xor";
  bank_xor.function(CoordKind::bank) = {{31, 6}};
  bank_xor.function(CoordKind::row) = bit_range(15, 30);

  AddressMapping noncontig = base;
  noncontig.name = "bank-xor-noncontig-row";
  noncontig.function(CoordKind::bank) = {{21, 6}};
  auto rows = bit_range(15, 20);
  for (auto& t : bit_range(22, 31)) rows.push_back(t);
  noncontig.function(CoordKind::row) = std::move(rows);

  return {simple, bank_xor, noncontig};
}

std::optional<AddressMapping> builtin_mapping(std::string_view name, const Geometry& g) {
  for (auto& m : builtin_mappings(g)) {
    if (m.name == name) return m;
  }
  return std::nullopt;
}

}  // namespace rhsim
