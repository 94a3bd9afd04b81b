#include "rhsim/allocator.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include "rhsim/error.hpp"

namespace rhsim {

using nlohmann::json;
using nlohmann::ordered_json;

std::string Owner::to_string() const {
  switch (kind) {
    case Kind::vm: return "vm" + std::to_string(vm);
    case Kind::unused: return "unused";
    case Kind::hypervisor: return "hypervisor";
    case Kind::unallocated: return "unallocated";
  }
  return "?";
}

Owner Owner::parse(std::string_view text) {
  if (text == "unused" || text == "UNUSED") return unused();
  if (text == "hypervisor" || text == "HYPERVISOR") return hypervisor();
  if (text.size() > 2 && (text.substr(0, 2) == "vm" || text.substr(0, 2) == "VM")) {
    const auto id = parse_u64(text.substr(2));
    if (id > 0xffff) throw ParseError("VM id too large: " + std::string(text));
    return of_vm(static_cast<VmId>(id));
  }
  throw ParseError("unknown region owner '" + std::string(text) + "' (expected vmN, unused or hypervisor)");
}

const Region* MemoryLayout::find_vm(VmId id) const noexcept {
  for (const auto& r : regions) {
    if (r.owner.is_vm(id)) return &r;
  }
  return nullptr;
}

std::vector<VmId> MemoryLayout::vms() const {
  std::set<VmId> ids;
  for (const auto& r : regions) {
    if (r.owner.kind == Owner::Kind::vm) ids.insert(r.owner.vm);
  }
  return {ids.begin(), ids.end()};
}

ordered_json MemoryLayout::to_json() const {
  ordered_json arr = ordered_json::array();
  for (const auto& r : regions) {
    ordered_json o = ordered_json::object();
    o["owner"] = r.owner.to_string();
    o["start_pa"] = hex(r.start_pa);
    o["size"] = r.size;
    arr.push_back(std::move(o));
  }
  return ordered_json{{"regions", std::move(arr)}};
}

MemoryLayout MemoryLayout::from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("regions") || !doc["regions"].is_array()) {
    throw ParseError("layout: expected an object with a 'regions' array");
  }
  MemoryLayout layout;
  const auto& arr = doc["regions"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& r = arr[i];
    const std::string where = "layout.regions[" + std::to_string(i) + "]";
    if (!r.is_object()) throw ParseError(where + ": expected an object");
    for (const char* key : {"owner", "start_pa", "size"}) {
      if (!r.contains(key)) throw ParseError(where + "." + key + ": missing");
    }
    if (!r["owner"].is_string()) throw ParseError(where + ".owner: expected a string");
    Region region;
    region.owner = Owner::parse(r["owner"].get<std::string>());
    region.start_pa = json_u64(r["start_pa"], where + ".start_pa");
    region.size = json_u64(r["size"], where + ".size");
    layout.regions.push_back(region);
  }
  return layout;
}

MemoryLayout parse_layout(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid layout JSON: ") + e.what());
  }
  return MemoryLayout::from_json(doc);
}

std::string_view to_string(LayoutViolation::Kind kind) noexcept {
  switch (kind) {
    case LayoutViolation::Kind::overlap: return "overlap";
    case LayoutViolation::Kind::out_of_bounds: return "out-of-bounds";
    case LayoutViolation::Kind::duplicate_vm: return "duplicate-vm";
    case LayoutViolation::Kind::misaligned: return "misaligned";
  }
  return "?";
}

std::vector<LayoutViolation> check_layout(const MemoryLayout& layout, const Geometry& geometry,
                                          std::uint64_t alignment) {
  std::vector<LayoutViolation> out;
  const auto total = geometry.total_bytes();
  auto describe = [](const Region& r) {
    return r.owner.to_string() + " [" + hex(r.start_pa) + ", " + hex(r.start_pa + r.size) + ")";
  };
  std::set<VmId> seen;
  for (std::size_t i = 0; i < layout.regions.size(); ++i) {
    const auto& r = layout.regions[i];
    if (r.start_pa > total || r.size > total - r.start_pa) {
      out.push_back({LayoutViolation::Kind::out_of_bounds, describe(r) + " exceeds " + hex(total)});
    }
    if (alignment > 1 && (r.start_pa % alignment != 0 || r.size % alignment != 0)) {
      out.push_back({LayoutViolation::Kind::misaligned, describe(r) + " is not aligned to " + hex(alignment)});
    }
    if (r.owner.kind == Owner::Kind::vm && !seen.insert(r.owner.vm).second) {
      out.push_back({LayoutViolation::Kind::duplicate_vm, r.owner.to_string() + " owns more than one region"});
    }
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = layout.regions[j];
      if (r.size != 0 && o.size != 0 && r.start_pa < o.end_pa() && o.start_pa < r.end_pa()) {
        out.push_back({LayoutViolation::Kind::overlap, describe(r) + " overlaps " + describe(o)});
      }
    }
  }
  return out;
}

std::vector<LayoutViolation> check_layout(const MemoryLayout& layout, const Geometry& geometry) {
  return check_layout(layout, geometry, geometry.columns);
}

std::vector<LayoutViolation> check_layout(const MemoryLayout& layout, const Mapper& mapper) {
  return check_layout(layout, mapper.geometry(), mapper.row_stride());
}

std::vector<std::uint64_t> RowFootprint::subarray_groups() const {
  std::set<std::uint64_t> groups;
  for (const auto& k : subarrays) groups.insert(k.second);
  return {groups.begin(), groups.end()};
}

namespace {

struct SpanVector {
  std::uint64_t image = 0;   // packed row-tuple bits
  std::uint64_t offset = 0;  // PA bits producing it
};

// Echelon basis of the images of PA bits [0, low_bits) under the row-tuple
// projection, each paired with the PA offset that produces it.
std::vector<SpanVector> low_bit_span(const Mapper& mapper, unsigned low_bits) {
  const std::uint64_t mask = (1ULL << mapper.row_tuple_bits()) - 1;
  std::vector<SpanVector> basis;
  for (unsigned b = 0; b < low_bits; ++b) {
    SpanVector v{mapper.coord_bits(1ULL << b) & mask, 1ULL << b};
    for (const auto& e : basis) {
      const unsigned lead = 63U - static_cast<unsigned>(std::countl_zero(e.image));
      if ((v.image >> lead) & 1U) {
        v.image ^= e.image;
        v.offset ^= e.offset;
      }
    }
    if (v.image == 0) continue;
    // Keep the basis fully reduced so the lead-bit test above stays valid.
    const unsigned lead = 63U - static_cast<unsigned>(std::countl_zero(v.image));
    for (auto& e : basis) {
      if ((e.image >> lead) & 1U) {
        e.image ^= v.image;
        e.offset ^= v.offset;
      }
    }
    basis.push_back(v);
  }
  return basis;
}

// Calls visit(image, pa) for every element of base + span(basis), Gray-code order.
template <class Visit>
void enumerate_span(std::uint64_t base_image, PhysAddr base_pa, const std::vector<SpanVector>& basis, Visit&& visit) {
  std::uint64_t image = base_image;
  PhysAddr pa = base_pa;
  visit(image, pa);
  const std::uint64_t count = 1ULL << basis.size();
  for (std::uint64_t i = 1; i < count; ++i) {
    const auto& e = basis[static_cast<unsigned>(std::countr_zero(i))];
    image ^= e.image;
    pa ^= e.offset;
    visit(image, pa);
  }
}

// Per row-stride block data: each aligned block of `stride` bytes sits in
// one row index and covers bank tuples bank_base ^ span.
struct BlockTable {
  std::uint64_t stride = 1;
  std::uint64_t count = 0;
  std::vector<std::uint64_t> row;
  // subarray keys flattened: count * keys_per_block, encoded bank*subarrays+subarray
  std::vector<std::uint64_t> keys;
  std::size_t keys_per_block = 0;

  explicit BlockTable(const Mapper& mapper) {
    const auto& g = mapper.geometry();
    stride = mapper.row_stride();
    count = g.total_bytes() / stride;
    const std::uint64_t mask = (1ULL << mapper.row_tuple_bits()) - 1;
    const auto span = low_bit_span(mapper, static_cast<unsigned>(std::countr_zero(stride)));
    keys_per_block = std::size_t{1} << span.size();
    row.resize(count);
    keys.resize(count * keys_per_block);
    const auto subarrays = g.subarray_count();
    // Linearity: stepping b-1 -> b flips the low ctz(b)+1 block-index bits.
    std::vector<std::uint64_t> step;
    for (std::uint64_t lowbits = 1; lowbits < 2 * count; lowbits = 2 * lowbits + 1) {
      step.push_back(mapper.coord_bits((lowbits & (count - 1)) * stride) & mask);
    }
    std::uint64_t packed = 0;
    for (std::uint64_t b = 0; b < count; ++b) {
      const PhysAddr base = b * stride;
      if (b) packed ^= step[static_cast<unsigned>(std::countr_zero(b))];
      row[b] = mapper.row_tuple_from_bits(packed).row;
      std::size_t k = b * keys_per_block;
      enumerate_span(packed, base, span, [&](std::uint64_t image, PhysAddr) {
        const auto rt = mapper.row_tuple_from_bits(image);
        keys[k++] = rt.bank_tuple * subarrays + rt.row / g.rows_per_subarray;
      });
    }
  }
};

std::uint64_t blocks_for(const BlockTable& t, std::uint64_t size, std::size_t vm) {
  if (size == 0 || size % t.stride != 0) {
    throw InfeasibleError("VM " + std::to_string(vm) + " size " + hex(size) +
                          " is not a positive multiple of the mapping's row stride " + hex(t.stride));
  }
  return size / t.stride;
}

// Lowest block b >= from such that [b, b + n) are all allowed, or count.
template <class Allowed>
std::uint64_t first_run(const BlockTable& t, std::uint64_t from, std::uint64_t n, Allowed&& allowed) {
  std::uint64_t run = 0;
  for (std::uint64_t b = from; b < t.count; ++b) {
    if (allowed(b)) {
      if (++run == n) return b + 1 - n;
    } else {
      run = 0;
    }
  }
  return t.count;
}

}  // namespace

RowFootprint row_footprint(const Mapper& mapper, const Region& region) {
  RowFootprint fp;
  if (region.size == 0) return fp;
  const auto& g = mapper.geometry();
  if (region.start_pa >= g.total_bytes() || region.size > g.total_bytes() - region.start_pa) {
    throw RangeError("region " + hex(region.start_pa) + "+" + hex(region.size) + " outside address space");
  }
  const std::uint64_t mask = (1ULL << mapper.row_tuple_bits()) - 1;
  std::vector<std::pair<std::uint64_t, PhysAddr>> seen;  // (packed row tuple, pa)

  PhysAddr s = region.start_pa;
  const PhysAddr e = region.end_pa();
  while (s < e) {
    const unsigned align = s == 0 ? 63U : static_cast<unsigned>(std::countr_zero(s));
    const unsigned fit = 63U - static_cast<unsigned>(std::countl_zero(e - s));
    const unsigned j = std::min(align, fit);
    const auto span = low_bit_span(mapper, j);
    enumerate_span(mapper.coord_bits(s) & mask, s, span,
                   [&](std::uint64_t image, PhysAddr pa) { seen.emplace_back(image, pa); });
    s += 1ULL << j;
  }
  // Lowest PA per image survives the unique pass.
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end(), [](const auto& x, const auto& y) { return x.first == y.first; }),
             seen.end());

  std::vector<std::pair<RowTuple, PhysAddr>> rows;
  rows.reserve(seen.size());
  for (const auto& [image, pa] : seen) rows.emplace_back(mapper.row_tuple_from_bits(image), pa);
  std::sort(rows.begin(), rows.end());
  std::set<SubarrayKey> subarrays;
  fp.rows.reserve(rows.size());
  fp.representative.reserve(rows.size());
  for (const auto& [rt, pa] : rows) {
    fp.rows.push_back(rt);
    fp.representative.push_back(pa);
    if (subarrays.empty() || *subarrays.rbegin() != SubarrayKey{rt.bank_tuple, rt.row / g.rows_per_subarray}) {
      subarrays.insert({rt.bank_tuple, rt.row / g.rows_per_subarray});
    }
  }
  fp.subarrays.assign(subarrays.begin(), subarrays.end());
  return fp;
}

SilozPlan plan_siloz(const Mapper& mapper, const std::vector<std::uint64_t>& vm_sizes) {
  const auto& g = mapper.geometry();
  const BlockTable table(mapper);
  const auto group_bytes = g.total_bytes() / g.subarray_count();

  std::vector<char> occupied(table.count, 0);
  std::vector<char> used(g.bank_tuple_count() * g.subarray_count(), 0);
  SilozPlan plan;

  for (std::size_t vm = 0; vm < vm_sizes.size(); ++vm) {
    const auto n = blocks_for(table, vm_sizes[vm], vm);
    auto allowed = [&](std::uint64_t b) {
      if (occupied[b]) return false;
      for (std::size_t k = 0; k < table.keys_per_block; ++k) {
        if (used[table.keys[b * table.keys_per_block + k]]) return false;
      }
      return true;
    };
    const auto start = n > table.count ? table.count : first_run(table, 0, n, allowed);
    if (start == table.count) {
      throw InfeasibleError("no contiguous " + hex(vm_sizes[vm]) + "-byte range for VM " + std::to_string(vm) +
                            " avoids the subarrays of earlier VMs (row stride " + hex(table.stride) +
                            ", subarray group " + hex(group_bytes) + ")");
    }
    std::set<std::uint64_t> groups;
    for (auto b = start; b < start + n; ++b) {
      occupied[b] = 1;
      for (std::size_t k = 0; k < table.keys_per_block; ++k) {
        const auto key = table.keys[b * table.keys_per_block + k];
        used[key] = 1;
        groups.insert(key % g.subarray_count());
      }
    }
    const auto id = static_cast<VmId>(vm);
    plan.layout.regions.push_back({Owner::of_vm(id), start * table.stride, vm_sizes[vm]});
    plan.assignments.push_back({id, {groups.begin(), groups.end()}, groups.size() == 1});
  }
  return plan;
}

MemoryLayout plan_citadel(const Mapper& mapper, const std::vector<std::uint64_t>& vm_sizes,
                          std::uint64_t guard_global_rows) {
  if (guard_global_rows < 1) throw ConfigError("citadel needs at least one guard global row");
  const BlockTable table(mapper);
  MemoryLayout layout;

  std::uint64_t next_block = 0;
  bool have_floor = false;
  std::uint64_t floor_row = 0;  // rows of the next VM must exceed this

  for (std::size_t vm = 0; vm < vm_sizes.size(); ++vm) {
    const auto n = blocks_for(table, vm_sizes[vm], vm);
    std::uint64_t offending = 0;
    bool hit_forbidden = false;
    auto allowed = [&](std::uint64_t b) {
      if (!have_floor || table.row[b] > floor_row) return true;
      if (!hit_forbidden || table.row[b] > offending) offending = table.row[b];
      hit_forbidden = true;
      return false;
    };
    const auto start = n > table.count ? table.count : first_run(table, next_block, n, allowed);
    if (start == table.count) {
      std::string why = hit_forbidden ? "; global row " + std::to_string(offending) +
                                            " must stay below VM " + std::to_string(vm) +
                                            " but lies inside every candidate range"
                                      : "; address space exhausted";
      throw InfeasibleError("no contiguous " + hex(vm_sizes[vm]) + "-byte range for VM " + std::to_string(vm) +
                            " above row " + std::to_string(floor_row) + why);
    }
    if (start > next_block) {
      layout.regions.push_back({Owner::unused(), next_block * table.stride, (start - next_block) * table.stride});
    }
    layout.regions.push_back({Owner::of_vm(static_cast<VmId>(vm)), start * table.stride, vm_sizes[vm]});
    std::uint64_t max_row = 0;
    for (auto b = start; b < start + n; ++b) max_row = std::max(max_row, table.row[b]);
    floor_row = max_row + guard_global_rows;
    have_floor = true;
    next_block = start + n;
  }
  return layout;
}

MemoryLayout plan_packed(const Geometry& geometry, const std::vector<std::uint64_t>& vm_sizes) {
  MemoryLayout layout;
  PhysAddr at = 0;
  for (std::size_t vm = 0; vm < vm_sizes.size(); ++vm) {
    if (vm_sizes[vm] > geometry.total_bytes() - at) {
      throw InfeasibleError("VMs do not fit in " + hex(geometry.total_bytes()) + " bytes");
    }
    layout.regions.push_back({Owner::of_vm(static_cast<VmId>(vm)), at, vm_sizes[vm]});
    at += vm_sizes[vm];
  }
  return layout;
}

std::vector<AggressorCandidate> find_aggressors(const Mapper& mapper, const MemoryLayout& layout, VmId attacker,
                                                VmId victim, std::uint64_t blast_radius) {
  const auto* a = layout.find_vm(attacker);
  const auto* v = layout.find_vm(victim);
  if (a == nullptr || v == nullptr) throw ConfigError("attacker or victim VM missing from layout");
  return find_aggressors(mapper, row_footprint(mapper, *a), row_footprint(mapper, *v), blast_radius);
}

std::vector<AggressorCandidate> find_aggressors(const Mapper& mapper, const RowFootprint& attacker,
                                                const RowFootprint& victim, std::uint64_t blast_radius) {
  const auto& g = mapper.geometry();
  auto is_victim = [&](std::uint64_t bank_tuple, std::uint64_t row) {
    return std::binary_search(victim.rows.begin(), victim.rows.end(), RowTuple{bank_tuple, row});
  };

  std::vector<AggressorCandidate> out;
  for (std::size_t i = 0; i < attacker.rows.size(); ++i) {
    const auto& rt = attacker.rows[i];
    const auto subarray = rt.row / g.rows_per_subarray;
    std::vector<std::uint64_t> hits;
    for (std::uint64_t d = blast_radius; d >= 1; --d) {
      if (d <= rt.row) {
        const auto r = rt.row - d;
        if (r / g.rows_per_subarray == subarray && is_victim(rt.bank_tuple, r)) hits.push_back(r);
      }
    }
    for (std::uint64_t d = 1; d <= blast_radius; ++d) {
      const auto r = rt.row + d;
      if (r < g.rows && r / g.rows_per_subarray == subarray && is_victim(rt.bank_tuple, r)) hits.push_back(r);
    }
    if (hits.empty()) continue;
    AggressorCandidate c;
    c.pa = attacker.representative[i];
    c.coord = mapper.to_coord(c.pa);
    c.victim_rows = std::move(hits);
    out.push_back(std::move(c));
  }
  return out;
}

Owner classify_pa(const MemoryLayout& layout, PhysAddr pa) {
  for (const auto& r : layout.regions) {
    if (r.contains(pa)) return r.owner;
  }
  return Owner::unallocated();
}

}  // namespace rhsim
