#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rhsim/allocator.hpp"
#include "rhsim/error.hpp"

using namespace rhsim;

namespace {

const Geometry kRef = Geometry::ddr4_reference();
constexpr std::uint64_t MiB = 1ULL << 20;

Mapper preset(std::string_view name) { return Mapper(*builtin_mapping(name, kRef)); }

Region vm(VmId id, PhysAddr start, std::uint64_t size) { return {Owner::of_vm(id), start, size}; }

bool has(const std::vector<LayoutViolation>& v, LayoutViolation::Kind k) {
  for (const auto& x : v) {
    if (x.kind == k) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("owner labels") {
  CHECK(Owner::of_vm(3).to_string() == "vm3");
  CHECK(Owner::parse("vm12") == Owner::of_vm(12));
  CHECK(Owner::parse("unused") == Owner::unused());
  CHECK(Owner::parse("hypervisor") == Owner::hypervisor());
  CHECK_THROWS((void)Owner::parse("vmx"));
}

TEST_CASE("check_layout") {
  MemoryLayout ok{{vm(0, 0, 512 * MiB), vm(1, 0x20000000, 512 * MiB)}};
  CHECK(check_layout(ok, kRef).empty());

  MemoryLayout overlap{{vm(0, 0, 4096 * MiB), vm(1, 0x20000000, 8 * MiB)}};
  CHECK(has(check_layout(overlap, kRef), LayoutViolation::Kind::overlap));

  MemoryLayout mis{{vm(0, 0x100, 8 * MiB)}};
  CHECK(has(check_layout(mis, kRef, 0x8000), LayoutViolation::Kind::misaligned));
  CHECK(has(check_layout(mis, preset("simple")), LayoutViolation::Kind::misaligned));

  MemoryLayout oob{{vm(0, 0xFFFF0000, 1 * MiB)}};
  CHECK(has(check_layout(oob, kRef), LayoutViolation::Kind::out_of_bounds));

  MemoryLayout dup{{vm(0, 0, 8 * MiB), vm(0, 0x1000000, 8 * MiB)}};
  CHECK(has(check_layout(dup, kRef), LayoutViolation::Kind::duplicate_vm));
}

TEST_CASE("layout JSON roundtrip") {
  MemoryLayout l{{vm(0, 0, 16 * MiB), {Owner::unused(), 0x1000000, 0x8000}, vm(1, 0x1008000, 16 * MiB)}};
  const auto text = l.to_json().dump();
  CHECK(text.find("\"0x1008000\"") != std::string::npos);
  CHECK(parse_layout(text) == l);
  CHECK_THROWS_AS((void)parse_layout("{\"regions\": [{\"owner\": \"vm0\"}]}"), ParseError);
}

TEST_CASE("footprint of 16 MiB at 0 under simple: rows 0..511 of bank 0, all bankgroups") {
  const auto m = preset("simple");
  const auto fp = row_footprint(m, vm(0, 0, 16 * MiB));
  CHECK(fp.rows.size() == 512 * 4);
  for (const auto& rt : fp.rows) {
    const auto bt = BankTuple::from_index(kRef, rt.bank_tuple);
    CHECK(bt.bank == 0);
    CHECK(rt.row < 512);
  }
  CHECK(fp.subarray_groups() == std::vector<std::uint64_t>{0});
  CHECK(fp.subarrays.size() == 4);

  // Stride oracle: translate one PA per 8 KiB (one bankgroup's share of a row).
  std::set<RowTuple> expect;
  for (PhysAddr pa = 0; pa < 16 * MiB; pa += 0x2000) expect.insert(m.row_tuple(pa));
  CHECK(std::set<RowTuple>(fp.rows.begin(), fp.rows.end()) == expect);
}

TEST_CASE("footprint of one row across bankgroups, and of nothing") {
  const auto m = preset("simple");
  const auto fp = row_footprint(m, vm(0, 0, kRef.columns * kRef.bankgroups));
  REQUIRE(fp.rows.size() == 4);
  for (const auto& rt : fp.rows) CHECK(rt.row == 0);
  CHECK(row_footprint(m, vm(0, 0x1000, 0)).rows.empty());
  CHECK_THROWS_AS((void)row_footprint(m, vm(0, 0xFFFF8000, 0x10000)), RangeError);
}

TEST_CASE("footprint representatives are the lowest PA of each row in the region") {
  const auto m = preset("bank-xor");
  const Region r = vm(0, 0x80000000, 0x10000);
  const auto fp = row_footprint(m, r);
  for (std::size_t i = 0; i < fp.rows.size(); ++i) {
    CHECK(m.row_tuple(fp.representative[i]) == fp.rows[i]);
    CHECK(r.contains(fp.representative[i]));
  }
  // Bit 6 toggles the bank, so each 8 KiB column span covers both banks.
  CHECK(fp.rows.size() == 2 * 4 * 2);
}

TEST_CASE("siloz: two 16 MiB VMs on simple") {
  const auto plan = plan_siloz(preset("simple"), {16 * MiB, 16 * MiB});
  REQUIRE(plan.layout.regions.size() == 2);
  CHECK(plan.layout.regions[0] == vm(0, 0, 16 * MiB));
  CHECK(plan.layout.regions[1] == vm(1, 0x1000000, 16 * MiB));
  CHECK(plan.assignments[0].subarray_groups == std::vector<std::uint64_t>{0});
  CHECK(plan.assignments[1].subarray_groups == std::vector<std::uint64_t>{1});
  CHECK(plan.assignments[0].contained);
  CHECK(plan.assignments[1].contained);
}

TEST_CASE("siloz: two 512 MiB VMs are disjoint but not contained") {
  const auto plan = plan_siloz(preset("simple"), {512 * MiB, 512 * MiB});
  REQUIRE(plan.assignments.size() == 2);
  CHECK(plan.assignments[0].subarray_groups.size() == 32);
  CHECK(plan.assignments[0].subarray_groups.front() == 0);
  CHECK(plan.assignments[1].subarray_groups.front() == 32);
  CHECK(plan.assignments[1].subarray_groups.back() == 63);
  CHECK_FALSE(plan.assignments[0].contained);
  CHECK_FALSE(plan.assignments[1].contained);
}

TEST_CASE("siloz and citadel reject impossible requests") {
  const auto m = preset("simple");
  CHECK_THROWS_AS((void)plan_siloz(m, {kRef.total_bytes(), 0x8000}), InfeasibleError);
  CHECK_THROWS_AS((void)plan_siloz(m, {0x4000}), InfeasibleError);
  CHECK_THROWS_AS((void)plan_citadel(m, {8 * MiB, 8 * MiB}, 0), ConfigError);
  CHECK_THROWS_AS((void)plan_citadel(m, {kRef.total_bytes(), 0x8000}, 1), InfeasibleError);
}

TEST_CASE("citadel: two 256 MiB VMs on simple with one guard row") {
  const auto l = plan_citadel(preset("simple"), {256 * MiB, 256 * MiB}, 1);
  REQUIRE(l.regions.size() == 3);
  CHECK(l.regions[0] == vm(0, 0, 256 * MiB));
  CHECK(l.regions[1] == Region{Owner::unused(), 0x10000000, 0x8000});
  CHECK(l.regions[2] == vm(1, 0x10008000, 256 * MiB));
  CHECK(preset("simple").to_coord(0x10008000).row == 8193);
  CHECK(classify_pa(l, 0x10000000) == Owner::unused());
  CHECK(classify_pa(l, 0x80000000 + 0x10000000) == Owner::unallocated());
  CHECK(classify_pa(l, 0x1234) == Owner::of_vm(0));
  CHECK(check_layout(l, preset("simple")).empty());
}

TEST_CASE("find_aggressors on adjacent 8 MiB VMs") {
  const auto m = preset("simple");
  const auto l = plan_packed(kRef, {8 * MiB, 8 * MiB});
  const auto a = find_aggressors(m, l, 1, 0, 1);
  REQUIRE_FALSE(a.empty());
  bool found = false;
  for (const auto& c : a) {
    CHECK(classify_pa(l, c.pa) == Owner::of_vm(1));
    if (c.coord.row == 256 && c.victim_rows == std::vector<std::uint64_t>{255}) found = true;
  }
  CHECK(found);
  CHECK(a.size() == 4);  // one per bankgroup
}

TEST_CASE("mitigated layouts leave no aggressors") {
  const auto m = preset("simple");
  const auto s = plan_siloz(m, {16 * MiB, 16 * MiB});
  CHECK(find_aggressors(m, s.layout, 1, 0, 1).empty());
  const auto c = plan_citadel(m, {256 * MiB, 256 * MiB}, 1);
  CHECK(find_aggressors(m, c, 1, 0, 1).empty());
  // Rows 8191 and 8193 straddle the subarray 15/16 boundary.
  CHECK(find_aggressors(m, c, 1, 0, 2).empty());
  CHECK_THROWS_AS((void)find_aggressors(m, c, 5, 0, 1), ConfigError);
}

TEST_CASE("footprint, planners and aggressors agree with exhaustive oracles on random tiny mappings") {
  std::mt19937_64 rng(21);
  int siloz_ok = 0;
  int citadel_ok = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const auto g = oracle::random_geometry(rng, 6, 12);
    const auto am = oracle::random_invertible(rng, g, 6);
    const Mapper m(am);
    const oracle::PaTable table(am);
    const auto stride = table.row_stride();
    REQUIRE(m.row_stride() == stride);
    const auto blocks = g.total_bytes() / stride;

    // Footprint of a random stride-aligned region.
    const auto b0 = rng() % blocks;
    const auto nb = 1 + rng() % (blocks - b0);
    const Region r = vm(0, b0 * stride, nb * stride);
    const auto fp = row_footprint(m, r);
    const auto ref = oracle::footprint(am, r.start_pa, r.size);
    REQUIRE(fp.rows.size() == ref.size());
    std::size_t i = 0;
    for (const auto& [k, pa] : ref) {
      CHECK(fp.rows[i].bank_tuple == k.bank_tuple);
      CHECK(fp.rows[i].row == k.row);
      CHECK(fp.representative[i] == pa);
      ++i;
    }

    // Byte-granular regions go through the same block decomposition.
    const auto ub = rng() % g.total_bytes();
    const auto us = rng() % (g.total_bytes() - ub + 1);
    const auto ufp = row_footprint(m, vm(0, ub, us));
    CHECK(ufp.rows.size() == oracle::footprint(am, ub, us).size());
    CHECK(ufp.subarrays.size() == oracle::subarrays(am, ub, us).size());

    std::vector<std::uint64_t> sizes;
    const auto nvm = 2 + rng() % 2;
    for (std::uint64_t v = 0; v < nvm; ++v) sizes.push_back(stride * (1 + rng() % std::max<std::uint64_t>(1, blocks / 6)));

    const auto expect_siloz = oracle::siloz_starts(table, sizes);
    try {
      const auto plan = plan_siloz(m, sizes);
      REQUIRE(expect_siloz);
      ++siloz_ok;
      for (std::size_t v = 0; v < sizes.size(); ++v) CHECK(plan.layout.regions[v].start_pa == (*expect_siloz)[v]);
      CHECK(check_layout(plan.layout, m).empty());
      for (std::size_t a = 0; a < sizes.size(); ++a) {
        for (std::size_t b = a + 1; b < sizes.size(); ++b) {
          const auto sa = table.subarrays(plan.layout.regions[a].start_pa, sizes[a]);
          const auto sb = table.subarrays(plan.layout.regions[b].start_pa, sizes[b]);
          for (const auto& k : sa) CHECK(sb.count(k) == 0);
          CHECK(find_aggressors(m, plan.layout, static_cast<VmId>(a), static_cast<VmId>(b), 3).empty());
        }
      }
    } catch (const InfeasibleError&) {
      CHECK_FALSE(expect_siloz);
    }

    const auto guards = 1 + rng() % 2;
    const auto expect_citadel = oracle::citadel_starts(table, sizes, guards);
    try {
      const auto l = plan_citadel(m, sizes, guards);
      REQUIRE(expect_citadel);
      ++citadel_ok;
      CHECK(check_layout(l, m).empty());
      for (std::size_t v = 0; v < sizes.size(); ++v) {
        const auto* reg = l.find_vm(static_cast<VmId>(v));
        REQUIRE(reg);
        CHECK(reg->start_pa == (*expect_citadel)[v]);
      }
      for (std::size_t a = 0; a < sizes.size(); ++a) {
        for (std::size_t b = 0; b < sizes.size(); ++b) {
          if (a == b) continue;
          const auto* ra = l.find_vm(static_cast<VmId>(a));
          const auto* rb = l.find_vm(static_cast<VmId>(b));
          for (const auto& [ka, _] : oracle::footprint(am, ra->start_pa, ra->size)) {
            for (const auto& [kb, __] : oracle::footprint(am, rb->start_pa, rb->size)) {
              if (ka.bank_tuple != kb.bank_tuple || ka.row / g.rows_per_subarray != kb.row / g.rows_per_subarray) {
                continue;
              }
              CHECK((ka.row > kb.row ? ka.row - kb.row : kb.row - ka.row) > guards);
            }
          }
        }
      }
    } catch (const InfeasibleError&) {
      CHECK_FALSE(expect_citadel);
    }

    // Aggressors on a packed layout, which usually has adjacency.
    std::uint64_t packed_total = 0;
    for (auto s : sizes) packed_total += s;
    if (packed_total <= g.total_bytes()) {
      const auto l = plan_packed(g, sizes);
      const std::uint64_t radius = 1 + rng() % 2;
      const auto got = find_aggressors(m, l, 1, 0, radius);
      std::set<std::pair<oracle::RowKey, std::uint64_t>> pairs;
      for (const auto& c : got) {
        CHECK(l.regions[1].contains(c.pa));
        CHECK(c.coord == m.to_coord(c.pa));
        for (auto v : c.victim_rows) pairs.insert({{c.coord.bank_tuple().index(g), c.coord.row}, v});
      }
      CHECK(pairs == oracle::aggressor_pairs(am, l.regions[1], l.regions[0], radius));
    }
  }
  CHECK(siloz_ok > 10);
  CHECK(citadel_ok > 10);
}
