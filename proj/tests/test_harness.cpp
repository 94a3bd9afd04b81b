#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "rhsim/error.hpp"
#include "rhsim/harness.hpp"

using namespace rhsim;

namespace {

const Geometry kRef = Geometry::ddr4_reference();
constexpr std::uint64_t MiB = 1ULL << 20;

Scenario scenario(std::string_view mapping, Mitigation mit, std::uint64_t size, std::uint64_t hc = 50'000,
                  bool deterministic = true) {
  Scenario s;
  s.mapping_ref = std::string(mapping);
  s.mapping = *builtin_mapping(mapping, kRef);
  s.mitigation = mit;
  s.vm_sizes = {size, size};
  s.hammer.hc_first = hc;
  s.hammer.deterministic = deterministic;
  return s;
}

std::uint64_t count_owner(const AttackReport& r, const Owner& o) {
  std::uint64_t n = 0;
  for (const auto& f : r.flips) n += f.owner == o;
  return n;
}

}  // namespace

TEST_CASE("no mitigation: the boundary aggressor flips the victim's last row") {
  auto s = scenario("simple", Mitigation::none, 8 * MiB);
  s.hammer_count = 50'001;
  s.refresh_every = 100'000;
  const auto r = run_attack(s);
  REQUIRE(r.aggressors.size() == 1);
  CHECK(r.aggressors[0].coord.row == 256);
  CHECK(r.verdict == Verdict::not_mitigated);
  CHECK(count_owner(r, Owner::of_vm(0)) >= 1);
  bool row255 = false;
  for (const auto& f : r.flips) row255 = row255 || (f.owner == Owner::of_vm(0) && f.flip.coord.row == 255);
  CHECK(row255);
  CHECK(r.victim_adjacent_aggressors == 4);

  // Exactly hc_first activations is not enough under the strict threshold.
  s.hammer_count = 50'000;
  CHECK(run_attack(s).flips.empty());
}

TEST_CASE("siloz: flips stay in the attacker's subarrays") {
  for (auto name : kPresetNames) {
    CAPTURE(name);
    const auto r = run_attack(scenario(name, Mitigation::siloz, 8 * MiB));
    CHECK(r.verdict == Verdict::mitigated);
    CHECK(r.victim_adjacent_aggressors == 0);
    REQUIRE_FALSE(r.flips.empty());
    REQUIRE(r.siloz.size() == 2);
    const auto& attacker_groups = r.siloz[1].subarray_groups;
    for (const auto& f : r.flips) {
      CHECK_FALSE(f.owner.is_vm(0));
      CHECK(std::find(attacker_groups.begin(), attacker_groups.end(), f.flip.coord.subarray(kRef)) !=
            attacker_groups.end());
    }
  }
}

TEST_CASE("citadel: flips land in guard rows") {
  for (auto name : kPresetNames) {
    CAPTURE(name);
    const auto r = run_attack(scenario(name, Mitigation::citadel, 256 * MiB));
    CHECK(r.verdict == Verdict::mitigated);
    CHECK(r.victim_adjacent_aggressors == 0);
    REQUIRE_FALSE(r.flips.empty());
    CHECK(count_owner(r, Owner::unused()) >= 1);
    for (const auto& f : r.flips) {
      CHECK_FALSE(f.owner.is_vm(0));
      if (!f.owner.is_vm(1)) CHECK(f.owner == Owner::unused());
    }
  }
}

TEST_CASE("reports are sound and complete") {
  for (auto mit : {Mitigation::none, Mitigation::siloz, Mitigation::citadel}) {
    auto s = scenario("bank-xor", mit, mit == Mitigation::citadel ? 256 * MiB : 8 * MiB, 200, false);
    s.hammer.flip_probability = 0.05;
    s.hammer_count = 5000;
    s.refresh_every = 1000;
    s.selection.mode = AggressorSelection::Mode::all;
    s.hammer.rng_seed = 9;
    const auto run = execute_attack(s);
    const auto& r = run.report;

    // Verdict and labels re-derived from the flip list alone.
    bool victim = false;
    std::map<std::string, std::uint64_t> hist;
    for (const auto& f : r.flips) {
      CHECK(f.owner == classify_pa(r.layout, f.flip.pa));
      victim = victim || f.owner.is_vm(s.victim_vm);
      ++hist[f.owner.to_string()];
      CHECK((f.flip.old_value ^ f.flip.new_value) == (1U << f.flip.bit_index));
    }
    CHECK((r.verdict == Verdict::not_mitigated) == victim);
    CHECK(hist == r.histogram);

    // Memory sweep over the patterned rows: bytes differing from the
    // pattern are exactly those with an odd number of flips.
    std::map<PhysAddr, std::uint8_t> expect;
    for (const auto& f : r.flips) {
      auto [it, fresh] = expect.emplace(f.flip.pa, f.flip.old_value);
      if (fresh) CHECK(f.flip.old_value == s.check_pattern);
      it->second ^= static_cast<std::uint8_t>(1U << f.flip.bit_index);
      CHECK(it->second == f.flip.new_value);
    }
    std::map<PhysAddr, std::uint8_t> seen;
    const auto& g = run.sim.geometry();
    std::set<std::pair<std::uint64_t, std::uint64_t>> rows;
    for (const auto& a : r.aggressors) {
      for (std::uint64_t d = 1; d <= s.hammer.blast_radius; ++d) {
        for (auto v : {a.coord.row - d, a.coord.row + d}) {
          if (v < g.rows && v / g.rows_per_subarray == a.coord.subarray(g)) rows.insert({a.coord.bank_tuple().index(g), v});
        }
      }
    }
    for (const auto& [bt, row] : rows) {
      const auto b = BankTuple::from_index(g, bt);
      for (std::uint64_t col = 0; col < g.columns; ++col) {
        const auto pa = run.sim.mapper().to_pa({b.channel, b.rank, b.bankgroup, b.bank, row, col});
        const auto v = run.sim.read_byte(pa);
        if (v != s.check_pattern) seen[pa] = v;
      }
    }
    std::erase_if(expect, [&](const auto& kv) { return kv.second == s.check_pattern; });
    CHECK(seen == expect);
    CHECK_FALSE(r.flips.empty());
  }
}

TEST_CASE("reports are byte-identical across runs") {
  auto s = scenario("bank-xor-noncontig-row", Mitigation::none, 8 * MiB, 500, false);
  s.hammer.flip_probability = 0.01;
  s.hammer.rng_seed = 77;
  const auto a = run_attack(s).to_json().dump();
  const auto b = run_attack(s).to_json().dump();
  CHECK(a == b);
  CHECK(a.find("\"tool_version\"") != std::string::npos);
  s.hammer.rng_seed = 78;
  CHECK(run_attack(s).to_json().dump() != a);
}

TEST_CASE("scenario preconditions") {
  auto s = scenario("simple", Mitigation::none, 8 * MiB);
  s.victim_vm = 1;
  CHECK_THROWS_AS((void)run_attack(s), ConfigError);
  s = scenario("simple", Mitigation::none, 8 * MiB);
  s.hammer_count = 0;
  CHECK_THROWS_AS((void)run_attack(s), ConfigError);
  s = scenario("simple", Mitigation::citadel, 8 * MiB);
  s.guard_global_rows = 0;
  CHECK_THROWS_AS((void)run_attack(s), ConfigError);
  s = scenario("simple", Mitigation::siloz, 3000 * MiB);
  CHECK_THROWS_AS((void)run_attack(s), InfeasibleError);
  s = scenario("simple", Mitigation::none, 8 * MiB);
  s.attacker_vm = 4;
  CHECK_THROWS_AS((void)run_attack(s), ConfigError);
}

TEST_CASE("explicit aggressor rows") {
  auto s = scenario("simple", Mitigation::none, 8 * MiB, 100);
  s.selection.mode = AggressorSelection::Mode::explicit_rows;
  s.selection.rows = {300};
  const auto r = run_attack(s);
  REQUIRE(r.aggressors.size() == 4);  // row 300 in every bankgroup
  for (const auto& a : r.aggressors) CHECK(a.coord.row == 300);
  CHECK(r.verdict == Verdict::mitigated);
  CHECK(count_owner(r, Owner::of_vm(1)) == 8);
  s.selection.rows = {10};
  CHECK_THROWS_AS((void)run_attack(s), ConfigError);
}

TEST_CASE("scenario JSON") {
  const auto s = parse_scenario(R"({
    "name": "t", "mapping": "bank-xor", "mitigation": "citadel", "guard_global_rows": 2,
    "vm_sizes": ["8MiB", 8388608], "hammer": {"hc_first": 64, "deterministic": true, "seed": 5},
    "hammer_count": 100, "aggressor_selection": "all", "check_pattern": "0x55"
  })");
  CHECK(s.mapping.name == "bank-xor");
  CHECK(s.mitigation == Mitigation::citadel);
  CHECK(s.guard_global_rows == 2);
  CHECK(s.vm_sizes == std::vector<std::uint64_t>{8 * MiB, 8 * MiB});
  CHECK(s.hammer.hc_first == 64);
  CHECK(s.hammer.rng_seed == 5);
  CHECK(s.effective_refresh_every() == 100);
  CHECK(s.selection.mode == AggressorSelection::Mode::all);
  CHECK(s.check_pattern == 0x55);

  const auto echo = parse_scenario(s.to_json().dump());
  CHECK(echo.to_json() == s.to_json());

  CHECK_THROWS_AS((void)parse_scenario(R"({"mapping": "simple", "vm_sizes": [1], "bogus": 1})"), ParseError);
  CHECK_THROWS_AS((void)parse_scenario(R"({"vm_sizes": [1]})"), ParseError);
  CHECK_THROWS_AS((void)parse_scenario(R"({"mapping": "nope.json", "vm_sizes": [1]})"), ConfigError);

  const auto from_file = parse_scenario(R"({"mapping": "mappings/bank-xor-noncontig-row.json", "vm_sizes": ["8M", "8M"]})",
                                        RHSIM_SOURCE_DIR);
  CHECK(from_file.mapping.function(CoordKind::bank) == std::vector<XorTerm>{{21, 6}});
}

TEST_CASE("matrix") {
  CHECK(run_matrix({}).empty());

  HammerParams h;
  h.hc_first = 256;
  h.deterministic = true;
  const auto scenarios = default_matrix(h);
  REQUIRE(scenarios.size() == 9);
  const auto reports = run_matrix(scenarios, 4);
  REQUIRE(reports.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    CAPTURE(i);
    CHECK_FALSE(reports[i].error);
    CHECK(reports[i].verdict == (i < 3 ? Verdict::not_mitigated : Verdict::mitigated));
  }
  const auto table = summary_table(reports);
  CHECK(table.find("none") != std::string::npos);
  CHECK(summary_json(reports).dump().find("\"mitigated\":6") != std::string::npos);

  const auto twice = run_matrix({scenarios[4], scenarios[4]}, 2);
  CHECK(twice[0].to_json().dump() == twice[1].to_json().dump());

  auto bad = scenarios[0];
  bad.victim_vm = bad.attacker_vm;
  const auto mixed = run_matrix({scenarios[0], bad}, 2);
  CHECK_FALSE(mixed[0].error);
  REQUIRE(mixed[1].error);
  CHECK(mixed[1].error_kind == std::optional<std::string>{"config"});
}

TEST_CASE("mitigated layouts never yield victim flips across seeds") {
  for (auto mit : {Mitigation::siloz, Mitigation::citadel}) {
    for (auto name : kPresetNames) {
      for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto s = scenario(name, mit, mit == Mitigation::citadel ? 256 * MiB : 8 * MiB, 64, false);
        s.hammer.flip_probability = 0.02;
        s.hammer.rng_seed = seed;
        s.selection.mode = AggressorSelection::Mode::all;
        const auto r = run_attack(s);
        CHECK(count_owner(r, Owner::of_vm(0)) == 0);
        CHECK(r.verdict == Verdict::mitigated);
      }
    }
  }
}
