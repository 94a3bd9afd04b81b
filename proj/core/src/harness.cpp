#include "rhsim/harness.hpp"

#include <algorithm>
#include <bit>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "rhsim/error.hpp"

namespace rhsim {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Mitigation m) noexcept {
  switch (m) {
    case Mitigation::none: return "none";
    case Mitigation::siloz: return "siloz";
    case Mitigation::citadel: return "citadel";
  }
  return "?";
}

Mitigation parse_mitigation(std::string_view text) {
  if (text == "none") return Mitigation::none;
  if (text == "siloz") return Mitigation::siloz;
  if (text == "citadel") return Mitigation::citadel;
  throw ConfigError("unknown mitigation '" + std::string(text) + "' (expected none, siloz or citadel)");
}

std::string_view to_string(Verdict v) noexcept {
  return v == Verdict::mitigated ? "MITIGATED" : "NOT_MITIGATED";
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Scenario::check() const {
  if (attacker_vm == victim_vm) throw ConfigError("attacker_vm and victim_vm must differ");
  if (hammer_count && *hammer_count < 1) throw ConfigError("hammer_count must be >= 1");
  if (refresh_every && *refresh_every < 1) throw ConfigError("refresh_every must be >= 1");
  if (mitigation == Mitigation::citadel && guard_global_rows < 1) {
    throw ConfigError("guard_global_rows must be >= 1");
  }
  if (!layout && vm_sizes.empty()) throw ConfigError("scenario needs vm_sizes or an explicit layout");
  if (selection.mode == AggressorSelection::Mode::explicit_rows && selection.rows.empty()) {
    throw ConfigError("explicit aggressor selection needs at least one row");
  }
  hammer.check();
}

ordered_json Scenario::to_json() const {
  ordered_json out = ordered_json::object();
  if (!name.empty()) out["name"] = name;
  out["mapping_ref"] = mapping_ref;
  out["mapping"] = mapping.to_json();
  out["hammer"] = rhsim::to_json(hammer);
  out["mitigation"] = std::string(to_string(mitigation));
  if (mitigation == Mitigation::citadel) out["guard_global_rows"] = guard_global_rows;
  out["vm_sizes"] = vm_sizes;
  if (layout) out["layout"] = layout->to_json();
  out["attacker_vm"] = attacker_vm;
  out["victim_vm"] = victim_vm;
  out["hammer_count"] = effective_hammer_count();
  out["refresh_every"] = effective_refresh_every();
  switch (selection.mode) {
    case AggressorSelection::Mode::first: out["aggressor_selection"] = "first"; break;
    case AggressorSelection::Mode::all: out["aggressor_selection"] = "all"; break;
    case AggressorSelection::Mode::explicit_rows: out["aggressor_selection"] = selection.rows; break;
  }
  out["check_pattern"] = hex(check_pattern);
  return out;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path relative_to(const std::filesystem::path& base, const std::string& ref) {
  std::filesystem::path p(ref);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

AddressMapping resolve_mapping(const std::string& ref, const std::filesystem::path& base_dir,
                               const Geometry& preset_geometry) {
  if (std::find(kPresetNames.begin(), kPresetNames.end(), ref) != kPresetNames.end()) {
    return *builtin_mapping(ref, preset_geometry);
  }
  auto m = parse_mapping(read_file(relative_to(base_dir, ref)));
  if (m.name.empty()) m.name = std::filesystem::path(ref).stem().string();
  return m;
}

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ParseError("scenario: expected a JSON object");
  static const std::set<std::string> known = {
      "name",        "mapping",      "mapping_ref",   "geometry",           "hammer",
      "mitigation",  "guard_global_rows", "vm_sizes", "layout",             "attacker_vm",
      "victim_vm",   "hammer_count", "refresh_every", "aggressor_selection", "check_pattern"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) throw ParseError("scenario." + key + ": unknown field");
  }

  Scenario s;
  if (doc.contains("name")) s.name = doc["name"].get<std::string>();

  Geometry preset_geometry = Geometry::ddr4_reference();
  if (doc.contains("geometry")) preset_geometry = geometry_from_json(doc["geometry"], "scenario.geometry");
  if (!doc.contains("mapping")) throw ParseError("scenario.mapping: missing");
  const auto& m = doc["mapping"];
  if (m.is_string()) {
    s.mapping_ref = m.get<std::string>();
    s.mapping = resolve_mapping(s.mapping_ref, base_dir, preset_geometry);
  } else if (m.is_object()) {
    s.mapping = mapping_from_json(m);
    s.mapping_ref = doc.contains("mapping_ref") ? doc["mapping_ref"].get<std::string>() : "inline";
  } else {
    throw ParseError("scenario.mapping: expected a preset name, a path or an inline mapping");
  }

  if (doc.contains("hammer")) {
    const auto& h = doc["hammer"];
    if (!h.is_object()) throw ParseError("scenario.hammer: expected an object");
    for (const auto& [key, value] : h.items()) {
      const std::string where = "scenario.hammer." + key;
      if (key == "hc_first") {
        s.hammer.hc_first = json_u64(value, where);
      } else if (key == "flip_probability") {
        if (!value.is_number()) throw ParseError(where + ": expected a number");
        s.hammer.flip_probability = value.get<double>();
      } else if (key == "blast_radius") {
        s.hammer.blast_radius = json_u64(value, where);
      } else if (key == "deterministic") {
        if (!value.is_boolean()) throw ParseError(where + ": expected true or false");
        s.hammer.deterministic = value.get<bool>();
      } else if (key == "seed") {
        s.hammer.rng_seed = json_u64(value, where);
      } else {
        throw ParseError(where + ": unknown field");
      }
    }
  }

  if (doc.contains("mitigation")) s.mitigation = parse_mitigation(doc["mitigation"].get<std::string>());
  if (doc.contains("guard_global_rows")) s.guard_global_rows = json_u64(doc["guard_global_rows"], "scenario.guard_global_rows");
  if (doc.contains("vm_sizes")) {
    const auto& sizes = doc["vm_sizes"];
    if (!sizes.is_array()) throw ParseError("scenario.vm_sizes: expected an array");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      s.vm_sizes.push_back(json_u64(sizes[i], "scenario.vm_sizes[" + std::to_string(i) + "]"));
    }
  }
  if (doc.contains("layout")) {
    const auto& l = doc["layout"];
    s.layout = l.is_string() ? parse_layout(read_file(relative_to(base_dir, l.get<std::string>())))
                             : MemoryLayout::from_json(l);
  }
  auto vm_id = [&](const char* key) {
    const auto v = json_u64(doc[key], std::string("scenario.") + key);
    if (v > 0xffff) throw ParseError(std::string("scenario.") + key + ": VM id too large");
    return static_cast<VmId>(v);
  };
  if (doc.contains("attacker_vm")) s.attacker_vm = vm_id("attacker_vm");
  if (doc.contains("victim_vm")) s.victim_vm = vm_id("victim_vm");
  if (doc.contains("hammer_count")) s.hammer_count = json_u64(doc["hammer_count"], "scenario.hammer_count");
  if (doc.contains("refresh_every")) s.refresh_every = json_u64(doc["refresh_every"], "scenario.refresh_every");
  if (doc.contains("aggressor_selection")) {
    const auto& sel = doc["aggressor_selection"];
    if (sel.is_string() && sel.get<std::string>() == "first") {
      s.selection.mode = AggressorSelection::Mode::first;
    } else if (sel.is_string() && sel.get<std::string>() == "all") {
      s.selection.mode = AggressorSelection::Mode::all;
    } else if (sel.is_array()) {
      s.selection.mode = AggressorSelection::Mode::explicit_rows;
      for (std::size_t i = 0; i < sel.size(); ++i) {
        s.selection.rows.push_back(json_u64(sel[i], "scenario.aggressor_selection[" + std::to_string(i) + "]"));
      }
    } else {
      throw ParseError("scenario.aggressor_selection: expected \"first\", \"all\" or an array of rows");
    }
  }
  if (doc.contains("check_pattern")) {
    const auto v = json_u64(doc["check_pattern"], "scenario.check_pattern");
    if (v > 0xff) throw ParseError("scenario.check_pattern: must fit in one byte");
    s.check_pattern = static_cast<std::uint8_t>(v);
  }
  return s;
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid scenario JSON: ") + e.what());
  }
  return scenario_from_json(doc, base_dir);
}

MemoryLayout build_layout(const Scenario& scenario, const Mapper& mapper, std::vector<SilozAssignment>* siloz) {
  MemoryLayout layout;
  if (scenario.layout) {
    layout = *scenario.layout;
  } else {
    switch (scenario.mitigation) {
      case Mitigation::none: layout = plan_packed(mapper.geometry(), scenario.vm_sizes); break;
      case Mitigation::siloz: {
        auto plan = plan_siloz(mapper, scenario.vm_sizes);
        if (siloz) *siloz = plan.assignments;
        layout = std::move(plan.layout);
        break;
      }
      case Mitigation::citadel:
        layout = plan_citadel(mapper, scenario.vm_sizes, scenario.guard_global_rows);
        break;
    }
  }
  const auto violations = check_layout(layout, mapper.geometry());
  if (!violations.empty()) throw ConfigError("layout is invalid: " + violations.front().message);
  if (!layout.find_vm(scenario.attacker_vm) || !layout.find_vm(scenario.victim_vm)) {
    throw ConfigError("layout has no region for vm" + std::to_string(scenario.attacker_vm) + " or vm" +
                      std::to_string(scenario.victim_vm));
  }
  return layout;
}

namespace {

HammeredRow hammered(const Mapper& mapper, PhysAddr pa, std::vector<std::uint64_t> victims = {}) {
  return {pa, mapper.to_coord(pa), std::move(victims)};
}

// Attacker rows closest (in row index, same bank tuple) to the victim's rows,
// preferring rows whose nearest victim row shares their subarray.
std::vector<HammeredRow> boundary_rows(const Mapper& mapper, const RowFootprint& attacker,
                                       const RowFootprint& victim, bool all) {
  const auto& g = mapper.geometry();
  std::map<std::uint64_t, std::vector<std::uint64_t>> victim_rows;
  for (const auto& rt : victim.rows) victim_rows[rt.bank_tuple].push_back(rt.row);

  using Key = std::pair<int, std::uint64_t>;  // (other subarray, distance)
  std::optional<Key> best;
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < attacker.rows.size(); ++i) {
    const auto& rt = attacker.rows[i];
    auto it = victim_rows.find(rt.bank_tuple);
    if (it == victim_rows.end()) continue;
    const auto& rows = it->second;
    std::optional<Key> key;
    auto consider = [&](std::uint64_t r) {
      const Key k{r / g.rows_per_subarray == rt.row / g.rows_per_subarray ? 0 : 1,
                  r > rt.row ? r - rt.row : rt.row - r};
      if (!key || k < *key) key = k;
    };
    auto pos = std::lower_bound(rows.begin(), rows.end(), rt.row);
    if (pos != rows.end()) consider(*pos);
    if (pos != rows.begin()) consider(*std::prev(pos));
    if (!key) continue;
    if (!best || *key < *best) {
      best = key;
      chosen.assign(1, i);
    } else if (*key == *best) {
      chosen.push_back(i);
    }
  }
  if (chosen.empty() && !attacker.rows.empty()) chosen.push_back(0);
  if (!all && chosen.size() > 1) chosen.resize(1);
  std::vector<HammeredRow> out;
  for (auto i : chosen) out.push_back(hammered(mapper, attacker.representative[i]));
  return out;
}

std::vector<HammeredRow> select_aggressors(const Scenario& s, const Mapper& mapper, const MemoryLayout& layout,
                                           std::uint64_t& adjacent) {
  const auto afp = row_footprint(mapper, *layout.find_vm(s.attacker_vm));
  if (afp.rows.empty()) throw ConfigError("attacker vm" + std::to_string(s.attacker_vm) + " owns zero rows");
  const auto vfp = row_footprint(mapper, *layout.find_vm(s.victim_vm));
  auto candidates = find_aggressors(mapper, afp, vfp, s.hammer.blast_radius);
  adjacent = candidates.size();

  std::vector<HammeredRow> out;
  if (s.selection.mode == AggressorSelection::Mode::explicit_rows) {
    const std::set<std::uint64_t> wanted(s.selection.rows.begin(), s.selection.rows.end());
    std::map<RowTuple, std::vector<std::uint64_t>> victims;
    for (const auto& c : candidates) {
      victims[{c.coord.bank_tuple().index(mapper.geometry()), c.coord.row}] = c.victim_rows;
    }
    for (std::size_t i = 0; i < afp.rows.size(); ++i) {
      if (!wanted.count(afp.rows[i].row)) continue;
      auto it = victims.find(afp.rows[i]);
      out.push_back(hammered(mapper, afp.representative[i],
                             it == victims.end() ? std::vector<std::uint64_t>{} : it->second));
    }
    if (out.empty()) throw ConfigError("none of the requested aggressor rows belong to the attacker");
    return out;
  }

  const bool all = s.selection.mode == AggressorSelection::Mode::all;
  if (!candidates.empty()) {
    if (!all) candidates.resize(1);
    for (auto& c : candidates) out.push_back({c.pa, c.coord, std::move(c.victim_rows)});
    return out;
  }
  return boundary_rows(mapper, afp, vfp, all);
}

// Writes the check pattern into every row an aggressor can disturb.
void seed_patterns(DramSim& sim, const std::vector<HammeredRow>& aggressors, std::uint8_t pattern) {
  const auto& g = sim.geometry();
  const auto radius = sim.params().blast_radius;
  std::set<std::pair<std::uint64_t, std::uint64_t>> rows;
  for (const auto& a : aggressors) {
    const auto bt = a.coord.bank_tuple().index(g);
    const auto sub = a.coord.subarray(g);
    for (std::uint64_t d = 1; d <= radius; ++d) {
      if (d <= a.coord.row && (a.coord.row - d) / g.rows_per_subarray == sub) rows.insert({bt, a.coord.row - d});
      if (a.coord.row + d < g.rows && (a.coord.row + d) / g.rows_per_subarray == sub) rows.insert({bt, a.coord.row + d});
    }
  }
  // The inverse map is linear, so a row's PAs are its column-0 PA XOR the
  // images of the column bits; walk them in Gray-code order.
  const auto& mapper = sim.mapper();
  std::vector<PhysAddr> column_bit_pa;
  for (std::uint64_t bit = 1; bit < g.columns; bit <<= 1) {
    DramCoordinate c;
    c.column = bit;
    column_bit_pa.push_back(mapper.to_pa(c));
  }
  for (const auto& [bt_index, row] : rows) {
    const auto bt = BankTuple::from_index(g, bt_index);
    PhysAddr pa = mapper.to_pa({bt.channel, bt.rank, bt.bankgroup, bt.bank, row, 0});
    sim.write_byte(pa, pattern);
    for (std::uint64_t i = 1; i < g.columns; ++i) {
      pa ^= column_bit_pa[static_cast<unsigned>(std::countr_zero(i))];
      sim.write_byte(pa, pattern);
    }
  }
}

ordered_json coord_json(const DramCoordinate& c) {
  ordered_json o = ordered_json::object();
  o["channel"] = c.channel;
  o["rank"] = c.rank;
  o["bankgroup"] = c.bankgroup;
  o["bank"] = c.bank;
  o["row"] = c.row;
  o["column"] = c.column;
  return o;
}

}  // namespace

AttackReport run_attack(const Scenario& scenario) { return execute_attack(scenario).report; }

AttackRun execute_attack(const Scenario& scenario) {
  scenario.check();
  AttackReport report;
  report.scenario = scenario.to_json();
  report.scenario_hash = fnv1a_hex(report.scenario.dump());

  const Mapper mapper(scenario.mapping);
  report.layout = build_layout(scenario, mapper, &report.siloz);
  report.aggressors = select_aggressors(scenario, mapper, report.layout, report.victim_adjacent_aggressors);

  DramSim sim(mapper, scenario.hammer);
  seed_patterns(sim, report.aggressors, scenario.check_pattern);

  // Each aggressor starts in a fresh refresh window.
  const auto count = scenario.effective_hammer_count();
  const auto window = scenario.effective_refresh_every();
  std::uint64_t since_refresh = 0;
  for (const auto& a : report.aggressors) {
    if (since_refresh > 0) {
      sim.refresh();
      since_refresh = 0;
    }
    for (std::uint64_t i = 0; i < count; ++i) {
      if (since_refresh == window) {
        sim.refresh();
        since_refresh = 0;
      }
      sim.activate_row(a.coord);
      ++since_refresh;
    }
  }

  report.verdict = Verdict::mitigated;
  for (const auto& f : sim.flips()) {
    const auto owner = classify_pa(report.layout, f.pa);
    if (owner.is_vm(scenario.victim_vm)) report.verdict = Verdict::not_mitigated;
    ++report.histogram[owner.to_string()];
    report.flips.push_back({f, owner});
  }
  report.stats = sim.stats();
  return {std::move(report), std::move(sim)};
}

ordered_json AttackReport::to_json() const {
  ordered_json out = ordered_json::object();
  out["tool_version"] = kToolVersion;
  out["scenario_hash"] = scenario_hash;
  out["scenario"] = scenario;
  if (error) {
    out["error"] = ordered_json{{"kind", error_kind.value_or("error")}, {"message", *error}};
    return out;
  }
  out["layout"] = layout.to_json()["regions"];
  if (!siloz.empty()) {
    ordered_json arr = ordered_json::array();
    for (const auto& a : siloz) {
      arr.push_back(ordered_json{{"vm", a.vm}, {"subarray_groups", a.subarray_groups}, {"contained", a.contained}});
    }
    out["siloz"] = std::move(arr);
  }
  out["victim_adjacent_aggressors"] = victim_adjacent_aggressors;
  ordered_json aggs = ordered_json::array();
  for (const auto& a : aggressors) {
    ordered_json o = ordered_json::object();
    o["pa"] = hex(a.pa);
    o["coord"] = coord_json(a.coord);
    o["victim_rows"] = a.victim_rows;
    aggs.push_back(std::move(o));
  }
  out["aggressors"] = std::move(aggs);
  ordered_json flips_json = ordered_json::array();
  for (const auto& f : flips) {
    auto o = rhsim::to_json(f.flip);
    o["owner"] = f.owner.to_string();
    flips_json.push_back(std::move(o));
  }
  out["flips"] = std::move(flips_json);
  ordered_json hist = ordered_json::object();
  for (const auto& [k, v] : histogram) hist[k] = v;
  out["flip_histogram"] = std::move(hist);
  out["verdict"] = std::string(to_string(verdict));
  out["stats"] = rhsim::to_json(stats);
  return out;
}

std::vector<AttackReport> run_matrix(const std::vector<Scenario>& scenarios, unsigned threads) {
  std::vector<AttackReport> reports(scenarios.size());
  auto run_one = [&](std::size_t i) {
    try {
      reports[i] = run_attack(scenarios[i]);
    } catch (const std::exception& e) {
      AttackReport r;
      try {
        r.scenario = scenarios[i].to_json();
      } catch (const std::exception&) {
        r.scenario = ordered_json::object();
      }
      r.scenario_hash = fnv1a_hex(r.scenario.dump());
      r.error = e.what();
      const auto* err = dynamic_cast<const Error*>(&e);
      r.error_kind = err ? err->kind() : "error";
      reports[i] = std::move(r);
    }
  };

  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, scenarios.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) run_one(i);
    return reports;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (auto i = next++; i < scenarios.size(); i = next++) run_one(i);
    });
  }
  for (auto& th : pool) th.join();
  return reports;
}

std::vector<Scenario> default_matrix(const HammerParams& hammer, const Geometry& geometry) {
  std::vector<Scenario> out;
  const auto mappings = builtin_mappings(geometry);
  for (auto mitigation : {Mitigation::none, Mitigation::siloz, Mitigation::citadel}) {
    for (const auto& m : mappings) {
      Scenario s;
      s.name = std::string(to_string(mitigation)) + "/" + m.name;
      s.mapping_ref = m.name;
      s.mapping = m;
      s.hammer = hammer;
      s.mitigation = mitigation;
      s.guard_global_rows = 1;
      const std::uint64_t size = mitigation == Mitigation::citadel ? 256ULL << 20 : 8ULL << 20;
      s.vm_sizes = {size, size};
      s.attacker_vm = 1;
      s.victim_vm = 0;
      out.push_back(std::move(s));
    }
  }
  return out;
}

namespace {

struct GridCell {
  std::string mitigation;
  std::string mapping;
  std::string mark;
};

std::vector<GridCell> grid_cells(const std::vector<AttackReport>& reports) {
  std::vector<GridCell> cells;
  for (const auto& r : reports) {
    GridCell c;
    c.mitigation = r.scenario.value("mitigation", std::string("?"));
    if (r.scenario.contains("mapping") && r.scenario["mapping"].contains("name")) {
      c.mapping = r.scenario["mapping"]["name"].get<std::string>();
    } else {
      c.mapping = r.scenario.value("mapping_ref", std::string("?"));
    }
    c.mark = r.error ? "!" : (r.verdict == Verdict::mitigated ? "✓" : "✗");
    cells.push_back(std::move(c));
  }
  return cells;
}

template <class T>
void push_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

std::string summary_table(const std::vector<AttackReport>& reports) {
  const auto cells = grid_cells(reports);
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  for (const auto& c : cells) {
    push_unique(rows, c.mitigation);
    push_unique(cols, c.mapping);
  }
  std::size_t w0 = std::string("mitigation").size();
  for (const auto& r : rows) w0 = std::max(w0, r.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::string out = pad("mitigation", w0);
  for (const auto& c : cols) out += " | " + c;
  out += "\n";
  for (const auto& r : rows) {
    std::string line = pad(r, w0);
    for (const auto& c : cols) {
      std::string mark = "-";
      for (const auto& cell : cells) {
        if (cell.mitigation == r && cell.mapping == c) mark = cell.mark;
      }
      // Marks are one column wide; center them under the mapping name.
      const auto left = (c.size() - 1) / 2;
      line += " | " + std::string(left, ' ') + mark + std::string(c.size() - 1 - left, ' ');
    }
    out += line + "\n";
  }
  return out;
}

ordered_json summary_json(const std::vector<AttackReport>& reports) {
  ordered_json grid = ordered_json::object();
  std::uint64_t mitigated = 0;
  std::uint64_t not_mitigated = 0;
  std::uint64_t errors = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const auto cells = grid_cells({r});
    const auto verdict = r.error ? std::string("ERROR") : std::string(to_string(r.verdict));
    if (r.error) {
      ++errors;
    } else if (r.verdict == Verdict::mitigated) {
      ++mitigated;
    } else {
      ++not_mitigated;
    }
    if (!grid.contains(cells[0].mitigation)) grid[cells[0].mitigation] = ordered_json::object();
    grid[cells[0].mitigation][cells[0].mapping] = verdict;
  }
  return ordered_json{{"mitigated", mitigated}, {"not_mitigated", not_mitigated}, {"errors", errors}, {"grid", grid}};
}

}  // namespace rhsim
