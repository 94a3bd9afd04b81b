#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rhsim/addrmap.hpp"
#include "rhsim/allocator.hpp"
#include "rhsim/error.hpp"
#include "rhsim/harness.hpp"
#include "rhsim/trace.hpp"

namespace rhsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::optional<std::uint64_t> hc_first;
  std::optional<std::uint64_t> hammer_count;
  std::optional<double> flip_probability;
  std::string output;
};

// Negative domain results that are not exceptions still need a status.
struct Outcome {
  std::string text;
  int status = kOk;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

AddressMapping load_mapping(const std::string& ref) { return resolve_mapping(ref, fs::current_path()); }

std::vector<std::uint64_t> parse_sizes(const std::string& list) {
  std::vector<std::uint64_t> sizes;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) sizes.push_back(parse_u64(item));
  if (sizes.empty()) throw ConfigError("--sizes needs at least one size");
  return sizes;
}

void apply_overrides(const Globals& g, HammerParams& h) {
  if (g.seed) h.rng_seed = *g.seed;
  if (g.deterministic) h.deterministic = true;
  if (g.hc_first) h.hc_first = *g.hc_first;
  if (g.flip_probability) h.flip_probability = *g.flip_probability;
}

void apply_overrides(const Globals& g, Scenario& s) {
  apply_overrides(g, s.hammer);
  if (g.hammer_count) s.hammer_count = *g.hammer_count;
}

ordered_json coord_json(const Mapper& m, const DramCoordinate& c) {
  ordered_json o = ordered_json::object();
  o["channel"] = c.channel;
  o["rank"] = c.rank;
  o["bankgroup"] = c.bankgroup;
  o["bank"] = c.bank;
  o["row"] = c.row;
  o["column"] = hex(c.column);
  o["subarray"] = c.subarray(m.geometry());
  return o;
}

// "ch=0,rank=0,bg=0,bank=1,row=0,col=0" or six comma-separated values in
// channel, rank, bankgroup, bank, row, column order.
DramCoordinate parse_coord(const std::string& text) {
  DramCoordinate c;
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  const bool named = text.find('=') != std::string::npos;
  if (!named) {
    if (parts.size() != 6) throw ConfigError("coordinate needs six values: channel,rank,bankgroup,bank,row,column");
    for (std::size_t i = 0; i < 6; ++i) c.set(kCoordKinds[i], parse_u64(parts[i]));
    return c;
  }
  for (const auto& p : parts) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw ConfigError("coordinate field '" + p + "' lacks '='");
    const auto key = p.substr(0, eq);
    const auto value = parse_u64(p.substr(eq + 1));
    CoordKind kind{};
    if (key == "ch") {
      kind = CoordKind::channel;
    } else if (key == "bg") {
      kind = CoordKind::bankgroup;
    } else if (key == "col") {
      kind = CoordKind::column;
    } else if (!parse_coord_kind(key, kind)) {
      throw ConfigError("unknown coordinate field '" + key + "'");
    }
    c.set(kind, value);
  }
  return c;
}

Outcome cmd_validate_map(const std::string& ref) {
  const auto mapping = load_mapping(ref);
  const auto report = validate(mapping);
  auto j = report.to_json();
  ordered_json out = ordered_json::object();
  out["mapping"] = mapping.name;
  for (auto& [k, v] : j.items()) out[k] = v;
  return {dump(out), report.valid ? kOk : kNegative};
}

Outcome cmd_translate(const std::string& ref, const std::string& input) {
  const Mapper mapper(load_mapping(ref));
  ordered_json out = ordered_json::object();
  out["mapping"] = mapper.name();
  const bool is_coord = input.find(',') != std::string::npos || input.find('=') != std::string::npos;
  if (is_coord) {
    const auto c = parse_coord(input);
    const auto pa = mapper.to_pa(c);
    out["coord"] = coord_json(mapper, c);
    out["pa"] = hex(pa);
  } else {
    const auto pa = parse_u64(input);
    out["pa"] = hex(pa);
    out["coord"] = coord_json(mapper, mapper.to_coord(pa));
  }
  return {dump(out)};
}

Outcome cmd_plan(const std::string& mitigation_name, const std::string& ref, const std::string& sizes_text,
                 std::uint64_t guards) {
  const Mapper mapper(load_mapping(ref));
  const auto sizes = parse_sizes(sizes_text);
  const auto mitigation = parse_mitigation(mitigation_name);
  ordered_json out = ordered_json::object();
  out["mitigation"] = std::string(to_string(mitigation));
  out["mapping"] = mapper.name();
  MemoryLayout layout;
  std::vector<SilozAssignment> siloz;
  switch (mitigation) {
    case Mitigation::none: layout = plan_packed(mapper.geometry(), sizes); break;
    case Mitigation::siloz: {
      auto plan = plan_siloz(mapper, sizes);
      layout = std::move(plan.layout);
      siloz = std::move(plan.assignments);
      break;
    }
    case Mitigation::citadel:
      out["guard_global_rows"] = guards;
      layout = plan_citadel(mapper, sizes, guards);
      break;
  }
  out["regions"] = layout.to_json()["regions"];
  if (!siloz.empty()) {
    ordered_json arr = ordered_json::array();
    for (const auto& a : siloz) {
      arr.push_back(ordered_json{{"vm", a.vm}, {"subarray_groups", a.subarray_groups}, {"contained", a.contained}});
    }
    out["siloz"] = std::move(arr);
  }
  return {dump(out)};
}

Outcome cmd_attack(const Globals& g, const std::string& path, bool expect_mitigated) {
  const fs::path p(path);
  auto scenario = parse_scenario(read_file(p), p.parent_path());
  apply_overrides(g, scenario);
  const auto report = run_attack(scenario);
  const int status = expect_mitigated && report.verdict != Verdict::mitigated ? kNegative : kOk;
  return {dump(report.to_json()), status};
}

std::vector<Scenario> load_scenarios(const std::string& source) {
  std::vector<Scenario> out;
  const fs::path p(source);
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(p)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(parse_scenario(read_file(f), p));
    return out;
  }
  json doc;
  const auto text = read_file(p);
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid matrix JSON: ") + e.what());
  }
  const json* list = &doc;
  if (doc.is_object() && doc.contains("scenarios")) list = &doc["scenarios"];
  if (!list->is_array()) throw ParseError("matrix file: expected an array of scenarios or {\"scenarios\": [...]}");
  for (const auto& s : *list) out.push_back(scenario_from_json(s, p.parent_path()));
  return out;
}

Outcome cmd_matrix(const Globals& g, const std::string& source, bool table, unsigned threads) {
  std::vector<Scenario> scenarios;
  if (source.empty()) {
    HammerParams h;
    h.deterministic = true;
    apply_overrides(g, h);
    scenarios = default_matrix(h);
    if (g.hammer_count) {
      for (auto& s : scenarios) s.hammer_count = *g.hammer_count;
    }
  } else {
    scenarios = load_scenarios(source);
    for (auto& s : scenarios) apply_overrides(g, s);
  }
  const auto reports = run_matrix(scenarios, threads);
  if (table) return {summary_table(reports)};
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) arr.push_back(r.to_json());
  ordered_json out = ordered_json::object();
  out["tool_version"] = kToolVersion;
  out["summary"] = summary_json(reports);
  out["reports"] = std::move(arr);
  return {dump(out)};
}

Outcome cmd_replay(const Globals& g, const std::string& trace_path, const std::string& ref,
                   std::optional<std::uint64_t> refresh_every) {
  const Mapper mapper(load_mapping(ref));
  const auto trace = parse_trace(read_file(trace_path));
  HammerParams h;
  apply_overrides(g, h);
  const auto result = replay_trace(trace, mapper, h, refresh_every);
  ordered_json out = ordered_json::object();
  out["mapping"] = mapper.name();
  out["trace"] = trace_path;
  out["stats"] = to_json(result.stats);
  out["hit_rate"] = result.stats.hit_rate();
  ordered_json flips = ordered_json::array();
  for (const auto& f : result.flips) flips.push_back(to_json(f));
  out["flips"] = std::move(flips);
  return {dump(out)};
}

struct GenTraceArgs {
  std::string kind;
  std::string mapping = "simple";
  std::string base = "0x0";
  std::string bytes = "8KiB";
  std::string step = "64";
  std::string stride = "32KiB";
  std::uint64_t count = 16;
  std::uint64_t rows = 64;
  std::uint64_t cols = 64;
  std::uint64_t elem = 8;
  std::string a = "0x80000000";
  std::string b = "0x80008040";
};

Outcome cmd_gen_trace(const GenTraceArgs& a) {
  const auto geometry = load_mapping(a.mapping).geometry;
  AccessTrace t;
  if (a.kind == "sequential") {
    t = synth::sequential(geometry, parse_u64(a.base), parse_u64(a.bytes), parse_u64(a.step));
  } else if (a.kind == "strided") {
    t = synth::strided(geometry, parse_u64(a.base), parse_u64(a.stride), a.count);
  } else if (a.kind == "matvec") {
    t = synth::matvec(geometry, a.rows, a.cols, parse_u64(a.base), a.elem);
  } else if (a.kind == "pingpong") {
    t = synth::pingpong(geometry, parse_u64(a.a), parse_u64(a.b), a.count);
  } else {
    throw ConfigError("unknown trace kind '" + a.kind + "' (sequential, strided, matvec, pingpong)");
  }
  return {"# rhsim gen-trace " + a.kind + "\n" + format_trace(t)};
}

int status_for(const Error& e) {
  if (e.kind() == "invalid-mapping" || e.kind() == "infeasible") return kNegative;
  return kUsage;
}

void emit_error(std::ostream& out, std::ostream& err, const std::string& kind, const std::string& message) {
  out << ordered_json{{"error", ordered_json{{"kind", kind}, {"message", message}}}}.dump(2) << "\n";
  err << "rhsim: " << message << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rhsim: inter-VM RowHammer mitigation simulator with configurable DRAM address mappings"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "RNG seed for probabilistic flips (overrides scenario files)");
  app.add_flag("--deterministic", g.deterministic,
               "Flip every candidate victim at the threshold-crossing activation");
  app.add_option("--hc-first", g.hc_first, "Activations per refresh window before flips become possible");
  app.add_option("--hammer-count", g.hammer_count, "Activations issued per aggressor row");
  app.add_option("--flip-probability", g.flip_probability, "Per-activation flip probability past the threshold");
  app.add_option("--output,-o", g.output, "Write the result to this file instead of standard output");

  std::string mapping_ref;
  std::string input;
  auto* validate_cmd = app.add_subcommand("validate-map", "Check that a mapping is a bijection (exit 1 if not)");
  validate_cmd->add_option("mapping", mapping_ref, "Preset name or mapping JSON file")->required();

  auto* translate_cmd = app.add_subcommand("translate", "Translate a PA to DRAM coordinates or back");
  translate_cmd->add_option("mapping", mapping_ref, "Preset name or mapping JSON file")->required();
  translate_cmd->add_option("address", input,
                            "Hex PA, or a coordinate as ch,rank,bg,bank,row,col or bank=1,row=0,...")
      ->required();

  std::string mitigation;
  std::string sizes;
  std::uint64_t guards = 1;
  auto* plan_cmd = app.add_subcommand("plan", "Compute a VM memory layout for a mitigation");
  plan_cmd->add_option("mitigation", mitigation, "none, siloz or citadel")->required();
  plan_cmd->add_option("mapping", mapping_ref, "Preset name or mapping JSON file")->required();
  plan_cmd->add_option("--sizes", sizes, "Comma-separated VM sizes, e.g. 16MiB,16MiB")->required();
  plan_cmd->add_option("--guards", guards, "Guard global rows between VMs (citadel)");

  std::string scenario_path;
  bool expect_mitigated = false;
  auto* attack_cmd = app.add_subcommand("attack", "Run one attack scenario and print its report");
  attack_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  attack_cmd->add_flag("--expect-mitigated", expect_mitigated, "Exit 1 unless the verdict is MITIGATED");

  std::string matrix_source;
  bool table = false;
  unsigned threads = 0;
  auto* matrix_cmd = app.add_subcommand(
      "matrix", "Run many scenarios; without input runs the 3 mapping x {none, siloz, citadel} grid");
  matrix_cmd->add_option("source", matrix_source, "Scenario directory or matrix JSON file");
  matrix_cmd->add_flag("--table", table, "Print the mitigation x mapping grid instead of JSON");
  matrix_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::string trace_path;
  std::optional<std::uint64_t> refresh_every;
  auto* replay_cmd = app.add_subcommand("replay-trace", "Replay an access trace and report row-buffer statistics");
  replay_cmd->add_option("trace", trace_path, "Trace file (R <pa> / W <pa> <byte> per line)")->required();
  replay_cmd->add_option("mapping", mapping_ref, "Preset name or mapping JSON file")->required();
  replay_cmd->add_option("--refresh-every", refresh_every, "Close a refresh window every N activations");

  GenTraceArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-trace", "Synthesize an access trace");
  gen_cmd->add_option("kind", gen.kind, "sequential, strided, matvec or pingpong")->required();
  gen_cmd->add_option("--mapping", gen.mapping, "Mapping whose geometry bounds the trace");
  gen_cmd->add_option("--base", gen.base, "Base PA");
  gen_cmd->add_option("--bytes", gen.bytes, "Bytes covered (sequential)");
  gen_cmd->add_option("--step", gen.step, "Byte step (sequential)");
  gen_cmd->add_option("--stride", gen.stride, "Byte stride (strided)");
  gen_cmd->add_option("--count", gen.count, "Number of accesses (strided, pingpong)");
  gen_cmd->add_option("--rows", gen.rows, "Matrix rows (matvec)");
  gen_cmd->add_option("--cols", gen.cols, "Matrix columns (matvec)");
  gen_cmd->add_option("--elem", gen.elem, "Element size in bytes (matvec)");
  gen_cmd->add_option("--a", gen.a, "First PA (pingpong)");
  gen_cmd->add_option("--b", gen.b, "Second PA (pingpong)");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? kOk : kUsage;
  }

  try {
    Outcome result;
    if (*validate_cmd) {
      result = cmd_validate_map(mapping_ref);
    } else if (*translate_cmd) {
      result = cmd_translate(mapping_ref, input);
    } else if (*plan_cmd) {
      result = cmd_plan(mitigation, mapping_ref, sizes, guards);
    } else if (*attack_cmd) {
      result = cmd_attack(g, scenario_path, expect_mitigated);
    } else if (*matrix_cmd) {
      result = cmd_matrix(g, matrix_source, table, threads);
    } else if (*replay_cmd) {
      result = cmd_replay(g, trace_path, mapping_ref, refresh_every);
    } else if (*gen_cmd) {
      result = cmd_gen_trace(gen);
    }
    if (g.output.empty()) {
      out << result.text;
    } else {
      std::ofstream file(g.output, std::ios::binary);
      if (!file) throw ConfigError("cannot write " + g.output);
      file << result.text;
    }
    return result.status;
  } catch (const Error& e) {
    emit_error(out, err, e.kind(), e.what());
    return status_for(e);
  } catch (const std::exception& e) {
    emit_error(out, err, "error", e.what());
    return kUsage;
  }
}

}  // namespace rhsim::cli
