#include "rhsim/trace.hpp"

#include <sstream>

#include "rhsim/error.hpp"

namespace rhsim {

AccessTrace parse_trace(std::string_view text) {
  AccessTrace trace;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);

    std::istringstream is(line);
    std::string op;
    if (!(is >> op)) continue;
    TraceEntry e;
    e.line = line_no;
    std::string addr;
    std::string byte;
    std::string extra;
    if (op == "R" || op == "r") {
      e.kind = AccessKind::read;
      if (!(is >> addr)) throw ParseError("read without an address", line_no);
    } else if (op == "W" || op == "w") {
      e.kind = AccessKind::write;
      if (!(is >> addr >> byte)) throw ParseError("write needs an address and a data byte", line_no);
    } else {
      throw ParseError("unknown access kind '" + op + "' (expected R or W)", line_no);
    }
    if (is >> extra) throw ParseError("trailing field '" + extra + "'", line_no);
    try {
      e.pa = parse_u64(addr);
      if (e.kind == AccessKind::write) {
        const auto v = parse_u64(byte);
        if (v > 0xff) throw ParseError("data byte " + byte + " exceeds 0xff");
        e.data = static_cast<std::uint8_t>(v);
      }
    } catch (const ParseError& err) {
      throw ParseError(err.what(), line_no);
    }
    trace.push_back(e);
  }
  return trace;
}

std::string format_trace(const AccessTrace& trace) {
  std::string out;
  for (const auto& e : trace) {
    if (e.kind == AccessKind::read) {
      out += "R " + hex(e.pa) + "\n";
    } else {
      out += "W " + hex(e.pa) + " " + hex(*e.data) + "\n";
    }
  }
  return out;
}

ReplayResult replay_trace(const AccessTrace& trace, const Mapper& mapper, const HammerParams& params,
                          std::optional<std::uint64_t> refresh_every) {
  if (refresh_every && *refresh_every == 0) throw ConfigError("refresh_every must be >= 1");
  const auto total = mapper.geometry().total_bytes();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].pa >= total) {
      const auto where = trace[i].line ? "line " + std::to_string(trace[i].line) : "entry " + std::to_string(i);
      throw RangeError(where + ": physical address " + hex(trace[i].pa) + " outside address space");
    }
  }
  DramSim sim(mapper, params);
  std::uint64_t window_acts = 0;
  for (const auto& e : trace) {
    const auto before = sim.stats().activations;
    (void)sim.access(e.pa, e.kind, e.data);
    if (refresh_every && sim.stats().activations != before && ++window_acts == *refresh_every) {
      sim.refresh();
      window_acts = 0;
    }
  }
  return {sim.stats(), sim.flips()};
}

namespace synth {

namespace {

void check_range(const Geometry& g, PhysAddr base, std::uint64_t bytes) {
  const auto total = g.total_bytes();
  if (base > total || bytes > total - base) {
    throw RangeError("synthesized trace range " + hex(base) + "+" + hex(bytes) + " overflows " + hex(total) +
                     "-byte address space");
  }
}

TraceEntry read_at(PhysAddr pa) { return {AccessKind::read, pa, std::nullopt, 0}; }

}  // namespace

AccessTrace sequential(const Geometry& g, PhysAddr base, std::uint64_t bytes, std::uint64_t step) {
  if (step == 0) throw ConfigError("sequential step must be >= 1");
  check_range(g, base, bytes);
  AccessTrace t;
  for (std::uint64_t off = 0; off < bytes; off += step) t.push_back(read_at(base + off));
  return t;
}

AccessTrace strided(const Geometry& g, PhysAddr base, std::uint64_t stride, std::uint64_t count) {
  if (count == 0) return {};
  if (stride != 0 && count - 1 > (~0ULL) / stride) throw RangeError("strided trace overflows 64 bits");
  check_range(g, base, (count - 1) * stride + 1);
  AccessTrace t;
  for (std::uint64_t i = 0; i < count; ++i) t.push_back(read_at(base + i * stride));
  return t;
}

AccessTrace matvec(const Geometry& g, std::uint64_t rows, std::uint64_t cols, PhysAddr base,
                   std::uint64_t elem_size) {
  if (elem_size == 0) throw ConfigError("matvec element size must be >= 1");
  const auto matrix_bytes = rows * cols * elem_size;
  check_range(g, base, matrix_bytes + cols * elem_size);
  const PhysAddr vec = base + matrix_bytes;
  AccessTrace t;
  t.reserve(2 * rows * cols);
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) {
      t.push_back(read_at(base + (i * cols + j) * elem_size));
      t.push_back(read_at(vec + j * elem_size));
    }
  }
  return t;
}

AccessTrace pingpong(const Geometry& g, PhysAddr a, PhysAddr b, std::uint64_t count) {
  check_range(g, a, 1);
  check_range(g, b, 1);
  AccessTrace t;
  for (std::uint64_t i = 0; i < count; ++i) t.push_back(read_at(i % 2 == 0 ? a : b));
  return t;
}

}  // namespace synth

}  // namespace rhsim
