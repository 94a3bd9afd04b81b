#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rhsim/dram_model.hpp"

namespace rhsim {

struct TraceEntry {
  AccessKind kind = AccessKind::read;
  PhysAddr pa = 0;
  std::optional<std::uint8_t> data;
  /// Source line, 0 when synthesized.
  std::size_t line = 0;

  friend bool operator==(const TraceEntry& a, const TraceEntry& b) {
    return a.kind == b.kind && a.pa == b.pa && a.data == b.data;
  }
};

using AccessTrace = std::vector<TraceEntry>;

/// One access per line: `R <hex-pa>` or `W <hex-pa> <hex-byte>`. Blank lines
/// and `#` comments are skipped. Throws ParseError naming the line.
[[nodiscard]] AccessTrace parse_trace(std::string_view text);
[[nodiscard]] std::string format_trace(const AccessTrace& trace);

struct ReplayResult {
  Stats stats;
  std::vector<BitflipRecord> flips;
};

/// Feeds every entry through DramSim::access. When refresh_every is set, a
/// refresh window closes after every refresh_every activations. Throws
/// RangeError naming the offending line for out-of-range PAs.
[[nodiscard]] ReplayResult replay_trace(const AccessTrace& trace, const Mapper& mapper, const HammerParams& params,
                                        std::optional<std::uint64_t> refresh_every = std::nullopt);

/// Synthetic trace generators. All throw RangeError if the touched range
/// leaves the address space of `g`.
namespace synth {

/// Reads base, base+step, ... covering `bytes` bytes.
[[nodiscard]] AccessTrace sequential(const Geometry& g, PhysAddr base, std::uint64_t bytes, std::uint64_t step = 64);
/// `count` reads at base + i*stride.
[[nodiscard]] AccessTrace strided(const Geometry& g, PhysAddr base, std::uint64_t stride, std::uint64_t count);
/// Row-major y = A x: for each matrix row i and column j, read A[i][j] then
/// x[j]. A starts at base, x follows A; elements are elem_size bytes.
[[nodiscard]] AccessTrace matvec(const Geometry& g, std::uint64_t rows, std::uint64_t cols, PhysAddr base,
                                 std::uint64_t elem_size = 8);
/// `count` reads alternating a, b, a, b, ...
[[nodiscard]] AccessTrace pingpong(const Geometry& g, PhysAddr a, PhysAddr b, std::uint64_t count);

}  // namespace synth

}  // namespace rhsim
