#include "rhsim/dram_model.hpp"

#include <cmath>

#include "rhsim/error.hpp"

namespace rhsim {

using nlohmann::ordered_json;

void HammerParams::check() const {
  if (hc_first < 1) throw ConfigError("hc_first must be >= 1");
  if (!(flip_probability > 0.0 && flip_probability <= 1.0)) {
    throw ConfigError("flip_probability must be in (0, 1]");
  }
  if (blast_radius < 1) throw ConfigError("blast_radius must be >= 1");
}

DramSim::DramSim(Mapper mapper, HammerParams params)
    : mapper_(std::move(mapper)), params_(params), rng_(params.rng_seed) {
  params_.check();
  const auto banks = geometry().bank_tuple_count();
  open_row_.assign(banks, std::nullopt);
  stats_.bank_activations.assign(banks, 0);
}

void DramSim::check_pa(PhysAddr pa) const {
  if (pa >= geometry().total_bytes()) {
    throw RangeError("physical address " + hex(pa) + " outside " + hex(geometry().total_bytes()) +
                     "-byte address space");
  }
}

AccessOutcome DramSim::access(PhysAddr pa, AccessKind kind, std::optional<std::uint8_t> data) {
  check_pa(pa);
  if ((kind == AccessKind::write) != data.has_value()) {
    throw ConfigError("write accesses need a data byte and reads must not carry one");
  }
  const auto coord = mapper_.to_coord(pa);
  const auto bank = coord.bank_tuple().index(geometry());

  AccessOutcome out;
  if (open_row_[bank] == coord.row) {
    out.hit = true;
    ++stats_.accesses;
    ++stats_.row_buffer_hits;
  } else {
    activate(coord, bank);
  }

  if (kind == AccessKind::write) {
    contents_[pa] = *data;
    out.value = *data;
  } else {
    out.value = read_byte(pa);
  }
  return out;
}

void DramSim::activate_row(const DramCoordinate& coord) {
  if (!coord.within(geometry())) throw RangeError("coordinate " + coord.to_string() + " outside geometry");
  activate(coord, coord.bank_tuple().index(geometry()));
}

void DramSim::activate(const DramCoordinate& coord, std::uint64_t bank) {
  ++stats_.accesses;
  if (open_row_[bank]) ++stats_.precharges;
  ++stats_.activations;
  ++stats_.bank_activations[bank];
  open_row_[bank] = coord.row;
  const auto count = ++act_count_[row_key(bank, coord.row)];
  maybe_flip(coord, bank, count);
}

void DramSim::maybe_flip(const DramCoordinate& aggressor, std::uint64_t bank, std::uint64_t count) {
  if (count <= params_.hc_first) return;
  const auto& g = geometry();
  const auto subarray = aggressor.subarray(g);
  for (std::uint64_t d = 1; d <= params_.blast_radius; ++d) {
    for (int side = -1; side <= 1; side += 2) {
      if (side < 0 && d > aggressor.row) continue;
      const std::uint64_t victim = side < 0 ? aggressor.row - d : aggressor.row + d;
      if (victim >= g.rows || victim / g.rows_per_subarray != subarray) continue;
      if (params_.deterministic) {
        if (latched_.insert(row_key(bank, victim)).second) flip_cell(aggressor, bank, victim);
      } else {
        const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        if (u < params_.flip_probability) flip_cell(aggressor, bank, victim);
      }
    }
  }
}

void DramSim::flip_cell(const DramCoordinate& aggressor, std::uint64_t bank, std::uint64_t victim_row) {
  const auto& g = geometry();
  std::uint64_t column = 0;
  unsigned bit = 0;
  if (params_.deterministic) {
    // Walks bit 0..7 of column 0, then column 1, ... one step per window.
    const auto w = stats_.refresh_windows;
    column = (w / 8) % g.columns;
    bit = static_cast<unsigned>(w % 8);
  } else {
    column = rng_() % g.columns;
    bit = static_cast<unsigned>(rng_() % 8);
  }
  const auto bt = BankTuple::from_index(g, bank);
  DramCoordinate victim{bt.channel, bt.rank, bt.bankgroup, bt.bank, victim_row, column};
  BitflipRecord rec;
  rec.coord = victim;
  rec.pa = mapper_.to_pa(victim);
  rec.bit_index = bit;
  rec.aggressor_row = aggressor.row;
  rec.old_value = read_byte(rec.pa);
  rec.new_value = static_cast<std::uint8_t>(rec.old_value ^ (1U << bit));
  contents_[rec.pa] = rec.new_value;
  flips_.push_back(rec);
}

void DramSim::refresh() {
  act_count_.clear();
  latched_.clear();
  ++stats_.refresh_windows;
}

std::uint8_t DramSim::read_byte(PhysAddr pa) const {
  check_pa(pa);
  auto it = contents_.find(pa);
  return it == contents_.end() ? std::uint8_t{0} : it->second;
}

void DramSim::write_byte(PhysAddr pa, std::uint8_t value) {
  check_pa(pa);
  contents_[pa] = value;
}

std::uint64_t DramSim::activation_count(const DramCoordinate& coord) const {
  auto it = act_count_.find(row_key(coord.bank_tuple().index(geometry()), coord.row));
  return it == act_count_.end() ? 0 : it->second;
}

std::optional<std::uint64_t> DramSim::open_row(const BankTuple& bank) const {
  return open_row_.at(bank.index(geometry()));
}

ordered_json to_json(const Stats& s) {
  ordered_json out = ordered_json::object();
  out["accesses"] = s.accesses;
  out["row_buffer_hits"] = s.row_buffer_hits;
  out["activations"] = s.activations;
  out["precharges"] = s.precharges;
  out["refresh_windows"] = s.refresh_windows;
  out["bank_activations"] = s.bank_activations;
  return out;
}

ordered_json to_json(const BitflipRecord& f) {
  ordered_json out = ordered_json::object();
  out["pa"] = hex(f.pa);
  out["channel"] = f.coord.channel;
  out["rank"] = f.coord.rank;
  out["bankgroup"] = f.coord.bankgroup;
  out["bank"] = f.coord.bank;
  out["row"] = f.coord.row;
  out["column"] = f.coord.column;
  out["bit"] = f.bit_index;
  out["aggressor_row"] = f.aggressor_row;
  out["old_value"] = hex(f.old_value);
  out["new_value"] = hex(f.new_value);
  return out;
}

ordered_json to_json(const HammerParams& p) {
  ordered_json out = ordered_json::object();
  out["hc_first"] = p.hc_first;
  out["flip_probability"] = p.flip_probability;
  out["blast_radius"] = p.blast_radius;
  out["deterministic"] = p.deterministic;
  out["seed"] = p.rng_seed;
  return out;
}

}  // namespace rhsim
