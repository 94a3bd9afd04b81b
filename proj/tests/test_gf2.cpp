#include <doctest.h>

#include <random>

#include "rhsim/gf2.hpp"

using rhsim::gf2::BitMatrix;

TEST_CASE("identity is its own inverse") {
  const auto id = BitMatrix::identity(17);
  auto e = rhsim::gf2::eliminate(id);
  CHECK(e.rank == 17);
  REQUIRE(e.inverse);
  CHECK(*e.inverse == id);
  CHECK(e.dependency.empty());
}

TEST_CASE("singular matrix reports rank and a zero-sum dependency") {
  BitMatrix m(4, 4);
  m.set_row(0, 0b0011);
  m.set_row(1, 0b0110);
  m.set_row(2, 0b0101);  // row0 ^ row1
  m.set_row(3, 0b1000);
  auto e = rhsim::gf2::eliminate(m);
  CHECK(e.rank == 3);
  CHECK_FALSE(e.inverse);
  CHECK(e.dependency == std::vector<unsigned>{0, 1, 2});
}

TEST_CASE("zero row is its own dependency") {
  BitMatrix m(3, 3);
  m.set_row(0, 1);
  m.set_row(1, 0);
  m.set_row(2, 4);
  auto e = rhsim::gf2::eliminate(m);
  CHECK(e.rank == 2);
  CHECK(e.dependency == std::vector<unsigned>{1});
}

TEST_CASE("random matrices: inverse times matrix is identity, dependencies sum to zero") {
  std::mt19937_64 rng(7);
  int singular = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const unsigned n = 1 + static_cast<unsigned>(rng() % 40);
    BitMatrix m(n, n);
    for (unsigned i = 0; i < n; ++i) m.set_row(i, rng());
    auto e = rhsim::gf2::eliminate(m);
    if (e.inverse) {
      CHECK(e.rank == n);
      CHECK((*e.inverse * m).is_identity());
      CHECK((m * *e.inverse).is_identity());
      for (int k = 0; k < 20; ++k) {
        const auto v = rng() & ((n == 64 ? 0 : (1ULL << n)) - 1);
        CHECK(e.inverse->apply(m.apply(v)) == v);
      }
    } else {
      ++singular;
      CHECK(e.rank < n);
      REQUIRE_FALSE(e.dependency.empty());
      std::uint64_t acc = 0;
      for (unsigned idx : e.dependency) acc ^= m.row(idx);
      CHECK(acc == 0);
    }
  }
  CHECK(singular > 0);
}

TEST_CASE("row space basis spans the input") {
  const std::vector<std::uint64_t> v = {0b1100, 0b0110, 0b1010, 0b0001};
  const auto basis = rhsim::gf2::row_space_basis(v);
  CHECK(basis.size() == 3);
  // Reduced form: distinct leading bits.
  std::uint64_t leads = 0;
  for (auto b : basis) leads |= 1ULL << (63 - std::countl_zero(b));
  CHECK(std::popcount(leads) == 3);
}
