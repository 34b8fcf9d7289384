#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "helpers.hpp"
#include "mcspace/mcspace.hpp"

using namespace mcspace;

namespace {

std::vector<std::uint8_t> symbols(std::uint64_t index, std::uint64_t q, std::size_t volume) {
  std::vector<std::uint8_t> w;
  decode_configuration(index, q, volume, w);
  return w;
}

}  // namespace

TEST_CASE("rational parsing and formatting") {
  REQUIRE(parse_rational("3/4") == Rational(3, 4));
  REQUIRE(parse_rational("-2") == Rational(-2));
  REQUIRE(parse_rational("0.25") == Rational(1, 4));
  REQUIRE(parse_rational("-1.5") == Rational(-3, 2));
  REQUIRE(parse_rational("2/4") == Rational(1, 2));  // normalized

  REQUIRE(format_rational(Rational(1, 2)) == "1/2");
  REQUIRE(format_rational(Rational(-3)) == "-3");
  REQUIRE(format_rational(Rational(1, -2)) == "-1/2");

  REQUIRE_THROWS_AS(parse_rational(""), Error);
  REQUIRE_THROWS_AS(parse_rational("abc"), Error);
  REQUIRE_THROWS_AS(parse_rational("1/0"), Error);
  REQUIRE_THROWS_AS(parse_rational("1."), Error);
  REQUIRE_THROWS_AS(parse_rational("1e5"), Error);
}

TEST_CASE("configuration counting detects overflow") {
  REQUIRE(configuration_count(2, 4) == 16);
  REQUIRE(configuration_count(3, 12) == 531441);
  REQUIRE(configuration_count(2, 63) == (std::uint64_t{1} << 63));
  REQUIRE(configuration_count(2, 64) == 0);  // 0 marks overflow, never a real count
  REQUIRE(configuration_count(3, 41) == 0);
}

TEST_CASE("ring geometry") {
  const auto g = build_geometry(1, {4});
  REQUIRE(g.volume == 4);
  REQUIRE(g.bonds.size() == 4);
  REQUIRE((g.neighbors[0] == std::vector<Site>{1, 3}));
  REQUIRE((g.neighbors[3] == std::vector<Site>{0, 2}));

  // One bond per site in the positive direction.
  REQUIRE(g.bonds[0].first == 0);
  REQUIRE(g.bonds[0].second == 1);
  REQUIRE(g.bonds[3].first == 3);
  REQUIRE(g.bonds[3].second == 0);
}

TEST_CASE("length-2 axes keep doubled neighbors") {
  const auto g = build_geometry(1, {2});
  REQUIRE(g.volume == 2);
  // Forward and backward wrap to the same site; multiplicity is retained.
  REQUIRE((g.neighbors[0] == std::vector<Site>{1, 1}));
  REQUIRE(g.bonds.size() == 2);

  const auto torus = build_geometry(2, {2, 2});
  REQUIRE(torus.volume == 4);
  REQUIRE(torus.bonds.size() == 8);  // V*d pairs, doubled across short axes
  REQUIRE((torus.neighbors[0] == std::vector<Site>{2, 2, 1, 1}));
}

TEST_CASE("coordinates round-trip with periodic wrap") {
  const auto g = build_geometry(2, {3, 4});
  REQUIRE(g.volume == 12);
  REQUIRE((g.site_coords(7) == std::vector<int>{1, 3}));
  const std::vector<int> c{1, 3};
  REQUIRE(g.site_index(c) == 7);
  for (Site s = 0; s < g.volume; ++s) {
    const auto coords = g.site_coords(s);
    REQUIRE(g.site_index(coords) == s);
  }
  const std::vector<int> wrapped{-1, 4};  // (-1, 4) == (2, 0)
  REQUIRE(g.site_index(wrapped) == 8);
}

TEST_CASE("geometry rejects bad shapes") {
  REQUIRE_THROWS_AS(build_geometry(0, {}), Error);
  REQUIRE_THROWS_AS(build_geometry(1, {4, 4}), Error);
  REQUIRE_THROWS_AS(build_geometry(1, {1}), Error);
  REQUIRE_THROWS_AS(build_geometry(2, {1 << 14, 1 << 14}), Error);  // over the cap
}

TEST_CASE("decoding is lexicographic with site 0 most significant") {
  REQUIRE((symbols(5, 2, 4) == std::vector<std::uint8_t>{0, 1, 0, 1}));
  REQUIRE((symbols(0, 2, 4) == std::vector<std::uint8_t>{0, 0, 0, 0}));
  REQUIRE((symbols(15, 2, 4) == std::vector<std::uint8_t>{1, 1, 1, 1}));
  REQUIRE((symbols(21, 3, 3) == std::vector<std::uint8_t>{2, 1, 0}));
}

TEST_CASE("configurations validate their symbols") {
  REQUIRE_NOTHROW(Configuration({0, 1, 1, 0}, 2));
  REQUIRE_THROWS_AS(Configuration({0, 2, 0, 0}, 2), Error);
}

TEST_CASE("ring energies match hand-computed values") {
  const auto m = testsupport::ring_ising(4);
  REQUIRE(m.spin_scale == 1);
  REQUIRE(m.energy_scale == 1);

  auto w = symbols(15, 2, 4);  // all spins up
  REQUIRE(m.energy(ConfigView(w)) == Rational(-4));
  REQUIRE(m.conserved_number(ConfigView(w)) == Rational(4));

  w = symbols(5, 2, 4);  // alternating, maximally frustrated
  REQUIRE(m.energy(ConfigView(w)) == Rational(4));
  REQUIRE(m.conserved_number(ConfigView(w)) == Rational(0));

  w = symbols(7, 2, 4);  // one spin down
  REQUIRE(m.energy(ConfigView(w)) == Rational(0));
  REQUIRE(m.conserved_number(ConfigView(w)) == Rational(2));
}

TEST_CASE("rational couplings scale exactly") {
  // L=3 ring, J=1/2, h=1/3, all spins up: H = -3/2 - 1 = -5/2.
  const auto m = testsupport::ring_ising(3, Rational(1, 2), Rational(1, 3));
  REQUIRE(m.energy_scale == 6);
  const std::vector<std::uint8_t> up{1, 1, 1};
  REQUIRE(m.energy(ConfigView(up)) == Rational(-5, 2));
  REQUIRE(m.conserved_number(ConfigView(up)) == Rational(3));
}

TEST_CASE("fractional spins scale exactly") {
  auto geom = build_geometry(1, {4});
  const auto m = make_model(std::move(geom), 2, {Rational(-1, 2), Rational(1, 2)}, Rational(1),
                            Rational(0));
  REQUIRE(m.spin_scale == 2);
  const std::vector<std::uint8_t> up{1, 1, 1, 1};
  REQUIRE(m.energy(ConfigView(up)) == Rational(-1));  // 4 bonds at -1/4 each
  REQUIRE(m.conserved_number(ConfigView(up)) == Rational(2));
}

TEST_CASE("three-symbol alphabets") {
  auto geom = build_geometry(1, {3});
  const auto m = make_model(std::move(geom), 3, {Rational(-1), Rational(0), Rational(1)},
                            Rational(1), Rational(0));
  const auto w = symbols(21, 3, 3);  // spins (1, 0, -1)
  REQUIRE(m.energy(ConfigView(w)) == Rational(1));
  REQUIRE(m.conserved_number(ConfigView(w)) == Rational(0));
}

TEST_CASE("decoupled sites drop their bonds") {
  const auto m = testsupport::ring_ising(5, Rational(1), Rational(0), {0});
  REQUIRE(m.active_bonds.size() == 3);
  REQUIRE(m.active_neighbors[0].empty());
  const std::vector<std::uint8_t> up{1, 1, 1, 1, 1};
  REQUIRE(m.energy(ConfigView(up)) == Rational(-3));
  REQUIRE_THROWS_AS(testsupport::ring_ising(5, Rational(1), Rational(0), {9}), Error);
}

TEST_CASE("model construction rejects bad inputs") {
  auto geom = build_geometry(1, {4});
  REQUIRE_THROWS_AS(make_model(geom, 1, {Rational(0)}, Rational(1), Rational(0)), Error);
  REQUIRE_THROWS_AS(make_model(geom, 2, {Rational(-1)}, Rational(1), Rational(0)), Error);
}

TEST_CASE("scanner agrees with direct evaluation on every configuration") {
  const auto m = testsupport::ring_ising(4, Rational(1, 2), Rational(1, 3));
  ConfigurationScanner scan(m);
  for (std::uint64_t i = 0; i < 16; ++i) {
    REQUIRE(scan.index() == i);
    const auto w = symbols(i, 2, 4);
    REQUIRE((std::vector<std::uint8_t>(scan.view().begin(), scan.view().end()) == w));
    REQUIRE(scan.energy_scaled() == m.energy_scaled(ConfigView(w)));
    REQUIRE(scan.number_scaled() == m.number_scaled(ConfigView(w)));

    ConfigurationScanner fresh(m, i);
    REQUIRE(fresh.energy_scaled() == scan.energy_scaled());
    REQUIRE(fresh.number_scaled() == scan.number_scaled());

    if (i + 1 < 16) REQUIRE(scan.advance());
  }
  REQUIRE_FALSE(scan.advance());
}

TEST_CASE("spin flip negates number and preserves h=0 energy") {
  const auto m = testsupport::ring_ising(4);
  for (std::uint64_t i = 0; i < 16; ++i) {
    const auto w = symbols(i, 2, 4);
    auto flipped = w;
    for (auto& s : flipped) s = static_cast<std::uint8_t>(1 - s);
    REQUIRE(m.energy_scaled(ConfigView(w)) == m.energy_scaled(ConfigView(flipped)));
    REQUIRE(m.number_scaled(ConfigView(w)) == -m.number_scaled(ConfigView(flipped)));
  }
}

TEST_CASE("energy is translation invariant on the ring") {
  const auto m = testsupport::ring_ising(4, Rational(1, 2), Rational(1, 3));
  std::vector<std::uint8_t> shifted(4);
  for (std::uint64_t i = 0; i < 16; ++i) {
    const auto w = symbols(i, 2, 4);
    for (std::size_t s = 0; s < 4; ++s) shifted[(s + 1) % 4] = w[s];
    REQUIRE(m.energy_scaled(ConfigView(w)) == m.energy_scaled(ConfigView(shifted)));
    REQUIRE(m.number_scaled(ConfigView(w)) == m.number_scaled(ConfigView(shifted)));
  }
}

TEST_CASE("enumeration visits each configuration once in canonical order") {
  const auto m = testsupport::ring_ising(4);
  std::uint64_t visits = 0;
  std::vector<std::uint8_t> first, last;
  enumerate_configurations(m, [&](ConfigView w) {
    if (visits == 0) first.assign(w.begin(), w.end());
    last.assign(w.begin(), w.end());
    ++visits;
  });
  REQUIRE(visits == 16);
  REQUIRE((first == std::vector<std::uint8_t>{0, 0, 0, 0}));
  REQUIRE((last == std::vector<std::uint8_t>{1, 1, 1, 1}));

  REQUIRE_THROWS_AS(checked_configuration_total(testsupport::ring_ising(5), 16), Error);
}
