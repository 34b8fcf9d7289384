#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcspace/rational.hpp"

namespace mcspace {

using Site = std::uint32_t;

/// A read-only view of one lattice configuration (one symbol per site).
using ConfigView = std::span<const std::uint8_t>;

/// Largest number of configurations exact enumeration will attempt by default.
inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 26;

/// q^V with overflow detection; returns 0 on overflow (0 is never a valid count).
inline std::uint64_t configuration_count(std::uint64_t q, std::uint64_t volume) {
  std::uint64_t n = 1;
  for (std::uint64_t i = 0; i < volume; ++i) {
    if (n > UINT64_MAX / q) return 0;
    n *= q;
  }
  return n;
}

/// Finite periodic truncation of the lattice: a d-dimensional torus.
///
/// Sites are indexed row-major: index = ((c0*L1 + c1)*L2 + c2)... Each site
/// has exactly 2d neighbors, kept with multiplicity (an axis of length 2
/// contributes the same neighbor twice). Bonds are the V*d positive-direction
/// pairs, so each unordered pair is counted once per lattice direction.
struct LatticeGeometry {
  int dimension = 0;
  std::vector<int> lengths;
  std::size_t volume = 0;
  std::vector<std::vector<Site>> neighbors;      // 2d entries per site
  std::vector<std::pair<Site, Site>> bonds;      // V*d entries

  std::vector<int> site_coords(Site s) const {
    std::vector<int> c(static_cast<std::size_t>(dimension));
    auto rest = static_cast<std::size_t>(s);
    for (int d = dimension - 1; d >= 0; --d) {
      c[static_cast<std::size_t>(d)] = static_cast<int>(rest % lengths[static_cast<std::size_t>(d)]);
      rest /= static_cast<std::size_t>(lengths[static_cast<std::size_t>(d)]);
    }
    return c;
  }

  Site site_index(std::span<const int> coords) const {
    std::size_t idx = 0;
    for (int d = 0; d < dimension; ++d) {
      const int len = lengths[static_cast<std::size_t>(d)];
      int c = coords[static_cast<std::size_t>(d)] % len;
      if (c < 0) c += len;
      idx = idx * static_cast<std::size_t>(len) + static_cast<std::size_t>(c);
    }
    return static_cast<Site>(idx);
  }
};

/// Builds the periodic geometry. Rejects dimensions < 1, lengths < 2, and
/// volumes beyond `max_volume` (exact-enumeration substrate only).
inline LatticeGeometry build_geometry(int dimension, const std::vector<int>& lengths,
                                      std::uint64_t max_volume = kDefaultEnumerationCap) {
  if (dimension < 1) throw Error("lattice dimension must be >= 1");
  if (lengths.size() != static_cast<std::size_t>(dimension))
    throw Error("expected " + std::to_string(dimension) + " lengths, got " +
                std::to_string(lengths.size()));
  std::uint64_t v = 1;
  for (int len : lengths) {
    if (len < 2) throw Error("each lattice length must be >= 2");
    v *= static_cast<std::uint64_t>(len);
    if (v > max_volume)
      throw Error("lattice volume exceeds enumeration cap " + std::to_string(max_volume));
  }

  LatticeGeometry g;
  g.dimension = dimension;
  g.lengths = lengths;
  g.volume = static_cast<std::size_t>(v);
  g.neighbors.resize(g.volume);
  g.bonds.reserve(g.volume * static_cast<std::size_t>(dimension));

  std::vector<int> coords;
  for (Site s = 0; s < g.volume; ++s) {
    coords = g.site_coords(s);
    for (int d = 0; d < dimension; ++d) {
      auto shifted = coords;
      shifted[static_cast<std::size_t>(d)] += 1;
      const Site fwd = g.site_index(shifted);
      shifted[static_cast<std::size_t>(d)] -= 2;
      const Site bwd = g.site_index(shifted);
      g.neighbors[s].push_back(fwd);
      g.neighbors[s].push_back(bwd);
      g.bonds.emplace_back(s, fwd);
    }
  }
  return g;
}

/// An immutable lattice microstate: one symbol in [0, q) per site.
class Configuration {
 public:
  Configuration(std::vector<std::uint8_t> symbols, int alphabet)
      : symbols_(std::move(symbols)) {
    for (std::uint8_t s : symbols_) {
      if (s >= alphabet)
        throw Error("configuration symbol " + std::to_string(int(s)) +
                    " outside alphabet [0," + std::to_string(alphabet) + ")");
    }
  }

  std::size_t size() const { return symbols_.size(); }
  std::uint8_t operator[](std::size_t i) const { return symbols_[i]; }
  const std::vector<std::uint8_t>& symbols() const { return symbols_; }
  ConfigView view() const { return symbols_; }

  bool operator==(const Configuration& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::uint8_t> symbols_;
};

/// Decodes the canonical (lexicographic) configuration index into symbols.
/// Site 0 is the most significant digit.
inline void decode_configuration(std::uint64_t index, std::uint64_t q, std::size_t volume,
                                 std::vector<std::uint8_t>& out) {
  out.assign(volume, 0);
  for (std::size_t i = volume; i-- > 0;) {
    out[i] = static_cast<std::uint8_t>(index % q);
    index /= q;
  }
}

}  // namespace mcspace
