#pragma once

#include <vector>

#include "mcspace/mcspace.hpp"

namespace testsupport {

/// 1D Ising ring: q = 2, spins -1/+1.
inline mcspace::ModelSpec ring_ising(int length, mcspace::Rational coupling = mcspace::Rational(1),
                                     mcspace::Rational field = mcspace::Rational(0),
                                     const std::vector<mcspace::Site>& decoupled = {}) {
  auto geom = mcspace::build_geometry(1, {length});
  return mcspace::make_model(std::move(geom), 2,
                             {mcspace::Rational(-1), mcspace::Rational(1)}, coupling, field,
                             decoupled);
}

inline mcspace::Subvolume subvolume(const mcspace::ModelSpec& model, std::string name,
                                    std::vector<mcspace::Site> sites) {
  return mcspace::make_subvolume(std::move(name), model.volume(), sites);
}

}  // namespace testsupport
