#pragma once

// Reference models shipped with the library. Coordinates are (x, y, z)
// with X - Y - Z.

#include "typlab/model.hpp"

namespace typlab::fixtures {

/// Y uniform bit, Z = Y, X = Y.
inline MarkovTriple deterministic_chain() {
  Table<2> side{{{0, 0}, 0.5}, {{1, 1}, 0.5}};
  Kernel kernel({{0, Pmf::point_mass(0)}, {1, Pmf::point_mass(1)}});
  return MarkovTriple(JointPmf2(side), kernel);
}

/// Binary symmetric channel from `input` with crossover `flip`, as a kernel.
inline Kernel bsc_kernel(double flip) {
  return Kernel({{0, Pmf::bernoulli(flip)}, {1, Pmf::bernoulli(1.0 - flip)}});
}

/// Y ~ Bern(0.5), Z = BSC(0.1)(Y), X = BSC(0.2)(Y).
inline MarkovTriple bsc_chain() {
  return MarkovTriple(joint_from_channel(Pmf::bernoulli(0.5), bsc_kernel(0.1)), bsc_kernel(0.2));
}

/// Y ~ Bern(0.3), Z | Y in {Bern(0.25), Bern(0.6)}, X | Y in {Bern(0.1), Bern(0.7)}.
inline MarkovTriple skewed_chain() {
  Kernel channel({{0, Pmf::bernoulli(0.25)}, {1, Pmf::bernoulli(0.6)}});
  Kernel kernel({{0, Pmf::bernoulli(0.1)}, {1, Pmf::bernoulli(0.7)}});
  return MarkovTriple(joint_from_channel(Pmf::bernoulli(0.3), channel), kernel);
}

/// Y ~ geometric(0.5) on the naturals, Z = Y, and X | Y = y geometric with
/// parameter 0.5 for even y and 0.25 for odd y. Every alphabet is countably
/// infinite. Side and rows are each truncated at 5e-13, so the tabulated
/// induced joint misses at most 1e-12.
inline MarkovTriple geometric_chain() {
  constexpr double tail = 0.5 * kDefaultTailEps;
  const Pmf y_law = Pmf::geometric(0.5, tail);
  Kernel kernel;
  for (const auto& [y, p] : y_law.atoms()) kernel.set_row(y, Pmf::geometric(y % 2 == 0 ? 0.5 : 0.25, tail));
  return MarkovTriple(diagonal_joint(y_law), kernel);
}

}  // namespace typlab::fixtures
