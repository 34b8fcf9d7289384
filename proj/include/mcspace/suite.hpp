#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "mcspace/algebra.hpp"
#include "mcspace/measurement.hpp"
#include "mcspace/report.hpp"

namespace mcspace {

namespace detail {

inline Idempotent idempotent_from_mask(std::size_t n, std::uint64_t mask) {
  Idempotent p = Idempotent::empty(n);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i)
    if (mask >> i & 1) idx.push_back(i);
  return Idempotent::from_indices(n, idx);
}

inline Idempotent random_idempotent(std::size_t n, std::mt19937_64& gen) {
  return idempotent_from_mask(n, gen());
}

}  // namespace detail

/// Lattice laws of the idempotents: commutativity, associativity, absorption,
/// distributivity, complementation, De Morgan. Pairs are exhaustive up to
/// 2^(2n) <= 2^20; triples and larger spaces are covered by a seeded sample.
inline std::vector<CheckRecord> boolean_axioms_check(std::size_t n, std::uint64_t seed,
                                                     std::size_t sampled_triples = 200) {
  std::vector<CheckRecord> out;
  const bool exhaustive_pairs = n <= 10;

  auto pair_laws = [&](const Idempotent& p, const Idempotent& q) {
    if (meet(p, q) != meet(q, p)) return false;
    if (join(p, q) != join(q, p)) return false;
    if (meet(p, join(p, q)) != p) return false;
    if (join(p, meet(p, q)) != p) return false;
    if (complement(join(p, q)) != meet(complement(p), complement(q))) return false;
    if (complement(meet(p, q)) != join(complement(p), complement(q))) return false;
    return true;
  };
  auto unary_laws = [&](const Idempotent& p) {
    if (meet(p, p) != p || join(p, p) != p) return false;
    if (!meet(p, complement(p)).is_empty()) return false;
    if (!join(p, complement(p)).is_full()) return false;
    if (complement(complement(p)) != p) return false;
    return true;
  };
  auto triple_laws = [&](const Idempotent& p, const Idempotent& q, const Idempotent& r) {
    if (meet(meet(p, q), r) != meet(p, meet(q, r))) return false;
    if (join(join(p, q), r) != join(p, join(q, r))) return false;
    if (meet(p, join(q, r)) != join(meet(p, q), meet(p, r))) return false;
    if (join(p, meet(q, r)) != meet(join(p, q), join(p, r))) return false;
    return true;
  };

  std::mt19937_64 gen(seed);
  {
    CheckRecord r;
    r.name = "boolean/pairs";
    r.inputs_digest = digest("pairs/" + std::to_string(n));
    bool ok = true;
    if (exhaustive_pairs) {
      const std::uint64_t total = std::uint64_t{1} << n;
      for (std::uint64_t a = 0; a < total && ok; ++a)
        for (std::uint64_t b = 0; b < total && ok; ++b) {
          const Idempotent p = detail::idempotent_from_mask(n, a);
          const Idempotent q = detail::idempotent_from_mask(n, b);
          ok = unary_laws(p) && pair_laws(p, q);
        }
      r.note = "exhaustive over all pairs";
    } else {
      for (std::size_t k = 0; k < 4096 && ok; ++k) {
        const Idempotent p = detail::random_idempotent(n, gen);
        const Idempotent q = detail::random_idempotent(n, gen);
        ok = unary_laws(p) && pair_laws(p, q);
      }
      r.note = "seeded sample of pairs";
    }
    r.pass = ok;
    r.residual = ok ? 0.0 : 1.0;
    out.push_back(std::move(r));
  }
  {
    CheckRecord r;
    r.name = "boolean/triples";
    r.inputs_digest = digest("triples/" + std::to_string(n));
    bool ok = true;
    for (std::size_t k = 0; k < sampled_triples && ok; ++k)
      ok = triple_laws(detail::random_idempotent(n, gen), detail::random_idempotent(n, gen),
                       detail::random_idempotent(n, gen));
    r.pass = ok;
    r.residual = ok ? 0.0 : 1.0;
    r.note = "seeded sample of triples";
    out.push_back(std::move(r));
  }
  return out;
}

/// Measure axioms for Q^f: nothing on the empty set, everything on the line,
/// additivity on disjoint windows, and the cells partition the space.
template <class S>
std::vector<CheckRecord> measure_axioms_check(const Observable<S>& f, const std::string& label) {
  const PValuedMeasure<S> q = q_measure_of(f);
  std::vector<CheckRecord> out;

  auto push = [&](const std::string& name, bool pass) {
    CheckRecord r;
    r.name = "measure/" + label + "/" + name;
    r.inputs_digest = digest(r.name);
    r.pass = pass;
    r.residual = pass ? 0.0 : 1.0;
    out.push_back(std::move(r));
  };

  push("empty_set", q.of_set(BorelSet<S>::empty_set()).is_empty());
  push("real_line", q.of_set(BorelSet<S>::real_line()).is_full());
  push("partition", q.is_partition());

  // Disjoint additivity over every split of the value axis between
  // consecutive cell values.
  bool additive = true;
  for (std::size_t i = 0; i + 1 < q.cell_count() && additive; ++i) {
    const S& cut = q.value(i);
    const BorelSet<S> low({Interval<S>::at_most(cut)});
    BorelSet<S> high({Interval<S>::at_least(q.value(i + 1))});
    const Idempotent a = q.of_set(low);
    const Idempotent b = q.of_set(high);
    additive = meet(a, b).is_empty() && join(a, b).is_full();
  }
  push("disjoint_additivity", additive);

  // Axiom VI round trip: the measure pins down its observable.
  bool round_trip = true;
  const Observable<S> back = observable_from_measure(q);
  for (std::size_t x = 0; x < f.size(); ++x)
    if (back[x] != f[x]) round_trip = false;
  push("observable_round_trip", round_trip);
  return out;
}

/// Spectral theorem round trip, exact for rational observables.
inline CheckRecord spectral_roundtrip_check(const RationalObservable& f, const std::string& label) {
  CheckRecord r;
  r.name = "spectral/" + label;
  r.inputs_digest = digest(r.name);
  const auto d = spectral_decomposition(f);
  const RationalObservable back = d.reconstruct();
  bool ok = d.chain.empty() || d.chain.back().is_full();
  double worst = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) {
    if (back[x] != f[x]) ok = false;
    worst = std::max(worst, std::abs(to_double(back[x] - f[x])));
  }
  r.pass = ok;
  r.residual = worst;
  return r;
}

inline CheckRecord spectral_roundtrip_check(const RealObservable& f, const std::string& label,
                                            double tol = kStateTolerance) {
  CheckRecord r;
  r.name = "spectral/" + label;
  r.inputs_digest = digest(r.name);
  const auto d = spectral_decomposition(f);
  const RealObservable back = d.reconstruct();
  double worst = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) worst = std::max(worst, std::abs(back[x] - f[x]));
  r.pass = worst <= tol && (d.chain.empty() || d.chain.back().is_full());
  r.residual = worst;
  return r;
}

/// The spectral chain is a lattice homomorphism on windows: intersections of
/// threshold sets match meets of chain members, exactly.
template <class S>
CheckRecord spectral_chain_check(const Observable<S>& f, const std::string& label) {
  CheckRecord r;
  r.name = "spectral_chain/" + label;
  r.inputs_digest = digest(r.name);
  const auto d = spectral_decomposition(f);
  const PValuedMeasure<S> q = q_measure_of(f);
  bool ok = true;
  for (std::size_t i = 0; i < d.lambdas.size() && ok; ++i) {
    const BorelSet<S> below({Interval<S>::at_most(d.lambdas[i])});
    if (q.of_set(below) != d.chain[i]) ok = false;
    for (std::size_t j = 0; j < d.lambdas.size() && ok; ++j) {
      if (meet(d.chain[i], d.chain[j]) != d.chain[std::min(i, j)]) ok = false;
      if (join(d.chain[i], d.chain[j]) != d.chain[std::max(i, j)]) ok = false;
    }
  }
  r.pass = ok;
  r.residual = ok ? 0.0 : 1.0;
  return r;
}

/// Extremal = multiplicative = deterministic, checked both ways on a state.
template <class S>
CheckRecord state_structure_check(const AlgebraicState& state,
                                  std::span<const Observable<S>> generators,
                                  const std::string& label, double tol = kStateTolerance) {
  CheckRecord r;
  r.name = "state_structure/" + label;
  r.inputs_digest = digest(r.name);

  const bool point = state.support().size() == 1;
  const bool multiplicative = is_multiplicative(state, tol);
  double max_variance = 0.0;
  for (const auto& f : generators) max_variance = std::max(max_variance, variance(state, f));
  const bool deterministic = max_variance <= tol;

  const auto decomposition = extreme_decomposition(state);
  double recon_gap = 0.0;
  std::vector<double> recon(state.size(), 0.0);
  for (const auto& [w, x] : decomposition) recon[x] += w;
  for (std::size_t x = 0; x < state.size(); ++x)
    recon_gap = std::max(recon_gap, std::abs(recon[x] - state[x]));

  r.pass = (point == multiplicative) && (point == deterministic) && recon_gap <= tol &&
           decomposition.size() == state.support().size();
  r.residual = std::max(recon_gap, point ? max_variance : 0.0);
  r.note = point ? "extreme point" : "proper mixture";
  return r;
}

}  // namespace mcspace
