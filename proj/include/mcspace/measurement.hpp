#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mcspace/algebra.hpp"
#include "mcspace/ensemble.hpp"
#include "mcspace/report.hpp"

namespace mcspace {

inline double to_double_value(const Rational& v) { return to_double(v); }
inline double to_double_value(double v) { return v; }

// ---------------------------------------------------------------------------
// Probability laws of single measurements. Two independent routes exist and
// are kept separate on purpose: the direct scan over shells, and the
// expectation of the idempotent supplied by the observable-valued measure.
// ---------------------------------------------------------------------------

/// Direct route: P(f in B) = sum of sigma(x) over shells with f(x) in B.
template <class S>
double probability_law(const AlgebraicState& state, const Observable<S>& f,
                       const BorelSet<S>& set) {
  if (state.size() != f.size()) throw Error("state and observable live on different phase spaces");
  double p = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x)
    if (set.contains(f[x])) p += state[x];
  return p;
}

/// Idempotent route: P(f in B) = zeta(Q^f(B)).
template <class S>
double probability_law_via_measure(const AlgebraicState& state, const Observable<S>& f,
                                   const BorelSet<S>& set) {
  const PValuedMeasure<S> q = q_measure_of(f);
  return expectation(state, q.of_set(set).template to_observable<double>());
}

/// The full finitely-supported law of one measurement.
template <class S>
struct Law {
  std::vector<S> values;  // distinct outcomes, ascending
  std::vector<double> probabilities;
};

template <class S>
Law<S> law_of(const AlgebraicState& state, const Observable<S>& f) {
  if (state.size() != f.size()) throw Error("state and observable live on different phase spaces");
  Law<S> law;
  law.values = f.distinct_sorted_values();
  law.probabilities.assign(law.values.size(), 0.0);
  for (std::size_t x = 0; x < f.size(); ++x) {
    const auto it = std::lower_bound(law.values.begin(), law.values.end(), f[x]);
    law.probabilities[static_cast<std::size_t>(it - law.values.begin())] += state[x];
  }
  return law;
}

template <class S>
CheckRecord law_consistency_check(const AlgebraicState& state, const Observable<S>& f,
                                  const BorelSet<S>& set, const std::string& label,
                                  double tol = kStateTolerance) {
  CheckRecord r;
  r.name = "law_consistency/" + label;
  r.inputs_digest = digest(label);
  const double direct = probability_law(state, f, set);
  const double via_q = probability_law_via_measure(state, f, set);
  r.residual = std::abs(direct - via_q);
  r.pass = r.residual <= tol;
  return r;
}

// ---------------------------------------------------------------------------
// Sampling: draw a shell from sigma by inversion, read off the value of the
// observable there (the zero-variance read on the frozen MC state). One
// seeded stream per record, the portable 64-bit Mersenne twister; the top 53
// bits give the uniform variate, so replays are bit-identical everywhere.
// ---------------------------------------------------------------------------

class ShellSampler {
 public:
  ShellSampler(const AlgebraicState& state, std::uint64_t seed) : gen_(seed) {
    cumulative_.reserve(state.size());
    double acc = 0.0;
    for (std::size_t x = 0; x < state.size(); ++x) {
      acc += state[x];
      cumulative_.push_back(acc);
    }
  }

  std::size_t next() {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
    return std::min(i, cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
  std::mt19937_64 gen_;
};

/// One full sampling experiment under a fixed seed.
struct MeasurementRecord {
  std::uint64_t seed = 0;
  std::string state_id;
  std::string observable_id;
  std::size_t n = 0;
  std::vector<std::size_t> shells;   // drawn shell per trial
  std::vector<double> outcomes;      // f at the drawn shell
  std::vector<std::pair<double, double>> empirical_law;  // value -> frequency
};

template <class S>
MeasurementRecord sample_measurement(const AlgebraicState& state, const Observable<S>& f,
                                     std::uint64_t seed, std::size_t n,
                                     std::string state_id = "state",
                                     std::string observable_id = "observable") {
  if (state.size() != f.size()) throw Error("state and observable live on different phase spaces");
  if (n == 0) throw Error("sample count must be at least 1");
  MeasurementRecord rec;
  rec.seed = seed;
  rec.state_id = std::move(state_id);
  rec.observable_id = std::move(observable_id);
  rec.n = n;
  rec.shells.reserve(n);
  rec.outcomes.reserve(n);
  ShellSampler sampler(state, seed);
  std::map<double, std::size_t> tally;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t x = sampler.next();
    const double v = to_double_value(f[x]);
    rec.shells.push_back(x);
    rec.outcomes.push_back(v);
    ++tally[v];
  }
  for (const auto& [value, count] : tally)
    rec.empirical_law.emplace_back(value, static_cast<double>(count) / static_cast<double>(n));
  return rec;
}

struct LawComparison {
  double worst_gap = 0.0;    // max |frequency - probability| over value cells
  double worst_bound = 0.0;  // the binomial bound at the worst cell
  bool pass = false;
};

/// Every value cell of the empirical law must sit within four binomial
/// standard deviations of the exact law; degenerate cells must match exactly.
template <class S>
LawComparison compare_against_law(const MeasurementRecord& rec, const AlgebraicState& state,
                                  const Observable<S>& f) {
  const Law<S> law = law_of(state, f);
  LawComparison cmp;
  cmp.pass = true;
  for (std::size_t i = 0; i < law.values.size(); ++i) {
    const double p = law.probabilities[i];
    const double v = to_double_value(law.values[i]);
    double freq = 0.0;
    for (const auto& [value, frequency] : rec.empirical_law)
      if (value == v) freq = frequency;
    const double gap = std::abs(freq - p);
    const double var = p * (1.0 - p);
    const double bound = var > 0.0 ? 4.0 * std::sqrt(var / static_cast<double>(rec.n)) : 0.0;
    const bool ok = var > 0.0 ? gap <= bound : freq == p;
    if (!ok) cmp.pass = false;
    if (gap > cmp.worst_gap) {
      cmp.worst_gap = gap;
      cmp.worst_bound = bound;
    }
  }
  return cmp;
}

struct SamplingCheck {
  double sample_mean = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;  // 4 sd(f)/sqrt(n), zero for deterministic laws
  bool pass = false;
};

/// Mean-level law of large numbers at fixed n; a zero-variance state must
/// reproduce zeta(f) exactly.
template <class S>
SamplingCheck check_sampling(const AlgebraicState& state, const Observable<S>& f, std::size_t n,
                             std::uint64_t seed) {
  SamplingCheck c;
  c.expected = expectation(state, f);
  const double var = variance(state, f);
  double acc = 0.0;
  ShellSampler sampler(state, seed);
  for (std::size_t k = 0; k < n; ++k) acc += to_double_value(f[sampler.next()]);
  c.sample_mean = acc / static_cast<double>(n);
  if (var <= 0.0) {
    c.tolerance = 0.0;
    c.pass = c.sample_mean == c.expected;
  } else {
    c.tolerance = 4.0 * std::sqrt(var / static_cast<double>(n));
    c.pass = std::abs(c.sample_mean - c.expected) <= c.tolerance;
  }
  return c;
}

// ---------------------------------------------------------------------------
// The compatibility identity: for a subset F of the phase space and
// A_F = f(F) with f = gamma(f^t), averaging the exterior indicator
// chi_{[f^t in A_F]} over shells reproduces chi_{[f in A_F]} exactly,
// provided f^t is constant on every shell.
// ---------------------------------------------------------------------------

/// chi_{[f^t in A]} as an exterior observable on the same support.
inline ExteriorObservable indicator_of_membership(const ExteriorObservable& ft,
                                                  std::span<const Rational> value_set) {
  if (!ft.table_backed())
    throw Error("membership indicator needs a tabulated observable ('" + ft.name() + "')");
  std::vector<Rational> table(ft.table().size(), Rational(0));
  for (std::size_t k = 0; k < table.size(); ++k) {
    const Rational& v = ft.table()[k];
    if (std::find(value_set.begin(), value_set.end(), v) != value_set.end()) table[k] = Rational(1);
  }
  return ExteriorObservable::from_table(ft.model(), ft.system(), ft.support(),
                                        "chi[" + ft.name() + "]", std::move(table));
}

/// One instance of the identity for a fixed F; equality is exact rational.
inline CheckRecord compatibility_check(const PhaseSpace& space, const ExteriorObservable& ft,
                                       const Idempotent& F, const std::string& label) {
  CheckRecord r;
  r.name = "compatibility/" + label;
  r.inputs_digest = digest(label + "|" + F.to_hex());
  const RationalObservable f = gamma(space, ft);
  std::vector<Rational> value_set;
  for (std::size_t x : F.indices()) value_set.push_back(f[x]);
  std::sort(value_set.begin(), value_set.end());
  value_set.erase(std::unique(value_set.begin(), value_set.end()), value_set.end());

  const RationalObservable lhs = gamma(space, indicator_of_membership(ft, value_set));
  double worst = 0.0;
  bool exact = true;
  for (std::size_t x = 0; x < space.shell_count(); ++x) {
    const bool member = std::binary_search(value_set.begin(), value_set.end(), f[x]);
    const Rational rhs = member ? Rational(1) : Rational(0);
    if (lhs[x] != rhs) exact = false;
    worst = std::max(worst, std::abs(to_double(lhs[x] - rhs)));
  }
  r.residual = worst;
  r.pass = exact;
  return r;
}

/// Runs the identity over the empty set, the whole space, every singleton,
/// every adjacent pair, and seeded random subsets. Exactness is asserted only
/// when f^t is constant on shells; otherwise the residuals are diagnostic.
inline std::vector<CheckRecord> compatibility_suite(const PhaseSpace& space,
                                                    const ExteriorObservable& ft,
                                                    const std::string& label,
                                                    std::uint64_t seed = 7,
                                                    std::size_t random_subsets = 8) {
  const bool measurable = is_shell_measurable(space, ft);
  const std::size_t n = space.shell_count();
  std::vector<Idempotent> subsets;
  subsets.push_back(Idempotent::empty(n));
  subsets.push_back(Idempotent::full(n));
  for (std::size_t x = 0; x < n; ++x) subsets.push_back(Idempotent::singleton(n, x));
  for (std::size_t x = 0; x + 1 < n; ++x)
    subsets.push_back(join(Idempotent::singleton(n, x), Idempotent::singleton(n, x + 1)));
  std::mt19937_64 gen(seed);
  for (std::size_t k = 0; k < random_subsets; ++k) {
    const std::uint64_t mask = gen();
    std::vector<std::size_t> idx;
    for (std::size_t x = 0; x < n; ++x)
      if (mask >> (x % 64) & 1) idx.push_back(x);
    subsets.push_back(Idempotent::from_indices(n, idx));
  }

  std::vector<CheckRecord> out;
  bool any_failure = false;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    CheckRecord r = compatibility_check(space, ft, subsets[i], label + "/F" + std::to_string(i));
    if (!r.pass) any_failure = true;
    if (!measurable) {
      r.asserted = false;
      r.note = "source not constant on shells";
    }
    out.push_back(std::move(r));
  }

  CheckRecord status;
  status.name = "compatibility/" + label + "/shell_measurable";
  status.inputs_digest = digest(label);
  status.residual = 0.0;
  if (measurable) {
    status.pass = !any_failure;
    status.note = "constant on shells; identity must be exact";
  } else {
    status.pass = true;
    status.asserted = false;
    status.note = any_failure ? "not constant on shells; identity failed as expected"
                              : "not constant on shells; identity held anyway";
  }
  out.push_back(std::move(status));
  return out;
}

// ---------------------------------------------------------------------------
// Statistical-structure checks on the pair (observables, states).
// ---------------------------------------------------------------------------

namespace detail {

inline Idempotent random_subset(std::size_t n, std::mt19937_64& gen) {
  const std::uint64_t mask = gen();
  std::vector<std::size_t> idx;
  for (std::size_t x = 0; x < n; ++x)
    if (mask >> (x % 64) & 1) idx.push_back(x);
  return Idempotent::from_indices(n, idx);
}

inline RealObservable random_dyadic_observable(std::size_t n, std::mt19937_64& gen) {
  std::vector<double> v(n);
  for (double& x : v) x = static_cast<double>(gen() % 129) / 128.0 - 0.5;
  return RealObservable(std::move(v));
}

inline AlgebraicState random_state(std::size_t n, std::mt19937_64& gen) {
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) {
    x = static_cast<double>(gen() % 64 + 1);
    total += x;
  }
  for (double& x : w) x /= total;
  return AlgebraicState(std::move(w));
}

}  // namespace detail

/// Fullness: dominance of idempotents under every state is containment.
/// E not contained in F must be witnessed by a point mass on E minus F; for
/// nested pairs the inequality must hold across the whole point-mass family.
inline std::vector<CheckRecord> mackey_fullness_check(std::size_t n, std::size_t pairs,
                                                      std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<CheckRecord> out;
  for (std::size_t k = 0; k < pairs; ++k) {
    Idempotent e = detail::random_subset(n, gen);
    Idempotent f = detail::random_subset(n, gen);
    if (k % 4 == 0) f = join(e, detail::random_subset(n, gen));  // force containment sometimes
    const bool contained = e.leq(f);

    CheckRecord r;
    r.name = "mackey_fullness/pair" + std::to_string(k);
    r.inputs_digest = digest(r.name + "/" + e.to_hex() + "/" + f.to_hex());
    if (contained) {
      bool dominated = true;
      for (std::size_t x = 0; x < n; ++x) {
        const AlgebraicState point = AlgebraicState::point_mass(n, x);
        if (expectation(point, e.to_observable<double>()) >
            expectation(point, f.to_observable<double>()))
          dominated = false;
      }
      r.pass = dominated;
      r.note = "nested pair: dominance over all point masses";
    } else {
      bool witnessed = false;
      const Idempotent gap = meet(e, complement(f));
      for (std::size_t x : gap.indices()) {
        const AlgebraicState point = AlgebraicState::point_mass(n, x);
        if (expectation(point, e.to_observable<double>()) >
            expectation(point, f.to_observable<double>())) {
          witnessed = true;
          break;
        }
      }
      r.pass = witnessed;
      r.note = "non-nested pair: witness required";
    }
    r.residual = r.pass ? 0.0 : 1.0;
    out.push_back(std::move(r));
  }
  return out;
}

/// Strong convexity: the mixture of states is a state, and expectation is
/// affine in the mixture. Both sides are computed by different routes.
inline std::vector<CheckRecord> strong_convexity_check(std::size_t space_size, std::size_t trials,
                                                       std::uint64_t seed,
                                                       double tol = kStateTolerance) {
  std::mt19937_64 gen(seed);
  std::vector<CheckRecord> out;
  for (std::size_t k = 0; k < trials; ++k) {
    const std::size_t m = 2 + gen() % 4;
    std::vector<AlgebraicState> parts;
    for (std::size_t i = 0; i < m; ++i) parts.push_back(detail::random_state(space_size, gen));
    std::vector<double> p(m);
    double total = 0.0;
    for (double& x : p) {
      x = static_cast<double>(gen() % 32 + 1);
      total += x;
    }
    for (double& x : p) x /= total;
    const RealObservable f = detail::random_dyadic_observable(space_size, gen);

    const AlgebraicState mixed = mix(parts, p);  // revalidates the state axioms
    const double lhs = expectation(mixed, f);
    double rhs = 0.0;
    for (std::size_t i = 0; i < m; ++i) rhs += p[i] * expectation(parts[i], f);
    double vector_gap = 0.0;
    for (std::size_t x = 0; x < space_size; ++x) {
      double conv = 0.0;
      for (std::size_t i = 0; i < m; ++i) conv += p[i] * parts[i][x];
      vector_gap = std::max(vector_gap, std::abs(mixed[x] - conv));
    }

    CheckRecord r;
    r.name = "strong_convexity/trial" + std::to_string(k);
    r.inputs_digest = digest(r.name + "/" + std::to_string(seed));
    r.residual = std::max(std::abs(lhs - rhs), vector_gap);
    r.pass = r.residual <= tol;
    out.push_back(std::move(r));
  }
  return out;
}

/// Axiom II both ways: states separate observables through point masses, and
/// observables separate states through coordinate idempotents.
inline std::vector<CheckRecord> separation_check(std::size_t n, std::size_t pairs,
                                                 std::uint64_t seed,
                                                 double tol = kStateTolerance) {
  std::mt19937_64 gen(seed);
  std::vector<CheckRecord> out;
  for (std::size_t k = 0; k < pairs; ++k) {
    {
      const RealObservable f = detail::random_dyadic_observable(n, gen);
      const RealObservable g = (k % 4 == 0) ? f : detail::random_dyadic_observable(n, gen);
      bool identical = true;
      for (std::size_t x = 0; x < n; ++x)
        if (f[x] != g[x]) identical = false;
      bool witnessed = false;
      for (std::size_t x = 0; x < n && !witnessed; ++x) {
        const AlgebraicState point = AlgebraicState::point_mass(n, x);
        if (expectation(point, f) != expectation(point, g)) witnessed = true;
      }
      CheckRecord r;
      r.name = "separation/observables/pair" + std::to_string(k);
      r.inputs_digest = digest(r.name + "/" + std::to_string(seed));
      r.pass = identical ? !witnessed : witnessed;
      r.residual = r.pass ? 0.0 : 1.0;
      r.note = identical ? "equal pair: no witness exists" : "distinct pair: witness required";
      out.push_back(std::move(r));
    }
    {
      const AlgebraicState a = detail::random_state(n, gen);
      const AlgebraicState b = (k % 4 == 0) ? a : detail::random_state(n, gen);
      double state_gap = 0.0;
      for (std::size_t x = 0; x < n; ++x)
        state_gap = std::max(state_gap, std::abs(a[x] - b[x]));
      double idempotent_gap = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        const auto chi = Idempotent::singleton(n, x).to_observable<double>();
        idempotent_gap =
            std::max(idempotent_gap, std::abs(expectation(a, chi) - expectation(b, chi)));
      }
      CheckRecord r;
      r.name = "separation/states/pair" + std::to_string(k);
      r.inputs_digest = digest(r.name + "/" + std::to_string(seed));
      r.pass = (state_gap <= tol) ? (idempotent_gap <= tol) : (idempotent_gap > tol);
      r.residual = std::abs(idempotent_gap - state_gap);
      r.note = (state_gap <= tol) ? "equal pair" : "distinct pair";
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace mcspace
