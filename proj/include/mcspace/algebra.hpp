#pragma once

#include <algorithm>
#include <boost/dynamic_bitset.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcspace/rational.hpp"

namespace mcspace {

// ---------------------------------------------------------------------------
// Observables: real-valued functions on the finite phase space X, stored as
// value vectors in canonical shell order. The scalar is a template parameter;
// the Rational instantiation keeps the whole algebra layer exact.
// ---------------------------------------------------------------------------

template <class S>
class Observable {
 public:
  explicit Observable(std::vector<S> values) : values_(std::move(values)) {}

  static Observable constant(std::size_t n, S c) { return Observable(std::vector<S>(n, c)); }

  std::size_t size() const { return values_.size(); }
  const S& operator[](std::size_t i) const { return values_[i]; }
  const std::vector<S>& values() const { return values_; }

  bool operator==(const Observable& other) const { return values_ == other.values_; }

  Observable pointwise_product(const Observable& g) const {
    require_same_space(g);
    std::vector<S> v(values_);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = v[i] * g.values_[i];
    return Observable(std::move(v));
  }

  Observable squared() const { return pointwise_product(*this); }

  Observable operator+(const Observable& g) const {
    require_same_space(g);
    std::vector<S> v(values_);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = v[i] + g.values_[i];
    return Observable(std::move(v));
  }

  Observable operator-(const Observable& g) const {
    require_same_space(g);
    std::vector<S> v(values_);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = v[i] - g.values_[i];
    return Observable(std::move(v));
  }

  Observable scaled(const S& a) const {
    std::vector<S> v(values_);
    for (auto& x : v) x = a * x;
    return Observable(std::move(v));
  }

  std::vector<S> distinct_sorted_values() const {
    std::vector<S> v(values_);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }

  void require_same_space(const Observable& g) const {
    if (values_.size() != g.values_.size())
      throw Error("observables live on phase spaces of different size (" +
                  std::to_string(values_.size()) + " vs " + std::to_string(g.values_.size()) + ")");
  }

 private:
  std::vector<S> values_;
};

using RationalObservable = Observable<Rational>;
using RealObservable = Observable<double>;

// ---------------------------------------------------------------------------
// Idempotents: characteristic functions chi_F of subsets F of X, the Boolean
// algebra of the theory. Backed by a bitset over shell ids.
// ---------------------------------------------------------------------------

class Idempotent {
 public:
  explicit Idempotent(std::size_t space_size) : bits_(space_size) {}

  static Idempotent empty(std::size_t n) { return Idempotent(n); }

  static Idempotent full(std::size_t n) {
    Idempotent e(n);
    e.bits_.set();
    return e;
  }

  static Idempotent singleton(std::size_t n, std::size_t i) {
    Idempotent e(n);
    e.bits_.set(i);
    return e;
  }

  static Idempotent from_indices(std::size_t n, std::span<const std::size_t> indices) {
    Idempotent e(n);
    for (std::size_t i : indices) e.bits_.set(i);
    return e;
  }

  std::size_t space_size() const { return bits_.size(); }
  std::size_t count() const { return bits_.count(); }
  bool contains(std::size_t i) const { return bits_.test(i); }
  bool is_empty() const { return bits_.none(); }
  bool is_full() const { return bits_.all(); }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for (auto i = bits_.find_first(); i != boost::dynamic_bitset<>::npos; i = bits_.find_next(i))
      out.push_back(i);
    return out;
  }

  bool operator==(const Idempotent& other) const { return bits_ == other.bits_; }
  bool operator!=(const Idempotent& other) const { return bits_ != other.bits_; }

  /// chi_E <= chi_F in the lattice order, i.e. E is a subset of F.
  bool leq(const Idempotent& other) const {
    require_same_space(other);
    return bits_.is_subset_of(other.bits_);
  }

  template <class S = Rational>
  Observable<S> to_observable() const {
    std::vector<S> v(bits_.size(), S(0));
    for (auto i = bits_.find_first(); i != boost::dynamic_bitset<>::npos; i = bits_.find_next(i))
      v[i] = S(1);
    return Observable<S>(std::move(v));
  }

  /// Hex rendering of the bitset (bit i = shell i), fixed width, for exports.
  std::string to_hex() const {
    const std::size_t digits = (bits_.size() + 3) / 4;
    std::string out(digits, '0');
    for (std::size_t d = 0; d < digits; ++d) {
      unsigned nib = 0;
      for (unsigned b = 0; b < 4; ++b) {
        const std::size_t i = 4 * (digits - 1 - d) + b;
        if (i < bits_.size() && bits_.test(i)) nib |= 1u << b;
      }
      out[d] = "0123456789abcdef"[nib];
    }
    return out;
  }

  void require_same_space(const Idempotent& other) const {
    if (bits_.size() != other.bits_.size())
      throw Error("idempotents belong to phase spaces of different size (" +
                  std::to_string(bits_.size()) + " vs " + std::to_string(other.bits_.size()) + ")");
  }

  friend Idempotent meet(const Idempotent& a, const Idempotent& b) {
    a.require_same_space(b);
    Idempotent r(a.space_size());
    r.bits_ = a.bits_ & b.bits_;
    return r;
  }

  friend Idempotent join(const Idempotent& a, const Idempotent& b) {
    a.require_same_space(b);
    Idempotent r(a.space_size());
    r.bits_ = a.bits_ | b.bits_;
    return r;
  }

  friend Idempotent complement(const Idempotent& a) {
    Idempotent r(a.space_size());
    r.bits_ = ~a.bits_;
    return r;
  }

 private:
  boost::dynamic_bitset<> bits_;
};

inline Idempotent big_join(std::span<const Idempotent> family, std::size_t space_size) {
  Idempotent r = Idempotent::empty(space_size);
  for (const auto& e : family) r = join(r, e);
  return r;
}

inline Idempotent big_meet(std::span<const Idempotent> family, std::size_t space_size) {
  Idempotent r = Idempotent::full(space_size);
  for (const auto& e : family) r = meet(r, e);
  return r;
}

// ---------------------------------------------------------------------------
// States: probability vectors over X, identified with their expectation
// functionals via the finite Riesz pairing zeta(f) = sum_x f(x) sigma(x).
// ---------------------------------------------------------------------------

inline constexpr double kStateTolerance = 1e-12;

class AlgebraicState {
 public:
  explicit AlgebraicState(std::vector<double> weights) : weights_(std::move(weights)) {
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw Error("state weight is negative or NaN");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kStateTolerance)
      throw Error("state weights sum to " + std::to_string(sum) + ", not 1");
  }

  /// Exact construction path: rational weights validated to sum to 1 exactly.
  static AlgebraicState from_rationals(const std::vector<Rational>& weights) {
    Rational sum(0);
    std::vector<double> w;
    w.reserve(weights.size());
    for (const Rational& r : weights) {
      if (r < 0) throw Error("state weight is negative");
      sum += r;
      w.push_back(to_double(r));
    }
    if (sum != Rational(1)) throw Error("rational state weights sum to " + format_rational(sum));
    return AlgebraicState(std::move(w));
  }

  static AlgebraicState point_mass(std::size_t n, std::size_t x) {
    std::vector<double> w(n, 0.0);
    w.at(x) = 1.0;
    return AlgebraicState(std::move(w));
  }

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < weights_.size(); ++i)
      if (weights_[i] > 0.0) out.push_back(i);
    return out;
  }

 private:
  std::vector<double> weights_;
};

template <class S>
double expectation(const AlgebraicState& state, const Observable<S>& f) {
  if (state.size() != f.size())
    throw Error("state over " + std::to_string(state.size()) + " shells paired with observable over " +
                std::to_string(f.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += state[i] * to_double(f[i]);
  return sum;
}

template <class S>
double variance(const AlgebraicState& state, const Observable<S>& f) {
  const double mean = expectation(state, f);
  return expectation(state, f.squared()) - mean * mean;
}

/// A state is multiplicative iff zeta(fg) = zeta(f) zeta(g); on the singleton
/// idempotent basis this reduces to sigma_i sigma_j = sigma_{i==j} sigma_i,
/// which holds exactly when sigma is a point mass.
inline bool is_multiplicative(const AlgebraicState& state, double tol = kStateTolerance) {
  for (std::size_t i = 0; i < state.size(); ++i) {
    for (std::size_t j = 0; j < state.size(); ++j) {
      const double product_expect = (i == j) ? state[i] : 0.0;  // zeta(chi_i * chi_j)
      if (std::abs(product_expect - state[i] * state[j]) > tol) return false;
    }
  }
  return true;
}

/// Finite Choquet decomposition: the barycentric weights of the point masses
/// supporting sigma.
inline std::vector<std::pair<double, std::size_t>> extreme_decomposition(
    const AlgebraicState& state) {
  std::vector<std::pair<double, std::size_t>> out;
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state[i] > 0.0) out.emplace_back(state[i], i);
  return out;
}

/// Convex combination of states; weights must sum to 1.
inline AlgebraicState mix(std::span<const AlgebraicState> states, std::span<const double> weights) {
  if (states.empty() || states.size() != weights.size())
    throw Error("mix requires matching nonempty state and weight lists");
  double wsum = 0.0;
  for (double t : weights) {
    if (!(t >= 0.0)) throw Error("mixture weight is negative or NaN");
    wsum += t;
  }
  if (std::abs(wsum - 1.0) > kStateTolerance)
    throw Error("mixture weights sum to " + std::to_string(wsum) + ", not 1");
  std::vector<double> v(states[0].size(), 0.0);
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k].size() != v.size()) throw Error("mixture states live on different phase spaces");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += weights[k] * states[k][i];
  }
  return AlgebraicState(std::move(v));
}

/// Stationary-state builder: sigma(x) proportional to |S_x| exp(-beta E_x + lambda n_x),
/// evaluated with a max-shifted exponent so large beta cannot overflow.
inline AlgebraicState gibbs_weights(std::span<const std::uint64_t> counts,
                                    std::span<const double> energies,
                                    std::span<const double> numbers, double beta,
                                    double lambda) {
  const std::size_t n = counts.size();
  if (energies.size() != n || numbers.size() != n)
    throw Error("gibbs_weights requires equally sized label vectors");
  if (n == 0) throw Error("gibbs_weights on empty phase space");
  std::vector<double> expo(n);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    expo[i] = -beta * energies[i] + lambda * numbers[i];
    m = std::max(m, expo[i]);
  }
  std::vector<double> w(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = static_cast<double>(counts[i]) * std::exp(expo[i] - m);
    z += w[i];
  }
  for (auto& x : w) x /= z;
  return AlgebraicState(std::move(w));
}

// ---------------------------------------------------------------------------
// Borel sets of the real line, restricted to what a finite value set can
// resolve: finite unions of intervals with optional endpoints.
// ---------------------------------------------------------------------------

template <class S>
struct Interval {
  std::optional<S> lo, hi;  // nullopt = unbounded on that side
  bool lo_closed = true;
  bool hi_closed = true;

  bool contains(const S& v) const {
    if (lo) {
      if (v < *lo) return false;
      if (v == *lo && !lo_closed) return false;
    }
    if (hi) {
      if (*hi < v) return false;
      if (v == *hi && !hi_closed) return false;
    }
    return true;
  }

  static Interval point(S v) { return Interval{v, v, true, true}; }
  static Interval at_most(S v) { return Interval{std::nullopt, v, true, true}; }
  static Interval at_least(S v) { return Interval{v, std::nullopt, true, true}; }
  static Interval whole_line() { return Interval{std::nullopt, std::nullopt, true, true}; }
};

template <class S>
struct BorelSet {
  std::vector<Interval<S>> parts;

  BorelSet() = default;
  explicit BorelSet(std::vector<Interval<S>> p) : parts(std::move(p)) {
    for (const auto& iv : parts) {
      if (iv.lo && iv.hi) {
        if (*iv.hi < *iv.lo || (*iv.lo == *iv.hi && !(iv.lo_closed && iv.hi_closed)))
          throw Error("malformed interval: empty endpoint order");
      }
    }
  }

  bool contains(const S& v) const {
    for (const auto& iv : parts)
      if (iv.contains(v)) return true;
    return false;
  }

  static BorelSet real_line() { return BorelSet({Interval<S>::whole_line()}); }
  static BorelSet empty_set() { return BorelSet(); }
};

// ---------------------------------------------------------------------------
// P-valued measures: maps from Borel sets to idempotents. A measure is stored
// by its breakpoint values (the finite set that can carry mass) together with
// the idempotent attached to each; every other cell of the induced partition
// of R carries the zero idempotent.
// ---------------------------------------------------------------------------

template <class S>
class PValuedMeasure {
 public:
  PValuedMeasure(std::vector<S> values, std::vector<Idempotent> cells, std::size_t space_size)
      : values_(std::move(values)), cells_(std::move(cells)), space_(space_size) {
    if (values_.size() != cells_.size()) throw Error("measure needs one idempotent per cell value");
    for (std::size_t i = 0; i + 1 < values_.size(); ++i)
      if (!(values_[i] < values_[i + 1]))
        throw Error("measure cell values must be strictly increasing");
    for (const auto& c : cells_)
      if (c.space_size() != space_) throw Error("measure cell on mismatched phase space");
  }

  std::size_t cell_count() const { return values_.size(); }
  std::size_t space_size() const { return space_; }
  const S& value(std::size_t i) const { return values_[i]; }
  const std::vector<S>& values() const { return values_; }
  const Idempotent& cell(std::size_t i) const { return cells_[i]; }

  Idempotent zero() const { return Idempotent::empty(space_); }

  /// Q over a union of named cells.
  Idempotent of_cells(std::span<const std::size_t> cell_indices) const {
    Idempotent r = Idempotent::empty(space_);
    for (std::size_t i : cell_indices) r = join(r, cells_.at(i));
    return r;
  }

  /// Q over an arbitrary finite union of intervals.
  Idempotent of_set(const BorelSet<S>& b) const {
    Idempotent r = Idempotent::empty(space_);
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (b.contains(values_[i])) r = join(r, cells_[i]);
    return r;
  }

  Idempotent of_real_line() const {
    Idempotent r = Idempotent::empty(space_);
    for (const auto& c : cells_) r = join(r, c);
    return r;
  }

  /// True when the cell idempotents are pairwise disjoint and cover X.
  bool is_partition() const {
    Idempotent seen = Idempotent::empty(space_);
    for (const auto& c : cells_) {
      if (!meet(seen, c).is_empty()) return false;
      seen = join(seen, c);
    }
    return seen.is_full();
  }

  bool operator==(const PValuedMeasure& other) const {
    return space_ == other.space_ && values_ == other.values_ && cells_ == other.cells_;
  }

 private:
  std::vector<S> values_;
  std::vector<Idempotent> cells_;
  std::size_t space_;
};

/// Q^f(B) = chi_{[f in B]}: breakpoints are the distinct values of f, each
/// carrying the preimage idempotent.
template <class S>
PValuedMeasure<S> q_measure_of(const Observable<S>& f) {
  std::vector<S> values = f.distinct_sorted_values();
  std::vector<Idempotent> cells(values.size(), Idempotent::empty(f.size()));
  for (std::size_t x = 0; x < f.size(); ++x) {
    const auto it = std::lower_bound(values.begin(), values.end(), f[x]);
    cells[static_cast<std::size_t>(it - values.begin())] =
        join(cells[static_cast<std::size_t>(it - values.begin())],
             Idempotent::singleton(f.size(), x));
  }
  return PValuedMeasure<S>(std::move(values), std::move(cells), f.size());
}

/// Mackey Axiom VI inverse: the unique f with Q = Q^f, defined when the cell
/// idempotents partition X.
template <class S>
Observable<S> observable_from_measure(const PValuedMeasure<S>& q) {
  if (!q.is_partition())
    throw Error("not an observable-valued measure: cells do not partition the phase space");
  std::vector<S> v(q.space_size(), S(0));
  for (std::size_t i = 0; i < q.cell_count(); ++i)
    for (std::size_t x : q.cell(i).indices()) v[x] = q.value(i);
  return Observable<S>(std::move(v));
}

// ---------------------------------------------------------------------------
// Spectral decomposition: f = sum_i lambda_i (Q^f(lambda_i) - Q^f(lambda_{i-1}))
// over the monotone chain Q^f(lambda) = chi_{[f <= lambda]}.
// ---------------------------------------------------------------------------

template <class S>
struct SpectralDecomposition {
  std::vector<S> lambdas;         // ascending eigenvalue grid
  std::vector<Idempotent> chain;  // cumulative, chain.back() = 1
  std::size_t space_size = 0;

  Observable<S> reconstruct() const {
    std::vector<S> v(space_size, S(0));
    Idempotent prev = Idempotent::empty(space_size);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      const Idempotent increment = meet(chain[i], complement(prev));
      for (std::size_t x : increment.indices()) v[x] = lambdas[i];
      prev = chain[i];
    }
    return Observable<S>(std::move(v));
  }
};

template <class S>
SpectralDecomposition<S> spectral_decomposition(const Observable<S>& f) {
  SpectralDecomposition<S> d;
  d.space_size = f.size();
  d.lambdas = f.distinct_sorted_values();
  d.chain.reserve(d.lambdas.size());
  Idempotent acc = Idempotent::empty(f.size());
  for (const S& lam : d.lambdas) {
    for (std::size_t x = 0; x < f.size(); ++x)
      if (f[x] == lam) acc = join(acc, Idempotent::singleton(f.size(), x));
    d.chain.push_back(acc);
  }
  return d;
}

}  // namespace mcspace
