#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "mcspace/lattice.hpp"
#include "mcspace/rational.hpp"

namespace mcspace {

/// Nearest-neighbor lattice model with exact rational couplings:
///
///   H(w) = -J * sum over active bonds <i,j> of s_i s_j  -  h * sum_i s_i
///   N(w) = sum_i s_i
///
/// where s_i is the spin value assigned to the symbol at site i. A bond is
/// active when neither endpoint is decoupled. Both H and N are evaluated in
/// integer-scaled arithmetic so level sets are exact, never tolerance-based:
/// with D the common denominator of the spin values and M the energy scale,
/// H(w) = energy_scaled(w)/M and N(w) = number_scaled(w)/D exactly.
struct ModelSpec {
  LatticeGeometry geometry;
  int alphabet = 2;
  std::vector<Rational> spin_values;   // symbol -> spin, size == alphabet
  Rational coupling;                   // J
  Rational field;                      // h
  std::vector<bool> decoupled;         // per-site mask; incident bonds carry J=0

  // Derived exact-scaling data (filled by make_model).
  long long spin_scale = 1;            // D
  long long energy_scale = 1;          // M
  std::vector<long long> spin_scaled;  // symbol -> s*D
  long long coeff_bond = 0;            // energy_scaled = coeff_bond*B + coeff_field*S
  long long coeff_field = 0;
  std::vector<std::pair<Site, Site>> active_bonds;
  std::vector<std::vector<Site>> active_neighbors;  // incident active bonds, other end

  std::size_t volume() const { return geometry.volume; }

  std::uint64_t total_configurations() const {
    return configuration_count(static_cast<std::uint64_t>(alphabet), geometry.volume);
  }

  long long spin_of(std::uint8_t symbol) const { return spin_scaled[symbol]; }

  /// S(w) = sum of scaled spins.
  long long spin_sum_scaled(ConfigView w) const {
    long long s = 0;
    for (std::size_t i = 0; i < w.size(); ++i) s += spin_scaled[w[i]];
    return s;
  }

  /// B(w) = sum of scaled spin products over active bonds.
  long long bond_sum_scaled(ConfigView w) const {
    long long b = 0;
    for (const auto& [i, j] : active_bonds) b += spin_scaled[w[i]] * spin_scaled[w[j]];
    return b;
  }

  long long energy_scaled(ConfigView w) const {
    return coeff_bond * bond_sum_scaled(w) + coeff_field * spin_sum_scaled(w);
  }

  long long number_scaled(ConfigView w) const { return spin_sum_scaled(w); }

  Rational energy_from_scaled(long long e) const { return Rational(e, energy_scale); }
  Rational number_from_scaled(long long n) const { return Rational(n, spin_scale); }

  Rational energy(ConfigView w) const { return energy_from_scaled(energy_scaled(w)); }
  Rational conserved_number(ConfigView w) const { return number_from_scaled(number_scaled(w)); }

  Rational energy(const Configuration& w) const { return energy(w.view()); }
  Rational conserved_number(const Configuration& w) const { return conserved_number(w.view()); }
};

/// Assembles a ModelSpec and its exact scaling coefficients.
inline ModelSpec make_model(LatticeGeometry geometry, int alphabet,
                            std::vector<Rational> spin_values, Rational coupling,
                            Rational field, const std::vector<Site>& decoupled_sites = {}) {
  if (alphabet < 2) throw Error("alphabet size must be >= 2");
  if (spin_values.size() != static_cast<std::size_t>(alphabet))
    throw Error("spin map must assign a value to each of the " + std::to_string(alphabet) +
                " symbols");

  ModelSpec m;
  m.geometry = std::move(geometry);
  m.alphabet = alphabet;
  m.spin_values = std::move(spin_values);
  m.coupling = coupling;
  m.field = field;
  m.decoupled.assign(m.geometry.volume, false);
  for (Site s : decoupled_sites) {
    if (s >= m.geometry.volume)
      throw Error("decoupled site " + std::to_string(s) + " outside lattice");
    m.decoupled[s] = true;
  }

  long long d = 1;
  for (const Rational& v : m.spin_values) d = std::lcm(d, v.denominator());
  m.spin_scale = d;
  m.spin_scaled.reserve(m.spin_values.size());
  for (const Rational& v : m.spin_values)
    m.spin_scaled.push_back(v.numerator() * (d / v.denominator()));

  const long long me = std::lcm(coupling.denominator() * d * d, field.denominator() * d);
  m.energy_scale = me;
  m.coeff_bond = -coupling.numerator() * (me / (coupling.denominator() * d * d));
  m.coeff_field = -field.numerator() * (me / (field.denominator() * d));

  m.active_neighbors.resize(m.geometry.volume);
  for (const auto& [i, j] : m.geometry.bonds) {
    if (m.decoupled[i] || m.decoupled[j]) continue;
    m.active_bonds.emplace_back(i, j);
    m.active_neighbors[i].push_back(j);
    m.active_neighbors[j].push_back(i);
  }
  return m;
}

/// Walks the q^V configurations in canonical lexicographic order, keeping the
/// scaled energy and number up to date incrementally (a base-q increment only
/// touches a trailing run of sites).
class ConfigurationScanner {
 public:
  explicit ConfigurationScanner(const ModelSpec& model, std::uint64_t start_index = 0)
      : model_(&model) {
    seek(start_index);
  }

  std::uint64_t index() const { return index_; }
  ConfigView view() const { return symbols_; }
  long long energy_scaled() const { return energy_; }
  long long number_scaled() const { return number_; }

  void seek(std::uint64_t index) {
    index_ = index;
    decode_configuration(index, static_cast<std::uint64_t>(model_->alphabet),
                         model_->volume(), symbols_);
    energy_ = model_->energy_scaled(symbols_);
    number_ = model_->number_scaled(symbols_);
  }

  /// Moves to the next configuration; false once the order is exhausted.
  bool advance() {
    const auto q = static_cast<std::uint8_t>(model_->alphabet);
    std::size_t i = symbols_.size();
    while (i-- > 0) {
      const std::uint8_t next = static_cast<std::uint8_t>(symbols_[i] + 1 == q ? 0 : symbols_[i] + 1);
      set_symbol(i, next);
      if (next != 0) {
        ++index_;
        return true;
      }
      if (i == 0) return false;  // wrapped past the last configuration
    }
    return false;
  }

 private:
  void set_symbol(std::size_t site, std::uint8_t next) {
    const long long old_spin = model_->spin_scaled[symbols_[site]];
    const long long new_spin = model_->spin_scaled[next];
    symbols_[site] = next;
    const long long delta = new_spin - old_spin;
    number_ += delta;
    long long neighbor_sum = 0;
    for (Site j : model_->active_neighbors[site]) neighbor_sum += model_->spin_scaled[symbols_[j]];
    energy_ += model_->coeff_bond * delta * neighbor_sum + model_->coeff_field * delta;
  }

  const ModelSpec* model_;
  std::vector<std::uint8_t> symbols_;
  std::uint64_t index_ = 0;
  long long energy_ = 0;
  long long number_ = 0;
};

/// Requires q^V <= cap; the error names both sides.
inline std::uint64_t checked_configuration_total(const ModelSpec& model, std::uint64_t cap) {
  const std::uint64_t total = model.total_configurations();
  if (total == 0 || total > cap)
    throw Error("configuration count " +
                (total == 0 ? std::string("q^V (overflows 64 bits)") : std::to_string(total)) +
                " exceeds enumeration cap " + std::to_string(cap));
  return total;
}

/// Visits every configuration exactly once in canonical order.
template <class Fn>
void enumerate_configurations(const ModelSpec& model, Fn&& fn,
                              std::uint64_t cap = kDefaultEnumerationCap) {
  const std::uint64_t total = checked_configuration_total(model, cap);
  ConfigurationScanner scan(model);
  for (std::uint64_t i = 0; i < total; ++i) {
    fn(static_cast<ConfigView>(scan.view()));
    if (i + 1 < total) scan.advance();
  }
}

}  // namespace mcspace
