#pragma once

#include <algorithm>
#include <boost/dynamic_bitset.hpp>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcspace/model.hpp"
#include "mcspace/rational.hpp"
#include "mcspace/report.hpp"

namespace mcspace {

using SiteSet = boost::dynamic_bitset<>;

inline SiteSet make_site_set(std::size_t volume, std::span<const Site> sites) {
  SiteSet s(volume);
  for (Site i : sites) {
    if (i >= volume) throw Error("site " + std::to_string(i) + " outside lattice volume");
    s.set(i);
  }
  return s;
}

inline std::vector<Site> site_list(const SiteSet& s) {
  std::vector<Site> out;
  for (auto i = s.find_first(); i != SiteSet::npos; i = s.find_next(i))
    out.push_back(static_cast<Site>(i));
  return out;
}

/// A system of measurement: a nonempty proper subvolume of the lattice.
struct Subvolume {
  std::string name;
  SiteSet sites;

  SiteSet exterior() const { return ~sites; }
};

inline Subvolume make_subvolume(std::string name, std::size_t volume,
                                std::span<const Site> sites) {
  Subvolume sv{std::move(name), make_site_set(volume, sites)};
  if (sv.sites.none()) throw Error("subvolume '" + sv.name + "' is empty");
  if (sv.sites.all()) throw Error("subvolume '" + sv.name + "' has empty exterior");
  return sv;
}

/// The family of systems, partially ordered by inclusion of site sets.
class SubvolumePoset {
 public:
  explicit SubvolumePoset(std::vector<Subvolume> systems) : systems_(std::move(systems)) {
    for (std::size_t i = 0; i < systems_.size(); ++i)
      for (std::size_t j = i + 1; j < systems_.size(); ++j) {
        if (systems_[i].name == systems_[j].name)
          throw Error("duplicate system name '" + systems_[i].name + "'");
        if (systems_[i].sites == systems_[j].sites)
          throw Error("systems '" + systems_[i].name + "' and '" + systems_[j].name +
                      "' have identical site sets");
      }
  }

  std::size_t size() const { return systems_.size(); }
  const Subvolume& at(std::size_t i) const { return systems_.at(i); }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < systems_.size(); ++i)
      if (systems_[i].name == name) return i;
    return std::nullopt;
  }

  /// s <= t iff the site set of s is contained in that of t.
  bool leq(std::size_t s, std::size_t t) const {
    return systems_.at(s).sites.is_subset_of(systems_.at(t).sites);
  }

  /// All strictly nested pairs (s, t) with s < t.
  std::vector<std::pair<std::size_t, std::size_t>> nested_pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t s = 0; s < systems_.size(); ++s)
      for (std::size_t t = 0; t < systems_.size(); ++t)
        if (s != t && leq(s, t)) out.emplace_back(s, t);
    return out;
  }

 private:
  std::vector<Subvolume> systems_;
};

// ---------------------------------------------------------------------------
// Exterior observables ("functions from the outside"): bounded functions of
// the whole configuration whose value depends only on sites outside the
// system. Small supports are tabulated so support and sup-norm claims are
// checked exhaustively; larger supports fall back to the defining closure.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kTableLimit = std::uint64_t{1} << 20;

class ExteriorObservable {
 public:
  /// Validates the exterior condition and tabulates when q^|D| is small.
  /// A declared sup-norm bound is required only on the closure path.
  static ExteriorObservable from_function(const ModelSpec& model, const Subvolume& system,
                                          const SiteSet& support, std::string name,
                                          std::function<Rational(ConfigView)> fn,
                                          std::optional<Rational> declared_bound = std::nullopt) {
    if (support.size() != model.volume())
      throw Error("support mask sized for a different lattice");
    if ((support & system.sites).any())
      throw Error("observable '" + name + "' is not a function from the outside of system '" +
                  system.name + "'");

    ExteriorObservable f;
    f.model_ = &model;
    f.system_ = system;
    f.support_ = support;
    f.name_ = std::move(name);
    f.support_sites_ = site_list(support);

    const std::uint64_t table_size =
        configuration_count(static_cast<std::uint64_t>(model.alphabet), f.support_sites_.size());
    if (table_size != 0 && table_size <= kTableLimit) {
      f.table_.reserve(table_size);
      std::vector<std::uint8_t> scratch(model.volume(), 0);
      std::vector<std::uint8_t> digits;
      Rational bound(0);
      for (std::uint64_t k = 0; k < table_size; ++k) {
        decode_configuration(k, static_cast<std::uint64_t>(model.alphabet),
                             f.support_sites_.size(), digits);
        for (std::size_t d = 0; d < f.support_sites_.size(); ++d)
          scratch[f.support_sites_[d]] = digits[d];
        f.table_.push_back(fn(scratch));
        bound = std::max(bound, rational_abs(f.table_.back()));
      }
      f.sup_norm_ = bound;
    } else {
      if (!declared_bound)
        throw Error("observable '" + f.name_ + "' needs a declared sup-norm bound (support too large to tabulate)");
      f.fn_ = std::move(fn);
      f.sup_norm_ = *declared_bound;
    }
    return f;
  }

  /// Table-backed constructor used by morphisms and value transforms.
  static ExteriorObservable from_table(const ModelSpec& model, const Subvolume& system,
                                       const SiteSet& support, std::string name,
                                       std::vector<Rational> table) {
    if ((support & system.sites).any())
      throw Error("observable '" + name + "' is not a function from the outside of system '" +
                  system.name + "'");
    ExteriorObservable f;
    f.model_ = &model;
    f.system_ = system;
    f.support_ = support;
    f.name_ = std::move(name);
    f.support_sites_ = site_list(support);
    const std::uint64_t expected =
        configuration_count(static_cast<std::uint64_t>(model.alphabet), f.support_sites_.size());
    if (expected == 0 || table.size() != expected)
      throw Error("observable table has wrong size for its support");
    f.table_ = std::move(table);
    Rational bound(0);
    for (const Rational& v : f.table_) bound = std::max(bound, rational_abs(v));
    f.sup_norm_ = bound;
    return f;
  }

  const std::string& name() const { return name_; }
  const Subvolume& system() const { return system_; }
  const SiteSet& support() const { return support_; }
  const std::vector<Site>& support_sites() const { return support_sites_; }
  const Rational& sup_norm() const { return sup_norm_; }
  bool table_backed() const { return !table_.empty() || support_sites_.empty(); }
  const std::vector<Rational>& table() const { return table_; }
  const ModelSpec& model() const { return *model_; }

  std::uint64_t pack_support(ConfigView w) const {
    std::uint64_t idx = 0;
    for (Site s : support_sites_) idx = idx * static_cast<std::uint64_t>(model_->alphabet) + w[s];
    return idx;
  }

  Rational operator()(ConfigView w) const {
    if (!table_.empty()) return table_[pack_support(w)];
    return fn_(w);
  }

  Rational operator()(const Configuration& w) const { return (*this)(w.view()); }

  /// Same quantity test at desk scale: same support and identical tables.
  bool same_function(const ExteriorObservable& other) const {
    return support_ == other.support_ && table_backed() && other.table_backed() &&
           table_ == other.table_;
  }

  /// Reinterprets the observable as a member of the target system's space,
  /// which is only a relabeling when the support already avoids the target.
  ExteriorObservable rebased(const Subvolume& target) const {
    if ((support_ & target.sites).any())
      throw Error("observable '" + name_ + "' not embeddable by identity into system '" +
                  target.name + "' (support meets the system)");
    ExteriorObservable f(*this);
    f.system_ = target;
    return f;
  }

 private:
  ExteriorObservable() = default;

  const ModelSpec* model_ = nullptr;
  Subvolume system_;
  SiteSet support_;
  std::vector<Site> support_sites_;
  std::string name_;
  std::vector<Rational> table_;
  std::function<Rational(ConfigView)> fn_;
  Rational sup_norm_{0};
};

inline Rational eval_observable(const ExteriorObservable& f, ConfigView w) { return f(w); }

// ---------------------------------------------------------------------------
// Morphisms between the local observable spaces. Two concrete strategies:
//   identity            exact but partial (the support must avoid the target)
//   conditional expectation against a site-independent product reference
//                       total; interior sites are averaged out exactly
// Both are positive and unit-preserving.
// ---------------------------------------------------------------------------

struct ReferenceDistribution {
  std::vector<Rational> symbol_weights;  // one weight per symbol, same at every site
};

inline ReferenceDistribution uniform_reference(int alphabet) {
  return ReferenceDistribution{
      std::vector<Rational>(static_cast<std::size_t>(alphabet), Rational(1, alphabet))};
}

struct MorphismStrategy {
  enum class Kind { identity, conditional_expectation };
  Kind kind = Kind::identity;
  std::optional<ReferenceDistribution> reference;

  static MorphismStrategy identity() { return MorphismStrategy{Kind::identity, std::nullopt}; }

  static MorphismStrategy conditional_expectation(ReferenceDistribution ref) {
    return MorphismStrategy{Kind::conditional_expectation, std::move(ref)};
  }

  std::string label() const {
    return kind == Kind::identity ? "identity" : "conditional_expectation";
  }
};

namespace detail {

/// E_ref[f | configuration outside target]: averages the support sites lying
/// inside the target over the product reference, exactly.
inline ExteriorObservable condexp_embed(const ExteriorObservable& f, const Subvolume& target,
                                        const ReferenceDistribution& ref) {
  const ModelSpec& model = f.model();
  if (ref.symbol_weights.size() != static_cast<std::size_t>(model.alphabet))
    throw Error("reference distribution does not match the model alphabet");
  {
    Rational total(0);
    for (const Rational& w : ref.symbol_weights) {
      if (w < 0) throw Error("reference distribution has a negative weight");
      total += w;
    }
    if (total != Rational(1)) throw Error("reference distribution weights must sum to 1");
  }

  const std::vector<Site>& sites = f.support_sites();
  std::vector<std::size_t> keep_pos, avg_pos;
  for (std::size_t p = 0; p < sites.size(); ++p) {
    if (target.sites.test(sites[p]))
      avg_pos.push_back(p);
    else
      keep_pos.push_back(p);
  }

  if (!f.table_backed())
    throw Error("conditional expectation needs a tabulated observable ('" + f.name() + "')");

  const auto q = static_cast<std::uint64_t>(model.alphabet);
  const std::uint64_t keep_total = configuration_count(q, keep_pos.size());
  const std::uint64_t avg_total = configuration_count(q, avg_pos.size());

  std::vector<Rational> table(keep_total, Rational(0));
  std::vector<std::uint8_t> keep_digits, avg_digits, merged(sites.size(), 0);
  for (std::uint64_t kz = 0; kz < keep_total; ++kz) {
    decode_configuration(kz, q, keep_pos.size(), keep_digits);
    Rational acc(0);
    for (std::uint64_t ky = 0; ky < avg_total; ++ky) {
      decode_configuration(ky, q, avg_pos.size(), avg_digits);
      Rational weight(1);
      for (std::size_t a = 0; a < avg_pos.size(); ++a) weight *= ref.symbol_weights[avg_digits[a]];
      for (std::size_t p = 0; p < keep_pos.size(); ++p) merged[keep_pos[p]] = keep_digits[p];
      for (std::size_t p = 0; p < avg_pos.size(); ++p) merged[avg_pos[p]] = avg_digits[p];
      std::uint64_t packed = 0;
      for (std::size_t p = 0; p < sites.size(); ++p) packed = packed * q + merged[p];
      acc += weight * f.table()[packed];
    }
    table[kz] = acc;
  }

  SiteSet new_support = f.support() & ~target.sites;
  return ExteriorObservable::from_table(model, target, new_support, f.name(), std::move(table));
}

}  // namespace detail

/// eta^t_s: carries a measurement on a smaller system to the measurement of
/// the same quantity on a larger one.
inline ExteriorObservable embed(const MorphismStrategy& strategy, const ExteriorObservable& f,
                                const Subvolume& target) {
  if (strategy.kind == MorphismStrategy::Kind::identity) return f.rebased(target);
  return detail::condexp_embed(f, target, *strategy.reference);
}

// ---------------------------------------------------------------------------
// Quantity templates and their direct-limit classes: a template is the rule
// "the same quantity on each system"; a class is the template together with
// a canonical minimal representative system.
// ---------------------------------------------------------------------------

class QuantityTemplate {
 public:
  QuantityTemplate(std::string name, std::function<bool(const Subvolume&)> domain,
                   std::function<ExteriorObservable(const Subvolume&)> realize)
      : name_(std::move(name)), domain_(std::move(domain)), realize_(std::move(realize)) {}

  const std::string& name() const { return name_; }

  bool in_domain(const Subvolume& t) const { return domain_(t); }

  ExteriorObservable realize(const Subvolume& t) const {
    if (!domain_(t))
      throw Error("system '" + t.name + "' outside the domain of quantity '" + name_ + "'");
    return realize_(t);
  }

 private:
  std::string name_;
  std::function<bool(const Subvolume&)> domain_;
  std::function<ExteriorObservable(const Subvolume&)> realize_;
};

struct QuantityClass {
  QuantityTemplate quantity;
  std::size_t canonical_system;  // index into the poset
};

/// sigma_t: sends the realization on t to its equivalence class, keyed here by
/// the canonical representative: the smallest-index minimal system of the
/// quantity's domain within the poset.
inline QuantityClass classify(const QuantityTemplate& quantity, std::size_t t,
                              const SubvolumePoset& poset) {
  if (!quantity.in_domain(poset.at(t)))
    throw Error("system '" + poset.at(t).name + "' outside the domain of quantity '" +
                quantity.name() + "'");
  std::vector<std::size_t> domain;
  for (std::size_t i = 0; i < poset.size(); ++i)
    if (quantity.in_domain(poset.at(i))) domain.push_back(i);
  for (std::size_t i : domain) {
    bool minimal = true;
    for (std::size_t j : domain)
      if (j != i && poset.leq(j, i) && !poset.leq(i, j)) minimal = false;
    if (minimal) return QuantityClass{quantity, i};  // domain is index-ascending
  }
  return QuantityClass{quantity, t};  // unreachable: t itself is in the domain
}

inline ExteriorObservable realize(const QuantityClass& cls, const SubvolumePoset& poset,
                                  std::size_t t) {
  return cls.quantity.realize(poset.at(t));
}

/// W_s contains W_t for s <= t: every function from outside the larger system
/// is one from outside the smaller. Reports one record per observable.
inline std::vector<CheckRecord> check_antitone_inclusion(const SubvolumePoset& poset,
                                                         std::size_t s, std::size_t t,
                                                         std::span<const ExteriorObservable> family) {
  if (!poset.leq(s, t)) throw Error("antitone check needs s <= t in the poset");
  std::vector<CheckRecord> out;
  for (const auto& f : family) {
    CheckRecord r;
    r.name = "antitone/" + poset.at(s).name + "<=" + poset.at(t).name + "/" + f.name();
    r.inputs_digest = digest(f.name() + "|" + poset.at(s).name + "|" + poset.at(t).name);
    const bool in_wt = !(f.support() & poset.at(t).sites).any();
    const bool in_ws = !(f.support() & poset.at(s).sites).any();
    r.pass = !in_wt || in_ws;
    r.residual = r.pass ? 0.0 : 1.0;
    r.note = in_wt ? "member of the larger-system space" : "not in the larger-system space";
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stock templates.
// ---------------------------------------------------------------------------

/// The unit observable and its scalings: constant c on every system.
inline QuantityTemplate constant_template(const ModelSpec& model, Rational c) {
  return QuantityTemplate(
      "constant(" + format_rational(c) + ")", [](const Subvolume&) { return true; },
      [&model, c](const Subvolume& t) {
        return ExteriorObservable::from_table(model, t, SiteSet(model.volume()),
                                              "constant(" + format_rational(c) + ")", {c});
      });
}

/// Spin at a fixed site i, defined on systems that exclude i.
inline QuantityTemplate site_spin_template(const ModelSpec& model, Site site) {
  if (site >= model.volume()) throw Error("site outside lattice");
  return QuantityTemplate(
      "site_spin(" + std::to_string(site) + ")",
      [site](const Subvolume& t) { return !t.sites.test(site); },
      [&model, site](const Subvolume& t) {
        SiteSet support(model.volume());
        support.set(site);
        return ExteriorObservable::from_function(
            model, t, support, "site_spin(" + std::to_string(site) + ")",
            [&model, site](ConfigView w) { return model.spin_values[w[site]]; });
      });
}

/// Mean spin over the exterior of the system.
inline QuantityTemplate mean_exterior_spin_template(const ModelSpec& model) {
  return QuantityTemplate(
      "mean_exterior_spin", [](const Subvolume&) { return true; },
      [&model](const Subvolume& t) {
        const SiteSet ext = t.exterior();
        const auto sites = site_list(ext);
        return ExteriorObservable::from_function(
            model, t, ext, "mean_exterior_spin", [&model, sites](ConfigView w) {
              Rational sum(0);
              for (Site i : sites) sum += model.spin_values[w[i]];
              return sum / Rational(static_cast<long long>(sites.size()));
            });
      });
}

/// Mean bond energy (-J s_i s_j) over active bonds with both ends outside the
/// system; 0 when no such bond exists.
inline QuantityTemplate exterior_bond_energy_template(const ModelSpec& model) {
  return QuantityTemplate(
      "exterior_bond_energy", [](const Subvolume&) { return true; },
      [&model](const Subvolume& t) {
        std::vector<std::pair<Site, Site>> bonds;
        SiteSet support(model.volume());
        for (const auto& [i, j] : model.active_bonds) {
          if (t.sites.test(i) || t.sites.test(j)) continue;
          bonds.emplace_back(i, j);
          support.set(i);
          support.set(j);
        }
        return ExteriorObservable::from_function(
            model, t, support, "exterior_bond_energy", [&model, bonds](ConfigView w) {
              if (bonds.empty()) return Rational(0);
              Rational sum(0);
              for (const auto& [i, j] : bonds)
                sum += -model.coupling * model.spin_values[w[i]] * model.spin_values[w[j]];
              return sum / Rational(static_cast<long long>(bonds.size()));
            });
      });
}

}  // namespace mcspace
