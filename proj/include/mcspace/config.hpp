#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcspace/ensemble.hpp"
#include "mcspace/lattice.hpp"
#include "mcspace/model.hpp"
#include "mcspace/texture.hpp"

namespace mcspace {

/// Raised for malformed or inconsistent configuration; callers map it to a
/// distinct exit status so bad inputs never look like failed checks.
class ValidationError : public Error {
 public:
  using Error::Error;
};

struct SystemSpec {
  std::string name;
  std::vector<Site> sites;
};

struct ObservableSpec {
  enum class Kind {
    site_spin,
    mean_exterior_spin,
    exterior_bond_energy,
    constant,
    energy,
    number,
    energy_per_site,
    number_per_site
  };
  Kind kind = Kind::mean_exterior_spin;
  Site site = 0;       // site_spin
  Rational value{0};   // constant

  /// Shell labels live on the phase space directly; the rest are exterior
  /// observables that reach it through gamma.
  bool is_shell_label() const {
    return kind == Kind::energy || kind == Kind::number || kind == Kind::energy_per_site ||
           kind == Kind::number_per_site;
  }

  std::string label() const {
    switch (kind) {
      case Kind::site_spin: return "site_spin(" + std::to_string(site) + ")";
      case Kind::mean_exterior_spin: return "mean_exterior_spin";
      case Kind::exterior_bond_energy: return "exterior_bond_energy";
      case Kind::constant: return "constant(" + format_rational(value) + ")";
      case Kind::energy: return "energy";
      case Kind::number: return "number";
      case Kind::energy_per_site: return "energy_per_site";
      case Kind::number_per_site: return "number_per_site";
    }
    return "?";
  }
};

struct StateSpec {
  enum class Kind { gibbs, microcanonical, weights };
  Kind kind = Kind::gibbs;
  double beta = 0.0;
  double lambda = 0.0;
  Rational energy{0};   // microcanonical shell labels
  Rational number{0};
  std::vector<double> weights;
};

struct RunConfig {
  int dimension = 1;
  std::vector<int> lengths;
  int alphabet = 2;
  std::vector<Rational> spins;
  Rational coupling{1};
  Rational field{0};
  std::vector<Site> decoupled_sites;

  std::vector<SystemSpec> systems;
  std::vector<ObservableSpec> observables;
  StateSpec state;
  std::vector<Interval<Rational>> cells;

  unsigned workers = 1;
  std::uint64_t cap = kDefaultEnumerationCap;
  std::uint64_t seed = 1;
  std::size_t samples = 1000;
  std::string system;               // focus system for gamma/law/sample
  std::string strategy = "identity";
};

namespace detail {

using Json = nlohmann::json;

inline const Json& need(const Json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ValidationError(std::string(where) + ": missing required key '" + key + "'");
  return *it;
}

inline Rational rational_field(const Json& j, const char* where) {
  try {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long long>());
  } catch (const Error& e) {
    throw ValidationError(std::string(where) + ": " + e.what());
  }
  throw ValidationError(std::string(where) + ": expected a rational as \"p/q\" string or integer");
}

inline ObservableSpec parse_observable(const Json& j) {
  if (!j.is_object()) throw ValidationError("observables: each entry must be an object");
  const std::string kind = need(j, "kind", "observables").get<std::string>();
  ObservableSpec spec;
  if (kind == "site_spin") {
    spec.kind = ObservableSpec::Kind::site_spin;
    spec.site = need(j, "site", "observables.site_spin").get<Site>();
  } else if (kind == "mean_exterior_spin") {
    spec.kind = ObservableSpec::Kind::mean_exterior_spin;
  } else if (kind == "exterior_bond_energy") {
    spec.kind = ObservableSpec::Kind::exterior_bond_energy;
  } else if (kind == "constant") {
    spec.kind = ObservableSpec::Kind::constant;
    spec.value = rational_field(need(j, "value", "observables.constant"), "observables.constant.value");
  } else if (kind == "energy") {
    spec.kind = ObservableSpec::Kind::energy;
  } else if (kind == "number") {
    spec.kind = ObservableSpec::Kind::number;
  } else if (kind == "energy_per_site") {
    spec.kind = ObservableSpec::Kind::energy_per_site;
  } else if (kind == "number_per_site") {
    spec.kind = ObservableSpec::Kind::number_per_site;
  } else {
    throw ValidationError("observables: unknown kind '" + kind + "'");
  }
  return spec;
}

inline Interval<Rational> parse_cell(const Json& j) {
  if (!j.is_object()) throw ValidationError("cells: each entry must be an object");
  Interval<Rational> iv = Interval<Rational>::whole_line();
  if (j.contains("point")) {
    const Rational v = rational_field(j.at("point"), "cells.point");
    return Interval<Rational>::point(v);
  }
  if (j.contains("lo")) iv.lo = rational_field(j.at("lo"), "cells.lo");
  if (j.contains("hi")) iv.hi = rational_field(j.at("hi"), "cells.hi");
  if (j.contains("lo_closed")) iv.lo_closed = j.at("lo_closed").get<bool>();
  if (j.contains("hi_closed")) iv.hi_closed = j.at("hi_closed").get<bool>();
  if (iv.lo && iv.hi) {
    if (*iv.hi < *iv.lo || (*iv.lo == *iv.hi && !(iv.lo_closed && iv.hi_closed)))
      throw ValidationError("cells: malformed interval, empty endpoint order");
  }
  return iv;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::need;
  if (!j.is_object()) throw ValidationError("configuration root must be an object");
  RunConfig cfg;

  const auto& model = need(j, "model", "config");
  cfg.dimension = need(model, "dimension", "model").get<int>();
  for (const auto& l : need(model, "lengths", "model")) cfg.lengths.push_back(l.get<int>());
  cfg.alphabet = need(model, "alphabet", "model").get<int>();
  for (const auto& s : need(model, "spins", "model"))
    cfg.spins.push_back(detail::rational_field(s, "model.spins"));
  cfg.coupling = detail::rational_field(need(model, "coupling", "model"), "model.coupling");
  cfg.field = detail::rational_field(need(model, "field", "model"), "model.field");
  if (model.contains("decoupled_sites"))
    for (const auto& s : model.at("decoupled_sites")) cfg.decoupled_sites.push_back(s.get<Site>());

  if (j.contains("systems")) {
    for (const auto& sys : j.at("systems")) {
      SystemSpec spec;
      spec.name = need(sys, "name", "systems").get<std::string>();
      for (const auto& s : need(sys, "sites", "systems")) spec.sites.push_back(s.get<Site>());
      cfg.systems.push_back(std::move(spec));
    }
  }

  if (j.contains("observables"))
    for (const auto& o : j.at("observables")) cfg.observables.push_back(detail::parse_observable(o));

  if (j.contains("state")) {
    const auto& st = j.at("state");
    const std::string kind = need(st, "kind", "state").get<std::string>();
    if (kind == "gibbs") {
      cfg.state.kind = StateSpec::Kind::gibbs;
      if (st.contains("beta")) cfg.state.beta = st.at("beta").get<double>();
      if (st.contains("lambda")) cfg.state.lambda = st.at("lambda").get<double>();
    } else if (kind == "microcanonical") {
      cfg.state.kind = StateSpec::Kind::microcanonical;
      cfg.state.energy = detail::rational_field(need(st, "energy", "state"), "state.energy");
      cfg.state.number = detail::rational_field(need(st, "number", "state"), "state.number");
    } else if (kind == "weights") {
      cfg.state.kind = StateSpec::Kind::weights;
      for (const auto& w : need(st, "weights", "state"))
        cfg.state.weights.push_back(w.get<double>());
    } else {
      throw ValidationError("state: unknown kind '" + kind + "'");
    }
  }

  if (j.contains("cells"))
    for (const auto& c : j.at("cells")) cfg.cells.push_back(detail::parse_cell(c));

  if (j.contains("run")) {
    const auto& run = j.at("run");
    if (run.contains("workers")) cfg.workers = run.at("workers").get<unsigned>();
    if (run.contains("cap")) cfg.cap = run.at("cap").get<std::uint64_t>();
    if (run.contains("seed")) cfg.seed = run.at("seed").get<std::uint64_t>();
    if (run.contains("samples")) cfg.samples = run.at("samples").get<std::size_t>();
    if (run.contains("system")) cfg.system = run.at("system").get<std::string>();
    if (run.contains("strategy")) cfg.strategy = run.at("strategy").get<std::string>();
  }

  if (cfg.workers == 0) throw ValidationError("run.workers must be at least 1");
  if (cfg.strategy != "identity" && cfg.strategy != "conditional_expectation")
    throw ValidationError("run.strategy must be 'identity' or 'conditional_expectation'");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open configuration file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("configuration '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Realizing the configured objects. Model and poset construction revalidate
// through the library constructors; their errors are rethrown as validation
// errors because they describe the input, not the computation.
// ---------------------------------------------------------------------------

inline ModelSpec build_model(const RunConfig& cfg) {
  try {
    LatticeGeometry geom = build_geometry(cfg.dimension, cfg.lengths);
    return make_model(std::move(geom), cfg.alphabet, cfg.spins, cfg.coupling, cfg.field,
                      cfg.decoupled_sites);
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
}

inline SubvolumePoset build_poset(const RunConfig& cfg, const ModelSpec& model) {
  try {
    std::vector<Subvolume> systems;
    systems.reserve(cfg.systems.size());
    for (const auto& spec : cfg.systems)
      systems.push_back(make_subvolume(spec.name, model.volume(), spec.sites));
    return SubvolumePoset(std::move(systems));
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
}

inline MorphismStrategy build_strategy(const RunConfig& cfg, const ModelSpec& model) {
  if (cfg.strategy == "identity") return MorphismStrategy::identity();
  return MorphismStrategy::conditional_expectation(uniform_reference(model.alphabet));
}

inline AlgebraicState build_state(const RunConfig& cfg, const PhaseSpace& space) {
  switch (cfg.state.kind) {
    case StateSpec::Kind::gibbs:
      return gibbs_state(space, cfg.state.beta, cfg.state.lambda);
    case StateSpec::Kind::microcanonical: {
      const auto x = space.find_labels(cfg.state.energy, cfg.state.number);
      if (!x)
        throw ValidationError("state: no shell with energy " + format_rational(cfg.state.energy) +
                              " and number " + format_rational(cfg.state.number));
      return microcanonical_state(space, *x);
    }
    case StateSpec::Kind::weights: {
      if (cfg.state.weights.size() != space.shell_count())
        throw ValidationError("state: " + std::to_string(cfg.state.weights.size()) +
                              " weights for " + std::to_string(space.shell_count()) + " shells");
      try {
        return AlgebraicState(cfg.state.weights);
      } catch (const Error& e) {
        throw ValidationError(e.what());
      }
    }
  }
  throw ValidationError("state: unknown kind");
}

/// The focus system for gamma/law/sample. Defaults to the first configured
/// system when the run block names none.
inline std::size_t focus_system(const RunConfig& cfg, const SubvolumePoset& poset) {
  if (poset.size() == 0) throw ValidationError("this command needs at least one system");
  if (cfg.system.empty()) return 0;
  const auto idx = poset.find(cfg.system);
  if (!idx) throw ValidationError("run.system names unknown system '" + cfg.system + "'");
  return *idx;
}

inline ExteriorObservable realize_exterior(const ObservableSpec& spec, const ModelSpec& model,
                                           const Subvolume& system) {
  switch (spec.kind) {
    case ObservableSpec::Kind::site_spin:
      return site_spin_template(model, spec.site).realize(system);
    case ObservableSpec::Kind::mean_exterior_spin:
      return mean_exterior_spin_template(model).realize(system);
    case ObservableSpec::Kind::exterior_bond_energy:
      return exterior_bond_energy_template(model).realize(system);
    case ObservableSpec::Kind::constant:
      return constant_template(model, spec.value).realize(system);
    default:
      throw Error("observable '" + spec.label() + "' is a shell label, not an exterior observable");
  }
}

/// Every configured observable as a function on the phase space: labels
/// directly, exterior observables through gamma at the focus system.
inline RationalObservable realize_on_shells(const ObservableSpec& spec, const PhaseSpace& space,
                                            const Subvolume& system) {
  switch (spec.kind) {
    case ObservableSpec::Kind::energy: return energy_observable(space);
    case ObservableSpec::Kind::number: return number_observable(space);
    case ObservableSpec::Kind::energy_per_site: return energy_per_site_observable(space);
    case ObservableSpec::Kind::number_per_site: return number_per_site_observable(space);
    default:
      return gamma(space, realize_exterior(spec, space.model(), system));
  }
}

inline BorelSet<Rational> build_cells(const RunConfig& cfg) {
  return BorelSet<Rational>(cfg.cells);
}

}  // namespace mcspace
