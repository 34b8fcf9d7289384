#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mcspace/config.hpp"
#include "mcspace/measurement.hpp"
#include "mcspace/suite.hpp"

namespace mcspace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> cap;
};

namespace cli_detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);  // binary keeps artifacts byte-stable
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline std::string census_csv(const PhaseSpace& space) {
  std::ostringstream os;
  os << "shell,energy,number,count\n";
  for (std::size_t x = 0; x < space.shell_count(); ++x) {
    const Shell& sh = space.shell(x);
    os << x << ',' << format_rational(sh.energy) << ',' << format_rational(sh.number) << ','
       << sh.count << "\n";
  }
  return os.str();
}

struct Workspace {
  RunConfig cfg;
  ModelSpec model;
  SubvolumePoset poset;
  PhaseSpace space;
};

/// Everything cheap is validated before enumeration starts; only then is the
/// phase space built.
inline Workspace open_workspace(const CliOptions& opt, bool need_system) {
  RunConfig cfg = load_config(opt.config_path);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.workers) cfg.workers = *opt.workers;
  if (opt.cap) cfg.cap = *opt.cap;
  if (cfg.workers == 0) throw ValidationError("run.workers must be at least 1");

  ModelSpec model = build_model(cfg);
  SubvolumePoset poset = build_poset(cfg, model);
  if (need_system && poset.size() == 0)
    throw ValidationError("this command needs at least one system");
  if (!cfg.system.empty() && !poset.find(cfg.system))
    throw ValidationError("run.system names unknown system '" + cfg.system + "'");
  build_cells(cfg);  // malformed intervals must fail before enumeration

  EnumerationOptions eopt;
  eopt.cap = cfg.cap;
  eopt.workers = cfg.workers;
  PhaseSpace space = [&] {
    try {
      return enumerate_shells(model, eopt);
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw ValidationError(e.what());  // over-cap models are an input problem
    }
  }();
  return Workspace{std::move(cfg), std::move(model), std::move(poset), std::move(space)};
}

inline int cmd_shells(const CliOptions& opt, std::ostream& diag) {
  Workspace ws = open_workspace(opt, false);
  std::ostringstream summary;
  summary << "volume=" << ws.space.model().volume() << "\n"
          << "alphabet=" << ws.space.model().alphabet << "\n"
          << "configurations=" << ws.space.total_configurations() << "\n"
          << "shells=" << ws.space.shell_count() << "\n";
  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "shells.csv", census_csv(ws.space));
  write_file(dir / "summary.txt", summary.str());
  diag << "wrote " << (dir / "shells.csv").string() << " (" << ws.space.shell_count()
       << " shells, " << ws.space.total_configurations() << " configurations)\n";
  return 0;
}

inline int cmd_gamma(const CliOptions& opt, std::ostream& diag) {
  Workspace ws = open_workspace(opt, true);
  if (ws.cfg.observables.empty()) throw ValidationError("gamma needs at least one observable");
  const Subvolume& focus = ws.poset.at(focus_system(ws.cfg, ws.poset));

  std::ostringstream os;
  os << "observable,shell,value\n";
  for (const auto& spec : ws.cfg.observables) {
    const RationalObservable f = realize_on_shells(spec, ws.space, focus);
    for (std::size_t x = 0; x < f.size(); ++x)
      os << spec.label() << ',' << x << ',' << format_rational(f[x]) << "\n";
  }
  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "gamma.csv", os.str());
  diag << "wrote " << (dir / "gamma.csv").string() << " (system '" << focus.name << "')\n";
  return 0;
}

inline int cmd_law(const CliOptions& opt, std::ostream& diag) {
  Workspace ws = open_workspace(opt, true);
  if (ws.cfg.observables.empty()) throw ValidationError("law needs at least one observable");
  const Subvolume& focus = ws.poset.at(focus_system(ws.cfg, ws.poset));
  const AlgebraicState state = build_state(ws.cfg, ws.space);
  const BorelSet<Rational> cells = build_cells(ws.cfg);

  std::ostringstream law_os, cells_os;
  law_os << "observable,value,probability\n";
  cells_os << "observable,direct,via_measure,residual\n";
  for (const auto& spec : ws.cfg.observables) {
    const RationalObservable f = realize_on_shells(spec, ws.space, focus);
    const Law<Rational> law = law_of(state, f);
    for (std::size_t i = 0; i < law.values.size(); ++i)
      law_os << spec.label() << ',' << format_rational(law.values[i]) << ','
             << format_double(law.probabilities[i]) << "\n";
    if (!ws.cfg.cells.empty()) {
      const double direct = probability_law(state, f, cells);
      const double via_q = probability_law_via_measure(state, f, cells);
      cells_os << spec.label() << ',' << format_double(direct) << ',' << format_double(via_q)
               << ',' << format_double(std::abs(direct - via_q)) << "\n";
    }
  }
  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "law.csv", law_os.str());
  if (!ws.cfg.cells.empty()) write_file(dir / "cells.csv", cells_os.str());
  diag << "wrote " << (dir / "law.csv").string() << "\n";
  return 0;
}

inline int cmd_spectral(const CliOptions& opt, std::ostream& diag) {
  Workspace ws = open_workspace(opt, true);
  if (ws.cfg.observables.empty()) throw ValidationError("spectral needs at least one observable");
  const Subvolume& focus = ws.poset.at(focus_system(ws.cfg, ws.poset));

  std::ostringstream os, summary;
  os << "observable,lambda,chain\n";
  for (const auto& spec : ws.cfg.observables) {
    const RationalObservable f = realize_on_shells(spec, ws.space, focus);
    const auto d = spectral_decomposition(f);
    for (std::size_t i = 0; i < d.lambdas.size(); ++i)
      os << spec.label() << ',' << format_rational(d.lambdas[i]) << ',' << d.chain[i].to_hex()
         << "\n";
    const bool exact = d.reconstruct() == f;
    summary << spec.label() << ": roundtrip " << (exact ? "exact" : "FAILED") << ", "
            << d.lambdas.size() << " levels\n";
  }
  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "spectral.csv", os.str());
  write_file(dir / "spectral_summary.txt", summary.str());
  diag << "wrote " << (dir / "spectral.csv").string() << "\n";
  return 0;
}

inline int cmd_sample(const CliOptions& opt, std::ostream& diag) {
  Workspace ws = open_workspace(opt, true);
  if (ws.cfg.observables.empty()) throw ValidationError("sample needs at least one observable");
  if (ws.cfg.samples == 0) throw ValidationError("run.samples must be at least 1");
  const Subvolume& focus = ws.poset.at(focus_system(ws.cfg, ws.poset));
  const AlgebraicState state = build_state(ws.cfg, ws.space);

  const ObservableSpec& spec = ws.cfg.observables.front();  // one stream per run
  const RationalObservable f = realize_on_shells(spec, ws.space, focus);
  const MeasurementRecord rec =
      sample_measurement(state, f, ws.cfg.seed, ws.cfg.samples, "configured", spec.label());
  const LawComparison cmp = compare_against_law(rec, state, f);
  const SamplingCheck check = check_sampling(state, f, ws.cfg.samples, ws.cfg.seed);

  std::ostringstream os, summary;
  os << "index,shell,value\n";
  for (std::size_t k = 0; k < rec.n; ++k)
    os << k << ',' << rec.shells[k] << ',' << format_double(rec.outcomes[k]) << "\n";
  summary << "observable=" << spec.label() << "\n"
          << "samples=" << ws.cfg.samples << "\n"
          << "seed=" << ws.cfg.seed << "\n"
          << "sample_mean=" << format_double(check.sample_mean) << "\n"
          << "expectation=" << format_double(check.expected) << "\n"
          << "mean_tolerance=" << format_double(check.tolerance) << "\n"
          << "mean_within_bound=" << (check.pass ? "yes" : "no") << "\n"
          << "law_within_bound=" << (cmp.pass ? "yes" : "no") << "\n";
  for (const auto& [value, frequency] : rec.empirical_law)
    summary << "frequency[" << format_double(value) << "]=" << format_double(frequency) << "\n";
  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "samples.csv", os.str());
  write_file(dir / "sample_summary.txt", summary.str());
  diag << "wrote " << (dir / "samples.csv").string() << " (mean "
       << format_double(check.sample_mean) << ", expectation " << format_double(check.expected)
       << ")\n";
  return 0;
}

inline std::vector<QuantityTemplate> stock_templates(const RunConfig& cfg, const ModelSpec& model) {
  std::vector<QuantityTemplate> out;
  for (const auto& spec : cfg.observables) {
    switch (spec.kind) {
      case ObservableSpec::Kind::site_spin:
        out.push_back(site_spin_template(model, spec.site));
        break;
      case ObservableSpec::Kind::mean_exterior_spin:
        out.push_back(mean_exterior_spin_template(model));
        break;
      case ObservableSpec::Kind::exterior_bond_energy:
        out.push_back(exterior_bond_energy_template(model));
        break;
      case ObservableSpec::Kind::constant:
        out.push_back(constant_template(model, spec.value));
        break;
      default:
        break;  // shell labels do not belong to any one system
    }
  }
  return out;
}

inline int cmd_verify(const CliOptions& opt, std::ostream& diag) {
  Workspace ws = open_workspace(opt, true);
  const AlgebraicState state = build_state(ws.cfg, ws.space);
  const Subvolume& focus = ws.poset.at(focus_system(ws.cfg, ws.poset));
  const MorphismStrategy strategy = build_strategy(ws.cfg, ws.space.model());
  const std::size_t n = ws.space.shell_count();

  std::vector<CheckRecord> records;
  auto absorb = [&records](std::vector<CheckRecord> more) {
    for (auto& r : more) records.push_back(std::move(r));
  };

  absorb(boolean_axioms_check(n, ws.cfg.seed));

  std::vector<RealObservable> generators;
  for (std::size_t x = 0; x < n; ++x)
    generators.push_back(Idempotent::singleton(n, x).to_observable<double>());
  for (const auto& spec : ws.cfg.observables) {
    const RationalObservable f = realize_on_shells(spec, ws.space, focus);
    absorb(measure_axioms_check(f, spec.label()));
    records.push_back(spectral_roundtrip_check(f, spec.label()));
    records.push_back(spectral_chain_check(f, spec.label()));

    const BorelSet<Rational> cells = build_cells(ws.cfg);
    if (!ws.cfg.cells.empty())
      records.push_back(law_consistency_check(state, f, cells, spec.label() + "/cells"));
    const auto values = f.distinct_sorted_values();
    const Rational median = values[values.size() / 2];
    records.push_back(law_consistency_check(
        state, f, BorelSet<Rational>({Interval<Rational>::at_most(median)}),
        spec.label() + "/at_most_median"));

    std::vector<double> dv;
    dv.reserve(f.size());
    for (std::size_t x = 0; x < f.size(); ++x) dv.push_back(to_double(f[x]));
    generators.push_back(RealObservable(std::move(dv)));
  }

  records.push_back(state_structure_check<double>(state, generators, "configured_state"));
  for (std::size_t x = 0; x < n; ++x)
    records.push_back(state_structure_check<double>(AlgebraicState::point_mass(n, x), generators,
                                                    "point_mass_" + std::to_string(x)));

  absorb(mackey_fullness_check(n, 24, ws.cfg.seed));
  absorb(strong_convexity_check(n, 24, ws.cfg.seed));
  absorb(separation_check(n, 24, ws.cfg.seed));

  for (const auto& spec : ws.cfg.observables) {
    if (spec.is_shell_label()) continue;
    const ExteriorObservable ft = realize_exterior(spec, ws.space.model(), focus);
    absorb(compatibility_suite(ws.space, ft, spec.label()));
  }

  const auto templates = stock_templates(ws.cfg, ws.space.model());
  if (!templates.empty() && !ws.poset.nested_pairs().empty()) {
    const Thread thread = thread_from_global(ws.space, ws.poset, state);
    const bool identity = strategy.kind == MorphismStrategy::Kind::identity;
    // Conditional expectation preserves local restrictions only when the
    // global state is the product reference itself; here that is the flat
    // Gibbs state against the uniform reference.
    const bool uniform_global = ws.cfg.state.kind == StateSpec::Kind::gibbs &&
                                ws.cfg.state.beta == 0.0 && ws.cfg.state.lambda == 0.0;
    const bool asserted = identity || uniform_global;
    const double tol = identity ? kStateTolerance : 1e-10;
    absorb(check_homogeneity(thread, ws.poset, strategy, templates, tol, asserted));
    for (const auto& [s, t] : ws.poset.nested_pairs()) {
      std::vector<ExteriorObservable> family;
      for (const auto& q : templates)
        if (q.in_domain(ws.poset.at(t))) family.push_back(q.realize(ws.poset.at(t)));
      absorb(check_antitone_inclusion(ws.poset, s, t, family));
    }
  }

  std::ostringstream text, csv;
  write_report_text(text, records);
  write_report_csv(csv, records);
  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "verify.txt", text.str());
  write_file(dir / "verify.csv", csv.str());
  diag << text.str();
  const bool ok = all_asserted_pass(records);
  diag << (ok ? "verify: all asserted checks passed\n" : "verify: FAILURES above\n");
  return ok ? 0 : 2;
}

/// Same model two sizes up along every axis; systems and site-indexed
/// observables ride along by lattice coordinates.
inline int cmd_stability(const CliOptions& opt, std::ostream& diag) {
  RunConfig cfg = load_config(opt.config_path);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.workers) cfg.workers = *opt.workers;
  if (opt.cap) cfg.cap = *opt.cap;
  if (cfg.state.kind != StateSpec::Kind::gibbs)
    throw ValidationError("stability needs a gibbs state: only its parameters transfer across sizes");
  if (cfg.observables.empty()) throw ValidationError("stability needs at least one observable");

  RunConfig grown = cfg;
  for (int& l : grown.lengths) l += 2;

  ModelSpec base_model = build_model(cfg);
  ModelSpec grown_model = build_model(grown);

  auto map_site = [&](Site s) {
    const auto coords = base_model.geometry.site_coords(s);
    return grown_model.geometry.site_index(coords);
  };
  for (auto& spec : grown.observables)
    if (spec.kind == ObservableSpec::Kind::site_spin) spec.site = map_site(spec.site);
  for (std::size_t i = 0; i < grown.systems.size(); ++i)
    for (auto& s : grown.systems[i].sites) s = map_site(s);
  grown.decoupled_sites.clear();
  for (Site s : cfg.decoupled_sites) grown.decoupled_sites.push_back(map_site(s));
  grown_model = build_model(grown);

  SubvolumePoset base_poset = build_poset(cfg, base_model);
  SubvolumePoset grown_poset = build_poset(grown, grown_model);
  if (base_poset.size() == 0) throw ValidationError("stability needs at least one system");

  EnumerationOptions eopt;
  eopt.cap = cfg.cap;
  eopt.workers = cfg.workers;
  const PhaseSpace base_space = enumerate_shells(base_model, eopt);
  const PhaseSpace grown_space = enumerate_shells(grown_model, eopt);

  const AlgebraicState base_state = gibbs_state(base_space, cfg.state.beta, cfg.state.lambda);
  const AlgebraicState grown_state = gibbs_state(grown_space, cfg.state.beta, cfg.state.lambda);
  const Subvolume& base_focus = base_poset.at(focus_system(cfg, base_poset));
  const Subvolume& grown_focus = grown_poset.at(focus_system(grown, grown_poset));

  std::ostringstream os;
  os << "observable,base,grown,delta\n";
  for (std::size_t i = 0; i < cfg.observables.size(); ++i) {
    const RationalObservable fb = realize_on_shells(cfg.observables[i], base_space, base_focus);
    const RationalObservable fg = realize_on_shells(grown.observables[i], grown_space, grown_focus);
    const double eb = expectation(base_state, fb);
    const double eg = expectation(grown_state, fg);
    os << cfg.observables[i].label() << ',' << format_double(eb) << ',' << format_double(eg)
       << ',' << format_double(eg - eb) << "\n";
  }
  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "stability.csv", os.str());
  write_file(dir / "census_base.csv", census_csv(base_space));
  write_file(dir / "census_grown.csv", census_csv(grown_space));
  diag << "wrote " << (dir / "stability.csv").string() << " (" << base_space.shell_count()
       << " -> " << grown_space.shell_count() << " shells)\n";
  return 0;
}

}  // namespace cli_detail

/// Dispatches one subcommand. Bad input and runtime failures surface as
/// exceptions (exit 1 at the tool boundary); only a failed asserted check in
/// verify yields exit 2.
inline int run_command(const std::string& command, const CliOptions& opt, std::ostream& diag) {
  if (opt.config_path.empty()) throw ValidationError("--config is required");
  if (opt.out_dir.empty()) throw ValidationError("--out is required");
  if (command == "shells") return cli_detail::cmd_shells(opt, diag);
  if (command == "gamma") return cli_detail::cmd_gamma(opt, diag);
  if (command == "law") return cli_detail::cmd_law(opt, diag);
  if (command == "spectral") return cli_detail::cmd_spectral(opt, diag);
  if (command == "sample") return cli_detail::cmd_sample(opt, diag);
  if (command == "verify") return cli_detail::cmd_verify(opt, diag);
  if (command == "stability") return cli_detail::cmd_stability(opt, diag);
  throw ValidationError("unknown command '" + command + "'");
}

}  // namespace mcspace
