#include "qtherm/cli/runner.hpp"

#include "qtherm/ensemble.hpp"
#include "qtherm/error.hpp"
#include "qtherm/jarzynski.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace qtherm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kWorkHistogramBins = 100;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string station_file(int station, const char* what) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "station_%02d_%s.csv", station, what);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Emitter {
public:
  Emitter(const RunConfig& config, RunOutcome& outcome, const RunOptions& options)
      : dir_(config.output_dir), outcome_(outcome), log_(options.log) {}

  std::ofstream open(const std::string& name) {
    if (name.empty()) throw std::logic_error("empty output file name");
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    outcome_.files.push_back(path);
    return out;
  }

  void table(const std::string& name, std::initializer_list<const char*> header,
             const std::vector<std::vector<double>>& columns) {
    auto out = open(name);
    bool first = true;
    for (const char* h : header) {
      out << (first ? "" : ",") << h;
      first = false;
    }
    out << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << num(columns[c][r]);
      out << '\n';
    }
  }

  void distribution(const std::string& name, const PositionDistribution& d) {
    table(name, {"x", "f"}, {d.x, d.density});
  }

  void ensemble(const std::string& name, const DiagonalEnsemble& e) {
    auto out = open(name);
    write_ensemble_csv(out, e);
  }

  void series(const std::string& name, const lattice::TimeSeries& s) {
    table(name, {"t", "x"}, {s.times, s.center_of_mass});
  }

  void work_histogram(const std::string& name, const jarzynski::WorkDistribution& work) {
    const auto [lo_it, hi_it] = std::minmax_element(work.samples.begin(), work.samples.end());
    double lo = lo_it == work.samples.end() ? 0.0 : *lo_it;
    double hi = hi_it == work.samples.end() ? 0.0 : *hi_it;
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double width = (hi - lo) / kWorkHistogramBins;
    std::vector<double> centers(kWorkHistogramBins), counts(kWorkHistogramBins, 0.0);
    for (std::size_t b = 0; b < kWorkHistogramBins; ++b) centers[b] = lo + (b + 0.5) * width;
    for (const double w : work.samples) {
      auto b = static_cast<std::size_t>((w - lo) / width);
      counts[std::min(b, kWorkHistogramBins - 1)] += 1.0;
    }
    table(name, {"W", "count"}, {centers, counts});
  }

  void profile(const std::string& name, const jarzynski::FreeEnergyProfile& p) {
    table(name, {"lambda", "dF_JE", "dF_target", "work_std", "ESS"},
          {p.lambdas, p.delta_f, p.target, p.work_std, p.ess});
  }

  void note(const std::string& line) {
    if (log_) *log_ << line << '\n' << std::flush;
  }

private:
  fs::path dir_;
  RunOutcome& outcome_;
  std::ostream* log_;
};

json profile_json(const jarzynski::FreeEnergyProfile& p) {
  json j;
  j["lambda"] = p.lambdas;
  j["delta_f"] = p.delta_f;
  j["target"] = p.target;
  json jk = json::array();
  for (const double e : p.jackknife) jk.push_back(finite_or_null(e));
  j["jackknife_error"] = jk;
  j["ess"] = p.ess;
  j["undersampled"] = p.undersampled;
  return j;
}

void append_warnings(json& manifest, const std::vector<std::string>& warnings, const std::string& prefix = "") {
  for (const auto& w : warnings) manifest["warnings"].push_back(prefix + w);
}

jarzynski::SamplerOptions sampler(const RunConfig& c) {
  return {c.n_paths, c.seed.value_or(0), c.threads};
}

lattice::EnsembleOptions ensemble_options(const RunConfig& c) {
  lattice::EnsembleOptions o;
  o.prob_cutoff = c.tolerances.prob_cutoff;
  o.max_states = c.tolerances.max_states;
  return o;
}

lattice::EvolutionOptions evolution_options(const RunConfig& c) {
  return {c.tolerances.horizon, c.tolerances.dt, c.tolerances.allow_short_horizon};
}

json temperature_json(const lattice::LatticeTemperature& t) {
  return {{"temperature", finite_or_null(t.estimate.temperature)},
          {"beta", finite_or_null(t.estimate.beta)},
          {"entropy", t.entropy},
          {"energy", t.energy},
          {"captured_mass", t.captured_mass},
          {"captured_mass_shifted", t.captured_mass_shifted}};
}

void run_sweep(const RunConfig& c, Emitter& emit, json& manifest) {
  const auto& s = c.sweep;
  std::vector<double> ys, t, tb, sd, sb;
  for (int i = 0; i < s.points; ++i) {
    const double f = s.points == 1 ? 0.0 : static_cast<double>(i) / (s.points - 1);
    const double y = s.log_spacing ? s.y_min * std::pow(s.y_max / s.y_min, f) : s.y_min + f * (s.y_max - s.y_min);
    const auto ref = oscillator::boson_reference(c.oscillator, y);
    ys.push_back(y);
    t.push_back(oscillator::temperature_closed_form(c.oscillator, y));
    tb.push_back(ref.temperature);
    sd.push_back(oscillator::entropy_closed_form(y));
    sb.push_back(ref.entropy);
  }
  emit.table(c.files.table, {"y", "T", "T_B", "S", "S_B"}, {ys, t, tb, sd, sb});
  manifest["points"] = ys.size();
}

void run_oscillator_je(const RunConfig& c, Emitter& emit, json& manifest) {
  const auto& p = c.oscillator;
  const double y = oscillator::quench_strength(p, c.protocol.delta_lambda);
  const double temperature = c.temperature ? *c.temperature : oscillator::temperature_closed_form(p, y);
  manifest["quench_strength"] = y;
  manifest["temperature"] = temperature;
  manifest["temperature_source"] = c.temperature ? "config" : "diagonal-entropy";
  if (y > 0.0) manifest["temperature_closed_form"] = oscillator::temperature_closed_form(p, y);

  emit.note("sampling " + std::to_string(c.n_paths) + " work paths over " + std::to_string(c.protocol.stations) +
            " stations");
  const auto result = jarzynski::oscillator_profile(p, c.protocol, 1.0 / temperature, sampler(c),
                                                    c.tolerances.grid_points, c.tolerances.tail_tol);

  json captured = json::array();
  for (int i = 1; i < c.protocol.stations; ++i) {
    const auto ens = oscillator::poisson_ensemble(p, c.protocol.lambda(i), c.protocol.delta_lambda,
                                                  c.tolerances.tail_tol);
    captured.push_back(1.0 - ens.discarded_mass);
    emit.ensemble(station_file(i, "ensemble"), ens);
    emit.distribution(station_file(i, "distribution"), result.distributions[static_cast<std::size_t>(i - 1)]);
  }
  manifest["captured_mass"] = captured;

  const int fig = figure_station(c).value();
  if (!c.files.distribution.empty())
    emit.distribution(c.files.distribution, result.distributions[static_cast<std::size_t>(fig - 1)]);
  if (!c.files.table.empty()) emit.profile(c.files.table, result.profile);
  emit.work_histogram(c.files.work_histogram, result.total_work);

  const auto low_t = oscillator::free_energy_low_T(p, c.protocol, temperature);
  manifest["low_temperature_free_energy"] = {
      {"full", low_t.full}, {"target", low_t.target}, {"canonical", low_t.canonical}};
  manifest["profile"] = profile_json(result.profile);
  manifest["total_work"] = {{"mean", result.total_work.mean}, {"std", result.total_work.stddev}};
  append_warnings(manifest, result.profile.warnings);
}

// Ensembles, temperature diagnostics and their manifest entries for every
// station of a lattice protocol.
void lattice_station_diagnostics(const RunConfig& c, lattice::SpectrumCache& cache, Emitter& emit,
                                 json& manifest) {
  const double dl = c.protocol.delta_lambda;
  const double eps = c.temperature_probe.epsilon_fraction * dl;
  std::vector<double> lambdas, temps, betas, entropies, energies, masses, shifted;
  json captured = json::array();
  for (int i = 1; i < c.protocol.stations; ++i) {
    const double lambda = c.protocol.lambda(i);
    const auto ens = lattice::diagonal_ensemble(cache, lambda, dl, ensemble_options(c));
    emit.ensemble(station_file(i, "ensemble"), ens.ensemble);
    captured.push_back(ens.captured_mass);
    const auto t = lattice::lattice_temperature(cache, lambda, dl, eps, ensemble_options(c));
    lambdas.push_back(lambda);
    temps.push_back(t.estimate.temperature);
    betas.push_back(t.estimate.beta);
    entropies.push_back(t.entropy);
    energies.push_back(t.energy);
    masses.push_back(t.captured_mass);
    shifted.push_back(t.captured_mass_shifted);
  }
  emit.table("station_temperatures.csv",
             {"lambda", "T", "beta", "S", "E", "captured_mass", "captured_mass_shifted"},
             {lambdas, temps, betas, entropies, energies, masses, shifted});
  manifest["captured_mass"] = captured;
  json per_station = json::array();
  for (std::size_t k = 0; k < lambdas.size(); ++k)
    per_station.push_back({{"lambda", lambdas[k]}, {"temperature", finite_or_null(temps[k])}});
  manifest["station_temperatures"] = per_station;
}

void record_series(const lattice::TimeSeries& s, int station, json& manifest) {
  manifest["evolution"].push_back({{"station", station},
                                   {"samples", s.times.size()},
                                   {"duration", s.duration()},
                                   {"max_particle_error", s.max_particle_error},
                                   {"max_energy_drift", s.max_energy_drift},
                                   {"max_edge_occupancy", s.max_edge_occupancy},
                                   {"max_orthonormality_error", s.max_orthonormality_error}});
  append_warnings(manifest, s.warnings, "station " + std::to_string(station) + ": ");
}

void run_lattice(const RunConfig& c, Emitter& emit, json& manifest) {
  lattice::SpectrumCache cache(c.lattice);
  lattice_station_diagnostics(c, cache, emit, manifest);
  const auto evo = evolution_options(c);
  const int fig = figure_station(c).value();
  for (int i = 1; i < c.protocol.stations; ++i) {
    const double lambda = c.protocol.lambda(i);
    emit.note("evolving station " + std::to_string(i) + " at lambda = " + num(lambda));
    const auto before = cache.get(lambda - c.protocol.delta_lambda);
    const auto after = cache.get(lambda);
    const auto series = lattice::evolve_center_of_mass(lattice::ground_state(*before, c.lattice.particles), *after, evo);
    const auto hist = lattice::time_average_distribution(series, c.tolerances.histogram_bins, evo.allow_short);
    emit.series(station_file(i, "series"), series);
    emit.distribution(station_file(i, "histogram"), hist);
    if (i == fig && !c.files.distribution.empty()) emit.distribution(c.files.distribution, hist);
    record_series(series, i, manifest);
  }
}

void run_lattice_je(const RunConfig& c, Emitter& emit, json& manifest) {
  lattice::SpectrumCache cache(c.lattice);
  lattice_station_diagnostics(c, cache, emit, manifest);

  double temperature = 0.0;
  if (c.temperature) {
    temperature = *c.temperature;
    manifest["temperature_source"] = "config";
  } else {
    const double dl = c.protocol.delta_lambda;
    const auto t = lattice::lattice_temperature(cache, c.temperature_probe.lambda, dl,
                                                c.temperature_probe.epsilon_fraction * dl, ensemble_options(c));
    temperature = t.estimate.temperature;
    manifest["temperature_source"] = "diagonal-entropy";
    manifest["temperature_probe"] = temperature_json(t);
    if (!(temperature > 0.0) || !std::isfinite(temperature))
      throw ConvergenceError("derived temperature " + num(temperature) + " is not usable for the work average");
  }
  manifest["temperature"] = temperature;

  emit.note("evolving " + std::to_string(c.protocol.stations - 1) + " stations and sampling " +
            std::to_string(c.n_paths) + " work paths");
  const auto result = jarzynski::lattice_profile(c.lattice, c.protocol, 1.0 / temperature, sampler(c),
                                                 evolution_options(c), c.tolerances.histogram_bins);
  const int fig = figure_station(c).value();
  for (int i = 1; i < c.protocol.stations; ++i) {
    const auto k = static_cast<std::size_t>(i - 1);
    emit.series(station_file(i, "series"), result.series[k]);
    emit.distribution(station_file(i, "histogram"), result.distributions[k]);
    record_series(result.series[k], i, manifest);
  }
  if (!c.files.distribution.empty())
    emit.distribution(c.files.distribution, result.distributions[static_cast<std::size_t>(fig - 1)]);
  if (!c.files.table.empty()) emit.profile(c.files.table, result.profile);
  emit.work_histogram(c.files.work_histogram, result.total_work);
  manifest["profile"] = profile_json(result.profile);
  manifest["total_work"] = {{"mean", result.total_work.mean}, {"std", result.total_work.stddev}};
  append_warnings(manifest, result.profile.warnings);
}

void run_temperature(const RunConfig& c, Emitter& emit, json& manifest) {
  lattice::SpectrumCache cache(c.lattice);
  const auto& probe = c.temperature_probe;
  std::vector<double> dl2, dls, energies, entropies, temps, betas, masses, shifted;
  json rows = json::array();
  for (const double d2 : probe.delta_lambda_sq) {
    const double dl = std::sqrt(d2);
    emit.note("temperature at dl^2 = " + num(d2));
    const auto t = lattice::lattice_temperature(cache, probe.lambda, dl, probe.epsilon_fraction * dl,
                                                ensemble_options(c));
    dl2.push_back(d2);
    dls.push_back(dl);
    energies.push_back(t.energy);
    entropies.push_back(t.entropy);
    temps.push_back(t.estimate.temperature);
    betas.push_back(t.estimate.beta);
    masses.push_back(t.captured_mass);
    shifted.push_back(t.captured_mass_shifted);
    auto row = temperature_json(t);
    row["delta_lambda_sq"] = d2;
    rows.push_back(row);
  }
  emit.table(c.files.table, {"dl2", "dl", "E", "S", "T", "beta", "captured_mass", "captured_mass_shifted"},
             {dl2, dls, energies, entropies, temps, betas, masses, shifted});
  manifest["temperatures"] = rows;
  manifest["captured_mass"] = masses;
}

} // namespace

json violations_json(const std::vector<Violation>& violations) {
  json list = json::array();
  for (const auto& v : violations) list.push_back({{"field", v.field}, {"constraint", v.constraint}});
  return {{"status", "error"}, {"kind", "validation"}, {"violations", list}};
}

RunOutcome run(const RunConfig& config, const RunOptions& options) {
  RunOutcome outcome;
  if (const auto violations = validate(config); !violations.empty()) {
    outcome.exit_code = kExitValidation;
    outcome.error = violations_json(violations);
    return outcome;
  }

  const auto start = std::chrono::steady_clock::now();
  json manifest;
  manifest["experiment"] = std::string(to_string(config.experiment));
  manifest["config_hash"] = config_hash(config);
  manifest["config"] = to_json(config);
  manifest["warnings"] = json::array();

  auto fail = [&outcome](int code, const char* kind, const std::string& message) {
    outcome.exit_code = code;
    outcome.error = {{"status", "error"}, {"kind", kind}, {"message", message}};
    return outcome;
  };

  try {
    fs::create_directories(config.output_dir);
    Emitter emit(config, outcome, options);
    switch (config.experiment) {
    case Experiment::OscillatorSweep: run_sweep(config, emit, manifest); break;
    case Experiment::OscillatorJe: run_oscillator_je(config, emit, manifest); break;
    case Experiment::LatticeRun: run_lattice(config, emit, manifest); break;
    case Experiment::LatticeJe: run_lattice_je(config, emit, manifest); break;
    case Experiment::Temperature: run_temperature(config, emit, manifest); break;
    }

    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
    manifest["wall_time_s"] = wall.count();
    json files = json::array();
    for (const auto& f : outcome.files) files.push_back(f.filename().string());
    manifest["files"] = files;

    const fs::path path = fs::path(config.output_dir) / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return fail(kExitInternal, "io", "cannot open " + path.string() + " for writing");
    out << manifest.dump(2) << '\n';
    outcome.files.push_back(path);
    outcome.manifest = std::move(manifest);
  } catch (const ValidationError& e) {
    return fail(kExitValidation, "validation", e.what());
  } catch (const ConvergenceError& e) {
    return fail(kExitConvergence, "convergence", e.what());
  } catch (const DegenerateEnergyError& e) {
    return fail(kExitConvergence, "convergence", e.what());
  } catch (const std::exception& e) {
    return fail(kExitInternal, "internal", e.what());
  }
  return outcome;
}

} // namespace qtherm::cli
