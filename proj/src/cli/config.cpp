#include "qtherm/cli/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace qtherm::cli {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Experiment, std::string_view>, 5> kExperimentNames{{
    {Experiment::OscillatorSweep, "oscillator-sweep"},
    {Experiment::OscillatorJe, "oscillator-je"},
    {Experiment::LatticeRun, "lattice-run"},
    {Experiment::LatticeJe, "lattice-je"},
    {Experiment::Temperature, "temperature"},
}};

constexpr std::uint64_t kDefaultSeed = 20120917;

bool samples_paths(Experiment e) { return e == Experiment::OscillatorJe || e == Experiment::LatticeJe; }
bool uses_lattice(Experiment e) {
  return e == Experiment::LatticeRun || e == Experiment::LatticeJe || e == Experiment::Temperature;
}

// Reads doc[key] into `target` when present. Type errors become violations.
template <typename T>
void read(const json& obj, const char* key, T& target, const std::string& path, std::vector<Violation>& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    target = it->template get<T>();
  } catch (const json::exception&) {
    out.push_back({path + "." + key, "wrong type"});
  }
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& path,
                    std::vector<Violation>& out) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const auto k : known) ok = ok || k == key;
    if (!ok) out.push_back({path.empty() ? key : path + "." + key, "unknown field"});
  }
}

const json* section(const json& doc, const char* key, const std::string& path, std::vector<Violation>& out) {
  const auto it = doc.find(key);
  if (it == doc.end()) return nullptr;
  if (!it->is_object()) {
    out.push_back({path + key, "must be an object"});
    return nullptr;
  }
  return &*it;
}

bool plain_file_name(const std::string& name) {
  return !name.empty() && name.find('/') == std::string::npos && name.find('\\') == std::string::npos &&
         name != "." && name != "..";
}

} // namespace

std::string_view to_string(Experiment e) {
  for (const auto& [kind, name] : kExperimentNames)
    if (kind == e) return name;
  return "unknown";
}

std::optional<Experiment> parse_experiment(std::string_view name) {
  for (const auto& [kind, n] : kExperimentNames)
    if (n == name) return kind;
  return std::nullopt;
}

RunConfig default_config(Experiment e) {
  RunConfig c;
  c.experiment = e;
  c.seed = kDefaultSeed;
  switch (e) {
  case Experiment::OscillatorSweep:
    c.files.table = "fig2.csv";
    break;
  case Experiment::OscillatorJe:
    c.protocol = QuenchProtocol{0.0, 0.6935, 11};
    c.files.table = "fig3b.csv";
    c.files.distribution = "fig3a.csv";
    break;
  case Experiment::LatticeRun:
    c.protocol = QuenchProtocol{13.0, 1.0, 8};
    c.files.distribution = "histogram.csv";
    break;
  case Experiment::LatticeJe:
    c.protocol = QuenchProtocol{13.0, 1.0, 8};
    c.files.table = "fig4d.csv";
    c.files.distribution = "fig4c.csv";
    c.figure_lambda = 14.0;
    break;
  case Experiment::Temperature:
    c.protocol = QuenchProtocol{13.0, 1.0, 8};
    c.files.table = "fig4ab.csv";
    break;
  }
  return c;
}

std::optional<int> figure_station(const RunConfig& c) {
  if (c.protocol.stations < 2) return std::nullopt;
  if (!c.figure_lambda) return c.experiment == Experiment::OscillatorJe || c.protocol.stations < 3 ? 1 : 2;
  for (int i = 1; i < c.protocol.stations; ++i) {
    const double l = c.protocol.lambda(i);
    if (std::abs(l - *c.figure_lambda) <= 1e-9 * std::max(1.0, std::abs(l))) return i;
  }
  return std::nullopt;
}

std::vector<std::string> preset_names() { return {"fig2", "fig3-low", "fig3-high", "fig4", "fig4-temperature"}; }

RunConfig preset(std::string_view name) {
  if (name == "fig2") return default_config(Experiment::OscillatorSweep);
  if (name == "fig3-low") {
    auto c = default_config(Experiment::OscillatorJe);
    c.temperature = 0.35;
    return c;
  }
  if (name == "fig3-high") {
    auto c = default_config(Experiment::OscillatorJe);
    c.protocol.delta_lambda = 4.0;
    c.temperature = 3.52;
    c.files.table = "fig3d.csv";
    c.files.distribution = "fig3c.csv";
    return c;
  }
  if (name == "fig4") {
    auto c = default_config(Experiment::LatticeJe);
    c.temperature = 0.1953;
    return c;
  }
  if (name == "fig4-temperature") return default_config(Experiment::Temperature);
  throw std::out_of_range("unknown preset '" + std::string(name) + "'");
}

std::vector<Violation> validate(const RunConfig& c) {
  std::vector<Violation> v;
  auto need = [&v](bool ok, std::string field, std::string constraint) {
    if (!ok) v.push_back({std::move(field), std::move(constraint)});
  };
  const Experiment e = c.experiment;

  if (samples_paths(e)) {
    need(c.seed.has_value(), "seed", "required for sampling experiments");
    need(c.n_paths >= 1, "n_paths", "must be >= 1");
    need(!c.temperature || (*c.temperature > 0.0 && std::isfinite(*c.temperature)), "temperature",
         "must be positive");
  }

  if (e == Experiment::OscillatorSweep || e == Experiment::OscillatorJe) {
    need(c.oscillator.mass > 0.0, "oscillator.mass", "must be positive");
    need(c.oscillator.stiffness > 0.0, "oscillator.stiffness", "must be positive");
    need(c.oscillator.hbar > 0.0, "oscillator.hbar", "must be positive");
  }
  if (e == Experiment::OscillatorSweep) {
    need(c.sweep.y_min > 0.0, "sweep.y_min", "must be positive");
    need(c.sweep.y_max >= c.sweep.y_min, "sweep.y_max", "must be >= sweep.y_min");
    need(c.sweep.points >= 1, "sweep.points", "must be >= 1");
  }
  if (e == Experiment::OscillatorJe) {
    need(c.tolerances.grid_points >= 3, "tolerances.grid_points", "must be >= 3");
    need(c.tolerances.tail_tol > 0.0 && c.tolerances.tail_tol <= 1e-6, "tolerances.tail_tol",
         "must lie in (0, 1e-6]");
    need(c.temperature || c.protocol.delta_lambda != 0.0, "temperature",
         "required when protocol.delta_lambda is 0");
  }

  if (uses_lattice(e)) {
    const auto& l = c.lattice;
    need(l.sites >= 1 && l.sites <= 64, "lattice.sites", "must lie in [1, 64]");
    need(l.particles >= 1 && l.particles <= l.sites, "lattice.particles", "must satisfy 1 <= N_b <= N");
    need(l.hopping > 0.0, "lattice.hopping", "must be positive");
    need(l.trap >= 0.0, "lattice.trap", "must be non-negative");
    need(std::isfinite(l.center), "lattice.center", "must be finite");
    need(c.tolerances.prob_cutoff > 0.0 && c.tolerances.prob_cutoff <= 1e-6, "tolerances.prob_cutoff",
         "must lie in (0, 1e-6]");
    need(c.tolerances.max_states >= 1, "tolerances.max_states", "must be >= 1");
  }
  if (e == Experiment::LatticeRun || e == Experiment::LatticeJe) {
    need(c.tolerances.dt > 0.0, "tolerances.dt", "must be positive");
    need(c.tolerances.horizon >= 0.0, "tolerances.horizon", "must be non-negative (0 = 2 N^2)");
    const double n2 = static_cast<double>(c.lattice.sites) * c.lattice.sites;
    need(c.tolerances.allow_short_horizon || c.tolerances.horizon == 0.0 || c.tolerances.horizon >= n2,
         "tolerances.horizon", "must be >= N^2 unless allow_short_horizon");
    need(c.tolerances.histogram_bins >= 1, "tolerances.histogram_bins", "must be >= 1");
    need(c.protocol.delta_lambda != 0.0 || c.temperature, "protocol.delta_lambda",
         "must be non-zero when the temperature is derived");
  }
  if (e == Experiment::Temperature || (e == Experiment::LatticeJe && !c.temperature) ||
      e == Experiment::LatticeRun) {
    need(c.temperature_probe.epsilon_fraction > 0.0, "temperature_probe.epsilon_fraction", "must be positive");
    need(std::isfinite(c.temperature_probe.lambda), "temperature_probe.lambda", "must be finite");
  }
  if (e == Experiment::Temperature) {
    bool ok = !c.temperature_probe.delta_lambda_sq.empty();
    for (const double d : c.temperature_probe.delta_lambda_sq) ok = ok && d > 0.0 && std::isfinite(d);
    need(ok, "temperature_probe.delta_lambda_sq", "must be a non-empty list of positive values");
  }

  if (e != Experiment::OscillatorSweep && e != Experiment::Temperature) {
    need(c.protocol.stations >= 2, "protocol.stations", "must be >= 2");
    need(std::isfinite(c.protocol.lambda_start) && std::isfinite(c.protocol.delta_lambda), "protocol",
         "lambda_start and delta_lambda must be finite");
    need(!c.figure_lambda || figure_station(c).has_value(), "figure_lambda",
         "must equal the lambda of one of the first s-1 stations");
  }

  need(c.files.table.empty() || plain_file_name(c.files.table), "files.table", "must be a plain file name");
  need(c.files.distribution.empty() || plain_file_name(c.files.distribution), "files.distribution",
       "must be a plain file name");
  need(plain_file_name(c.files.work_histogram), "files.work_histogram", "must be a plain file name");
  return v;
}

RunConfig parse_config(const json& doc, std::vector<Violation>& v) {
  if (!doc.is_object()) {
    v.push_back({"", "configuration must be a JSON object"});
    return {};
  }
  Experiment kind = Experiment::LatticeJe;
  if (const auto it = doc.find("experiment"); it == doc.end() || !it->is_string()) {
    v.push_back({"experiment", "required string"});
  } else if (const auto e = parse_experiment(it->get<std::string>())) {
    kind = *e;
  } else {
    v.push_back({"experiment", "one of oscillator-sweep, oscillator-je, lattice-run, lattice-je, temperature"});
  }

  RunConfig c = default_config(kind);
  c.seed.reset();
  reject_unknown(doc,
                 {"experiment", "seed", "n_paths", "threads", "temperature", "figure_lambda", "oscillator",
                  "lattice", "protocol", "sweep", "temperature_probe", "tolerances", "files", "output_dir"},
                 "", v);

  if (const auto it = doc.find("seed"); it != doc.end()) {
    if (it->is_number_unsigned()) c.seed = it->get<std::uint64_t>();
    else if (!it->is_null()) v.push_back({"seed", "must be an unsigned 64-bit integer"});
  }
  read(doc, "n_paths", c.n_paths, "", v);
  read(doc, "threads", c.threads, "", v);
  read(doc, "output_dir", c.output_dir, "", v);
  for (const auto* key : {"temperature", "figure_lambda"}) {
    auto& target = std::string_view(key) == "temperature" ? c.temperature : c.figure_lambda;
    if (const auto it = doc.find(key); it != doc.end()) {
      if (it->is_null()) target.reset();
      else if (it->is_number()) target = it->get<double>();
      else v.push_back({key, "must be a number or null"});
    }
  }

  if (const auto* s = section(doc, "oscillator", "", v)) {
    reject_unknown(*s, {"mass", "stiffness", "hbar"}, "oscillator", v);
    read(*s, "mass", c.oscillator.mass, "oscillator", v);
    read(*s, "stiffness", c.oscillator.stiffness, "oscillator", v);
    read(*s, "hbar", c.oscillator.hbar, "oscillator", v);
  }
  if (const auto* s = section(doc, "lattice", "", v)) {
    reject_unknown(*s, {"sites", "particles", "hopping", "trap", "center"}, "lattice", v);
    read(*s, "sites", c.lattice.sites, "lattice", v);
    read(*s, "particles", c.lattice.particles, "lattice", v);
    read(*s, "hopping", c.lattice.hopping, "lattice", v);
    read(*s, "trap", c.lattice.trap, "lattice", v);
    read(*s, "center", c.lattice.center, "lattice", v);
  }
  if (const auto* s = section(doc, "protocol", "", v)) {
    reject_unknown(*s, {"lambda_start", "delta_lambda", "stations"}, "protocol", v);
    read(*s, "lambda_start", c.protocol.lambda_start, "protocol", v);
    read(*s, "delta_lambda", c.protocol.delta_lambda, "protocol", v);
    read(*s, "stations", c.protocol.stations, "protocol", v);
  }
  if (const auto* s = section(doc, "sweep", "", v)) {
    reject_unknown(*s, {"y_min", "y_max", "points", "spacing"}, "sweep", v);
    read(*s, "y_min", c.sweep.y_min, "sweep", v);
    read(*s, "y_max", c.sweep.y_max, "sweep", v);
    read(*s, "points", c.sweep.points, "sweep", v);
    std::string spacing = c.sweep.log_spacing ? "log" : "linear";
    read(*s, "spacing", spacing, "sweep", v);
    if (spacing != "log" && spacing != "linear") v.push_back({"sweep.spacing", "must be 'log' or 'linear'"});
    c.sweep.log_spacing = spacing == "log";
  }
  if (const auto* s = section(doc, "temperature_probe", "", v)) {
    reject_unknown(*s, {"lambda", "epsilon_fraction", "delta_lambda_sq"}, "temperature_probe", v);
    read(*s, "lambda", c.temperature_probe.lambda, "temperature_probe", v);
    read(*s, "epsilon_fraction", c.temperature_probe.epsilon_fraction, "temperature_probe", v);
    read(*s, "delta_lambda_sq", c.temperature_probe.delta_lambda_sq, "temperature_probe", v);
  }
  if (const auto* s = section(doc, "tolerances", "", v)) {
    reject_unknown(*s,
                   {"tail_tol", "prob_cutoff", "max_states", "dt", "horizon", "allow_short_horizon",
                    "histogram_bins", "grid_points"},
                   "tolerances", v);
    auto& t = c.tolerances;
    read(*s, "tail_tol", t.tail_tol, "tolerances", v);
    read(*s, "prob_cutoff", t.prob_cutoff, "tolerances", v);
    read(*s, "max_states", t.max_states, "tolerances", v);
    read(*s, "dt", t.dt, "tolerances", v);
    read(*s, "horizon", t.horizon, "tolerances", v);
    read(*s, "allow_short_horizon", t.allow_short_horizon, "tolerances", v);
    read(*s, "histogram_bins", t.histogram_bins, "tolerances", v);
    read(*s, "grid_points", t.grid_points, "tolerances", v);
  }
  if (const auto* s = section(doc, "files", "", v)) {
    reject_unknown(*s, {"table", "distribution", "work_histogram"}, "files", v);
    read(*s, "table", c.files.table, "files", v);
    read(*s, "distribution", c.files.distribution, "files", v);
    read(*s, "work_histogram", c.files.work_histogram, "files", v);
  }
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["experiment"] = std::string(to_string(c.experiment));
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["n_paths"] = c.n_paths;
  j["threads"] = c.threads;
  j["temperature"] = c.temperature ? json(*c.temperature) : json(nullptr);
  j["figure_lambda"] = c.figure_lambda ? json(*c.figure_lambda) : json(nullptr);
  j["oscillator"] = {{"mass", c.oscillator.mass}, {"stiffness", c.oscillator.stiffness}, {"hbar", c.oscillator.hbar}};
  j["lattice"] = {{"sites", c.lattice.sites},
                  {"particles", c.lattice.particles},
                  {"hopping", c.lattice.hopping},
                  {"trap", c.lattice.trap},
                  {"center", c.lattice.center}};
  j["protocol"] = {{"lambda_start", c.protocol.lambda_start},
                   {"delta_lambda", c.protocol.delta_lambda},
                   {"stations", c.protocol.stations}};
  j["sweep"] = {{"y_min", c.sweep.y_min},
                {"y_max", c.sweep.y_max},
                {"points", c.sweep.points},
                {"spacing", c.sweep.log_spacing ? "log" : "linear"}};
  j["temperature_probe"] = {{"lambda", c.temperature_probe.lambda},
                            {"epsilon_fraction", c.temperature_probe.epsilon_fraction},
                            {"delta_lambda_sq", c.temperature_probe.delta_lambda_sq}};
  const auto& t = c.tolerances;
  j["tolerances"] = {{"tail_tol", t.tail_tol},
                     {"prob_cutoff", t.prob_cutoff},
                     {"max_states", t.max_states},
                     {"dt", t.dt},
                     {"horizon", t.horizon},
                     {"allow_short_horizon", t.allow_short_horizon},
                     {"histogram_bins", t.histogram_bins},
                     {"grid_points", t.grid_points}};
  j["files"] = {{"table", c.files.table},
                {"distribution", c.files.distribution},
                {"work_histogram", c.files.work_histogram}};
  return j;
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("threads");
  const std::string text = j.dump();

  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("config_hash: SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

} // namespace qtherm::cli
