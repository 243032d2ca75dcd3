#pragma once

#include "qtherm/lattice.hpp"
#include "qtherm/oscillator.hpp"
#include "qtherm/protocol.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qtherm::cli {

enum class Experiment { OscillatorSweep, OscillatorJe, LatticeRun, LatticeJe, Temperature };

[[nodiscard]] std::string_view to_string(Experiment e);
[[nodiscard]] std::optional<Experiment> parse_experiment(std::string_view name);

struct SweepSettings {
  double y_min = 0.01;
  double y_max = 10.0;
  int points = 200;
  bool log_spacing = true;
};

struct TemperatureProbe {
  double lambda = 15.0;
  double epsilon_fraction = 0.1;
  std::vector<double> delta_lambda_sq = {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
};

struct Tolerances {
  double tail_tol = oscillator::kDefaultTailTolerance;
  double prob_cutoff = 1e-6;
  std::size_t max_states = 2'000'000;
  double dt = 0.1;
  double horizon = 0.0; ///< 0 = 2 N^2
  bool allow_short_horizon = false;
  std::size_t histogram_bins = 50;
  std::size_t grid_points = 4001;
};

struct OutputFiles {
  std::string table;        ///< sweep table or JE profile
  std::string distribution; ///< figure distribution / histogram
  std::string work_histogram = "work_histogram.csv";
};

struct RunConfig {
  Experiment experiment = Experiment::LatticeJe;
  oscillator::OscillatorParams oscillator;
  lattice::LatticeParams lattice;
  QuenchProtocol protocol;
  std::optional<double> temperature; ///< JE temperature; derived from the model when absent
  std::optional<std::uint64_t> seed;
  std::size_t n_paths = 100'000;
  unsigned threads = 0;
  /// Station whose distribution is written to files.distribution; absent =
  /// second station (first for oscillator runs).
  std::optional<double> figure_lambda;
  SweepSettings sweep;
  TemperatureProbe temperature_probe;
  Tolerances tolerances;
  OutputFiles files;
  std::string output_dir = "out";
};

/// Defaults for an experiment kind, including a seed.
[[nodiscard]] RunConfig default_config(Experiment e);

/// 1-based station whose distribution goes to files.distribution.
[[nodiscard]] std::optional<int> figure_station(const RunConfig& config);

[[nodiscard]] std::vector<std::string> preset_names();
/// Throws std::out_of_range for an unknown name.
[[nodiscard]] RunConfig preset(std::string_view name);

struct Violation {
  std::string field;
  std::string constraint;
};

/// Empty iff `run` would start.
[[nodiscard]] std::vector<Violation> validate(const RunConfig& config);

/// Parses a configuration document on top of the defaults for its
/// experiment kind. Unknown keys and type mismatches are reported as
/// violations; `seed` is only set when the document carries one.
[[nodiscard]] RunConfig parse_config(const nlohmann::json& doc, std::vector<Violation>& violations);

/// Normalized document: every field spelled out, output directory omitted.
[[nodiscard]] nlohmann::json to_json(const RunConfig& config);

/// SHA-256 (hex) of the normalized document without execution-only fields
/// (thread count).
[[nodiscard]] std::string config_hash(const RunConfig& config);

} // namespace qtherm::cli
