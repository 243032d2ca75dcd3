// qtherm: run a configured quench / work-average experiment and write its
// data files.

#include "qtherm/cli/config.hpp"
#include "qtherm/cli/runner.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace qtherm::cli;
using nlohmann::json;

int emit_error(const json& error) {
  std::cerr << error.dump() << '\n';
  return error.value("kind", "") == "validation" ? kExitValidation : kExitInternal;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diagonal-ensemble thermodynamics and work-average free-energy runner"};
  std::string config_path;
  std::string preset_name;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool quiet = false;
  bool print_config = false;
  bool list_presets = false;

  auto* config_opt = app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--preset", preset_name, "built-in configuration")->excludes(config_opt);
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--seed", seed, "random seed override");
  app.add_option("--threads", threads, "worker threads for path sampling (0 = all cores)");
  app.add_flag("--quiet", quiet, "no progress output");
  app.add_flag("--print-config", print_config, "print the normalized configuration and exit");
  app.add_flag("--list-presets", list_presets, "list built-in configurations and exit");
  CLI11_PARSE(app, argc, argv);

  if (list_presets) {
    for (const auto& name : preset_names())
      std::cout << name << '\t' << to_string(preset(name).experiment) << '\n';
    return kExitOk;
  }

  RunConfig config;
  if (!preset_name.empty()) {
    try {
      config = preset(preset_name);
    } catch (const std::out_of_range&) {
      return emit_error(violations_json({{"preset", "unknown preset '" + preset_name + "'"}}));
    }
  } else if (!config_path.empty()) {
    std::ifstream in(config_path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      return emit_error(violations_json({{"config", std::string("not valid JSON: ") + e.what()}}));
    }
    std::vector<Violation> violations;
    config = parse_config(doc, violations);
    if (!violations.empty()) return emit_error(violations_json(violations));
  } else {
    return emit_error(violations_json({{"config", "one of --config or --preset is required"}}));
  }

  if (seed) config.seed = *seed;
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (app.count("--threads")) config.threads = threads;

  if (print_config) {
    std::cout << to_json(config).dump(2) << '\n';
    return kExitOk;
  }

  RunOptions options;
  if (!quiet) options.log = &std::cerr;
  const auto outcome = run(config, options);
  if (outcome.exit_code != kExitOk) {
    std::cerr << outcome.error.dump() << '\n';
    return outcome.exit_code;
  }
  if (!quiet) {
    std::cerr << "wrote " << outcome.files.size() << " files to " << config.output_dir << " (config "
              << outcome.manifest["config_hash"].get<std::string>().substr(0, 12) << ")\n";
  }
  return kExitOk;
}
