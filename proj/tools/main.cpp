// qdc command line tool: run, validate, presets, cache.

#include "qdc/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::string preset_dir() {
#ifdef QDC_PRESET_DIR
  return QDC_PRESET_DIR;
#else
  return "presets";
#endif
}

// A bare name like "fig4" resolves against the shipped preset directory.
std::string resolve_config(const std::string& arg) {
  if (std::filesystem::exists(arg)) return arg;
  const std::filesystem::path p =
      std::filesystem::path(preset_dir()) / (arg + ".json");
  if (std::filesystem::exists(p)) return p.string();
  return arg;  // let the loader produce the error
}

int cmd_run(const std::string& config_arg, const std::string& output_override) {
  qdc::ScenarioConfig cfg;
  try {
    cfg = qdc::load_scenario(resolve_config(config_arg));
  } catch (const qdc::ConfigError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  }
  if (!output_override.empty()) cfg.output_directory = output_override;
  try {
    const qdc::RunManifest m = qdc::run_scenario(cfg);
    std::cout << "run complete (config hash " << m.config_hash << ")\n";
    std::cout << "cache: " << m.cache_hits << " hits, " << m.cache_misses
              << " misses\n";
    for (const auto& [name, sec] : m.stage_seconds)
      std::cout << "  stage " << name << ": " << sec << " s\n";
    for (const auto& f : m.outputs) std::cout << "  wrote " << f << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_validate(const std::string& config_arg) {
  try {
    qdc::load_scenario(resolve_config(config_arg));
    std::cout << "config OK\n";
    return kExitOk;
  } catch (const qdc::ConfigError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_presets() {
  const std::string dir = preset_dir();
  if (!std::filesystem::is_directory(dir)) {
    std::cerr << "runtime error: preset directory not found: " << dir << "\n";
    return kExitRuntime;
  }
  std::vector<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  for (const auto& n : names) std::cout << n << "\n";
  return kExitOk;
}

int cmd_cache_info(const std::string& dir) {
  try {
    qdc::Cache cache(dir);
    std::cout << "cache directory: " << cache.directory() << "\n";
    std::uintmax_t total = 0;
    for (const auto& e : cache.entries()) {
      std::cout << "  " << e.path << " (" << e.bytes << " bytes)\n";
      total += e.bytes;
    }
    std::cout << "total: " << total << " bytes\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_cache_clear(const std::string& dir) {
  try {
    qdc::Cache cache(dir);
    const auto n = cache.clear();
    std::cout << "removed " << n << " cache files from " << cache.directory() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qdc: two-electron double quantum dot simulation and control"};
  app.require_subcommand(1);

  std::string config_arg, output_override, cache_dir;

  auto* run = app.add_subcommand("run", "run a scenario config or preset");
  run->add_option("config", config_arg, "config file path or preset name")->required();
  run->add_option("--output", output_override, "override the output directory");

  auto* validate = app.add_subcommand("validate", "validate a scenario config");
  validate->add_option("config", config_arg, "config file path or preset name")
      ->required();

  auto* presets = app.add_subcommand("presets", "preset operations");
  presets->add_subcommand("list", "list shipped presets");
  presets->require_subcommand(1);

  auto* cache = app.add_subcommand("cache", "cache operations");
  cache->add_option("--dir", cache_dir,
                    "cache directory (default: QDC_CACHE_DIR or ./qdc-cache)");
  auto* cinfo = cache->add_subcommand("info", "list cache entries");
  auto* cclear = cache->add_subcommand("clear", "remove all cache entries");
  cache->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  if (run->parsed()) return cmd_run(config_arg, output_override);
  if (validate->parsed()) return cmd_validate(config_arg);
  if (presets->parsed()) return cmd_presets();
  if (cache->parsed()) {
    if (cinfo->parsed()) return cmd_cache_info(cache_dir);
    if (cclear->parsed()) return cmd_cache_clear(cache_dir);
  }
  return kExitValidation;
}
