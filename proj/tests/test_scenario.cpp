#include "qdc/scenario.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qdc;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qdc-scenario-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json minimal_sweep(const fs::path& out, const fs::path& cache) {
  return json{{"version", 1},
              {"material", "gaas"},
              {"basis", {{"n_x_max", 3}, {"n_y_max", 1}}},
              {"task", "spectrum_sweep"},
              {"spectrum_sweep",
               {{"xi_max_v_per_m", 15000.0}, {"n_points", 5}, {"n_states", 4}}},
              {"output", {{"directory", out.string()}}},
              {"cache", {{"directory", cache.string()}}}};
}

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.field;
  }
  return "";
}

}  // namespace

TEST_CASE("config validation reports dotted field paths") {
  const json ok = minimal_sweep("o", "c");

  CHECK(field_of([&] {
          json j = ok;
          j.erase("material");
          parse_scenario(j);
        }) == "config.material");
  CHECK(field_of([&] {
          json j = ok;
          j["material"] = "unobtainium";
          parse_scenario(j);
        }) == "config.material");
  CHECK(field_of([&] {
          json j = ok;
          j["task"] = "frobnicate";
          parse_scenario(j);
        }) == "config.task");
  CHECK(field_of([&] {
          json j = ok;
          j["basis"]["n_x_max"] = -1;
          parse_scenario(j);
        }) == "config.basis.n_x_max");
  CHECK(field_of([&] {
          json j = ok;
          j["spectrum_sweep"]["sector"] = "doublet";
          parse_scenario(j);
        }) == "config.spectrum_sweep.sector");
  CHECK(field_of([&] {
          json j = ok;
          j["spectrum_sweep"]["n_points"] = 1;
          parse_scenario(j);
        }) == "config.spectrum_sweep.n_points");
  CHECK(field_of([&] {
          json j = ok;
          j["spectrum_sweep"]["xi_max_v_per_m"] = "big";
          parse_scenario(j);
        }) == "config.spectrum_sweep.xi_max_v_per_m");

  // task-specific blocks
  CHECK(field_of([&] {
          parse_scenario(json{{"material", "gaas"},
                              {"basis", {{"n_x_max", 3}, {"n_y_max", 1}}},
                              {"task", "state_transfer"},
                              {"state_transfer",
                               {{"target_state", 2}, {"mode", "intuitive"},
                                {"pulse",
                                 {{"amplitude_v_per_m", 100.0},
                                  {"duration_ps", -5.0}}}}}});
        }) == "config.state_transfer.pulse.duration_ps");
  CHECK(field_of([&] {
          parse_scenario(json{{"material", "gaas"},
                              {"basis", {{"n_x_max", 3}, {"n_y_max", 1}}},
                              {"task", "state_transfer"},
                              {"state_transfer",
                               {{"target_state", 2}, {"n_states", 2},
                                {"mode", "intuitive"},
                                {"pulse",
                                 {{"amplitude_v_per_m", 100.0},
                                  {"duration_ps", 5.0}}}}}});
        }) == "config.state_transfer.n_states");
  CHECK(field_of([&] {
          parse_scenario(json{{"material", "gaas"},
                              {"basis", {{"n_x_max", 3}, {"n_y_max", 1}}},
                              {"task", "dephasing"},
                              {"dephasing",
                               {{"hold_time_ns", 1.0}, {"b_nuc_mt", -2.0}}}});
        }) == "config.dephasing.b_nuc_mt");
}

TEST_CASE("custom material object is validated") {
  json j = minimal_sweep("o", "c");
  j["material"] = {{"m_star", 0.1},     {"eps_r", 10.0}, {"g_star", -0.4},
                   {"hbar_omega_mev", 2.0}, {"d_nm", 50.0}};
  const ScenarioConfig cfg = parse_scenario(j);
  CHECK(cfg.material_name == "custom");
  CHECK(cfg.material.eps_r == 10.0);

  j["material"]["m_star"] = -1.0;
  CHECK(field_of([&] { parse_scenario(j); }) == "config.material");
}

TEST_CASE("spectrum sweep runs, caches and reruns bit-identically") {
  const fs::path out_a = fresh_dir("sweep-a");
  const fs::path out_b = fresh_dir("sweep-b");
  const fs::path cache = fresh_dir("sweep-cache");

  ScenarioConfig cfg = parse_scenario(minimal_sweep(out_a, cache));
  RunManifest m1 = run_scenario(cfg);
  CHECK(m1.cache_hits == 0);
  CHECK(m1.cache_misses == 1);  // singlet operators
  REQUIRE(fs::exists(out_a / "spectrum_singlet.dat"));
  REQUIRE(fs::exists(out_a / "manifest.json"));
  CHECK_FALSE(m1.config_hash.empty());

  // warm rerun into a second directory: all hits, identical bytes
  cfg.output_directory = out_b.string();
  cfg.raw["output"]["directory"] = out_b.string();
  RunManifest m2 = run_scenario(cfg);
  CHECK(m2.cache_hits == 1);
  CHECK(m2.cache_misses == 0);
  CHECK(slurp(out_a / "spectrum_singlet.dat") == slurp(out_b / "spectrum_singlet.dat"));

  // changing the basis truncation is a key change -> miss and rebuild
  json j3 = minimal_sweep(out_b, cache);
  j3["basis"]["n_x_max"] = 4;
  RunManifest m3 = run_scenario(parse_scenario(j3));
  CHECK(m3.cache_misses == 1);
  CHECK(m3.cache_hits == 0);
}

TEST_CASE("truncated cache file is detected and rebuilt") {
  const fs::path out = fresh_dir("trunc-out");
  const fs::path cache = fresh_dir("trunc-cache");
  ScenarioConfig cfg = parse_scenario(minimal_sweep(out, cache));
  run_scenario(cfg);

  Cache c(cache.string());
  auto entries = c.entries();
  REQUIRE(entries.size() == 1);
  const std::string before = slurp(out / "spectrum_singlet.dat");

  // chop the payload in half
  {
    const std::string blob = slurp(entries[0].path);
    std::ofstream f(entries[0].path, std::ios::binary | std::ios::trunc);
    f.write(blob.data(), static_cast<std::streamsize>(blob.size() / 2));
  }
  RunManifest m = run_scenario(cfg);
  CHECK(m.cache_hits == 0);
  CHECK(m.cache_misses == 1);  // corruption never trusted, rebuilt
  CHECK(slurp(out / "spectrum_singlet.dat") == before);

  // the rebuilt file is loadable again
  RunManifest m2 = run_scenario(cfg);
  CHECK(m2.cache_hits == 1);
}

TEST_CASE("state transfer reruns are deterministic") {
  const fs::path out_a = fresh_dir("st-a");
  const fs::path out_b = fresh_dir("st-b");
  const fs::path cache = fresh_dir("st-cache");
  json j{{"version", 1},
         {"material", "gaas"},
         {"basis", {{"n_x_max", 4}, {"n_y_max", 1}}},
         {"task", "state_transfer"},
         {"state_transfer",
          {{"initial_state", 0},
           {"target_state", 2},
           {"n_states", 6},
           {"mode", "intuitive"},
           {"pulse", {{"amplitude_v_per_m", 600.0}, {"duration_ps", 8.0}, {"dt", 0.1}}}}},
         {"output", {{"directory", out_a.string()}}},
         {"cache", {{"directory", cache.string()}}}};
  run_scenario(parse_scenario(j));
  j["output"]["directory"] = out_b.string();
  run_scenario(parse_scenario(j));
  CHECK(slurp(out_a / "populations.dat") == slurp(out_b / "populations.dat"));
  CHECK(slurp(out_a / "pulse.dat") == slurp(out_b / "pulse.dat"));

  const std::string summary = slurp(out_a / "summary.txt");
  CHECK(summary.find("final_target_population") != std::string::npos);
}

TEST_CASE("cls free evolution localizes left and reports the beat period") {
  const fs::path out = fresh_dir("cls-out");
  const fs::path cache = fresh_dir("cls-cache");
  json j{{"version", 1},
         {"material", "gaas"},
         {"basis", {{"n_x_max", 8}, {"n_y_max", 2}}},
         {"task", "cls_preparation"},
         {"cls_preparation", {{"n_states", 12}, {"mode", "free"}, {"duration_ps", 100.0}}},
         {"output", {{"directory", out.string()}}},
         {"cache", {{"directory", cache.string()}}}};
  run_scenario(parse_scenario(j));

  // the auto-detected doublet is the strongly dipole-coupled adjacent pair,
  // and the target phase puts the charge in the left dot at t = 0
  const std::string summary = slurp(out / "summary.txt");
  CHECK(summary.find("ionic_pair: 5 6") != std::string::npos);

  std::ifstream f(out / "x_expectation.dat");
  std::string line;
  std::getline(f, line);  // header
  double t, x;
  REQUIRE((f >> t >> x));
  CHECK(x < -50.0);  // nm, well into the left dot
  REQUIRE(fs::exists(out / "density.dat"));
}

TEST_CASE("dephasing with zero nuclear field keeps the singlet frozen") {
  const fs::path out = fresh_dir("deph-out");
  const fs::path cache = fresh_dir("deph-cache");
  json j{{"version", 1},
         {"material", "gaas"},
         {"basis", {{"n_x_max", 4}, {"n_y_max", 1}}},
         {"task", "dephasing"},
         {"dephasing",
          {{"n_states", 6}, {"b_nuc_mt", 0.0}, {"n_samples", 2}, {"hold_time_ns", 5.0}}},
         {"output", {{"directory", out.string()}}},
         {"cache", {{"directory", cache.string()}}}};
  run_scenario(parse_scenario(j));

  std::ifstream f(out / "dephasing_b0mT.dat");
  REQUIRE(f.good());
  std::string line;
  std::getline(f, line);
  double t, mean, se;
  int rows = 0;
  while (f >> t >> mean >> se) {
    CHECK(mean == Catch::Approx(1.0).margin(1e-10));
    ++rows;
  }
  CHECK(rows > 10);
}

TEST_CASE("manifest records stages, outputs and unit conversions") {
  const fs::path out = fresh_dir("man-out");
  const fs::path cache = fresh_dir("man-cache");
  ScenarioConfig cfg = parse_scenario(minimal_sweep(out, cache));
  RunManifest m = run_scenario(cfg);
  const json j = m.to_json();
  CHECK(j.at("library_version").get<std::string>() == kLibraryVersion);
  CHECK(j.at("stages").size() >= 2);
  CHECK(j.at("unit_conversions").at("nm_per_internal_length").get<double>() ==
        Catch::Approx(9.7937).epsilon(1e-3));
  CHECK(j.at("outputs").size() >= 1);

  const json disk = json::parse(slurp(out / "manifest.json"));
  CHECK(disk.at("config_hash") == m.config_hash);
}
