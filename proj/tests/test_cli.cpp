#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <random>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("odt_cli_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ODT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

int run_cli_capture(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(ODT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  return std::system(cmd.c_str());
}

// Small phantom for fast CLI runs: one bead for the profile check plus a
// field of weak random boxes so the spectra carry broadband texture.
void write_phantom(const fs::path& path) {
  odt::io::json j = {{"nx", 32},        {"ny", 32},
                     {"n_layers", 8},   {"pixel_pitch_um", 0.15},
                     {"dz_um", 0.3},    {"n_medium", 1.552}};
  auto prims = odt::io::json::array();
  prims.push_back({{"type", "sphere"},
                   {"center_um", {2.4, 2.4, 1.2}},
                   {"radius_um", 0.5},
                   {"index", {1.572, 0.0}}});
  odt::SplitMix64 rng(12);
  for (int i = 0; i < 60; ++i) {
    const double sx = rng.uniform(0.15, 0.3);
    prims.push_back(
        {{"type", "box"},
         {"center_um", {rng.uniform(0.4, 4.4), rng.uniform(0.4, 4.4), rng.uniform(0.4, 2.0)}},
         {"size_um", {sx, sx, sx}},
         {"index", {1.552 + rng.uniform(-2e-3, 2e-3), 0.0}}});
  }
  j["primitives"] = prims;
  odt::io::write_text_atomic(path, j.dump(2));
}

std::uint64_t hash_tree(const fs::path& dir) {
  std::vector<fs::path> files;
  for (auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& f : files) {
    const std::string body = odt::io::read_file(f);
    for (char c : f.filename().string()) h = (h ^ std::uint8_t(c)) * 1099511628211ULL;
    for (char c : body) h = (h ^ std::uint8_t(c)) * 1099511628211ULL;
  }
  return h;
}

}  // namespace

TEST_CASE("cli pipeline: simulate, calibrate, inspect, reconstruct") {
  TempDir dir;
  write_phantom(dir.path / "phantom.json");

  REQUIRE(run_cli("simulate --phantom " + (dir.path / "phantom.json").string() + " --out " +
                  (dir.path / "ds").string() + " --angles 8 --na-illum 0.6 --na-det 1.0" +
                  " --seed 5") == 0);
  CHECK(fs::exists(dir.path / "ds" / "meta.json"));
  CHECK(fs::exists(dir.path / "ds" / "intensity_0007.raw"));
  CHECK(fs::exists(dir.path / "ds" / "truth_volume" / "real.raw"));
  CHECK(fs::exists(dir.path / "ds" / "effective_config.json"));

  SECTION("calibrate without perturbation reports sub-sample corrections") {
    REQUIRE(run_cli("calibrate --dataset " + (dir.path / "ds").string() + " --out " +
                    (dir.path / "cal").string() + " --spectra 2") == 0);
    const auto report = odt::io::read_json(dir.path / "cal" / "calibration_report.json");
    CHECK(report.at("max_correction_samples").get<double>() < 1.0);
    CHECK(fs::exists(dir.path / "cal" / "corrected" / "meta.json"));
    CHECK(fs::exists(dir.path / "cal" / "spectra" / "spectrum_0000.png"));
    CHECK(fs::exists(dir.path / "cal" / "spectra" / "spectrum_0000.png.json"));
  }

  SECTION("inspect emits slices, spectra, profile and mutates nothing") {
    const auto before = hash_tree(dir.path / "ds");
    REQUIRE(run_cli("inspect --dataset " + (dir.path / "ds").string() + " --volume " +
                    (dir.path / "ds" / "truth_volume").string() + " --out " +
                    (dir.path / "ins").string() + " --profile x --angle 3") == 0);
    CHECK(hash_tree(dir.path / "ds") == before);
    for (const char* f : {"slice_xy.png", "slice_xz.png", "slice_yz.png", "intensity.png",
                          "spectrum.png", "profile.csv", "inspect_summary.json"})
      CHECK(fs::exists(dir.path / "ins" / f));

    // profile plateau reflects the phantom index at the bead center
    std::ifstream csv(dir.path / "ins" / "profile.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "position_um,re,im");
    double peak = 0.0;
    while (std::getline(csv, line)) {
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      peak = std::max(peak, std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    }
    CHECK(peak == Catch::Approx(1.572).margin(1e-4));
  }

  SECTION("reconstruct writes volume, cost csv and config echo") {
    REQUIRE(run_cli("reconstruct --dataset " + (dir.path / "ds").string() + " --out " +
                    (dir.path / "rec").string() +
                    " --alpha 2e-3 --beta 0 --epochs 3 --seed 1 --constraint real_only") ==
            0);
    auto vol = odt::io::load_volume(dir.path / "rec" / "volume");
    CHECK(vol.nx == 32);

    std::ifstream csv(dir.path / "rec" / "cost.csv");
    std::string line;
    std::getline(csv, line);
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 3);

    const auto echo = odt::io::read_json(dir.path / "rec" / "effective_config.json");
    CHECK(echo.at("arguments").at("alpha").get<double>() == 2e-3);
    CHECK(echo.at("arguments").at("constraint").get<std::string>() == "real_only");
  }
}

TEST_CASE("cli stitch runs a manifest") {
  TempDir dir;

  // two overlapping crops of one textured volume
  odt::RIVolume<double> whole(48, 24, 8, 0.1, 0.2, 1.5);
  odt::SplitMix64 rng(3);
  for (int b = 0; b < 8; ++b) {
    const double cx = rng.uniform(0.1, 0.9) * 48, cy = rng.uniform(0.1, 0.9) * 24;
    const double ck = rng.uniform(0.1, 0.9) * 8, s = rng.uniform(1.0, 3.0);
    for (int k = 0; k < 8; ++k)
      for (int x = 0; x < 48; ++x)
        for (int y = 0; y < 24; ++y)
          whole.at(x, y, k) += 0.02 * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy) +
                                                 4 * (k - ck) * (k - ck)) /
                                               (2 * s * s));
  }
  auto cut = [&](int x0) {
    odt::RIVolume<double> v(28, 24, 8, 0.1, 0.2, 1.5);
    for (int k = 0; k < 8; ++k)
      for (int x = 0; x < 28; ++x)
        for (int y = 0; y < 24; ++y) v.at(x, y, k) = whole.at(x0 + x, y, k);
    return v;
  };
  odt::io::save_volume(cut(0), dir.path / "vol_a");
  odt::io::save_volume(cut(20), dir.path / "vol_b");
  odt::io::write_text_atomic(dir.path / "manifest.json",
                             R"({"volumes": ["vol_a", "vol_b"], "min_confidence": 0.5})");

  REQUIRE(run_cli("stitch --manifest " + (dir.path / "manifest.json").string() + " --out " +
                  (dir.path / "fused").string()) == 0);
  const auto report = odt::io::read_json(dir.path / "fused" / "placement_report.json");
  REQUIRE(report.at("placements").size() == 2);
  CHECK(report.at("placements")[1].at("offset_voxels")[0].get<long>() == 20);
  auto fused = odt::io::load_volume(dir.path / "fused" / "volume");
  CHECK(fused.nx == 48);
}

TEST_CASE("cli failures are machine readable and nonzero") {
  TempDir dir;

  SECTION("missing dataset") {
    const auto log = dir.path / "err.log";
    CHECK(run_cli_capture("reconstruct --dataset " + (dir.path / "nope").string() +
                              " --out " + (dir.path / "out").string(),
                          log) != 0);
    const auto text = odt::io::read_file(log);
    const auto j = odt::io::json::parse(text);
    CHECK(j.contains("error"));
    CHECK(j.contains("message"));
  }

  SECTION("unknown subcommand") { CHECK(run_cli("frobnicate") != 0); }

  SECTION("schema violation in phantom") {
    odt::io::write_text_atomic(dir.path / "bad.json", R"({"nx": 32})");
    const auto log = dir.path / "err.log";
    CHECK(run_cli_capture("simulate --phantom " + (dir.path / "bad.json").string() +
                              " --out " + (dir.path / "ds").string(),
                          log) != 0);
    const auto j = odt::io::json::parse(odt::io::read_file(log));
    CHECK(j.at("error").get<std::string>() == "schema");
  }
}
