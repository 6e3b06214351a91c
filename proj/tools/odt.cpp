// Command-line driver: simulate, calibrate, reconstruct, stitch, inspect.

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

#include "odt/odt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void echo_args(const fs::path& out_dir, const std::string& subcommand, const json& args) {
  json j;
  j["subcommand"] = subcommand;
  j["arguments"] = args;
  odt::io::write_text_atomic(out_dir / "effective_config.json", j.dump(2) + "\n");
}

struct SimulateArgs {
  std::string phantom_file;
  std::string out_dir;
  int angles = 60;
  double na_illum = 1.1;
  double na_det = 1.1;
  double wavelength_vacuum = 0.532;  // um
  double z_hat = std::numeric_limits<double>::quiet_NaN();  // default: volume center
  std::string noise_model = "none";
  double noise_param = 0.0;
  std::uint64_t seed = 0;
  int jitter_samples = 0;
};

int run_simulate(const SimulateArgs& a) {
  const json pj = odt::io::read_json(a.phantom_file);
  const odt::PhantomSpec spec = odt::io::phantom_from_json(pj, a.phantom_file);
  const odt::RIVolume<double> truth = odt::rasterize_phantom(spec);

  const double wavelength_medium = a.wavelength_vacuum / spec.n_medium;
  const double z_hat = std::isnan(a.z_hat) ? spec.dz * spec.n_layers / 2.0 : a.z_hat;
  const auto system = odt::make_optical_system<double>(
      spec.nx, spec.ny, spec.pixel_pitch, wavelength_medium, spec.n_medium, a.na_det,
      a.na_illum, z_hat);
  if (system.pupil.clipped_to_nyquist)
    std::cerr << "warning: pupil cutoff exceeds the grid Nyquist; clipped\n";

  const auto grid = system.frequency_grid();
  const auto illums =
      odt::spiral_illuminations(a.angles, a.na_illum, a.wavelength_vacuum, grid);

  odt::NoiseSpec noise;
  noise = odt::io::noise_from_json(json{{"model", a.noise_model}, {"parameter", a.noise_param}},
                                   "command line");

  std::optional<std::vector<odt::Illumination<double>>> reported;
  if (a.jitter_samples > 0)
    reported = odt::perturb_illuminations(illums, a.jitter_samples, grid, a.seed);

  const auto dataset = odt::simulate_dataset(truth, illums, system, noise, a.seed, reported);
  odt::io::save_dataset(dataset, a.out_dir);
  odt::io::save_volume(truth, fs::path(a.out_dir) / "truth_volume");

  echo_args(a.out_dir, "simulate",
            json{{"phantom", a.phantom_file},
                 {"angles", a.angles},
                 {"na_illumination", a.na_illum},
                 {"na_detection", a.na_det},
                 {"wavelength_vacuum_um", a.wavelength_vacuum},
                 {"z_hat_um", z_hat},
                 {"noise", {{"model", a.noise_model}, {"parameter", a.noise_param}}},
                 {"seed", a.seed},
                 {"jitter_samples", a.jitter_samples}});
  std::cout << "wrote " << dataset.count() << " angles to " << a.out_dir << "\n";
  return 0;
}

struct CalibrateArgs {
  std::string dataset_dir;
  std::string out_dir;
  int spectra = 0;
  double threshold = 0.2;
};

int run_calibrate(const CalibrateArgs& a) {
  const auto dataset = odt::io::load_dataset(a.dataset_dir);
  odt::CalibrationConfig config;
  config.confidence_threshold = a.threshold;
  const auto result = odt::calibrate_dataset(dataset, config);

  const auto grid = dataset.system.frequency_grid();
  const double dk = 0.5 * (grid.dkx() + grid.dky());

  json report;
  report["confidence_threshold"] = a.threshold;
  json per_angle = json::array();
  double max_correction = 0.0;
  for (std::size_t l = 0; l < dataset.count(); ++l) {
    const auto& est = result.estimates[l];
    json r;
    r["index"] = l;
    r["reported"] = dataset.illuminations[l].k0;
    r["flag"] = odt::to_string(est.flag);
    r["confidence"] = est.confidence;
    if (est.flag == odt::AngleFlag::ok) {
      r["estimated"] = est.k0;
      r["correction_samples"] = result.correction_samples[l];
      max_correction = std::max(max_correction, result.correction_samples[l]);
    }
    per_angle.push_back(r);
  }
  report["angles"] = per_angle;
  report["max_correction_samples"] = max_correction;
  fs::create_directories(a.out_dir);
  odt::io::write_text_atomic(fs::path(a.out_dir) / "calibration_report.json",
                             report.dump(2) + "\n");

  auto corrected = dataset;
  corrected.illuminations = result.corrected;
  odt::io::save_dataset(corrected, fs::path(a.out_dir) / "corrected");

  for (int l = 0; l < a.spectra && l < int(dataset.count()); ++l) {
    char name[48];
    std::snprintf(name, sizeof(name), "spectrum_%04d.png", l);
    odt::render::write_spectrum_png(fs::path(a.out_dir) / "spectra" / name,
                                    dataset.intensities[std::size_t(l)], dataset.system,
                                    &result.estimates[std::size_t(l)]);
  }

  echo_args(a.out_dir, "calibrate",
            json{{"dataset", a.dataset_dir},
                 {"threshold", a.threshold},
                 {"spectra", a.spectra}});
  std::cout << "calibrated " << dataset.count() << " angles, max correction "
            << max_correction << " samples\n";
  return 0;
}

struct ReconstructArgs {
  std::string dataset_dir;
  std::string out_dir;
  std::string config_file;
  // Flag overrides; NaN / INT_MIN mean "not set on the command line".
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  int epochs = std::numeric_limits<int>::min();
  std::int64_t seed = -1;
  std::string constraint;
  int tv_iterations = std::numeric_limits<int>::min();
  double stop_tol = std::numeric_limits<double>::quiet_NaN();
  std::string precision;
};

int run_reconstruct(const ReconstructArgs& a) {
  const auto dataset = odt::io::load_dataset(a.dataset_dir);

  odt::ReconstructionConfig config;
  if (!a.config_file.empty())
    odt::io::merge_config(config, odt::io::read_json(a.config_file), a.config_file);
  if (!std::isnan(a.alpha)) config.alpha = a.alpha;
  if (!std::isnan(a.beta)) config.tv.beta = a.beta;
  if (a.epochs != std::numeric_limits<int>::min()) config.epochs = a.epochs;
  if (a.seed >= 0) config.seed = std::uint64_t(a.seed);
  if (!a.constraint.empty())
    config.constraint = odt::io::constraint_from_string(a.constraint);
  if (a.tv_iterations != std::numeric_limits<int>::min())
    config.tv.inner_iterations = a.tv_iterations;
  if (!std::isnan(a.stop_tol)) config.stop_tolerance = a.stop_tol;
  if (!a.precision.empty()) {
    odt::require(a.precision == "single" || a.precision == "double", "schema",
                 "precision must be 'single' or 'double'");
    config.precision =
        a.precision == "single" ? odt::Precision::single : odt::Precision::dbl;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto result = odt::reconstruct(dataset, config);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(a.out_dir);
  odt::io::save_volume(result.volume, fs::path(a.out_dir) / "volume");
  odt::io::write_cost_csv(fs::path(a.out_dir) / "cost.csv", result.cost_history);

  json echo = odt::io::to_json(config);
  echo["dataset"] = a.dataset_dir;
  echo["completed_epochs"] = result.cost_history.size();
  echo["runtime_seconds"] = seconds;
  echo_args(a.out_dir, "reconstruct", echo);

  std::cout << "completed " << result.cost_history.size() << " epochs in " << seconds
            << " s; cost " << result.cost_history.front() << " -> "
            << result.cost_history.back() << "\n";
  return 0;
}

struct StitchArgs {
  std::string manifest_file;
  std::string out_dir;
};

int run_stitch(const StitchArgs& a) {
  const json manifest = odt::io::read_json(a.manifest_file);
  odt::require(manifest.contains("volumes") && manifest.at("volumes").is_array(),
               "schema", "stitch manifest needs a 'volumes' array");
  const double min_confidence = manifest.value("min_confidence", 0.5);

  std::vector<odt::RIVolume<double>> volumes;
  for (const auto& entry : manifest.at("volumes"))
    volumes.push_back(odt::io::load_volume(fs::path(a.manifest_file).parent_path() /
                                           entry.get<std::string>()));
  odt::require(!volumes.empty(), "schema", "stitch manifest lists no volumes");

  const auto chain = odt::stitch_chain(volumes, min_confidence);

  fs::create_directories(a.out_dir);
  odt::io::save_volume(chain.fused, fs::path(a.out_dir) / "volume");

  json report;
  report["min_confidence"] = min_confidence;
  json placements = json::array();
  for (std::size_t i = 0; i < chain.offsets.size(); ++i)
    placements.push_back(json{{"index", i},
                              {"offset_voxels", chain.offsets[i]},
                              {"confidence", chain.confidences[i]}});
  report["placements"] = placements;
  report["fused_dims"] = {chain.fused.nx, chain.fused.ny, chain.fused.n_layers};
  odt::io::write_text_atomic(fs::path(a.out_dir) / "placement_report.json",
                             report.dump(2) + "\n");

  echo_args(a.out_dir, "stitch",
            json{{"manifest", a.manifest_file}, {"min_confidence", min_confidence}});
  std::cout << "fused " << volumes.size() << " volumes into " << chain.fused.nx << "x"
            << chain.fused.ny << "x" << chain.fused.n_layers << "\n";
  return 0;
}

struct InspectArgs {
  std::string volume_dir;
  std::string dataset_dir;
  std::string out_dir;
  std::string profile_axis;
  std::vector<int> at;
  int angle = 0;
};

int run_inspect(const InspectArgs& a) {
  odt::require(!a.volume_dir.empty() || !a.dataset_dir.empty(), "invalid_argument",
               "inspect: give --volume or --dataset");
  fs::create_directories(a.out_dir);
  json summary;

  if (!a.volume_dir.empty()) {
    const auto vol = odt::io::load_volume(a.volume_dir);
    const int cx = a.at.size() == 3 ? a.at[0] : vol.nx / 2;
    const int cy = a.at.size() == 3 ? a.at[1] : vol.ny / 2;
    const int ck = a.at.size() == 3 ? a.at[2] : vol.n_layers / 2;

    auto dump = [&](const char* name, const std::vector<double>& s, int nx, int ny) {
      auto [lo, hi] = odt::render::value_range(s);
      odt::render::write_png8(fs::path(a.out_dir) / name, s, nx, ny, lo, hi);
    };
    dump("slice_xy.png", odt::render::slice_xy(vol, ck, odt::render::Part::real), vol.nx,
         vol.ny);
    dump("slice_xz.png", odt::render::slice_xz(vol, cy, odt::render::Part::real), vol.nx,
         vol.n_layers);
    dump("slice_yz.png", odt::render::slice_yz(vol, cx, odt::render::Part::real), vol.ny,
         vol.n_layers);

    if (!a.profile_axis.empty()) {
      odt::require(a.profile_axis.size() == 1, "invalid_argument",
                   "inspect: profile axis must be x, y or z");
      odt::io::write_text_atomic(
          fs::path(a.out_dir) / "profile.csv",
          odt::render::profile_csv(vol, a.profile_axis[0], cx, cy, ck));
    }
    summary["volume"] = {{"dims", {vol.nx, vol.ny, vol.n_layers}},
                         {"center", {cx, cy, ck}},
                         {"n_medium", vol.n_medium}};
  }

  if (!a.dataset_dir.empty()) {
    const auto dataset = odt::io::load_dataset(a.dataset_dir);
    odt::require(a.angle >= 0 && a.angle < int(dataset.count()), "invalid_argument",
                 "inspect: angle index out of range");
    const auto& img = dataset.intensities[std::size_t(a.angle)];
    auto [lo, hi] = odt::render::value_range(img.v);
    odt::render::write_png8(fs::path(a.out_dir) / "intensity.png", img.v, img.nx, img.ny,
                            lo, hi);
    const auto est = odt::estimate_wavevector(img, dataset.system,
                                              dataset.illuminations[std::size_t(a.angle)].k0);
    odt::render::write_spectrum_png(fs::path(a.out_dir) / "spectrum.png", img,
                                    dataset.system, &est);
    summary["dataset"] = {{"angles", dataset.count()},
                          {"angle", a.angle},
                          {"flag", odt::to_string(est.flag)},
                          {"confidence", est.confidence}};
  }

  odt::io::write_text_atomic(fs::path(a.out_dir) / "inspect_summary.json",
                             summary.dump(2) + "\n");
  echo_args(a.out_dir, "inspect",
            json{{"volume", a.volume_dir},
                 {"dataset", a.dataset_dir},
                 {"profile", a.profile_axis},
                 {"angle", a.angle}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D refractive-index reconstruction from angled-illumination intensities"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Forward-simulate a dataset from a phantom");
  sim_cmd->add_option("--phantom", sim.phantom_file, "Phantom spec JSON")->required();
  sim_cmd->add_option("--out", sim.out_dir, "Output dataset directory")->required();
  sim_cmd->add_option("--angles", sim.angles, "Number of spiral illumination angles");
  sim_cmd->add_option("--na-illum", sim.na_illum, "Illumination NA");
  sim_cmd->add_option("--na-det", sim.na_det, "Detection NA");
  sim_cmd->add_option("--wavelength", sim.wavelength_vacuum, "Vacuum wavelength, um");
  sim_cmd->add_option("--z-hat", sim.z_hat, "Focus offset, um (default: volume center)");
  sim_cmd->add_option("--noise", sim.noise_model, "Noise model: none|gaussian|poisson");
  sim_cmd->add_option("--noise-param", sim.noise_param,
                      "Relative std (gaussian) or photons per unit intensity (poisson)");
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_option("--jitter-samples", sim.jitter_samples,
                      "Max reporting error injected into the stored wavevectors, in "
                      "frequency samples");

  CalibrateArgs cal;
  auto* cal_cmd =
      app.add_subcommand("calibrate", "Self-calibrate illumination angles from the data");
  cal_cmd->add_option("--dataset", cal.dataset_dir, "Dataset directory")->required();
  cal_cmd->add_option("--out", cal.out_dir, "Output directory")->required();
  cal_cmd->add_option("--spectra", cal.spectra, "Emit annotated spectra for the first N angles");
  cal_cmd->add_option("--threshold", cal.threshold, "Confidence threshold for flagging");

  ReconstructArgs rec;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Iterative volume reconstruction");
  rec_cmd->add_option("--dataset", rec.dataset_dir, "Dataset directory")->required();
  rec_cmd->add_option("--out", rec.out_dir, "Output directory")->required();
  rec_cmd->add_option("--config", rec.config_file, "Config JSON (flags override it)");
  rec_cmd->add_option("--alpha", rec.alpha, "Gradient step size");
  rec_cmd->add_option("--beta", rec.beta, "TV regularization weight");
  rec_cmd->add_option("--epochs", rec.epochs, "Epoch budget");
  rec_cmd->add_option("--seed", rec.seed, "Random seed for angle shuffling");
  rec_cmd->add_option("--constraint", rec.constraint,
                      "none|real_only|nonneg_absorption");
  rec_cmd->add_option("--tv-iterations", rec.tv_iterations, "TV prox inner iterations");
  rec_cmd->add_option("--stop-tol", rec.stop_tol, "Cost plateau tolerance");
  rec_cmd->add_option("--precision", rec.precision, "single|double");

  StitchArgs sti;
  auto* sti_cmd = app.add_subcommand("stitch", "Register and blend overlapping volumes");
  sti_cmd->add_option("--manifest", sti.manifest_file, "Manifest JSON listing volume dirs")
      ->required();
  sti_cmd->add_option("--out", sti.out_dir, "Output directory")->required();

  InspectArgs ins;
  auto* ins_cmd = app.add_subcommand("inspect", "Slices, spectra and line profiles");
  ins_cmd->add_option("--volume", ins.volume_dir, "Volume directory");
  ins_cmd->add_option("--dataset", ins.dataset_dir, "Dataset directory");
  ins_cmd->add_option("--out", ins.out_dir, "Output directory")->required();
  ins_cmd->add_option("--profile", ins.profile_axis, "Line profile axis: x|y|z");
  ins_cmd->add_option("--at", ins.at, "Profile/slice point as voxel indices x y z")
      ->expected(3);
  ins_cmd->add_option("--angle", ins.angle, "Dataset angle index for spectra");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (cal_cmd->parsed()) return run_calibrate(cal);
    if (rec_cmd->parsed()) return run_reconstruct(rec);
    if (sti_cmd->parsed()) return run_stitch(sti);
    if (ins_cmd->parsed()) return run_inspect(ins);
  } catch (const odt::Error& e) {
    std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
