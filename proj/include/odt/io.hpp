#pragma once

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "odt/dataset.hpp"
#include "odt/reconstruct.hpp"
#include "odt/simulate.hpp"
#include "odt/volume.hpp"

namespace odt {
namespace io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Atomic text/binary writes: temp file in the same directory, then rename.
inline void write_file_atomic(const fs::path& path, const void* data, std::size_t size) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), "io", "cannot open " + tmp.string() + " for writing");
    out.write(static_cast<const char*>(data), std::streamsize(size));
    require(out.good(), "io", "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "io", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail("schema", path.string() + ": " + e.what());
  }
}

namespace detail {

// Payloads are little-endian float32. The build targets little-endian hosts;
// refuse to compile elsewhere rather than silently byte-swap.
static_assert(std::endian::native == std::endian::little,
              "raw payloads are little-endian");

inline std::vector<float> to_f32(const std::vector<double>& v) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = float(v[i]);
  return out;
}

inline void write_payload(const fs::path& path, const std::vector<float>& v) {
  write_file_atomic(path, v.data(), v.size() * sizeof(float));
}

inline std::vector<float> read_payload(const fs::path& path, std::size_t expected_count) {
  const std::string raw = read_file(path);
  require(raw.size() == expected_count * sizeof(float), "payload_length",
          path.string() + ": expected " + std::to_string(expected_count * sizeof(float)) +
              " bytes, found " + std::to_string(raw.size()));
  std::vector<float> out(expected_count);
  std::memcpy(out.data(), raw.data(), raw.size());
  for (float x : out)
    require(std::isfinite(x), "non_finite", path.string() + ": non-finite payload value");
  return out;
}

template <class T>
T get_field(const json& j, const char* key, const fs::path& where) {
  require(j.contains(key), "schema", where.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail("schema", where.string() + ": field '" + key + "' has the wrong type");
  }
}

inline void check_positive(double v, const char* key, const fs::path& where) {
  require(v > 0.0, "schema", where.string() + ": field '" + key + "' must be positive");
}

}  // namespace detail

/// Dataset layout: <dir>/meta.json plus one intensity_%04d.raw per angle
/// (row-major, y fastest, little-endian float32). Numeric metadata is in um
/// and rad/um. True wavevectors, when present, go to a truth.json sidecar.
inline void save_dataset(const AcquisitionDataset<double>& dataset, const fs::path& dir) {
  dataset.validate();
  fs::create_directories(dir);

  json meta;
  meta["wavelength_medium_um"] = dataset.system.wavelength_medium;
  meta["n_medium"] = dataset.system.n_medium;
  meta["na_detection"] = dataset.system.na_detection;
  meta["na_illumination"] = dataset.system.na_illumination;
  meta["nx"] = dataset.system.nx;
  meta["ny"] = dataset.system.ny;
  meta["n_layers"] = dataset.n_layers;
  meta["pixel_pitch_um"] = dataset.system.pixel_pitch;
  meta["dz_um"] = dataset.dz;
  meta["z_hat_um"] = dataset.system.z_hat;

  json illums = json::array();
  for (const auto& il : dataset.illuminations)
    illums.push_back(json::array({il.k0[0], il.k0[1]}));
  meta["illuminations"] = illums;

  json files = json::array();
  for (std::size_t l = 0; l < dataset.count(); ++l) {
    char name[32];
    std::snprintf(name, sizeof(name), "intensity_%04zu.raw", l);
    files.push_back(name);
    detail::write_payload(dir / name, detail::to_f32(dataset.intensities[l].v));
  }
  meta["intensity_files"] = files;
  write_text_atomic(dir / "meta.json", meta.dump(2) + "\n");

  if (!dataset.true_illuminations.empty()) {
    json truth = json::array();
    for (const auto& il : dataset.true_illuminations)
      truth.push_back(json::array({il.k0[0], il.k0[1]}));
    write_text_atomic(dir / "truth.json", json{{"illuminations", truth}}.dump(2) + "\n");
  }
}

inline AcquisitionDataset<double> load_dataset(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  const json meta = read_json(meta_path);

  const double wl = detail::get_field<double>(meta, "wavelength_medium_um", meta_path);
  const double nm = detail::get_field<double>(meta, "n_medium", meta_path);
  const double na_det = detail::get_field<double>(meta, "na_detection", meta_path);
  const double na_ill = detail::get_field<double>(meta, "na_illumination", meta_path);
  const int nx = detail::get_field<int>(meta, "nx", meta_path);
  const int ny = detail::get_field<int>(meta, "ny", meta_path);
  const int n_layers = detail::get_field<int>(meta, "n_layers", meta_path);
  const double pitch = detail::get_field<double>(meta, "pixel_pitch_um", meta_path);
  const double dz = detail::get_field<double>(meta, "dz_um", meta_path);
  const double z_hat = detail::get_field<double>(meta, "z_hat_um", meta_path);
  detail::check_positive(wl, "wavelength_medium_um", meta_path);
  detail::check_positive(nm, "n_medium", meta_path);
  detail::check_positive(pitch, "pixel_pitch_um", meta_path);
  detail::check_positive(dz, "dz_um", meta_path);
  require(nx > 0 && ny > 0 && n_layers > 0, "schema",
          meta_path.string() + ": dims must be positive");

  const auto illums = detail::get_field<std::vector<std::array<double, 2>>>(
      meta, "illuminations", meta_path);
  const auto files =
      detail::get_field<std::vector<std::string>>(meta, "intensity_files", meta_path);
  require(illums.size() == files.size(), "schema",
          meta_path.string() + ": illuminations and intensity_files lengths differ");
  require(!files.empty(), "schema", meta_path.string() + ": dataset has no angles");

  AcquisitionDataset<double> ds;
  ds.system = make_optical_system<double>(nx, ny, pitch, wl, nm, na_det, na_ill, z_hat);
  ds.n_layers = n_layers;
  ds.dz = dz;
  for (std::size_t l = 0; l < files.size(); ++l) {
    Illumination<double> il;
    il.k0 = illums[l];
    ds.illuminations.push_back(il);
    const auto payload =
        detail::read_payload(dir / files[l], std::size_t(nx) * std::size_t(ny));
    Image2D<double> img(nx, ny, pitch);
    for (std::size_t i = 0; i < payload.size(); ++i) img.v[i] = double(payload[i]);
    ds.intensities.push_back(std::move(img));
  }

  if (fs::exists(dir / "truth.json")) {
    const json truth = read_json(dir / "truth.json");
    const auto tk = detail::get_field<std::vector<std::array<double, 2>>>(
        truth, "illuminations", dir / "truth.json");
    require(tk.size() == files.size(), "schema", "truth.json: length differs from dataset");
    for (const auto& k : tk) {
      Illumination<double> il;
      il.k0 = k;
      ds.true_illuminations.push_back(il);
    }
  }
  ds.validate();
  return ds;
}

/// Volume layout: <dir>/meta.json + real.raw + imag.raw (layer-major float32;
/// the imaginary payload is always written, zeros included).
inline void save_volume(const RIVolume<double>& vol, const fs::path& dir) {
  require(all_finite(vol), "non_finite", "save_volume: volume has non-finite values");
  fs::create_directories(dir);
  json meta;
  meta["nx"] = vol.nx;
  meta["ny"] = vol.ny;
  meta["n_layers"] = vol.n_layers;
  meta["pixel_pitch_um"] = vol.pixel_pitch;
  meta["dz_um"] = vol.dz;
  meta["n_medium"] = vol.n_medium;
  write_text_atomic(dir / "meta.json", meta.dump(2) + "\n");

  std::vector<float> re(vol.n.size()), im(vol.n.size());
  for (std::size_t i = 0; i < vol.n.size(); ++i) {
    re[i] = float(vol.n[i].real());
    im[i] = float(vol.n[i].imag());
  }
  detail::write_payload(dir / "real.raw", re);
  detail::write_payload(dir / "imag.raw", im);
}

inline RIVolume<double> load_volume(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  const json meta = read_json(meta_path);
  const int nx = detail::get_field<int>(meta, "nx", meta_path);
  const int ny = detail::get_field<int>(meta, "ny", meta_path);
  const int n_layers = detail::get_field<int>(meta, "n_layers", meta_path);
  const double pitch = detail::get_field<double>(meta, "pixel_pitch_um", meta_path);
  const double dz = detail::get_field<double>(meta, "dz_um", meta_path);
  const double nm = detail::get_field<double>(meta, "n_medium", meta_path);
  require(nx > 0 && ny > 0 && n_layers > 0, "schema",
          meta_path.string() + ": dims must be positive");

  const std::size_t count = std::size_t(nx) * ny * std::size_t(n_layers);
  const auto re = detail::read_payload(dir / "real.raw", count);
  const auto im = detail::read_payload(dir / "imag.raw", count);
  RIVolume<double> vol(nx, ny, n_layers, pitch, dz, nm);
  for (std::size_t i = 0; i < count; ++i)
    vol.n[i] = std::complex<double>(double(re[i]), double(im[i]));
  return vol;
}

inline void write_cost_csv(const fs::path& path, const std::vector<double>& history) {
  std::ostringstream ss;
  ss << "epoch,cost\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    char line[64];
    std::snprintf(line, sizeof(line), "%zu,%.17g\n", i + 1, history[i]);
    ss << line;
  }
  write_text_atomic(path, ss.str());
}

// --- JSON (de)serialization of configs ------------------------------------

inline Constraint constraint_from_string(const std::string& s) {
  if (s == "none") return Constraint::none;
  if (s == "real_only") return Constraint::real_only;
  if (s == "nonneg_absorption") return Constraint::nonneg_absorption;
  fail("schema", "unknown constraint '" + s + "'");
}

inline const char* to_string(Constraint c) {
  switch (c) {
    case Constraint::none: return "none";
    case Constraint::real_only: return "real_only";
    case Constraint::nonneg_absorption: return "nonneg_absorption";
  }
  return "?";
}

inline json to_json(const ReconstructionConfig& c) {
  json j;
  j["alpha"] = c.alpha;
  j["tv"] = {{"beta", c.tv.beta},
             {"inner_iterations", c.tv.inner_iterations},
             {"variant", "isotropic"},
             {"axis_weights", c.tv.axis_weights}};
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["constraint"] = to_string(c.constraint);
  j["stop_tolerance"] = c.stop_tolerance;
  j["stop_window"] = c.stop_window;
  j["precision"] = c.precision == Precision::single ? "single" : "double";
  if (!c.layer_mask.empty()) j["layer_mask"] = c.layer_mask;
  return j;
}

inline void merge_config(ReconstructionConfig& c, const json& j, const fs::path& where) {
  if (j.contains("alpha")) c.alpha = detail::get_field<double>(j, "alpha", where);
  if (j.contains("tv")) {
    const json& t = j.at("tv");
    if (t.contains("beta")) c.tv.beta = detail::get_field<double>(t, "beta", where);
    if (t.contains("inner_iterations"))
      c.tv.inner_iterations = detail::get_field<int>(t, "inner_iterations", where);
    if (t.contains("variant"))
      require(t.at("variant") == "isotropic", "schema",
              where.string() + ": only isotropic TV is supported");
    if (t.contains("axis_weights"))
      c.tv.axis_weights =
          detail::get_field<std::array<double, 3>>(t, "axis_weights", where);
  }
  if (j.contains("epochs")) c.epochs = detail::get_field<int>(j, "epochs", where);
  if (j.contains("seed")) c.seed = detail::get_field<std::uint64_t>(j, "seed", where);
  if (j.contains("constraint"))
    c.constraint =
        constraint_from_string(detail::get_field<std::string>(j, "constraint", where));
  if (j.contains("stop_tolerance"))
    c.stop_tolerance = detail::get_field<double>(j, "stop_tolerance", where);
  if (j.contains("stop_window"))
    c.stop_window = detail::get_field<int>(j, "stop_window", where);
  if (j.contains("precision")) {
    const auto p = detail::get_field<std::string>(j, "precision", where);
    require(p == "single" || p == "double", "schema",
            where.string() + ": precision must be 'single' or 'double'");
    c.precision = p == "single" ? Precision::single : Precision::dbl;
  }
  if (j.contains("layer_mask"))
    c.layer_mask = detail::get_field<std::vector<std::uint8_t>>(j, "layer_mask", where);
}

inline PhantomSpec phantom_from_json(const json& j, const fs::path& where) {
  PhantomSpec spec;
  spec.nx = detail::get_field<int>(j, "nx", where);
  spec.ny = detail::get_field<int>(j, "ny", where);
  spec.n_layers = detail::get_field<int>(j, "n_layers", where);
  spec.pixel_pitch = detail::get_field<double>(j, "pixel_pitch_um", where);
  spec.dz = detail::get_field<double>(j, "dz_um", where);
  spec.n_medium = detail::get_field<double>(j, "n_medium", where);
  if (!j.contains("primitives")) return spec;
  require(j.at("primitives").is_array(), "schema",
          where.string() + ": primitives must be an array");
  for (const auto& pj : j.at("primitives")) {
    Primitive p;
    const auto type = detail::get_field<std::string>(pj, "type", where);
    p.center = detail::get_field<std::array<double, 3>>(pj, "center_um", where);
    const auto index = detail::get_field<std::array<double, 2>>(pj, "index", where);
    p.index = {index[0], index[1]};
    if (type == "sphere") {
      p.kind = Primitive::Kind::sphere;
      p.radius = detail::get_field<double>(pj, "radius_um", where);
    } else if (type == "shell") {
      p.kind = Primitive::Kind::shell;
      p.radius = detail::get_field<double>(pj, "outer_radius_um", where);
      p.inner_radius = detail::get_field<double>(pj, "inner_radius_um", where);
    } else if (type == "box") {
      p.kind = Primitive::Kind::box;
      p.size = detail::get_field<std::array<double, 3>>(pj, "size_um", where);
    } else {
      fail("schema", where.string() + ": unknown primitive type '" + type + "'");
    }
    spec.primitives.push_back(p);
  }
  return spec;
}

inline NoiseSpec noise_from_json(const json& j, const fs::path& where) {
  NoiseSpec n;
  const auto model = detail::get_field<std::string>(j, "model", where);
  if (model == "none") n.model = NoiseSpec::Model::none;
  else if (model == "gaussian") n.model = NoiseSpec::Model::gaussian;
  else if (model == "poisson") n.model = NoiseSpec::Model::poisson;
  else fail("schema", where.string() + ": unknown noise model '" + model + "'");
  if (j.contains("parameter"))
    n.parameter = detail::get_field<double>(j, "parameter", where);
  return n;
}

}  // namespace io
}  // namespace odt
