#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "odt/dataset.hpp"
#include "odt/forward.hpp"
#include "odt/rng.hpp"

namespace odt {

struct Primitive {
  enum class Kind : std::uint8_t { sphere, shell, box };

  Kind kind = Kind::sphere;
  std::array<double, 3> center{};  // um, relative to the volume corner
  double radius = 0.0;             // sphere / shell outer radius, um
  double inner_radius = 0.0;       // shell only, um
  std::array<double, 3> size{};    // box edge lengths, um
  std::complex<double> index{0.0, 0.0};
};

/// Ground-truth phantom description: grid geometry plus a painter's list of
/// primitives (later entries overwrite earlier ones where they overlap).
struct PhantomSpec {
  int nx = 0, ny = 0, n_layers = 0;
  double pixel_pitch = 0.0;
  double dz = 0.0;
  double n_medium = 0.0;
  std::vector<Primitive> primitives;
};

struct NoiseSpec {
  enum class Model : std::uint8_t { none, gaussian, poisson };

  Model model = Model::none;
  double parameter = 0.0;  // gaussian: relative std; poisson: photons per unit intensity

  void validate() const {
    require(parameter >= 0.0, "invalid_argument", "NoiseSpec: parameter must be >= 0");
  }
};

namespace sim_detail {

inline bool contains(const Primitive& p, double x, double y, double z) {
  const double dx = x - p.center[0], dy = y - p.center[1], dzv = z - p.center[2];
  switch (p.kind) {
    case Primitive::Kind::sphere:
      return dx * dx + dy * dy + dzv * dzv <= p.radius * p.radius;
    case Primitive::Kind::shell: {
      const double r2 = dx * dx + dy * dy + dzv * dzv;
      return r2 <= p.radius * p.radius && r2 >= p.inner_radius * p.inner_radius;
    }
    case Primitive::Kind::box:
      return std::abs(dx) <= p.size[0] / 2 && std::abs(dy) <= p.size[1] / 2 &&
             std::abs(dzv) <= p.size[2] / 2;
  }
  return false;
}

inline void check_inside_grid(const Primitive& p, const PhantomSpec& spec) {
  const double ex = spec.nx * spec.pixel_pitch;
  const double ey = spec.ny * spec.pixel_pitch;
  const double ez = spec.n_layers * spec.dz;
  double rx = 0, ry = 0, rz = 0;
  switch (p.kind) {
    case Primitive::Kind::sphere:
    case Primitive::Kind::shell:
      rx = ry = rz = p.radius;
      break;
    case Primitive::Kind::box:
      rx = p.size[0] / 2;
      ry = p.size[1] / 2;
      rz = p.size[2] / 2;
      break;
  }
  require(p.center[0] - rx >= 0 && p.center[0] + rx <= ex && p.center[1] - ry >= 0 &&
              p.center[1] + ry <= ey && p.center[2] - rz >= 0 && p.center[2] + rz <= ez,
          "invalid_argument", "phantom: primitive extends outside the grid");
}

}  // namespace sim_detail

/// Voxel-center-in-primitive rasterization, last primitive wins. Plain
/// voxelization without supersampling; edges carry the usual staircase.
inline RIVolume<double> rasterize_phantom(const PhantomSpec& spec) {
  RIVolume<double> vol(spec.nx, spec.ny, spec.n_layers, spec.pixel_pitch, spec.dz,
                       spec.n_medium);
  for (const auto& p : spec.primitives) {
    require(std::isfinite(p.index.real()) && std::isfinite(p.index.imag()),
            "invalid_argument", "phantom: non-finite refractive index");
    sim_detail::check_inside_grid(p, spec);
  }
  for (int k = 0; k < spec.n_layers; ++k) {
    const double z = (k + 0.5) * spec.dz;
    for (int x = 0; x < spec.nx; ++x) {
      const double px = (x + 0.5) * spec.pixel_pitch;
      for (int y = 0; y < spec.ny; ++y) {
        const double py = (y + 0.5) * spec.pixel_pitch;
        for (const auto& p : spec.primitives)
          if (sim_detail::contains(p, px, py, z)) vol.at(x, y, k) = p.index;
      }
    }
  }
  return vol;
}

/// L wavevectors on a golden-angle spiral, radius growing from 0 to
/// 2*pi*na_illum/wavelength with sqrt progression (uniform density over the
/// pupil area), each snapped to the frequency grid and sorted by radius.
inline std::vector<Illumination<double>> spiral_illuminations(
    int count, double na_illum, double wavelength, const FrequencyGrid<double>& grid) {
  require(count >= 1, "invalid_argument", "spiral_illuminations: count must be >= 1");
  require(na_illum > 0 && wavelength > 0, "invalid_argument",
          "spiral_illuminations: NA and wavelength must be positive");

  const double k_max = two_pi * na_illum / wavelength;
  const double golden_angle = pi * (3.0 - std::sqrt(5.0));

  std::vector<Illumination<double>> set;
  set.reserve(std::size_t(count));
  for (int l = 0; l < count; ++l) {
    const double r = count > 1 ? k_max * std::sqrt(double(l) / double(count - 1)) : 0.0;
    const double theta = golden_angle * double(l);
    std::array<double, 2> k{r * std::cos(theta), r * std::sin(theta)};
    auto snapped = snap_to_grid(k, grid);
    if (snapped[0] * snapped[0] + snapped[1] * snapped[1] > k_max * k_max) {
      // Round-to-nearest stepped outside the target disk; truncate toward
      // zero instead, which can only shrink each component.
      snapped = {grid.dkx() * std::trunc(k[0] / grid.dkx()),
                 grid.dky() * std::trunc(k[1] / grid.dky())};
    }
    Illumination<double> il;
    il.k0 = snapped;
    set.push_back(il);
  }
  std::stable_sort(set.begin(), set.end(),
                   [](const Illumination<double>& a, const Illumination<double>& b) {
                     return a.k0[0] * a.k0[0] + a.k0[1] * a.k0[1] <
                            b.k0[0] * b.k0[0] + b.k0[1] * b.k0[1];
                   });
  return set;
}

/// Integer-sample reporting errors of at most max_offset_samples per
/// component (Chebyshev), for calibration testing.
inline std::vector<Illumination<double>> perturb_illuminations(
    const std::vector<Illumination<double>>& illums, int max_offset_samples,
    const FrequencyGrid<double>& grid, std::uint64_t seed) {
  require(max_offset_samples >= 0, "invalid_argument",
          "perturb_illuminations: offset must be >= 0");
  std::vector<Illumination<double>> out = illums;
  SplitMix64 rng(derive_seed(seed, 0xA17CE5ULL));
  const int span = 2 * max_offset_samples + 1;
  for (auto& il : out) {
    const long di = long(rng.bounded(std::uint64_t(span))) - max_offset_samples;
    const long dj = long(rng.bounded(std::uint64_t(span))) - max_offset_samples;
    il.k0[0] += double(di) * grid.dkx();
    il.k0[1] += double(dj) * grid.dky();
  }
  return out;
}

/// Forward-simulate a dataset from a ground-truth volume. When `reported`
/// is given, those wavevectors become the dataset's nominal illuminations and
/// the true ones are retained in true_illuminations for calibration scoring.
inline AcquisitionDataset<double> simulate_dataset(
    const RIVolume<double>& volume, const std::vector<Illumination<double>>& illums,
    const OpticalSystem<double>& system, const NoiseSpec& noise, std::uint64_t seed,
    const std::optional<std::vector<Illumination<double>>>& reported = std::nullopt) {
  noise.validate();
  require(system.nx == volume.nx && system.ny == volume.ny &&
              system.pixel_pitch == volume.pixel_pitch,
          "grid_mismatch", "simulate_dataset: volume is not on the system grid");
  require(!reported || reported->size() == illums.size(), "invalid_argument",
          "simulate_dataset: reported set size differs");

  AcquisitionDataset<double> ds;
  ds.system = system;
  ds.n_layers = volume.n_layers;
  ds.dz = volume.dz;
  ds.illuminations = reported ? *reported : illums;
  if (reported) ds.true_illuminations = illums;

  for (std::size_t l = 0; l < illums.size(); ++l) {
    Image2D<double> img = predict_intensity(volume, illums[l], system);
    if (noise.model != NoiseSpec::Model::none && noise.parameter > 0.0) {
      // Independent per-angle streams: parallel simulation cannot reorder draws.
      SplitMix64 rng(derive_seed(seed, l));
      switch (noise.model) {
        case NoiseSpec::Model::gaussian:
          for (auto& v : img.v)
            v = std::max(0.0, v * (1.0 + noise.parameter * rng.gaussian()));
          break;
        case NoiseSpec::Model::poisson:
          for (auto& v : img.v)
            v = double(rng.poisson(v * noise.parameter)) / noise.parameter;
          break;
        case NoiseSpec::Model::none:
          break;
      }
    }
    ds.intensities.push_back(std::move(img));
  }
  return ds;
}

}  // namespace odt
