#pragma once

#include <png.h>

#include <algorithm>
#include <cstdio>

#include "odt/calibrate.hpp"
#include "odt/io.hpp"
#include "odt/volume.hpp"

namespace odt {
namespace render {

namespace fs = std::filesystem;

/// 8-bit grayscale PNG with the window limits recorded in a JSON sidecar.
/// Rows follow the x axis of the grid, columns the y axis.
inline void write_png8(const fs::path& path, const std::vector<double>& values, int nx,
                       int ny, double lo, double hi) {
  require(values.size() == std::size_t(nx) * ny, "invalid_argument",
          "write_png8: value count does not match dims");
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<png_byte> pixels(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = std::clamp((values[i] - lo) / span, 0.0, 1.0);
    pixels[i] = png_byte(std::lround(t * 255.0));
  }

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(ny);
  image.height = png_uint_32(nx);
  image.format = PNG_FORMAT_GRAY;
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  const int ok = png_image_write_to_file(&image, path.string().c_str(), 0, pixels.data(),
                                         png_int_32(ny), nullptr);
  require(ok != 0, "io", "write_png8: libpng failed for " + path.string());

  io::json sidecar;
  sidecar["window_min"] = lo;
  sidecar["window_max"] = hi;
  io::write_text_atomic(path.string() + ".json", sidecar.dump(2) + "\n");
}

inline std::pair<double, double> value_range(const std::vector<double>& values) {
  double lo = values.empty() ? 0.0 : values[0];
  double hi = lo;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

enum class Part : std::uint8_t { real, imag };

inline std::vector<double> slice_xy(const RIVolume<double>& vol, int layer, Part part) {
  require(layer >= 0 && layer < vol.n_layers, "invalid_argument", "slice_xy: layer out of range");
  std::vector<double> s(std::size_t(vol.nx) * vol.ny);
  for (int x = 0; x < vol.nx; ++x)
    for (int y = 0; y < vol.ny; ++y)
      s[std::size_t(x) * vol.ny + y] = part == Part::real ? vol.at(x, y, layer).real()
                                                          : vol.at(x, y, layer).imag();
  return s;
}

inline std::vector<double> slice_xz(const RIVolume<double>& vol, int y, Part part) {
  require(y >= 0 && y < vol.ny, "invalid_argument", "slice_xz: y out of range");
  std::vector<double> s(std::size_t(vol.nx) * vol.n_layers);
  for (int x = 0; x < vol.nx; ++x)
    for (int k = 0; k < vol.n_layers; ++k)
      s[std::size_t(x) * vol.n_layers + k] =
          part == Part::real ? vol.at(x, y, k).real() : vol.at(x, y, k).imag();
  return s;
}

inline std::vector<double> slice_yz(const RIVolume<double>& vol, int x, Part part) {
  require(x >= 0 && x < vol.nx, "invalid_argument", "slice_yz: x out of range");
  std::vector<double> s(std::size_t(vol.ny) * vol.n_layers);
  for (int y = 0; y < vol.ny; ++y)
    for (int k = 0; k < vol.n_layers; ++k)
      s[std::size_t(y) * vol.n_layers + k] =
          part == Part::real ? vol.at(x, y, k).real() : vol.at(x, y, k).imag();
  return s;
}

/// Line profile through a point, along a named axis. CSV columns:
/// position_um, re, im.
inline std::string profile_csv(const RIVolume<double>& vol, char axis, int x, int y,
                               int layer) {
  require(x >= 0 && x < vol.nx && y >= 0 && y < vol.ny && layer >= 0 &&
              layer < vol.n_layers,
          "invalid_argument", "profile_csv: point out of range");
  std::ostringstream ss;
  ss << "position_um,re,im\n";
  auto emit = [&](double pos, std::complex<double> z) {
    char line[96];
    std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g\n", pos, z.real(), z.imag());
    ss << line;
  };
  switch (axis) {
    case 'x':
      for (int i = 0; i < vol.nx; ++i)
        emit((i + 0.5) * vol.pixel_pitch, vol.at(i, y, layer));
      break;
    case 'y':
      for (int i = 0; i < vol.ny; ++i)
        emit((i + 0.5) * vol.pixel_pitch, vol.at(x, i, layer));
      break;
    case 'z':
      for (int i = 0; i < vol.n_layers; ++i) emit((i + 0.5) * vol.dz, vol.at(x, y, i));
      break;
    default:
      fail("invalid_argument", "profile_csv: axis must be x, y or z");
  }
  return ss.str();
}

/// Log-magnitude spectrum of one acquisition with the detected brightfield
/// circle pair drawn at +/-k0 (when an estimate is given).
inline void write_spectrum_png(const fs::path& path, const Image2D<double>& intensity,
                               const OpticalSystem<double>& system,
                               const WavevectorEstimate* estimate) {
  const Spectrum2D<double> spec = intensity_spectrum(intensity);
  std::vector<double> img(spec.mag.size());
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = std::log1p(spec.mag[i]);
  auto [lo, hi] = value_range(img);

  if (estimate != nullptr && estimate->flag == AngleFlag::ok) {
    const double radius = system.pupil.cutoff;
    for (int sign = -1; sign <= 1; sign += 2) {
      const double cx = sign * estimate->k0[0];
      const double cy = sign * estimate->k0[1];
      const int steps = 4 * (spec.nx + spec.ny);
      for (int t = 0; t < steps; ++t) {
        const double a = two_pi * t / steps;
        const int px = spec.nx / 2 + int(std::lround((cx + radius * std::cos(a)) / spec.dkx));
        const int py = spec.ny / 2 + int(std::lround((cy + radius * std::sin(a)) / spec.dky));
        if (px >= 0 && px < spec.nx && py >= 0 && py < spec.ny)
          img[std::size_t(px) * spec.ny + py] = hi;
      }
    }
  }
  write_png8(path, img, spec.nx, spec.ny, lo, hi);
}

}  // namespace render
}  // namespace odt
