#pragma once

// Shared helpers for the test suites. Everything here is test-side only.

#include "odt/odt.hpp"

namespace test_support {

using odt::Field2D;
using odt::Illumination;
using odt::Image2D;
using odt::OpticalSystem;
using odt::RIVolume;
using odt::SplitMix64;

inline Field2D<double> random_field(int nx, int ny, double pitch, SplitMix64& rng,
                                    double scale = 1.0) {
  Field2D<double> f(nx, ny, pitch);
  for (auto& z : f.v)
    z = std::complex<double>(scale * (rng.uniform01() - 0.5),
                             scale * (rng.uniform01() - 0.5));
  return f;
}

/// Random field restricted to the propagating band, for unitarity checks.
inline Field2D<double> random_inband_field(int nx, int ny, double pitch, double wavelength,
                                           SplitMix64& rng) {
  return odt::band_limit(random_field(nx, ny, pitch, rng), wavelength);
}

inline RIVolume<double> random_volume(int nx, int ny, int n_layers, double pitch, double dz,
                                      double n_medium, SplitMix64& rng, double contrast,
                                      double absorption = 0.0) {
  RIVolume<double> vol(nx, ny, n_layers, pitch, dz, n_medium);
  for (auto& z : vol.n)
    z = std::complex<double>(n_medium + contrast * (rng.uniform01() - 0.5),
                             absorption * rng.uniform01());
  return vol;
}

/// Smooth low-contrast blob phantom whose spectrum stays deep inside the
/// propagating band.
inline RIVolume<double> gaussian_blob_volume(int nx, int ny, int n_layers, double pitch,
                                             double dz, double n_medium, double contrast,
                                             double sigma_um) {
  RIVolume<double> vol(nx, ny, n_layers, pitch, dz, n_medium);
  const double cx = nx * pitch / 2, cy = ny * pitch / 2, cz = n_layers * dz / 2;
  for (int k = 0; k < n_layers; ++k)
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        const double dx = (x + 0.5) * pitch - cx;
        const double dy = (y + 0.5) * pitch - cy;
        const double dzv = (k + 0.5) * dz - cz;
        const double r2 = dx * dx + dy * dy + dzv * dzv;
        vol.at(x, y, k) += contrast * std::exp(-r2 / (2 * sigma_um * sigma_um));
      }
  return vol;
}

/// The acceptance-scale optical geometry (64x64, NA 1.1, oil immersion).
struct BeadScenario {
  int nx = 64, ny = 64, n_layers = 32;
  double pitch = 0.1, dz = 0.2;
  double n_medium = 1.552;
  double wavelength_vacuum = 0.532;
  double na = 1.1;

  double wavelength_medium() const { return wavelength_vacuum / n_medium; }
  OpticalSystem<double> system() const {
    return odt::make_optical_system<double>(nx, ny, pitch, wavelength_medium(), n_medium,
                                            na, na, dz * n_layers / 2);
  }
};

/// AC spectral energy ratio: inside the two pupil-radius disks at +/-k0
/// versus outside, DC excluded.
inline double two_circle_energy_ratio(const Image2D<double>& intensity,
                                      const std::array<double, 2>& k0, double cutoff) {
  const auto spec = odt::intensity_spectrum(intensity);
  double inside = 0.0, outside = 0.0;
  for (int i = 0; i < spec.nx; ++i)
    for (int j = 0; j < spec.ny; ++j) {
      if (i == spec.nx / 2 && j == spec.ny / 2) continue;  // DC
      const double kx = (i - spec.nx / 2) * spec.dkx;
      const double ky = (j - spec.ny / 2) * spec.dky;
      const double e = spec.at(i, j) * spec.at(i, j);
      const double dp = std::hypot(kx - k0[0], ky - k0[1]);
      const double dm = std::hypot(kx + k0[0], ky + k0[1]);
      if (dp <= cutoff || dm <= cutoff) inside += e;
      else outside += e;
    }
  return outside > 0.0 ? inside / outside : std::numeric_limits<double>::infinity();
}

inline double max_abs_diff(const std::vector<std::complex<double>>& a,
                           const std::vector<std::complex<double>>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_l2_error(const Field2D<double>& got, const Field2D<double>& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.v.size(); ++i) {
    num += odt::abs_sq(got.v[i] - want.v[i]);
    den += odt::abs_sq(want.v[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace test_support
