#pragma once

#include <array>
#include <cmath>

#include "odt/optics.hpp"

namespace odt {

/// One planar illumination, described by its 2D transverse wavevector in
/// angular units (rad/um).
template <class R>
struct Illumination {
  std::array<R, 2> k0{R(0), R(0)};
  std::complex<R> amplitude{R(1), R(0)};
};

/// Snap a wavevector to the nearest discrete frequency sample so the plane
/// wave is exactly periodic on the grid.
template <class R>
std::array<R, 2> snap_to_grid(const std::array<R, 2>& k, const FrequencyGrid<R>& grid) {
  return {grid.dkx() * R(std::lround(k[0] / grid.dkx())),
          grid.dky() * R(std::lround(k[1] / grid.dky()))};
}

/// Integer frequency-sample indices of a (snapped) wavevector.
template <class R>
std::array<long, 2> grid_indices(const std::array<R, 2>& k, const FrequencyGrid<R>& grid) {
  return {std::lround(k[0] / grid.dkx()), std::lround(k[1] / grid.dky())};
}

/// Detection-side description: grid geometry, in-medium wavelength, pupil,
/// and the focus offset z_hat between the exit plane and the plane conjugate
/// to the camera.
template <class R>
struct OpticalSystem {
  int nx = 0, ny = 0;
  R pixel_pitch = R(0);
  R wavelength_medium = R(0);  // um, inside the immersion medium
  R n_medium = R(0);
  R na_detection = R(0);
  R na_illumination = R(0);  // bookkeeping for manifests; optics use na_detection
  R z_hat = R(0);            // um, signed
  Pupil<R> pupil;

  R wavelength_vacuum() const { return wavelength_medium * n_medium; }
  FrequencyGrid<R> frequency_grid() const {
    return make_frequency_grid<R>(nx, ny, pixel_pitch);
  }
  bool matches(const Field2D<R>& f) const {
    return f.nx == nx && f.ny == ny && f.pitch == pixel_pitch;
  }
};

/// The pupil cutoff is 2*pi*NA/lambda_vacuum, equal to
/// 2*pi*(NA/n_medium)/lambda_medium; the kernel wavelength stays in-medium.
template <class R>
OpticalSystem<R> make_optical_system(int nx, int ny, R pixel_pitch, R wavelength_medium,
                                     R n_medium, R na_detection, R na_illumination,
                                     R z_hat) {
  require(wavelength_medium > R(0), "invalid_argument",
          "make_optical_system: wavelength must be positive");
  require(n_medium > R(0), "invalid_argument",
          "make_optical_system: medium index must be positive");
  OpticalSystem<R> sys;
  sys.nx = nx;
  sys.ny = ny;
  sys.pixel_pitch = pixel_pitch;
  sys.wavelength_medium = wavelength_medium;
  sys.n_medium = n_medium;
  sys.na_detection = na_detection;
  sys.na_illumination = na_illumination;
  sys.z_hat = z_hat;
  sys.pupil = make_pupil(make_frequency_grid<R>(nx, ny, pixel_pitch), na_detection,
                         sys.wavelength_vacuum());
  return sys;
}

template <class RTo, class RFrom>
OpticalSystem<RTo> convert_system(const OpticalSystem<RFrom>& in) {
  return make_optical_system<RTo>(in.nx, in.ny, RTo(in.pixel_pitch),
                                  RTo(in.wavelength_medium), RTo(in.n_medium),
                                  RTo(in.na_detection), RTo(in.na_illumination),
                                  RTo(in.z_hat));
}

}  // namespace odt
