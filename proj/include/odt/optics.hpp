#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "odt/fft.hpp"
#include "odt/field.hpp"

namespace odt {

/// Angular spatial frequencies (rad/um) per FFT sample, DC at index 0.
/// Convention: k = 2*pi * cycle frequency; step 2*pi/(n*pitch) per axis.
template <class R>
struct FrequencyGrid {
  int nx = 0, ny = 0;
  R pitch = R(0);
  std::vector<R> kx, ky;  // sizes nx and ny, FFT order

  R dkx() const { return two_pi_v<R> / (R(nx) * pitch); }
  R dky() const { return two_pi_v<R> / (R(ny) * pitch); }
  R nyquist() const { return pi_v<R> / pitch; }
  bool same_grid(const FrequencyGrid& o) const {
    return nx == o.nx && ny == o.ny && pitch == o.pitch;
  }
};

template <class R>
FrequencyGrid<R> make_frequency_grid(int nx, int ny, R pixel_pitch) {
  detail::check_grid_dims(nx, ny, "make_frequency_grid");
  require(pixel_pitch > R(0), "invalid_argument",
          "make_frequency_grid: pixel pitch must be positive");
  FrequencyGrid<R> g;
  g.nx = nx;
  g.ny = ny;
  g.pitch = pixel_pitch;
  g.kx.resize(nx);
  g.ky.resize(ny);
  const R dkx = g.dkx(), dky = g.dky();
  for (int i = 0; i < nx; ++i) g.kx[i] = dkx * R(i <= nx / 2 ? i : i - nx);
  for (int j = 0; j < ny; ++j) g.ky[j] = dky * R(j <= ny / 2 ? j : j - ny);
  return g;
}

/// Frequency-domain transfer mask of the imaging objective. The ideal pupil
/// is the binary disk |k| <= 2*pi*NA/lambda; complex values are admitted for
/// forward compatibility but only the binary disk is constructed here.
template <class R>
struct Pupil {
  FrequencyGrid<R> grid;
  std::vector<std::complex<R>> transfer;  // FFT order, x*ny + y
  R na = R(0);
  R wavelength = R(0);  // the lambda used for the cutoff
  R cutoff = R(0);      // rad/um
  bool clipped_to_nyquist = false;
};

template <class R>
Pupil<R> make_pupil(const FrequencyGrid<R>& grid, R na, R wavelength) {
  require(na > R(0), "invalid_argument", "make_pupil: NA must be positive");
  require(wavelength > R(0), "invalid_argument", "make_pupil: wavelength must be positive");
  Pupil<R> p;
  p.grid = grid;
  p.na = na;
  p.wavelength = wavelength;
  p.cutoff = two_pi_v<R> * na / wavelength;
  p.clipped_to_nyquist = p.cutoff > grid.nyquist();
  p.transfer.resize(std::size_t(grid.nx) * grid.ny);
  const R c2 = p.cutoff * p.cutoff;
  for (int x = 0; x < grid.nx; ++x) {
    const R kx2 = grid.kx[x] * grid.kx[x];
    for (int y = 0; y < grid.ny; ++y) {
      const R k2 = kx2 + grid.ky[y] * grid.ky[y];
      p.transfer[std::size_t(x) * grid.ny + y] = (k2 <= c2) ? R(1) : R(0);
    }
  }
  return p;
}

namespace detail {

// Angular-spectrum kernels are pure functions of (dims, pitch, distance,
// wavelength); cache them since the reconstruction loop reuses a handful.
template <class R>
struct KernelKey {
  int nx, ny;
  R pitch, distance, wavelength;
  bool operator<(const KernelKey& o) const {
    return std::tie(nx, ny, pitch, distance, wavelength) <
           std::tie(o.nx, o.ny, o.pitch, o.distance, o.wavelength);
  }
};

template <class R>
std::shared_ptr<const std::vector<std::complex<R>>> propagation_kernel(
    const FrequencyGrid<R>& grid, R distance, R wavelength) {
  static std::mutex mutex;
  static std::map<KernelKey<R>, std::shared_ptr<const std::vector<std::complex<R>>>> cache;

  KernelKey<R> key{};
  key.nx = grid.nx;
  key.ny = grid.ny;
  key.pitch = grid.pitch;
  key.distance = distance;
  key.wavelength = wavelength;

  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  auto kernel = std::make_shared<std::vector<std::complex<R>>>(
      std::size_t(grid.nx) * grid.ny);
  const R km = two_pi_v<R> / wavelength;
  const R km2 = km * km;
  for (int x = 0; x < grid.nx; ++x) {
    const R kx2 = grid.kx[x] * grid.kx[x];
    for (int y = 0; y < grid.ny; ++y) {
      const R k2 = kx2 + grid.ky[y] * grid.ky[y];
      std::complex<R> h{};
      if (k2 <= km2) {
        // exp(-j * d * sqrt(km^2 - |k|^2)); evanescent band hard-zeroed so
        // the operator stays unitary and exactly invertible in-band.
        const R kz = std::sqrt(km2 - k2);
        h = std::polar(R(1), -distance * kz);
      }
      (*kernel)[std::size_t(x) * grid.ny + y] = h;
    }
  }
  if (cache.size() > 256) cache.clear();
  cache.emplace(key, kernel);
  return kernel;
}

}  // namespace detail

/// Free-space angular-spectrum propagation over a signed distance.
/// pad_factor > 1 embeds the field in a larger zero grid to suppress
/// wrap-around, invisible to the caller.
template <class R>
Field2D<R> propagate(const Field2D<R>& field, R distance, R wavelength, int pad_factor = 1) {
  require(wavelength > R(0), "invalid_argument", "propagate: wavelength must be positive");
  require(pad_factor >= 1, "invalid_argument", "propagate: pad factor must be >= 1");
  if (pad_factor > 1) {
    Field2D<R> padded(field.nx * pad_factor, field.ny * pad_factor, field.pitch);
    for (int x = 0; x < field.nx; ++x)
      for (int y = 0; y < field.ny; ++y) padded.at(x, y) = field.at(x, y);
    Field2D<R> big = propagate(padded, distance, wavelength, 1);
    Field2D<R> out(field.nx, field.ny, field.pitch);
    for (int x = 0; x < field.nx; ++x)
      for (int y = 0; y < field.ny; ++y) out.at(x, y) = big.at(x, y);
    return out;
  }

  const FrequencyGrid<R> grid = make_frequency_grid<R>(field.nx, field.ny, field.pitch);
  auto kernel = detail::propagation_kernel(grid, distance, wavelength);
  std::vector<std::complex<R>> spec = fft::forward2<R>(field.v, field.nx, field.ny);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= (*kernel)[i];
  Field2D<R> out = field;
  fft::transform<R>(spec, out.v, {field.nx, field.ny}, FFTW_BACKWARD);
  return out;
}

/// Restriction of a field to the propagating band |k| <= 2*pi/lambda.
template <class R>
Field2D<R> band_limit(const Field2D<R>& field, R wavelength) {
  return propagate(field, R(0), wavelength);
}

namespace detail {

template <class R>
Field2D<R> filter_with(const Field2D<R>& field, const Pupil<R>& pupil, bool conjugate) {
  require(field.nx == pupil.grid.nx && field.ny == pupil.grid.ny &&
              field.pitch == pupil.grid.pitch,
          "grid_mismatch", "apply_pupil: field and pupil grids differ");
  std::vector<std::complex<R>> spec = fft::forward2<R>(field.v, field.nx, field.ny);
  if (conjugate) {
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= std::conj(pupil.transfer[i]);
  } else {
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= pupil.transfer[i];
  }
  Field2D<R> out = field;
  fft::transform<R>(spec, out.v, {field.nx, field.ny}, FFTW_BACKWARD);
  return out;
}

}  // namespace detail

template <class R>
Field2D<R> apply_pupil(const Field2D<R>& field, const Pupil<R>& pupil) {
  return detail::filter_with(field, pupil, false);
}

/// Frequency-domain multiplication by the conjugated pupil (the adjoint of
/// apply_pupil).
template <class R>
Field2D<R> apply_pupil_adjoint(const Field2D<R>& field, const Pupil<R>& pupil) {
  return detail::filter_with(field, pupil, true);
}

/// Fourier magnitude of an intensity image, DC-centered for display and
/// circle search. Sample (nx/2, ny/2) is DC.
template <class R>
struct Spectrum2D {
  int nx = 0, ny = 0;
  R dkx = R(0), dky = R(0);  // rad/um per sample
  std::vector<R> mag;        // x*ny + y, DC-centered

  R& at(int x, int y) { return mag[std::size_t(x) * ny + y]; }
  const R& at(int x, int y) const { return mag[std::size_t(x) * ny + y]; }
};

template <class R>
Spectrum2D<R> intensity_spectrum(const Image2D<R>& image) {
  for (R x : image.v)
    require(x >= R(0), "invalid_argument", "intensity_spectrum: image must be non-negative");
  std::vector<std::complex<R>> buf(image.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = image.v[i];
  std::vector<std::complex<R>> spec = fft::forward2<R>(buf, image.nx, image.ny);

  Spectrum2D<R> out;
  out.nx = image.nx;
  out.ny = image.ny;
  const auto grid = make_frequency_grid<R>(image.nx, image.ny, image.pitch);
  out.dkx = grid.dkx();
  out.dky = grid.dky();
  out.mag.resize(spec.size());
  for (int x = 0; x < image.nx; ++x) {
    int sx = (x + image.nx / 2) % image.nx;  // centered index for FFT bin x
    for (int y = 0; y < image.ny; ++y) {
      int sy = (y + image.ny / 2) % image.ny;
      out.mag[std::size_t(sx) * image.ny + sy] = std::abs(spec[std::size_t(x) * image.ny + y]);
    }
  }
  return out;
}

}  // namespace odt
