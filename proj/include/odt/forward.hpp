#pragma once

#include "odt/system.hpp"
#include "odt/volume.hpp"

namespace odt {

/// Per-layer complex phase screen t(r) = exp(j*(2*pi/lambda)*dz*(n(r) - n_m)).
template <class R>
Field2D<R> transmittance(const std::complex<R>* layer, int nx, int ny, R pixel_pitch, R dz,
                         R wavelength, R n_medium) {
  require(dz > R(0), "invalid_argument", "transmittance: dz must be positive");
  Field2D<R> t(nx, ny, pixel_pitch);
  const R w = two_pi_v<R> / wavelength * dz;
  const std::complex<R> jw(R(0), w);
  for (std::size_t i = 0; i < t.v.size(); ++i)
    t.v[i] = std::exp(jw * (layer[i] - n_medium));
  return t;
}

template <class R>
Field2D<R> transmittance(const RIVolume<R>& vol, int k, R wavelength) {
  return transmittance(vol.layer(k), vol.nx, vol.ny, vol.pixel_pitch, vol.dz, wavelength,
                       vol.n_medium);
}

/// Stored per-layer fields of one forward pass: incident = y0 at the entrance
/// plane of layer 1, fields[k-1] = y_k after layer k's phase screen.
template <class R>
struct LayerFieldStack {
  Field2D<R> incident;
  std::vector<Field2D<R>> fields;

  const Field2D<R>& exit_field() const { return fields.back(); }
};

/// Unit-amplitude plane wave for a grid-snapped wavevector, built from the
/// integer sample indices so the field wraps seamlessly at the grid edges.
template <class R>
Field2D<R> illumination_field(const Illumination<R>& illum, int nx, int ny, R pixel_pitch) {
  const auto grid = make_frequency_grid<R>(nx, ny, pixel_pitch);
  const auto idx = grid_indices(illum.k0, grid);
  Field2D<R> y0(nx, ny, pixel_pitch);
  for (int x = 0; x < nx; ++x) {
    const R px = R(idx[0]) * R(x) / R(nx);
    for (int y = 0; y < ny; ++y) {
      const R phase = two_pi_v<R> * (px + R(idx[1]) * R(y) / R(ny));
      y0.at(x, y) = illum.amplitude * std::polar(R(1), phase);
    }
  }
  return y0;
}

/// Multi-slice beam propagation: y_k = t_k * P_dz{ y_{k-1} }, k = 1..N,
/// with all layer fields stored for the backward pass.
template <class R>
LayerFieldStack<R> msbp_forward(const RIVolume<R>& volume, const Illumination<R>& illum,
                                R wavelength) {
  const auto grid = make_frequency_grid<R>(volume.nx, volume.ny, volume.pixel_pitch);
  const auto k0 = snap_to_grid(illum.k0, grid);
  const R km = two_pi_v<R> / wavelength;
  require(k0[0] * k0[0] + k0[1] * k0[1] < km * km, "out_of_band",
          "msbp_forward: illumination wavevector outside the propagating band");

  LayerFieldStack<R> stack;
  Illumination<R> snapped{k0, illum.amplitude};
  stack.incident = illumination_field(snapped, volume.nx, volume.ny, volume.pixel_pitch);
  stack.fields.reserve(volume.n_layers);

  const Field2D<R>* prev = &stack.incident;
  for (int k = 0; k < volume.n_layers; ++k) {
    Field2D<R> y = propagate(*prev, volume.dz, wavelength);
    const Field2D<R> t = transmittance(volume, k, wavelength);
    for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] *= t.v[i];
    stack.fields.push_back(std::move(y));
    prev = &stack.fields.back();
  }
  return stack;
}

/// Camera-plane field: refocus the exit field by -z_hat, then apply the pupil.
template <class R>
Field2D<R> image_field(const Field2D<R>& exit, const OpticalSystem<R>& system) {
  require(system.matches(exit), "grid_mismatch", "image_field: field is not on the system grid");
  return apply_pupil(propagate(exit, -system.z_hat, system.wavelength_medium), system.pupil);
}

/// Predicted camera intensity |E|^2 for one illumination.
template <class R>
Image2D<R> predict_intensity(const RIVolume<R>& volume, const Illumination<R>& illum,
                             const OpticalSystem<R>& system) {
  require(system.nx == volume.nx && system.ny == volume.ny &&
              system.pixel_pitch == volume.pixel_pitch,
          "grid_mismatch", "predict_intensity: volume is not on the system grid");
  const auto stack = msbp_forward(volume, illum, system.wavelength_medium);
  const Field2D<R> e = image_field(stack.exit_field(), system);
  Image2D<R> intensity(e.nx, e.ny, e.pitch);
  for (std::size_t i = 0; i < e.v.size(); ++i) intensity.v[i] = abs_sq(e.v[i]);
  return intensity;
}

}  // namespace odt
