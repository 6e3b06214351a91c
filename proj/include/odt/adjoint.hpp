#pragma once

#include <cstdint>

#include "odt/forward.hpp"

namespace odt {

/// Amplitude-mismatch residual at the camera plane:
/// q0 = exp(j*angle(predicted)) * (|predicted| - sqrt(measured)).
/// Where |predicted| = 0 the phase factor is defined as 1.
template <class R>
Field2D<R> amplitude_residual(const Field2D<R>& predicted, const Image2D<R>& measured) {
  require(predicted.nx == measured.nx && predicted.ny == measured.ny &&
              predicted.pitch == measured.pitch,
          "grid_mismatch", "amplitude_residual: grids differ");
  Field2D<R> q = predicted;
  for (std::size_t i = 0; i < q.v.size(); ++i) {
    require(measured.v[i] >= R(0), "invalid_argument",
            "amplitude_residual: negative measured intensity");
    const R mag = modulus(predicted.v[i]);
    const std::complex<R> phase =
        mag > R(0) ? predicted.v[i] / mag : std::complex<R>(R(1), R(0));
    q.v[i] = phase * (mag - std::sqrt(measured.v[i]));
  }
  return q;
}

/// Data-fit cost for one angle: sum_r (|predicted| - sqrt(measured))^2.
template <class R>
R cost_term(const Field2D<R>& predicted, const Image2D<R>& measured) {
  require(predicted.nx == measured.nx && predicted.ny == measured.ny &&
              predicted.pitch == measured.pitch,
          "grid_mismatch", "cost_term: grids differ");
  R acc = R(0);
  for (std::size_t i = 0; i < predicted.v.size(); ++i) {
    require(measured.v[i] >= R(0), "invalid_argument", "cost_term: negative measured intensity");
    const R d = modulus(predicted.v[i]) - std::sqrt(measured.v[i]);
    acc += d * d;
  }
  return acc;
}

/// Adjoint of image_field: conjugate pupil, then propagate by +z_hat back to
/// the exit plane.
template <class R>
Field2D<R> backproject_residual(const Field2D<R>& q0, const OpticalSystem<R>& system) {
  require(system.matches(q0), "grid_mismatch",
          "backproject_residual: field is not on the system grid");
  return propagate(apply_pupil_adjoint(q0, system.pupil), system.z_hat,
                   system.wavelength_medium);
}

/// One complex gradient image per layer.
template <class R>
struct LayerGradient {
  std::vector<Field2D<R>> s;
};

/// Layer-reversed residual recursion. For k = N..1:
///   s_k = (-j*2*pi*dz/lambda) * conj(y_k) * q_{k+1}
///   q_k = P_{-dz}{ conj(t_k) * q_{k+1} }
/// using conj(y_k) = conj(t_k) * conj(P_dz{y_{k-1}}) from the stored stack.
template <class R>
LayerGradient<R> accumulate_gradient(const LayerFieldStack<R>& stack,
                                     const RIVolume<R>& volume, const Field2D<R>& q_top,
                                     R wavelength) {
  require(int(stack.fields.size()) == volume.n_layers, "invalid_argument",
          "accumulate_gradient: stack and volume layer counts differ");
  require(q_top.nx == volume.nx && q_top.ny == volume.ny, "grid_mismatch",
          "accumulate_gradient: residual grid differs from volume");

  LayerGradient<R> grad;
  grad.s.resize(volume.n_layers);
  const std::complex<R> coeff(R(0), -two_pi_v<R> * volume.dz / wavelength);

  Field2D<R> q = q_top;
  for (int k = volume.n_layers - 1; k >= 0; --k) {
    const Field2D<R>& y = stack.fields[std::size_t(k)];
    Field2D<R> s(volume.nx, volume.ny, volume.pixel_pitch);
    for (std::size_t i = 0; i < s.v.size(); ++i)
      s.v[i] = coeff * std::conj(y.v[i]) * q.v[i];
    grad.s[std::size_t(k)] = std::move(s);

    if (k > 0) {
      const Field2D<R> t = transmittance(volume, k, wavelength);
      for (std::size_t i = 0; i < q.v.size(); ++i) q.v[i] *= std::conj(t.v[i]);
      q = propagate(q, -volume.dz, wavelength);
    }
  }
  return grad;
}

enum class Constraint : std::uint8_t { none, real_only, nonneg_absorption };

template <class R>
void project_constraint(RIVolume<R>& volume, Constraint c) {
  switch (c) {
    case Constraint::none:
      break;
    case Constraint::real_only:
      for (auto& z : volume.n) z = std::complex<R>(z.real(), R(0));
      break;
    case Constraint::nonneg_absorption:
      for (auto& z : volume.n)
        if (z.imag() < R(0)) z = std::complex<R>(z.real(), R(0));
      break;
  }
}

/// In-place gradient-descent step n_k <- n_k - alpha * s_k, then the optional
/// physicality projection. An empty layer_mask updates every layer.
template <class R>
void apply_update(RIVolume<R>& volume, const LayerGradient<R>& grad, R alpha,
                  Constraint constraint = Constraint::none,
                  const std::vector<std::uint8_t>& layer_mask = {}) {
  require(alpha >= R(0), "invalid_argument", "apply_update: alpha must be non-negative");
  require(int(grad.s.size()) == volume.n_layers, "invalid_argument",
          "apply_update: gradient and volume layer counts differ");
  require(layer_mask.empty() || int(layer_mask.size()) == volume.n_layers,
          "invalid_argument", "apply_update: layer mask length mismatch");
  const std::size_t stride = volume.layer_stride();
  for (int k = 0; k < volume.n_layers; ++k) {
    if (!layer_mask.empty() && !layer_mask[std::size_t(k)]) continue;
    auto* layer = volume.layer(k);
    const auto& s = grad.s[std::size_t(k)].v;
    for (std::size_t i = 0; i < stride; ++i) layer[i] -= alpha * s[i];
  }
  project_constraint(volume, constraint);
}

}  // namespace odt
