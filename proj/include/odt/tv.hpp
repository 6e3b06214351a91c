#pragma once

#include <array>

#include "odt/field.hpp"
#include "odt/volume.hpp"

namespace odt {

/// Settings for the 3D total-variation proximal step.
struct TVConfig {
  double beta = 0.0;        // regularization weight (gamma of the prox)
  int inner_iterations = 20;
  std::array<double, 3> axis_weights{1.0, 1.0, 1.0};  // (wx, wy, wz)

  void validate() const {
    require(beta >= 0.0, "invalid_argument", "TVConfig: beta must be >= 0");
    require(inner_iterations >= 1, "invalid_argument",
            "TVConfig: inner_iterations must be >= 1");
    for (double w : axis_weights)
      require(w >= 0.0, "invalid_argument", "TVConfig: axis weights must be >= 0");
  }
};

namespace tv_detail {

// Forward differences with replicate (Neumann) boundary: zero at the last
// index along each axis.
template <class R>
void weighted_gradient(const Grid3<R>& f, const std::array<R, 3>& w, Grid3<R>& gx,
                       Grid3<R>& gy, Grid3<R>& gz) {
  const int nx = f.nx, ny = f.ny, nz = f.nz;
  for (int k = 0; k < nz; ++k)
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        const std::size_t i = f.index(x, y, k);
        const R c = f.v[i];
        gx.v[i] = (x + 1 < nx) ? w[0] * (f.at(x + 1, y, k) - c) : R(0);
        gy.v[i] = (y + 1 < ny) ? w[1] * (f.at(x, y + 1, k) - c) : R(0);
        gz.v[i] = (k + 1 < nz) ? w[2] * (f.at(x, y, k + 1) - c) : R(0);
      }
}

// Negative adjoint of weighted_gradient.
template <class R>
void weighted_divergence(const Grid3<R>& px, const Grid3<R>& py, const Grid3<R>& pz,
                         const std::array<R, 3>& w, Grid3<R>& out) {
  const int nx = out.nx, ny = out.ny, nz = out.nz;
  for (int k = 0; k < nz; ++k)
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        R d = R(0);
        if (x == 0) d += w[0] * px.at(x, y, k);
        else if (x == nx - 1) d -= w[0] * px.at(x - 1, y, k);
        else d += w[0] * (px.at(x, y, k) - px.at(x - 1, y, k));
        if (y == 0) d += w[1] * py.at(x, y, k);
        else if (y == ny - 1) d -= w[1] * py.at(x, y - 1, k);
        else d += w[1] * (py.at(x, y, k) - py.at(x, y - 1, k));
        if (k == 0) d += w[2] * pz.at(x, y, k);
        else if (k == nz - 1) d -= w[2] * pz.at(x, y, k - 1);
        else d += w[2] * (pz.at(x, y, k) - pz.at(x, y, k - 1));
        out.at(x, y, k) = d;
      }
}

}  // namespace tv_detail

/// Isotropic 3D total variation with forward differences and replicate
/// boundary: sum over voxels of sqrt((wx*Dx)^2 + (wy*Dy)^2 + (wz*Dz)^2).
template <class R>
R tv_norm(const Grid3<R>& f, const std::array<R, 3>& weights = {R(1), R(1), R(1)}) {
  const int nx = f.nx, ny = f.ny, nz = f.nz;
  R acc = R(0);
  for (int k = 0; k < nz; ++k)
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        const R c = f.at(x, y, k);
        const R dx = (x + 1 < nx) ? weights[0] * (f.at(x + 1, y, k) - c) : R(0);
        const R dy = (y + 1 < ny) ? weights[1] * (f.at(x, y + 1, k) - c) : R(0);
        const R dzv = (k + 1 < nz) ? weights[2] * (f.at(x, y, k + 1) - c) : R(0);
        acc += std::sqrt(dx * dx + dy * dy + dzv * dzv);
      }
  return acc;
}

/// Approximate prox of gamma * TV via Chambolle's semi-implicit dual
/// projection with a fixed iteration budget: the dual field obeys
/// p <- (p + tau*grad(div p - f/gamma)) / (1 + tau*|grad(div p - f/gamma)|)
/// and the output is f - gamma * div p.
template <class R>
Grid3<R> tv_prox(const Grid3<R>& f, R gamma, int inner_iterations,
                 const std::array<R, 3>& weights = {R(1), R(1), R(1)}) {
  if (gamma <= R(0)) return f;
  require(inner_iterations >= 1, "invalid_argument", "tv_prox: iterations must be >= 1");

  const R wsq = weights[0] * weights[0] + weights[1] * weights[1] + weights[2] * weights[2];
  if (wsq == R(0)) return f;
  const R tau = R(1) / (R(4) * wsq);

  Grid3<R> px(f.nx, f.ny, f.nz), py(f.nx, f.ny, f.nz), pz(f.nx, f.ny, f.nz);
  Grid3<R> div(f.nx, f.ny, f.nz);
  Grid3<R> u(f.nx, f.ny, f.nz);
  Grid3<R> gx(f.nx, f.ny, f.nz), gy(f.nx, f.ny, f.nz), gz(f.nx, f.ny, f.nz);

  for (int it = 0; it < inner_iterations; ++it) {
    tv_detail::weighted_divergence(px, py, pz, weights, div);
    for (std::size_t i = 0; i < u.v.size(); ++i) u.v[i] = div.v[i] - f.v[i] / gamma;
    tv_detail::weighted_gradient(u, weights, gx, gy, gz);
    for (std::size_t i = 0; i < px.v.size(); ++i) {
      const R gnorm =
          std::sqrt(gx.v[i] * gx.v[i] + gy.v[i] * gy.v[i] + gz.v[i] * gz.v[i]);
      const R denom = R(1) + tau * gnorm;
      px.v[i] = (px.v[i] + tau * gx.v[i]) / denom;
      py.v[i] = (py.v[i] + tau * gy.v[i]) / denom;
      pz.v[i] = (pz.v[i] + tau * gz.v[i]) / denom;
    }
  }

  tv_detail::weighted_divergence(px, py, pz, weights, div);
  Grid3<R> out = f;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= gamma * div.v[i];
  return out;
}

/// Prox applied to a complex RI volume: real and imaginary parts are
/// regularized independently with the same weight.
template <class R>
RIVolume<R> tv_prox(const RIVolume<R>& volume, const TVConfig& config) {
  config.validate();
  if (config.beta <= 0.0) return volume;

  const std::array<R, 3> w{R(config.axis_weights[0]), R(config.axis_weights[1]),
                           R(config.axis_weights[2])};
  Grid3<R> re(volume.nx, volume.ny, volume.n_layers);
  Grid3<R> im(volume.nx, volume.ny, volume.n_layers);
  for (std::size_t i = 0; i < volume.n.size(); ++i) {
    re.v[i] = volume.n[i].real();
    im.v[i] = volume.n[i].imag();
  }
  re = tv_prox(re, R(config.beta), config.inner_iterations, w);
  im = tv_prox(im, R(config.beta), config.inner_iterations, w);
  RIVolume<R> out = volume;
  for (std::size_t i = 0; i < out.n.size(); ++i)
    out.n[i] = std::complex<R>(re.v[i], im.v[i]);
  return out;
}

/// The prox objective 0.5*||f - g||^2 + gamma*TV(g); used by tests and kept
/// next to the prox so both sides agree on the discretization.
template <class R>
R tv_objective(const Grid3<R>& f, const Grid3<R>& g, R gamma,
               const std::array<R, 3>& weights = {R(1), R(1), R(1)}) {
  require(f.nx == g.nx && f.ny == g.ny && f.nz == g.nz, "grid_mismatch",
          "tv_objective: shapes differ");
  R data = R(0);
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    const R d = f.v[i] - g.v[i];
    data += d * d;
  }
  return R(0.5) * data + gamma * tv_norm(g, weights);
}

}  // namespace odt
