#pragma once

#include <complex>
#include <vector>

#include "odt/field.hpp"

namespace odt {

/// N-layer grid of complex refractive index, layer-major:
/// n(x, y, layer k) at v[(k*nx + x)*ny + y]. Layer spacing dz, lateral
/// spacing pixel_pitch, immersed in a homogeneous medium of index n_medium.
template <class R>
struct RIVolume {
  using complex_type = std::complex<R>;

  int nx = 0, ny = 0, n_layers = 0;
  R pixel_pitch = R(0);
  R dz = R(0);
  R n_medium = R(0);
  std::vector<complex_type> n;

  RIVolume() = default;
  RIVolume(int nx_, int ny_, int n_layers_, R pixel_pitch_, R dz_, R n_medium_)
      : nx(nx_), ny(ny_), n_layers(n_layers_), pixel_pitch(pixel_pitch_), dz(dz_),
        n_medium(n_medium_),
        n(std::size_t(nx_) * std::size_t(ny_) * std::size_t(n_layers_),
          complex_type(n_medium_, R(0))) {
    detail::check_grid_dims(nx_, ny_, "RIVolume");
    require(n_layers_ >= 1, "invalid_argument", "RIVolume: need at least one layer");
    require(pixel_pitch_ > R(0) && dz_ > R(0), "invalid_argument",
            "RIVolume: spacings must be positive");
  }

  std::size_t size() const { return n.size(); }
  std::size_t layer_stride() const { return std::size_t(nx) * ny; }
  std::size_t index(int x, int y, int k) const {
    return (std::size_t(k) * nx + x) * ny + y;
  }
  complex_type& at(int x, int y, int k) { return n[index(x, y, k)]; }
  const complex_type& at(int x, int y, int k) const { return n[index(x, y, k)]; }

  const complex_type* layer(int k) const { return n.data() + std::size_t(k) * layer_stride(); }
  complex_type* layer(int k) { return n.data() + std::size_t(k) * layer_stride(); }

  bool same_grid(const RIVolume& o) const {
    return nx == o.nx && ny == o.ny && n_layers == o.n_layers &&
           pixel_pitch == o.pixel_pitch && dz == o.dz;
  }
};

template <class R>
bool all_finite(const RIVolume<R>& vol) {
  for (const auto& z : vol.n)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

template <class RTo, class RFrom>
RIVolume<RTo> convert_volume(const RIVolume<RFrom>& in) {
  RIVolume<RTo> out(in.nx, in.ny, in.n_layers, RTo(in.pixel_pitch), RTo(in.dz),
                    RTo(in.n_medium));
  for (std::size_t i = 0; i < in.n.size(); ++i)
    out.n[i] = std::complex<RTo>(RTo(in.n[i].real()), RTo(in.n[i].imag()));
  return out;
}

}  // namespace odt
