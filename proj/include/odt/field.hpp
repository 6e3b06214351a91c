#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "odt/common.hpp"

namespace odt {

namespace detail {
inline void check_grid_dims(int nx, int ny, const char* what) {
  require(nx >= 2 && ny >= 2 && nx % 2 == 0 && ny % 2 == 0, "invalid_argument",
          std::string(what) + ": grid dims must be even and >= 2, got " +
              std::to_string(nx) + "x" + std::to_string(ny));
}
}  // namespace detail

/// Sampled complex scalar field on a regular 2D grid.
/// Row-major with y fastest: value (x, y) lives at v[x * ny + y].
template <class R>
struct Field2D {
  using complex_type = std::complex<R>;

  int nx = 0, ny = 0;
  R pitch = R(0);  // sample spacing, um
  std::vector<complex_type> v;

  Field2D() = default;
  Field2D(int nx_, int ny_, R pitch_, complex_type fill = complex_type{})
      : nx(nx_), ny(ny_), pitch(pitch_), v(std::size_t(nx_) * std::size_t(ny_), fill) {
    detail::check_grid_dims(nx_, ny_, "Field2D");
    require(pitch_ > R(0), "invalid_argument", "Field2D: pixel pitch must be positive");
  }

  std::size_t size() const { return v.size(); }
  complex_type& at(int x, int y) { return v[std::size_t(x) * ny + y]; }
  const complex_type& at(int x, int y) const { return v[std::size_t(x) * ny + y]; }

  bool same_grid(const Field2D& o) const {
    return nx == o.nx && ny == o.ny && pitch == o.pitch;
  }
};

/// Real-valued 2D image on the same layout as Field2D.
template <class R>
struct Image2D {
  int nx = 0, ny = 0;
  R pitch = R(0);
  std::vector<R> v;

  Image2D() = default;
  Image2D(int nx_, int ny_, R pitch_, R fill = R(0))
      : nx(nx_), ny(ny_), pitch(pitch_), v(std::size_t(nx_) * std::size_t(ny_), fill) {
    detail::check_grid_dims(nx_, ny_, "Image2D");
    require(pitch_ > R(0), "invalid_argument", "Image2D: pixel pitch must be positive");
  }

  std::size_t size() const { return v.size(); }
  R& at(int x, int y) { return v[std::size_t(x) * ny + y]; }
  const R& at(int x, int y) const { return v[std::size_t(x) * ny + y]; }
};

/// Plain real 3D grid, layer-major: value (x, y, k) at v[(k*nx + x)*ny + y].
/// Carries no physical metadata; used by the TV machinery and blend masks.
template <class R>
struct Grid3 {
  int nx = 0, ny = 0, nz = 0;
  std::vector<R> v;

  Grid3() = default;
  Grid3(int nx_, int ny_, int nz_, R fill = R(0))
      : nx(nx_), ny(ny_), nz(nz_),
        v(std::size_t(nx_) * std::size_t(ny_) * std::size_t(nz_), fill) {
    require(nx_ >= 1 && ny_ >= 1 && nz_ >= 1, "invalid_argument",
            "Grid3: dims must be >= 1");
  }

  std::size_t size() const { return v.size(); }
  std::size_t index(int x, int y, int k) const {
    return (std::size_t(k) * nx + x) * ny + y;
  }
  R& at(int x, int y, int k) { return v[index(x, y, k)]; }
  const R& at(int x, int y, int k) const { return v[index(x, y, k)]; }
};

template <class R>
R norm2_sq(const Field2D<R>& f) {
  R acc = R(0);
  for (const auto& z : f.v) acc += abs_sq(z);
  return acc;
}

template <class R>
R norm2(const Field2D<R>& f) {
  return std::sqrt(norm2_sq(f));
}

/// <x, y> = sum conj(x_i) * y_i.
template <class R>
std::complex<R> inner(const Field2D<R>& x, const Field2D<R>& y) {
  require(x.same_grid(y), "grid_mismatch", "inner: fields on different grids");
  std::complex<R> acc{};
  for (std::size_t i = 0; i < x.v.size(); ++i) acc += std::conj(x.v[i]) * y.v[i];
  return acc;
}

template <class R>
bool all_finite(const Field2D<R>& f) {
  for (const auto& z : f.v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

template <class R>
bool all_finite(const Image2D<R>& f) {
  for (R x : f.v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace odt
