#pragma once

#include <algorithm>
#include <array>
#include <limits>

#include "odt/fft.hpp"
#include "odt/volume.hpp"

namespace odt {

/// A reconstructed sub-volume placed at an integer voxel offset (x, y, layer)
/// within the global frame.
struct PlacedVolume {
  RIVolume<double> volume;
  std::array<long, 3> offset{0, 0, 0};
};

/// Per-contributor weights in [0, 1] on the contributor's own voxel grid.
struct BlendMask {
  int nx = 0, ny = 0, nz = 0;
  std::vector<double> w;

  std::size_t index(int x, int y, int k) const {
    return (std::size_t(k) * nx + x) * ny + y;
  }
  double& at(int x, int y, int k) { return w[index(x, y, k)]; }
  double at(int x, int y, int k) const { return w[index(x, y, k)]; }
};

struct RegistrationResult {
  std::array<long, 3> shift{0, 0, 0};  // of b relative to a, voxels (x, y, layer)
  double confidence = 0.0;             // peak-to-secondary-peak ratio
};

namespace stitch_detail {

// Normalized cross-power spectrum -> correlation surface. Signals are the
// medium-subtracted real parts, zero outside each footprint.
// whitening_floor is relative to the strongest cross-power bin: bins below
// it carry no signal and are suppressed instead of being blown up to unit
// magnitude. The correlation peak lands at the shift of b relative to a.
inline std::vector<double> phase_correlation(const std::vector<std::complex<double>>& a,
                                             const std::vector<std::complex<double>>& b,
                                             int nz, int nx, int ny,
                                             double whitening_floor = 1e-9) {
  auto fa = fft::forward3<double>(a, nz, nx, ny);
  auto fb = fft::forward3<double>(b, nz, nx, ny);
  double max_mag = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    fa[i] = std::conj(fa[i]) * fb[i];
    max_mag = std::max(max_mag, std::abs(fa[i]));
  }
  const double eps = max_mag * whitening_floor;
  for (auto& z : fa) z /= std::abs(z) + eps;
  auto corr = fft::inverse3<double>(fa, nz, nx, ny);
  std::vector<double> mag(corr.size());
  for (std::size_t i = 0; i < corr.size(); ++i) mag[i] = std::abs(corr[i]);
  return mag;
}

inline std::array<int, 3> peak_index(const std::vector<double>& corr, int nz, int nx, int ny,
                                     double* peak_value) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < corr.size(); ++i)
    if (corr[i] > corr[best]) best = i;
  *peak_value = corr[best];
  const int y = int(best % std::size_t(ny));
  const int x = int((best / std::size_t(ny)) % std::size_t(nx));
  const int z = int(best / (std::size_t(ny) * nx));
  return {z, x, y};
}

// Largest correlation value outside a 3-voxel neighborhood of the peak.
inline double secondary_peak(const std::vector<double>& corr, int nz, int nx, int ny,
                             const std::array<int, 3>& peak) {
  double second = 0.0;
  for (int z = 0; z < nz; ++z)
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        auto wrapped = [](int d, int n) {
          int m = std::abs(d) % n;
          return std::min(m, n - m);
        };
        if (wrapped(z - peak[0], nz) <= 1 && wrapped(x - peak[1], nx) <= 1 &&
            wrapped(y - peak[2], ny) <= 1)
          continue;
        second = std::max(second, corr[(std::size_t(z) * nx + x) * ny + y]);
      }
  return second;
}

inline std::vector<std::complex<double>> signal_of(const RIVolume<double>& v) {
  std::vector<std::complex<double>> s(v.n.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = v.n[i].real() - v.n_medium;
  return s;
}

}  // namespace stitch_detail

/// Integer translation of b relative to a from the 3D phase-correlation peak
/// (circular; shifts are reported in [-N/2, N/2) per axis).
inline RegistrationResult register_volumes(const RIVolume<double>& a,
                                           const RIVolume<double>& b,
                                           double min_confidence = 2.0) {
  require(a.same_grid(b), "grid_mismatch",
          "register_volumes: volumes must share dims and spacings");
  const int nz = a.n_layers, nx = a.nx, ny = a.ny;
  const auto corr = stitch_detail::phase_correlation(stitch_detail::signal_of(a),
                                                     stitch_detail::signal_of(b), nz, nx, ny);
  double peak_value = 0.0;
  const auto peak = stitch_detail::peak_index(corr, nz, nx, ny, &peak_value);
  const double second = stitch_detail::secondary_peak(corr, nz, nx, ny, peak);

  RegistrationResult r;
  r.confidence = second > 0.0 ? peak_value / second : std::numeric_limits<double>::infinity();
  auto signed_shift = [](int s, int n) { return long(s >= (n + 1) / 2 ? s - n : s); };
  r.shift = {signed_shift(peak[1], nx), signed_shift(peak[2], ny), signed_shift(peak[0], nz)};
  require(r.confidence >= min_confidence, "no_reliable_overlap",
          "register_volumes: correlation peak ratio " + std::to_string(r.confidence) +
              " below threshold");
  return r;
}

namespace stitch_detail {

struct Box {
  std::array<long, 3> lo{0, 0, 0};
  std::array<long, 3> hi{0, 0, 0};  // exclusive
};

inline Box bounding_box(const std::vector<PlacedVolume>& placed) {
  Box box;
  box.lo = {std::numeric_limits<long>::max(), std::numeric_limits<long>::max(),
            std::numeric_limits<long>::max()};
  box.hi = {std::numeric_limits<long>::min(), std::numeric_limits<long>::min(),
            std::numeric_limits<long>::min()};
  for (const auto& p : placed) {
    const std::array<long, 3> dims{long(p.volume.nx), long(p.volume.ny),
                                   long(p.volume.n_layers)};
    for (int a = 0; a < 3; ++a) {
      box.lo[a] = std::min(box.lo[a], p.offset[a]);
      box.hi[a] = std::max(box.hi[a], p.offset[a] + dims[a]);
    }
  }
  return box;
}

// Coverage multiplicity over the global frame.
inline Grid3<int> coverage_count(const std::vector<PlacedVolume>& placed, const Box& box) {
  Grid3<int> cover(int(box.hi[0] - box.lo[0]), int(box.hi[1] - box.lo[1]),
                   int(box.hi[2] - box.lo[2]));
  for (const auto& p : placed)
    for (int k = 0; k < p.volume.n_layers; ++k)
      for (int x = 0; x < p.volume.nx; ++x)
        for (int y = 0; y < p.volume.ny; ++y)
          ++cover.at(int(p.offset[0] - box.lo[0]) + x, int(p.offset[1] - box.lo[1]) + y,
                     int(p.offset[2] - box.lo[2]) + k);
  return cover;
}

// Chebyshev distance to the nearest zero voxel, two-pass chamfer over the
// full 26-neighborhood. inside == 0 marks sources (distance 0).
inline Grid3<double> chebyshev_distance(const Grid3<int>& inside) {
  const int nx = inside.nx, ny = inside.ny, nz = inside.nz;
  const double inf = 1e18;
  Grid3<double> d(nx, ny, nz);
  for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] = inside.v[i] ? inf : 0.0;

  auto relax = [&](int x, int y, int k, int dx, int dy, int dk) {
    const int xx = x + dx, yy = y + dy, kk = k + dk;
    if (xx < 0 || xx >= nx || yy < 0 || yy >= ny || kk < 0 || kk >= nz) return;
    const double cand = d.at(xx, yy, kk) + 1.0;
    if (cand < d.at(x, y, k)) d.at(x, y, k) = cand;
  };

  for (int k = 0; k < nz; ++k)
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y)
        for (int dk = -1; dk <= 0; ++dk)
          for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
              if (dk == 0 && (dx > 0 || (dx == 0 && dy >= 0))) continue;
              relax(x, y, k, dx, dy, dk);
            }
  for (int k = nz - 1; k >= 0; --k)
    for (int x = nx - 1; x >= 0; --x)
      for (int y = ny - 1; y >= 0; --y)
        for (int dk = 0; dk <= 1; ++dk)
          for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
              if (dk == 0 && (dx < 0 || (dx == 0 && dy <= 0))) continue;
              relax(x, y, k, dx, dy, dk);
            }
  return d;
}

}  // namespace stitch_detail

/// Distance-weighted alpha-blend masks: weight 1 over each contributor's
/// exclusive region; across overlaps, weights are proportional to the
/// Chebyshev distance to the contributor's own footprint boundary and are
/// normalized to sum to one.
inline std::vector<BlendMask> build_blend_masks(const std::vector<PlacedVolume>& placed) {
  require(!placed.empty(), "invalid_argument", "build_blend_masks: no volumes");
  for (const auto& p : placed)
    require(p.volume.pixel_pitch == placed[0].volume.pixel_pitch &&
                p.volume.dz == placed[0].volume.dz,
            "grid_mismatch", "build_blend_masks: voxel spacings differ");

  const auto box = stitch_detail::bounding_box(placed);
  const auto cover = stitch_detail::coverage_count(placed, box);

  // Per contributor: Chebyshev distance to the edge of its own footprint
  // where the mosaic continues. Each footprint is padded by one voxel;
  // pad voxels covered by another contributor are distance sources, so the
  // weight falls to zero approaching hand-over faces while staying large at
  // the mosaic's outer borders.
  std::vector<Grid3<double>> dist;
  dist.reserve(placed.size());
  for (const auto& p : placed) {
    const int nx = p.volume.nx, ny = p.volume.ny, nz = p.volume.n_layers;
    Grid3<int> inside(nx + 2, ny + 2, nz + 2, 1);
    auto covered = [&](long ax, long ay, long az) {
      if (ax < 0 || ay < 0 || az < 0 || ax >= cover.nx || ay >= cover.ny || az >= cover.nz)
        return false;
      return cover.at(int(ax), int(ay), int(az)) > 0;
    };
    for (int pk = 0; pk < nz + 2; ++pk)
      for (int px = 0; px < nx + 2; ++px)
        for (int py = 0; py < ny + 2; ++py) {
          const int lx = px - 1, ly = py - 1, lk = pk - 1;
          if (lx >= 0 && lx < nx && ly >= 0 && ly < ny && lk >= 0 && lk < nz)
            continue;  // footprint voxel
          const long gx = p.offset[0] - box.lo[0] + lx;
          const long gy = p.offset[1] - box.lo[1] + ly;
          const long gz = p.offset[2] - box.lo[2] + lk;
          if (covered(gx, gy, gz)) inside.at(px, py, pk) = 0;
        }
    dist.push_back(stitch_detail::chebyshev_distance(inside));
  }

  std::vector<BlendMask> masks(placed.size());
  for (std::size_t i = 0; i < placed.size(); ++i) {
    masks[i].nx = placed[i].volume.nx;
    masks[i].ny = placed[i].volume.ny;
    masks[i].nz = placed[i].volume.n_layers;
    masks[i].w.assign(placed[i].volume.n.size(), 1.0);
  }

  // Normalize inside shared voxels.
  const int gnx = cover.nx, gny = cover.ny, gnz = cover.nz;
  for (int gz = 0; gz < gnz; ++gz)
    for (int gx = 0; gx < gnx; ++gx)
      for (int gy = 0; gy < gny; ++gy) {
        if (cover.at(gx, gy, gz) < 2) continue;
        double total = 0.0;
        for (std::size_t i = 0; i < placed.size(); ++i) {
          const auto& p = placed[i];
          const int x = gx - int(p.offset[0] - box.lo[0]);
          const int y = gy - int(p.offset[1] - box.lo[1]);
          const int k = gz - int(p.offset[2] - box.lo[2]);
          if (x < 0 || y < 0 || k < 0 || x >= p.volume.nx || y >= p.volume.ny ||
              k >= p.volume.n_layers)
            continue;
          total += dist[i].at(x + 1, y + 1, k + 1);
        }
        for (std::size_t i = 0; i < placed.size(); ++i) {
          const auto& p = placed[i];
          const int x = gx - int(p.offset[0] - box.lo[0]);
          const int y = gy - int(p.offset[1] - box.lo[1]);
          const int k = gz - int(p.offset[2] - box.lo[2]);
          if (x < 0 || y < 0 || k < 0 || x >= p.volume.nx || y >= p.volume.ny ||
              k >= p.volume.n_layers)
            continue;
          const double di = dist[i].at(x + 1, y + 1, k + 1);
          masks[i].at(x, y, k) = total > 0.0 ? di / total : 1.0 / cover.at(gx, gy, gz);
        }
      }
  return masks;
}

/// Weighted sum of the placed volumes over their union; voxels covered by no
/// contributor take the medium index.
inline RIVolume<double> stitch(const std::vector<PlacedVolume>& placed,
                               const std::vector<BlendMask>& masks) {
  require(!placed.empty(), "invalid_argument", "stitch: no volumes");
  require(placed.size() == masks.size(), "invalid_argument",
          "stitch: mask count differs from volume count");
  for (std::size_t i = 0; i < placed.size(); ++i) {
    require(placed[i].volume.pixel_pitch == placed[0].volume.pixel_pitch &&
                placed[i].volume.dz == placed[0].volume.dz &&
                placed[i].volume.n_medium == placed[0].volume.n_medium,
            "grid_mismatch", "stitch: volume metadata differs");
    require(masks[i].nx == placed[i].volume.nx && masks[i].ny == placed[i].volume.ny &&
                masks[i].nz == placed[i].volume.n_layers,
            "grid_mismatch", "stitch: mask shape differs from its volume");
  }

  const auto box = stitch_detail::bounding_box(placed);
  int gnx = int(box.hi[0] - box.lo[0]);
  int gny = int(box.hi[1] - box.lo[1]);
  int gnz = int(box.hi[2] - box.lo[2]);
  // Field grids stay even; widen the frame by one voxel when needed.
  if (gnx % 2) ++gnx;
  if (gny % 2) ++gny;

  RIVolume<double> out(gnx, gny, gnz, placed[0].volume.pixel_pitch, placed[0].volume.dz,
                       placed[0].volume.n_medium);
  Grid3<double> weight_sum(gnx, gny, gnz, 0.0);
  std::fill(out.n.begin(), out.n.end(), std::complex<double>(0.0, 0.0));

  for (std::size_t i = 0; i < placed.size(); ++i) {
    const auto& p = placed[i];
    for (int k = 0; k < p.volume.n_layers; ++k)
      for (int x = 0; x < p.volume.nx; ++x)
        for (int y = 0; y < p.volume.ny; ++y) {
          const int gx = int(p.offset[0] - box.lo[0]) + x;
          const int gy = int(p.offset[1] - box.lo[1]) + y;
          const int gz = int(p.offset[2] - box.lo[2]) + k;
          const double w = masks[i].at(x, y, k);
          out.at(gx, gy, gz) += w * p.volume.at(x, y, k);
          weight_sum.at(gx, gy, gz) += w;
        }
  }
  for (int gz = 0; gz < gnz; ++gz)
    for (int gx = 0; gx < gnx; ++gx)
      for (int gy = 0; gy < gny; ++gy)
        if (weight_sum.at(gx, gy, gz) == 0.0)
          out.at(gx, gy, gz) = std::complex<double>(out.n_medium, 0.0);
  return out;
}

struct ChainResult {
  RIVolume<double> fused;
  std::vector<std::array<long, 3>> offsets;  // per input, in the final frame
  std::vector<double> confidences;           // per registration (first entry 1)
};

namespace stitch_detail {

// Circular cross-correlation C(t) = sum_x u(x) * v(x - t) on the padded grid.
inline std::vector<double> cross_correlate(const std::vector<std::complex<double>>& fu,
                                           std::vector<std::complex<double>> fv, int nz,
                                           int nx, int ny) {
  for (std::size_t i = 0; i < fv.size(); ++i) fv[i] = fu[i] * std::conj(fv[i]);
  auto c = fft::inverse3<double>(fv, nz, nx, ny);
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

// Masked normalized cross-correlation over every placement of b against the
// composite: the correlation coefficient of the two signals restricted to
// the actual overlap region. Exact translation recovery for noiseless
// overlapping crops regardless of how smooth the content is; the returned
// confidence is the peak coefficient (1 = perfect agreement).
inline RegistrationResult register_padded(const RIVolume<double>& composite,
                                          const RIVolume<double>& b, double min_confidence) {
  const int pnx = composite.nx + b.nx, pny = composite.ny + b.ny,
            pnz = composite.n_layers + b.n_layers;
  const std::size_t total = std::size_t(pnx) * pny * pnz;

  auto embed = [&](const RIVolume<double>& v, bool mask, bool squared) {
    std::vector<std::complex<double>> s(total, std::complex<double>(0.0, 0.0));
    for (int k = 0; k < v.n_layers; ++k)
      for (int x = 0; x < v.nx; ++x)
        for (int y = 0; y < v.ny; ++y) {
          const double value = v.at(x, y, k).real() - v.n_medium;
          s[(std::size_t(k) * pnx + x) * pny + y] =
              mask ? 1.0 : (squared ? value * value : value);
        }
    return fft::forward3<double>(s, pnz, pnx, pny);
  };

  const auto fa = embed(composite, false, false);
  const auto fa2 = embed(composite, false, true);
  const auto fma = embed(composite, true, false);
  const auto fb = embed(b, false, false);
  const auto fb2 = embed(b, false, true);
  const auto fmb = embed(b, true, false);

  const auto n_ov = cross_correlate(fma, fmb, pnz, pnx, pny);
  const auto s_ab = cross_correlate(fa, fb, pnz, pnx, pny);
  const auto s_a = cross_correlate(fa, fmb, pnz, pnx, pny);
  const auto s_b = cross_correlate(fma, fb, pnz, pnx, pny);
  const auto s_aa = cross_correlate(fa2, fmb, pnz, pnx, pny);
  const auto s_bb = cross_correlate(fma, fb2, pnz, pnx, pny);

  const double min_overlap =
      0.05 * double(std::min(composite.n.size(), b.n.size()));
  std::vector<double> ncc(total, -1.0);
  for (std::size_t i = 0; i < total; ++i) {
    const double n = n_ov[i];
    if (n < std::max(min_overlap, 32.0)) continue;
    const double cov = s_ab[i] - s_a[i] * s_b[i] / n;
    const double var_a = std::max(s_aa[i] - s_a[i] * s_a[i] / n, 0.0);
    const double var_b = std::max(s_bb[i] - s_b[i] * s_b[i] / n, 0.0);
    const double denom = std::sqrt(var_a * var_b);
    if (denom > 1e-30) ncc[i] = cov / denom;
  }

  double peak_value = 0.0;
  const auto peak = peak_index(ncc, pnz, pnx, pny, &peak_value);

  RegistrationResult r;
  r.confidence = peak_value;
  require(r.confidence >= min_confidence, "no_reliable_overlap",
          "stitch chain: best overlap correlation " + std::to_string(r.confidence) +
              " below threshold");
  // Valid placements overlap the composite, so the peak is unambiguous:
  // positive placements up to the composite extent, negative beyond.
  auto interpret = [](int u, int n_comp, int n_pad) {
    return long(u <= n_comp - 1 ? u : u - n_pad);
  };
  r.shift = {interpret(peak[1], composite.nx, pnx), interpret(peak[2], composite.ny, pny),
             interpret(peak[0], composite.n_layers, pnz)};
  return r;
}

}  // namespace stitch_detail

/// Pairwise-sequential synthesis: volumes are chained in input order, each
/// registered against the composite stitched so far. min_confidence is the
/// smallest acceptable overlap correlation coefficient.
inline ChainResult stitch_chain(const std::vector<RIVolume<double>>& volumes,
                                double min_confidence = 0.5) {
  require(!volumes.empty(), "invalid_argument", "stitch_chain: no volumes");
  std::vector<PlacedVolume> placed;
  placed.push_back({volumes[0], {0, 0, 0}});
  ChainResult chain;
  chain.confidences.push_back(1.0);

  RIVolume<double> composite = volumes[0];
  std::array<long, 3> composite_origin{0, 0, 0};

  for (std::size_t i = 1; i < volumes.size(); ++i) {
    const auto reg = stitch_detail::register_padded(composite, volumes[i], min_confidence);
    chain.confidences.push_back(reg.confidence);
    placed.push_back({volumes[i],
                      {composite_origin[0] + reg.shift[0], composite_origin[1] + reg.shift[1],
                       composite_origin[2] + reg.shift[2]}});
    const auto box = stitch_detail::bounding_box(placed);
    composite = stitch(placed, build_blend_masks(placed));
    composite_origin = box.lo;
  }

  const auto box = stitch_detail::bounding_box(placed);
  for (const auto& p : placed)
    chain.offsets.push_back(
        {p.offset[0] - box.lo[0], p.offset[1] - box.lo[1], p.offset[2] - box.lo[2]});
  chain.fused = stitch(placed, build_blend_masks(placed));
  return chain;
}

}  // namespace odt
