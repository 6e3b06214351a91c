#pragma once

#include <algorithm>
#include <optional>

#include "odt/dataset.hpp"
#include "odt/optics.hpp"

namespace odt {

enum class AngleFlag : std::uint8_t { ok, darkfield, low_confidence };

inline const char* to_string(AngleFlag f) {
  switch (f) {
    case AngleFlag::ok: return "ok";
    case AngleFlag::darkfield: return "darkfield";
    case AngleFlag::low_confidence: return "low_confidence";
  }
  return "?";
}

struct WavevectorEstimate {
  std::array<double, 2> k0{0.0, 0.0};  // rad/um; meaningful only when flag == ok
  double confidence = 0.0;             // in [0, 1]
  AngleFlag flag = AngleFlag::darkfield;
};

struct CalibrationConfig {
  double confidence_threshold = 0.2;
  int search_halfwidth = 6;   // samples around the hint
  double ring_width = 2.0;    // samples; half-width of the edge template
  double ridge_threshold = 0.75;  // rotated-score fraction that marks darkfield
};

namespace cal_detail {

struct RingTemplate {
  // Integer sample offsets just inside / outside the pupil-radius circle.
  std::vector<std::array<int, 2>> inner, outer;
};

inline RingTemplate make_ring(double cutoff, double dkx, double dky, double width_samples,
                              int nx, int ny) {
  RingTemplate ring;
  const double w = width_samples * 0.5 * (dkx + dky);
  const int span_x = std::min(nx / 2, int(std::ceil((cutoff + w) / dkx)) + 1);
  const int span_y = std::min(ny / 2, int(std::ceil((cutoff + w) / dky)) + 1);
  for (int i = -span_x; i <= span_x; ++i)
    for (int j = -span_y; j <= span_y; ++j) {
      const double r = std::hypot(i * dkx, j * dky);
      if (r >= cutoff - w && r <= cutoff) ring.inner.push_back({i, j});
      else if (r > cutoff && r <= cutoff + w) ring.outer.push_back({i, j});
    }
  return ring;
}

/// Edge contrast of the circle template centered at sample (ci, cj) of a
/// DC-centered spectrum (periodic wrap at the edges).
inline double ring_score(const std::vector<double>& logmag, int nx, int ny, int ci, int cj,
                         const RingTemplate& ring) {
  auto sample = [&](int i, int j) {
    const int x = ((nx / 2 + ci + i) % nx + nx) % nx;
    const int y = ((ny / 2 + cj + j) % ny + ny) % ny;
    return logmag[std::size_t(x) * ny + y];
  };
  double in = 0.0, out = 0.0;
  for (const auto& o : ring.inner) in += sample(o[0], o[1]);
  for (const auto& o : ring.outer) out += sample(o[0], o[1]);
  return in / double(ring.inner.size()) - out / double(ring.outer.size());
}

inline double parabolic_offset(double sm, double s0, double sp) {
  const double denom = sm - 2.0 * s0 + sp;
  if (denom >= 0.0) return 0.0;  // not a local maximum
  return std::clamp(0.5 * (sm - sp) / denom, -0.5, 0.5);
}

}  // namespace cal_detail

/// Locate the displaced brightfield circle of radius 2*pi*NA/lambda in the
/// intensity Fourier magnitude. The match is an annulus edge template over
/// the log-compressed spectrum, refined to sub-sample precision by parabolic
/// fits; the circle pair sits at +/-k0 and the sign follows the hint.
inline WavevectorEstimate estimate_wavevector(
    const Image2D<double>& intensity, const OpticalSystem<double>& system,
    const std::optional<std::array<double, 2>>& hint = std::nullopt,
    const CalibrationConfig& config = {}) {
  const Spectrum2D<double> spec = intensity_spectrum(intensity);
  const int nx = spec.nx, ny = spec.ny;
  std::vector<double> logmag(spec.mag.size());
  for (std::size_t i = 0; i < logmag.size(); ++i) logmag[i] = std::log1p(spec.mag[i]);

  const double cutoff = system.pupil.cutoff;
  const double dkx = spec.dkx, dky = spec.dky;
  const auto ring = cal_detail::make_ring(cutoff, dkx, dky, config.ring_width, nx, ny);

  // Candidate centers: near the hint when given, otherwise every sample that
  // could host a brightfield circle.
  std::vector<std::array<int, 2>> candidates;
  if (hint) {
    const int hi = int(std::lround((*hint)[0] / dkx));
    const int hj = int(std::lround((*hint)[1] / dky));
    for (int i = hi - config.search_halfwidth; i <= hi + config.search_halfwidth; ++i)
      for (int j = hj - config.search_halfwidth; j <= hj + config.search_halfwidth; ++j)
        if (std::abs(i) <= nx / 2 && std::abs(j) <= ny / 2) candidates.push_back({i, j});
  } else {
    const int span_x = std::min(nx / 2, int(std::ceil(cutoff / dkx)) + 2);
    const int span_y = std::min(ny / 2, int(std::ceil(cutoff / dky)) + 2);
    for (int i = -span_x; i <= span_x; ++i)
      for (int j = -span_y; j <= span_y; ++j) {
        const double r = std::hypot(i * dkx, j * dky);
        if (r <= cutoff + 2.0 * std::max(dkx, dky)) candidates.push_back({i, j});
      }
  }

  std::vector<double> scores(candidates.size());
  std::size_t best = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    scores[c] = cal_detail::ring_score(logmag, nx, ny, candidates[c][0], candidates[c][1], ring);
    if (scores[c] > scores[best]) best = c;
  }

  // Confidence: margin of the best score over the median, normalized by the
  // full score spread of the candidate set.
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const double s_best = sorted.back();
  const double s_median = sorted[sorted.size() / 2];
  const double s_min = sorted.front();
  const double spread = s_best - s_min;
  const double confidence =
      spread > 0.0 ? std::clamp((s_best - s_median) / spread, 0.0, 1.0) : 0.0;

  WavevectorEstimate est;
  est.confidence = confidence;
  if (confidence < config.confidence_threshold) {
    const double hint_r = hint ? std::hypot((*hint)[0], (*hint)[1]) : cutoff + 1.0;
    est.flag = hint_r > cutoff - std::max(dkx, dky) ? AngleFlag::darkfield
                                                    : AngleFlag::low_confidence;
    return est;
  }

  const int bi = candidates[best][0], bj = candidates[best][1];

  // A darkfield acquisition has no circle pair, but its scattered-light
  // spectrum is a disk of radius 2*cutoff whose edge makes the template fire
  // along the whole ring |c| ~ cutoff. A genuine circle center is an isolated
  // peak; a ridge that stays comparably strong under rotation of the
  // candidate about DC is the darkfield signature.
  const double best_r = std::hypot(bi * dkx, bj * dky);
  if (best_r > 0.5 * cutoff) {
    double max_rot = -std::numeric_limits<double>::infinity();
    for (int step = 1; step <= 8; ++step) {
      const double a = two_pi * step / 9.0;
      const double rx = bi * dkx * std::cos(a) - bj * dky * std::sin(a);
      const double ry = bi * dkx * std::sin(a) + bj * dky * std::cos(a);
      const int ri = int(std::lround(rx / dkx));
      const int rj = int(std::lround(ry / dky));
      if (std::hypot(ri * dkx - bi * dkx, rj * dky - bj * dky) <
          3.0 * std::max(dkx, dky))
        continue;
      max_rot = std::max(max_rot, cal_detail::ring_score(logmag, nx, ny, ri, rj, ring));
    }
    if (std::isfinite(max_rot) && spread > 0.0 &&
        (max_rot - s_min) / (s_best - s_min) > config.ridge_threshold) {
      est.flag = AngleFlag::darkfield;
      return est;
    }
  }
  auto score_at = [&](int i, int j) {
    return cal_detail::ring_score(logmag, nx, ny, i, j, ring);
  };
  const double di =
      cal_detail::parabolic_offset(score_at(bi - 1, bj), scores[best], score_at(bi + 1, bj));
  const double dj =
      cal_detail::parabolic_offset(score_at(bi, bj - 1), scores[best], score_at(bi, bj + 1));

  std::array<double, 2> k{(bi + di) * dkx, (bj + dj) * dky};

  // The spectrum is symmetric under k -> -k; pick the sign nearest the hint,
  // or a fixed canonical half-plane without one.
  if (hint) {
    const double dp = std::hypot(k[0] - (*hint)[0], k[1] - (*hint)[1]);
    const double dm = std::hypot(-k[0] - (*hint)[0], -k[1] - (*hint)[1]);
    if (dm < dp) k = {-k[0], -k[1]};
  } else if (k[0] < 0.0 || (k[0] == 0.0 && k[1] < 0.0)) {
    k = {-k[0], -k[1]};
  }

  // Never report an estimate outside the illumination band.
  const double band = two_pi / system.wavelength_medium;
  const double r = std::hypot(k[0], k[1]);
  if (r > band) {
    k[0] *= band / r;
    k[1] *= band / r;
  }

  est.k0 = k;
  est.flag = AngleFlag::ok;
  return est;
}

struct CalibrationResult {
  std::vector<WavevectorEstimate> estimates;        // one per angle
  std::vector<Illumination<double>> corrected;      // estimates, reported on failure
  std::vector<double> correction_samples;           // |estimate - reported| in samples
};

/// Per-angle self-calibration of a whole dataset, using its reported
/// wavevectors as hints. Flagged angles keep their reported values.
inline CalibrationResult calibrate_dataset(const AcquisitionDataset<double>& dataset,
                                           const CalibrationConfig& config = {}) {
  CalibrationResult result;
  const auto grid = dataset.system.frequency_grid();
  const double dk = 0.5 * (grid.dkx() + grid.dky());
  for (std::size_t l = 0; l < dataset.count(); ++l) {
    const auto& reported = dataset.illuminations[l].k0;
    const auto est =
        estimate_wavevector(dataset.intensities[l], dataset.system, reported, config);
    result.estimates.push_back(est);

    Illumination<double> il = dataset.illuminations[l];
    if (est.flag == AngleFlag::ok) il.k0 = est.k0;
    result.corrected.push_back(il);
    result.correction_samples.push_back(
        est.flag == AngleFlag::ok
            ? std::hypot(est.k0[0] - reported[0], est.k0[1] - reported[1]) / dk
            : 0.0);
  }
  return result;
}

}  // namespace odt
