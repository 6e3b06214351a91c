#pragma once

#include <string>

#include "odt/adjoint.hpp"
#include "odt/dataset.hpp"
#include "odt/rng.hpp"
#include "odt/tv.hpp"

namespace odt {

enum class Precision : std::uint8_t { single, dbl };

struct ReconstructionConfig {
  double alpha = 6e-4;
  TVConfig tv{4e-4, 20, {1.0, 1.0, 1.0}};
  int epochs = 50;
  std::uint64_t seed = 0;
  Constraint constraint = Constraint::none;
  double stop_tolerance = 1e-3;  // relative cost plateau over stop_window epochs
  int stop_window = 3;
  Precision precision = Precision::dbl;
  std::vector<std::uint8_t> layer_mask;  // empty = update all layers

  void validate() const {
    require(alpha > 0.0, "invalid_argument", "config: alpha must be positive");
    require(epochs >= 1, "invalid_argument", "config: epochs must be >= 1");
    require(stop_tolerance >= 0.0, "invalid_argument",
            "config: stop tolerance must be >= 0");
    require(stop_window >= 1, "invalid_argument", "config: stop window must be >= 1");
    tv.validate();
  }
};

struct ReconstructionResult {
  RIVolume<double> volume;
  std::vector<double> cost_history;  // one entry per completed epoch
  std::vector<Illumination<double>> illuminations;  // the set actually used
  ReconstructionConfig config;                      // echo of the effective config
};

namespace recon_detail {

/// One epoch: shuffled pass over all angles with per-angle update, then the
/// TV prox. The per-epoch permutation depends only on (seed, epoch index) so
/// resumed runs reproduce fresh ones bit for bit.
template <class R>
double run_epoch(RIVolume<R>& volume, const AcquisitionDataset<R>& dataset,
                 const ReconstructionConfig& config, int epoch_index) {
  SplitMix64 rng(derive_seed(config.seed, std::uint64_t(epoch_index)));
  const auto order = shuffled_indices(dataset.count(), rng);
  const R wavelength = dataset.system.wavelength_medium;

  double epoch_cost = 0.0;
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    const std::size_t l = order[slot];
    const auto stack = msbp_forward(volume, dataset.illuminations[l], wavelength);
    const Field2D<R> e = image_field(stack.exit_field(), dataset.system);

    const R angle_cost = cost_term(e, dataset.intensities[l]);
    if (!std::isfinite(double(angle_cost)))
      fail("diverged", "reconstruct: non-finite cost at epoch " +
                           std::to_string(epoch_index + 1) + ", angle " + std::to_string(l));
    epoch_cost += double(angle_cost);

    const Field2D<R> q0 = amplitude_residual(e, dataset.intensities[l]);
    const Field2D<R> q_top = backproject_residual(q0, dataset.system);
    const LayerGradient<R> grad = accumulate_gradient(stack, volume, q_top, wavelength);
    apply_update(volume, grad, R(config.alpha), config.constraint, config.layer_mask);
  }

  if (config.tv.beta > 0.0) {
    volume = tv_prox(volume, config.tv);
    project_constraint(volume, config.constraint);
  }
  return epoch_cost;
}

inline bool cost_plateaued(const std::vector<double>& history, double tolerance, int window) {
  if (int(history.size()) < window + 1) return false;
  for (int i = 0; i < window; ++i) {
    const double prev = history[history.size() - 2 - std::size_t(i)];
    const double cur = history[history.size() - 1 - std::size_t(i)];
    const double denom = std::abs(prev) > 0.0 ? std::abs(prev) : 1.0;
    if (std::abs(cur - prev) / denom >= tolerance) return false;
  }
  return true;
}

template <class R>
ReconstructionResult run(const AcquisitionDataset<double>& dataset,
                         const ReconstructionConfig& config,
                         const RIVolume<double>& initial,
                         std::vector<double> history) {
  AcquisitionDataset<R> ds = convert_dataset<R>(dataset);
  RIVolume<R> volume = convert_volume<R>(initial);
  project_constraint(volume, config.constraint);

  int epoch = int(history.size());
  while (epoch < config.epochs) {
    history.push_back(run_epoch(volume, ds, config, epoch));
    ++epoch;
    if (cost_plateaued(history, config.stop_tolerance, config.stop_window)) break;
  }

  ReconstructionResult result;
  result.volume = convert_volume<double>(volume);
  result.cost_history = std::move(history);
  result.illuminations = dataset.illuminations;
  result.config = config;
  return result;
}

}  // namespace recon_detail

/// Full iterative reconstruction: volume initialized to the medium index,
/// per-epoch random angle ordering without replacement, per-angle
/// forward/residual/backward/update, per-epoch TV prox, and a cost-plateau
/// stopping rule with a hard epoch cap.
inline ReconstructionResult reconstruct(const AcquisitionDataset<double>& dataset,
                                        const ReconstructionConfig& config) {
  dataset.validate();
  config.validate();
  RIVolume<double> initial(dataset.system.nx, dataset.system.ny, dataset.n_layers,
                           dataset.system.pixel_pitch, dataset.dz,
                           dataset.system.n_medium);
  if (config.precision == Precision::single)
    return recon_detail::run<float>(dataset, config, initial, {});
  return recon_detail::run<double>(dataset, config, initial, {});
}

/// Continue a previous run from its volume and history. config.epochs is the
/// total epoch budget: a result that already completed that many epochs is
/// returned unchanged (with the new config echoed).
inline ReconstructionResult resume(const ReconstructionResult& previous,
                                   const AcquisitionDataset<double>& dataset,
                                   const ReconstructionConfig& config) {
  dataset.validate();
  config.validate();
  require(previous.volume.nx == dataset.system.nx &&
              previous.volume.ny == dataset.system.ny &&
              previous.volume.n_layers == dataset.n_layers,
          "grid_mismatch", "resume: volume grid differs from dataset");
  if (config.precision == Precision::single)
    return recon_detail::run<float>(dataset, config, previous.volume,
                                    previous.cost_history);
  return recon_detail::run<double>(dataset, config, previous.volume,
                                   previous.cost_history);
}

}  // namespace odt
