#pragma once

#include <vector>

#include "odt/system.hpp"

namespace odt {

/// One acquisition: L intensity images, the optical system, one nominal
/// wavevector per image, and the geometry of the reconstruction volume.
/// true_illuminations is non-empty only for simulated data with injected
/// reporting errors; it is scoring metadata, never an input to the solver.
template <class R>
struct AcquisitionDataset {
  OpticalSystem<R> system;
  std::vector<Illumination<R>> illuminations;
  std::vector<Image2D<R>> intensities;
  std::vector<Illumination<R>> true_illuminations;
  int n_layers = 0;
  R dz = R(0);

  std::size_t count() const { return intensities.size(); }

  void validate() const {
    require(!intensities.empty(), "schema", "dataset: no intensity images");
    require(illuminations.size() == intensities.size(), "schema",
            "dataset: illumination and image counts differ");
    require(true_illuminations.empty() ||
                true_illuminations.size() == illuminations.size(),
            "schema", "dataset: true illumination count differs");
    require(n_layers >= 1 && dz > R(0), "schema",
            "dataset: reconstruction geometry missing");
    for (const auto& img : intensities) {
      require(img.nx == system.nx && img.ny == system.ny &&
                  img.pitch == system.pixel_pitch,
              "schema", "dataset: image grid differs from system grid");
      for (R x : img.v) {
        require(std::isfinite(x), "non_finite", "dataset: non-finite intensity value");
        require(x >= R(0), "schema", "dataset: negative intensity value");
      }
    }
  }
};

template <class RTo, class RFrom>
AcquisitionDataset<RTo> convert_dataset(const AcquisitionDataset<RFrom>& in) {
  AcquisitionDataset<RTo> out;
  out.system = convert_system<RTo>(in.system);
  out.n_layers = in.n_layers;
  out.dz = RTo(in.dz);
  auto conv_illum = [](const Illumination<RFrom>& il) {
    Illumination<RTo> o;
    o.k0 = {RTo(il.k0[0]), RTo(il.k0[1])};
    o.amplitude = std::complex<RTo>(RTo(il.amplitude.real()), RTo(il.amplitude.imag()));
    return o;
  };
  for (const auto& il : in.illuminations) out.illuminations.push_back(conv_illum(il));
  for (const auto& il : in.true_illuminations)
    out.true_illuminations.push_back(conv_illum(il));
  for (const auto& img : in.intensities) {
    Image2D<RTo> o(img.nx, img.ny, RTo(img.pitch));
    for (std::size_t i = 0; i < img.v.size(); ++i) o.v[i] = RTo(img.v[i]);
    out.intensities.push_back(std::move(o));
  }
  return out;
}

}  // namespace odt
