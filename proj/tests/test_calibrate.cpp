#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace odt;
using test_support::BeadScenario;

namespace {

// Weak noise phantom with uniform spatial frequencies: scattered light fills
// the pupil, so the two circles show crisp edges at every illumination.
RIVolume<double> weak_phantom(const BeadScenario& sc, double contrast = 1e-3) {
  RIVolume<double> vol(sc.nx, sc.ny, sc.n_layers, sc.pitch, sc.dz, sc.n_medium);
  SplitMix64 rng(4242);
  for (auto& z : vol.n) z += contrast * rng.uniform01();
  return vol;
}

std::vector<Illumination<double>> random_inband_angles(const OpticalSystem<double>& sys,
                                                       int count, SplitMix64& rng) {
  const auto grid = sys.frequency_grid();
  const double r_max = sys.pupil.cutoff * 0.92;
  std::vector<Illumination<double>> out;
  while (int(out.size()) < count) {
    const double r = r_max * std::sqrt(rng.uniform01());
    const double t = rng.uniform(0.0, two_pi);
    Illumination<double> il;
    il.k0 = snap_to_grid({r * std::cos(t), r * std::sin(t)}, grid);
    if (std::hypot(il.k0[0], il.k0[1]) <= r_max) out.push_back(il);
  }
  return out;
}

}  // namespace

TEST_CASE("on-axis estimate lands at the origin") {
  BeadScenario sc;
  auto sys = sc.system();
  auto vol = weak_phantom(sc);
  Illumination<double> il;  // k0 = 0
  auto img = predict_intensity(vol, il, sys);

  auto est = estimate_wavevector(img, sys, std::array<double, 2>{0.0, 0.0});
  REQUIRE(est.flag == AngleFlag::ok);
  const double dk = sys.frequency_grid().dkx();
  CHECK(std::hypot(est.k0[0], est.k0[1]) <= dk);
}

TEST_CASE("simulate-then-recover over random in-band angles") {
  BeadScenario sc;
  auto sys = sc.system();
  auto vol = weak_phantom(sc);
  SplitMix64 rng(21);
  auto angles = random_inband_angles(sys, 10, rng);
  const double dk = sys.frequency_grid().dkx();

  for (const auto& il : angles) {
    auto img = predict_intensity(vol, il, sys);
    auto est = estimate_wavevector(img, sys, il.k0);
    REQUIRE(est.flag == AngleFlag::ok);
    CHECK(std::hypot(est.k0[0] - il.k0[0], est.k0[1] - il.k0[1]) <= dk);
  }
}

TEST_CASE("darkfield angles are flagged, never estimated") {
  BeadScenario sc;
  auto sys = sc.system();
  auto vol = weak_phantom(sc);
  const auto grid = sys.frequency_grid();

  Illumination<double> il;
  il.k0 = {16 * grid.dkx(), 0.0};  // outside the 12.99 rad/um pupil
  REQUIRE(std::hypot(il.k0[0], il.k0[1]) > sys.pupil.cutoff);
  auto img = predict_intensity(vol, il, sys);
  auto est = estimate_wavevector(img, sys, il.k0);
  CHECK(est.flag == AngleFlag::darkfield);
}

TEST_CASE("estimates never leave the illumination band") {
  BeadScenario sc;
  auto sys = sc.system();
  auto vol = weak_phantom(sc);
  SplitMix64 rng(5);
  auto angles = random_inband_angles(sys, 5, rng);
  const double band = two_pi / sys.wavelength_medium;
  for (const auto& il : angles) {
    auto img = predict_intensity(vol, il, sys);
    auto est = estimate_wavevector(img, sys, il.k0);
    if (est.flag == AngleFlag::ok)
      CHECK(std::hypot(est.k0[0], est.k0[1]) <= band + 1e-12);
  }
}

TEST_CASE("sign selection is deterministic and hint-driven") {
  BeadScenario sc;
  auto sys = sc.system();
  auto vol = weak_phantom(sc);
  const auto grid = sys.frequency_grid();
  Illumination<double> il;
  il.k0 = {5 * grid.dkx(), 3 * grid.dky()};
  auto img = predict_intensity(vol, il, sys);

  auto plus = estimate_wavevector(img, sys, il.k0);
  auto minus = estimate_wavevector(img, sys, std::array<double, 2>{-il.k0[0], -il.k0[1]});
  REQUIRE(plus.flag == AngleFlag::ok);
  REQUIRE(minus.flag == AngleFlag::ok);
  CHECK(plus.k0[0] == Catch::Approx(-minus.k0[0]).margin(1e-9));
  CHECK(plus.k0[1] == Catch::Approx(-minus.k0[1]).margin(1e-9));
}

TEST_CASE("detected circle pair separation equals twice the illumination") {
  BeadScenario sc;
  auto sys = sc.system();
  auto vol = weak_phantom(sc);
  const auto grid = sys.frequency_grid();
  const double dk = grid.dkx();

  for (int i : {3, 7, 10}) {
    Illumination<double> il;
    il.k0 = {i * dk, -(i / 2) * dk};
    auto img = predict_intensity(vol, il, sys);
    auto est = estimate_wavevector(img, sys, il.k0);
    REQUIRE(est.flag == AngleFlag::ok);
    // centers at +/-k_hat: separation 2|k_hat| vs 2|k0| within 2 samples
    const double sep = 2 * std::hypot(est.k0[0], est.k0[1]);
    const double want = 2 * std::hypot(il.k0[0], il.k0[1]);
    CHECK(std::abs(sep - want) <= 2 * dk);
  }
}

TEST_CASE("calibrate_dataset corrects injected reporting errors") {
  BeadScenario sc;
  auto sys = sc.system();
  auto vol = weak_phantom(sc);
  SplitMix64 rng(77);
  auto truth = random_inband_angles(sys, 12, rng);
  const auto grid = sys.frequency_grid();
  const double dk = grid.dkx();

  SECTION("already-exact reports are a fixed point") {
    auto ds = simulate_dataset(vol, truth, sys, {}, 0);
    auto result = calibrate_dataset(ds);
    for (std::size_t l = 0; l < ds.count(); ++l) {
      REQUIRE(result.estimates[l].flag == AngleFlag::ok);
      CHECK(result.correction_samples[l] < 1.0);
    }
  }

  SECTION("offset reports are pulled back to the truth") {
    auto reported = perturb_illuminations(truth, 3, grid, 99);
    auto ds = simulate_dataset(vol, truth, sys, {}, 0, reported);
    auto result = calibrate_dataset(ds);
    int recovered = 0;
    for (std::size_t l = 0; l < ds.count(); ++l) {
      if (result.estimates[l].flag != AngleFlag::ok) continue;
      const double err = std::hypot(result.corrected[l].k0[0] - truth[l].k0[0],
                                    result.corrected[l].k0[1] - truth[l].k0[1]);
      recovered += err <= dk;
    }
    CHECK(recovered >= int(0.95 * double(ds.count())));
  }

  SECTION("an all-darkfield dataset is fully flagged") {
    // Between the pupil cutoff (12.99 rad/um) and the band edge (18.3).
    std::vector<Illumination<double>> dark;
    for (auto k : {std::array<double, 2>{14 * dk, 0.0}, {0.0, 16 * dk}, {12 * dk, 8 * dk}}) {
      Illumination<double> il;
      il.k0 = k;
      REQUIRE(std::hypot(k[0], k[1]) > sys.pupil.cutoff);
      REQUIRE(std::hypot(k[0], k[1]) < two_pi / sys.wavelength_medium);
      dark.push_back(il);
    }
    auto ds = simulate_dataset(vol, dark, sys, {}, 0);
    auto result = calibrate_dataset(ds);
    for (std::size_t l = 0; l < ds.count(); ++l) {
      CHECK(result.estimates[l].flag != AngleFlag::ok);
      // fallback: corrected set keeps the reported wavevector
      CHECK(result.corrected[l].k0 == ds.illuminations[l].k0);
    }
  }
}
