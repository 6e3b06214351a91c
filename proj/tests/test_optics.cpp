#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace odt;
using test_support::random_field;
using test_support::random_inband_field;
using test_support::rel_l2_error;

TEST_CASE("frequency grid samples follow the discrete convention") {
  auto g = make_frequency_grid<double>(4, 4, 1.0);
  CHECK(g.kx[0] == 0.0);
  CHECK(g.kx[1] == Catch::Approx(pi / 2));
  CHECK(std::abs(g.kx[2]) == Catch::Approx(pi));
  CHECK(g.kx[3] == Catch::Approx(-pi / 2));

  auto g2 = make_frequency_grid<double>(2, 2, 0.5);
  CHECK(g2.kx[0] == 0.0);
  CHECK(std::abs(g2.kx[1]) == Catch::Approx(2 * pi));

  auto g6 = make_frequency_grid<double>(6, 6, 0.25);
  double max_k = 0.0;
  for (double k : g6.kx) max_k = std::max(max_k, std::abs(k));
  CHECK(max_k == Catch::Approx(4 * pi));
}

TEST_CASE("frequency grid rejects invalid dimensions") {
  CHECK_THROWS_AS(make_frequency_grid<double>(3, 4, 1.0), Error);
  CHECK_THROWS_AS(make_frequency_grid<double>(4, 0, 1.0), Error);
  CHECK_THROWS_AS(make_frequency_grid<double>(4, 4, -1.0), Error);
}

TEST_CASE("pupil cutoff and membership") {
  auto grid = make_frequency_grid<double>(64, 64, 0.1);
  auto pupil = make_pupil(grid, 1.1, 0.532);
  CHECK(pupil.cutoff == Catch::Approx(12.9918).epsilon(1e-4));
  CHECK_FALSE(pupil.clipped_to_nyquist);

  for (int x = 0; x < grid.nx; ++x)
    for (int y = 0; y < grid.ny; ++y) {
      const double k = std::hypot(grid.kx[x], grid.ky[y]);
      const double t = pupil.transfer[std::size_t(x) * grid.ny + y].real();
      CHECK(t == (k <= pupil.cutoff ? 1.0 : 0.0));
    }
}

TEST_CASE("pupil edge cases: all-pass, DC-only, Nyquist clipping") {
  auto grid = make_frequency_grid<double>(16, 16, 0.5);

  auto all_pass = make_pupil(grid, 1000.0, 0.5);
  for (const auto& t : all_pass.transfer) CHECK(t.real() == 1.0);
  CHECK(all_pass.clipped_to_nyquist);

  // Cutoff below the smallest nonzero |k|: only DC passes.
  const double dk = grid.dkx();
  auto dc_only = make_pupil(grid, dk * 0.5 * 0.5 / two_pi, 0.5);
  int nonzero = 0;
  for (const auto& t : dc_only.transfer) nonzero += t.real() != 0.0;
  CHECK(nonzero == 1);
  CHECK(dc_only.transfer[0].real() == 1.0);
}

TEST_CASE("propagation identities") {
  const double wl = 0.5;
  test_support::SplitMix64 rng(7);

  SECTION("zero distance is the band-limited identity") {
    auto f = random_inband_field(32, 32, 0.2, wl, rng);
    auto out = propagate(f, 0.0, wl);
    CHECK(rel_l2_error(out, f) < 1e-12);
  }

  SECTION("constant field picks up the on-axis phase") {
    Field2D<double> f(16, 16, 0.3, {1.0, 0.0});
    const double dz = 0.7;
    auto out = propagate(f, dz, wl);
    const auto expected = std::polar(1.0, -dz * two_pi / wl);
    for (const auto& z : out.v) {
      CHECK(z.real() == Catch::Approx(expected.real()).margin(1e-12));
      CHECK(z.imag() == Catch::Approx(expected.imag()).margin(1e-12));
    }
  }

  SECTION("plane waves are eigenfunctions with the analytic eigenvalue") {
    const int nx = 32, ny = 32;
    const double pitch = 0.25, dz = 1.3;
    auto grid = make_frequency_grid<double>(nx, ny, pitch);
    Illumination<double> il;
    il.k0 = {3 * grid.dkx(), -2 * grid.dky()};
    auto f = illumination_field(il, nx, ny, pitch);
    auto out = propagate(f, dz, wl);

    const double km = two_pi / wl;
    const double k2 = il.k0[0] * il.k0[0] + il.k0[1] * il.k0[1];
    REQUIRE(k2 < km * km);
    const auto eig = std::polar(1.0, -dz * std::sqrt(km * km - k2));
    Field2D<double> want = f;
    for (auto& z : want.v) z *= eig;
    CHECK(rel_l2_error(out, want) < 1e-12);
  }

  SECTION("unitary on the propagating band") {
    for (int trial = 0; trial < 20; ++trial) {
      auto f = random_inband_field(32, 32, 0.2, wl, rng);
      const double d = rng.uniform(-20.0, 20.0);
      auto out = propagate(f, d, wl);
      CHECK(std::abs(norm2(out) - norm2(f)) <= 1e-10 * norm2(f));
    }
  }

  SECTION("negative distance inverts exactly in-band") {
    auto f = random_field(32, 32, 0.2, rng);
    const auto limited = band_limit(f, wl);
    const double d = 3.7;
    auto roundtrip = propagate(propagate(f, d, wl), -d, wl);
    CHECK(rel_l2_error(roundtrip, limited) < 1e-10);
  }

  SECTION("group property") {
    auto f = random_inband_field(32, 32, 0.2, wl, rng);
    const double d1 = 1.1, d2 = -2.6;
    auto once = propagate(f, d1 + d2, wl);
    auto twice = propagate(propagate(f, d1, wl), d2, wl);
    CHECK(rel_l2_error(twice, once) < 1e-9);
  }

  SECTION("padding is invisible for a well-contained beam") {
    // Gaussian spot in the grid center; padding changes only wrap-around.
    Field2D<double> f(32, 32, 0.2);
    for (int x = 0; x < 32; ++x)
      for (int y = 0; y < 32; ++y) {
        const double dx = (x - 16) * 0.2, dy = (y - 16) * 0.2;
        f.at(x, y) = std::exp(-(dx * dx + dy * dy) / (2 * 0.5 * 0.5));
      }
    auto plain = propagate(f, 0.5, wl);
    auto padded = propagate(f, 0.5, wl, 2);
    CHECK(plain.nx == padded.nx);
    CHECK(rel_l2_error(padded, plain) < 1e-2);
  }
}

TEST_CASE("apply_pupil behaviour") {
  test_support::SplitMix64 rng(11);
  auto grid = make_frequency_grid<double>(32, 32, 0.2);
  auto f = random_field(32, 32, 0.2, rng);

  SECTION("all-pass pupil is the identity") {
    auto pupil = make_pupil(grid, 100.0, 0.5);
    CHECK(rel_l2_error(apply_pupil(f, pupil), f) < 1e-13);
  }

  SECTION("DC-only pupil projects onto the mean") {
    auto pupil = make_pupil(grid, grid.dkx() * 0.5 * 0.5 / two_pi, 0.5);
    auto out = apply_pupil(f, pupil);
    std::complex<double> mean{};
    for (const auto& z : f.v) mean += z;
    mean /= double(f.v.size());
    for (const auto& z : out.v) CHECK(std::abs(z - mean) < 1e-12);
  }

  SECTION("idempotent and energy non-increasing") {
    auto pupil = make_pupil(grid, 0.3, 0.5);
    auto once = apply_pupil(f, pupil);
    auto twice = apply_pupil(once, pupil);
    CHECK(rel_l2_error(twice, once) < 1e-13);
    CHECK(norm2(once) <= norm2(f) * (1 + 1e-12));
  }

  SECTION("grid mismatch is an error") {
    auto other = make_frequency_grid<double>(16, 16, 0.2);
    auto pupil = make_pupil(other, 0.3, 0.5);
    CHECK_THROWS_AS(apply_pupil(f, pupil), Error);
  }
}

TEST_CASE("intensity spectrum") {
  SECTION("constant image concentrates at DC") {
    Image2D<double> img(16, 16, 0.4, 2.5);
    auto spec = intensity_spectrum(img);
    for (int x = 0; x < spec.nx; ++x)
      for (int y = 0; y < spec.ny; ++y) {
        if (x == 8 && y == 8) CHECK(spec.at(x, y) > 0.0);
        else CHECK(spec.at(x, y) < 1e-10);
      }
  }

  SECTION("real input gives a symmetric magnitude") {
    test_support::SplitMix64 rng(3);
    Image2D<double> img(16, 16, 0.4);
    for (auto& v : img.v) v = rng.uniform01();
    auto spec = intensity_spectrum(img);
    // k -> -k symmetry, excluding the one-sided Nyquist row/column.
    for (int x = 1; x < spec.nx; ++x)
      for (int y = 1; y < spec.ny; ++y)
        CHECK(spec.at(x, y) ==
              Catch::Approx(spec.at(spec.nx - x, spec.ny - y)).margin(1e-10));
  }

  SECTION("cosine fringe peaks at DC and +/- its frequency") {
    const int n = 32;
    Image2D<double> img(n, n, 0.5);
    const int cycles = 5;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        img.at(x, y) = 1.0 + 0.5 * std::cos(two_pi * cycles * x / n);
    auto spec = intensity_spectrum(img);
    std::vector<std::pair<double, std::pair<int, int>>> ranked;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) ranked.push_back({spec.at(x, y), {x, y}});
    std::sort(ranked.rbegin(), ranked.rend());
    CHECK(ranked[0].second == std::make_pair(n / 2, n / 2));
    std::set<std::pair<int, int>> top{ranked[1].second, ranked[2].second};
    CHECK(top.count({n / 2 + cycles, n / 2}) == 1);
    CHECK(top.count({n / 2 - cycles, n / 2}) == 1);
  }

  SECTION("negative input is rejected") {
    Image2D<double> img(8, 8, 1.0, 1.0);
    img.at(2, 3) = -0.1;
    CHECK_THROWS_AS(intensity_spectrum(img), Error);
  }
}
