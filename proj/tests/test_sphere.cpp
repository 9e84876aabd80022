#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "gazekit/error.hpp"
#include "gazekit/rng.hpp"
#include "gazekit/sphere.hpp"

using namespace gazekit;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent reference: embed both points on the unit sphere and take
// atan2(|u x v|, u . v). Different route than the haversine implementation.
double ref_angular_deg(double ax, double ay, double bx, double by) {
  auto vec = [](double x, double y) {
    double lon = 2.0 * kPi * (x - 0.5);
    double lat = kPi * (0.5 - y);
    return std::array<double, 3>{std::cos(lat) * std::cos(lon),
                                 std::cos(lat) * std::sin(lon), std::sin(lat)};
  };
  auto u = vec(ax, ay), v = vec(bx, by);
  double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  std::array<double, 3> cr = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                              u[0] * v[1] - u[1] * v[0]};
  double cn = std::sqrt(cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]);
  return std::atan2(cn, dot) * 180.0 / kPi;
}

}  // namespace

TEST_CASE("patch grid to sphere follows the index convention") {
  PatchGrid grid;  // 16 x 32, patch 16
  auto c = patch_center_to_sphere(8, 0, grid);
  CHECK(c.theta == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(c.phi == doctest::Approx(0.0).epsilon(1e-15));

  CHECK(patch_center_to_sphere(0, 0, grid).phi ==
        doctest::Approx(-kPi / 2).epsilon(1e-15));

  CHECK(patch_center_to_sphere(8, 16, grid, true).theta ==
        doctest::Approx(kPi).epsilon(1e-15));
  // default half-azimuth convention
  CHECK(patch_center_to_sphere(8, 16, grid, false).theta ==
        doctest::Approx(kPi / 2).epsilon(1e-15));

  CHECK_THROWS_AS(patch_center_to_sphere(16, 0, grid), DataError);
  CHECK_THROWS_AS(patch_center_to_sphere(0, 32, grid), DataError);
}

TEST_CASE("spherical harmonics basis basics") {
  std::vector<double> b = real_sh_basis({0.3, 0.7}, 4);
  CHECK(b.size() == 25);
  CHECK(b[0] == doctest::Approx(0.28209479177387814).epsilon(1e-13));

  // north pole kills every m != 0 term
  std::vector<double> pole = real_sh_basis({1.234, kPi / 2}, 4);
  std::size_t idx = 0;
  for (int l = 0; l <= 4; ++l)
    for (int m = -l; m <= l; ++m, ++idx)
      if (m != 0) CHECK(std::abs(pole[idx]) <= 1e-12);

  CHECK(real_sh_basis({0, 0}, 0).size() == 1);
}

TEST_CASE("spherical harmonics are orthonormal under 64x128 quadrature") {
  const std::size_t lmax = 4, nb = (lmax + 1) * (lmax + 1);
  const std::size_t rows = 64, cols = 128;
  std::vector<double> gram(nb * nb, 0.0);
  const double dth = kPi / rows, dph = 2.0 * kPi / cols;
  for (std::size_t i = 0; i < rows; ++i) {
    const double colat = (i + 0.5) * dth;
    const double w = std::sin(colat) * dth * dph;
    const double phi = kPi / 2.0 - colat;  // latitude
    for (std::size_t j = 0; j < cols; ++j) {
      const double az = (j + 0.5) * dph;
      std::vector<double> y = real_sh_basis({az, phi}, lmax);
      for (std::size_t a = 0; a < nb; ++a)
        for (std::size_t b = 0; b < nb; ++b) gram[a * nb + b] += w * y[a] * y[b];
    }
  }
  double max_off = 0.0, max_diag = 0.0;
  for (std::size_t a = 0; a < nb; ++a)
    for (std::size_t b = 0; b < nb; ++b) {
      if (a == b)
        max_diag = std::max(max_diag, std::abs(gram[a * nb + b] - 1.0));
      else
        max_off = std::max(max_off, std::abs(gram[a * nb + b]));
    }
  CHECK(max_off < 1e-3);
  CHECK(max_diag < 1e-3);
}

TEST_CASE("area weights") {
  CHECK(area_weight(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(area_weight(kPi / 2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(area_weight(-kPi / 2) == doctest::Approx(0.0).epsilon(1e-12));

  PatchGrid grid;
  auto c = patch_center_to_sphere(4, 0, grid);
  CHECK(area_weight(c.phi) == doctest::Approx(0.7071067811865476).epsilon(1e-13));

  // monotone decrease away from the equator
  double prev = area_weight(0.0);
  for (double phi = 0.1; phi <= kPi / 2 + 1e-9; phi += 0.1) {
    double w = area_weight(std::min(phi, kPi / 2));
    CHECK(w <= prev + 1e-15);
    CHECK(area_weight(-std::min(phi, kPi / 2)) == doctest::Approx(w).epsilon(1e-12));
    prev = w;
  }

  // grid weights rescaled to mean one
  auto w = grid_area_weights(grid);
  double mean = 0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(w.size());
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalized coordinate mapping") {
  auto c = normalized_to_sphere(0.5, 0.5);
  CHECK(c.lon == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(c.lat == doctest::Approx(0.0).epsilon(1e-15));

  auto left = normalized_to_sphere(0.0, 0.5);
  CHECK(left.lon == doctest::Approx(-kPi).epsilon(1e-15));
  CHECK(left.lat == doctest::Approx(0.0).epsilon(1e-15));

  auto q = normalized_to_sphere(0.75, 0.25);
  CHECK(q.lon == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(q.lat == doctest::Approx(kPi / 4).epsilon(1e-15));

  CHECK_THROWS_AS(normalized_to_sphere(-0.01, 0.5), DataError);
  CHECK_THROWS_AS(normalized_to_sphere(0.5, 1.01), DataError);
}

TEST_CASE("angular error metric") {
  CHECK(angular_error_deg(0.3, 0.7, 0.3, 0.7) == 0.0);
  CHECK(angular_error_deg(0.25, 0.5, 0.75, 0.5) ==
        doctest::Approx(180.0).epsilon(1e-12));
  CHECK(angular_error_deg(0.5, 0.5, 0.5, 0.25) ==
        doctest::Approx(45.0).epsilon(1e-12));
}

TEST_CASE("angular error matches an independent reference on 1000 pairs") {
  Rng rng(314);
  for (int k = 0; k < 1000; ++k) {
    double ax = rng.uniform(), ay = rng.uniform();
    double bx = rng.uniform(), by = rng.uniform();
    double mine = angular_error_deg(ax, ay, bx, by);
    double ref = ref_angular_deg(ax, ay, bx, by);
    CHECK(std::abs(mine - ref) <= 1e-9);
    CHECK(mine >= 0.0);
    CHECK(mine <= 180.0 + 1e-12);
    CHECK(angular_error_deg(bx, by, ax, ay) == doctest::Approx(mine).epsilon(1e-13));
    if (ax != bx || ay != by) CHECK(mine >= 0.0);
  }
}

TEST_CASE("angular error satisfies the triangle inequality on 1000 triples") {
  Rng rng(2718);
  for (int k = 0; k < 1000; ++k) {
    double ax = rng.uniform(), ay = rng.uniform();
    double bx = rng.uniform(), by = rng.uniform();
    double cx = rng.uniform(), cy = rng.uniform();
    double ab = angular_error_deg(ax, ay, bx, by);
    double bc = angular_error_deg(bx, by, cx, cy);
    double ac = angular_error_deg(ax, ay, cx, cy);
    CHECK(ac <= ab + bc + 1e-9);
  }
}
