#include "gazekit/sphere.hpp"

#include <cmath>
#include <string>

#include "gazekit/error.hpp"

namespace gazekit {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

SphereCoord patch_center_to_sphere(std::size_t i, std::size_t j,
                                   const PatchGrid& grid, bool azimuth_full) {
  if (i >= grid.rows || j >= grid.cols)
    throw DataError("patch_center_to_sphere: index (" + std::to_string(i) + "," +
                    std::to_string(j) + ") outside " + std::to_string(grid.rows) +
                    "x" + std::to_string(grid.cols) + " grid");
  const double cols = static_cast<double>(grid.cols);
  const double rows = static_cast<double>(grid.rows);
  SphereCoord c;
  c.theta = azimuth_full ? 2.0 * kPi * static_cast<double>(j) / cols
                         : kPi * static_cast<double>(j) / cols;
  c.phi = (static_cast<double>(i) - rows / 2.0) * kPi / rows;
  return c;
}

std::vector<double> real_sh_basis(const SphereCoord& coord, std::size_t l_max) {
  const double colat = kPi / 2.0 - coord.phi;
  const double ct = std::cos(colat);
  const std::size_t n = (l_max + 1) * (l_max + 1);
  std::vector<double> out(n);
  std::size_t idx = 0;
  for (std::size_t l = 0; l <= l_max; ++l) {
    for (int m = -static_cast<int>(l); m <= static_cast<int>(l); ++m, ++idx) {
      const unsigned am = static_cast<unsigned>(m < 0 ? -m : m);
      // orthonormal prefactor sqrt((2l+1)/(4pi) * (l-|m|)!/(l+|m|)!)
      double ratio = 1.0;
      for (unsigned k_ = l - am + 1; k_ <= l + am; ++k_) ratio /= static_cast<double>(k_);
      const double norm =
          std::sqrt((2.0 * static_cast<double>(l) + 1.0) / (4.0 * kPi) * ratio);
      const double p = std::assoc_legendre(static_cast<unsigned>(l), am, ct);
      if (m == 0) {
        out[idx] = norm * p;
      } else if (m > 0) {
        out[idx] = std::sqrt(2.0) * norm * p * std::cos(m * coord.theta);
      } else {
        out[idx] = std::sqrt(2.0) * norm * p * std::sin(am * coord.theta);
      }
    }
  }
  return out;
}

double area_weight(double phi) {
  if (phi < -kPi / 2.0 - 1e-12 || phi > kPi / 2.0 + 1e-12)
    throw DataError("area_weight: latitude " + std::to_string(phi) +
                    " outside [-pi/2, pi/2]");
  return std::cos(phi);
}

std::vector<double> grid_area_weights(const PatchGrid& grid) {
  std::vector<double> w(grid.rows * grid.cols);
  double total = 0.0;
  for (std::size_t i = 0; i < grid.rows; ++i) {
    const double wi = area_weight(patch_center_to_sphere(i, 0, grid).phi);
    for (std::size_t j = 0; j < grid.cols; ++j) w[i * grid.cols + j] = wi;
    total += wi * static_cast<double>(grid.cols);
  }
  const double mean = total / static_cast<double>(w.size());
  for (double& v : w) v /= mean;
  return w;
}

LonLat normalized_to_sphere(double x, double y) {
  if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
    throw DataError("normalized_to_sphere: (" + std::to_string(x) + "," +
                    std::to_string(y) + ") outside [0,1]^2");
  return {2.0 * kPi * (x - 0.5), kPi * (0.5 - y)};
}

double angular_error_deg(double ax, double ay, double bx, double by) {
  const LonLat a = normalized_to_sphere(ax, ay);
  const LonLat b = normalized_to_sphere(bx, by);
  const double dlat = b.lat - a.lat;
  const double dlon = b.lon - a.lon;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(a.lat) * std::cos(b.lat) * s2 * s2;
  const double c = 2.0 * std::atan2(std::sqrt(h), std::sqrt(std::max(0.0, 1.0 - h)));
  return c * 180.0 / kPi;
}

}  // namespace gazekit
