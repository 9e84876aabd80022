#pragma once

#include <cstddef>
#include <vector>

namespace gazekit {

// Azimuth theta and latitude phi in radians; phi in [-pi/2, pi/2].
struct SphereCoord {
  double theta = 0.0;
  double phi = 0.0;
};

// Patch tiling of an equirectangular image.
struct PatchGrid {
  std::size_t rows = 16;
  std::size_t cols = 32;
  std::size_t patch_px = 16;
};

// Spherical position of patch (i, j). The default azimuth convention is
// theta = j*pi/cols, which spans [0, pi) across the image width;
// azimuth_full = true switches to theta = 2*pi*j/cols. Latitude is
// phi = (i - rows/2) * pi / rows in both modes.
SphereCoord patch_center_to_sphere(std::size_t i, std::size_t j,
                                   const PatchGrid& grid,
                                   bool azimuth_full = false);

// Real orthonormal spherical harmonics up to degree l_max, evaluated at
// colatitude (pi/2 - phi) and azimuth theta. (l_max+1)^2 values, ordered
// (l, m) lexicographically with m running -l..l.
std::vector<double> real_sh_basis(const SphereCoord& coord, std::size_t l_max);

// Equirectangular pixel-density factor cos(phi). Callers normalize a batch
// of weights so the grid mean is 1.
double area_weight(double phi);

// Per-row weights for a patch grid, rescaled to mean 1.
std::vector<double> grid_area_weights(const PatchGrid& grid);

// Maps normalized image coordinates to (longitude, latitude):
// lon = 2*pi*(x - 0.5) in [-pi, pi], lat = pi*(0.5 - y) in [-pi/2, pi/2].
struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};
LonLat normalized_to_sphere(double x, double y);

// Great-circle distance in degrees between two normalized gaze points,
// computed with the haversine formula (stable near 0).
double angular_error_deg(double ax, double ay, double bx, double by);

}  // namespace gazekit
