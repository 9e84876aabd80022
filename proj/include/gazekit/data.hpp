#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gazekit/rng.hpp"

namespace gazekit {

// Equirectangular RGB frame; 8-bit per channel on disk (binary P6 PPM),
// doubles in [0,1] in memory. Aspect is fixed at width == 2 * height.
struct SceneImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;  // row-major, rgb interleaved

  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * 3 + c];
  }
  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * 3 + c];
  }
};

struct GazePoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
  double t_ms = 0.0;
};

struct ScanpathRecord {
  std::string scene_id;
  std::vector<GazePoint> points;
};

// One supervised pair: a 10-point window and the point that follows it.
struct Sample {
  std::string scene_id;
  std::vector<GazePoint> window;
  GazePoint target;
};

struct Dataset {
  std::vector<ScanpathRecord> records;
  std::map<std::string, SceneImage> scenes;

  bool empty() const { return records.empty(); }
};

inline constexpr std::size_t kWindowLen = 10;

// --- file I/O (all writes are atomic: temp file + rename) ---

SceneImage read_ppm(const std::filesystem::path& path);
void write_ppm(const SceneImage& img, const std::filesystem::path& path);

// Schema: header line "t_ms,x,y,conf", then rows with 6-decimal fixed
// formatting. Bounds and monotone timestamps are enforced on read.
std::vector<GazePoint> read_gaze_csv(const std::filesystem::path& path);
void write_gaze_csv(const std::vector<GazePoint>& points,
                    const std::filesystem::path& path);

// Loads <root>/scenes/<id>.ppm + <root>/gaze/<id>.csv pairs. A scene without
// a gaze file (or vice versa) is an error; an entirely empty root is not.
// Images must satisfy the 2:1 aspect and divisibility by patch_px.
Dataset load_dataset(const std::filesystem::path& root, std::size_t patch_px = 16);

// --- synthesis ---

struct Blob {
  double cx = 0.0, cy = 0.0;  // normalized center
  double r = 0.0, g = 0.0, b = 0.0;
};

// Dark background plus bright isotropic Gaussian blobs (sigma = h/16 px).
SceneImage generate_scene(Rng& rng, std::size_t w, std::size_t h,
                          std::size_t n_blobs, std::vector<Blob>* centers_out);

// Fixation/saccade model over the blob set: 3-6 jittered samples per
// fixation at 200-400 ms spacing, then a jump to the nearest unvisited blob.
// All emitted fields are rounded to 6 decimals so the CSV roundtrip is exact.
ScanpathRecord generate_scanpath(const std::vector<Blob>& blobs, Rng& rng,
                                 std::size_t length, std::string scene_id);

// Sliding stride-1 windows: [k..k+9] predicting k+10.
std::vector<Sample> make_samples(const ScanpathRecord& record);

std::vector<Sample> make_samples(const Dataset& dataset);

struct SynthConfig {
  std::size_t scenes = 20;
  std::size_t width = 128;
  std::size_t height = 64;
  std::size_t blobs = 3;
  std::size_t path_len = 30;
  std::uint64_t seed = 1;
};

// Generates and writes a full dataset tree under root.
void synth_dataset(const std::filesystem::path& root, const SynthConfig& cfg);

}  // namespace gazekit
