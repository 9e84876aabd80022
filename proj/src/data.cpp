#include "gazekit/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gazekit/error.hpp"
#include "gazekit/fsio.hpp"

namespace fs = std::filesystem;

namespace gazekit {

void atomic_write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

// ---------------------------------------------------------------------------
// PPM (P6, binary, maxval 255)
// ---------------------------------------------------------------------------

namespace {

// Consumes whitespace and '#' comments between header tokens.
void skip_ppm_space(const std::string& s, std::size_t& pos) {
  while (pos < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
}

std::size_t parse_ppm_int(const std::string& s, std::size_t& pos,
                          const fs::path& path) {
  skip_ppm_space(s, pos);
  std::size_t start = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos == start)
    throw DataError(path.string() + ": malformed PPM header near byte " +
                    std::to_string(start));
  return static_cast<std::size_t>(std::stoull(s.substr(start, pos - start)));
}

}  // namespace

SceneImage read_ppm(const fs::path& path) {
  const std::string s = read_file(path);
  if (s.size() < 2 || s[0] != 'P' || s[1] != '6')
    throw DataError(path.string() + ": not a binary P6 PPM");
  std::size_t pos = 2;
  const std::size_t w = parse_ppm_int(s, pos, path);
  const std::size_t h = parse_ppm_int(s, pos, path);
  const std::size_t maxval = parse_ppm_int(s, pos, path);
  if (maxval != 255)
    throw DataError(path.string() + ": unsupported maxval " + std::to_string(maxval));
  if (pos >= s.size() || !std::isspace(static_cast<unsigned char>(s[pos])))
    throw DataError(path.string() + ": malformed PPM header");
  ++pos;  // single whitespace before raster
  const std::size_t need = w * h * 3;
  if (s.size() - pos < need)
    throw DataError(path.string() + ": truncated pixel data (" +
                    std::to_string(s.size() - pos) + " of " + std::to_string(need) +
                    " bytes)");
  SceneImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(need);
  for (std::size_t i = 0; i < need; ++i)
    img.pixels[i] = static_cast<unsigned char>(s[pos + i]) / 255.0;
  return img;
}

void write_ppm(const SceneImage& img, const fs::path& path) {
  std::string out = "P6\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.pixels.size());
  for (double v : img.pixels) {
    const double clamped = std::min(1.0, std::max(0.0, v));
    out.push_back(static_cast<char>(
        static_cast<unsigned char>(std::lround(clamped * 255.0))));
  }
  atomic_write_file(path, out);
}

// ---------------------------------------------------------------------------
// Gaze CSV
// ---------------------------------------------------------------------------

namespace {

double parse_field(const std::string& field, const char* name, std::size_t line,
                   const fs::path& path) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": field '" +
                    name + "' is not a number: \"" + field + "\"");
  }
  if (used != field.size())
    throw DataError(path.string() + ":" + std::to_string(line) +
                    ": trailing junk in field '" + name + "': \"" + field + "\"");
  return v;
}

void check_unit_range(double v, const char* name, std::size_t line,
                      const fs::path& path) {
  if (v < 0.0 || v > 1.0)
    throw DataError(path.string() + ":" + std::to_string(line) + ": field '" +
                    name + "' = " + std::to_string(v) + " outside [0,1]");
}

}  // namespace

std::vector<GazePoint> read_gaze_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "t_ms,x,y,conf")
    throw DataError(path.string() + ":1: expected header \"t_ms,x,y,conf\"");
  std::vector<GazePoint> points;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 4)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 4 " +
                      "fields, got " + std::to_string(fields.size()));
    GazePoint p;
    p.t_ms = parse_field(fields[0], "t_ms", lineno, path);
    p.x = parse_field(fields[1], "x", lineno, path);
    p.y = parse_field(fields[2], "y", lineno, path);
    p.confidence = parse_field(fields[3], "conf", lineno, path);
    if (p.t_ms < 0.0)
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": field 't_ms' must be non-negative");
    check_unit_range(p.x, "x", lineno, path);
    check_unit_range(p.y, "y", lineno, path);
    check_unit_range(p.confidence, "conf", lineno, path);
    if (!points.empty() && p.t_ms <= points.back().t_ms)
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": timestamps must be strictly increasing");
    points.push_back(p);
  }
  return points;
}

void write_gaze_csv(const std::vector<GazePoint>& points, const fs::path& path) {
  std::string out = "t_ms,x,y,conf\n";
  char buf[128];
  for (const GazePoint& p : points) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f\n", p.t_ms, p.x, p.y,
                  p.confidence);
    out += buf;
  }
  atomic_write_file(path, out);
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

Dataset load_dataset(const fs::path& root, std::size_t patch_px) {
  Dataset ds;
  const fs::path scenes_dir = root / "scenes";
  const fs::path gaze_dir = root / "gaze";

  std::set<std::string> scene_ids, gaze_ids;
  if (fs::exists(scenes_dir))
    for (const auto& e : fs::directory_iterator(scenes_dir))
      if (e.path().extension() == ".ppm") scene_ids.insert(e.path().stem().string());
  if (fs::exists(gaze_dir))
    for (const auto& e : fs::directory_iterator(gaze_dir))
      if (e.path().extension() == ".csv") gaze_ids.insert(e.path().stem().string());

  for (const auto& id : scene_ids)
    if (!gaze_ids.count(id))
      throw DataError("dataset: scene '" + id + "' has no gaze file");
  for (const auto& id : gaze_ids)
    if (!scene_ids.count(id))
      throw DataError("dataset: gaze '" + id + "' has no scene image");

  for (const auto& id : scene_ids) {
    SceneImage img = read_ppm(scenes_dir / (id + ".ppm"));
    if (img.width != 2 * img.height)
      throw DataError("dataset: scene '" + id + "' is " + std::to_string(img.width) +
                      "x" + std::to_string(img.height) +
                      ", equirectangular frames need width == 2*height");
    if (patch_px == 0 || img.width % patch_px != 0 || img.height % patch_px != 0)
      throw DataError("dataset: scene '" + id + "' dims not divisible by patch size " +
                      std::to_string(patch_px));
    ScanpathRecord rec;
    rec.scene_id = id;
    rec.points = read_gaze_csv(gaze_dir / (id + ".csv"));
    if (rec.points.size() < kWindowLen + 1)
      throw DataError("dataset: gaze '" + id + "' has " +
                      std::to_string(rec.points.size()) + " points, need at least " +
                      std::to_string(kWindowLen + 1));
    ds.scenes.emplace(id, std::move(img));
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

namespace {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

SceneImage generate_scene(Rng& rng, std::size_t w, std::size_t h,
                          std::size_t n_blobs, std::vector<Blob>* centers_out) {
  if (w != 2 * h || w == 0)
    throw DataError("generate_scene: need width == 2*height, got " +
                    std::to_string(w) + "x" + std::to_string(h));
  if (n_blobs < 1) throw DataError("generate_scene: n_blobs must be >= 1");

  std::vector<Blob> blobs(n_blobs);
  for (Blob& b : blobs) {
    // keep centers away from the frame edges so fixations stay in bounds
    b.cx = rng.uniform(0.1, 0.9);
    b.cy = rng.uniform(0.15, 0.85);
    b.r = rng.uniform(0.6, 1.0);
    b.g = rng.uniform(0.6, 1.0);
    b.b = rng.uniform(0.6, 1.0);
  }

  SceneImage img;
  img.width = w;
  img.height = h;
  img.pixels.assign(w * h * 3, 0.05);
  const double sigma = static_cast<double>(h) / 16.0;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (const Blob& b : blobs) {
    const double px = b.cx * static_cast<double>(w);
    const double py = b.cy * static_cast<double>(h);
    // blobs are compact; only touch pixels within 4 sigma
    const long x0 = std::max(0L, std::lround(px - 4 * sigma));
    const long x1 = std::min(static_cast<long>(w) - 1, std::lround(px + 4 * sigma));
    const long y0 = std::max(0L, std::lround(py - 4 * sigma));
    const long y1 = std::min(static_cast<long>(h) - 1, std::lround(py + 4 * sigma));
    for (long y = y0; y <= y1; ++y)
      for (long x = x0; x <= x1; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - px;
        const double dy = static_cast<double>(y) + 0.5 - py;
        const double g = std::exp(-(dx * dx + dy * dy) * inv2s2);
        auto ux = static_cast<std::size_t>(x);
        auto uy = static_cast<std::size_t>(y);
        img.at(uy, ux, 0) = clamp01(img.at(uy, ux, 0) + b.r * g);
        img.at(uy, ux, 1) = clamp01(img.at(uy, ux, 1) + b.g * g);
        img.at(uy, ux, 2) = clamp01(img.at(uy, ux, 2) + b.b * g);
      }
  }
  if (centers_out) *centers_out = std::move(blobs);
  return img;
}

ScanpathRecord generate_scanpath(const std::vector<Blob>& blobs, Rng& rng,
                                 std::size_t length, std::string scene_id) {
  if (length < kWindowLen + 1)
    throw DataError("generate_scanpath: length must be at least " +
                    std::to_string(kWindowLen + 1));
  if (blobs.empty()) throw DataError("generate_scanpath: no blobs");

  ScanpathRecord rec;
  rec.scene_id = std::move(scene_id);
  rec.points.reserve(length);

  std::vector<bool> visited(blobs.size(), false);
  std::size_t current = rng.below(blobs.size());
  double t = 0.0;
  while (rec.points.size() < length) {
    visited[current] = true;
    const std::size_t n_fix = 3 + rng.below(4);  // 3..6 samples per fixation
    for (std::size_t k = 0; k < n_fix && rec.points.size() < length; ++k) {
      GazePoint p;
      p.x = round6(clamp01(blobs[current].cx + 0.01 * rng.normal()));
      p.y = round6(clamp01(blobs[current].cy + 0.01 * rng.normal()));
      p.confidence = round6(clamp01(0.9 + 0.05 * rng.normal()));
      p.t_ms = round6(t);
      rec.points.push_back(p);
      t += rng.uniform(200.0, 400.0);
    }
    // saccade to the nearest blob not yet visited; start over when exhausted
    if (std::all_of(visited.begin(), visited.end(), [](bool v) { return v; })) {
      std::fill(visited.begin(), visited.end(), false);
      visited[current] = true;
      if (std::all_of(visited.begin(), visited.end(), [](bool v) { return v; })) {
        // single blob: stay put
        continue;
      }
    }
    double best = 1e9;
    std::size_t next = current;
    for (std::size_t i = 0; i < blobs.size(); ++i) {
      if (visited[i]) continue;
      const double dx = blobs[i].cx - blobs[current].cx;
      const double dy = blobs[i].cy - blobs[current].cy;
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        next = i;
      }
    }
    current = next;
  }
  return rec;
}

std::vector<Sample> make_samples(const ScanpathRecord& record) {
  if (record.points.size() < kWindowLen + 1)
    throw DataError("make_samples: record '" + record.scene_id + "' has " +
                    std::to_string(record.points.size()) +
                    " points, need at least " + std::to_string(kWindowLen + 1));
  std::vector<Sample> out;
  for (std::size_t k = 0; k + kWindowLen < record.points.size(); ++k) {
    Sample s;
    s.scene_id = record.scene_id;
    s.window.assign(record.points.begin() + static_cast<std::ptrdiff_t>(k),
                    record.points.begin() + static_cast<std::ptrdiff_t>(k + kWindowLen));
    s.target = record.points[k + kWindowLen];
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> make_samples(const Dataset& dataset) {
  std::vector<Sample> out;
  for (const auto& rec : dataset.records) {
    auto s = make_samples(rec);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

void synth_dataset(const fs::path& root, const SynthConfig& cfg) {
  if (cfg.scenes == 0) throw DataError("synth: need at least one scene");
  Rng master(cfg.seed);
  for (std::size_t i = 0; i < cfg.scenes; ++i) {
    Rng scene_rng = master.stream(2 * i);
    Rng path_rng = master.stream(2 * i + 1);
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04zu", i);
    std::vector<Blob> blobs;
    SceneImage img = generate_scene(scene_rng, cfg.width, cfg.height, cfg.blobs, &blobs);
    ScanpathRecord rec = generate_scanpath(blobs, path_rng, cfg.path_len, name);
    write_ppm(img, root / "scenes" / (std::string(name) + ".ppm"));
    write_gaze_csv(rec.points, root / "gaze" / (std::string(name) + ".csv"));
  }
}

}  // namespace gazekit
