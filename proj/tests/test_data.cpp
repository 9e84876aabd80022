#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "gazekit/data.hpp"
#include "gazekit/error.hpp"
#include "gazekit/fsio.hpp"

using namespace gazekit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("gazekit_test_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

double luminance_corr(const SceneImage& img, const ScanpathRecord& rec,
                      std::size_t gr, std::size_t gc) {
  std::vector<double> lum(gr * gc, 0.0), cnt(gr * gc, 0.0), gaze(gr * gc, 0.0);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      std::size_t cell = (y * gr / img.height) * gc + (x * gc / img.width);
      lum[cell] += img.at(y, x, 0) + img.at(y, x, 1) + img.at(y, x, 2);
      cnt[cell] += 1;
    }
  for (std::size_t i = 0; i < lum.size(); ++i) lum[i] /= cnt[i];
  for (const GazePoint& p : rec.points) {
    std::size_t cy = std::min(gr - 1, static_cast<std::size_t>(p.y * gr));
    std::size_t cx = std::min(gc - 1, static_cast<std::size_t>(p.x * gc));
    gaze[cy * gc + cx] += 1.0;
  }
  double ml = 0, mg = 0;
  for (std::size_t i = 0; i < lum.size(); ++i) {
    ml += lum[i];
    mg += gaze[i];
  }
  ml /= lum.size();
  mg /= gaze.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < lum.size(); ++i) {
    sxy += (lum[i] - ml) * (gaze[i] - mg);
    sxx += (lum[i] - ml) * (lum[i] - ml);
    syy += (gaze[i] - mg) * (gaze[i] - mg);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("ppm roundtrip and validation") {
  TempDir dir;
  Rng rng(5);
  std::vector<Blob> blobs;
  SceneImage img = generate_scene(rng, 64, 32, 2, &blobs);
  write_ppm(img, dir.path / "a.ppm");
  SceneImage back = read_ppm(dir.path / "a.ppm");
  CHECK(back.width == 64);
  CHECK(back.height == 32);
  // 8-bit quantization: recovered values within half a level
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 0.5 / 255.0 + 1e-12);

  atomic_write_file(dir.path / "bad.ppm", "P5\n2 2\n255\nxxxx");
  CHECK_THROWS_AS(read_ppm(dir.path / "bad.ppm"), DataError);
  atomic_write_file(dir.path / "trunc.ppm", "P6\n4 4\n255\nabc");
  CHECK_THROWS_AS(read_ppm(dir.path / "trunc.ppm"), DataError);
}

TEST_CASE("gaze csv parsing") {
  TempDir dir;
  const fs::path p = dir.path / "g.csv";

  atomic_write_file(p, "t_ms,x,y,conf\n0,0.5,0.5,1.0\n");
  auto pts = read_gaze_csv(p);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].t_ms == 0.0);
  CHECK(pts[0].x == 0.5);
  CHECK(pts[0].y == 0.5);
  CHECK(pts[0].confidence == 1.0);

  // out-of-bounds x names the field and line
  atomic_write_file(p, "t_ms,x,y,conf\n0,1.5,0.5,1.0\n");
  try {
    read_gaze_csv(p);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find(":2") != std::string::npos);
    CHECK(msg.find("'x'") != std::string::npos);
    CHECK(msg.find("[0,1]") != std::string::npos);
  }

  atomic_write_file(p, "t_ms,x,y,conf\n0,0.5,0.5,1.0\n0,0.5,0.5,1.0\n");
  CHECK_THROWS_AS(read_gaze_csv(p), DataError);  // non-monotonic timestamps

  atomic_write_file(p, "t_ms,x,y\n0,0.5,0.5\n");
  CHECK_THROWS_AS(read_gaze_csv(p), DataError);  // wrong header

  atomic_write_file(p, "t_ms,x,y,conf\n1,0.5,oops,1.0\n");
  try {
    read_gaze_csv(p);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("csv write/read roundtrip is exact at 6 decimals") {
  TempDir dir;
  Rng rng(9);
  std::vector<Blob> blobs;
  generate_scene(rng, 64, 32, 3, &blobs);
  ScanpathRecord rec = generate_scanpath(blobs, rng, 25, "s");
  write_gaze_csv(rec.points, dir.path / "s.csv");
  auto back = read_gaze_csv(dir.path / "s.csv");
  REQUIRE(back.size() == rec.points.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].t_ms == rec.points[i].t_ms);
    CHECK(back[i].x == rec.points[i].x);
    CHECK(back[i].y == rec.points[i].y);
    CHECK(back[i].confidence == rec.points[i].confidence);
  }
}

TEST_CASE("load_dataset pairing and validation") {
  TempDir dir;
  CHECK(load_dataset(dir.path).empty());  // empty root: no error

  SynthConfig cfg;
  cfg.scenes = 2;
  cfg.seed = 7;
  synth_dataset(dir.path, cfg);
  Dataset ds = load_dataset(dir.path, 16);
  CHECK(ds.records.size() == 2);
  CHECK(ds.scenes.size() == 2);

  // orphan gaze file
  atomic_write_file(dir.path / "gaze" / "orphan.csv", "t_ms,x,y,conf\n");
  CHECK_THROWS_AS(load_dataset(dir.path), DataError);
  fs::remove(dir.path / "gaze" / "orphan.csv");

  // orphan scene
  fs::remove(dir.path / "gaze" / "scene_0001.csv");
  CHECK_THROWS_AS(load_dataset(dir.path), DataError);
}

TEST_CASE("scene generation is deterministic and blob-monotone") {
  auto render = [](std::uint64_t seed) {
    Rng rng(seed);
    return generate_scene(rng, 64, 32, 3, nullptr);
  };
  SceneImage a = render(33), b = render(33);
  REQUIRE(a.pixels.size() == b.pixels.size());
  bool identical = true;
  for (std::size_t i = 0; i < a.pixels.size(); ++i)
    identical = identical && a.pixels[i] == b.pixels[i];
  CHECK(identical);

  // mean luminance grows with blob count, averaged over 20 seeds
  double mean1 = 0, mean4 = 0, mean8 = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto [n, acc] : {std::pair<std::size_t, double*>{1, &mean1},
                          {4, &mean4},
                          {8, &mean8}}) {
      Rng rng(seed);
      SceneImage img = generate_scene(rng, 64, 32, n, nullptr);
      double s = 0;
      for (double v : img.pixels) s += v;
      *acc += s / static_cast<double>(img.pixels.size());
    }
  }
  CHECK(mean1 < mean4);
  CHECK(mean4 < mean8);

  Rng bad(0);
  CHECK_THROWS_AS(generate_scene(bad, 63, 32, 1, nullptr), DataError);
}

TEST_CASE("scanpath generation properties") {
  Rng rng(77);
  std::vector<Blob> one;
  generate_scene(rng, 64, 32, 1, &one);
  ScanpathRecord rec = generate_scanpath(one, rng, 40, "s");
  CHECK(rec.points.size() == 40);
  for (std::size_t i = 0; i < rec.points.size(); ++i) {
    const GazePoint& p = rec.points[i];
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 1.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= 1.0);
    if (i) CHECK(p.t_ms > rec.points[i - 1].t_ms);
    // single blob: every fixation within 5 sigma (sigma = 0.01)
    CHECK(std::abs(p.x - one[0].cx) <= 0.05);
    CHECK(std::abs(p.y - one[0].cy) <= 0.05);
  }

  // mean distance to nearest blob stays small across 100 seeds
  double total = 0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng r(seed);
    std::vector<Blob> blobs;
    generate_scene(r, 64, 32, 3, &blobs);
    ScanpathRecord sp = generate_scanpath(blobs, r, 20, "s");
    for (const GazePoint& p : sp.points) {
      double best = 1e9;
      for (const Blob& b : blobs) {
        double d = std::hypot(p.x - b.cx, p.y - b.cy);
        best = std::min(best, d);
      }
      total += best;
      ++count;
    }
  }
  CHECK(total / static_cast<double>(count) < 0.05);
}

TEST_CASE("synthetic gaze correlates with blob luminance") {
  double corr_sum = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    Rng rng(seed);
    std::vector<Blob> blobs;
    SceneImage img = generate_scene(rng, 128, 64, 3, &blobs);
    ScanpathRecord rec = generate_scanpath(blobs, rng, 40, "s");
    corr_sum += luminance_corr(img, rec, 8, 16);
  }
  CHECK(corr_sum / 20.0 > 0.5);
}

TEST_CASE("make_samples windows") {
  Rng rng(4);
  std::vector<Blob> blobs;
  generate_scene(rng, 64, 32, 2, &blobs);

  ScanpathRecord r11 = generate_scanpath(blobs, rng, 11, "a");
  auto s1 = make_samples(r11);
  REQUIRE(s1.size() == 1);
  CHECK(s1[0].window.size() == kWindowLen);

  ScanpathRecord r20 = generate_scanpath(blobs, rng, 20, "a");
  auto s10 = make_samples(r20);
  CHECK(s10.size() == 10);
  for (const Sample& s : s10)
    CHECK(s.target.t_ms > s.window.back().t_ms);

  ScanpathRecord shortrec;
  shortrec.scene_id = "x";
  shortrec.points.resize(10);
  CHECK_THROWS_AS(make_samples(shortrec), DataError);
}

TEST_CASE("synth_dataset determinism: identical trees for identical seeds") {
  TempDir d1, d2;
  SynthConfig cfg;
  cfg.scenes = 3;
  cfg.seed = 99;
  synth_dataset(d1.path, cfg);
  synth_dataset(d2.path, cfg);
  for (const char* sub : {"scenes", "gaze"}) {
    for (const auto& e : fs::directory_iterator(d1.path / sub)) {
      const fs::path other = d2.path / sub / e.path().filename();
      REQUIRE(fs::exists(other));
      CHECK(read_file(e.path()) == read_file(other));
    }
  }
}
