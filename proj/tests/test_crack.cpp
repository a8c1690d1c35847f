#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "support.hpp"
#include "uavinspect/crack.hpp"
#include "uavinspect/error.hpp"

using namespace uavinspect;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidParameter;
}

struct NaiveStats {
  double mean, stdev;
};

// Two-pass mean/deviation over the clipped window, skipping `ignore`.
NaiveStats naive_stats(const RasterImage& img, int x, int y, int n, int ignore = -1) {
  const int half = n / 2;
  double sum = 0;
  int count = 0;
  for (int yy = std::max(0, y - half); yy <= std::min(img.height() - 1, y + half); ++yy)
    for (int xx = std::max(0, x - half); xx <= std::min(img.width() - 1, x + half); ++xx)
      if (img.at(xx, yy) != ignore) {
        sum += img.at(xx, yy);
        ++count;
      }
  if (count == 0) return {0, 0};
  const double m = sum / count;
  double var = 0;
  for (int yy = std::max(0, y - half); yy <= std::min(img.height() - 1, y + half); ++yy)
    for (int xx = std::max(0, x - half); xx <= std::min(img.width() - 1, x + half); ++xx)
      if (img.at(xx, yy) != ignore) var += (img.at(xx, yy) - m) * (img.at(xx, yy) - m);
  return {m, std::sqrt(var / count)};
}

BinaryMask random_mask(int w, int h, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution on(p);
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, on(rng));
  return m;
}

// Breadth-first flood fill labelling, 8-connected.
std::vector<int> flood_labels(const BinaryMask& m, int& count) {
  std::vector<int> label(static_cast<std::size_t>(m.width()) * m.height(), -1);
  count = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m.get(x, y) || label[y * m.width() + x] >= 0) continue;
      std::vector<PixelCoord> queue{{x, y}};
      label[y * m.width() + x] = count;
      for (std::size_t q = 0; q < queue.size(); ++q)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = queue[q].x + dx, ny = queue[q].y + dy;
            if (nx < 0 || ny < 0 || nx >= m.width() || ny >= m.height()) continue;
            if (!m.get(nx, ny) || label[ny * m.width() + nx] >= 0) continue;
            label[ny * m.width() + nx] = count;
            queue.push_back({nx, ny});
          }
      ++count;
    }
  return label;
}

RasterImage line_image(int w, int h, int row, std::uint8_t line, std::uint8_t bg) {
  RasterImage img(w, h, 1, bg);
  for (int x = 0; x < w; ++x) img.at(x, row) = line;
  return img;
}

CrackComponent single(std::vector<PixelCoord> px, int w = 64, int h = 64) {
  BinaryMask m(w, h);
  for (const PixelCoord& p : px) m.set(p.x, p.y);
  const auto c = connected_components(m);
  REQUIRE(c.size() == 1);
  return c[0];
}

}  // namespace

TEST_CASE("Sauvola threshold formula") {
  CHECK(std::abs(sauvola_threshold(100, 64, 0.5, 128) - 75.0) < 1e-9);
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0, 255), uk(0, 1), ur(1, 255);
  for (int i = 0; i < 1000; ++i) {
    const double m = u(rng), s = u(rng) / 2, k = uk(rng), r = ur(rng);
    REQUIRE(sauvola_threshold(m, r, k, r) == doctest::Approx(m));
    REQUIRE(sauvola_threshold(m, s, 0.0, r) == doctest::Approx(m));
    REQUIRE(sauvola_threshold(m, 0.0, k, r) == doctest::Approx(m * (1 - k)));
  }
}

TEST_CASE("parameter validation") {
  SauvolaParams p;
  CHECK_NOTHROW(p.validate());
  p.window = 4;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::InvalidParameter);
  p.window = 1;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::InvalidParameter);
  p = {};
  p.r = 0;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::InvalidParameter);
  p = {};
  p.k = 1.5;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([] { local_stats(RasterImage(8, 8, 1), 6); }) == ErrorCode::InvalidParameter);
  CHECK(polarity_from_string("bright_foreground") == Polarity::BrightForeground);
  CHECK(to_string(Polarity::DarkForeground) == "dark_foreground");
  CHECK(code_of([] { polarity_from_string("light"); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("local statistics") {
  const LocalStats flat = local_stats(RasterImage(20, 11, 1, 77), 7);
  for (std::size_t i = 0; i < flat.mean.size(); ++i) {
    CHECK(flat.mean[i] == 77);
    CHECK(flat.stdev[i] == 0);
  }

  RasterImage checker(9, 9, 1);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) checker.at(x, y) = (x + y) % 2 ? 255 : 0;
  const LocalStats cs = local_stats(checker, 3);
  // Interior 3x3 windows hold 5 of one colour and 4 of the other.
  CHECK(cs.mean[4 * 9 + 4] == doctest::Approx(4 * 255.0 / 9));
  CHECK(cs.mean[4 * 9 + 5] == doctest::Approx(5 * 255.0 / 9));
  CHECK(cs.stdev[4 * 9 + 4] == doctest::Approx(255.0 * std::sqrt(20.0) / 9));

  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 10; ++trial) {
    const RasterImage img = testing::random_image(64, 64, 1, rng);
    const int n = 3 + 2 * static_cast<int>(rng() % 8);
    const LocalStats st = local_stats(img, n);
    double worst = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const NaiveStats ref = naive_stats(img, x, y, n);
        worst = std::max({worst, std::abs(st.mean[y * 64 + x] - ref.mean), std::abs(st.stdev[y * 64 + x] - ref.stdev)});
      }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("local statistics can skip an ignored value") {
  std::mt19937_64 rng(53);
  RasterImage img = testing::random_image(40, 30, 1, rng, 0, 200);
  for (int i = 0; i < 300; ++i) img.at(static_cast<int>(rng() % 40), static_cast<int>(rng() % 30)) = 255;
  for (int x = 0; x < 9; ++x)
    for (int y = 0; y < 9; ++y) img.at(x, y) = 255;  // a window with nothing left
  const LocalStats st = local_stats(img, 7, 255);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x) {
      const NaiveStats ref = naive_stats(img, x, y, 7, 255);
      REQUIRE(std::abs(st.mean[y * 40 + x] - ref.mean) < 1e-6);
      REQUIRE(std::abs(st.stdev[y * 40 + x] - ref.stdev) < 1e-6);
    }
  CHECK(st.mean[0] == 0);

  SauvolaParams p;
  p.window = 7;
  p.ignore_value = 255;
  const BinaryMask m = binarize_local(img, p);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x)
      if (img.at(x, y) == 255) REQUIRE(!m.get(x, y));
}

TEST_CASE("local binarisation") {
  std::mt19937_64 rng(54);
  SauvolaParams p;
  p.window = 15;
  for (int trial = 0; trial < 5; ++trial) {
    const RasterImage img = testing::random_image(48, 40, 1, rng);
    const BinaryMask m = binarize_local(img, p);
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 48; ++x) {
        const NaiveStats ref = naive_stats(img, x, y, 15);
        const double t = ref.mean * (1 + p.k * (ref.stdev / p.r - 1));
        if (std::abs(img.at(x, y) - t) < 1e-9) continue;  // too close to call
        REQUIRE(m.get(x, y) == (img.at(x, y) < t));
      }
  }

  CHECK(binarize_local(RasterImage(30, 30, 1, 90), p).count() == 0);

  const RasterImage line = line_image(100, 80, 40, 40, 200);
  p = {};
  const BinaryMask lm = binarize_local(line, p);
  for (int x = 0; x < 100; ++x) CHECK(lm.get(x, 40));
  CHECK(lm.count() - 100 <= 0.01 * (100 * 79));
}

TEST_CASE("polarity") {
  std::mt19937_64 rng(55);
  const RasterImage img = testing::random_image(50, 50, 1, rng);
  SauvolaParams dark;
  dark.window = 11;
  SauvolaParams bright = dark;
  bright.polarity = Polarity::BrightForeground;
  const BinaryMask d = binarize_local(img, dark), b = binarize_local(img, bright);
  const auto t = sauvola_map(img, dark);
  for (int y = 0; y < 50; ++y)
    for (int x = 0; x < 50; ++x) {
      REQUIRE(!(d.get(x, y) && b.get(x, y)));
      if (img.at(x, y) != t[y * 50 + x]) REQUIRE((d.get(x, y) || b.get(x, y)));
    }

  // With k = 0 the threshold is the local mean, which inverts with the image.
  dark.k = bright.k = 0;
  RasterImage inv = img;
  for (auto& v : inv.data()) v = static_cast<std::uint8_t>(255 - v);
  CHECK(binarize_local(inv, bright) == binarize_local(img, dark));
}

TEST_CASE("global threshold") {
  std::mt19937_64 rng(56);
  const RasterImage img = testing::random_image(40, 40, 1, rng, 0, 254);
  CHECK(binarize_global(img, 0).count() == 0);
  CHECK(binarize_global(img, 255).count() == 1600);
  for (int i = 0; i < 50; ++i) {
    const double a = static_cast<double>(rng() % 256), b = a + static_cast<double>(rng() % 64);
    const BinaryMask lo = binarize_global(img, a), hi = binarize_global(img, b);
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 40; ++x) REQUIRE((!lo.get(x, y) || hi.get(x, y)));
  }
}

TEST_CASE("3x3 median") {
  std::mt19937_64 rng(57);
  const RasterImage img = testing::random_image(23, 19, 1, rng);
  const RasterImage m = median3(img);
  for (int y = 0; y < 19; ++y)
    for (int x = 0; x < 23; ++x) {
      std::vector<int> v;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) v.push_back(img.at(std::clamp(x + dx, 0, 22), std::clamp(y + dy, 0, 18)));
      std::sort(v.begin(), v.end());
      REQUIRE(m.at(x, y) == v[4]);
    }
  RasterImage speck(9, 9, 1, 100);
  speck.at(4, 4) = 0;
  CHECK(median3(speck) == RasterImage(9, 9, 1, 100));
}

TEST_CASE("connected components") {
  CHECK(connected_components(BinaryMask(10, 10)).empty());
  BinaryMask diag(4, 4);
  diag.set(1, 1);
  diag.set(2, 2);
  CHECK(connected_components(diag).size() == 1);

  std::mt19937_64 rng(58);
  for (int trial = 0; trial < 100; ++trial) {
    const BinaryMask m = random_mask(64, 64, 0.1 + 0.4 * (trial % 5) / 5.0, rng);
    int count = 0;
    const std::vector<int> oracle = flood_labels(m, count);
    const auto comps = connected_components(m);
    REQUIRE(static_cast<int>(comps.size()) == count);
    BinaryMask seen(64, 64);
    std::size_t total = 0;
    for (const CrackComponent& c : comps) {
      const int lab = oracle[c.pixels[0].y * 64 + c.pixels[0].x];
      for (const PixelCoord& p : c.pixels) {
        REQUIRE(oracle[p.y * 64 + p.x] == lab);
        REQUIRE(!seen.get(p.x, p.y));
        seen.set(p.x, p.y);
      }
      REQUIRE(c.area == c.pixels.size());
      REQUIRE(c.elongation >= 1.0);
      total += c.area;
    }
    REQUIRE(seen == m);
    REQUIRE(total == m.count());
    REQUIRE(component_mask(comps, 64, 64) == m);
  }
}

TEST_CASE("component geometry") {
  std::vector<PixelCoord> row;
  for (int x = 5; x < 55; ++x) row.push_back({x, 10});
  const CrackComponent line = single(row);
  CHECK(line.area == 50);
  CHECK(line.bbox == std::array<int, 4>{5, 10, 50, 1});
  CHECK(line.centroid_x == doctest::Approx(29.5));
  // Variances: (50^2 - 1)/12 + 1/12 along x, 1/12 across.
  CHECK(line.elongation == doctest::Approx(50.0));
  CHECK(line.orientation == doctest::Approx(0.0));

  std::vector<PixelCoord> col;
  for (int y = 0; y < 20; ++y) col.push_back({3, y});
  CHECK(single(col).orientation == doctest::Approx(M_PI / 2));

  std::vector<PixelCoord> square;
  for (int y = 20; y < 30; ++y)
    for (int x = 20; x < 30; ++x) square.push_back({x, y});
  const CrackComponent sq = single(square);
  CHECK(sq.elongation == doctest::Approx(1.0));
  CHECK(sq.bbox == std::array<int, 4>{20, 20, 10, 10});

  const auto kept = filter_candidates({line, sq}, 30, 3.0);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].area == 50);
  CHECK(filter_candidates(kept, 30, 3.0).size() == 1);
  CHECK(filter_candidates({line, sq}, 51, 1.0).size() == 1);
  CHECK(code_of([&] { filter_candidates(kept, 0, 3.0); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([&] { filter_candidates(kept, 1, 0.5); }) == ErrorCode::InvalidParameter);

  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 20; ++trial) {
    const auto comps = connected_components(random_mask(64, 64, 0.3, rng));
    const auto once = filter_candidates(comps, 5, 2.0);
    CHECK(once.size() <= comps.size());
    const auto twice = filter_candidates(once, 5, 2.0);
    REQUIRE(twice.size() == once.size());
    for (std::size_t i = 0; i < once.size(); ++i) REQUIRE(twice[i].pixels == once[i].pixels);
  }
}

TEST_CASE("crack report") {
  RasterImage img(120, 90, 1, 190);
  for (int x = 10; x < 110; ++x) {
    const int y = 30 + x / 8;
    img.at(x, y) = 60;
    img.at(x, y + 1) = 60;
  }
  for (int y = 60; y < 70; ++y)
    for (int x = 60; x < 70; ++x) img.at(x, y) = 50;  // blob, not line-like

  const CrackReport r = detect_cracks(img, {}, "wall.png");
  REQUIRE(r.components.size() == 1);
  CHECK(r.components[0].elongation > 3.0);
  for (const CrackComponent& c : r.components)
    for (const PixelCoord& p : c.pixels) REQUIRE(r.mask.get(p.x, p.y));

  const nlohmann::json j = to_json(r);
  CHECK(j["image"] == "wall.png");
  CHECK(j["params"]["N"] == 31);
  CHECK(j["params"]["k"] == 0.5);
  CHECK(j["params"]["R"] == 128.0);
  CHECK(j["params"]["polarity"] == "dark_foreground");
  CHECK(!j["params"].contains("ignore_value"));
  const auto& c = j["components"][0];
  for (const char* key : {"area_px", "bbox", "centroid", "elongation", "orientation_rad"}) CHECK(c.contains(key));
  CHECK(j.dump() == to_json(detect_cracks(img, {}, "wall.png")).dump());

  CrackParams withmedian;
  withmedian.median_prefilter = true;
  CHECK(detect_cracks(img, withmedian).components.size() == 1);
  CHECK(code_of([] { detect_cracks(RasterImage(8, 8, 3), {}); }) == ErrorCode::InvalidChannelCount);
}
