#include "doctest.h"

#include <random>

#include "forge/compose.hpp"
#include "forge/error.hpp"
#include "forge/unicode.hpp"
#include "test_util.hpp"

using namespace forge;
using namespace forge::compose;

namespace {

std::string joined(const TextLayout& l) {
  std::string out;
  for (const auto& line : l.lines) {
    if (!out.empty()) out += ' ';
    out += line;
  }
  return unicode::normalize(out);
}

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

// Patterned background so that any stray write outside the box shows up.
Image pattern_image(int w, int h) {
  Image img;
  img.width = w;
  img.height = h;
  img.bgr.resize(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto* p = &img.bgr[(static_cast<std::size_t>(y) * w + x) * 3];
      p[0] = static_cast<std::uint8_t>((x * 7 + y * 3) % 256);
      p[1] = static_cast<std::uint8_t>((x * y) % 256);
      p[2] = static_cast<std::uint8_t>((x + y * 5) % 256);
    }
  }
  return img;
}

void fill(Image& img, const BoundingBox& b, std::uint8_t v) {
  for (int y = b.y; y < b.y + b.height; ++y)
    for (int x = b.x; x < b.x + b.width; ++x)
      for (int c = 0; c < 3; ++c) img.bgr[(static_cast<std::size_t>(y) * img.width + x) * 3 + c] = v;
}

bool inside(const BoundingBox& b, int x, int y) {
  return x >= b.x && x < b.x + b.width && y >= b.y && y < b.y + b.height;
}

const FontStack& fonts() {
  static const FontStack f = FontStack::bundled();
  return f;
}

}  // namespace

TEST_CASE("wrap_text with the unit measurer") {
  const UnitMeasurer unit;
  LayoutConfig cfg;
  cfg.initial_font = 1.0;
  cfg.min_font = 0.5;

  // the box is exactly "aa bb" wide
  auto l = wrap_text("aa bb cc", 5.0, 10.0, unit, cfg);
  CHECK(l.lines == std::vector<std::string>{"aa bb", "cc"});
  CHECK(l.font_size == 1.0);
  CHECK(l.fits);

  l = wrap_text("short", 100.0, 10.0, unit, cfg);
  CHECK(l.lines == std::vector<std::string>{"short"});
  CHECK(l.font_size == 1.0);

  // at 1.0 two stacked lines need 2.2 of height; at 0.5 one line fits
  l = wrap_text("aaaa bbbb", 5.0, 1.0, unit, cfg);
  CHECK(l.fits);
  CHECK(l.font_size == 0.5);
  CHECK(l.lines == std::vector<std::string>{"aaaa bbbb"});

  l = wrap_text("a verylongtoken b", 3.0, 100.0, unit, cfg);
  CHECK_FALSE(l.fits);
  CHECK(l.font_size == 0.5);
  CHECK(l.lines == std::vector<std::string>{"a", "verylongtoken", "b"});

  l = wrap_text("", 3.0, 3.0, unit, cfg);
  CHECK(l.lines.empty());
  CHECK(l.fits);

  CHECK_THROWS_AS(wrap_text("x", 0.0, 10.0, unit, cfg), Error);
  CHECK_THROWS_AS(wrap_text("x", 10.0, -1.0, unit, cfg), Error);
  cfg.min_font = 2.0;
  CHECK_THROWS_AS(wrap_text("x", 10.0, 10.0, unit, cfg), Error);
}

TEST_CASE("default shrink steps") {
  const UnitMeasurer unit(0.5);
  // 20 chars at 12pt are 120 wide; the first size where it fits 100 is 10pt
  const auto l = wrap_text("aaaaaaaaaaaaaaaaaaaa", 100.0, 1000.0, unit);
  CHECK(l.font_size == 10.0);
  CHECK(l.line_height == doctest::Approx(12.0));
  const auto tiny = wrap_text("aaaaaaaaaaaaaaaaaaaa", 10.0, 1000.0, unit);
  CHECK_FALSE(tiny.fits);
  CHECK(tiny.font_size == 6.0);
}

TEST_CASE("content preservation over random unicode") {
  std::mt19937 rng(17);
  const UnitMeasurer unit;
  std::uniform_real_distribution<double> dim(1.0, 400.0);
  for (int i = 0; i < 1000; ++i) {
    const std::string text = forge::testing::random_unicode(rng, 60);
    const double w = dim(rng), h = dim(rng);
    const auto a = wrap_text(text, w, h, unit);
    CHECK(joined(a) == unicode::normalize(text));
    const auto b = wrap_text(text, w, h, fonts());
    CHECK(joined(b) == unicode::normalize(text));
    if (b.fits) {
      for (const auto& line : b.lines) CHECK(fonts().measure(unicode::visual_order(line), b.font_size).width <= w);
    }
  }
}

TEST_CASE("a bigger box never breaks a fitting layout") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> dim(5.0, 300.0);
  std::uniform_real_distribution<double> grow(1.0, 1.8);
  for (int i = 0; i < 300; ++i) {
    const std::string text = forge::testing::random_unicode(rng, 50);
    const double w = dim(rng), h = dim(rng);
    const bool small = wrap_text(text, w, h, fonts()).fits;
    const auto big = wrap_text(text, w * grow(rng), h * grow(rng), fonts());
    if (small) CHECK(big.fits);
  }
}

TEST_CASE("font stack measurement") {
  const auto& f = fonts();
  CHECK(f.size() >= 1);
  CHECK(f.pixel_size(12.0) == 24);
  CHECK(f.pixel_size(11.5) == 23);
  CHECK(f.covers(0, U'A'));
  CHECK(f.covers(0, U'Ж'));
  CHECK(f.covers(0, U'م'));
  CHECK_FALSE(f.covers(0, U'中'));

  // monotone in size and in repeated characters
  for (const std::string s : {"W", "hello world", "ééé", "مرحبا"}) {
    double prev = 0;
    for (double pt = 6.0; pt <= 12.0; pt += 0.5) {
      const double w = f.measure(s, pt).width;
      CHECK(w >= prev);
      prev = w;
    }
  }
  std::string rep;
  double prev = 0;
  for (int i = 0; i < 20; ++i) {
    rep += "m";
    const double w = f.measure(rep, 9.0).width;
    CHECK(w >= prev);
    prev = w;
  }
  CHECK(f.measure("", 12.0).width == 0.0);
  CHECK_THROWS_AS(FontStack({}), Error);
  CHECK_THROWS_AS(FontStack({"/nonexistent/font.ttf"}), Error);
}

TEST_CASE("paste_text writes only inside the box") {
  Image img = pattern_image(160, 90);
  const BoundingBox box{20, 15, 120, 50};
  fill(img, box, 250);
  const Image before = img;
  const auto layout = wrap_text("Wie viele Dreiecke sind in der Figur zu sehen?", box.width, box.height, fonts());
  REQUIRE(layout.fits);
  paste_text(img, box, layout, fonts());
  int changed_inside = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (inside(box, x, y)) {
        changed_inside += img.pixel(x, y) != before.pixel(x, y);
      } else {
        REQUIRE(img.pixel(x, y) == before.pixel(x, y));
      }
    }
  }
  CHECK(changed_inside > 50);

  // text that hugs the box edges still cannot escape it
  Image tight = pattern_image(60, 40);
  const BoundingBox small{10, 10, 30, 12};
  const Image tight_before = tight;
  LayoutConfig cfg;
  cfg.min_font = 1.0;
  const auto l2 = wrap_text("WWW gggg ÄÖÜ", small.width, small.height, fonts(), cfg);
  REQUIRE(l2.fits);
  paste_text(tight, small, l2, fonts());
  for (int y = 0; y < tight.height; ++y)
    for (int x = 0; x < tight.width; ++x)
      if (!inside(small, x, y)) REQUIRE(tight.pixel(x, y) == tight_before.pixel(x, y));
}

TEST_CASE("paste_text edge cases") {
  Image img = pattern_image(50, 50);
  const BoundingBox box{5, 5, 20, 20};
  const auto corner = img.pixel(5, 5);
  TextLayout empty;
  empty.fits = true;
  empty.font_size = 10;
  paste_text(img, box, empty, fonts());
  for (int y = 0; y < 50; ++y)
    for (int x = 0; x < 50; ++x)
      if (inside(box, x, y)) REQUIRE(img.pixel(x, y) == corner);

  TextLayout overflow;
  overflow.fits = false;
  CHECK_THROWS_AS(paste_text(img, box, overflow, fonts()), Error);
  CHECK_THROWS_AS(paste_text(img, BoundingBox{40, 40, 20, 20}, empty, fonts()), Error);
}

TEST_CASE("right-to-left lines are right aligned") {
  Image img;
  img.width = 400;
  img.height = 40;
  img.bgr.assign(400 * 40 * 3, 255);
  const BoundingBox box{0, 0, 400, 40};
  const auto layout = wrap_text("مرحبا بالعالم", box.width, box.height, fonts());
  REQUIRE(layout.lines.size() == 1);
  paste_text(img, box, layout, fonts());
  int left_ink = 0, right_ink = 0, rightmost = 0;
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 400; ++x) {
      if (img.pixel(x, y)[0] >= 128) continue;
      (x < 200 ? left_ink : right_ink)++;
      rightmost = std::max(rightmost, x);
    }
  }
  CHECK(right_ink > 0);
  CHECK(left_ink == 0);
  CHECK(rightmost >= 390);
}

TEST_CASE("golden sample") {
  Image img = pattern_image(240, 120);
  const BoundingBox box{20, 30, 200, 60};
  fill(img, box, 255);
  const auto layout =
      wrap_text("Quants triangles hi ha a la figura? Compta-los tots amb cura.", box.width, box.height, fonts());
  CHECK(layout.fits);
  CHECK(layout.font_size == 8.5);
  CHECK(layout.lines.size() == 3);
  paste_text(img, box, layout, fonts());
  CHECK(fnv1a(img.bgr) == 9660901581234078295ULL);

  // same bytes through a PNG round trip, and a second render is identical
  forge::testing::TempDir dir;
  write_png(img, dir / "g.png");
  const Image back = read_png(dir / "g.png");
  CHECK(back.bgr == img.bgr);
  Image again = pattern_image(240, 120);
  fill(again, box, 255);
  paste_text(again, box, layout, fonts());
  CHECK(again.bgr == img.bgr);

  const Image src = [&] {
    Image s = pattern_image(240, 120);
    fill(s, box, 255);
    return s;
  }();
  write_png(src, dir / "src.png");
  const auto l2 = compose_file(dir / "src.png", dir / "out/dst.png", box,
                               "Quants triangles hi ha a la figura? Compta-los tots amb cura.", fonts());
  CHECK(l2.lines == layout.lines);
  CHECK(read_png(dir / "out/dst.png").bgr == img.bgr);
  CHECK_THROWS_AS(read_png(dir / "missing.png"), Error);
}
