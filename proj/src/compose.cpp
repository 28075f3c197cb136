#include "forge/compose.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/freetype.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "forge/error.hpp"
#include "forge/unicode.hpp"

#ifndef FORGE_ASSET_DIR
#define FORGE_ASSET_DIR "assets"
#endif

namespace forge::compose {

TextExtent UnitMeasurer::measure(std::string_view text, double font_pt) const {
  const auto n = unicode::to_code_points(text).size();
  return {static_cast<double>(n) * unit_ * font_pt, font_pt};
}

// ---- images ----

Image read_png(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty()) throw Error(ErrorCode::IoFailure, "cannot read image " + path.string());
  Image img;
  img.width = m.cols;
  img.height = m.rows;
  img.bgr.resize(static_cast<std::size_t>(m.cols) * m.rows * 3);
  for (int y = 0; y < m.rows; ++y) {
    std::copy_n(m.ptr<std::uint8_t>(y), m.cols * 3, img.bgr.data() + static_cast<std::size_t>(y) * m.cols * 3);
  }
  return img;
}

namespace {

cv::Mat as_mat(Image& img) { return cv::Mat(img.height, img.width, CV_8UC3, img.bgr.data()); }

}  // namespace

void write_png(const Image& image, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  Image copy = image;
  const std::vector<int> params = {cv::IMWRITE_PNG_COMPRESSION, 6};
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), as_mat(copy), params);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::RenderFailure, "cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

// ---- fonts ----

namespace {

std::uint16_t be16(const std::string& d, std::size_t at) {
  if (at + 2 > d.size()) throw Error(ErrorCode::RenderFailure, "truncated font file");
  return static_cast<std::uint16_t>((static_cast<std::uint8_t>(d[at]) << 8) | static_cast<std::uint8_t>(d[at + 1]));
}

std::uint32_t be32(const std::string& d, std::size_t at) { return (std::uint32_t{be16(d, at)} << 16) | be16(d, at + 2); }

// Code point coverage read from the font's cmap table (formats 4 and 12).
class Cmap {
 public:
  explicit Cmap(const std::string& font) {
    const std::uint16_t num_tables = be16(font, 4);
    std::size_t cmap = 0;
    for (std::uint16_t i = 0; i < num_tables; ++i) {
      const std::size_t rec = 12 + 16 * static_cast<std::size_t>(i);
      if (font.compare(rec, 4, "cmap") == 0) cmap = be32(font, rec + 8);
    }
    if (cmap == 0) throw Error(ErrorCode::RenderFailure, "font has no cmap table");
    const std::uint16_t n = be16(font, cmap + 2);
    std::size_t best = 0;
    int best_rank = 0;
    for (std::uint16_t i = 0; i < n; ++i) {
      const std::size_t rec = cmap + 4 + 8 * static_cast<std::size_t>(i);
      const std::uint16_t platform = be16(font, rec), encoding = be16(font, rec + 2);
      const std::size_t sub = cmap + be32(font, rec + 4);
      const std::uint16_t format = be16(font, sub);
      int rank = 0;
      if (format == 12 && (platform == 0 || (platform == 3 && encoding == 10))) rank = 2;
      if (format == 4 && (platform == 0 || (platform == 3 && encoding == 1))) rank = 1;
      if (rank > best_rank) {
        best_rank = rank;
        best = sub;
      }
    }
    if (best_rank == 0) throw Error(ErrorCode::RenderFailure, "font has no unicode cmap");
    if (best_rank == 2) {
      const std::uint32_t groups = be32(font, best + 12);
      for (std::uint32_t g = 0; g < groups; ++g) {
        const std::size_t at = best + 16 + 12 * static_cast<std::size_t>(g);
        ranges_.emplace_back(be32(font, at), be32(font, at + 4));
      }
    } else {
      const std::size_t seg = be16(font, best + 6) / 2;
      const std::size_t ends = best + 14, starts = ends + 2 * seg + 2, deltas = starts + 2 * seg,
                        offsets = deltas + 2 * seg;
      for (std::size_t s = 0; s < seg; ++s) {
        const std::uint32_t end = be16(font, ends + 2 * s), start = be16(font, starts + 2 * s);
        const std::uint16_t delta = be16(font, deltas + 2 * s), range_offset = be16(font, offsets + 2 * s);
        for (std::uint32_t cp = start; cp <= end && cp != 0xFFFF; ++cp) {
          std::uint16_t glyph;
          if (range_offset == 0) {
            glyph = static_cast<std::uint16_t>(cp + delta);
          } else {
            glyph = be16(font, offsets + 2 * s + range_offset + 2 * (cp - start));
            if (glyph != 0) glyph = static_cast<std::uint16_t>(glyph + delta);
          }
          if (glyph == 0) continue;
          if (!ranges_.empty() && ranges_.back().second + 1 == cp) {
            ranges_.back().second = cp;
          } else {
            ranges_.emplace_back(cp, cp);
          }
        }
      }
    }
    std::sort(ranges_.begin(), ranges_.end());
  }

  bool covers(char32_t cp) const {
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), std::pair<std::uint32_t, std::uint32_t>(cp, UINT32_MAX));
    return it != ranges_.begin() && std::prev(it)->second >= cp;
  }

 private:
  std::vector<std::pair<std::uint32_t, std::uint32_t>> ranges_;
};

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open font " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

struct FontStack::Impl {
  struct Face {
    cv::Ptr<cv::freetype::FreeType2> ft;
    Cmap cmap;
  };
  std::vector<Face> faces;
  double dpi = 144.0;
  mutable std::mutex mu;  // FreeType2 objects are not thread-safe

  // Splits text into runs drawn with one face each.
  std::vector<std::pair<std::size_t, std::string>> runs(std::string_view text) const {
    std::vector<std::pair<std::size_t, std::string>> out;
    for (char32_t cp : unicode::to_code_points(text)) {
      std::size_t face = faces.size() - 1;
      if (!unicode::is_space(cp)) {
        for (std::size_t i = 0; i < faces.size(); ++i) {
          if (faces[i].cmap.covers(cp)) {
            face = i;
            break;
          }
        }
      } else if (!out.empty()) {
        face = out.back().first;  // spaces stay with the current run
      } else {
        face = 0;
      }
      const std::string utf8 = unicode::to_utf8(std::u32string_view(&cp, 1));
      if (out.empty() || out.back().first != face) {
        out.emplace_back(face, utf8);
      } else {
        out.back().second += utf8;
      }
    }
    return out;
  }
};

FontStack::FontStack(std::vector<std::filesystem::path> fonts, double dpi) : impl_(std::make_unique<Impl>()) {
  if (fonts.empty()) throw Error(ErrorCode::RenderFailure, "font stack is empty");
  if (!(dpi > 0)) throw Error(ErrorCode::InvalidArgument, "dpi must be > 0");
  impl_->dpi = dpi;
  for (const auto& p : fonts) {
    const std::string data = read_file(p);
    auto ft = cv::freetype::createFreeType2();
    try {
      ft->loadFontData(p.string(), 0);
    } catch (const cv::Exception& e) {
      throw Error(ErrorCode::RenderFailure, "cannot load font " + p.string() + ": " + e.what());
    }
    impl_->faces.push_back({ft, Cmap(data)});
  }
}

FontStack::~FontStack() = default;
FontStack::FontStack(FontStack&&) noexcept = default;
FontStack& FontStack::operator=(FontStack&&) noexcept = default;

FontStack FontStack::from_dir(const std::filesystem::path& dir, double dpi) {
  std::vector<std::filesystem::path> fonts;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    const auto ext = e.path().extension().string();
    if (ext == ".ttf" || ext == ".otf" || ext == ".TTF" || ext == ".OTF") fonts.push_back(e.path());
  }
  if (ec) throw Error(ErrorCode::IoFailure, "cannot list font dir " + dir.string());
  std::sort(fonts.begin(), fonts.end());
  return FontStack(std::move(fonts), dpi);
}

FontStack FontStack::bundled() { return from_dir(std::filesystem::path(FORGE_ASSET_DIR) / "fonts"); }

int FontStack::pixel_size(double font_pt) const {
  return std::max(1, static_cast<int>(std::lround(font_pt * impl_->dpi / 72.0)));
}

bool FontStack::covers(std::size_t font_index, char32_t cp) const { return impl_->faces.at(font_index).cmap.covers(cp); }

std::size_t FontStack::size() const { return impl_->faces.size(); }

TextExtent FontStack::measure(std::string_view text, double font_pt) const {
  const int px = pixel_size(font_pt);
  double width = 0.0;
  std::lock_guard lock(impl_->mu);
  for (const auto& [face, run] : impl_->runs(text)) {
    int baseline = 0;
    width += impl_->faces[face].ft->getTextSize(run, px, -1, &baseline).width;
  }
  return {width, static_cast<double>(px)};
}

void FontStack::draw(Image& canvas, std::string_view visual_text, int x, int baseline_y, double font_pt,
                     std::array<std::uint8_t, 3> color) const {
  const int px = pixel_size(font_pt);
  cv::Mat m = as_mat(canvas);
  std::lock_guard lock(impl_->mu);
  try {
    for (const auto& [face, run] : impl_->runs(visual_text)) {
      auto& ft = impl_->faces[face].ft;
      ft->putText(m, run, cv::Point(x, baseline_y), px, cv::Scalar(color[0], color[1], color[2]), -1, cv::LINE_AA,
                  true);
      int baseline = 0;
      x += ft->getTextSize(run, px, -1, &baseline).width;
    }
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::RenderFailure, e.what());
  }
}

// ---- layout ----

void LayoutConfig::validate() const {
  if (!(min_font > 0.0) || !(initial_font >= min_font)) {
    throw Error(ErrorCode::InvalidArgument, "need initial_font >= min_font > 0");
  }
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be > 0");
  if (!(line_spacing >= 1.0)) throw Error(ErrorCode::InvalidArgument, "line_spacing must be >= 1");
}

namespace {

std::vector<std::string> greedy_wrap(const std::vector<std::string>& words, double width, double font,
                                     const GlyphMeasurer& m) {
  std::vector<std::string> lines;
  std::string line;
  for (const auto& w : words) {
    if (line.empty()) {
      line = w;
      continue;
    }
    std::string candidate = line + " " + w;
    if (m.measure(unicode::visual_order(candidate), font).width <= width) {
      line = std::move(candidate);
    } else {
      lines.push_back(std::move(line));
      line = w;
    }
  }
  if (!line.empty()) lines.push_back(std::move(line));
  return lines;
}

bool layout_fits(const std::vector<std::string>& lines, double width, double height, double font,
                 double line_height, const GlyphMeasurer& m) {
  if (lines.empty()) return true;
  for (const auto& l : lines) {
    if (m.measure(unicode::visual_order(l), font).width > width) return false;
  }
  const double total = m.line_box(font) + line_height * static_cast<double>(lines.size() - 1);
  return total <= height;
}

}  // namespace

TextLayout wrap_text(std::string_view text, double box_width, double box_height, const GlyphMeasurer& measurer,
                     const LayoutConfig& cfg) {
  if (!(box_width > 0.0) || !(box_height > 0.0)) throw Error(ErrorCode::EmptyBox, "bounding box has no area");
  cfg.validate();
  const auto words = unicode::split_whitespace(unicode::nfc(text));

  TextLayout layout;
  // sizes are initial - k*step, counted in integers to avoid drift
  const auto steps = static_cast<long>(std::floor((cfg.initial_font - cfg.min_font) / cfg.step + 1e-9));
  for (long k = 0; k <= steps; ++k) {
    const double font = cfg.initial_font - static_cast<double>(k) * cfg.step;
    layout.font_size = font;
    layout.line_height = measurer.line_box(font) * cfg.line_spacing;
    layout.lines = greedy_wrap(words, box_width, font, measurer);
    layout.fits = layout_fits(layout.lines, box_width, box_height, font, layout.line_height, measurer);
    if (layout.fits) return layout;
  }
  return layout;  // smallest size, fits == false
}

// ---- paste ----

void paste_text(Image& image, const BoundingBox& bbox, const TextLayout& layout, const FontStack& fonts) {
  if (!layout.fits) throw Error(ErrorCode::LayoutDoesNotFit, "layout overflows its box");
  if (!bbox.fits_within(image.width, image.height)) {
    throw Error(ErrorCode::InvalidBbox, "bbox lies outside the " + std::to_string(image.width) + "x" +
                                            std::to_string(image.height) + " image");
  }
  if (image.bgr.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw Error(ErrorCode::RenderFailure, "image buffer size does not match its dimensions");
  }
  const auto background = image.pixel(bbox.x, bbox.y);
  const int luminance = (background[0] * 114 + background[1] * 587 + background[2] * 299) / 1000;
  const std::array<std::uint8_t, 3> ink = luminance >= 128 ? std::array<std::uint8_t, 3>{0, 0, 0}
                                                           : std::array<std::uint8_t, 3>{255, 255, 255};

  // draw on a box-sized canvas so nothing can land outside the box
  Image canvas;
  canvas.width = bbox.width;
  canvas.height = bbox.height;
  canvas.bgr.resize(static_cast<std::size_t>(bbox.width) * bbox.height * 3);
  for (std::size_t i = 0; i < canvas.bgr.size(); i += 3) std::copy(background.begin(), background.end(), &canvas.bgr[i]);

  const int px = fonts.pixel_size(layout.font_size);
  const int ascent = static_cast<int>(std::lround(0.78 * px));
  for (std::size_t i = 0; i < layout.lines.size(); ++i) {
    const std::string visual = unicode::visual_order(layout.lines[i]);
    const int top = static_cast<int>(std::lround(static_cast<double>(i) * layout.line_height));
    int x = 0;
    if (unicode::base_direction_rtl(layout.lines[i])) {
      x = std::max(0, bbox.width - static_cast<int>(std::ceil(fonts.measure(visual, layout.font_size).width)));
    }
    fonts.draw(canvas, visual, x, top + ascent, layout.font_size, ink);
  }

  for (int y = 0; y < bbox.height; ++y) {
    const auto* src = &canvas.bgr[static_cast<std::size_t>(y) * bbox.width * 3];
    auto* dst = &image.bgr[(static_cast<std::size_t>(bbox.y + y) * image.width + bbox.x) * 3];
    std::copy_n(src, static_cast<std::size_t>(bbox.width) * 3, dst);
  }
}

TextLayout compose_file(const std::filesystem::path& input, const std::filesystem::path& output,
                        const BoundingBox& bbox, std::string_view text, const FontStack& fonts,
                        const LayoutConfig& cfg) {
  Image img = read_png(input);
  const TextLayout layout = wrap_text(text, bbox.width, bbox.height, fonts, cfg);
  paste_text(img, bbox, layout, fonts);
  write_png(img, output);
  return layout;
}

}  // namespace forge::compose
