#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "forge/model.hpp"

namespace forge::compose {

struct TextExtent {
  double width = 0.0;
  double height = 0.0;
};

// Width must not decrease with font size or with repeated characters.
class GlyphMeasurer {
 public:
  virtual ~GlyphMeasurer() = default;
  virtual TextExtent measure(std::string_view text, double font_pt) const = 0;
  // Height of one line box at this size, before line spacing.
  virtual double line_box(double font_pt) const = 0;
};

// Every code point is `unit * font_pt` wide; lines are font_pt tall.
class UnitMeasurer : public GlyphMeasurer {
 public:
  explicit UnitMeasurer(double unit = 1.0) : unit_(unit) {}
  TextExtent measure(std::string_view text, double font_pt) const override;
  double line_box(double font_pt) const override { return font_pt; }

 private:
  double unit_;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bgr;  // row-major, 3 bytes per pixel

  std::array<std::uint8_t, 3> pixel(int x, int y) const {
    const auto* p = &bgr[(static_cast<std::size_t>(y) * width + x) * 3];
    return {p[0], p[1], p[2]};
  }
};

Image read_png(const std::filesystem::path& path);  // alpha is dropped
void write_png(const Image& image, const std::filesystem::path& path);

// Ordered list of font files. Each code point is drawn with the first font
// whose cmap covers it (the last font otherwise). Sizes in points are
// converted to pixels at `dpi`; the default 144 dpi makes 0.5pt exactly 1px.
class FontStack : public GlyphMeasurer {
 public:
  explicit FontStack(std::vector<std::filesystem::path> fonts, double dpi = 144.0);
  ~FontStack() override;
  FontStack(FontStack&&) noexcept;
  FontStack& operator=(FontStack&&) noexcept;

  // *.ttf / *.otf in the directory, sorted by file name.
  static FontStack from_dir(const std::filesystem::path& dir, double dpi = 144.0);
  // assets/fonts from the source tree.
  static FontStack bundled();

  TextExtent measure(std::string_view text, double font_pt) const override;
  double line_box(double font_pt) const override { return pixel_size(font_pt); }

  int pixel_size(double font_pt) const;
  bool covers(std::size_t font_index, char32_t cp) const;
  std::size_t size() const;

  // Draws already reordered (visual) text with its baseline at `baseline_y`.
  void draw(Image& canvas, std::string_view visual_text, int x, int baseline_y, double font_pt,
            std::array<std::uint8_t, 3> color) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct LayoutConfig {
  double initial_font = 12.0;
  double min_font = 6.0;
  double line_spacing = 1.2;
  double step = 0.5;

  void validate() const;  // InvalidArgument
};

struct TextLayout {
  std::vector<std::string> lines;  // logical order
  double font_size = 0.0;          // points
  double line_height = 0.0;        // baseline-to-baseline, measurer units
  bool fits = false;
};

/// Greedy word wrap at the largest size initial_font - k*step >= min_font whose
/// lines all fit the width and whose stacked height fits the box. When nothing
/// fits, the min_font wrap is returned with fits = false. Throws EmptyBox.
TextLayout wrap_text(std::string_view text, double box_width, double box_height, const GlyphMeasurer& measurer,
                     const LayoutConfig& cfg = {});

/// Clears the box to the colour of its top-left pixel and draws the layout
/// inside it. Pixels outside the box are never written. Throws
/// LayoutDoesNotFit, InvalidBbox, RenderFailure.
void paste_text(Image& image, const BoundingBox& bbox, const TextLayout& layout, const FontStack& fonts);

/// read_png, wrap_text in the box, paste_text, write_png. Returns the layout.
TextLayout compose_file(const std::filesystem::path& input, const std::filesystem::path& output,
                        const BoundingBox& bbox, std::string_view text, const FontStack& fonts,
                        const LayoutConfig& cfg = {});

}  // namespace forge::compose
