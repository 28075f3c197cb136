#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/model.hpp"

namespace forge::techniques {

// ---- MTR: ask with the original question and its English translation ----

struct MtrTemplate {
  // Must contain both placeholders, {original} before {english}.
  std::string text = "Question:\n{original}\n\nQuestion in English:\n{english}";
};

std::string mtr_prompt(std::string_view original_text, std::string_view english_text,
                       const MtrTemplate& tmpl = {});

// ---- CLSP: MTR over several pivot languages, then a vote ----

inline constexpr std::string_view kDefaultPivotOrder[] = {"eng", "spa", "deu", "fra"};

/// Majority over non-N answers, listed in path-priority order (English first).
/// Ties go to the tied answer whose first occurrence comes earliest. All-N gives N.
Choice clsp_vote(std::span<const Choice> answers_in_priority_order);

// ---- Activation steering over exported dumps ----

enum class TokenClass : std::uint8_t { Text = 0, Image = 1 };

struct ActivationDump {
  LanguageTag language;
  std::uint32_t num_layers = 0;
  std::uint32_t num_samples = 0;
  std::uint32_t hidden_dim = 0;
  std::vector<float> values;  // [layer][sample][dim]
  std::optional<std::vector<std::uint8_t>> token_mask;  // one TokenClass per sample

  std::size_t index(std::size_t layer, std::size_t sample, std::size_t dim) const {
    return (layer * num_samples + sample) * hidden_dim + dim;
  }
  float at(std::size_t layer, std::size_t sample, std::size_t dim) const { return values[index(layer, sample, dim)]; }
  float& at(std::size_t layer, std::size_t sample, std::size_t dim) { return values[index(layer, sample, dim)]; }

  // Size and finiteness checks; throws ShapeMismatch / InvalidArgument.
  void validate() const;
};

// Binary layout, little-endian: "ACTV", u32 version (1), u32 num_layers,
// u32 num_samples, u32 hidden_dim, u8 has_token_mask, float32 payload
// [layer][sample][dim], then num_samples u8 token classes if has_token_mask.
void write_dump(const ActivationDump& dump, const std::filesystem::path& path);
ActivationDump read_dump(const std::filesystem::path& path, LanguageTag language = LanguageTag{"und", {}});

struct SteeringVectors {
  std::uint32_t num_layers = 0;
  std::uint32_t hidden_dim = 0;
  std::vector<double> forward;   // z_{o->en}, [layer][dim]
  std::vector<double> backward;  // z_{en->o} = -forward

  std::span<const double> forward_at(std::size_t layer) const {
    return std::span<const double>(forward).subspan(layer * hidden_dim, hidden_dim);
  }
  std::span<const double> backward_at(std::size_t layer) const {
    return std::span<const double>(backward).subspan(layer * hidden_dim, hidden_dim);
  }
};

/// forward[l] = mean_s h_en[l] - mean_s h_o[l], pooled over every sample position.
SteeringVectors compute_steering_vectors(const ActivationDump& dump_o, const ActivationDump& dump_en);

void write_vectors(const SteeringVectors& v, const std::filesystem::path& path);
SteeringVectors read_vectors(const std::filesystem::path& path);

struct SteeringConfig {
  double c = 0.0;
  std::uint32_t forward_start_layer = 0;
  std::uint32_t forward_num_layers = 0;
  std::uint32_t backward_start_layer = 0;
  std::uint32_t backward_num_layers = 0;
  std::uint32_t total_layers = 0;
  bool steer_images = false;

  /// Ranges lie in [0, total_layers), forward precedes backward, c finite.
  void validate() const;

  bool in_forward(std::uint32_t layer) const {
    return layer >= forward_start_layer && layer < forward_start_layer + forward_num_layers;
  }
  bool in_backward(std::uint32_t layer) const {
    return layer >= backward_start_layer && layer < backward_start_layer + backward_num_layers;
  }

  // 36-layer reasoner: 5 layers each way from layers 6 and 21, c = 1/(2N).
  static SteeringConfig preset_36_layers();
  // 28-layer reasoner: forward layer 5 only, backward layer 20 only, c = 0.3.
  static SteeringConfig preset_28_layers();
};

/// h'[l] = h[l] + c * forward[l] inside the forward range, h[l] + c * backward[l]
/// inside the backward range; everything else is copied unchanged. Image tokens
/// are left alone unless cfg.steer_images.
ActivationDump apply_steering(const ActivationDump& dump, const SteeringVectors& vectors, const SteeringConfig& cfg);

}  // namespace forge::techniques
