#include "forge/techniques.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "forge/error.hpp"

namespace forge::techniques {

std::string mtr_prompt(std::string_view original_text, std::string_view english_text, const MtrTemplate& tmpl) {
  if (original_text.empty() || english_text.empty()) {
    throw Error(ErrorCode::EmptyText, "MTR needs both the original and the English text");
  }
  constexpr std::string_view kOriginal = "{original}";
  constexpr std::string_view kEnglish = "{english}";
  const auto o = tmpl.text.find(kOriginal);
  const auto e = tmpl.text.find(kEnglish);
  if (o == std::string::npos || e == std::string::npos || e < o) {
    throw Error(ErrorCode::InvalidArgument, "MTR template needs {original} followed by {english}");
  }
  std::string out;
  out.reserve(tmpl.text.size() + original_text.size() + english_text.size());
  out.append(tmpl.text, 0, o);
  out.append(original_text);
  out.append(tmpl.text, o + kOriginal.size(), e - o - kOriginal.size());
  out.append(english_text);
  out.append(tmpl.text, e + kEnglish.size());
  return out;
}

Choice clsp_vote(std::span<const Choice> answers) {
  std::map<Choice, int> counts;
  for (Choice a : answers) {
    if (a != Choice::N) ++counts[a];
  }
  if (counts.empty()) return Choice::N;
  int best_count = 0;
  for (const auto& [choice, n] : counts) best_count = std::max(best_count, n);
  for (Choice a : answers) {
    if (a != Choice::N && counts[a] == best_count) return a;
  }
  return Choice::N;
}

// ---- binary helpers ----

namespace {

constexpr std::uint32_t kDumpVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                 static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b.data(), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v & 0xFFFFFFFFu));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw Error(ErrorCode::IoFailure, "truncated " + path.string());
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in, const std::filesystem::path& path) {
  const std::uint64_t lo = get_u32(in, path);
  const std::uint64_t hi = get_u32(in, path);
  return lo | (hi << 32);
}

void check_magic(std::istream& in, std::string_view magic, const std::filesystem::path& path) {
  std::array<char, 4> m{};
  if (!in.read(m.data(), 4) || std::string_view(m.data(), 4) != magic) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": bad magic, expected " + std::string(magic));
  }
}

}  // namespace

void ActivationDump::validate() const {
  const std::size_t expected = static_cast<std::size_t>(num_layers) * num_samples * hidden_dim;
  if (values.size() != expected) {
    throw Error(ErrorCode::ShapeMismatch, "tensor has " + std::to_string(values.size()) + " values, expected " +
                                              std::to_string(expected));
  }
  if (token_mask && token_mask->size() != num_samples) {
    throw Error(ErrorCode::ShapeMismatch, "token mask length differs from num_samples");
  }
  for (float v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "activation dump contains non-finite values");
  }
}

void write_dump(const ActivationDump& dump, const std::filesystem::path& path) {
  dump.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write("ACTV", 4);
  put_u32(out, kDumpVersion);
  put_u32(out, dump.num_layers);
  put_u32(out, dump.num_samples);
  put_u32(out, dump.hidden_dim);
  out.put(dump.token_mask ? 1 : 0);
  for (float v : dump.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  if (dump.token_mask) out.write(reinterpret_cast<const char*>(dump.token_mask->data()), dump.num_samples);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

ActivationDump read_dump(const std::filesystem::path& path, LanguageTag language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  check_magic(in, "ACTV", path);
  const std::uint32_t version = get_u32(in, path);
  if (version != kDumpVersion) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": unsupported dump version " + std::to_string(version));
  }
  ActivationDump d;
  d.language = std::move(language);
  d.num_layers = get_u32(in, path);
  d.num_samples = get_u32(in, path);
  d.hidden_dim = get_u32(in, path);
  const int has_mask = in.get();
  if (has_mask != 0 && has_mask != 1) throw Error(ErrorCode::MalformedRecord, path.string() + ": bad mask flag");
  const std::size_t count = static_cast<std::size_t>(d.num_layers) * d.num_samples * d.hidden_dim;
  d.values.resize(count);
  for (auto& v : d.values) v = std::bit_cast<float>(get_u32(in, path));
  if (has_mask == 1) {
    std::vector<std::uint8_t> mask(d.num_samples);
    if (!in.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(mask.size()))) {
      throw Error(ErrorCode::IoFailure, "truncated token mask in " + path.string());
    }
    d.token_mask = std::move(mask);
  }
  d.validate();
  return d;
}

SteeringVectors compute_steering_vectors(const ActivationDump& dump_o, const ActivationDump& dump_en) {
  dump_o.validate();
  dump_en.validate();
  if (dump_o.num_layers != dump_en.num_layers || dump_o.hidden_dim != dump_en.hidden_dim) {
    throw Error(ErrorCode::ShapeMismatch, "dumps differ in num_layers or hidden_dim");
  }
  if (dump_o.num_samples == 0 || dump_en.num_samples == 0) {
    throw Error(ErrorCode::ShapeMismatch, "dumps need at least one sample");
  }
  SteeringVectors v;
  v.num_layers = dump_o.num_layers;
  v.hidden_dim = dump_o.hidden_dim;
  v.forward.assign(static_cast<std::size_t>(v.num_layers) * v.hidden_dim, 0.0);

  auto layer_mean = [](const ActivationDump& d, std::size_t layer, std::size_t dim) {
    double sum = 0.0;
    for (std::size_t s = 0; s < d.num_samples; ++s) sum += d.at(layer, s, dim);
    return sum / static_cast<double>(d.num_samples);
  };
  for (std::size_t l = 0; l < v.num_layers; ++l) {
    for (std::size_t k = 0; k < v.hidden_dim; ++k) {
      v.forward[l * v.hidden_dim + k] = layer_mean(dump_en, l, k) - layer_mean(dump_o, l, k);
    }
  }
  v.backward.resize(v.forward.size());
  std::transform(v.forward.begin(), v.forward.end(), v.backward.begin(), [](double z) { return -z; });
  return v;
}

void write_vectors(const SteeringVectors& v, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write("ZVEC", 4);
  put_u32(out, kDumpVersion);
  put_u32(out, v.num_layers);
  put_u32(out, v.hidden_dim);
  for (double z : v.forward) put_u64(out, std::bit_cast<std::uint64_t>(z));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

SteeringVectors read_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  check_magic(in, "ZVEC", path);
  if (get_u32(in, path) != kDumpVersion) throw Error(ErrorCode::MalformedRecord, "unsupported vector file version");
  SteeringVectors v;
  v.num_layers = get_u32(in, path);
  v.hidden_dim = get_u32(in, path);
  v.forward.resize(static_cast<std::size_t>(v.num_layers) * v.hidden_dim);
  for (auto& z : v.forward) z = std::bit_cast<double>(get_u64(in, path));
  v.backward.resize(v.forward.size());
  std::transform(v.forward.begin(), v.forward.end(), v.backward.begin(), [](double z) { return -z; });
  return v;
}

void SteeringConfig::validate() const {
  if (!std::isfinite(c)) throw Error(ErrorCode::InvalidRange, "c must be finite");
  auto check_range = [&](std::uint32_t start, std::uint32_t num, const char* which) {
    if (num == 0) return;
    if (start + num > total_layers) {
      throw Error(ErrorCode::InvalidRange, std::string(which) + " range exceeds total_layers " +
                                               std::to_string(total_layers));
    }
  };
  check_range(forward_start_layer, forward_num_layers, "forward");
  check_range(backward_start_layer, backward_num_layers, "backward");
  if (forward_num_layers > 0 && backward_num_layers > 0 &&
      forward_start_layer + forward_num_layers > backward_start_layer) {
    throw Error(ErrorCode::InvalidRange, "forward range must end before the backward range starts");
  }
}

SteeringConfig SteeringConfig::preset_36_layers() {
  SteeringConfig cfg;
  cfg.total_layers = 36;
  cfg.forward_start_layer = 6;
  cfg.forward_num_layers = 5;
  cfg.backward_start_layer = 21;
  cfg.backward_num_layers = 5;
  cfg.c = 1.0 / (2.0 * cfg.forward_num_layers);
  return cfg;
}

SteeringConfig SteeringConfig::preset_28_layers() {
  SteeringConfig cfg;
  cfg.total_layers = 28;
  cfg.forward_start_layer = 5;
  cfg.forward_num_layers = 1;
  cfg.backward_start_layer = 20;
  cfg.backward_num_layers = 1;
  cfg.c = 0.3;
  return cfg;
}

ActivationDump apply_steering(const ActivationDump& dump, const SteeringVectors& vectors, const SteeringConfig& cfg) {
  dump.validate();
  cfg.validate();
  if (vectors.num_layers != dump.num_layers || vectors.hidden_dim != dump.hidden_dim) {
    throw Error(ErrorCode::ShapeMismatch, "steering vectors do not match the dump shape");
  }
  if (cfg.total_layers != dump.num_layers) {
    throw Error(ErrorCode::InvalidRange, "config total_layers " + std::to_string(cfg.total_layers) +
                                             " differs from dump num_layers " + std::to_string(dump.num_layers));
  }
  ActivationDump out = dump;
  for (std::uint32_t l = 0; l < dump.num_layers; ++l) {
    std::span<const double> z;
    if (cfg.in_forward(l)) {
      z = vectors.forward_at(l);
    } else if (cfg.in_backward(l)) {
      z = vectors.backward_at(l);
    } else {
      continue;
    }
    for (std::size_t s = 0; s < dump.num_samples; ++s) {
      if (!cfg.steer_images && dump.token_mask &&
          (*dump.token_mask)[s] == static_cast<std::uint8_t>(TokenClass::Image)) {
        continue;
      }
      for (std::size_t k = 0; k < dump.hidden_dim; ++k) {
        out.at(l, s, k) = static_cast<float>(static_cast<double>(dump.at(l, s, k)) + cfg.c * z[k]);
      }
    }
  }
  return out;
}

}  // namespace forge::techniques
