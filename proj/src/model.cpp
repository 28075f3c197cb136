#include "forge/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "forge/error.hpp"

namespace forge {

std::string_view to_string(ResourceClass rc) {
  switch (rc) {
    case ResourceClass::High: return "High";
    case ResourceClass::Mid: return "Mid";
    case ResourceClass::Low: return "Low";
  }
  return "Low";
}

ResourceClass classify_resource(double presence_percent) {
  if (!(presence_percent >= 0.0)) {
    throw Error(ErrorCode::NegativePresence, "presence must be >= 0, got " + std::to_string(presence_percent));
  }
  if (presence_percent >= 1.0) return ResourceClass::High;
  if (presence_percent >= 0.1) return ResourceClass::Mid;
  return ResourceClass::Low;
}

std::optional<double> known_presence(std::string_view code) {
  static const std::map<std::string, double, std::less<>> table = {
      {"eng", 4.92e1},  {"spa", 6.00e0},  {"deu", 5.90e0},  {"fra", 4.40e0},
      {"tur", 1.70e0},  {"zho", 1.1e0},   {"vie", 1.03e0},  {"ind", 9.82e-1},
      {"lit", 1.73e-1}, {"cat", 1.02e-1}, {"est", 1.01e-1}, {"afr", 2.50e-3},
      {"swh", 1.70e-3}, {"mlt", 4.30e-4}, {"lin", 1.60e-5}, {"tso", 6.00e-6},
  };
  if (auto it = table.find(code); it != table.end()) return it->second;
  return std::nullopt;
}

bool is_valid_language_code(std::string_view code) {
  return !code.empty() &&
         std::all_of(code.begin(), code.end(), [](char c) { return (c >= 'a' && c <= 'z') || c == '_'; });
}

LanguageTag LanguageTag::of(std::string_view code) {
  if (!is_valid_language_code(code)) {
    throw Error(ErrorCode::InvalidArgument, "language code must be non-empty lowercase ASCII: '" +
                                                std::string(code) + "'");
  }
  LanguageTag tag{std::string(code), std::nullopt};
  if (auto p = known_presence(code)) tag.resource_class = classify_resource(*p);
  return tag;
}

LanguageTag LanguageTag::of(std::string_view code, double presence_percent) {
  LanguageTag tag = of(code);
  tag.resource_class = classify_resource(presence_percent);
  return tag;
}

char to_char(Choice c) { return static_cast<char>(c); }

std::optional<Choice> choice_from_char(char c) {
  switch (c) {
    case 'A': return Choice::A;
    case 'B': return Choice::B;
    case 'C': return Choice::C;
    case 'D': return Choice::D;
    case 'E': return Choice::E;
    case 'N': return Choice::N;
    default: return std::nullopt;
  }
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Algebra: return "algebra";
    case Category::Arithmetic: return "arithmetic";
    case Category::CombinatoricsProbability: return "combinatorics-probability";
    case Category::Geometry: return "geometry";
    case Category::Logic: return "logic";
  }
  return "logic";
}

std::optional<Category> category_from_string(std::string_view s) {
  for (Category c : {Category::Algebra, Category::Arithmetic, Category::CombinatoricsProbability,
                     Category::Geometry, Category::Logic}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Split s) { return s == Split::Standard ? "standard" : "high_quality"; }

std::optional<Split> split_from_string(std::string_view s) {
  if (s == "standard") return Split::Standard;
  if (s == "high_quality") return Split::HighQuality;
  return std::nullopt;
}

void validate(const ProblemRecord& r) {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::MalformedRecord, "record '" + r.id + "' field " + field + ": " + why);
  };
  if (r.id.empty()) fail("id", "empty");
  if (r.level < 0 || r.level > 7) fail("level", "must be in [0,7]");
  if (r.number < 1) fail("number", "must be >= 1");
  if (r.answer_key == Choice::N) fail("answer_key", "must be one of A-E");
  const BoundingBox& b = r.bbox;
  if (b.x < 0 || b.y < 0 || b.width <= 0 || b.height <= 0) fail("bbox", "must have x,y >= 0 and w,h > 0");
}

void validate(const TranslationRecord& r) {
  if (r.source_text.empty()) {
    throw Error(ErrorCode::MalformedRecord, "translation of '" + r.problem_id + "': empty source_text");
  }
  if (r.source_lang == r.target_lang) {
    throw Error(ErrorCode::MalformedRecord,
                "translation of '" + r.problem_id + "': target_lang equals source_lang");
  }
}

std::vector<std::string> split_containment_violations(const DatasetManifest& standard,
                                                      const DatasetManifest& high_quality) {
  std::unordered_set<std::string> ids;
  for (const auto& e : standard.entries) ids.insert(e.id);
  std::vector<std::string> missing;
  for (const auto& e : high_quality.entries) {
    if (!ids.contains(e.id)) missing.push_back(e.id);
  }
  return missing;
}

}  // namespace forge
