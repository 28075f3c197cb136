#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

enum class ResourceClass { High, Mid, Low };

std::string_view to_string(ResourceClass rc);

// High iff presence in [1,100], Mid iff in [0.1,1), Low iff in [0,0.1).
ResourceClass classify_resource(double presence_percent);

// Web-presence share (percent) for the languages with published figures.
std::optional<double> known_presence(std::string_view code);

struct LanguageTag {
  std::string code;
  std::optional<ResourceClass> resource_class;

  // Validates the code and fills resource_class from known_presence when available.
  static LanguageTag of(std::string_view code);
  static LanguageTag of(std::string_view code, double presence_percent);

  friend bool operator==(const LanguageTag& a, const LanguageTag& b) { return a.code == b.code; }
};

bool is_valid_language_code(std::string_view code);

// Option labels are Latin letters regardless of script; N means "no answer".
enum class Choice : char { A = 'A', B = 'B', C = 'C', D = 'D', E = 'E', N = 'N' };

inline constexpr std::array<Choice, 5> kOptionLabels = {Choice::A, Choice::B, Choice::C, Choice::D,
                                                        Choice::E};

char to_char(Choice c);
std::optional<Choice> choice_from_char(char c);

enum class Category { Algebra, Arithmetic, CombinatoricsProbability, Geometry, Logic };

std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view s);

struct BoundingBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool fits_within(int image_width, int image_height) const {
    return x >= 0 && y >= 0 && width > 0 && height > 0 && x + width <= image_width &&
           y + height <= image_height;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct ProblemRecord {
  std::string id;
  int year = 0;
  int level = 0;
  int number = 1;
  std::string question_text;
  std::array<std::string, 5> options;
  Choice answer_key = Choice::A;
  std::string image_ref;
  BoundingBox bbox;
  bool has_figure = false;
  std::optional<Category> category;

  friend bool operator==(const ProblemRecord&, const ProblemRecord&) = default;
};

// Throws Error(MalformedRecord) naming the first violated field.
void validate(const ProblemRecord& record);

struct TranslationRecord {
  std::string problem_id;
  LanguageTag source_lang;
  LanguageTag target_lang;
  std::string source_text;
  std::string target_text;
  std::string translator_id;

  friend bool operator==(const TranslationRecord&, const TranslationRecord&) = default;
};

void validate(const TranslationRecord& record);

enum class Split { Standard, HighQuality };

std::string_view to_string(Split s);
std::optional<Split> split_from_string(std::string_view s);

struct DatasetManifest {
  LanguageTag language;
  Split split = Split::Standard;
  std::vector<ProblemRecord> entries;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// Ids present in `high_quality` but missing from `standard` (empty when the split invariant holds).
std::vector<std::string> split_containment_violations(const DatasetManifest& standard,
                                                      const DatasetManifest& high_quality);

}  // namespace forge
