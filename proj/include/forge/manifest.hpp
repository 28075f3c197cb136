#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "forge/model.hpp"

namespace forge {

using Json = nlohmann::ordered_json;

// One manifest line. Field names and order are fixed:
//   id, year, level, number, lang, split, question_text, options[5], answer_key,
//   image_ref, bbox{x,y,w,h}, has_figure, category?
Json manifest_line(const ProblemRecord& record, const LanguageTag& lang, Split split);

struct ParsedLine {
  ProblemRecord record;
  std::string lang;
  Split split = Split::Standard;
};

// Throws Error(MalformedRecord) with the offending field; line_no is only used in messages.
ParsedLine parse_manifest_line(const Json& j, std::size_t line_no = 0);
ParsedLine parse_manifest_line(const std::string& line, std::size_t line_no = 0);

// Every line must carry the same lang/split. An empty file yields a manifest with an
// empty language code unless `expected_lang` is given.
DatasetManifest read_manifest(const std::filesystem::path& path,
                              std::optional<LanguageTag> expected_lang = std::nullopt,
                              std::optional<Split> expected_split = std::nullopt);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Problem pools use the same line schema; lang/split are carried per line and not enforced.
std::vector<ProblemRecord> read_problem_pool(const std::filesystem::path& path);

}  // namespace forge
