#include "forge/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include "forge/error.hpp"

namespace forge {

namespace {

[[noreturn]] void malformed(std::size_t line_no, const std::string& field, const std::string& why) {
  throw Error(ErrorCode::MalformedRecord,
              "line " + std::to_string(line_no) + ", field '" + field + "': " + why);
}

const Json& require(const Json& j, const char* field, std::size_t line_no) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) malformed(line_no, field, "missing");
  return *it;
}

std::string require_string(const Json& j, const char* field, std::size_t line_no) {
  const Json& v = require(j, field, line_no);
  if (!v.is_string()) malformed(line_no, field, "expected string");
  return v.get<std::string>();
}

int require_int(const Json& j, const char* field, std::size_t line_no) {
  const Json& v = require(j, field, line_no);
  if (!v.is_number_integer()) malformed(line_no, field, "expected integer");
  return v.get<int>();
}

}  // namespace

Json manifest_line(const ProblemRecord& r, const LanguageTag& lang, Split split) {
  Json j;
  j["id"] = r.id;
  j["year"] = r.year;
  j["level"] = r.level;
  j["number"] = r.number;
  j["lang"] = lang.code;
  j["split"] = std::string(to_string(split));
  j["question_text"] = r.question_text;
  j["options"] = Json::array();
  for (const auto& o : r.options) j["options"].push_back(o);
  j["answer_key"] = std::string(1, to_char(r.answer_key));
  j["image_ref"] = r.image_ref;
  j["bbox"] = Json{{"x", r.bbox.x}, {"y", r.bbox.y}, {"w", r.bbox.width}, {"h", r.bbox.height}};
  j["has_figure"] = r.has_figure;
  if (r.category) j["category"] = std::string(to_string(*r.category));
  return j;
}

ParsedLine parse_manifest_line(const Json& j, std::size_t line_no) {
  if (!j.is_object()) malformed(line_no, "<record>", "expected a JSON object");
  ParsedLine out;
  ProblemRecord& r = out.record;
  r.id = require_string(j, "id", line_no);
  if (r.id.empty()) malformed(line_no, "id", "empty");
  r.year = require_int(j, "year", line_no);
  r.level = require_int(j, "level", line_no);
  if (r.level < 0 || r.level > 7) malformed(line_no, "level", "must be in [0,7]");
  r.number = require_int(j, "number", line_no);
  if (r.number < 1) malformed(line_no, "number", "must be >= 1");

  out.lang = require_string(j, "lang", line_no);
  if (!is_valid_language_code(out.lang)) malformed(line_no, "lang", "invalid language code");
  const auto split = split_from_string(require_string(j, "split", line_no));
  if (!split) malformed(line_no, "split", "expected 'standard' or 'high_quality'");
  out.split = *split;

  r.question_text = require_string(j, "question_text", line_no);
  const Json& options = require(j, "options", line_no);
  if (!options.is_array() || options.size() != 5) malformed(line_no, "options", "expected 5 strings");
  for (std::size_t i = 0; i < 5; ++i) {
    if (!options[i].is_string()) malformed(line_no, "options", "expected 5 strings");
    r.options[i] = options[i].get<std::string>();
  }
  const std::string key = require_string(j, "answer_key", line_no);
  const auto choice = key.size() == 1 ? choice_from_char(key[0]) : std::nullopt;
  if (!choice || *choice == Choice::N) malformed(line_no, "answer_key", "expected one of A-E");
  r.answer_key = *choice;

  r.image_ref = require_string(j, "image_ref", line_no);
  const Json& bbox = require(j, "bbox", line_no);
  if (!bbox.is_object()) malformed(line_no, "bbox", "expected object {x,y,w,h}");
  r.bbox.x = require_int(bbox, "x", line_no);
  r.bbox.y = require_int(bbox, "y", line_no);
  r.bbox.width = require_int(bbox, "w", line_no);
  r.bbox.height = require_int(bbox, "h", line_no);
  if (r.bbox.x < 0 || r.bbox.y < 0 || r.bbox.width <= 0 || r.bbox.height <= 0) {
    malformed(line_no, "bbox", "must have x,y >= 0 and w,h > 0");
  }
  const Json& fig = require(j, "has_figure", line_no);
  if (!fig.is_boolean()) malformed(line_no, "has_figure", "expected boolean");
  r.has_figure = fig.get<bool>();

  if (auto it = j.find("category"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) malformed(line_no, "category", "expected string");
    r.category = category_from_string(it->get<std::string>());
    if (!r.category) malformed(line_no, "category", "unknown category '" + it->get<std::string>() + "'");
  }
  return out;
}

ParsedLine parse_manifest_line(const std::string& line, std::size_t line_no) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    malformed(line_no, "<record>", e.what());
  }
  return parse_manifest_line(j, line_no);
}

namespace {

template <typename OnLine>
void for_each_line(const std::filesystem::path& path, OnLine&& on_line) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    on_line(parse_manifest_line(line, line_no), line_no);
  }
}

}  // namespace

DatasetManifest read_manifest(const std::filesystem::path& path, std::optional<LanguageTag> expected_lang,
                              std::optional<Split> expected_split) {
  DatasetManifest m;
  if (expected_lang) m.language = *expected_lang;
  if (expected_split) m.split = *expected_split;
  bool first = true;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](ParsedLine p, std::size_t line_no) {
    if (first && !expected_lang) m.language = LanguageTag::of(p.lang);
    if (first && !expected_split) m.split = p.split;
    first = false;
    if (p.lang != m.language.code) malformed(line_no, "lang", "differs from manifest language " + m.language.code);
    if (p.split != m.split) malformed(line_no, "split", "differs from manifest split");
    if (!seen.insert(p.record.id).second) {
      throw Error(ErrorCode::DuplicateId, "line " + std::to_string(line_no) + ": id '" + p.record.id + "'");
    }
    m.entries.push_back(std::move(p.record));
  });
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::unordered_set<std::string> seen;
  for (const auto& e : manifest.entries) {
    validate(e);
    if (!seen.insert(e.id).second) throw Error(ErrorCode::DuplicateId, "id '" + e.id + "'");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  for (const auto& e : manifest.entries) {
    out << manifest_line(e, manifest.language, manifest.split).dump() << '\n';
  }
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::vector<ProblemRecord> read_problem_pool(const std::filesystem::path& path) {
  std::vector<ProblemRecord> pool;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](ParsedLine p, std::size_t line_no) {
    if (!seen.insert(p.record.id).second) {
      throw Error(ErrorCode::DuplicateId, "line " + std::to_string(line_no) + ": id '" + p.record.id + "'");
    }
    pool.push_back(std::move(p.record));
  });
  return pool;
}

}  // namespace forge
