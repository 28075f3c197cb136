#include "forge/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "forge/error.hpp"

namespace forge::config {

namespace {

class TomlParser {
 public:
  explicit TomlParser(std::string_view s) : s_(s) {}

  Json parse() {
    Json root = Json::object();
    Json* table = &root;
    for (;;) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        if (!eof() && peek() == '[') fail("arrays of tables are not supported");
        skip_ws();
        const auto path = key_path();
        skip_ws();
        expect(']');
        end_of_line();
        table = &root;
        for (const auto& k : path) {
          Json& next = (*table)[k];
          if (next.is_null()) next = Json::object();
          if (!next.is_object()) fail("'" + k + "' is not a table");
          table = &next;
        }
        if (!defined_tables_.insert(joined(path)).second) fail("table [" + joined(path) + "] defined twice");
        continue;
      }
      key_value(*table);
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_) + ": " + msg);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }
  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (!eof() && peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }
  bool newline() {
    if (!eof() && peek() == '\r' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '\n') ++pos_;
    if (!eof() && peek() == '\n') {
      ++pos_;
      ++line_;
      return true;
    }
    return false;
  }
  void skip_blank_lines() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (!newline()) return;
    }
  }
  // whitespace, comments and newlines inside arrays
  void skip_array_space() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (!newline()) return;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (!eof() && !newline()) fail("unexpected text after value");
  }

  static std::string joined(const std::vector<std::string>& p) {
    std::string out;
    for (const auto& k : p) out += (out.empty() ? "" : ".") + k;
    return out;
  }

  std::string simple_key() {
    if (eof()) fail("expected a key");
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    const auto start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> path{simple_key()};
    for (;;) {
      skip_ws();
      if (eof() || peek() != '.') return path;
      ++pos_;
      skip_ws();
      path.push_back(simple_key());
    }
  }

  void key_value(Json& table) {
    const auto path = key_path();
    skip_ws();
    expect('=');
    skip_ws();
    Json* target = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      Json& next = (*target)[path[i]];
      if (next.is_null()) next = Json::object();
      if (!next.is_object()) fail("'" + path[i] + "' is not a table");
      target = &next;
    }
    if (target->contains(path.back())) fail("duplicate key '" + joined(path) + "'");
    (*target)[path.back()] = value();
  }

  Json value() {
    if (eof()) fail("expected a value");
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return number();
  }

  Json array() {
    expect('[');
    Json arr = Json::array();
    for (;;) {
      skip_array_space();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(value());
      skip_array_space();
      if (!eof() && peek() == ',') {
        ++pos_;
        continue;
      }
      skip_array_space();
      expect(']');
      return arr;
    }
  }

  Json inline_table() {
    expect('{');
    Json t = Json::object();
    skip_ws();
    if (!eof() && peek() == '}') {
      ++pos_;
      return t;
    }
    for (;;) {
      skip_ws();
      key_value(t);
      skip_ws();
      if (!eof() && peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      return t;
    }
  }

  Json number() {
    const auto start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_'))
      ++pos_;
    std::string tok;
    for (char ch : s_.substr(start, pos_ - start))
      if (ch != '_') tok += ch;
    if (tok.empty()) fail("expected a value");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos && tok.rfind("0x", 0) != 0;
    try {
      std::size_t used = 0;
      if (is_float) {
        const double d = std::stod(tok, &used);
        if (used == tok.size() && std::isfinite(d)) return d;
      } else {
        const long long v = std::stoll(tok, &used, 10);
        if (used == tok.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("bad value '" + tok + "'");
  }

  void append_utf8(std::string& out, char32_t cp) {
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) fail("bad unicode escape");
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) fail("unterminated string");
      const char e = s_[pos_++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case 'u':
        case 'U': {
          const std::size_t n = e == 'u' ? 4 : 8;
          if (pos_ + n > s_.size()) fail("short unicode escape");
          char32_t cp = 0;
          for (std::size_t i = 0; i < n; ++i) {
            const char h = s_[pos_++];
            if (!std::isxdigit(static_cast<unsigned char>(h))) fail("bad unicode escape");
            cp = cp * 16 + static_cast<char32_t>(std::isdigit(static_cast<unsigned char>(h)) ? h - '0'
                                                                                            : (std::tolower(h) - 'a' + 10));
          }
          append_utf8(out, cp);
          break;
        }
        default:
          fail(std::string("unknown escape \\") + e);
      }
    }
  }

  std::string literal_string() {
    expect('\'');
    const auto end = s_.find_first_of("'\n", pos_);
    if (end == std::string_view::npos || s_[end] != '\'') fail("unterminated string");
    std::string out(s_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::set<std::string> defined_tables_;
};

}  // namespace

Json parse_toml(std::string_view text) { return TomlParser(text).parse(); }

Json load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (path.extension() == ".json") {
    try {
      Json j = Json::parse(ss.str());
      if (!j.is_object()) throw Error(ErrorCode::ConfigError, path.string() + ": top level must be an object");
      return j;
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
  }
  try {
    return parse_toml(ss.str());
  } catch (const Error& e) {
    const std::string what = e.what();
    const auto prefix = std::string(to_string(e.code())) + ": ";
    throw Error(ErrorCode::ConfigError,
                path.string() + ": " + (what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what));
  }
}

}  // namespace forge::config
