#include "forge/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/ubidi.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <memory>
#include <stdexcept>

namespace forge::unicode {

std::u32string to_code_points(std::string_view utf8) {
  const icu::UnicodeString s =
      icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  std::u32string out;
  out.reserve(static_cast<size_t>(s.length()));
  for (int32_t i = 0; i < s.length();) {
    const UChar32 cp = s.char32At(i);
    out.push_back(static_cast<char32_t>(cp));
    i += U16_LENGTH(cp);
  }
  return out;
}

std::string to_utf8(std::u32string_view code_points) {
  icu::UnicodeString s;
  for (char32_t cp : code_points) s.append(static_cast<UChar32>(cp));
  std::string out;
  s.toUTF8String(out);
  return out;
}

std::string nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  const icu::UnicodeString src =
      icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::UnicodeString dst = normalizer->normalize(src, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

bool is_space(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0; }

std::string collapse_whitespace(std::string_view utf8) {
  const std::u32string cps = to_code_points(utf8);
  std::u32string out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(cp);
  }
  return to_utf8(out);
}

std::string normalize(std::string_view utf8) { return collapse_whitespace(nfc(utf8)); }

std::vector<std::string> split_whitespace(std::string_view utf8) {
  std::vector<std::string> tokens;
  std::u32string current;
  for (char32_t cp : to_code_points(utf8)) {
    if (is_space(cp)) {
      if (!current.empty()) tokens.push_back(to_utf8(current));
      current.clear();
    } else {
      current.push_back(cp);
    }
  }
  if (!current.empty()) tokens.push_back(to_utf8(current));
  return tokens;
}

std::string visual_order(std::string_view utf8) {
  const icu::UnicodeString src =
      icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  if (src.isEmpty()) return {};
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<UBiDi, decltype(&ubidi_close)> bidi(ubidi_open(), &ubidi_close);
  ubidi_setPara(bidi.get(), src.getBuffer(), src.length(), UBIDI_DEFAULT_LTR, nullptr, &status);
  if (U_FAILURE(status)) return std::string(utf8);
  if (ubidi_getDirection(bidi.get()) == UBIDI_LTR) return std::string(utf8);

  icu::UnicodeString dst;
  UChar* buffer = dst.getBuffer(src.length() * 2 + 1);
  const int32_t n = ubidi_writeReordered(bidi.get(), buffer, src.length() * 2 + 1,
                                         UBIDI_DO_MIRRORING | UBIDI_REMOVE_BIDI_CONTROLS, &status);
  dst.releaseBuffer(U_SUCCESS(status) ? n : 0);
  if (U_FAILURE(status)) return std::string(utf8);
  std::string out;
  dst.toUTF8String(out);
  return out;
}

bool base_direction_rtl(std::string_view utf8) {
  const icu::UnicodeString src =
      icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  return ubidi_getBaseDirection(src.getBuffer(), src.length()) == UBIDI_RTL;
}

}  // namespace forge::unicode
