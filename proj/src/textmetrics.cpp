#include "forge/textmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "forge/error.hpp"
#include "forge/unicode.hpp"

namespace forge::textmetrics {

namespace {

using Counts = std::unordered_map<std::u32string, std::size_t>;

struct OrderStats {
  std::size_t hyp_total = 0;
  std::size_t ref_total = 0;
  std::size_t matched = 0;
};

bool is_ascii_punct(char32_t c) {
  return (c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') || (c >= U'[' && c <= U'`') ||
         (c >= U'{' && c <= U'~');
}

Counts char_ngrams(std::u32string_view s, std::size_t n) {
  Counts counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[std::u32string(s.substr(i, n))];
  return counts;
}

Counts word_ngrams(const std::vector<std::u32string>& tokens, std::size_t n) {
  Counts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::u32string key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key.push_back(U' ');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

OrderStats compare(const Counts& hyp, const Counts& ref) {
  OrderStats s;
  for (const auto& [gram, c] : hyp) {
    s.hyp_total += c;
    if (auto it = ref.find(gram); it != ref.end()) s.matched += std::min(c, it->second);
  }
  for (const auto& [gram, c] : ref) s.ref_total += c;
  return s;
}

std::vector<std::u32string> whitespace_tokens(std::string_view text) {
  std::vector<std::u32string> tokens;
  std::u32string current;
  for (char32_t cp : unicode::to_code_points(text)) {
    if (unicode::is_space(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(cp);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t clipped_overlap(const std::vector<std::u32string>& hyp, const std::vector<std::u32string>& ref,
                            std::size_t n) {
  return compare(word_ngrams(hyp, n), word_ngrams(ref, n)).matched;
}

std::u32string chrf_char_view(std::string_view text, bool strip) {
  std::u32string cps = unicode::to_code_points(unicode::normalize(text));
  if (strip) std::erase_if(cps, [](char32_t c) { return c == U' '; });
  return cps;
}

}  // namespace

void ChrfParams::validate() const {
  if (char_ngram_max < 1) throw Error(ErrorCode::InvalidArgument, "char_ngram_max must be >= 1");
  if (word_ngram_max < 0) throw Error(ErrorCode::InvalidArgument, "word_ngram_max must be >= 0");
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be > 0");
}

std::vector<std::u32string> chrf_word_tokens(std::u32string_view text) {
  std::vector<std::u32string> out;
  for (auto& w : whitespace_tokens(unicode::to_utf8(text))) {
    if (w.size() > 1 && is_ascii_punct(w.back())) {
      const char32_t p = w.back();
      w.pop_back();
      out.push_back(std::move(w));
      out.emplace_back(1, p);
    } else if (w.size() > 1 && is_ascii_punct(w.front())) {
      out.emplace_back(1, w.front());
      out.push_back(w.substr(1));
    } else {
      out.push_back(std::move(w));
    }
  }
  return out;
}

MetricScore chrf_pp(std::string_view reference, std::string_view hypothesis, const ChrfParams& params) {
  params.validate();
  const std::u32string ref = chrf_char_view(reference, params.strip_whitespace);
  const std::u32string hyp = chrf_char_view(hypothesis, params.strip_whitespace);
  MetricScore score{0.0, "chrf++", hyp.size(), ref.size()};
  if (ref.empty() && hyp.empty()) {
    score.value = 1.0;
    return score;
  }

  double precision_sum = 0.0;
  double recall_sum = 0.0;
  int effective_orders = 0;
  auto accumulate = [&](const OrderStats& s) {
    if (s.hyp_total == 0 || s.ref_total == 0) return;
    precision_sum += static_cast<double>(s.matched) / static_cast<double>(s.hyp_total);
    recall_sum += static_cast<double>(s.matched) / static_cast<double>(s.ref_total);
    ++effective_orders;
  };

  for (int n = 1; n <= params.char_ngram_max; ++n) {
    accumulate(compare(char_ngrams(hyp, static_cast<std::size_t>(n)), char_ngrams(ref, static_cast<std::size_t>(n))));
  }
  if (params.word_ngram_max > 0) {
    // Word tokens always come from the whitespace-collapsed text.
    const auto hyp_words = chrf_word_tokens(unicode::to_code_points(unicode::normalize(hypothesis)));
    const auto ref_words = chrf_word_tokens(unicode::to_code_points(unicode::normalize(reference)));
    for (int n = 1; n <= params.word_ngram_max; ++n) {
      accumulate(compare(word_ngrams(hyp_words, static_cast<std::size_t>(n)),
                         word_ngrams(ref_words, static_cast<std::size_t>(n))));
    }
  }
  if (effective_orders == 0) return score;

  const double p = precision_sum / effective_orders;
  const double r = recall_sum / effective_orders;
  if (p + r <= 0.0) return score;
  const double b2 = params.beta * params.beta;
  score.value = std::clamp((1.0 + b2) * p * r / (b2 * p + r), 0.0, 1.0);
  return score;
}

MetricScore bleu(std::string_view reference, std::string_view hypothesis, int max_order) {
  if (max_order < 1) throw Error(ErrorCode::InvalidArgument, "max_order must be >= 1");
  const auto ref = whitespace_tokens(reference);
  const auto hyp = whitespace_tokens(hypothesis);
  MetricScore score{0.0, "bleu", hyp.size(), ref.size()};
  if (ref.empty() && hyp.empty()) {
    score.value = 1.0;
    return score;
  }
  if (ref.empty() || hyp.empty()) return score;

  const std::size_t order = std::min(static_cast<std::size_t>(max_order), hyp.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= order; ++n) {
    const std::size_t matched = clipped_overlap(hyp, ref, n);
    if (matched == 0) return score;
    log_sum += std::log(static_cast<double>(matched) / static_cast<double>(hyp.size() - n + 1));
  }
  const double c = static_cast<double>(hyp.size());
  const double r = static_cast<double>(ref.size());
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  score.value = std::clamp(brevity * std::exp(log_sum / static_cast<double>(order)), 0.0, 1.0);
  return score;
}

RougeScore rouge1(std::string_view reference, std::string_view hypothesis) {
  const auto ref = whitespace_tokens(reference);
  const auto hyp = whitespace_tokens(hypothesis);
  if (ref.empty() && hyp.empty()) return {1.0, 1.0, 1.0};
  if (ref.empty() || hyp.empty()) return {};
  const double overlap = static_cast<double>(clipped_overlap(hyp, ref, 1));
  RougeScore s;
  s.precision = overlap / static_cast<double>(hyp.size());
  s.recall = overlap / static_cast<double>(ref.size());
  s.f1 = overlap == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

TrigramSet trigram_set(std::string_view text) {
  const std::u32string cps = unicode::to_code_points(unicode::normalize(text));
  TrigramSet set;
  if (cps.empty()) return set;
  if (cps.size() < 3) {
    set.push_back(cps);
    return set;
  }
  for (std::size_t i = 0; i + 3 <= cps.size(); ++i) set.push_back(cps.substr(i, 3));
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  return set;
}

double jaccard(const TrigramSet& a, const TrigramSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t shared = 0;
  for (auto i = a.begin(), j = b.begin(); i != a.end() && j != b.end();) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++shared;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(a.size() + b.size() - shared);
}

double text_similarity(std::string_view a, std::string_view b) { return jaccard(trigram_set(a), trigram_set(b)); }

}  // namespace forge::textmetrics
