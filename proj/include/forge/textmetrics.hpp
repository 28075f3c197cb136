#pragma once

#include <string>
#include <string_view>
#include <vector>

// Reference-based string similarity metrics. All scores are in [0,1]; when both
// hypothesis and reference are empty every metric returns 1.
namespace forge::textmetrics {

struct ChrfParams {
  int char_ngram_max = 6;
  int word_ngram_max = 2;
  double beta = 2.0;
  // Char n-grams normally see whitespace collapsed to single spaces. When set,
  // whitespace is dropped entirely (the sacrebleu convention).
  bool strip_whitespace = false;

  void validate() const;
};

struct MetricScore {
  double value = 0.0;
  std::string metric_name;
  std::size_t hypothesis_len = 0;
  std::size_t reference_len = 0;
};

/// Character n-gram F-score with word n-grams (chrF++).
///
/// For every char order 1..char_ngram_max and word order 1..word_ngram_max that
/// both sides can populate, clipped precision and recall are computed; the
/// per-order values are macro-averaged and combined into one F_beta.
MetricScore chrf_pp(std::string_view reference, std::string_view hypothesis,
                    const ChrfParams& params = {});

/// Sentence BLEU without smoothing: geometric mean of clipped n-gram precisions
/// (orders 1..min(max_order, |hyp|)) times the brevity penalty.
MetricScore bleu(std::string_view reference, std::string_view hypothesis, int max_order = 4);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

RougeScore rouge1(std::string_view reference, std::string_view hypothesis);

/// Symmetric character-trigram Jaccard similarity after NFC and whitespace collapsing.
double text_similarity(std::string_view a, std::string_view b);

// Sorted, de-duplicated trigrams of the normalized text; a text shorter than
// three code points is its own single gram. Lets callers comparing many pairs
// build each set once.
using TrigramSet = std::vector<std::u32string>;
TrigramSet trigram_set(std::string_view text);
double jaccard(const TrigramSet& a, const TrigramSet& b);

// Exposed for tests and for the CLI's tokenisation dump.
std::vector<std::u32string> chrf_word_tokens(std::u32string_view text);

}  // namespace forge::textmetrics
