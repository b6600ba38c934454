#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memod/corpus.hpp"
#include "memod/embedding.hpp"
#include "memod/parser.hpp"

namespace memod {

struct EmptyText : Error {
  using Error::Error;
};
struct EmptyCorpus : Error {
  using Error::Error;
};
struct InsufficientData : Error {
  using Error::Error;
};
struct LexiconMissing : Error {
  using Error::Error;
};

// Prediction subgroups: correct/wrong x positive/negative. Every
// parseable scored record belongs to exactly one.
enum class Subgroup { cp, cn, wp, wn };

std::string to_string(Subgroup subgroup);

Subgroup subgroup_of(PredictedLabel predicted, Label gold);

struct TextStats {
  int token_count = 0;
  std::optional<double> ttr;  // null for empty text
};

TextStats text_stats(const std::string& text);

// Add-one-smoothed unigram model over the reference corpus; an
// out-of-vocabulary token is scored as a zero-count type over the same
// normalizer, so it stays finite. Natural log.
class UnigramModel {
 public:
  explicit UnigramModel(const std::vector<std::string>& model_corpus);
  double perplexity(const std::string& text) const;  // throws EmptyText

 private:
  std::map<std::string, int> counts_;
  long long total_tokens_ = 0;
};

double unigram_perplexity(const std::string& text, const std::vector<std::string>& model_corpus);

struct SentimentDistribution {
  double positive_pct = 0.0;
  double neutral_pct = 0.0;
  double negative_pct = 0.0;
};

// word -> valence. Empty lexicon classifies everything neutral.
using ValenceLexicon = std::map<std::string, double>;

ValenceLexicon load_valence_lexicon(const std::string& path);  // "word<TAB>valence" lines

// Per text: s = sum of token valences, compound = s/sqrt(s^2+15),
// positive at >= 0.05, negative at <= -0.05, else neutral.
double compound_sentiment(const std::string& text, const ValenceLexicon& lexicon);
SentimentDistribution sentiment_distribution(const std::vector<std::string>& texts,
                                             const ValenceLexicon& lexicon);

struct SubgroupCoherence {
  std::optional<double> mean;  // null when no qualifying records
  int count = 0;
};

struct CoherenceResult {
  SubgroupCoherence cp;
  SubgroupCoherence wp;
};

// Mean cosine(explanation, intervention) for positive predictions with
// a nonempty intervention, split by cp/wp.
CoherenceResult coherence(const std::vector<ParsedPrediction>& preds,
                          const DatasetManifest& gold, EmbeddingBackend& backend);

struct WordShiftContribution {
  std::string word;
  double delta = 0.0;       // p_B*(-ln p_B) - p_A*(-ln p_A)
  double cumulative = 0.0;  // running sum over the ranked list
};

struct WordShiftResult {
  double total_shift = 0.0;  // H(B) - H(A), sum of all deltas pre-truncation
  std::vector<WordShiftContribution> contributions;  // top 30 by |delta|
};

WordShiftResult word_shift(const std::vector<std::string>& corpus_a,
                           const std::vector<std::string>& corpus_b);

struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * s / sqrt(n)
};

ConfidenceInterval confidence_interval(const std::vector<double>& values);

}  // namespace memod
