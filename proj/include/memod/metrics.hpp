#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memod/corpus.hpp"
#include "memod/embedding.hpp"
#include "memod/parser.hpp"

namespace memod {

struct CoverageMismatch : Error {
  using Error::Error;
};
struct EmptyTokenSequence : Error {
  using Error::Error;
};

struct ConfusionCounts {
  int tp = 0;
  int fp = 0;
  int tn = 0;
  int fn = 0;

  int total() const { return tp + fp + tn + fn; }
};

struct ClassificationResult {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  ConfusionCounts counts;
};

// Unparseable predictions score as wrong: they are assigned the class
// opposite to gold before counting.
ClassificationResult accuracy_macro_f1(const std::vector<ParsedPrediction>& preds,
                                       const DatasetManifest& gold);

// LCS-based F-measure over word tokens; 0 when either side is empty.
double rouge_l(const std::string& candidate, const std::string& reference);

// Cosine of the two sentence embeddings.
double semantic_similarity(const std::string& candidate, const std::string& reference,
                           EmbeddingBackend& backend);

// Token-level embeddings: one vector per token.
class TokenEmbeddingBackend {
 public:
  virtual ~TokenEmbeddingBackend() = default;
  virtual std::vector<EmbeddingVector> embed_tokens(const std::vector<std::string>& tokens) = 0;
  virtual std::string fingerprint() const = 0;
};

class MockTokenEmbeddingBackend : public TokenEmbeddingBackend {
 public:
  explicit MockTokenEmbeddingBackend(std::size_t dim = 16, std::uint64_t seed = 0);
  std::vector<EmbeddingVector> embed_tokens(const std::vector<std::string>& tokens) override;
  std::string fingerprint() const override;

 private:
  MockEmbeddingBackend inner_;
};

// Greedy matching without IDF weighting or baseline rescaling:
// P = mean over candidate tokens of the max cosine to any reference
// token, R symmetric, F = 2PR/(P+R).
double bertscore_f1(const std::string& candidate, const std::string& reference,
                    TokenEmbeddingBackend& token_backend);

struct GenerationScore {
  double rouge_l = 0.0;
  double semantic_similarity = 0.0;
  double bertscore_f1 = 0.0;
};

struct GenerationBlock {
  GenerationScore mean;
  int scored = 0;
};

// One model row of the results table, plus scoring metadata.
struct EvalReport {
  ClassificationResult classification;
  GenerationBlock explanation;    // over records with gold explanations
  GenerationBlock intervention;   // over the support set only
  int support = 0;                // gold-positive, predicted positive, intervention parsed
  int n_shots = 0;
  std::string retriever_fingerprint;
  std::string model_fingerprint;
  int unparseable_count = 0;
};

struct ReportConfig {
  int n_shots = 0;
  std::string retriever_fingerprint;
  std::string model_fingerprint;
};

EvalReport build_report(const std::vector<ParsedPrediction>& preds, const DatasetManifest& gold,
                        EmbeddingBackend& sentence_backend,
                        TokenEmbeddingBackend& token_backend, const ReportConfig& config);

// JSON document and the CSV row in results-table column order
// (acc, mf1, explanation rgL/ss/bsf1, intervention rgL/ss/bsf1, sprt).
std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report, bool with_header = true);

}  // namespace memod
