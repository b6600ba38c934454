#include "memod/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "memod/text.hpp"

namespace memod {

using ordered_json = nlohmann::ordered_json;

namespace {

double f1_from(int tp, int fp, int fn) {
  double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
  double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
  // Zero-denominator F1 is 0 by convention.
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

ClassificationResult accuracy_macro_f1(const std::vector<ParsedPrediction>& preds,
                                       const DatasetManifest& gold) {
  if (preds.size() != gold.records.size())
    throw CoverageMismatch("predictions cover " + std::to_string(preds.size()) + " of " +
                           std::to_string(gold.records.size()) + " gold records");
  std::map<std::string, PredictedLabel> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.record_id, p.predicted_label).second)
      throw CoverageMismatch("duplicate prediction for record " + p.record_id);
  }

  ConfusionCounts counts;
  for (const auto& record : gold.records) {
    auto it = by_id.find(record.id);
    if (it == by_id.end()) throw CoverageMismatch("no prediction for record " + record.id);
    PredictedLabel predicted = it->second;
    if (predicted == PredictedLabel::unparseable) {
      // Strict scoring: unparseable counts against the model.
      predicted = record.gold_label == Label::positive ? PredictedLabel::negative
                                                       : PredictedLabel::positive;
    }
    bool gold_pos = record.gold_label == Label::positive;
    bool pred_pos = predicted == PredictedLabel::positive;
    if (gold_pos && pred_pos) ++counts.tp;
    else if (gold_pos && !pred_pos) ++counts.fn;
    else if (!gold_pos && pred_pos) ++counts.fp;
    else ++counts.tn;
  }

  ClassificationResult result;
  result.counts = counts;
  int n = counts.total();
  result.accuracy = n == 0 ? 0.0 : static_cast<double>(counts.tp + counts.tn) / n;
  double f1_pos = f1_from(counts.tp, counts.fp, counts.fn);
  // Negative class: swap roles.
  double f1_neg = f1_from(counts.tn, counts.fn, counts.fp);
  result.macro_f1 = (f1_pos + f1_neg) / 2.0;
  return result;
}

double rouge_l(const std::string& candidate, const std::string& reference) {
  std::vector<std::string> cand = tokenize(candidate);
  std::vector<std::string> ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;

  // LCS over word tokens, rolling rows.
  std::vector<int> prev(ref.size() + 1, 0), curr(ref.size() + 1, 0);
  for (std::size_t i = 1; i <= cand.size(); ++i) {
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      if (cand[i - 1] == ref[j - 1]) {
        curr[j] = prev[j - 1] + 1;
      } else {
        curr[j] = std::max(prev[j], curr[j - 1]);
      }
    }
    std::swap(prev, curr);
  }
  int lcs = prev[ref.size()];

  double precision = static_cast<double>(lcs) / static_cast<double>(cand.size());
  double recall = static_cast<double>(lcs) / static_cast<double>(ref.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double semantic_similarity(const std::string& candidate, const std::string& reference,
                           EmbeddingBackend& backend) {
  EmbeddingVector a = backend.embed({"", candidate});
  EmbeddingVector b = backend.embed({"", reference});
  return cosine(a, b);
}

MockTokenEmbeddingBackend::MockTokenEmbeddingBackend(std::size_t dim, std::uint64_t seed)
    : inner_(dim, seed) {}

std::vector<EmbeddingVector> MockTokenEmbeddingBackend::embed_tokens(
    const std::vector<std::string>& tokens) {
  std::vector<EmbeddingVector> out;
  out.reserve(tokens.size());
  for (const auto& token : tokens) out.push_back(inner_.embed({"", token}));
  return out;
}

std::string MockTokenEmbeddingBackend::fingerprint() const {
  return "mock-token-" + inner_.fingerprint();
}

double bertscore_f1(const std::string& candidate, const std::string& reference,
                    TokenEmbeddingBackend& token_backend) {
  std::vector<std::string> cand_tokens = tokenize(candidate);
  std::vector<std::string> ref_tokens = tokenize(reference);
  if (cand_tokens.empty()) throw EmptyTokenSequence("candidate has no tokens");
  if (ref_tokens.empty()) throw EmptyTokenSequence("reference has no tokens");

  std::vector<EmbeddingVector> cand_vecs = token_backend.embed_tokens(cand_tokens);
  std::vector<EmbeddingVector> ref_vecs = token_backend.embed_tokens(ref_tokens);

  auto mean_max = [](const std::vector<EmbeddingVector>& from,
                     const std::vector<EmbeddingVector>& to) {
    double sum = 0.0;
    for (const auto& f : from) {
      double best = -1.0;
      for (const auto& t : to) best = std::max(best, cosine(f, t));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };

  double precision = mean_max(cand_vecs, ref_vecs);
  double recall = mean_max(ref_vecs, cand_vecs);
  if (precision + recall == 0.0) return 0.0;
  return std::clamp(2.0 * precision * recall / (precision + recall), 0.0, 1.0);
}

EvalReport build_report(const std::vector<ParsedPrediction>& preds, const DatasetManifest& gold,
                        EmbeddingBackend& sentence_backend,
                        TokenEmbeddingBackend& token_backend, const ReportConfig& config) {
  EvalReport report;
  report.n_shots = config.n_shots;
  report.retriever_fingerprint = config.retriever_fingerprint;
  report.model_fingerprint = config.model_fingerprint;
  report.classification = accuracy_macro_f1(preds, gold);

  std::map<std::string, const ParsedPrediction*> by_id;
  for (const auto& p : preds) by_id[p.record_id] = &p;

  GenerationScore expl_sum, int_sum;
  // Stable aggregation order: gold manifest order.
  for (const auto& record : gold.records) {
    const ParsedPrediction& pred = *by_id.at(record.id);
    if (pred.predicted_label == PredictedLabel::unparseable) {
      ++report.unparseable_count;
      continue;  // excluded from generation metrics
    }
    if (record.gold_explanation && !pred.explanation.empty()) {
      expl_sum.rouge_l += rouge_l(pred.explanation, *record.gold_explanation);
      expl_sum.semantic_similarity +=
          semantic_similarity(pred.explanation, *record.gold_explanation, sentence_backend);
      expl_sum.bertscore_f1 +=
          bertscore_f1(pred.explanation, *record.gold_explanation, token_backend);
      ++report.explanation.scored;
    }
    bool supported = record.gold_label == Label::positive &&
                     pred.predicted_label == PredictedLabel::positive &&
                     pred.intervention && !pred.intervention->empty();
    if (supported) {
      ++report.support;
      if (record.gold_intervention) {
        int_sum.rouge_l += rouge_l(*pred.intervention, *record.gold_intervention);
        int_sum.semantic_similarity += semantic_similarity(
            *pred.intervention, *record.gold_intervention, sentence_backend);
        int_sum.bertscore_f1 +=
            bertscore_f1(*pred.intervention, *record.gold_intervention, token_backend);
        ++report.intervention.scored;
      }
    }
  }

  if (report.explanation.scored > 0) {
    double n = report.explanation.scored;
    report.explanation.mean = {expl_sum.rouge_l / n, expl_sum.semantic_similarity / n,
                               expl_sum.bertscore_f1 / n};
  }
  if (report.intervention.scored > 0) {
    double n = report.intervention.scored;
    report.intervention.mean = {int_sum.rouge_l / n, int_sum.semantic_similarity / n,
                                int_sum.bertscore_f1 / n};
  }
  return report;
}

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << v;
  return out.str();
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  ordered_json obj;
  obj["classification"] = {{"accuracy", report.classification.accuracy},
                           {"macro_f1", report.classification.macro_f1},
                           {"counts",
                            {{"tp", report.classification.counts.tp},
                             {"fp", report.classification.counts.fp},
                             {"tn", report.classification.counts.tn},
                             {"fn", report.classification.counts.fn}}}};
  obj["explanation"] = {{"rouge_l", report.explanation.mean.rouge_l},
                        {"semantic_similarity", report.explanation.mean.semantic_similarity},
                        {"bertscore_f1", report.explanation.mean.bertscore_f1},
                        {"scored", report.explanation.scored}};
  obj["intervention"] = {{"rouge_l", report.intervention.mean.rouge_l},
                         {"semantic_similarity", report.intervention.mean.semantic_similarity},
                         {"bertscore_f1", report.intervention.mean.bertscore_f1},
                         {"scored", report.intervention.scored}};
  obj["support"] = report.support;
  obj["n_shots"] = report.n_shots;
  obj["retriever_fingerprint"] = report.retriever_fingerprint;
  obj["model_fingerprint"] = report.model_fingerprint;
  obj["unparseable_count"] = report.unparseable_count;
  return obj.dump(2);
}

std::string report_to_csv(const EvalReport& report, bool with_header) {
  std::ostringstream out;
  if (with_header)
    out << "acc,mf1,exp_rgL,exp_ss,exp_bsf1,int_rgL,int_ss,int_bsf1,sprt\n";
  out << fmt(report.classification.accuracy) << "," << fmt(report.classification.macro_f1) << ","
      << fmt(report.explanation.mean.rouge_l) << ","
      << fmt(report.explanation.mean.semantic_similarity) << ","
      << fmt(report.explanation.mean.bertscore_f1) << ","
      << fmt(report.intervention.mean.rouge_l) << ","
      << fmt(report.intervention.mean.semantic_similarity) << ","
      << fmt(report.intervention.mean.bertscore_f1) << "," << report.support << "\n";
  return out.str();
}

}  // namespace memod
