#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "memod/metrics.hpp"
#include "memod/promptkit.hpp"
#include "memod/retriever.hpp"
#include "memod/text.hpp"
#include "memod/textlab.hpp"

namespace py = pybind11;
using namespace memod;

namespace {

EmbeddingVector to_vec(const std::vector<float>& values) { return EmbeddingVector{values}; }

LabelTokens make_tokens(const std::string& positive, const std::string& negative) {
  LabelTokens tokens;
  tokens.positive = positive;
  tokens.negative = negative;
  return tokens;
}

py::dict parse_response_py(const std::string& raw, const std::string& positive,
                           const std::string& negative) {
  LabelTokens tokens = make_tokens(positive, negative);
  std::map<std::string, Label> vocabulary{{positive, Label::positive},
                                          {negative, Label::negative}};
  ParsedPrediction parsed = parse_response(raw, tokens, vocabulary);
  py::dict out;
  switch (parsed.predicted_label) {
    case PredictedLabel::positive: out["label"] = positive; break;
    case PredictedLabel::negative: out["label"] = negative; break;
    default: out["label"] = py::none();
  }
  out["explanation"] = parsed.explanation;
  out["intervention"] = parsed.intervention ? py::cast(*parsed.intervention) : py::none();
  return out;
}

std::string format_assistant_py(const std::string& label, const std::string& explanation,
                                const std::optional<std::string>& intervention,
                                const std::string& positive, const std::string& negative) {
  return format_assistant(label == positive ? Label::positive : Label::negative, explanation,
                          intervention, make_tokens(positive, negative));
}

py::tuple classification_scores(const std::vector<std::string>& predicted,
                                const std::vector<std::string>& gold) {
  if (predicted.size() != gold.size())
    throw CoverageMismatch("predicted and gold lengths differ");
  DatasetManifest manifest;
  manifest.name = "adhoc";
  manifest.split = Split::test;
  std::vector<ParsedPrediction> preds;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    MemeRecord record;
    record.id = std::to_string(i);
    record.gold_label = gold[i] == "positive" ? Label::positive : Label::negative;
    manifest.records.push_back(record);
    ParsedPrediction p;
    p.record_id = record.id;
    p.predicted_label = predicted[i] == "positive"     ? PredictedLabel::positive
                        : predicted[i] == "negative"   ? PredictedLabel::negative
                                                       : PredictedLabel::unparseable;
    preds.push_back(p);
  }
  ClassificationResult result = accuracy_macro_f1(preds, manifest);
  return py::make_tuple(result.accuracy, result.macro_f1);
}

std::vector<std::pair<std::string, double>> top_k(
    const std::vector<float>& query, const std::map<std::string, std::vector<float>>& pool,
    int k, const std::string& exclude_id) {
  std::map<std::string, EmbeddingVector> entries;
  std::size_t dim = query.size();
  for (const auto& [id, values] : pool) entries[id] = to_vec(values);
  EmbeddingIndex index(std::move(entries), dim, "adhoc");
  return select_exemplars(to_vec(query), exclude_id, index, k).shots;
}

py::dict word_shift_py(const std::vector<std::string>& corpus_a,
                       const std::vector<std::string>& corpus_b) {
  WordShiftResult result = word_shift(corpus_a, corpus_b);
  py::list contributions;
  for (const auto& c : result.contributions)
    contributions.append(py::make_tuple(c.word, c.delta, c.cumulative));
  py::dict out;
  out["total_shift"] = result.total_shift;
  out["contributions"] = contributions;
  return out;
}

py::dict text_stats_py(const std::string& text) {
  TextStats stats = text_stats(text);
  py::dict out;
  out["token_count"] = stats.token_count;
  out["ttr"] = stats.ttr ? py::cast(*stats.ttr) : py::none();
  return out;
}

double bertscore_f1_py(const std::string& candidate, const std::string& reference,
                       std::size_t dim) {
  MockTokenEmbeddingBackend backend(dim);
  return bertscore_f1(candidate, reference, backend);
}

double semantic_similarity_py(const std::string& candidate, const std::string& reference,
                              std::size_t dim) {
  MockEmbeddingBackend backend(dim);
  return semantic_similarity(candidate, reference, backend);
}

py::tuple confidence_interval_py(const std::vector<double>& values) {
  ConfidenceInterval ci = confidence_interval(values);
  return py::make_tuple(ci.mean, ci.half_width);
}

}  // namespace

PYBIND11_MODULE(_memod, m) {
  m.doc() = "few-shot meme moderation kernels";

  m.def("tokenize", &tokenize, py::arg("text"), "lowercased punctuation-stripped word tokens");
  m.def(
      "cosine",
      [](const std::vector<float>& a, const std::vector<float>& b) {
        return cosine(to_vec(a), to_vec(b));
      },
      py::arg("a"), py::arg("b"));
  m.def("rouge_l", &rouge_l, py::arg("candidate"), py::arg("reference"));
  m.def("bertscore_f1", &bertscore_f1_py, py::arg("candidate"), py::arg("reference"),
        py::arg("dim") = 16, "greedy-matching F1 under the deterministic token backend");
  m.def("semantic_similarity", &semantic_similarity_py, py::arg("candidate"),
        py::arg("reference"), py::arg("dim") = 16);
  m.def("parse_response", &parse_response_py, py::arg("raw"), py::arg("positive") = "hateful",
        py::arg("negative") = "non-hateful");
  m.def("format_assistant", &format_assistant_py, py::arg("label"), py::arg("explanation"),
        py::arg("intervention") = std::nullopt, py::arg("positive") = "hateful",
        py::arg("negative") = "non-hateful");
  m.def("classification_scores", &classification_scores, py::arg("predicted"), py::arg("gold"),
        "(accuracy, macro_f1); labels are positive/negative/unparseable");
  m.def("top_k", &top_k, py::arg("query"), py::arg("pool"), py::arg("k"),
        py::arg("exclude_id") = "", "exhaustive cosine top-k over an id->vector pool");
  m.def("text_stats", &text_stats_py, py::arg("text"));
  m.def("unigram_perplexity", &unigram_perplexity, py::arg("text"), py::arg("model_corpus"));
  m.def("word_shift", &word_shift_py, py::arg("corpus_a"), py::arg("corpus_b"));
  m.def("confidence_interval", &confidence_interval_py, py::arg("values"));

  py::register_exception<Error>(m, "MemodError");
}
