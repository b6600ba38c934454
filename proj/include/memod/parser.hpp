#pragma once

#include <map>
#include <optional>
#include <string>

#include "memod/corpus.hpp"
#include "memod/promptkit.hpp"

namespace memod {

enum class PredictedLabel { positive, negative, unparseable };

std::string to_string(PredictedLabel label);

// Label + explanation + optional intervention extracted from a model
// completion. Unparseable completions keep raw intact and carry no
// explanation or intervention.
struct ParsedPrediction {
  std::string record_id;
  PredictedLabel predicted_label = PredictedLabel::unparseable;
  std::string explanation;
  std::optional<std::string> intervention;  // only when predicted_label is positive
  std::string raw;
};

// Trimmed, lowercased, punctuation-stripped token looked up in the
// manifest vocabulary. Never throws.
PredictedLabel normalize_label(const std::string& token,
                               const std::map<std::string, Label>& vocabulary);

// Total function over strings: leading label (case-insensitive, any
// vocabulary synonym), explanation up to a separator-delimited
// "Intervention" marker, intervention after it. Anything else comes
// back as unparseable with raw preserved.
ParsedPrediction parse_response(const std::string& raw, const LabelTokens& labels,
                                const std::map<std::string, Label>& vocabulary);

// Predictions JSONL persistence.
void save_predictions(const std::vector<ParsedPrediction>& predictions, const std::string& path);
std::vector<ParsedPrediction> load_predictions(const std::string& path);

}  // namespace memod
