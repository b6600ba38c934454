#include "memod/parser.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

#include "memod/text.hpp"

namespace memod {

using ordered_json = nlohmann::ordered_json;

std::string to_string(PredictedLabel label) {
  switch (label) {
    case PredictedLabel::positive: return "positive";
    case PredictedLabel::negative: return "negative";
    case PredictedLabel::unparseable: return "unparseable";
  }
  return "unparseable";
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Separator tolerance: '-', '--', ':' or an em dash.
constexpr const char* kEmDash = "\xe2\x80\x94";

// Length of the separator char starting at i, or 0.
std::size_t sep_len_at(const std::string& s, std::size_t i) {
  if (i >= s.size()) return 0;
  if (s[i] == '-' || s[i] == ':') return 1;
  if (s.compare(i, 3, kEmDash) == 0) return 3;
  return 0;
}

// Whether a separator char ends exactly at position i (exclusive).
std::size_t sep_len_ending_at(const std::string& s, std::size_t i) {
  if (i >= 1 && (s[i - 1] == '-' || s[i - 1] == ':')) return 1;
  if (i >= 3 && s.compare(i - 3, 3, kEmDash) == 0) return 3;
  return 0;
}

void skip_spaces(const std::string& s, std::size_t& i) {
  while (i < s.size() && is_space(s[i])) ++i;
}

// Consumes one contiguous run of separator chars; returns chars eaten.
std::size_t skip_sep_run(const std::string& s, std::size_t& i) {
  std::size_t eaten = 0;
  while (true) {
    std::size_t len = sep_len_at(s, i);
    if (len == 0) break;
    i += len;
    eaten += len;
  }
  return eaten;
}

bool iequal_at(const std::string& haystack, std::size_t pos, const std::string& needle) {
  if (pos + needle.size() > haystack.size()) return false;
  for (std::size_t k = 0; k < needle.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(haystack[pos + k])) !=
        std::tolower(static_cast<unsigned char>(needle[k])))
      return false;
  }
  return true;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

struct MarkerSplit {
  std::string explanation;
  std::string intervention;
};

bool is_sentence_end(char c) { return c == '.' || c == ';' || c == '!' || c == '?'; }

// Finds the first "Intervention" marker that sits at a segment
// boundary: either a separator precedes it, or sentence-final
// punctuation precedes it and a separator follows (the system prompt's
// own example output uses ". Intervention - ..."). A bare mid-sentence
// "intervention" matches neither and stays in the explanation.
std::optional<MarkerSplit> split_at_marker(const std::string& body) {
  static const std::string kMarker = "intervention";
  for (std::size_t pos = 0; pos + kMarker.size() <= body.size(); ++pos) {
    if (!iequal_at(body, pos, kMarker)) continue;
    if (pos > 0 && is_word_char(body[pos - 1])) continue;
    std::size_t after = pos + kMarker.size();
    if (after < body.size() && is_word_char(body[after])) continue;

    std::size_t i = after;
    skip_spaces(body, i);
    bool sep_after = skip_sep_run(body, i) > 0;
    skip_spaces(body, i);

    // Scan backwards: spaces, one separator run, spaces.
    std::size_t j = pos;
    while (j > 0 && is_space(body[j - 1])) --j;
    bool saw_sep = false;
    while (true) {
      std::size_t len = sep_len_ending_at(body, j);
      if (len == 0) break;
      j -= len;
      saw_sep = true;
    }
    if (saw_sep) {
      while (j > 0 && is_space(body[j - 1])) --j;
    } else {
      // Punctuation boundary stays in the explanation.
      bool punct_before = j > 0 && is_sentence_end(body[j - 1]);
      if (!punct_before || !sep_after) continue;
    }

    MarkerSplit split;
    split.explanation = body.substr(0, j);
    split.intervention = body.substr(i);
    return split;
  }
  return std::nullopt;
}

}  // namespace

PredictedLabel normalize_label(const std::string& token,
                               const std::map<std::string, Label>& vocabulary) {
  std::string normalized = strip_punctuation(to_lower(trim(token)));
  for (const auto& [raw, label] : vocabulary) {
    if (to_lower(raw) == normalized)
      return label == Label::positive ? PredictedLabel::positive : PredictedLabel::negative;
  }
  return PredictedLabel::unparseable;
}

ParsedPrediction parse_response(const std::string& raw, const LabelTokens& labels,
                                const std::map<std::string, Label>& vocabulary) {
  ParsedPrediction out;
  out.raw = raw;

  std::string text = trim(raw);

  // Candidate label tokens, longest first so "non-hateful" wins over "hateful".
  std::vector<std::pair<std::string, Label>> candidates(vocabulary.begin(), vocabulary.end());
  candidates.emplace_back(labels.positive, Label::positive);
  candidates.emplace_back(labels.negative, Label::negative);
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

  std::size_t label_end = 0;
  bool matched = false;
  for (const auto& [token, label] : candidates) {
    if (token.empty() || !iequal_at(text, 0, token)) continue;
    std::size_t end = token.size();
    if (end < text.size() && is_word_char(text[end])) continue;  // e.g. "hatefulness"
    out.predicted_label =
        label == Label::positive ? PredictedLabel::positive : PredictedLabel::negative;
    label_end = end;
    matched = true;
    break;
  }
  if (!matched) return out;  // unparseable, raw preserved

  std::size_t i = label_end;
  skip_spaces(text, i);
  skip_sep_run(text, i);
  skip_spaces(text, i);
  std::string body = text.substr(i);

  if (out.predicted_label == PredictedLabel::positive) {
    if (auto split = split_at_marker(body)) {
      out.explanation = split->explanation;
      if (!trim(split->intervention).empty()) out.intervention = split->intervention;
      return out;
    }
  }
  out.explanation = body;
  return out;
}

void save_predictions(const std::vector<ParsedPrediction>& predictions, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write predictions: " + path);
  for (const auto& p : predictions) {
    ordered_json obj;
    obj["record_id"] = p.record_id;
    obj["predicted_label"] = to_string(p.predicted_label);
    obj["explanation"] = p.explanation;
    obj["intervention"] = p.intervention ? ordered_json(*p.intervention) : ordered_json(nullptr);
    obj["raw"] = p.raw;
    out << obj.dump() << "\n";
  }
}

std::vector<ParsedPrediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions: " + path);
  std::vector<ParsedPrediction> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    ordered_json obj = ordered_json::parse(line);
    ParsedPrediction p;
    p.record_id = obj.at("record_id").get<std::string>();
    std::string label = obj.at("predicted_label").get<std::string>();
    p.predicted_label = label == "positive"    ? PredictedLabel::positive
                        : label == "negative" ? PredictedLabel::negative
                                              : PredictedLabel::unparseable;
    p.explanation = obj.at("explanation").get<std::string>();
    if (!obj.at("intervention").is_null())
      p.intervention = obj.at("intervention").get<std::string>();
    p.raw = obj.at("raw").get<std::string>();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace memod
