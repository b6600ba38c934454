#include "memod/textlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "memod/text.hpp"

namespace memod {

std::string to_string(Subgroup subgroup) {
  switch (subgroup) {
    case Subgroup::cp: return "cp";
    case Subgroup::cn: return "cn";
    case Subgroup::wp: return "wp";
    case Subgroup::wn: return "wn";
  }
  return "cp";
}

Subgroup subgroup_of(PredictedLabel predicted, Label gold) {
  if (predicted == PredictedLabel::unparseable)
    throw Error("subgroup_of: unparseable predictions are excluded from analysis");
  bool pred_pos = predicted == PredictedLabel::positive;
  bool gold_pos = gold == Label::positive;
  if (pred_pos && gold_pos) return Subgroup::cp;
  if (!pred_pos && !gold_pos) return Subgroup::cn;
  if (pred_pos && !gold_pos) return Subgroup::wp;
  return Subgroup::wn;
}

TextStats text_stats(const std::string& text) {
  std::vector<std::string> tokens = tokenize(text);
  TextStats stats;
  stats.token_count = static_cast<int>(tokens.size());
  if (tokens.empty()) return stats;
  std::set<std::string> types(tokens.begin(), tokens.end());
  stats.ttr = static_cast<double>(types.size()) / static_cast<double>(tokens.size());
  return stats;
}

UnigramModel::UnigramModel(const std::vector<std::string>& model_corpus) {
  if (model_corpus.empty()) throw EmptyCorpus("unigram model needs a nonempty corpus");
  for (const auto& text : model_corpus) {
    for (auto& token : tokenize(text)) {
      ++counts_[token];
      ++total_tokens_;
    }
  }
  if (total_tokens_ == 0) throw EmptyCorpus("unigram model corpus has no tokens");
}

double UnigramModel::perplexity(const std::string& text) const {
  std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) throw EmptyText("perplexity of empty text is undefined");
  // p(w) = (count(w)+1) / (N + V); unseen tokens take the zero-count
  // slot over the same normalizer, which keeps a uniform corpus exactly
  // uniform after smoothing.
  double denom = static_cast<double>(total_tokens_) + static_cast<double>(counts_.size());
  double log_sum = 0.0;
  for (const auto& token : tokens) {
    auto it = counts_.find(token);
    int count = it == counts_.end() ? 0 : it->second;
    log_sum += std::log((static_cast<double>(count) + 1.0) / denom);
  }
  return std::exp(-log_sum / static_cast<double>(tokens.size()));
}

double unigram_perplexity(const std::string& text,
                          const std::vector<std::string>& model_corpus) {
  return UnigramModel(model_corpus).perplexity(text);
}

ValenceLexicon load_valence_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LexiconMissing("cannot open valence lexicon: " + path);
  ValenceLexicon lexicon;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string word;
    double valence = 0.0;
    if (row >> word >> valence) lexicon[to_lower(word)] = valence;
  }
  return lexicon;
}

double compound_sentiment(const std::string& text, const ValenceLexicon& lexicon) {
  double s = 0.0;
  for (const auto& token : tokenize(text)) {
    auto it = lexicon.find(token);
    if (it != lexicon.end()) s += it->second;
  }
  return s / std::sqrt(s * s + 15.0);
}

SentimentDistribution sentiment_distribution(const std::vector<std::string>& texts,
                                             const ValenceLexicon& lexicon) {
  SentimentDistribution dist;
  if (texts.empty()) {
    dist.neutral_pct = 100.0;
    return dist;
  }
  int positive = 0, negative = 0, neutral = 0;
  for (const auto& text : texts) {
    double compound = compound_sentiment(text, lexicon);
    if (compound >= 0.05) ++positive;
    else if (compound <= -0.05) ++negative;
    else ++neutral;
  }
  double n = static_cast<double>(texts.size());
  dist.positive_pct = 100.0 * positive / n;
  dist.negative_pct = 100.0 * negative / n;
  dist.neutral_pct = 100.0 * neutral / n;
  return dist;
}

CoherenceResult coherence(const std::vector<ParsedPrediction>& preds,
                          const DatasetManifest& gold, EmbeddingBackend& backend) {
  double cp_sum = 0.0, wp_sum = 0.0;
  CoherenceResult result;
  for (const auto& record : gold.records) {
    const ParsedPrediction* pred = nullptr;
    for (const auto& p : preds) {
      if (p.record_id == record.id) {
        pred = &p;
        break;
      }
    }
    if (pred == nullptr || pred->predicted_label != PredictedLabel::positive) continue;
    if (!pred->intervention || pred->intervention->empty() || pred->explanation.empty())
      continue;
    double sim = cosine(backend.embed({"", pred->explanation}),
                        backend.embed({"", *pred->intervention}));
    if (record.gold_label == Label::positive) {
      cp_sum += sim;
      ++result.cp.count;
    } else {
      wp_sum += sim;
      ++result.wp.count;
    }
  }
  if (result.cp.count > 0) result.cp.mean = cp_sum / result.cp.count;
  if (result.wp.count > 0) result.wp.mean = wp_sum / result.wp.count;
  return result;
}

namespace {

std::map<std::string, double> relative_frequencies(const std::vector<std::string>& corpus) {
  std::map<std::string, long long> counts;
  long long total = 0;
  for (const auto& text : corpus) {
    for (auto& token : tokenize(text)) {
      ++counts[token];
      ++total;
    }
  }
  if (total == 0) throw EmptyCorpus("word_shift corpus has no tokens");
  std::map<std::string, double> freqs;
  for (const auto& [word, count] : counts)
    freqs[word] = static_cast<double>(count) / static_cast<double>(total);
  return freqs;
}

double surprisal_term(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }

}  // namespace

WordShiftResult word_shift(const std::vector<std::string>& corpus_a,
                           const std::vector<std::string>& corpus_b) {
  if (corpus_a.empty()) throw EmptyCorpus("word_shift: corpus A is empty");
  if (corpus_b.empty()) throw EmptyCorpus("word_shift: corpus B is empty");
  auto freq_a = relative_frequencies(corpus_a);
  auto freq_b = relative_frequencies(corpus_b);

  std::set<std::string> vocabulary;
  for (const auto& [w, p] : freq_a) vocabulary.insert(w);
  for (const auto& [w, p] : freq_b) vocabulary.insert(w);

  WordShiftResult result;
  std::vector<WordShiftContribution> all;
  for (const auto& word : vocabulary) {
    auto ita = freq_a.find(word);
    auto itb = freq_b.find(word);
    double pa = ita == freq_a.end() ? 0.0 : ita->second;
    double pb = itb == freq_b.end() ? 0.0 : itb->second;
    double delta = surprisal_term(pb) - surprisal_term(pa);
    result.total_shift += delta;
    all.push_back({word, delta, 0.0});
  }

  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (std::abs(a.delta) != std::abs(b.delta)) return std::abs(a.delta) > std::abs(b.delta);
    return a.word < b.word;
  });
  if (all.size() > 30) all.resize(30);
  double running = 0.0;
  for (auto& c : all) {
    running += c.delta;
    c.cumulative = running;
  }
  result.contributions = std::move(all);
  return result;
}

ConfidenceInterval confidence_interval(const std::vector<double>& values) {
  if (values.size() < 2)
    throw InsufficientData("confidence interval needs at least two values");
  double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / (n - 1.0));
  return {mean, 1.96 * sd / std::sqrt(n)};
}

}  // namespace memod
