#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "memod/text.hpp"
#include "memod/textlab.hpp"

using namespace memod;

TEST_CASE("subgroup_of covers the four cells") {
  CHECK(subgroup_of(PredictedLabel::positive, Label::positive) == Subgroup::cp);
  CHECK(subgroup_of(PredictedLabel::negative, Label::negative) == Subgroup::cn);
  CHECK(subgroup_of(PredictedLabel::positive, Label::negative) == Subgroup::wp);
  CHECK(subgroup_of(PredictedLabel::negative, Label::positive) == Subgroup::wn);
  CHECK_THROWS_AS(subgroup_of(PredictedLabel::unparseable, Label::positive), Error);
}

TEST_CASE("text_stats worked examples") {
  TextStats stats = text_stats("good good bad");
  CHECK(stats.token_count == 3);
  CHECK(*stats.ttr == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  stats = text_stats("five all unique token words");
  CHECK(stats.token_count == 5);
  CHECK(*stats.ttr == 1.0);

  stats = text_stats("");
  CHECK(stats.token_count == 0);
  CHECK_FALSE(stats.ttr.has_value());
}

TEST_CASE("ttr is 1 iff all tokens distinct") {
  std::mt19937 rng(53);
  static const char* kWords[] = {"w1", "w2", "w3", "w4"};
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng() % 6);
    std::string text;
    std::vector<std::string> used;
    for (int i = 0; i < n; ++i) {
      std::string w = kWords[rng() % 4];
      used.push_back(w);
      text += (i ? " " : "") + w;
    }
    std::sort(used.begin(), used.end());
    bool distinct = std::adjacent_find(used.begin(), used.end()) == used.end();
    CHECK((*text_stats(text).ttr == 1.0) == distinct);
  }
}

TEST_CASE("perplexity analytic uniform case") {
  // V types with equal counts: add-one keeps the distribution uniform,
  // so every in-corpus token has probability 1/V.
  std::vector<std::string> corpus = {"red green blue", "red green blue"};
  CHECK(unigram_perplexity("red green blue", corpus) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(unigram_perplexity("red red red", corpus) == doctest::Approx(3.0).epsilon(1e-9));

  std::vector<std::string> five = {"a b c d e"};
  CHECK(unigram_perplexity("c e a", five) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("perplexity stays finite outside the vocabulary") {
  std::vector<std::string> corpus = {"alpha beta gamma"};
  double p = unigram_perplexity("delta epsilon", corpus);
  CHECK(std::isfinite(p));
  CHECK(p > 0);
  // An unseen token is rarer than any seen one.
  CHECK(p > unigram_perplexity("alpha beta", corpus));
}

TEST_CASE("perplexity errors") {
  CHECK_THROWS_AS(unigram_perplexity("", {"some corpus"}), EmptyText);
  CHECK_THROWS_AS(unigram_perplexity("text", {}), EmptyCorpus);
}

TEST_CASE("sentiment worked examples") {
  ValenceLexicon lexicon{{"great", 3.0}, {"awful", -3.0}};
  SentimentDistribution dist = sentiment_distribution({"great great", "awful"}, lexicon);
  CHECK(dist.positive_pct == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(dist.negative_pct == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(dist.neutral_pct == doctest::Approx(0.0).epsilon(1e-9));

  SentimentDistribution neutral = sentiment_distribution({"anything here"}, ValenceLexicon{});
  CHECK(neutral.neutral_pct == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("sentiment percentages always sum to 100") {
  ValenceLexicon lexicon{{"good", 1.5}, {"bad", -1.5}, {"fine", 0.2}};
  std::mt19937 rng(59);
  static const char* kWords[] = {"good", "bad", "fine", "other"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> texts;
    int n = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < n; ++i) {
      std::string text;
      int len = 1 + static_cast<int>(rng() % 5);
      for (int j = 0; j < len; ++j) text += std::string(j ? " " : "") + kWords[rng() % 4];
      texts.push_back(text);
    }
    SentimentDistribution dist = sentiment_distribution(texts, lexicon);
    CHECK(dist.positive_pct + dist.neutral_pct + dist.negative_pct ==
          doctest::Approx(100.0).epsilon(1e-9));
  }
}

TEST_CASE("compound sentiment normalization") {
  ValenceLexicon lexicon{{"great", 3.0}};
  double s = compound_sentiment("great", lexicon);
  CHECK(s == doctest::Approx(3.0 / std::sqrt(9.0 + 15.0)).epsilon(1e-12));
  CHECK(compound_sentiment("nothing known", lexicon) == 0.0);
}

TEST_CASE("valence lexicon file loading") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "memod_test_valence.txt";
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "great\t3.0\n";
    out << "awful -3.1\n";
  }
  ValenceLexicon lexicon = load_valence_lexicon(path.string());
  fs::remove(path);
  CHECK(lexicon.at("great") == doctest::Approx(3.0));
  CHECK(lexicon.at("awful") == doctest::Approx(-3.1));
  CHECK(lexicon.size() == 2);
}

namespace {

DatasetManifest coherence_manifest() {
  DatasetManifest manifest;
  manifest.name = "c";
  manifest.label_vocabulary = {{"hateful", Label::positive}, {"non-hateful", Label::negative}};
  for (int i = 0; i < 3; ++i) {
    MemeRecord r;
    r.id = "c" + std::to_string(i);
    r.image = "x.png";
    r.gold_label = i < 2 ? Label::positive : Label::negative;
    manifest.records.push_back(r);
  }
  return manifest;
}

}  // namespace

TEST_CASE("coherence means and empty subgroup") {
  DatasetManifest manifest = coherence_manifest();
  std::vector<ParsedPrediction> preds;
  for (int i = 0; i < 3; ++i) {
    ParsedPrediction p;
    p.record_id = "c" + std::to_string(i);
    p.predicted_label = i < 2 ? PredictedLabel::positive : PredictedLabel::negative;
    p.explanation = "same text";
    if (i < 2) p.intervention = "same text";
    preds.push_back(p);
  }
  MockEmbeddingBackend backend(16);
  CoherenceResult result = coherence(preds, manifest, backend);
  CHECK(result.cp.count == 2);
  REQUIRE(result.cp.mean.has_value());
  CHECK(*result.cp.mean == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(result.wp.count == 0);
  CHECK_FALSE(result.wp.mean.has_value());
}

TEST_CASE("word shift hand example: A={a,b}, B={a}") {
  WordShiftResult result = word_shift({"a b"}, {"a"});
  CHECK(result.total_shift == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  REQUIRE(result.contributions.size() == 2);
  for (const auto& c : result.contributions)
    CHECK(c.delta == doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-12));
  CHECK(result.contributions.back().cumulative ==
        doctest::Approx(result.total_shift).epsilon(1e-12));
}

TEST_CASE("word shift of identical corpora is zero") {
  WordShiftResult result = word_shift({"x y z"}, {"x y z"});
  CHECK(result.total_shift == 0.0);
  for (const auto& c : result.contributions) CHECK(c.delta == 0.0);
}

TEST_CASE("word shift total equals the entropy difference on random corpora") {
  std::mt19937 rng(61);
  static const char* kWords[] = {"v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8"};
  auto entropy = [](const std::vector<std::string>& corpus) {
    std::map<std::string, double> counts;
    double total = 0;
    for (const auto& text : corpus)
      for (const auto& token : tokenize(text)) {
        counts[token] += 1;
        total += 1;
      }
    double h = 0;
    for (const auto& [w, c] : counts) {
      double p = c / total;
      h -= p * std::log(p);
    }
    return h;
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> a, b;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 5); ++i) {
      std::string text;
      for (int j = 0; j < 1 + static_cast<int>(rng() % 20); ++j)
        text += std::string(j ? " " : "") + kWords[rng() % 8];
      a.push_back(text);
    }
    for (int i = 0; i < 1 + static_cast<int>(rng() % 5); ++i) {
      std::string text;
      for (int j = 0; j < 1 + static_cast<int>(rng() % 20); ++j)
        text += std::string(j ? " " : "") + kWords[rng() % 8];
      b.push_back(text);
    }
    WordShiftResult result = word_shift(a, b);
    CHECK(result.total_shift == doctest::Approx(entropy(b) - entropy(a)).epsilon(1e-9));
  }
}

TEST_CASE("word shift retains at most 30 contributions") {
  std::vector<std::string> a, b;
  for (int i = 0; i < 50; ++i) {
    a.push_back("worda" + std::to_string(i));
    b.push_back("wordb" + std::to_string(i));
  }
  WordShiftResult result = word_shift(a, b);
  CHECK(result.contributions.size() == 30);
  CHECK_THROWS_AS(word_shift({}, b), EmptyCorpus);
}

TEST_CASE("confidence interval worked examples") {
  ConfidenceInterval constant = confidence_interval({2.0, 2.0, 2.0});
  CHECK(constant.mean == 2.0);
  CHECK(constant.half_width == 0.0);

  ConfidenceInterval ci = confidence_interval({0.0, 0.0, 4.0, 4.0});
  CHECK(ci.mean == doctest::Approx(2.0).epsilon(1e-12));
  double s = std::sqrt(16.0 / 3.0);
  CHECK(ci.half_width == doctest::Approx(1.96 * s / 2.0).epsilon(1e-9));

  CHECK_THROWS_AS(confidence_interval({1.0}), InsufficientData);
  CHECK_THROWS_AS(confidence_interval({}), InsufficientData);
}
