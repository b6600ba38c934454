#include <doctest.h>

#include <algorithm>
#include <random>

#include "memod/retriever.hpp"

using namespace memod;

namespace {

EmbeddingVector vec(std::initializer_list<float> values) { return EmbeddingVector{values}; }

EmbeddingIndex make_index(std::map<std::string, EmbeddingVector> entries, std::size_t dim) {
  return EmbeddingIndex(std::move(entries), dim, "test");
}

// Independent oracle: score everything, stable-sort, truncate.
std::vector<std::pair<std::string, double>> brute_force(const EmbeddingVector& query,
                                                        const std::string& query_id,
                                                        const EmbeddingIndex& index, int n) {
  std::vector<std::pair<std::string, double>> scored;
  for (const auto& [id, v] : index.entries()) {
    if (id == query_id) continue;
    scored.emplace_back(id, cosine(query, v));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(scored.size()) > n) scored.resize(static_cast<std::size_t>(n));
  return scored;
}

}  // namespace

TEST_CASE("three-vector pool example") {
  auto index = make_index({{"e1", vec({1, 0})}, {"e2", vec({0.6f, 0.8f})}, {"e3", vec({0, 1})}},
                          2);
  ExemplarSet shots = select_exemplars(vec({1, 0}), "q", index, 2);
  REQUIRE(shots.shots.size() == 2);
  CHECK(shots.shots[0].first == "e1");
  CHECK(shots.shots[0].second == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(shots.shots[1].first == "e2");
  CHECK(shots.shots[1].second == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("saturation returns the whole pool sorted") {
  auto index = make_index({{"a", vec({1, 0})}, {"b", vec({0, 1})}}, 2);
  ExemplarSet shots = select_exemplars(vec({1, 0}), "q", index, 8);
  CHECK(shots.shots.size() == 2);
  CHECK(shots.shots[0].first == "a");
}

TEST_CASE("ties break by ascending id") {
  auto index = make_index({{"b", vec({1, 0})}, {"a", vec({1, 0})}}, 2);
  ExemplarSet shots = select_exemplars(vec({1, 0}), "q", index, 2);
  REQUIRE(shots.shots.size() == 2);
  CHECK(shots.shots[0].first == "a");
  CHECK(shots.shots[1].first == "b");
}

TEST_CASE("query id is excluded from its own shots") {
  auto index = make_index({{"a", vec({1, 0})}, {"b", vec({0.9f, 0.1f})}}, 2);
  ExemplarSet shots = select_exemplars(vec({1, 0}), "a", index, 2);
  REQUIRE(shots.shots.size() == 1);
  CHECK(shots.shots[0].first == "b");
}

TEST_CASE("errors: empty index and dimension mismatch") {
  CHECK_THROWS_AS(select_exemplars(vec({1, 0}), "q", make_index({}, 2), 2), EmptyIndex);
  auto index = make_index({{"a", vec({1, 0})}}, 2);
  CHECK_THROWS_AS(select_exemplars(vec({1, 0, 0}), "q", index, 1), DimensionMismatch);
}

TEST_CASE("matches the brute-force oracle on random pools") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::uniform_int_distribution<int> size_dist(1, 64);
  for (int trial = 0; trial < 100; ++trial) {
    int pool_size = size_dist(rng);
    std::map<std::string, EmbeddingVector> entries;
    for (int i = 0; i < pool_size; ++i) {
      EmbeddingVector v;
      for (int d = 0; d < 6; ++d) v.values.push_back(dist(rng));
      if (v.is_zero()) v.values[0] = 1.0f;
      entries["id" + std::to_string(i)] = v.normalized();
    }
    auto index = make_index(std::move(entries), 6);
    EmbeddingVector query;
    for (int d = 0; d < 6; ++d) query.values.push_back(dist(rng));
    if (query.is_zero()) query.values[0] = 1.0f;

    for (int n : {2, 4, 8}) {
      ExemplarSet shots = select_exemplars(query, "id0", index, n);
      auto oracle = brute_force(query, "id0", index, n);
      REQUIRE(shots.shots.size() == oracle.size());
      for (std::size_t i = 0; i < oracle.size(); ++i) {
        CHECK(shots.shots[i].first == oracle[i].first);
        CHECK(shots.shots[i].second == doctest::Approx(oracle[i].second).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("balanced mode mixes labels when both are available") {
  std::map<std::string, EmbeddingVector> entries{
      {"p1", vec({1, 0})}, {"p2", vec({0.95f, 0.3122499f})},
      {"n1", vec({0.9f, 0.43589f})}, {"n2", vec({0, 1})}};
  auto index = make_index(std::move(entries), 2);
  std::map<std::string, Label> labels{{"p1", Label::positive},
                                      {"p2", Label::positive},
                                      {"n1", Label::negative},
                                      {"n2", Label::negative}};
  RetrieverOptions options;
  options.balanced_shots = true;
  options.labels = &labels;
  ExemplarSet shots = select_exemplars(vec({1, 0}), "q", index, 2, options);
  REQUIRE(shots.shots.size() == 2);
  int positives = 0;
  for (const auto& [id, sim] : shots.shots) positives += labels.at(id) == Label::positive;
  CHECK(positives == 1);
}
