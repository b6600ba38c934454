#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "memod/corpus.hpp"
#include "memod/embedding.hpp"

namespace memod {

struct EmptyIndex : Error {
  using Error::Error;
};

// The n most similar exemplars for one query, sorted by similarity
// descending with ties broken by ascending record_id. The query id
// itself is excluded (leave-one-out over train).
struct ExemplarSet {
  std::string query_id;
  std::vector<std::pair<std::string, double>> shots;
  int n = 0;
};

struct RetrieverOptions {
  bool balanced_shots = false;  // alternate exemplar labels instead of pure top-n
  // Required when balanced_shots is set: record_id -> gold label.
  const std::map<std::string, Label>* labels = nullptr;
};

// Exact exhaustive top-n cosine scan over a frozen index.
ExemplarSet select_exemplars(const EmbeddingVector& query, const std::string& query_id,
                             const EmbeddingIndex& index, int n,
                             const RetrieverOptions& options = {});

}  // namespace memod
