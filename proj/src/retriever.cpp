#include "memod/retriever.hpp"

#include <algorithm>

namespace memod {

namespace {

using Scored = std::pair<std::string, double>;

bool ranked_before(const Scored& a, const Scored& b) {
  if (a.second != b.second) return a.second > b.second;
  return a.first < b.first;
}

}  // namespace

ExemplarSet select_exemplars(const EmbeddingVector& query, const std::string& query_id,
                             const EmbeddingIndex& index, int n,
                             const RetrieverOptions& options) {
  if (n < 1) throw Error("select_exemplars: n must be >= 1");
  if (index.size() == 0) throw EmptyIndex("select_exemplars: empty index");
  if (query.dim() != index.dim())
    throw DimensionMismatch("query dim " + std::to_string(query.dim()) + " != index dim " +
                            std::to_string(index.dim()));

  std::vector<Scored> scored;
  scored.reserve(index.size());
  for (const auto& [id, vec] : index.entries()) {
    if (id == query_id) continue;
    scored.emplace_back(id, cosine(query, vec));
  }
  std::sort(scored.begin(), scored.end(), ranked_before);

  ExemplarSet out;
  out.query_id = query_id;
  out.n = n;
  std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(n), scored.size());

  if (!options.balanced_shots) {
    out.shots.assign(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(want));
    return out;
  }

  if (options.labels == nullptr)
    throw Error("select_exemplars: balanced_shots requires a label map");
  // Top half per class by similarity, then merged back into rank order.
  std::size_t want_pos = want / 2 + want % 2;
  std::size_t want_neg = want - want_pos;
  std::vector<Scored> picked;
  std::size_t got_pos = 0, got_neg = 0;
  for (const auto& s : scored) {
    auto it = options.labels->find(s.first);
    if (it == options.labels->end()) continue;
    if (it->second == Label::positive && got_pos < want_pos) {
      picked.push_back(s);
      ++got_pos;
    } else if (it->second == Label::negative && got_neg < want_neg) {
      picked.push_back(s);
      ++got_neg;
    }
  }
  // One class may run dry; fill from the overall ranking.
  for (const auto& s : scored) {
    if (picked.size() >= want) break;
    if (std::find(picked.begin(), picked.end(), s) == picked.end()) picked.push_back(s);
  }
  std::sort(picked.begin(), picked.end(), ranked_before);
  out.shots = std::move(picked);
  return out;
}

}  // namespace memod
