#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "memod/common.hpp"
#include "memod/corpus.hpp"

namespace memod {

struct DimensionMismatch : Error {
  using Error::Error;
};
struct ZeroVector : Error {
  using Error::Error;
};
struct NonFiniteValue : Error {
  using Error::Error;
};
struct BackendUnavailable : Error {
  using Error::Error;
};

// Fixed-length real vector; stored 32-bit, compared 64-bit.
struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
  double norm() const;
  bool is_zero() const;
  // Scales to unit L2 norm; throws ZeroVector on the zero vector,
  // NonFiniteValue on NaN/inf components.
  EmbeddingVector normalized() const;
};

// dot(a,b)/(|a||b|), clamped to [-1,1] against rounding.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// What a backend embeds: the record id (precomputed backends key on it)
// and the text surrogate (caption + OCR for meme-level similarity).
struct EmbedRequest {
  std::string id;
  std::string text;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  // Returns an L2-normalized vector of the backend's dimension.
  virtual EmbeddingVector embed(const EmbedRequest& request) = 0;
  virtual std::string fingerprint() const = 0;
};

// Hash-seeded deterministic backend for hermetic tests and --mock runs.
class MockEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit MockEmbeddingBackend(std::size_t dim = 16, std::uint64_t seed = 0);
  EmbeddingVector embed(const EmbedRequest& request) override;
  std::string fingerprint() const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Backed by a JSONL file of id->vector rows; embed() looks up by id and
// never touches the network. Missing id is BackendUnavailable.
class PrecomputedEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit PrecomputedEmbeddingBackend(const std::string& path);
  EmbeddingVector embed(const EmbedRequest& request) override;
  std::string fingerprint() const override;

 private:
  std::map<std::string, EmbeddingVector> entries_;
  std::size_t dim_ = 0;
  std::string fingerprint_;
};

struct RemoteEmbeddingConfig {
  std::string url;
  std::string model;
  std::string auth_env;  // name of the env var holding the bearer token
};

// HTTP embedding endpoint: POST {"input":[...],"model":...} ->
// {"data":[{"embedding":[...]}]}.
class RemoteEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit RemoteEmbeddingBackend(RemoteEmbeddingConfig config);
  EmbeddingVector embed(const EmbedRequest& request) override;
  std::string fingerprint() const override;

 private:
  RemoteEmbeddingConfig config_;
};

// Frozen id -> unit-vector table supporting exhaustive cosine scans.
class EmbeddingIndex {
 public:
  EmbeddingIndex(std::map<std::string, EmbeddingVector> entries, std::size_t dim,
                 std::string backend_fingerprint);

  const std::map<std::string, EmbeddingVector>& entries() const { return entries_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  const std::string& backend_fingerprint() const { return backend_fingerprint_; }
  const EmbeddingVector* find(const std::string& id) const;

  void save(const std::string& path) const;
  static EmbeddingIndex load(const std::string& path);

 private:
  std::map<std::string, EmbeddingVector> entries_;
  std::size_t dim_;
  std::string backend_fingerprint_;
};

// Text surrogate fed to text-style backends: silver caption (when
// present) and OCR text joined with one space.
std::string similarity_text(const MemeRecord& record, const SilverEnrichment& silver);

// One entry per pool record; embed failures are rethrown with the
// offending record_id prepended.
EmbeddingIndex build_index(const EnrichedPool& pool, EmbeddingBackend& backend);

}  // namespace memod
