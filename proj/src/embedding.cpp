#include "memod/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

namespace memod {

using ordered_json = nlohmann::ordered_json;

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (float v : values) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

bool EmbeddingVector::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](float v) { return v == 0.0f; });
}

EmbeddingVector EmbeddingVector::normalized() const {
  for (float v : values) {
    if (!std::isfinite(v)) throw NonFiniteValue("embedding contains a non-finite value");
  }
  double n = norm();
  if (n == 0.0) throw ZeroVector("cannot normalize the zero vector");
  EmbeddingVector out;
  out.values.reserve(values.size());
  for (float v : values) out.values.push_back(static_cast<float>(v / n));
  return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("cosine: dim " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
  if (a.is_zero() || b.is_zero()) throw ZeroVector("cosine undefined for the zero vector");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double x = a.values[i], y = b.values[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

MockEmbeddingBackend::MockEmbeddingBackend(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {}

EmbeddingVector MockEmbeddingBackend::embed(const EmbedRequest& request) {
  std::uint64_t state = fnv1a64(request.text, 0xcbf29ce484222325ull ^ seed_);
  EmbeddingVector v;
  v.values.reserve(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    std::uint64_t r = splitmix64(state);
    // uniform in [-1, 1]
    v.values.push_back(static_cast<float>(static_cast<double>(r) / 9223372036854775808.0 - 1.0));
  }
  return v.normalized();
}

std::string MockEmbeddingBackend::fingerprint() const {
  return "mock-embed/dim=" + std::to_string(dim_) + "/seed=" + std::to_string(seed_);
}

PrecomputedEmbeddingBackend::PrecomputedEmbeddingBackend(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    ordered_json obj = ordered_json::parse(line);
    if (!header_seen) {
      dim_ = obj.at("dim").get<std::size_t>();
      fingerprint_ = obj.at("backend_fingerprint").get<std::string>();
      header_seen = true;
      continue;
    }
    EmbeddingVector v;
    v.values = obj.at("vector").get<std::vector<float>>();
    if (v.dim() != dim_)
      throw DimensionMismatch("embedding file line " + std::to_string(line_no) +
                              ": dim " + std::to_string(v.dim()) + " != header " +
                              std::to_string(dim_));
    entries_[obj.at("id").get<std::string>()] = v.normalized();
  }
  if (!header_seen) throw IoError("embedding file has no header: " + path);
}

EmbeddingVector PrecomputedEmbeddingBackend::embed(const EmbedRequest& request) {
  auto it = entries_.find(request.id);
  if (it == entries_.end())
    throw BackendUnavailable("no precomputed embedding for id: " + request.id);
  return it->second;
}

std::string PrecomputedEmbeddingBackend::fingerprint() const { return fingerprint_; }

RemoteEmbeddingBackend::RemoteEmbeddingBackend(RemoteEmbeddingConfig config)
    : config_(std::move(config)) {}

EmbeddingVector RemoteEmbeddingBackend::embed(const EmbedRequest& request) {
  auto slash = config_.url.find('/', config_.url.find("//") + 2);
  std::string host = slash == std::string::npos ? config_.url : config_.url.substr(0, slash);
  std::string route = slash == std::string::npos ? "/" : config_.url.substr(slash);

  httplib::Client client(host);
  client.set_read_timeout(60, 0);
  httplib::Headers headers;
  if (!config_.auth_env.empty()) {
    const char* token = std::getenv(config_.auth_env.c_str());
    if (token != nullptr) headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  ordered_json body;
  body["input"] = std::vector<std::string>{request.text};
  body["model"] = config_.model;
  auto res = client.Post(route, headers, body.dump(), "application/json");
  if (!res || res->status < 200 || res->status >= 300)
    throw BackendUnavailable("embedding endpoint " + config_.url + " failed" +
                             (res ? " with status " + std::to_string(res->status) : ""));
  ordered_json parsed = ordered_json::parse(res->body);
  EmbeddingVector v;
  v.values = parsed.at("data").at(0).at("embedding").get<std::vector<float>>();
  return v.normalized();
}

std::string RemoteEmbeddingBackend::fingerprint() const {
  return "remote-embed/" + config_.url + "/" + config_.model;
}

EmbeddingIndex::EmbeddingIndex(std::map<std::string, EmbeddingVector> entries, std::size_t dim,
                               std::string backend_fingerprint)
    : entries_(std::move(entries)), dim_(dim),
      backend_fingerprint_(std::move(backend_fingerprint)) {}

const EmbeddingVector* EmbeddingIndex::find(const std::string& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

void EmbeddingIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write index: " + path);
  ordered_json header;
  header["dim"] = dim_;
  header["backend_fingerprint"] = backend_fingerprint_;
  out << header.dump() << "\n";
  for (const auto& [id, v] : entries_) {
    ordered_json obj;
    obj["id"] = id;
    obj["vector"] = v.values;
    out << obj.dump() << "\n";
  }
}

// Same on-disk format as a precomputed embedding file.
EmbeddingIndex EmbeddingIndex::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open index: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("index file has no header: " + path);
  ordered_json header = ordered_json::parse(line);
  std::map<std::string, EmbeddingVector> entries;
  std::size_t dim = header.at("dim").get<std::size_t>();
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    ordered_json obj = ordered_json::parse(line);
    EmbeddingVector v;
    v.values = obj.at("vector").get<std::vector<float>>();
    entries[obj.at("id").get<std::string>()] = std::move(v);
  }
  return EmbeddingIndex(std::move(entries), dim,
                        header.at("backend_fingerprint").get<std::string>());
}

std::string similarity_text(const MemeRecord& record, const SilverEnrichment& silver) {
  std::string text;
  if (silver.caption && !silver.caption->empty()) text = *silver.caption;
  if (!record.ocr_text.empty()) {
    if (!text.empty()) text += " ";
    text += record.ocr_text;
  }
  return text;
}

EmbeddingIndex build_index(const EnrichedPool& pool, EmbeddingBackend& backend) {
  if (pool.empty()) throw Error("build_index: empty pool");
  std::map<std::string, EmbeddingVector> entries;
  std::size_t dim = 0;
  for (const auto& [record, silver] : pool) {
    try {
      EmbeddingVector v = backend.embed({record.id, similarity_text(record, silver)});
      if (dim == 0) dim = v.dim();
      if (v.dim() != dim)
        throw DimensionMismatch("dim " + std::to_string(v.dim()) + " != " + std::to_string(dim));
      if (v.is_zero()) throw ZeroVector("zero vector");
      entries[record.id] = std::move(v);
    } catch (const Error& e) {
      throw BackendUnavailable("embedding record " + record.id + ": " + e.what());
    }
  }
  return EmbeddingIndex(std::move(entries), dim, backend.fingerprint());
}

}  // namespace memod
