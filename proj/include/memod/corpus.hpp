#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "memod/common.hpp"

namespace memod {

enum class Label { positive, negative };

enum class Split { train, test };

std::string to_string(Label label);
std::string to_string(Split split);

// One meme: id, image reference, OCR text, binary gold label and the
// optional gold explanation/intervention annotations.
struct MemeRecord {
  std::string id;
  std::string image;
  std::string ocr_text;
  Label gold_label = Label::negative;
  std::optional<std::string> gold_explanation;
  std::optional<std::string> gold_intervention;  // positive records only
};

struct DatasetManifest {
  std::string name;
  Split split = Split::test;
  std::map<std::string, Label> label_vocabulary;  // raw label string -> binary
  std::vector<MemeRecord> records;                // order defines processing order

  std::size_t positive_count() const;
  std::size_t negative_count() const;
  const MemeRecord* find(const std::string& id) const;
};

// Agent-generated enrichment for one record. A field is null iff its
// agent was never invoked for this record.
struct SilverEnrichment {
  std::string record_id;
  std::optional<std::string> caption;
  std::optional<std::string> explanation;
  std::optional<std::string> commonsense;
  std::optional<std::string> intervention;  // positive records only
  std::map<std::string, std::string> agent_fingerprints;  // agent kind -> endpoint+model
};

// Persistent silver store keyed by record_id. Immutable views are safe
// for concurrent reads; mutation happens through put() only.
class SilverStore {
 public:
  const SilverEnrichment* find(const std::string& record_id) const;
  SilverEnrichment& put(SilverEnrichment enrichment);
  const std::map<std::string, SilverEnrichment>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::string, SilverEnrichment> entries_;
};

struct ManifestError : Error {
  using Error::Error;
};
struct DuplicateId : ManifestError {
  explicit DuplicateId(const std::string& id);
  std::string id;
};
struct UnknownLabel : ManifestError {
  UnknownLabel(int line_no, const std::string& raw);
};
struct MissingField : ManifestError {
  MissingField(int line_no, const std::string& field);
};
struct MalformedLine : ManifestError {
  explicit MalformedLine(int line_no, const std::string& detail = "");
};
struct InvariantViolation : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

// When a manifest is given, entries are validated against it: an
// intervention stored for a negative-label record is an
// InvariantViolation; entries for ids the manifest does not know are
// dropped and reported back through *orphans.
SilverStore load_silver(const std::string& path, const DatasetManifest* manifest = nullptr,
                        std::vector<std::string>* orphans = nullptr);

// Canonical output: sorted by record_id, fixed field order, so that
// load followed by save is byte-identical.
void save_silver(const SilverStore& store, const std::string& path);

using EnrichedRecord = std::pair<MemeRecord, SilverEnrichment>;
using EnrichedPool = std::vector<EnrichedRecord>;

// Pairs every record with its enrichment; records the store does not
// cover get an all-null enrichment. Never drops or duplicates records.
EnrichedPool attach_silver(const DatasetManifest& manifest, const SilverStore& store);

}  // namespace memod
