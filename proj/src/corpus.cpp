#include "memod/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace memod {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Label label) {
  return label == Label::positive ? "positive" : "negative";
}

std::string to_string(Split split) {
  return split == Split::train ? "train" : "test";
}

std::size_t DatasetManifest::positive_count() const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(),
      [](const MemeRecord& r) { return r.gold_label == Label::positive; }));
}

std::size_t DatasetManifest::negative_count() const {
  return records.size() - positive_count();
}

const MemeRecord* DatasetManifest::find(const std::string& id) const {
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

const SilverEnrichment* SilverStore::find(const std::string& record_id) const {
  auto it = entries_.find(record_id);
  return it == entries_.end() ? nullptr : &it->second;
}

SilverEnrichment& SilverStore::put(SilverEnrichment enrichment) {
  auto id = enrichment.record_id;
  return entries_[id] = std::move(enrichment);
}

DuplicateId::DuplicateId(const std::string& id_)
    : ManifestError("duplicate record id: " + id_), id(id_) {}

UnknownLabel::UnknownLabel(int line_no, const std::string& raw)
    : ManifestError("line " + std::to_string(line_no) + ": label \"" + raw +
                    "\" not in label_vocabulary") {}

MissingField::MissingField(int line_no, const std::string& field)
    : ManifestError("line " + std::to_string(line_no) + ": missing field \"" + field + "\"") {}

MalformedLine::MalformedLine(int line_no, const std::string& detail)
    : ManifestError("line " + std::to_string(line_no) + ": malformed JSON" +
                    (detail.empty() ? "" : " (" + detail + ")")) {}

namespace {

bool blank_line(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

ordered_json parse_line(const std::string& line, int line_no) {
  try {
    return ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedLine(line_no, e.what());
  }
}

std::string require_string(const ordered_json& obj, const char* field, int line_no) {
  if (!obj.contains(field) || obj[field].is_null()) throw MissingField(line_no, field);
  if (!obj[field].is_string()) throw MalformedLine(line_no, std::string(field) + " not a string");
  return obj[field].get<std::string>();
}

std::optional<std::string> optional_string(const ordered_json& obj, const char* field) {
  if (!obj.contains(field) || obj[field].is_null()) return std::nullopt;
  return obj[field].get<std::string>();
}

ordered_json to_json(const std::optional<std::string>& v) {
  if (!v) return nullptr;
  return *v;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);

  DatasetManifest manifest;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  std::set<std::string> seen_ids;

  while (std::getline(in, line)) {
    ++line_no;
    if (blank_line(line)) continue;
    ordered_json obj = parse_line(line, line_no);

    if (!header_seen) {
      manifest.name = require_string(obj, "name", line_no);
      std::string split = require_string(obj, "split", line_no);
      if (split == "train") {
        manifest.split = Split::train;
      } else if (split == "test") {
        manifest.split = Split::test;
      } else {
        throw MalformedLine(line_no, "split must be train or test");
      }
      if (!obj.contains("label_vocabulary") || !obj["label_vocabulary"].is_object())
        throw MissingField(line_no, "label_vocabulary");
      for (const auto& [raw, mapped] : obj["label_vocabulary"].items()) {
        std::string m = mapped.get<std::string>();
        if (m != "positive" && m != "negative")
          throw MalformedLine(line_no, "label_vocabulary values must be positive/negative");
        manifest.label_vocabulary[raw] = m == "positive" ? Label::positive : Label::negative;
      }
      header_seen = true;
      continue;
    }

    MemeRecord record;
    record.id = require_string(obj, "id", line_no);
    if (record.id.empty()) throw MissingField(line_no, "id");
    if (!seen_ids.insert(record.id).second) throw DuplicateId(record.id);
    record.image = require_string(obj, "image", line_no);
    if (!obj.contains("ocr_text") || obj["ocr_text"].is_null())
      throw MissingField(line_no, "ocr_text");
    record.ocr_text = obj["ocr_text"].get<std::string>();
    std::string raw_label = require_string(obj, "label", line_no);
    auto it = manifest.label_vocabulary.find(raw_label);
    if (it == manifest.label_vocabulary.end()) throw UnknownLabel(line_no, raw_label);
    record.gold_label = it->second;
    record.gold_explanation = optional_string(obj, "explanation");
    record.gold_intervention = optional_string(obj, "intervention");
    if (record.gold_intervention && record.gold_label == Label::negative)
      throw InvariantViolation("record " + record.id +
                               ": gold intervention present on a negative-label record");
    manifest.records.push_back(std::move(record));
  }

  if (!header_seen && line_no > 0)
    throw MalformedLine(1, "missing header line");
  // An entirely empty file is a valid zero-record manifest.
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path);
  if (manifest.name.empty() && manifest.records.empty() && manifest.label_vocabulary.empty())
    return;  // mirror of the empty-file case

  ordered_json header;
  header["name"] = manifest.name;
  header["split"] = to_string(manifest.split);
  ordered_json vocab = ordered_json::object();
  for (const auto& [raw, label] : manifest.label_vocabulary) vocab[raw] = to_string(label);
  header["label_vocabulary"] = vocab;
  out << header.dump() << "\n";

  for (const auto& record : manifest.records) {
    std::string raw_label;
    for (const auto& [raw, label] : manifest.label_vocabulary) {
      if (label == record.gold_label) {
        raw_label = raw;
        break;
      }
    }
    ordered_json obj;
    obj["id"] = record.id;
    obj["image"] = record.image;
    obj["ocr_text"] = record.ocr_text;
    obj["label"] = raw_label;
    obj["explanation"] = to_json(record.gold_explanation);
    obj["intervention"] = to_json(record.gold_intervention);
    out << obj.dump() << "\n";
  }
}

SilverStore load_silver(const std::string& path, const DatasetManifest* manifest,
                        std::vector<std::string>* orphans) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open silver store: " + path);

  SilverStore store;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_line(line)) continue;
    ordered_json obj = parse_line(line, line_no);

    SilverEnrichment e;
    e.record_id = require_string(obj, "record_id", line_no);
    e.caption = optional_string(obj, "caption");
    e.explanation = optional_string(obj, "explanation");
    e.commonsense = optional_string(obj, "commonsense");
    e.intervention = optional_string(obj, "intervention");
    if (obj.contains("agent_fingerprints") && obj["agent_fingerprints"].is_object()) {
      for (const auto& [kind, fp] : obj["agent_fingerprints"].items())
        e.agent_fingerprints[kind] = fp.get<std::string>();
    }

    if (manifest != nullptr) {
      const MemeRecord* record = manifest->find(e.record_id);
      if (record == nullptr) {
        if (orphans != nullptr) orphans->push_back(e.record_id);
        continue;
      }
      if (e.intervention && record->gold_label == Label::negative)
        throw InvariantViolation("silver entry " + e.record_id +
                                 ": intervention stored for a negative-label record");
    }
    store.put(std::move(e));
  }
  return store;
}

void save_silver(const SilverStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write silver store: " + path);
  for (const auto& [id, e] : store.entries()) {
    ordered_json obj;
    obj["record_id"] = e.record_id;
    obj["caption"] = to_json(e.caption);
    obj["explanation"] = to_json(e.explanation);
    obj["commonsense"] = to_json(e.commonsense);
    obj["intervention"] = to_json(e.intervention);
    ordered_json fps = ordered_json::object();
    for (const auto& [kind, fp] : e.agent_fingerprints) fps[kind] = fp;
    obj["agent_fingerprints"] = fps;
    out << obj.dump() << "\n";
  }
}

EnrichedPool attach_silver(const DatasetManifest& manifest, const SilverStore& store) {
  EnrichedPool pool;
  pool.reserve(manifest.records.size());
  for (const auto& record : manifest.records) {
    const SilverEnrichment* found = store.find(record.id);
    SilverEnrichment e;
    if (found != nullptr) {
      e = *found;
    } else {
      e.record_id = record.id;
    }
    pool.emplace_back(record, std::move(e));
  }
  return pool;
}

}  // namespace memod
