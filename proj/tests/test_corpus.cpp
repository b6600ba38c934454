#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "memod/corpus.hpp"

using namespace memod;
namespace fs = std::filesystem;

namespace {

// Scratch file removed on scope exit.
struct TempFile {
  fs::path path;

  explicit TempFile(const std::string& name) {
    path = fs::temp_directory_path() / ("memod_test_" + name);
  }
  ~TempFile() { std::error_code ec; fs::remove(path, ec); }

  void write(const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  std::string read() const {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  }
};

const char* kHeader =
    R"({"name":"fhm","split":"test","label_vocabulary":{"hateful":"positive","non-hateful":"negative"}})";

std::string record_line(const std::string& id, const std::string& label,
                        const std::string& extra = "") {
  return "{\"id\":\"" + id + "\",\"image\":\"img/" + id + ".png\",\"ocr_text\":\"some text\"," +
         "\"label\":\"" + label + "\"" + extra + "}";
}

}  // namespace

TEST_CASE("load_manifest parses header and records") {
  TempFile f("manifest_basic.jsonl");
  f.write(std::string(kHeader) + "\n" + record_line("m1", "hateful") + "\n" +
          record_line("m2", "non-hateful") + "\n");
  DatasetManifest manifest = load_manifest(f.path.string());
  CHECK(manifest.name == "fhm");
  CHECK(manifest.split == Split::test);
  CHECK(manifest.records.size() == 2);
  CHECK(manifest.positive_count() == 1);
  CHECK(manifest.negative_count() == 1);
  CHECK(manifest.find("m1")->gold_label == Label::positive);
  CHECK(manifest.find("missing") == nullptr);
}

TEST_CASE("empty file is a zero-record manifest") {
  TempFile f("manifest_empty.jsonl");
  f.write("");
  DatasetManifest manifest = load_manifest(f.path.string());
  CHECK(manifest.records.empty());
}

TEST_CASE("duplicate ids rejected") {
  TempFile f("manifest_dup.jsonl");
  f.write(std::string(kHeader) + "\n" + record_line("m1", "hateful") + "\n" +
          record_line("m1", "non-hateful") + "\n");
  CHECK_THROWS_AS(load_manifest(f.path.string()), DuplicateId);
}

TEST_CASE("unknown label rejected with line context") {
  TempFile f("manifest_label.jsonl");
  f.write(std::string(kHeader) + "\n" + record_line("m1", "spicy") + "\n");
  CHECK_THROWS_AS(load_manifest(f.path.string()), UnknownLabel);
}

TEST_CASE("missing field and malformed line rejected") {
  TempFile f("manifest_bad.jsonl");
  f.write(std::string(kHeader) + "\n{\"id\":\"m1\",\"label\":\"hateful\"}\n");
  CHECK_THROWS_AS(load_manifest(f.path.string()), MissingField);
  f.write(std::string(kHeader) + "\nnot json at all\n");
  CHECK_THROWS_AS(load_manifest(f.path.string()), MalformedLine);
}

TEST_CASE("gold intervention on a negative record is an invariant violation") {
  TempFile f("manifest_guard.jsonl");
  f.write(std::string(kHeader) + "\n" +
          record_line("m1", "non-hateful", ",\"intervention\":\"please reconsider\"") + "\n");
  CHECK_THROWS_AS(load_manifest(f.path.string()), InvariantViolation);
}

TEST_CASE("manifest save/load round-trips the in-memory representation") {
  std::mt19937 rng(7);
  DatasetManifest manifest;
  manifest.name = "roundtrip";
  manifest.split = Split::train;
  manifest.label_vocabulary = {{"hateful", Label::positive}, {"non-hateful", Label::negative}};
  for (int i = 0; i < 50; ++i) {
    MemeRecord r;
    r.id = "r" + std::to_string(i);
    r.image = "img/" + r.id + ".png";
    r.ocr_text = "text " + std::to_string(rng() % 1000);
    r.gold_label = rng() % 2 == 0 ? Label::positive : Label::negative;
    if (rng() % 2 == 0) r.gold_explanation = "because " + std::to_string(rng() % 100);
    if (r.gold_label == Label::positive && rng() % 2 == 0)
      r.gold_intervention = "counter " + std::to_string(rng() % 100);
    manifest.records.push_back(r);
  }
  TempFile f("manifest_roundtrip.jsonl");
  save_manifest(manifest, f.path.string());
  DatasetManifest loaded = load_manifest(f.path.string());
  REQUIRE(loaded.records.size() == manifest.records.size());
  CHECK(loaded.positive_count() + loaded.negative_count() == loaded.records.size());
  for (std::size_t i = 0; i < loaded.records.size(); ++i) {
    CHECK(loaded.records[i].id == manifest.records[i].id);
    CHECK(loaded.records[i].gold_label == manifest.records[i].gold_label);
    CHECK(loaded.records[i].gold_explanation == manifest.records[i].gold_explanation);
    CHECK(loaded.records[i].gold_intervention == manifest.records[i].gold_intervention);
  }
}

TEST_CASE("silver save is canonical and load/save is byte-identical") {
  SilverStore store;
  for (int i = 9; i >= 0; --i) {
    SilverEnrichment e;
    e.record_id = "s" + std::to_string(i);
    e.caption = "caption " + std::to_string(i);
    if (i % 2 == 0) e.explanation = "explains " + std::to_string(i);
    e.agent_fingerprints["caption"] = "caption@mock#m";
    store.put(std::move(e));
  }
  TempFile a("silver_a.jsonl");
  TempFile b("silver_b.jsonl");
  save_silver(store, a.path.string());
  SilverStore loaded = load_silver(a.path.string());
  save_silver(loaded, b.path.string());
  CHECK(a.read() == b.read());
  CHECK(a.read().find("s0") < a.read().find("s9"));
}

TEST_CASE("empty store saves an empty file") {
  TempFile f("silver_empty.jsonl");
  save_silver(SilverStore{}, f.path.string());
  CHECK(f.read().empty());
}

TEST_CASE("silver load validates against the manifest") {
  TempFile mf("manifest_for_silver.jsonl");
  mf.write(std::string(kHeader) + "\n" + record_line("m1", "non-hateful") + "\n" +
           record_line("m2", "hateful") + "\n");
  DatasetManifest manifest = load_manifest(mf.path.string());

  TempFile sf("silver_orphan.jsonl");
  sf.write(R"({"record_id":"m2","caption":"c","explanation":null,"commonsense":null,"intervention":null,"agent_fingerprints":{}})"
           "\n"
           R"({"record_id":"ghost","caption":"c","explanation":null,"commonsense":null,"intervention":null,"agent_fingerprints":{}})"
           "\n");
  std::vector<std::string> orphans;
  SilverStore store = load_silver(sf.path.string(), &manifest, &orphans);
  CHECK(store.size() == 1);
  REQUIRE(orphans.size() == 1);
  CHECK(orphans[0] == "ghost");

  TempFile gf("silver_guard.jsonl");
  gf.write(R"({"record_id":"m1","caption":null,"explanation":null,"commonsense":null,"intervention":"stop","agent_fingerprints":{}})"
           "\n");
  CHECK_THROWS_AS(load_silver(gf.path.string(), &manifest), InvariantViolation);
}

TEST_CASE("attach_silver pairs every record exactly once") {
  DatasetManifest manifest;
  manifest.name = "attach";
  manifest.label_vocabulary = {{"hateful", Label::positive}, {"non-hateful", Label::negative}};
  for (int i = 0; i < 3; ++i) {
    MemeRecord r;
    r.id = "a" + std::to_string(i);
    r.image = "x.png";
    manifest.records.push_back(r);
  }
  SilverStore store;
  for (int i = 0; i < 2; ++i) {
    SilverEnrichment e;
    e.record_id = "a" + std::to_string(i);
    e.caption = "cap";
    store.put(std::move(e));
  }
  EnrichedPool pool = attach_silver(manifest, store);
  REQUIRE(pool.size() == 3);
  CHECK(pool[0].second.caption.has_value());
  CHECK(pool[1].second.caption.has_value());
  CHECK_FALSE(pool[2].second.caption.has_value());
  CHECK(pool[2].second.record_id == "a2");
}
