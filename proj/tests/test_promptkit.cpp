#include <doctest.h>

#include "memod/promptkit.hpp"

using namespace memod;

namespace {

LabelTokens fhm_labels() { return LabelTokens{}; }

LabelTokens mami_labels() {
  LabelTokens tokens;
  tokens.positive = "misogynistic";
  tokens.negative = "not-misogynistic";
  return tokens;
}

EnrichedPool two_shot_pool() {
  EnrichedPool pool;
  {
    MemeRecord r;
    r.id = "s_pos";
    r.image = "img/pos.png";
    r.ocr_text = "ocr of the positive shot";
    r.gold_label = Label::positive;
    SilverEnrichment e;
    e.record_id = r.id;
    e.caption = "caption of the positive shot";
    e.explanation = "explains the attack";
    e.intervention = "counter speech";
    pool.emplace_back(r, e);
  }
  {
    MemeRecord r;
    r.id = "s_neg";
    r.image = "img/neg.png";
    r.ocr_text = "ocr of the negative shot";
    r.gold_label = Label::negative;
    SilverEnrichment e;
    e.record_id = r.id;
    e.caption = "caption of the negative shot";
    e.explanation = "benign joke";
    pool.emplace_back(r, e);
  }
  return pool;
}

ExemplarSet two_shots() {
  ExemplarSet shots;
  shots.query_id = "q";
  shots.shots = {{"s_pos", 0.9}, {"s_neg", 0.8}};
  shots.n = 2;
  return shots;
}

}  // namespace

TEST_CASE("system prompt contains the box phrases") {
  ChatTurn turn = build_system_prompt("attacks people", "does not attack", fhm_labels());
  std::string text = turn.joined_text();
  CHECK(turn.role == Role::system);
  CHECK(text.find("hateful or non-hateful") != std::string::npos);
  CHECK(text.find("delimited by three backticks") != std::string::npos);
  CHECK(text.find("attacks people") != std::string::npos);
  CHECK(text.find("does not attack") != std::string::npos);
  CHECK(text.find("Example output for hateful meme") != std::string::npos);
  CHECK(text.find("Intervention - intervention in 30 words") != std::string::npos);
}

TEST_CASE("system prompt substitutes the MAMI vocabulary") {
  ChatTurn turn = build_system_prompt("demeans women", "does not demean women", mami_labels());
  std::string text = turn.joined_text();
  CHECK(text.find("misogynistic or not-misogynistic") != std::string::npos);
  CHECK(text.find("hateful or non-hateful") == std::string::npos);
}

TEST_CASE("empty definitions rejected") {
  CHECK_THROWS_AS(build_system_prompt("", "neg def", fhm_labels()), EmptyDefinition);
  CHECK_THROWS_AS(build_system_prompt("pos def", "  ", fhm_labels()), EmptyDefinition);
}

TEST_CASE("shot turns follow the image+caption+OCR layout") {
  auto turns = build_shot_turns(two_shots(), two_shot_pool(), fhm_labels());
  REQUIRE(turns.size() == 2);

  const auto& [pos_user, pos_assistant] = turns[0];
  REQUIRE(pos_user.parts.size() == 2);
  CHECK(pos_user.parts[0].kind == ContentPart::Kind::image);
  CHECK(pos_user.parts[0].value == "img/pos.png");
  CHECK(pos_user.parts[1].value ==
        "caption of the positive shot ```ocr of the positive shot```");
  CHECK(pos_assistant.joined_text() ==
        "hateful - explains the attack - Intervention - counter speech");

  const auto& [neg_user, neg_assistant] = turns[1];
  CHECK(neg_user.parts[1].value ==
        "caption of the negative shot ```ocr of the negative shot```");
  CHECK(neg_assistant.joined_text() == "non-hateful - benign joke");
  CHECK(neg_assistant.joined_text().find("Intervention") == std::string::npos);
}

TEST_CASE("missing enrichment is reported per field") {
  EnrichedPool pool = two_shot_pool();
  pool[0].second.intervention.reset();
  CHECK_THROWS_AS(build_shot_turns(two_shots(), pool, fhm_labels()), MissingEnrichment);
  pool = two_shot_pool();
  pool[1].second.caption.reset();
  CHECK_THROWS_AS(build_shot_turns(two_shots(), pool, fhm_labels()), MissingEnrichment);
}

TEST_CASE("test turn mirrors the shot layout") {
  MemeRecord r;
  r.id = "q";
  r.image = "img/q.png";
  r.ocr_text = "islam is mentioned here";
  ChatTurn turn = build_test_turn(r, "caption of the test image");
  REQUIRE(turn.parts.size() == 2);
  CHECK(turn.parts[0].kind == ContentPart::Kind::image);
  std::string text = turn.parts[1].value;
  CHECK(text.rfind("islam is mentioned here```") == text.size() - 26);

  r.ocr_text = "";
  CHECK(build_test_turn(r, "cap").parts[1].value == "cap ``````");
  CHECK_THROWS_AS(build_test_turn(r, ""), MissingCaption);
}

TEST_CASE("message array round-trips the turn structure") {
  PromptBundle bundle;
  bundle.system = build_system_prompt("p def", "n def", fhm_labels());
  bundle.shot_turns = build_shot_turns(two_shots(), two_shot_pool(), fhm_labels());
  MemeRecord r;
  r.id = "q";
  r.image = "img/q.png";
  r.ocr_text = "ocr";
  bundle.test_turn = build_test_turn(r, "cap");

  auto messages = to_messages(bundle);
  CHECK(messages.size() == 2 + 2 * bundle.shot_turns.size());
  auto turns = turns_from_messages(messages);
  REQUIRE(turns.size() == messages.size());
  CHECK(turns.front().role == Role::system);
  CHECK(turns.front().joined_text() == bundle.system.joined_text());
  CHECK(turns.back().joined_text() == bundle.test_turn.joined_text());
  for (std::size_t i = 0; i < turns.size(); ++i) {
    auto again = turn_to_message(turns[i]);
    CHECK(again == messages[i]);
  }
}

TEST_CASE("bundle serialization is deterministic") {
  auto build = [] {
    PromptBundle bundle;
    bundle.system = build_system_prompt("p def", "n def", fhm_labels());
    bundle.shot_turns = build_shot_turns(two_shots(), two_shot_pool(), fhm_labels());
    MemeRecord r;
    r.id = "q";
    r.image = "img/q.png";
    r.ocr_text = "ocr";
    bundle.test_turn = build_test_turn(r, "cap");
    return to_messages(bundle).dump();
  };
  CHECK(build() == build());
}
