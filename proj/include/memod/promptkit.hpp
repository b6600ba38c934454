#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "memod/corpus.hpp"
#include "memod/retriever.hpp"

#include <json.hpp>

namespace memod {

struct EmptyDefinition : Error {
  using Error::Error;
};
struct MissingEnrichment : Error {
  MissingEnrichment(const std::string& record_id, const std::string& field);
};
struct MissingCaption : Error {
  using Error::Error;
};

enum class Role { system, user, assistant };

struct ContentPart {
  enum class Kind { text, image };
  Kind kind;
  std::string value;  // text, or the image reference

  static ContentPart text_part(std::string text);
  static ContentPart image_part(std::string reference);
};

struct ChatTurn {
  Role role;
  std::vector<ContentPart> parts;

  std::string joined_text() const;  // text parts only
};

// Label tokens of the active vocabulary ("hateful"/"non-hateful",
// "misogynistic"/"not-misogynistic").
struct LabelTokens {
  std::string positive = "hateful";
  std::string negative = "non-hateful";
};

struct PromptBundle {
  ChatTurn system;
  std::vector<std::pair<ChatTurn, ChatTurn>> shot_turns;  // (user, assistant), rank order
  ChatTurn test_turn;
  double temperature = 0.001;
  int max_new_tokens = 100;
};

ChatTurn build_system_prompt(const std::string& pos_def, const std::string& neg_def,
                             const LabelTokens& labels);

std::vector<std::pair<ChatTurn, ChatTurn>> build_shot_turns(const ExemplarSet& shots,
                                                            const EnrichedPool& pool,
                                                            const LabelTokens& labels);

ChatTurn build_test_turn(const MemeRecord& record, const std::string& caption);

// Assistant-shot text: "<pos> - <explanation> - Intervention - <intervention>"
// for positive exemplars, "<neg> - <explanation>" for negative ones.
std::string format_assistant(Label label, const std::string& explanation,
                             const std::optional<std::string>& intervention,
                             const LabelTokens& labels);

// User-turn text layout shared by shots and the test point: caption
// first, then OCR text delimited by three backticks.
std::string format_user_text(const std::string& caption, const std::string& ocr_text);

// Wire format of the chat endpoint: a message array.
nlohmann::ordered_json to_messages(const PromptBundle& bundle);
nlohmann::ordered_json turn_to_message(const ChatTurn& turn);
ChatTurn turn_from_message(const nlohmann::ordered_json& message);
std::vector<ChatTurn> turns_from_messages(const nlohmann::ordered_json& messages);

// Human-readable audit dump (.prompt.txt).
std::string render_transcript(const PromptBundle& bundle);

}  // namespace memod
