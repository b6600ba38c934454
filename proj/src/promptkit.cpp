#include "memod/promptkit.hpp"

#include <cctype>
#include <sstream>

#include "memod/text.hpp"

namespace memod {

using ordered_json = nlohmann::ordered_json;

MissingEnrichment::MissingEnrichment(const std::string& record_id, const std::string& field)
    : Error("record " + record_id + " is missing silver " + field) {}

ContentPart ContentPart::text_part(std::string text) {
  return ContentPart{Kind::text, std::move(text)};
}

ContentPart ContentPart::image_part(std::string reference) {
  return ContentPart{Kind::image, std::move(reference)};
}

std::string ChatTurn::joined_text() const {
  std::string out;
  for (const auto& part : parts) {
    if (part.kind == ContentPart::Kind::text) out += part.value;
  }
  return out;
}

ChatTurn build_system_prompt(const std::string& pos_def, const std::string& neg_def,
                             const LabelTokens& labels) {
  if (trim(pos_def).empty()) throw EmptyDefinition("positive definition is empty");
  if (trim(neg_def).empty()) throw EmptyDefinition("negative definition is empty");
  const std::string& pos = labels.positive;
  const std::string& neg = labels.negative;

  std::ostringstream text;
  text << "You are an AI assistant tasked with classifying memes into " << pos << " or " << neg
       << " along with an explanation while also generating an intervention only for " << pos
       << " memes based on the input image, image caption and extracted text obtained from the"
          " image.\n"
       << "Consider the following definitions.\n"
       << "- " << pos << ": " << pos_def << "\n"
       << "- " << neg << ": " << neg_def << "\n\n"
       << "Classify the meme as " << pos << " or " << neg
       << " and then explain the reason based on the above definitions considering the image,"
          " provided caption of the image, as well as the extracted text from the image delimited"
          " by three backticks. If the meme is " << pos
       << " then further generate an intervention for it.\n\n"
       << "Example output for " << pos << " meme: {" << pos
       << " -- explanation in 30 words that why the meme is " << pos
       << ". Intervention - intervention in 30 words for the " << pos << " meme.}\n"
       << "Example output for " << neg << " meme: {" << neg
       << " - explanation in 30 words that why the meme is " << neg << ".}";

  ChatTurn turn;
  turn.role = Role::system;
  turn.parts.push_back(ContentPart::text_part(text.str()));
  return turn;
}

std::string format_user_text(const std::string& caption, const std::string& ocr_text) {
  return caption + " ```" + ocr_text + "```";
}

std::string format_assistant(Label label, const std::string& explanation,
                             const std::optional<std::string>& intervention,
                             const LabelTokens& labels) {
  if (label == Label::positive) {
    return labels.positive + " - " + explanation + " - Intervention - " +
           (intervention ? *intervention : "");
  }
  return labels.negative + " - " + explanation;
}

std::vector<std::pair<ChatTurn, ChatTurn>> build_shot_turns(const ExemplarSet& shots,
                                                            const EnrichedPool& pool,
                                                            const LabelTokens& labels) {
  std::vector<std::pair<ChatTurn, ChatTurn>> out;
  out.reserve(shots.shots.size());
  for (const auto& [id, similarity] : shots.shots) {
    (void)similarity;
    const EnrichedRecord* found = nullptr;
    for (const auto& entry : pool) {
      if (entry.first.id == id) {
        found = &entry;
        break;
      }
    }
    if (found == nullptr) throw MissingEnrichment(id, "record (not in pool)");
    const auto& [record, silver] = *found;
    if (!silver.caption) throw MissingEnrichment(id, "caption");
    if (!silver.explanation) throw MissingEnrichment(id, "explanation");
    if (record.gold_label == Label::positive && !silver.intervention)
      throw MissingEnrichment(id, "intervention");

    ChatTurn user;
    user.role = Role::user;
    user.parts.push_back(ContentPart::image_part(record.image));
    user.parts.push_back(
        ContentPart::text_part(format_user_text(*silver.caption, record.ocr_text)));

    ChatTurn assistant;
    assistant.role = Role::assistant;
    assistant.parts.push_back(ContentPart::text_part(format_assistant(
        record.gold_label, *silver.explanation, silver.intervention, labels)));
    out.emplace_back(std::move(user), std::move(assistant));
  }
  return out;
}

ChatTurn build_test_turn(const MemeRecord& record, const std::string& caption) {
  if (caption.empty()) throw MissingCaption("record " + record.id + " has no caption");
  ChatTurn turn;
  turn.role = Role::user;
  turn.parts.push_back(ContentPart::image_part(record.image));
  turn.parts.push_back(ContentPart::text_part(format_user_text(caption, record.ocr_text)));
  return turn;
}

namespace {

std::string role_name(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role role_from(const std::string& name) {
  if (name == "system") return Role::system;
  if (name == "assistant") return Role::assistant;
  if (name == "user") return Role::user;
  throw Error("unknown chat role: " + name);
}

}  // namespace

ordered_json turn_to_message(const ChatTurn& turn) {
  ordered_json message;
  message["role"] = role_name(turn.role);
  ordered_json content = ordered_json::array();
  for (const auto& part : turn.parts) {
    ordered_json p;
    if (part.kind == ContentPart::Kind::text) {
      p["type"] = "text";
      p["text"] = part.value;
    } else {
      p["type"] = "image";
      p["image"] = part.value;
    }
    content.push_back(p);
  }
  message["content"] = content;
  return message;
}

ChatTurn turn_from_message(const ordered_json& message) {
  ChatTurn turn;
  turn.role = role_from(message.at("role").get<std::string>());
  for (const auto& p : message.at("content")) {
    std::string type = p.at("type").get<std::string>();
    if (type == "text") {
      turn.parts.push_back(ContentPart::text_part(p.at("text").get<std::string>()));
    } else if (type == "image") {
      turn.parts.push_back(ContentPart::image_part(p.at("image").get<std::string>()));
    } else {
      throw Error("unknown content part type: " + type);
    }
  }
  return turn;
}

ordered_json to_messages(const PromptBundle& bundle) {
  ordered_json messages = ordered_json::array();
  messages.push_back(turn_to_message(bundle.system));
  for (const auto& [user, assistant] : bundle.shot_turns) {
    messages.push_back(turn_to_message(user));
    messages.push_back(turn_to_message(assistant));
  }
  messages.push_back(turn_to_message(bundle.test_turn));
  return messages;
}

std::vector<ChatTurn> turns_from_messages(const ordered_json& messages) {
  std::vector<ChatTurn> turns;
  for (const auto& m : messages) turns.push_back(turn_from_message(m));
  return turns;
}

std::string render_transcript(const PromptBundle& bundle) {
  std::ostringstream out;
  auto render = [&out](const ChatTurn& turn) {
    std::string label = role_name(turn.role);
    label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
    out << label << ": ";
    for (const auto& part : turn.parts) {
      if (part.kind == ContentPart::Kind::image) {
        out << "<image:" << part.value << "> ";
      } else {
        out << part.value;
      }
    }
    out << "\n";
  };
  render(bundle.system);
  out << "\n";
  for (const auto& [user, assistant] : bundle.shot_turns) {
    render(user);
    render(assistant);
    out << "\n";
  }
  render(bundle.test_turn);
  out << "Assistant:\n";
  return out.str();
}

}  // namespace memod
