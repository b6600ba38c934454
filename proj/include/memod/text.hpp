#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace memod {

// Shared tokenizer for ROUGE-L, type-token ratio, perplexity and word
// shifts: lowercase, split on whitespace, strip leading/trailing
// punctuation from each token. Tokens that are all punctuation vanish.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Strips leading/trailing ASCII punctuation, keeps interior ("non-hateful").
std::string strip_punctuation(std::string_view token);

}  // namespace memod
