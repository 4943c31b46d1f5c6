#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace simulsa {

// Ideographs, kana, hangul, CJK punctuation and fullwidth forms.
bool is_cjk_codepoint(char32_t cp);

// Splits on whitespace. With `isolate_cjk`, every CJK codepoint also becomes
// its own token. Invalid UTF-8 bytes are kept as-is inside the current token.
std::vector<std::string> split_tokens(std::string_view text, bool isolate_cjk);

// Token inventory used for target texts when the backend does not supply its
// own: whitespace words with CJK characters isolated.
inline std::vector<std::string> tokenize_text(std::string_view text) { return split_tokens(text, true); }

// Inverse of tokenize_text on normalized text: tokens are joined by a single
// space, except between two CJK characters.
std::string detokenize(std::span<const std::string> tokens);

} // namespace simulsa
