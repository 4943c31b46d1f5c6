#include "simulsa/text.hpp"

namespace simulsa {

namespace {

struct Decoded {
    char32_t cp;
    std::size_t length; // bytes consumed; cp is U+FFFD-like sentinel if invalid
    bool valid;
};

Decoded decode_utf8(std::string_view s, std::size_t pos) {
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    unsigned char b0 = byte(pos);
    if (b0 < 0x80) return {b0, 1, true};
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return {0, 1, false};
    }
    if (pos + len > s.size()) return {0, 1, false};
    for (std::size_t i = 1; i < len; ++i) {
        unsigned char b = byte(pos + i);
        if ((b & 0xC0) != 0x80) return {0, 1, false};
        cp = (cp << 6) | (b & 0x3F);
    }
    return {cp, len, true};
}

bool is_space(char32_t cp) {
    switch (cp) {
    case ' ': case '\t': case '\n': case '\r': case '\v': case '\f':
    case 0x00A0: case 0x3000:
        return true;
    default:
        return false;
    }
}

// Codepoint of the first / last character of a token.
bool starts_with_cjk(std::string_view token) {
    if (token.empty()) return false;
    auto d = decode_utf8(token, 0);
    return d.valid && is_cjk_codepoint(d.cp);
}

bool ends_with_cjk(std::string_view token) {
    if (token.empty()) return false;
    std::size_t pos = token.size() - 1;
    while (pos > 0 && (static_cast<unsigned char>(token[pos]) & 0xC0) == 0x80) --pos;
    auto d = decode_utf8(token, pos);
    return d.valid && is_cjk_codepoint(d.cp);
}

} // namespace

bool is_cjk_codepoint(char32_t cp) {
    return (cp >= 0x1100 && cp <= 0x11FF) ||   // Hangul Jamo
           (cp >= 0x2E80 && cp <= 0x2FDF) ||   // radicals
           (cp >= 0x3001 && cp <= 0x303F) ||   // CJK symbols and punctuation (not U+3000 space)
           (cp >= 0x3040 && cp <= 0x30FF) ||   // Hiragana, Katakana
           (cp >= 0x3100 && cp <= 0x31FF) ||   // Bopomofo, Kanbun, Katakana ext
           (cp >= 0x3200 && cp <= 0x4DBF) ||   // enclosed, compatibility, Ext A
           (cp >= 0x4E00 && cp <= 0x9FFF) ||   // unified ideographs
           (cp >= 0xAC00 && cp <= 0xD7AF) ||   // Hangul syllables
           (cp >= 0xF900 && cp <= 0xFAFF) ||   // compatibility ideographs
           (cp >= 0xFE30 && cp <= 0xFE4F) ||   // compatibility forms
           (cp >= 0xFF00 && cp <= 0xFFEF) ||   // half/fullwidth forms
           (cp >= 0x20000 && cp <= 0x2FA1F);   // Ext B and beyond
}

std::vector<std::string> split_tokens(std::string_view text, bool isolate_cjk) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto d = decode_utf8(text, pos);
        std::string_view bytes = text.substr(pos, d.length);
        pos += d.length;
        if (d.valid && is_space(d.cp)) {
            flush();
        } else if (isolate_cjk && d.valid && is_cjk_codepoint(d.cp)) {
            flush();
            tokens.emplace_back(bytes);
        } else {
            current.append(bytes);
        }
    }
    flush();
    return tokens;
}

std::string detokenize(std::span<const std::string> tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0 && !(ends_with_cjk(tokens[i - 1]) && starts_with_cjk(tokens[i]))) out += ' ';
        out += tokens[i];
    }
    return out;
}

} // namespace simulsa
