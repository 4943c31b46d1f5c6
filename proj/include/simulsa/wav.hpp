#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "simulsa/domain.hpp"

namespace simulsa {

// RIFF/WAVE PCM reader. Accepts 16-bit PCM (plain or WAVE_FORMAT_EXTENSIBLE);
// multi-channel input is down-mixed to mono by averaging channels.
// Throws Error{AudioDecode}.
AudioClip decode_wav(std::string_view bytes);
AudioClip read_wav(const std::filesystem::path &path);

// 16-bit PCM mono WAV with a canonical 44-byte header.
std::string encode_wav(const AudioClip &clip);
void write_wav(const std::filesystem::path &path, const AudioClip &clip);

std::string base64_encode(std::string_view bytes);
// Throws Error{AudioDecode} on malformed input.
std::string base64_decode(std::string_view text);

} // namespace simulsa
