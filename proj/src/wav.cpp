#include "simulsa/wav.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

namespace simulsa {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(std::string_view b, std::size_t at) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t read_u16(std::string_view b, std::size_t at) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                      static_cast<unsigned char>(b[at + 1]) << 8);
}

void put_u32(std::string &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string &out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}

[[noreturn]] void fail(const std::string &why) { throw Error(ErrorCode::AudioDecode, why); }

} // namespace

AudioClip decode_wav(std::string_view bytes) {
    if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
        fail("not a RIFF/WAVE stream");
    }
    std::size_t pos = 12;
    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::string_view data;
    bool have_data = false;

    while (pos + 8 <= bytes.size()) {
        std::string_view id = bytes.substr(pos, 4);
        std::uint32_t size = read_u32(bytes, pos + 4);
        std::size_t body = pos + 8;
        // Streamed writers sometimes leave the data size as 0 or 0xFFFFFFFF.
        std::size_t available = bytes.size() - body;
        std::size_t length = std::min<std::size_t>(size, available);
        if (id == "fmt ") {
            if (length < 16) fail("fmt chunk too short");
            format = read_u16(bytes, body);
            channels = read_u16(bytes, body + 2);
            rate = read_u32(bytes, body + 4);
            bits = read_u16(bytes, body + 14);
            if (format == kFormatExtensible) {
                if (length < 26) fail("extensible fmt chunk too short");
                format = read_u16(bytes, body + 24);
            }
            have_fmt = true;
        } else if (id == "data") {
            if (size == 0 || size == 0xFFFFFFFFu) length = available;
            data = bytes.substr(body, length);
            have_data = true;
            break;
        }
        pos = body + length + (length & 1);
    }

    if (!have_fmt) fail("missing fmt chunk");
    if (!have_data) fail("missing data chunk");
    if (format != kFormatPcm) fail("unsupported WAV format tag " + std::to_string(format));
    if (bits != 16) fail("only 16-bit PCM is supported, got " + std::to_string(bits) + "-bit");
    if (channels == 0) fail("zero channels");
    if (rate == 0) fail("zero sample rate");

    const std::size_t frame_bytes = 2u * channels;
    const std::size_t frames = data.size() / frame_bytes;
    std::vector<std::int16_t> mono(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        std::int64_t sum = 0;
        for (std::size_t c = 0; c < channels; ++c) {
            sum += static_cast<std::int16_t>(read_u16(data, f * frame_bytes + 2 * c));
        }
        mono[f] = static_cast<std::int16_t>(
            std::lround(static_cast<double>(sum) / static_cast<double>(channels)));
    }
    return AudioClip(std::move(mono), static_cast<int>(rate));
}

AudioClip read_wav(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::AudioDecode, "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_wav(bytes);
    } catch (const Error &e) {
        throw Error(ErrorCode::AudioDecode, path.string() + ": " + e.what());
    }
}

std::string encode_wav(const AudioClip &clip) {
    auto samples = clip.samples();
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    const auto rate = static_cast<std::uint32_t>(clip.sample_rate_hz());
    std::string out;
    out.reserve(44 + data_bytes);
    out += "RIFF";
    put_u32(out, 36 + data_bytes);
    out += "WAVEfmt ";
    put_u32(out, 16);
    put_u16(out, kFormatPcm);
    put_u16(out, 1);
    put_u32(out, rate);
    put_u32(out, rate * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out += "data";
    put_u32(out, data_bytes);
    for (std::int16_t s : samples) put_u16(out, static_cast<std::uint16_t>(s));
    return out;
}

void write_wav(const std::filesystem::path &path, const AudioClip &clip) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    std::string bytes = encode_wav(clip);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char *>(out.data()),
                            reinterpret_cast<const unsigned char *>(bytes.data()),
                            static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) fail("base64 length is not a multiple of 4");
    std::string out(3 * (text.size() / 4), '\0');
    int n = EVP_DecodeBlock(reinterpret_cast<unsigned char *>(out.data()),
                            reinterpret_cast<const unsigned char *>(text.data()),
                            static_cast<int>(text.size()));
    if (n < 0) fail("malformed base64");
    // EVP_DecodeBlock keeps the bytes produced by '=' padding; drop them.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

} // namespace simulsa
