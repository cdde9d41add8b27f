#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "naaloss/audio.hpp"

namespace naaloss {

namespace detail {

inline std::uint16_t load_u16le(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t load_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void store_u16le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void store_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace detail

// Reads RIFF/WAVE: mono or multichannel, 16-bit PCM or 32-bit IEEE float.
// Multichannel input is averaged down to mono; PCM is scaled by 2^-15.
inline AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("io: cannot open " + path.string());

    auto read_exact = [&](void* dst, std::size_t count) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(count));
        if (static_cast<std::size_t>(in.gcount()) != count)
            throw std::runtime_error("format: malformed WAV header (truncated) in " + path.string());
    };

    unsigned char hdr[12];
    read_exact(hdr, 12);
    if (std::memcmp(hdr, "RIFF", 4) != 0 || std::memcmp(hdr + 8, "WAVE", 4) != 0)
        throw std::runtime_error("format: not a RIFF/WAVE file: " + path.string());

    bool have_fmt = false;
    std::uint16_t fmt_code = 0, channels = 0, bits = 0, block_align = 0;
    std::uint32_t rate = 0;
    std::vector<unsigned char> payload;
    bool have_data = false;

    unsigned char chunk_hdr[8];
    while (true) {
        in.read(reinterpret_cast<char*>(chunk_hdr), 8);
        if (in.gcount() == 0) break;  // clean end of file
        if (in.gcount() != 8)
            throw std::runtime_error("format: malformed WAV header (truncated chunk) in " + path.string());
        const std::uint32_t size = detail::load_u32le(chunk_hdr + 4);
        if (std::memcmp(chunk_hdr, "fmt ", 4) == 0) {
            if (size < 16)
                throw std::runtime_error("format: malformed fmt chunk in " + path.string());
            std::vector<unsigned char> fmt(size);
            read_exact(fmt.data(), size);
            fmt_code = detail::load_u16le(fmt.data());
            channels = detail::load_u16le(fmt.data() + 2);
            rate = detail::load_u32le(fmt.data() + 4);
            block_align = detail::load_u16le(fmt.data() + 12);
            bits = detail::load_u16le(fmt.data() + 14);
            have_fmt = true;
        } else if (std::memcmp(chunk_hdr, "data", 4) == 0) {
            payload.resize(size);
            if (size > 0) read_exact(payload.data(), size);
            have_data = true;
        } else {
            in.seekg(size, std::ios::cur);
            if (!in) throw std::runtime_error("format: malformed WAV header (truncated chunk) in " + path.string());
        }
        if (size % 2 == 1) in.seekg(1, std::ios::cur);  // chunks are word-aligned
    }

    if (!have_fmt || !have_data)
        throw std::runtime_error("format: malformed WAV header (missing fmt/data) in " + path.string());
    if (channels < 1 || rate == 0)
        throw std::runtime_error("format: malformed WAV header (bad fmt fields) in " + path.string());

    const bool pcm16 = (fmt_code == 1 && bits == 16);
    const bool float32 = (fmt_code == 3 && bits == 32);
    if (!pcm16 && !float32)
        throw std::runtime_error("format: unsupported WAV encoding (need 16-bit PCM or 32-bit float) in " +
                                 path.string());

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_bytes =
        block_align != 0 ? block_align : bytes_per_sample * channels;
    if (frame_bytes != bytes_per_sample * channels || payload.size() % frame_bytes != 0)
        throw std::runtime_error("format: malformed WAV data layout in " + path.string());
    const std::size_t frames = payload.size() / frame_bytes;
    if (frames == 0)
        throw std::runtime_error("format: empty audio payload in " + path.string());

    AudioClip clip;
    clip.sample_rate_hz = static_cast<int>(rate);
    clip.samples.resize(frames);
    const double inv_channels = 1.0 / static_cast<double>(channels);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        const unsigned char* fp = payload.data() + i * frame_bytes;
        for (std::size_t c = 0; c < channels; ++c) {
            const unsigned char* sp = fp + c * bytes_per_sample;
            if (pcm16) {
                const auto raw = static_cast<std::int16_t>(detail::load_u16le(sp));
                acc += static_cast<double>(raw) / 32768.0;
            } else {
                acc += static_cast<double>(std::bit_cast<float>(detail::load_u32le(sp)));
            }
        }
        clip.samples[i] = acc * inv_channels;
    }
    return clip;
}

// Writes mono 32-bit IEEE float little-endian WAV.
inline void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
    validate_clip(clip);

    std::string body;
    body.reserve(60 + clip.samples.size() * 4);
    const auto n = static_cast<std::uint32_t>(clip.samples.size());
    body.append("RIFF");
    detail::store_u32le(body, 4 + (8 + 16) + (8 + 4) + (8 + 4 * n));
    body.append("WAVE");
    body.append("fmt ");
    detail::store_u32le(body, 16);
    detail::store_u16le(body, 3);  // IEEE float
    detail::store_u16le(body, 1);  // mono
    detail::store_u32le(body, static_cast<std::uint32_t>(clip.sample_rate_hz));
    detail::store_u32le(body, static_cast<std::uint32_t>(clip.sample_rate_hz) * 4);
    detail::store_u16le(body, 4);
    detail::store_u16le(body, 32);
    body.append("fact");
    detail::store_u32le(body, 4);
    detail::store_u32le(body, n);
    body.append("data");
    detail::store_u32le(body, 4 * n);
    for (double s : clip.samples)
        detail::store_u32le(body, std::bit_cast<std::uint32_t>(static_cast<float>(s)));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("io: cannot open for writing: " + path.string());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    out.flush();
    if (!out) throw std::runtime_error("io: write failed: " + path.string());
}

}  // namespace naaloss
