#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "naaloss/adam.hpp"
#include "naaloss/mask_model.hpp"

namespace naaloss {

// Versioned binary container, little-endian throughout:
//   magic "NAAC", u32 version, config block, float64 tensors per layer,
//   u8 optimizer-present flag, optional Adam block.
// The exact layout is documented in the README.

inline constexpr char kCheckpointMagic[4] = {'N', 'A', 'A', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    MaskModelParams params;
    std::optional<AdamState> adam;
};

namespace detail {

struct ByteWriter {
    std::string bytes;
    void u8(std::uint8_t v) { bytes.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f64s(const std::vector<double>& vs) {
        for (double v : vs) f64(v);
    }
};

struct ByteReader {
    std::string bytes;
    std::size_t pos = 0;
    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw std::runtime_error("format: truncated checkpoint");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    void f64s(std::vector<double>& out, std::size_t n) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = f64();
    }
};

inline void write_tensors(ByteWriter& w, const std::vector<LayerTensors>& layers) {
    for (const LayerTensors& lt : layers) {
        w.u32(static_cast<std::uint32_t>(lt.w.rows));
        w.u32(static_cast<std::uint32_t>(lt.w.cols));
        w.f64s(lt.w.data);
        w.u32(static_cast<std::uint32_t>(lt.b.size()));
        w.f64s(lt.b);
    }
}

inline std::vector<LayerTensors> read_tensors(ByteReader& r, std::size_t count) {
    std::vector<LayerTensors> layers(count);
    for (LayerTensors& lt : layers) {
        const std::size_t rows = r.u32();
        const std::size_t cols = r.u32();
        lt.w = Matrix(rows, cols);
        r.f64s(lt.w.data, rows * cols);
        const std::size_t blen = r.u32();
        if (blen != rows) throw std::runtime_error("format: checkpoint bias length mismatch");
        r.f64s(lt.b, blen);
    }
    return layers;
}

}  // namespace detail

inline void save_checkpoint(const MaskModelParams& params, const AdamState* optimizer,
                            const std::filesystem::path& path) {
    validate_params(params);
    detail::ByteWriter w;
    w.bytes.append(kCheckpointMagic, 4);
    w.u32(kCheckpointVersion);

    const ModelConfig& cfg = params.config;
    w.u32(static_cast<std::uint32_t>(cfg.stft.fft_size));
    w.u32(static_cast<std::uint32_t>(cfg.stft.hop_size));
    w.u8(cfg.stft.window == WindowKind::hann ? 0 : 1);
    w.u32(static_cast<std::uint32_t>(cfg.sample_rate_hz));
    w.u32(static_cast<std::uint32_t>(cfg.context_radius));
    w.u32(static_cast<std::uint32_t>(cfg.hidden_sizes.size()));
    for (int h : cfg.hidden_sizes) w.u32(static_cast<std::uint32_t>(h));
    w.u64(cfg.seed);

    w.u32(static_cast<std::uint32_t>(params.layers.size()));
    detail::write_tensors(w, params.layers);

    w.u8(optimizer != nullptr ? 1 : 0);
    if (optimizer != nullptr) {
        w.f64(optimizer->lr);
        w.f64(optimizer->beta1);
        w.f64(optimizer->beta2);
        w.f64(optimizer->epsilon);
        w.u64(optimizer->step_count);
        detail::write_tensors(w, optimizer->m);
        detail::write_tensors(w, optimizer->v);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("io: cannot open for writing: " + path.string());
    out.write(w.bytes.data(), static_cast<std::streamsize>(w.bytes.size()));
    out.flush();
    if (!out) throw std::runtime_error("io: write failed: " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("io: cannot open " + path.string());
    detail::ByteReader r;
    r.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

    r.need(4);
    if (r.bytes.compare(0, 4, kCheckpointMagic, 4) != 0)
        throw std::runtime_error("format: corrupt checkpoint (bad magic) in " + path.string());
    r.pos = 4;
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error("format: unsupported checkpoint version " +
                                 std::to_string(version) + " in " + path.string());

    Checkpoint ck;
    ModelConfig& cfg = ck.params.config;
    cfg.stft.fft_size = static_cast<int>(r.u32());
    cfg.stft.hop_size = static_cast<int>(r.u32());
    cfg.stft.window = r.u8() == 0 ? WindowKind::hann : WindowKind::rectangular;
    cfg.sample_rate_hz = static_cast<int>(r.u32());
    cfg.context_radius = static_cast<int>(r.u32());
    const std::size_t n_hidden = r.u32();
    cfg.hidden_sizes.resize(n_hidden);
    for (std::size_t i = 0; i < n_hidden; ++i) cfg.hidden_sizes[i] = static_cast<int>(r.u32());
    cfg.seed = r.u64();

    const std::size_t n_layers = r.u32();
    ck.params.layers = detail::read_tensors(r, n_layers);
    validate_params(ck.params);

    if (r.u8() != 0) {
        AdamState st;
        st.lr = r.f64();
        st.beta1 = r.f64();
        st.beta2 = r.f64();
        st.epsilon = r.f64();
        st.step_count = r.u64();
        st.m = detail::read_tensors(r, n_layers);
        st.v = detail::read_tensors(r, n_layers);
        detail::require_same_shape(st.m, ck.params.layers, "checkpoint moment shape mismatch");
        detail::require_same_shape(st.v, ck.params.layers, "checkpoint moment shape mismatch");
        ck.adam = std::move(st);
    }
    if (r.pos != r.bytes.size())
        throw std::runtime_error("format: trailing bytes in checkpoint " + path.string());
    return ck;
}

}  // namespace naaloss
