#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "naaloss/audio.hpp"
#include "naaloss/fft.hpp"

namespace naaloss {

enum class WindowKind { hann, rectangular };

struct StftConfig {
    int fft_size = 512;
    int hop_size = 256;
    WindowKind window = WindowKind::hann;

    int bins() const { return fft_size / 2 + 1; }
};

inline void validate_config(const StftConfig& cfg) {
    if (cfg.fft_size < 2 || cfg.fft_size % 2 != 0)
        throw std::invalid_argument("stft: fft_size must be a positive even integer");
    if (cfg.hop_size < 1)
        throw std::invalid_argument("stft: hop_size must be positive");
    if (cfg.hop_size > cfg.fft_size)
        throw std::invalid_argument("stft: hop_size must not exceed fft_size");
    // Hann analysis needs >= 2x overlap so every sample is covered by a
    // nonzero window value (w[0] = 0 for the periodic window).
    if (cfg.window == WindowKind::hann && cfg.hop_size * 2 > cfg.fft_size)
        throw std::invalid_argument("stft: hann window requires hop_size <= fft_size/2");
}

// frames x bins grid of complex STFT values, row-major by frame.
struct ComplexSpectrogram {
    std::vector<std::complex<double>> values;
    std::size_t frames = 0;
    std::size_t bins = 0;
    StftConfig config;
    std::size_t original_length = 0;

    std::complex<double>& at(std::size_t t, std::size_t f) { return values[t * bins + f]; }
    const std::complex<double>& at(std::size_t t, std::size_t f) const { return values[t * bins + f]; }
};

inline std::vector<double> make_window(const StftConfig& cfg) {
    std::vector<double> w(static_cast<std::size_t>(cfg.fft_size), 1.0);
    if (cfg.window == WindowKind::hann) {
        const double n = static_cast<double>(cfg.fft_size);
        for (int i = 0; i < cfg.fft_size; ++i)
            w[static_cast<std::size_t>(i)] =
                0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
    }
    return w;
}

namespace detail {

// Symmetric (edge-repeating) extension of index q into [0, len).
inline std::size_t fold_symmetric(long long q, long long len) {
    const long long period = 2 * len;
    long long r = q % period;
    if (r < 0) r += period;
    return static_cast<std::size_t>(r < len ? r : period - 1 - r);
}

// Fewest hop-advanced frames covering the padded signal region.
inline std::size_t stft_frame_count(std::size_t length, const StftConfig& cfg) {
    const std::size_t pad = static_cast<std::size_t>(cfg.fft_size) / 2;
    if (length <= pad) return 1;
    const std::size_t hop = static_cast<std::size_t>(cfg.hop_size);
    return 1 + (length - pad + hop - 1) / hop;
}

// Per-sample sum of squared synthesis windows over the padded buffer.
inline std::vector<double> overlap_norm(std::size_t frames, const StftConfig& cfg,
                                        const std::vector<double>& window) {
    const std::size_t n = static_cast<std::size_t>(cfg.fft_size);
    const std::size_t hop = static_cast<std::size_t>(cfg.hop_size);
    std::vector<double> den((frames - 1) * hop + n, 0.0);
    for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t i = 0; i < n; ++i) den[t * hop + i] += window[i] * window[i];
    return den;
}

}  // namespace detail

inline ComplexSpectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
    validate_config(cfg);
    validate_clip(clip);

    const std::size_t n = static_cast<std::size_t>(cfg.fft_size);
    const std::size_t hop = static_cast<std::size_t>(cfg.hop_size);
    const std::size_t pad = n / 2;
    const long long len = static_cast<long long>(clip.samples.size());
    const std::size_t frames = detail::stft_frame_count(clip.samples.size(), cfg);
    const std::size_t bins = static_cast<std::size_t>(cfg.bins());
    const std::vector<double> window = make_window(cfg);

    ComplexSpectrogram out;
    out.frames = frames;
    out.bins = bins;
    out.config = cfg;
    out.original_length = clip.samples.size();
    out.values.resize(frames * bins);

    std::vector<detail::cplx> buf(n);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const long long q = static_cast<long long>(t * hop + i) - static_cast<long long>(pad);
            buf[i] = detail::cplx{window[i] * clip.samples[detail::fold_symmetric(q, len)], 0.0};
        }
        detail::fft_inplace(buf, false);
        for (std::size_t f = 0; f < bins; ++f) out.values[t * bins + f] = buf[f];
    }
    return out;
}

inline AudioClip istft(const ComplexSpectrogram& spec) {
    validate_config(spec.config);
    const std::size_t n = static_cast<std::size_t>(spec.config.fft_size);
    if (spec.bins != static_cast<std::size_t>(spec.config.bins()))
        throw std::invalid_argument("stft: spectrogram bins inconsistent with fft_size/2+1");
    if (spec.frames == 0 || spec.values.size() != spec.frames * spec.bins)
        throw std::invalid_argument("stft: malformed spectrogram grid");
    if (spec.original_length == 0)
        throw std::invalid_argument("stft: original_length must be positive");
    for (const auto& v : spec.values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::invalid_argument("stft: spectrogram contains non-finite values");

    const std::size_t hop = static_cast<std::size_t>(spec.config.hop_size);
    const std::size_t pad = n / 2;
    const std::vector<double> window = make_window(spec.config);
    const std::vector<double> den = detail::overlap_norm(spec.frames, spec.config, window);

    std::vector<double> acc(den.size(), 0.0);
    std::vector<detail::cplx> full(n);
    for (std::size_t t = 0; t < spec.frames; ++t) {
        full[0] = spec.at(t, 0);
        full[n / 2] = spec.at(t, n / 2);
        for (std::size_t f = 1; f < n / 2; ++f) {
            full[f] = spec.at(t, f);
            full[n - f] = std::conj(spec.at(t, f));
        }
        detail::fft_inplace(full, true);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            acc[t * hop + i] += window[i] * (full[i].real() * inv_n);
    }

    AudioClip out;
    out.sample_rate_hz = 0;  // caller-owned; istft is rate-agnostic
    out.samples.assign(spec.original_length, 0.0);
    for (std::size_t i = 0; i < spec.original_length; ++i) {
        const std::size_t p = pad + i;
        if (p < acc.size() && den[p] > 1e-15) out.samples[i] = acc[p] / den[p];
    }
    return out;
}

// Adjoint of istft: maps a gradient w.r.t. the reconstructed waveform to a
// gradient w.r.t. the half-spectrum grid (real/imag parts independently).
inline std::vector<std::complex<double>> istft_adjoint(std::span<const double> grad_wave,
                                                       std::size_t frames,
                                                       const StftConfig& cfg) {
    validate_config(cfg);
    const std::size_t n = static_cast<std::size_t>(cfg.fft_size);
    const std::size_t hop = static_cast<std::size_t>(cfg.hop_size);
    const std::size_t pad = n / 2;
    const std::size_t bins = static_cast<std::size_t>(cfg.bins());
    const std::vector<double> window = make_window(cfg);
    const std::vector<double> den = detail::overlap_norm(frames, cfg, window);

    std::vector<double> g_padded(den.size(), 0.0);
    for (std::size_t i = 0; i < grad_wave.size(); ++i) {
        const std::size_t p = pad + i;
        if (p < g_padded.size() && den[p] > 1e-15) g_padded[p] = grad_wave[i] / den[p];
    }

    std::vector<std::complex<double>> grid(frames * bins);
    std::vector<detail::cplx> buf(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t i = 0; i < n; ++i)
            buf[i] = detail::cplx{window[i] * g_padded[t * hop + i] * inv_n, 0.0};
        detail::fft_inplace(buf, false);
        grid[t * bins + 0] = buf[0];
        grid[t * bins + n / 2] = buf[n / 2];
        for (std::size_t f = 1; f < n / 2; ++f)
            grid[t * bins + f] = buf[f] + std::conj(buf[n - f]);
    }
    return grid;
}

// Adjoint of stft: maps a gradient w.r.t. the half-spectrum grid to a
// gradient w.r.t. the input waveform of the given length.
inline std::vector<double> stft_adjoint(std::span<const std::complex<double>> grad_grid,
                                        std::size_t frames, const StftConfig& cfg,
                                        std::size_t length) {
    validate_config(cfg);
    const std::size_t n = static_cast<std::size_t>(cfg.fft_size);
    const std::size_t hop = static_cast<std::size_t>(cfg.hop_size);
    const std::size_t pad = n / 2;
    const std::size_t bins = static_cast<std::size_t>(cfg.bins());
    if (grad_grid.size() != frames * bins)
        throw std::invalid_argument("stft: adjoint grid size mismatch");

    std::vector<double> g_padded((frames - 1) * hop + n, 0.0);
    const std::vector<double> window = make_window(cfg);
    std::vector<detail::cplx> buf(n);
    for (std::size_t t = 0; t < frames; ++t) {
        std::fill(buf.begin(), buf.end(), detail::cplx{0.0, 0.0});
        for (std::size_t f = 0; f < bins; ++f) buf[f] = grad_grid[t * bins + f];
        detail::fft_inplace(buf, true);  // unscaled: sum_k G_k e^{+2*pi*i*k*i/n}
        for (std::size_t i = 0; i < n; ++i)
            g_padded[t * hop + i] += window[i] * buf[i].real();
    }

    std::vector<double> grad(length, 0.0);
    const long long len = static_cast<long long>(length);
    for (std::size_t p = 0; p < g_padded.size(); ++p) {
        const long long q = static_cast<long long>(p) - static_cast<long long>(pad);
        grad[detail::fold_symmetric(q, len)] += g_padded[p];
    }
    return grad;
}

inline std::vector<double> magnitudes(const ComplexSpectrogram& spec) {
    std::vector<double> mag(spec.values.size());
    for (std::size_t i = 0; i < spec.values.size(); ++i) mag[i] = std::abs(spec.values[i]);
    return mag;
}

}  // namespace naaloss
