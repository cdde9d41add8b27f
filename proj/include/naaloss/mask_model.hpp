#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "naaloss/audio.hpp"
#include "naaloss/stft.hpp"

namespace naaloss {

struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

struct ModelConfig {
    StftConfig stft;
    int sample_rate_hz = 16000;
    int context_radius = 1;  // frames of left/right feature context
    std::vector<int> hidden_sizes{64};
    std::uint64_t seed = 0;

    int bins() const { return stft.bins(); }
    int input_width() const { return (2 * context_radius + 1) * bins(); }
};

inline void validate_config(const ModelConfig& cfg) {
    validate_config(cfg.stft);
    if (cfg.sample_rate_hz <= 0)
        throw std::invalid_argument("model: sample_rate_hz must be positive");
    if (cfg.context_radius < 0)
        throw std::invalid_argument("model: context_radius must be nonnegative");
    if (cfg.bins() <= 0) throw std::invalid_argument("model: zero bins");
    for (int h : cfg.hidden_sizes)
        if (h <= 0) throw std::invalid_argument("model: hidden sizes must be positive");
}

struct LayerTensors {
    Matrix w;               // out x in
    std::vector<double> b;  // out
};

struct MaskModelParams {
    ModelConfig config;
    std::vector<LayerTensors> layers;
};

using ParamGradients = std::vector<LayerTensors>;

inline std::vector<std::size_t> layer_widths(const ModelConfig& cfg) {
    std::vector<std::size_t> widths;
    widths.push_back(static_cast<std::size_t>(cfg.input_width()));
    for (int h : cfg.hidden_sizes) widths.push_back(static_cast<std::size_t>(h));
    widths.push_back(static_cast<std::size_t>(cfg.bins()));
    return widths;
}

inline void validate_params(const MaskModelParams& params) {
    validate_config(params.config);
    const auto widths = layer_widths(params.config);
    if (params.layers.size() + 1 != widths.size())
        throw std::invalid_argument("model: layer count inconsistent with config");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const LayerTensors& lt = params.layers[l];
        if (lt.w.rows != widths[l + 1] || lt.w.cols != widths[l] || lt.b.size() != widths[l + 1])
            throw std::invalid_argument("model: layer shape does not chain with config");
    }
}

inline ParamGradients zero_gradients(const MaskModelParams& params) {
    ParamGradients g;
    g.reserve(params.layers.size());
    for (const LayerTensors& lt : params.layers) {
        LayerTensors z;
        z.w = Matrix(lt.w.rows, lt.w.cols);
        z.b.assign(lt.b.size(), 0.0);
        g.push_back(std::move(z));
    }
    return g;
}

namespace detail {

// Fixed u64 -> [0,1) mapping so parameter draws are identical everywhere.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x51ed2701ull));
}

inline std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t params_fingerprint(const MaskModelParams& params) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const LayerTensors& lt : params.layers) {
        const std::uint64_t dims[2] = {lt.w.rows, lt.w.cols};
        h = fnv1a64(dims, sizeof(dims), h);
        h = fnv1a64(lt.w.data.data(), lt.w.data.size() * sizeof(double), h);
        h = fnv1a64(lt.b.data(), lt.b.size() * sizeof(double), h);
    }
    return h;
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Keep masks strictly inside (0,1) even under saturated pre-activations.
constexpr double kMaskFloor = 1e-300;
constexpr double kMaskCeil = 0.9999999999999999;  // largest double < 1

}  // namespace detail

inline MaskModelParams init_params(const ModelConfig& cfg) {
    validate_config(cfg);
    MaskModelParams params;
    params.config = cfg;
    const auto widths = layer_widths(cfg);
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        LayerTensors lt;
        lt.w = Matrix(widths[l + 1], widths[l]);
        lt.b.assign(widths[l + 1], 0.0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
        for (double& v : lt.w.data) v = bound * (2.0 * detail::uniform01(rng) - 1.0);
        params.layers.push_back(std::move(lt));
    }
    return params;
}

// Everything the backward pass needs; opaque to callers.
struct ForwardCache {
    ComplexSpectrogram spec;           // input STFT
    Matrix inputs;                     // frames x input_width (context features)
    std::vector<Matrix> hidden;        // tanh activations per hidden layer
    Matrix mask;                       // frames x bins
    std::size_t input_length = 0;
    std::uint64_t params_fingerprint = 0;
};

struct ForwardResult {
    AudioClip enhanced;
    Matrix mask;
    ForwardCache cache;
};

// Masking-based enhancement: log(1+|STFT|) features with per-utterance
// mean/variance normalization (statistics detached), context-windowed MLP
// with tanh hidden layers and a logistic mask output, mask applied to the
// complex grid (noisy phase kept), ISTFT back to the input length.
inline ForwardResult forward(const MaskModelParams& params, const AudioClip& clip) {
    validate_params(params);
    validate_clip(clip);
    if (clip.sample_rate_hz != params.config.sample_rate_hz)
        throw std::invalid_argument("model: clip sample rate does not match model config");

    ForwardResult out;
    ForwardCache& cache = out.cache;
    cache.spec = stft(clip, params.config.stft);
    cache.input_length = clip.samples.size();
    cache.params_fingerprint = detail::params_fingerprint(params);

    const std::size_t frames = cache.spec.frames;
    const std::size_t bins = cache.spec.bins;

    std::vector<double> feat(frames * bins);
    for (std::size_t i = 0; i < feat.size(); ++i) feat[i] = std::log1p(std::abs(cache.spec.values[i]));
    double mean = 0.0;
    for (double v : feat) mean += v;
    mean /= static_cast<double>(feat.size());
    double var = 0.0;
    for (double v : feat) var += (v - mean) * (v - mean);
    var /= static_cast<double>(feat.size());
    const double inv_std = 1.0 / std::sqrt(var + 1e-12);
    for (double& v : feat) v = (v - mean) * inv_std;

    const int radius = params.config.context_radius;
    const std::size_t width = static_cast<std::size_t>(params.config.input_width());
    cache.inputs = Matrix(frames, width);
    for (std::size_t t = 0; t < frames; ++t) {
        double* row = cache.inputs.row(t);
        std::size_t col = 0;
        for (int d = -radius; d <= radius; ++d) {
            const auto src = static_cast<std::size_t>(
                std::clamp<long long>(static_cast<long long>(t) + d, 0,
                                      static_cast<long long>(frames) - 1));
            for (std::size_t f = 0; f < bins; ++f) row[col++] = feat[src * bins + f];
        }
    }

    const Matrix* in = &cache.inputs;
    cache.hidden.clear();
    cache.hidden.reserve(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const LayerTensors& lt = params.layers[l];
        const bool last = (l + 1 == params.layers.size());
        Matrix act(frames, lt.w.rows);
        for (std::size_t t = 0; t < frames; ++t) {
            const double* x = in->row(t);
            double* a = act.row(t);
            for (std::size_t o = 0; o < lt.w.rows; ++o) {
                const double* w = lt.w.row(o);
                double z = lt.b[o];
                for (std::size_t i = 0; i < lt.w.cols; ++i) z += w[i] * x[i];
                a[o] = last ? std::clamp(detail::logistic(z), detail::kMaskFloor, detail::kMaskCeil)
                            : std::tanh(z);
            }
        }
        if (last) {
            cache.mask = std::move(act);
        } else {
            cache.hidden.push_back(std::move(act));
            in = &cache.hidden.back();
        }
    }

    for (double v : cache.mask.data)
        if (!std::isfinite(v)) throw std::runtime_error("model: non-finite activation in forward pass");

    ComplexSpectrogram masked = cache.spec;
    for (std::size_t i = 0; i < masked.values.size(); ++i) masked.values[i] *= cache.mask.data[i];
    out.enhanced = istft(masked);
    out.enhanced.sample_rate_hz = clip.sample_rate_hz;
    out.mask = cache.mask;
    return out;
}

// Exact reverse-mode gradients of a scalar through ISTFT, masking and the
// network, given that scalar's gradient w.r.t. the enhanced waveform.
// Feature-normalization statistics are constants of the forward pass.
inline ParamGradients vjp(const MaskModelParams& params, const ForwardCache& cache,
                          std::span<const double> grad_enhanced) {
    validate_params(params);
    if (cache.params_fingerprint != detail::params_fingerprint(params))
        throw std::invalid_argument("model: cache does not match these parameters");
    if (grad_enhanced.size() != cache.input_length)
        throw std::invalid_argument("model: gradient length does not match forward input");

    const std::size_t frames = cache.spec.frames;
    const std::size_t bins = cache.spec.bins;

    const std::vector<std::complex<double>> g_spec =
        istft_adjoint(grad_enhanced, frames, cache.spec.config);

    // enhanced grid = mask * spec, mask real: dL/dmask = Re(g * conj(spec))
    Matrix delta(frames, bins);
    for (std::size_t i = 0; i < g_spec.size(); ++i) {
        const double g_mask = g_spec[i].real() * cache.spec.values[i].real() +
                              g_spec[i].imag() * cache.spec.values[i].imag();
        const double m = cache.mask.data[i];
        delta.data[i] = g_mask * m * (1.0 - m);  // through the logistic output
    }

    ParamGradients grads = zero_gradients(params);
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const LayerTensors& lt = params.layers[l];
        const Matrix& layer_in = (l == 0) ? cache.inputs : cache.hidden[l - 1];
        LayerTensors& g = grads[l];
        for (std::size_t t = 0; t < frames; ++t) {
            const double* d = delta.row(t);
            const double* x = layer_in.row(t);
            for (std::size_t o = 0; o < lt.w.rows; ++o) {
                const double dv = d[o];
                if (dv == 0.0) continue;
                double* gw = g.w.row(o);
                for (std::size_t i = 0; i < lt.w.cols; ++i) gw[i] += dv * x[i];
                g.b[o] += dv;
            }
        }
        if (l == 0) break;
        Matrix prev(frames, lt.w.cols);
        for (std::size_t t = 0; t < frames; ++t) {
            const double* d = delta.row(t);
            double* p = prev.row(t);
            for (std::size_t o = 0; o < lt.w.rows; ++o) {
                const double dv = d[o];
                if (dv == 0.0) continue;
                const double* w = lt.w.row(o);
                for (std::size_t i = 0; i < lt.w.cols; ++i) p[i] += dv * w[i];
            }
            const double* a = layer_in.row(t);
            for (std::size_t i = 0; i < lt.w.cols; ++i) p[i] *= (1.0 - a[i] * a[i]);  // tanh'
        }
        delta = std::move(prev);
    }
    return grads;
}

}  // namespace naaloss
