#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "naaloss/audio.hpp"

namespace naaloss {

namespace detail {

inline double sinc_pi(double v) {
    if (std::abs(v) < 1e-12) return 1.0;
    const double pv = std::numbers::pi * v;
    return std::sin(pv) / pv;
}

inline double blackman(double r) {  // r in [-1, 1]
    if (std::abs(r) > 1.0) return 0.0;
    return 0.42 + 0.5 * std::cos(std::numbers::pi * r) + 0.08 * std::cos(2.0 * std::numbers::pi * r);
}

}  // namespace detail

// Windowed-sinc polyphase resampler (Blackman window, 32-tap half width).
// Owned by the metrics layer; the rest of the toolkit never resamples.
inline AudioClip resample(const AudioClip& in, int target_hz) {
    validate_clip(in);
    if (target_hz <= 0) throw std::invalid_argument("resample: target rate must be positive");
    if (target_hz == in.sample_rate_hz) return in;

    const double src = static_cast<double>(in.sample_rate_hz);
    const double dst = static_cast<double>(target_hz);
    const double cutoff = 0.45 * std::min(src, dst);  // Hz
    const double step = src / dst;                    // source samples per output sample
    constexpr int kHalfWidth = 32;

    AudioClip out;
    out.sample_rate_hz = target_hz;
    const auto out_len = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(static_cast<double>(in.samples.size()) * dst / src)));
    out.samples.resize(out_len);

    const double scale = 2.0 * cutoff / src;
    const long long n_in = static_cast<long long>(in.samples.size());
    for (std::size_t n = 0; n < out_len; ++n) {
        const double t = static_cast<double>(n) * step;
        const long long k0 = static_cast<long long>(std::ceil(t)) - kHalfWidth;
        const long long k1 = static_cast<long long>(std::floor(t)) + kHalfWidth;
        double acc = 0.0;
        for (long long k = std::max<long long>(0, k0); k <= std::min(n_in - 1, k1); ++k) {
            const double u = t - static_cast<double>(k);
            acc += in.samples[static_cast<std::size_t>(k)] * scale *
                   detail::sinc_pi(scale * u) * detail::blackman(u / kHalfWidth);
        }
        out.samples[n] = acc;
    }
    return out;
}

}  // namespace naaloss
