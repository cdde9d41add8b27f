#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "naaloss/audio.hpp"

namespace naaloss {

struct MixResult {
    AudioClip noisy;         // z = x + g*y
    AudioClip scaled_noise;  // g*y, aligned to the clean length
};

// Scales noise so that 10*log10(P_clean / P_scaled_noise) == snr_db, then
// mixes. Noise shorter than clean is tiled; longer noise is truncated from
// offset 0. The returned pair satisfies noisy == clean + scaled_noise
// sample-for-sample in double arithmetic.
inline MixResult mix_at_snr(const AudioClip& clean, const AudioClip& noise, double snr_db) {
    validate_clip(clean, "clean");
    validate_clip(noise, "noise");
    if (clean.sample_rate_hz != noise.sample_rate_hz)
        throw std::invalid_argument("mix: sample-rate mismatch between clean and noise");

    const std::size_t len = clean.samples.size();
    AudioClip aligned;
    aligned.sample_rate_hz = noise.sample_rate_hz;
    aligned.samples.resize(len);
    for (std::size_t i = 0; i < len; ++i)
        aligned.samples[i] = noise.samples[i % noise.samples.size()];

    const double p_clean = mean_power(clean);
    const double p_noise = mean_power(aligned);
    if (p_clean <= 0.0) throw std::invalid_argument("mix: clean signal has zero power");
    if (p_noise <= 0.0) throw std::invalid_argument("mix: noise signal has zero power");

    const double gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));

    MixResult out;
    out.scaled_noise.sample_rate_hz = clean.sample_rate_hz;
    out.scaled_noise.samples.resize(len);
    out.noisy.sample_rate_hz = clean.sample_rate_hz;
    out.noisy.samples.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        const double y = gain * aligned.samples[i];
        out.scaled_noise.samples[i] = y;
        out.noisy.samples[i] = clean.samples[i] + y;
    }
    return out;
}

}  // namespace naaloss
