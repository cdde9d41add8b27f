#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace naaloss {

// Mono time-domain signal. Samples are dimensionless amplitudes, nominally
// in [-1, 1]; all internal math is double precision.
struct AudioClip {
    std::vector<double> samples;
    int sample_rate_hz = 0;

    std::size_t size() const { return samples.size(); }
    double duration_s() const {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

inline void validate_clip(const AudioClip& clip, const std::string& what = "clip") {
    if (clip.sample_rate_hz <= 0)
        throw std::invalid_argument("audio: " + what + " has non-positive sample rate");
    if (clip.samples.empty())
        throw std::invalid_argument("audio: " + what + " is empty");
    for (double s : clip.samples)
        if (!std::isfinite(s))
            throw std::invalid_argument("audio: " + what + " contains non-finite samples");
}

inline double mean_power(const AudioClip& clip) {
    double acc = 0.0;
    for (double s : clip.samples) acc += s * s;
    return acc / static_cast<double>(clip.samples.size());
}

inline double peak_abs(const AudioClip& clip) {
    double peak = 0.0;
    for (double s : clip.samples) peak = std::max(peak, std::abs(s));
    return peak;
}

inline AudioClip zeros_like(const AudioClip& clip) {
    return AudioClip{std::vector<double>(clip.samples.size(), 0.0), clip.sample_rate_hz};
}

inline void require_compatible(const AudioClip& a, const AudioClip& b, const std::string& what) {
    if (a.sample_rate_hz != b.sample_rate_hz)
        throw std::invalid_argument("audio: sample-rate mismatch in " + what);
    if (a.samples.size() != b.samples.size())
        throw std::invalid_argument("audio: length mismatch in " + what);
}

}  // namespace naaloss
