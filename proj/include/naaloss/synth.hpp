#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "naaloss/audio.hpp"
#include "naaloss/mask_model.hpp"  // detail::sub_seed / uniform01
#include "naaloss/mixing.hpp"
#include "naaloss/wav.hpp"

namespace naaloss {

enum class SyntheticKind { speechlike, whitenoise, babblelike };

namespace detail {

// Exact-peak normalization: dividing by the peak first makes the maximal
// sample land exactly on +/-0.5 after the halving.
inline void peak_normalize_half(std::vector<double>& samples) {
    double peak = 0.0;
    for (double s : samples) peak = std::max(peak, std::abs(s));
    if (peak <= 0.0) return;
    for (double& s : samples) s = (s / peak) * 0.5;
}

inline std::vector<double> speechlike_samples(std::size_t count, int rate, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto u = [&] { return uniform01(rng); };

    const double f0 = 90.0 + 150.0 * u();
    const double drift_rate = 0.3 + 0.7 * u();           // Hz
    const double drift_depth = 0.03 * u();               // relative pitch wobble
    const double formants[3] = {300.0 + 500.0 * u(), 900.0 + 900.0 * u(), 2000.0 + 1000.0 * u()};
    const double widths[3] = {80.0 + 120.0 * u(), 100.0 + 150.0 * u(), 150.0 + 200.0 * u()};
    const double env_rate1 = 1.5 + 2.0 * u();
    const double env_rate2 = 2.0 + 3.0 * u();
    const double env_phase1 = 2.0 * std::numbers::pi * u();
    const double env_phase2 = 2.0 * std::numbers::pi * u();
    const double drift_phase = 2.0 * std::numbers::pi * u();

    // Harmonic stack capped below 4 kHz so the band constraint holds even
    // with the pitch drift.
    const int n_harm = std::max(1, static_cast<int>(3700.0 / f0));
    std::vector<double> amp(static_cast<std::size_t>(n_harm));
    std::vector<double> phase_offset(static_cast<std::size_t>(n_harm));
    for (int h = 1; h <= n_harm; ++h) {
        const double freq = h * f0;
        double gain = 0.05;
        for (int j = 0; j < 3; ++j) {
            const double d = (freq - formants[j]) / widths[j];
            gain += std::exp(-0.5 * d * d);
        }
        amp[static_cast<std::size_t>(h - 1)] = gain / std::sqrt(static_cast<double>(h));
        phase_offset[static_cast<std::size_t>(h - 1)] = 2.0 * std::numbers::pi * u();
    }

    std::vector<double> out(count);
    double phase = 0.0;  // running fundamental phase
    const double dt = 1.0 / static_cast<double>(rate);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double inst_f0 =
            f0 * (1.0 + drift_depth * std::sin(2.0 * std::numbers::pi * drift_rate * t + drift_phase));
        phase += 2.0 * std::numbers::pi * inst_f0 * dt;
        const double env =
            0.3 + 0.7 * (0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * env_rate1 * t + env_phase1)) *
                      (0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * env_rate2 * t + env_phase2));
        double acc = 0.0;
        for (int h = 1; h <= n_harm; ++h)
            acc += amp[static_cast<std::size_t>(h - 1)] *
                   std::sin(h * phase + phase_offset[static_cast<std::size_t>(h - 1)]);
        out[i] = env * acc;
    }
    peak_normalize_half(out);
    return out;
}

}  // namespace detail

// Deterministic desk-scale stand-ins for a speech/noise corpus. All kinds
// are peak-normalized to 0.5.
inline AudioClip generate_synthetic_clip(SyntheticKind kind, double duration_s,
                                         std::uint64_t seed, int sample_rate_hz = 16000) {
    if (duration_s <= 0.0) throw std::invalid_argument("synth: duration must be positive");
    if (sample_rate_hz <= 0) throw std::invalid_argument("synth: sample rate must be positive");
    const auto count = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(duration_s * sample_rate_hz)));

    AudioClip clip;
    clip.sample_rate_hz = sample_rate_hz;
    switch (kind) {
        case SyntheticKind::speechlike:
            clip.samples = detail::speechlike_samples(count, sample_rate_hz, seed);
            break;
        case SyntheticKind::whitenoise: {
            std::mt19937_64 rng(seed);
            clip.samples.resize(count);
            for (double& s : clip.samples) s = 2.0 * detail::uniform01(rng) - 1.0;
            detail::peak_normalize_half(clip.samples);
            break;
        }
        case SyntheticKind::babblelike: {
            clip.samples.assign(count, 0.0);
            constexpr int kStreams = 6;
            for (int k = 0; k < kStreams; ++k) {
                const auto stream = detail::speechlike_samples(
                    count, sample_rate_hz, detail::sub_seed(seed, static_cast<std::uint64_t>(k)));
                for (std::size_t i = 0; i < count; ++i) clip.samples[i] += stream[i];
            }
            detail::peak_normalize_half(clip.samples);
            break;
        }
    }
    return clip;
}

struct TrainTriple {
    AudioClip x;  // clean
    AudioClip y;  // scaled noise, z = x + y holds exactly
    AudioClip z;  // noisy mixture
    double snr_db = 0.0;
    std::string clean_id;
    std::string noise_id;
};

// Either a directory of mono WAV files or a synthetic generator spec.
struct SourceSpec {
    bool synthetic = true;
    SyntheticKind kind = SyntheticKind::speechlike;
    std::filesystem::path dir;
};

inline SourceSpec parse_source(const std::string& text) {
    SourceSpec spec;
    if (text.rfind("synth:", 0) == 0) {
        const std::string kind = text.substr(6);
        spec.synthetic = true;
        if (kind == "speechlike")
            spec.kind = SyntheticKind::speechlike;
        else if (kind == "whitenoise")
            spec.kind = SyntheticKind::whitenoise;
        else if (kind == "babblelike")
            spec.kind = SyntheticKind::babblelike;
        else
            throw std::invalid_argument("config: unknown synthetic kind '" + kind + "'");
        return spec;
    }
    spec.synthetic = false;
    spec.dir = text;
    return spec;
}

namespace detail {

inline std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("data: corpus directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".wav")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("data: empty corpus: " + dir.string());
    return files;
}

template <typename T>
inline void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng() % i]);
}

struct SourceDraw {
    AudioClip clip;
    std::string id;
};

inline SourceDraw draw_source(const SourceSpec& spec,
                              const std::vector<std::filesystem::path>& files, std::size_t index,
                              std::uint64_t seed, int rate, double duration_s) {
    if (spec.synthetic) {
        const char* names[] = {"speechlike", "whitenoise", "babblelike"};
        return {generate_synthetic_clip(spec.kind, duration_s, seed, rate),
                std::string("synth:") + names[static_cast<int>(spec.kind)] + ":" +
                    std::to_string(seed)};
    }
    const std::filesystem::path& path = files[index % files.size()];
    return {read_wav(path), path.filename().string()};
}

}  // namespace detail

// SNR values are assigned round-robin from snr_list, so each appears
// count/|snr_list| times up to rounding. Deterministic for a fixed seed.
inline std::vector<TrainTriple> synthesize_dataset(const SourceSpec& clean_source,
                                                   const SourceSpec& noise_source,
                                                   const std::vector<double>& snr_list,
                                                   std::size_t count, std::uint64_t seed,
                                                   int sample_rate_hz = 16000,
                                                   double duration_s = 1.0) {
    if (snr_list.empty()) throw std::invalid_argument("data: snr_list must be nonempty");
    if (count == 0) throw std::invalid_argument("data: count must be positive");

    std::vector<std::filesystem::path> clean_files, noise_files;
    if (!clean_source.synthetic) {
        clean_files = detail::list_wavs(clean_source.dir);
        detail::seeded_shuffle(clean_files, detail::sub_seed(seed, 0xc1ea0));
    }
    if (!noise_source.synthetic) {
        noise_files = detail::list_wavs(noise_source.dir);
        detail::seeded_shuffle(noise_files, detail::sub_seed(seed, 0x0153));
    }

    std::vector<TrainTriple> triples;
    triples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double snr = snr_list[i % snr_list.size()];
        auto clean = detail::draw_source(clean_source, clean_files, i,
                                         detail::sub_seed(seed, 2 * i), sample_rate_hz, duration_s);
        auto noise = detail::draw_source(noise_source, noise_files, i,
                                         detail::sub_seed(seed, 2 * i + 1), sample_rate_hz,
                                         duration_s);
        MixResult mix = mix_at_snr(clean.clip, noise.clip, snr);
        TrainTriple triple;
        triple.x = std::move(clean.clip);
        triple.y = std::move(mix.scaled_noise);
        triple.z = std::move(mix.noisy);
        triple.snr_db = snr;
        triple.clean_id = std::move(clean.id);
        triple.noise_id = std::move(noise.id);
        triples.push_back(std::move(triple));
    }
    return triples;
}

}  // namespace naaloss
