#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "naaloss/audio.hpp"
#include "naaloss/fft.hpp"
#include "naaloss/resample.hpp"

namespace naaloss {

struct WerRecord {
    std::string system_label;  // uc | org | naa
    std::string am_label;
    double wer_percent = 0.0;
};

struct MetricReport {
    double si_snr_db = 0.0;
    double stoi = 0.0;
    double artifact_energy_db = 0.0;
    double residual_noise_energy_db = 0.0;
};

// Scale-invariant SNR: project est onto ref, then the power ratio of the
// projection to the residual in dB. Capped to [-100, +100] dB.
inline double si_snr(const AudioClip& est, const AudioClip& ref) {
    require_compatible(est, ref, "si_snr");
    double ref_energy = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < ref.samples.size(); ++i) {
        ref_energy += ref.samples[i] * ref.samples[i];
        dot += est.samples[i] * ref.samples[i];
    }
    if (ref_energy <= 0.0) throw std::invalid_argument("metrics: si_snr reference is zero");
    const double coeff = dot / ref_energy;
    double target_energy = 0.0, residual_energy = 0.0;
    for (std::size_t i = 0; i < ref.samples.size(); ++i) {
        const double s = coeff * ref.samples[i];
        const double e = est.samples[i] - s;
        target_energy += s * s;
        residual_energy += e * e;
    }
    if (residual_energy <= 0.0) return 100.0;
    if (target_energy <= 0.0) return -100.0;
    return std::clamp(10.0 * std::log10(target_energy / residual_energy), -100.0, 100.0);
}

// 10*log10(mean squared sample), floored at -120 dB.
inline double signal_energy_db(const AudioClip& clip) {
    validate_clip(clip);
    const double p = mean_power(clip);
    if (p <= 0.0) return -120.0;
    return std::max(-120.0, 10.0 * std::log10(p));
}

// Relative WER reduction over (unprocessed, original-SE, NAaLoss-SE) WERs.
// May exceed 100% or go negative; reported as-is.
inline double werr(double wer_uc, double wer_org, double wer_naa) {
    if (!(std::isfinite(wer_uc) && std::isfinite(wer_org) && std::isfinite(wer_naa)))
        throw std::invalid_argument("metrics: WER values must be finite");
    if (wer_org == wer_uc)
        throw std::invalid_argument("metrics: werr undefined when wer_org equals wer_uc");
    return (1.0 - (wer_naa - wer_uc) / (wer_org - wer_uc)) * 100.0;
}

// Observation adding: fz + coeff*z, computed exactly elementwise.
inline AudioClip observation_add(const AudioClip& fz, const AudioClip& z, double coeff = 0.5) {
    require_compatible(fz, z, "observation_add");
    AudioClip out = fz;
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = fz.samples[i] + coeff * z.samples[i];
    return out;
}

namespace detail {

struct StoiFrames {
    std::vector<std::vector<double>> frames;  // windowed time frames
};

constexpr int kStoiRate = 10000;
constexpr int kStoiFrame = 256;
constexpr int kStoiHop = 128;
constexpr int kStoiBands = 15;
constexpr int kStoiSegment = 30;
constexpr double kStoiDynRange = 40.0;
constexpr double kStoiBeta = -15.0;  // lower signal-to-distortion bound, dB

inline std::vector<double> stoi_window() {
    std::vector<double> w(kStoiFrame);
    for (int i = 0; i < kStoiFrame; ++i)
        w[static_cast<std::size_t>(i)] =
            0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / static_cast<double>(kStoiFrame));
    return w;
}

// Frame both signals, drop frames whose reference energy falls more than
// 40 dB below the loudest reference frame, and overlap-add the kept
// windowed frames back into dense signals.
inline void remove_silent_frames(const std::vector<double>& x, const std::vector<double>& y,
                                 std::vector<double>& x_out, std::vector<double>& y_out) {
    const std::vector<double> w = stoi_window();
    const std::size_t n = x.size();
    if (n < kStoiFrame) throw std::invalid_argument("metrics: signal too short for STOI");
    const std::size_t count = (n - kStoiFrame) / kStoiHop + 1;

    std::vector<double> energy_db(count);
    double max_db = -1e300;
    for (std::size_t m = 0; m < count; ++m) {
        double e = 0.0;
        for (int i = 0; i < kStoiFrame; ++i) {
            const double v = w[static_cast<std::size_t>(i)] * x[m * kStoiHop + i];
            e += v * v;
        }
        energy_db[m] = 10.0 * std::log10(e + 1e-300);
        max_db = std::max(max_db, energy_db[m]);
    }

    std::vector<std::size_t> kept;
    for (std::size_t m = 0; m < count; ++m)
        if (energy_db[m] > max_db - kStoiDynRange) kept.push_back(m);
    if (kept.empty()) throw std::invalid_argument("metrics: all frames silent in STOI input");

    const std::size_t out_len = (kept.size() - 1) * kStoiHop + kStoiFrame;
    x_out.assign(out_len, 0.0);
    y_out.assign(out_len, 0.0);
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const std::size_t src = kept[j] * kStoiHop;
        const std::size_t dst = j * kStoiHop;
        for (int i = 0; i < kStoiFrame; ++i) {
            x_out[dst + i] += w[static_cast<std::size_t>(i)] * x[src + i];
            y_out[dst + i] += w[static_cast<std::size_t>(i)] * y[src + i];
        }
    }
}

// One-third octave band magnitudes from a 256-point Hann STFT at 10 kHz.
inline std::vector<std::vector<double>> third_octave_bands(const std::vector<double>& sig) {
    const std::vector<double> w = stoi_window();
    const std::size_t count = sig.size() >= kStoiFrame ? (sig.size() - kStoiFrame) / kStoiHop + 1 : 0;
    if (count == 0) throw std::invalid_argument("metrics: signal too short for STOI");

    // band edges: centers 150*2^(j/3), half-third-octave each side
    std::vector<std::pair<int, int>> band_bins(kStoiBands);
    const double bin_hz = static_cast<double>(kStoiRate) / kStoiFrame;
    for (int j = 0; j < kStoiBands; ++j) {
        const double cf = 150.0 * std::pow(2.0, j / 3.0);
        const double lo = cf / std::pow(2.0, 1.0 / 6.0);
        const double hi = cf * std::pow(2.0, 1.0 / 6.0);
        int k_lo = static_cast<int>(std::ceil(lo / bin_hz));
        int k_hi = static_cast<int>(std::ceil(hi / bin_hz));  // exclusive
        k_lo = std::clamp(k_lo, 0, kStoiFrame / 2 + 1);
        k_hi = std::clamp(k_hi, k_lo + 1, kStoiFrame / 2 + 1);
        band_bins[static_cast<std::size_t>(j)] = {k_lo, k_hi};
    }

    std::vector<std::vector<double>> bands(kStoiBands, std::vector<double>(count, 0.0));
    std::vector<cplx> buf(kStoiFrame);
    for (std::size_t m = 0; m < count; ++m) {
        for (int i = 0; i < kStoiFrame; ++i)
            buf[static_cast<std::size_t>(i)] =
                cplx{w[static_cast<std::size_t>(i)] * sig[m * kStoiHop + i], 0.0};
        fft_inplace(buf, false);
        for (int j = 0; j < kStoiBands; ++j) {
            double e = 0.0;
            for (int k = band_bins[static_cast<std::size_t>(j)].first;
                 k < band_bins[static_cast<std::size_t>(j)].second; ++k)
                e += std::norm(buf[static_cast<std::size_t>(k)]);
            bands[static_cast<std::size_t>(j)][m] = std::sqrt(e);
        }
    }
    return bands;
}

}  // namespace detail

// Short-time objective intelligibility: resample to 10 kHz, drop silent
// frames (keyed on the reference), 15 one-third-octave band envelopes from
// a 256-point Hann STFT at 50% overlap, 30-frame segments with per-segment
// normalization and a -15 dB distortion clip, averaged correlation.
inline double stoi(const AudioClip& est, const AudioClip& ref) {
    require_compatible(est, ref, "stoi");
    if (ref.duration_s() < 0.5)
        throw std::invalid_argument("metrics: STOI needs at least 0.5 s of signal");

    const AudioClip ref10 = resample(ref, detail::kStoiRate);
    const AudioClip est10 = resample(est, detail::kStoiRate);

    std::vector<double> x_sil, y_sil;
    detail::remove_silent_frames(ref10.samples, est10.samples, x_sil, y_sil);

    const auto xb = detail::third_octave_bands(x_sil);
    const auto yb = detail::third_octave_bands(y_sil);
    const std::size_t count = xb[0].size();
    if (count < detail::kStoiSegment)
        throw std::invalid_argument("metrics: too few frames for STOI segments");

    const double clip_gain = 1.0 + std::pow(10.0, -detail::kStoiBeta / 20.0);
    double acc = 0.0;
    std::size_t cells = 0;
    std::vector<double> xs(detail::kStoiSegment), ys(detail::kStoiSegment);
    for (std::size_t m = detail::kStoiSegment - 1; m < count; ++m) {
        for (int j = 0; j < detail::kStoiBands; ++j) {
            double x_norm2 = 0.0, y_norm2 = 0.0;
            for (int i = 0; i < detail::kStoiSegment; ++i) {
                xs[static_cast<std::size_t>(i)] =
                    xb[static_cast<std::size_t>(j)][m - detail::kStoiSegment + 1 + i];
                ys[static_cast<std::size_t>(i)] =
                    yb[static_cast<std::size_t>(j)][m - detail::kStoiSegment + 1 + i];
                x_norm2 += xs[static_cast<std::size_t>(i)] * xs[static_cast<std::size_t>(i)];
                y_norm2 += ys[static_cast<std::size_t>(i)] * ys[static_cast<std::size_t>(i)];
            }
            const double alpha = y_norm2 > 0.0 ? std::sqrt(x_norm2 / y_norm2) : 0.0;
            double xm = 0.0, ym = 0.0;
            for (int i = 0; i < detail::kStoiSegment; ++i) {
                ys[static_cast<std::size_t>(i)] = std::min(
                    alpha * ys[static_cast<std::size_t>(i)],
                    xs[static_cast<std::size_t>(i)] * clip_gain);
                xm += xs[static_cast<std::size_t>(i)];
                ym += ys[static_cast<std::size_t>(i)];
            }
            xm /= detail::kStoiSegment;
            ym /= detail::kStoiSegment;
            double vxx = 0.0, vyy = 0.0, vxy = 0.0;
            for (int i = 0; i < detail::kStoiSegment; ++i) {
                const double dx = xs[static_cast<std::size_t>(i)] - xm;
                const double dy = ys[static_cast<std::size_t>(i)] - ym;
                vxx += dx * dx;
                vyy += dy * dy;
                vxy += dx * dy;
            }
            double d;
            if (vxx < 1e-20 && vyy < 1e-20)
                d = 1.0;  // both silent: identical envelopes
            else if (vxx < 1e-20 || vyy < 1e-20)
                d = 0.0;
            else
                d = vxy / std::sqrt(vxx * vyy);
            acc += d;
            ++cells;
        }
    }
    return acc / static_cast<double>(cells);
}

}  // namespace naaloss
