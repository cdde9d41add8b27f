#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "naaloss/audio.hpp"
#include "naaloss/mask_model.hpp"
#include "naaloss/stft.hpp"

namespace naaloss {

enum class DistanceMetric { l1, l2_squared_mean };
enum class DistanceDomain { time_waveform, stft_magnitude };

struct DistanceSpec {
    DistanceMetric metric = DistanceMetric::l2_squared_mean;
    DistanceDomain domain = DistanceDomain::time_waveform;
};

struct LossWeights {
    double alpha = 0.1;
    double beta = 0.1;
};

inline void validate_weights(const LossWeights& w) {
    if (!(w.alpha >= 0.0 && w.alpha <= 1.0) || !(w.beta >= 0.0 && w.beta <= 1.0))
        throw std::invalid_argument("loss: alpha and beta must lie in [0,1]");
    if (w.alpha + w.beta > 1.0)
        throw std::invalid_argument("loss: alpha + beta must not exceed 1");
}

// alpha: condition-invariant artifacts, a single theta for every input
// condition. beta: clean- and multi-conditioned artifacts modeled
// individually as theta_c and theta_m.
enum class ArtifactOption { alpha, beta };

struct ArtifactDecomposition {
    ArtifactOption option = ArtifactOption::beta;
    AudioClip theta;           // option alpha only
    AudioClip theta_c;         // option beta only
    AudioClip theta_m;         // option beta only
    AudioClip residual_noise;  // f(y) under either option
};

// Splits the three enhancer outputs into artifact and residual-noise terms:
//   alpha: theta    = (f(z) + f(x) - f(y) - 2x) / 2
//   beta:  theta_c  = f(x) - x,   theta_m = f(z) - f(y) - x
// residual_noise = f(y) in both. Under option beta the outputs satisfy
// f(z) = theta_m + residual_noise + x by construction.
inline ArtifactDecomposition decompose(const AudioClip& fx, const AudioClip& fy,
                                       const AudioClip& fz, const AudioClip& x,
                                       ArtifactOption option) {
    require_compatible(fx, x, "decompose");
    require_compatible(fy, x, "decompose");
    require_compatible(fz, x, "decompose");

    ArtifactDecomposition dec;
    dec.option = option;
    dec.residual_noise = fy;
    const std::size_t n = x.samples.size();
    if (option == ArtifactOption::alpha) {
        dec.theta = zeros_like(x);
        for (std::size_t i = 0; i < n; ++i)
            dec.theta.samples[i] =
                0.5 * (fz.samples[i] + fx.samples[i] - fy.samples[i] - 2.0 * x.samples[i]);
    } else {
        dec.theta_c = zeros_like(x);
        dec.theta_m = zeros_like(x);
        for (std::size_t i = 0; i < n; ++i) {
            dec.theta_c.samples[i] = fx.samples[i] - x.samples[i];
            dec.theta_m.samples[i] = fz.samples[i] - fy.samples[i] - x.samples[i];
        }
    }
    return dec;
}

namespace detail {

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline double grid_distance(const std::vector<double>& ma, const std::vector<double>& mb,
                            DistanceMetric metric) {
    const double inv_n = 1.0 / static_cast<double>(ma.size());
    double acc = 0.0;
    if (metric == DistanceMetric::l2_squared_mean) {
        for (std::size_t i = 0; i < ma.size(); ++i) {
            const double r = ma[i] - mb[i];
            acc += r * r;
        }
    } else {
        for (std::size_t i = 0; i < ma.size(); ++i) acc += std::abs(ma[i] - mb[i]);
    }
    return acc * inv_n;
}

}  // namespace detail

// dist(a, b) under the configured metric and feature domain. The STFT
// config is only consulted for the stft_magnitude domain.
inline double distance_value(const AudioClip& a, const AudioClip& b, const DistanceSpec& spec,
                             const StftConfig& stft_cfg) {
    require_compatible(a, b, "distance");
    if (spec.domain == DistanceDomain::time_waveform)
        return detail::grid_distance(a.samples, b.samples, spec.metric);
    const ComplexSpectrogram sa = stft(a, stft_cfg);
    const ComplexSpectrogram sb = stft(b, stft_cfg);
    return detail::grid_distance(magnitudes(sa), magnitudes(sb), spec.metric);
}

// Gradient of distance_value w.r.t. its first argument, as a waveform.
inline std::vector<double> distance_grad_first(const AudioClip& a, const AudioClip& b,
                                               const DistanceSpec& spec,
                                               const StftConfig& stft_cfg) {
    require_compatible(a, b, "distance");
    const std::size_t n = a.samples.size();
    if (spec.domain == DistanceDomain::time_waveform) {
        std::vector<double> g(n);
        const double inv_n = 1.0 / static_cast<double>(n);
        if (spec.metric == DistanceMetric::l2_squared_mean) {
            for (std::size_t i = 0; i < n; ++i)
                g[i] = 2.0 * (a.samples[i] - b.samples[i]) * inv_n;
        } else {
            for (std::size_t i = 0; i < n; ++i)
                g[i] = detail::sign_of(a.samples[i] - b.samples[i]) * inv_n;
        }
        return g;
    }
    const ComplexSpectrogram sa = stft(a, stft_cfg);
    const ComplexSpectrogram sb = stft(b, stft_cfg);
    const std::vector<double> ma = magnitudes(sa);
    const std::vector<double> mb = magnitudes(sb);
    const double inv_n = 1.0 / static_cast<double>(ma.size());
    std::vector<std::complex<double>> g_grid(sa.values.size());
    for (std::size_t i = 0; i < ma.size(); ++i) {
        const double g_mag = spec.metric == DistanceMetric::l2_squared_mean
                                 ? 2.0 * (ma[i] - mb[i]) * inv_n
                                 : detail::sign_of(ma[i] - mb[i]) * inv_n;
        // d|A|/dA is the unit phasor; leave exact zeros alone
        g_grid[i] = ma[i] > 0.0 ? sa.values[i] * (g_mag / ma[i]) : std::complex<double>{0.0, 0.0};
    }
    return stft_adjoint(g_grid, sa.frames, stft_cfg, n);
}

inline double loss_estim(const AudioClip& fz, const AudioClip& x, const DistanceSpec& spec,
                         const StftConfig& stft_cfg) {
    return distance_value(fz, x, spec, stft_cfg);
}

inline double loss_deatf(const ArtifactDecomposition& dec, const DistanceSpec& spec,
                         const StftConfig& stft_cfg) {
    if (dec.option == ArtifactOption::alpha)
        return distance_value(dec.theta, zeros_like(dec.theta), spec, stft_cfg);
    return distance_value(dec.theta_c, zeros_like(dec.theta_c), spec, stft_cfg) +
           distance_value(dec.theta_m, zeros_like(dec.theta_m), spec, stft_cfg);
}

inline double loss_ignor(const AudioClip& fy, const DistanceSpec& spec,
                         const StftConfig& stft_cfg) {
    return distance_value(fy, zeros_like(fy), spec, stft_cfg);
}

inline double naaloss_total(double l_estim, double l_deatf, double l_ignor,
                            const LossWeights& w) {
    validate_weights(w);
    return (1.0 - w.alpha - w.beta) * l_estim + w.alpha * l_deatf + w.beta * l_ignor;
}

struct NaaLossResult {
    double value = 0.0;
    double l_estim = 0.0;
    double l_deatf = 0.0;
    double l_ignor = 0.0;
    ParamGradients grads;
    ArtifactDecomposition decomposition;
};

namespace detail {

inline void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline void accumulate(ParamGradients& acc, const ParamGradients& addend) {
    for (std::size_t l = 0; l < acc.size(); ++l) {
        for (std::size_t i = 0; i < acc[l].w.data.size(); ++i)
            acc[l].w.data[i] += addend[l].w.data[i];
        for (std::size_t i = 0; i < acc[l].b.size(); ++i) acc[l].b[i] += addend[l].b[i];
    }
}

}  // namespace detail

// Runs the enhancer on x, y and z, assembles L_NAa and its exact parameter
// gradients through all three forward passes, and returns the artifact
// decomposition as a by-product. Loss terms with an exactly zero weight are
// skipped structurally: they contribute neither values to the total nor
// gradient terms, so degenerate weights reproduce the reduced objective
// bit-for-bit.
inline NaaLossResult naaloss_value_and_grad(const MaskModelParams& params, const AudioClip& x,
                                            const AudioClip& y, const AudioClip& z,
                                            ArtifactOption option, const LossWeights& w,
                                            const DistanceSpec& dist) {
    validate_weights(w);
    require_compatible(x, y, "loss triple");
    require_compatible(x, z, "loss triple");
    double max_dev = 0.0;
    for (std::size_t i = 0; i < x.samples.size(); ++i)
        max_dev = std::max(max_dev, std::abs(z.samples[i] - x.samples[i] - y.samples[i]));
    if (max_dev > 1e-9)
        throw std::invalid_argument("loss: triple inconsistency, max |z - x - y| = " +
                                    std::to_string(max_dev));
    if (mean_power(y) <= 0.0)
        throw std::invalid_argument("loss: pure-noise hypothesis requires nonzero noise y");

    const StftConfig& stft_cfg = params.config.stft;
    ForwardResult pass_x = forward(params, x);
    ForwardResult pass_y = forward(params, y);
    ForwardResult pass_z = forward(params, z);
    const AudioClip& fx = pass_x.enhanced;
    const AudioClip& fy = pass_y.enhanced;
    const AudioClip& fz = pass_z.enhanced;

    NaaLossResult out;
    out.decomposition = decompose(fx, fy, fz, x, option);
    out.l_estim = loss_estim(fz, x, dist, stft_cfg);
    out.l_deatf = loss_deatf(out.decomposition, dist, stft_cfg);
    out.l_ignor = loss_ignor(fy, dist, stft_cfg);

    const double w_estim = 1.0 - w.alpha - w.beta;
    out.value = 0.0;
    if (w_estim > 0.0) out.value += w_estim * out.l_estim;
    if (w.alpha > 0.0) out.value += w.alpha * out.l_deatf;
    if (w.beta > 0.0) out.value += w.beta * out.l_ignor;
    if (!std::isfinite(out.value)) throw std::runtime_error("loss: non-finite loss value");

    const std::size_t n = x.samples.size();
    std::vector<double> gx(n, 0.0), gy(n, 0.0), gz(n, 0.0);
    bool need_x = false, need_y = false, need_z = false;

    if (w_estim > 0.0) {
        detail::axpy(gz, w_estim, distance_grad_first(fz, x, dist, stft_cfg));
        need_z = true;
    }
    if (w.alpha > 0.0) {
        if (option == ArtifactOption::alpha) {
            const std::vector<double> gt = distance_grad_first(
                out.decomposition.theta, zeros_like(out.decomposition.theta), dist, stft_cfg);
            detail::axpy(gz, 0.5 * w.alpha, gt);
            detail::axpy(gx, 0.5 * w.alpha, gt);
            detail::axpy(gy, -0.5 * w.alpha, gt);
        } else {
            const std::vector<double> gtc = distance_grad_first(
                out.decomposition.theta_c, zeros_like(out.decomposition.theta_c), dist, stft_cfg);
            detail::axpy(gx, w.alpha, gtc);
            const std::vector<double> gtm = distance_grad_first(
                out.decomposition.theta_m, zeros_like(out.decomposition.theta_m), dist, stft_cfg);
            detail::axpy(gz, w.alpha, gtm);
            detail::axpy(gy, -w.alpha, gtm);
        }
        need_x = need_y = need_z = true;
    }
    if (w.beta > 0.0) {
        detail::axpy(gy, w.beta, distance_grad_first(fy, zeros_like(fy), dist, stft_cfg));
        need_y = true;
    }

    out.grads = zero_gradients(params);
    if (need_x) detail::accumulate(out.grads, vjp(params, pass_x.cache, gx));
    if (need_y) detail::accumulate(out.grads, vjp(params, pass_y.cache, gy));
    if (need_z) detail::accumulate(out.grads, vjp(params, pass_z.cache, gz));
    return out;
}

}  // namespace naaloss
