#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace naaloss::detail {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

struct Pow2Plan {
    std::size_t n = 0;
    std::vector<cplx> roots;            // e^{-2*pi*i*k/n}, k < n/2
    std::vector<std::uint32_t> bitrev;
};

inline const Pow2Plan& pow2_plan(std::size_t n) {
    thread_local std::unordered_map<std::size_t, Pow2Plan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    Pow2Plan plan;
    plan.n = n;
    plan.roots.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        plan.roots[k] = std::polar(1.0, ang);
    }
    plan.bitrev.resize(n);
    std::size_t log2n = 0;
    while ((std::size_t{1} << log2n) < n) ++log2n;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < log2n; ++b)
            if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
        plan.bitrev[i] = static_cast<std::uint32_t>(r);
    }
    return cache.emplace(n, std::move(plan)).first->second;
}

// In-place radix-2 transform; no scaling in either direction. Forward uses
// e^{-2*pi*i*kn/N}; inverse=true conjugates the twiddles (unscaled inverse).
inline void fft_pow2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    const Pow2Plan& plan = pow2_plan(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = plan.bitrev[i];
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                cplx w = plan.roots[j * stride];
                if (inverse) w = std::conj(w);
                cplx u = a[i + j];
                cplx v = a[i + j + half] * w;
                a[i + j] = u + v;
                a[i + j + half] = u - v;
            }
        }
    }
}

struct BluesteinPlan {
    std::size_t n = 0, m = 0;
    std::vector<cplx> chirp;      // e^{-i*pi*k^2/n} (forward sign)
    std::vector<cplx> kernel_fft; // FFT of the chirp convolution kernel
};

inline const BluesteinPlan& bluestein_plan(std::size_t n) {
    thread_local std::unordered_map<std::size_t, BluesteinPlan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    BluesteinPlan plan;
    plan.n = n;
    plan.m = next_pow2(2 * n - 1);
    plan.chirp.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the twiddle angle small for numerical accuracy
        std::uint64_t q = (static_cast<std::uint64_t>(k) * k) % (2 * n);
        double ang = -std::numbers::pi * static_cast<double>(q) / static_cast<double>(n);
        plan.chirp[k] = std::polar(1.0, ang);
    }
    std::vector<cplx> kernel(plan.m, cplx{0.0, 0.0});
    kernel[0] = std::conj(plan.chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
        kernel[k] = std::conj(plan.chirp[k]);
        kernel[plan.m - k] = std::conj(plan.chirp[k]);
    }
    fft_pow2(kernel, false);
    plan.kernel_fft = std::move(kernel);
    return cache.emplace(n, std::move(plan)).first->second;
}

inline void fft_bluestein(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    const BluesteinPlan& plan = bluestein_plan(n);
    std::vector<cplx> u(plan.m, cplx{0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) {
        cplx c = inverse ? std::conj(plan.chirp[k]) : plan.chirp[k];
        u[k] = a[k] * c;
    }
    fft_pow2(u, false);
    if (inverse) {
        for (std::size_t k = 0; k < plan.m; ++k) u[k] *= std::conj(plan.kernel_fft[k]);
        // conj(kernel_fft) is the FFT of the conjugated kernel only because the
        // kernel is symmetric; both hold here.
    } else {
        for (std::size_t k = 0; k < plan.m; ++k) u[k] *= plan.kernel_fft[k];
    }
    fft_pow2(u, true);
    const double scale = 1.0 / static_cast<double>(plan.m);
    for (std::size_t k = 0; k < n; ++k) {
        cplx c = inverse ? std::conj(plan.chirp[k]) : plan.chirp[k];
        a[k] = u[k] * scale * c;
    }
}

// Unscaled DFT of any length: forward e^{-2*pi*i*kn/N}, inverse e^{+...}.
inline void fft_inplace(std::vector<cplx>& a, bool inverse) {
    if (a.size() <= 1) return;
    if (is_pow2(a.size()))
        fft_pow2(a, inverse);
    else
        fft_bluestein(a, inverse);
}

}  // namespace naaloss::detail
