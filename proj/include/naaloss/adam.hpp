#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "naaloss/mask_model.hpp"

namespace naaloss {

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step_count = 0;
    ParamGradients m;  // first-moment accumulators, shaped like the params
    ParamGradients v;  // second-moment accumulators
};

inline AdamState init_adam_state(const MaskModelParams& params, double lr = 1e-3,
                                 double beta1 = 0.9, double beta2 = 0.999,
                                 double epsilon = 1e-8) {
    AdamState st;
    st.lr = lr;
    st.beta1 = beta1;
    st.beta2 = beta2;
    st.epsilon = epsilon;
    st.m = zero_gradients(params);
    st.v = zero_gradients(params);
    return st;
}

namespace detail {

inline void require_same_shape(const ParamGradients& a, const std::vector<LayerTensors>& b,
                               const char* what) {
    if (a.size() != b.size()) throw std::invalid_argument(std::string("adam: ") + what);
    for (std::size_t l = 0; l < a.size(); ++l)
        if (a[l].w.rows != b[l].w.rows || a[l].w.cols != b[l].w.cols ||
            a[l].b.size() != b[l].b.size())
            throw std::invalid_argument(std::string("adam: ") + what);
}

}  // namespace detail

// Standard bias-corrected Adam update; pure, returns new values.
inline std::pair<MaskModelParams, AdamState> adam_step(const MaskModelParams& params,
                                                       const ParamGradients& grads,
                                                       const AdamState& state) {
    detail::require_same_shape(grads, params.layers, "gradient shape mismatch");
    detail::require_same_shape(state.m, params.layers, "optimizer state shape mismatch");
    for (const LayerTensors& g : grads) {
        for (double x : g.w.data)
            if (!std::isfinite(x)) throw std::invalid_argument("adam: non-finite gradient");
        for (double x : g.b)
            if (!std::isfinite(x)) throw std::invalid_argument("adam: non-finite gradient");
    }

    MaskModelParams new_params = params;
    AdamState st = state;
    st.step_count += 1;
    const double t = static_cast<double>(st.step_count);
    const double bc1 = 1.0 - std::pow(st.beta1, t);
    const double bc2 = 1.0 - std::pow(st.beta2, t);

    auto update = [&](double& p, double& m, double& v, double g) {
        m = st.beta1 * m + (1.0 - st.beta1) * g;
        v = st.beta2 * v + (1.0 - st.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        p -= st.lr * m_hat / (std::sqrt(v_hat) + st.epsilon);
    };

    for (std::size_t l = 0; l < new_params.layers.size(); ++l) {
        LayerTensors& pl = new_params.layers[l];
        for (std::size_t i = 0; i < pl.w.data.size(); ++i)
            update(pl.w.data[i], st.m[l].w.data[i], st.v[l].w.data[i], grads[l].w.data[i]);
        for (std::size_t i = 0; i < pl.b.size(); ++i)
            update(pl.b[i], st.m[l].b[i], st.v[l].b[i], grads[l].b[i]);
    }
    return {std::move(new_params), std::move(st)};
}

}  // namespace naaloss
