#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "salforge/config.hpp"
#include "salforge/nn.hpp"

namespace salforge::train {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// First/second moment buffers aligned with ModelParams registration order.
template <typename S>
struct AdamState {
    std::int64_t t = 0;
    std::vector<std::vector<S>> m;
    std::vector<std::vector<S>> v;

    void init_like(const nn::ModelParams<S>& params) {
        t = 0;
        m.assign(params.size(), {});
        v.assign(params.size(), {});
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i].assign(params.tensor(i).data.size(), S(0));
            v[i].assign(params.tensor(i).data.size(), S(0));
        }
    }
};

// Bias-corrected Adam update from the gradients accumulated in params. An
// empty grad buffer counts as zero gradient (the step still advances t).
template <typename S>
void adam_step(nn::ModelParams<S>& params, AdamState<S>& state, S lr) {
    if (state.m.size() != params.size())
        throw ShapeError("adam_step: state has " + std::to_string(state.m.size()) +
                         " tensors, params have " + std::to_string(params.size()));
    state.t += 1;
    const S c1 = static_cast<S>(1.0 / (1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t))));
    const S c2 = static_cast<S>(1.0 / (1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t))));
    const S b1 = static_cast<S>(kAdamBeta1), b2 = static_cast<S>(kAdamBeta2);
    const S eps = static_cast<S>(kAdamEps);
    for (std::size_t i = 0; i < params.size(); ++i) {
        ad::Tensor<S>& p = params.tensor(i);
        if (state.m[i].size() != p.data.size())
            throw ShapeError("adam_step: moment shape mismatch on '" + params.name(i) + "'");
        const bool has_grad = p.grad.size() == p.data.size();
        S* m = state.m[i].data();
        S* v = state.v[i].data();
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            const S g = has_grad ? p.grad[j] : S(0);
            m[j] = b1 * m[j] + (S(1) - b1) * g;
            v[j] = b2 * v[j] + (S(1) - b2) * g * g;
            const S mhat = m[j] * c1;
            const S vhat = v[j] * c2;
            p.data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

// lr0 * factor^floor(epoch / period); non-increasing in epoch.
inline double lr_at(std::int64_t epoch, const TrainConfig& config) {
    return config.lr0 *
           std::pow(config.schedule_factor, static_cast<double>(epoch / config.schedule_period));
}

}  // namespace salforge::train
