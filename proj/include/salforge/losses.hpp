#pragma once

#include "salforge/graph.hpp"

namespace salforge::train {

// mean_i (|f_i| - h_i)^2. Invariant to the sign of f (the sign-agnostic
// property); abs uses the 0-subgradient rule at 0.
template <typename S>
ad::Value<S> sal_loss(ad::Graph<S>& g, const ad::Value<S>& f, const ad::Value<S>& h) {
    return g.mean_all(g.square(g.sub(g.abs(f), h)));
}

// KL( N(mu, diag exp eta) || N(0, I) ) = 1/2 sum_j (exp eta_j + mu_j^2 - 1 - eta_j).
template <typename S>
ad::Value<S> kl_loss(ad::Graph<S>& g, const ad::Value<S>& mu, const ad::Value<S>& eta) {
    const auto& shape = mu.shape();
    const ad::Value<S> ones =
        g.constant(shape, std::vector<S>(static_cast<std::size_t>(ad::numel(shape)), S(1)));
    const ad::Value<S> lhs = g.add(g.exp(eta), g.square(mu));
    const ad::Value<S> rhs = g.add(ones, eta);
    return g.scale(g.sum_all(g.sub(lhs, rhs)), S(0.5));
}

template <typename S>
ad::Value<S> total_loss(ad::Graph<S>& g, const ad::Value<S>& f, const ad::Value<S>& h,
                        const ad::Value<S>& mu, const ad::Value<S>& eta, S lambda) {
    return g.add(sal_loss(g, f, h), g.scale(kl_loss(g, mu, eta), lambda));
}

}  // namespace salforge::train
