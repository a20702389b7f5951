#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "salforge/graph.hpp"
#include "salforge/tensor.hpp"

namespace salforge::ad {

// Central-difference gradient check, double precision. `f` must build a
// scalar value from its input leaf. Returns the worst component error
//   max_i |analytic_i - cd_i| / max(1, |cd_i|)
// so absolute error is reported near zero and relative error at scale.
inline double gradcheck(const std::function<Value<double>(Graph<double>&, const Value<double>&)>& f,
                        const Tensor<double>& x0, double eps = 1e-6) {
    Tensor<double> x = x0;
    x.requires_grad = true;
    x.zero_grad();
    {
        Graph<double> g;
        Value<double> loss = f(g, g.leaf(x));
        g.backward(loss);
    }
    auto eval = [&](const Tensor<double>& xt) {
        Graph<double> g;
        Tensor<double> tmp = xt;
        tmp.requires_grad = false;
        return f(g, g.leaf(tmp)).item();
    };
    double worst = 0.0;
    Tensor<double> xp = x;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double orig = x.data[i];
        xp.data[i] = orig + eps;
        const double fp = eval(xp);
        xp.data[i] = orig - eps;
        const double fm = eval(xp);
        xp.data[i] = orig;
        const double cd = (fp - fm) / (2.0 * eps);
        const double denom = std::abs(cd) > 1.0 ? std::abs(cd) : 1.0;
        const double err = std::abs(x.grad[i] - cd) / denom;
        if (err > worst) worst = err;
    }
    return worst;
}

// Same error metric for an already-populated t.grad against central
// differences of `loss` re-evaluated with perturbed entries; checks only the
// listed components. Used to spot-check full models where perturbing every
// parameter would be too slow.
inline double fd_max_rel_err(const std::function<double()>& loss, Tensor<double>& t, double eps,
                             const std::vector<std::int64_t>& components) {
    double worst = 0.0;
    for (std::int64_t ci : components) {
        const double orig = t.data[static_cast<std::size_t>(ci)];
        t.data[static_cast<std::size_t>(ci)] = orig + eps;
        const double fp = loss();
        t.data[static_cast<std::size_t>(ci)] = orig - eps;
        const double fm = loss();
        t.data[static_cast<std::size_t>(ci)] = orig;
        const double cd = (fp - fm) / (2.0 * eps);
        const double denom = std::abs(cd) > 1.0 ? std::abs(cd) : 1.0;
        const double err = std::abs(t.grad[static_cast<std::size_t>(ci)] - cd) / denom;
        if (err > worst) worst = err;
    }
    return worst;
}

}  // namespace salforge::ad
