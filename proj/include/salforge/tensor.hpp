#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "salforge/errors.hpp"

namespace salforge::ad {

// Row-major dense shapes; rank 1 or 2 in practice ([C] vectors, [C,N] column
// batches where each column is one sample).
using Shape = std::vector<int>;

inline std::int64_t numel(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

// Owned dense tensor. `grad` stays empty until backward first accumulates
// into it; afterwards it always matches `data` in size.
template <typename S>
struct Tensor {
    Shape shape;
    std::vector<S> data;
    std::vector<S> grad;
    bool requires_grad = false;

    Tensor() = default;
    explicit Tensor(Shape s, S fill = S(0))
        : shape(std::move(s)), data(static_cast<std::size_t>(numel(shape)), fill) {}

    static Tensor from(Shape s, std::vector<S> values) {
        if (static_cast<std::int64_t>(values.size()) != numel(s))
            throw ShapeError("tensor init: " + std::to_string(values.size()) +
                             " values for shape " + shape_str(s));
        Tensor t;
        t.shape = std::move(s);
        t.data = std::move(values);
        return t;
    }

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

    void zero_grad() { grad.assign(data.size(), S(0)); }

    void add_grad(const S* g, std::size_t n) {
        if (grad.size() != data.size()) grad.assign(data.size(), S(0));
        for (std::size_t i = 0; i < n; ++i) grad[i] += g[i];
    }
};

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t) {
    Tensor<To> out;
    out.shape = t.shape;
    out.requires_grad = t.requires_grad;
    out.data.resize(t.data.size());
    for (std::size_t i = 0; i < t.data.size(); ++i) out.data[i] = static_cast<To>(t.data[i]);
    return out;
}

}  // namespace salforge::ad
