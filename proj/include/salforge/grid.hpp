#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "salforge/geometry.hpp"

namespace salforge::recon {

using geom::Vec3;

// Regular lattice over the cube [-bound, bound]^3, x-fastest:
// values[(k*res + j)*res + i] is the sample at lattice point (i, j, k).
struct ScalarGrid {
    int res = 0;
    double bound = 1.1;
    std::vector<double> values;

    double cell() const { return 2.0 * bound / (res - 1); }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * res + j) * res + i;
    }

    Vec3 point(int i, int j, int k) const {
        const double c = cell();
        return {-bound + c * i, -bound + c * j, -bound + c * k};
    }

    double at(int i, int j, int k) const { return values[index(i, j, k)]; }
};

// Batch field evaluator: writes f(points[i]) into out[i]. out is pre-sized.
using FieldFn = std::function<void(const std::vector<Vec3>&, std::vector<double>&)>;

// Samples f over the lattice in z-plane slabs of at most max_slab_points
// lattice points (never fewer than one plane). The value at a lattice point
// must not depend on what else is in its slab, so any partition agrees.
ScalarGrid evaluate_grid(const FieldFn& f, int res, double bound = 1.1,
                         std::size_t max_slab_points = 16384);

}  // namespace salforge::recon
