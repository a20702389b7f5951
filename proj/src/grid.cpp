#include "salforge/grid.hpp"

#include <algorithm>
#include <cmath>

#include "salforge/errors.hpp"

namespace salforge::recon {

ScalarGrid evaluate_grid(const FieldFn& f, int res, double bound,
                         std::size_t max_slab_points) {
    if (res < 2) throw ContractError("evaluate_grid: resolution must be >= 2, got " + std::to_string(res));
    if (!(bound > 0.0)) throw ContractError("evaluate_grid: bound must be positive");

    ScalarGrid grid;
    grid.res = res;
    grid.bound = bound;
    grid.values.resize(static_cast<std::size_t>(res) * res * res);

    const std::size_t plane = static_cast<std::size_t>(res) * res;
    const int planes_per_slab = static_cast<int>(std::max<std::size_t>(1, max_slab_points / plane));

    std::vector<Vec3> pts;
    std::vector<double> vals;
    for (int k0 = 0; k0 < res; k0 += planes_per_slab) {
        const int k1 = std::min(res, k0 + planes_per_slab);
        pts.clear();
        for (int k = k0; k < k1; ++k)
            for (int j = 0; j < res; ++j)
                for (int i = 0; i < res; ++i) pts.push_back(grid.point(i, j, k));
        vals.assign(pts.size(), 0.0);
        f(pts, vals);
        std::copy(vals.begin(), vals.end(), grid.values.begin() + grid.index(0, 0, k0));
    }

    for (double v : grid.values)
        if (!std::isfinite(v)) throw Error("evaluate_grid: field produced a non-finite value");
    return grid;
}

}  // namespace salforge::recon
