#pragma once

#include "salforge/geometry.hpp"
#include "salforge/grid.hpp"

namespace salforge::recon {

// Classic 256-case isosurface extraction. A corner is "inside" when its value
// is < iso; lattice values exactly equal to iso are first nudged to
// iso + 1e-6 * max|value| so no corner sits on the level set. Each cut edge
// contributes one shared vertex, linearly interpolated between its endpoints.
geom::TriangleSoup marching_cubes(const ScalarGrid& grid, double iso = 0.0);

}  // namespace salforge::recon
