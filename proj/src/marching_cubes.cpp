#include "salforge/marching_cubes.hpp"

#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "salforge/errors.hpp"

namespace salforge::recon {

namespace {

#include "mc_tables.inc"

// Corner c of the cell at (i,j,k) sits at (i,j,k) + kCornerOff[c].
constexpr int kCornerOff[8][3] = {
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
};

// Each edge as (lower corner, axis); interpolation always runs from the lower
// corner so the two cells sharing an edge produce the identical vertex.
constexpr int kEdgeCorner[12] = {0, 1, 3, 0, 4, 5, 7, 4, 0, 1, 2, 3};
constexpr int kEdgeAxis[12] = {0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2};

}  // namespace

geom::TriangleSoup marching_cubes(const ScalarGrid& grid, double iso) {
    const int R = grid.res;
    if (R < 2 || grid.values.size() != static_cast<std::size_t>(R) * R * R)
        throw ContractError("marching_cubes: grid resolution/value count mismatch");

    double scale = 0.0;
    for (double v : grid.values) scale = std::max(scale, std::fabs(v));
    const double nudge = 1e-6 * scale;
    auto val = [&](int i, int j, int k) {
        const double v = grid.at(i, j, k);
        return v == iso ? iso + nudge : v;
    };

    geom::TriangleSoup mesh;
    std::unordered_map<std::uint64_t, int> edge_vertex;
    auto vertex_on = [&](int ci, int cj, int ck, int axis) {
        const std::uint64_t key = grid.index(ci, cj, ck) * 3 + axis;
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        const int ni = ci + (axis == 0), nj = cj + (axis == 1), nk = ck + (axis == 2);
        const double va = val(ci, cj, ck), vb = val(ni, nj, nk);
        const double t = (iso - va) / (vb - va);
        const Vec3 pa = grid.point(ci, cj, ck), pb = grid.point(ni, nj, nk);
        mesh.vertices.push_back({pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y),
                                 pa.z + t * (pb.z - pa.z)});
        const int id = static_cast<int>(mesh.vertices.size()) - 1;
        edge_vertex.emplace(key, id);
        return id;
    };

    for (int k = 0; k + 1 < R; ++k) {
        for (int j = 0; j + 1 < R; ++j) {
            for (int i = 0; i + 1 < R; ++i) {
                int cube = 0;
                for (int c = 0; c < 8; ++c)
                    if (val(i + kCornerOff[c][0], j + kCornerOff[c][1], k + kCornerOff[c][2]) < iso)
                        cube |= 1 << c;
                const unsigned mask = kEdgeMask[cube];
                if (mask == 0) continue;
                int ev[12];
                for (int e = 0; e < 12; ++e) {
                    if (!(mask >> e & 1u)) continue;
                    const int c = kEdgeCorner[e];
                    ev[e] = vertex_on(i + kCornerOff[c][0], j + kCornerOff[c][1],
                                      k + kCornerOff[c][2], kEdgeAxis[e]);
                }
                for (const int8_t* t = kTriEdges[cube]; *t >= 0; t += 3)
                    mesh.triangles.push_back({ev[t[0]], ev[t[1]], ev[t[2]]});
            }
        }
    }
    return mesh;
}

}  // namespace salforge::recon
