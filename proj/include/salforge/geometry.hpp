#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "salforge/errors.hpp"
#include "salforge/rng.hpp"

namespace salforge::geom {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline Vec3 min3(const Vec3& a, const Vec3& b) {
    return {a.x < b.x ? a.x : b.x, a.y < b.y ? a.y : b.y, a.z < b.z ? a.z : b.z};
}
inline Vec3 max3(const Vec3& a, const Vec3& b) {
    return {a.x > b.x ? a.x : b.x, a.y > b.y ? a.y : b.y, a.z > b.z ? a.z : b.z};
}

using PointCloud = std::vector<Vec3>;

// Unordered triangle list; no connectivity or manifoldness assumed. Degenerate
// (zero-area) triangles are legal input.
struct TriangleSoup {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    bool empty() const { return vertices.empty(); }
    // Checks index ranges and finite coordinates; ContractError on violation.
    void validate() const;
};

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

struct ClosestPoint {
    double dist = 0;
    Vec3 point;
};

// Exact Euclidean projection onto the closed triangle (face, edge, or vertex
// region). Degenerate triangles fall back to closest point on the edges.
ClosestPoint point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b);

// Translate by minus the bounding-box center, scale so the bounding-sphere
// radius about that center becomes 1. original = normalized * scale + center.
struct NormalizeTransform {
    Vec3 center;
    double scale = 1.0;
};

NormalizeTransform normalize(TriangleSoup& soup);
NormalizeTransform normalize(PointCloud& cloud);
inline Vec3 denormalize(const Vec3& v, const NormalizeTransform& t) {
    return v * t.scale + t.center;
}

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};
    void grow(const Vec3& p) { lo = min3(lo, p); hi = max3(hi, p); }
    void grow(const Aabb& b) { lo = min3(lo, b.lo); hi = max3(hi, b.hi); }
    Vec3 extent() const { return hi - lo; }
    double surface_area() const {
        Vec3 e = extent();
        return 2.0 * (e.x * e.y + e.y * e.z + e.z * e.x);
    }
    double dist2(const Vec3& p) const {
        double d = 0;
        double dx = p.x < lo.x ? lo.x - p.x : (p.x > hi.x ? p.x - hi.x : 0);
        double dy = p.y < lo.y ? lo.y - p.y : (p.y > hi.y ? p.y - hi.y : 0);
        double dz = p.z < lo.z ? lo.z - p.z : (p.z > hi.z ? p.z - hi.z : 0);
        d = dx * dx + dy * dy + dz * dz;
        return d;
    }
};

// Binned-SAH bounding volume hierarchy over arbitrary primitive boxes.
// Nearest-primitive search prunes a subtree only when its box lower bound is
// strictly greater than the current best, and exact distance ties resolve to
// the lowest primitive index, so results never depend on traversal order.
class Bvh {
public:
    void build(std::vector<Aabb> boxes);
    bool empty() const { return nodes_.empty(); }

    // prim_dist2: squared distance from the query to primitive `index`.
    template <typename F>
    std::pair<double, int> nearest(const Vec3& p, F&& prim_dist2) const {
        if (nodes_.empty()) throw ContractError("Bvh::nearest: empty hierarchy");
        double best = 1e300;
        int best_idx = -1;
        nearest_rec(0, p, prim_dist2, best, best_idx);
        return {best, best_idx};
    }

private:
    struct Node {
        Aabb box;
        int left = -1, right = -1;  // internal
        int first = 0, count = 0;   // leaf when count > 0
    };

    template <typename F>
    void nearest_rec(int ni, const Vec3& p, F& prim_dist2, double& best, int& best_idx) const {
        const Node& n = nodes_[ni];
        if (n.count > 0) {
            for (int i = n.first; i < n.first + n.count; ++i) {
                const int prim = order_[i];
                const double d2 = prim_dist2(prim);
                if (d2 < best || (d2 == best && prim < best_idx)) {
                    best = d2;
                    best_idx = prim;
                }
            }
            return;
        }
        double dl = nodes_[n.left].box.dist2(p);
        double dr = nodes_[n.right].box.dist2(p);
        int c0 = n.left, c1 = n.right;
        if (dr < dl) {
            std::swap(c0, c1);
            std::swap(dl, dr);
        }
        if (!(dl > best)) nearest_rec(c0, p, prim_dist2, best, best_idx);
        if (!(dr > best)) nearest_rec(c1, p, prim_dist2, best, best_idx);
    }

    int build_rec(std::vector<Aabb>& boxes, std::vector<Vec3>& centroids, int first, int count);

    std::vector<Node> nodes_;
    std::vector<int> order_;  // primitive indices, leaf ranges index into this
};

struct SurfaceHit {
    double dist = 0;
    Vec3 point;
    int triangle = -1;
};

// Point-to-soup unsigned distance queries. Immutable after construction; safe
// for concurrent readers. Keeps a pointer to the soup, which must outlive it.
class TriangleBvh {
public:
    explicit TriangleBvh(const TriangleSoup& soup);
    SurfaceHit unsigned_distance(const Vec3& p) const;

private:
    const TriangleSoup* soup_;
    Bvh bvh_;
};

// Brute-force oracle: min over all triangles.
SurfaceHit unsigned_distance_brute(const TriangleSoup& soup, const Vec3& p);

// Nearest-neighbor queries over a point set.
class PointBvh {
public:
    explicit PointBvh(const PointCloud& cloud);
    // (distance, index) of the nearest point.
    std::pair<double, int> nearest(const Vec3& p) const;

private:
    const PointCloud* cloud_;
    Bvh bvh_;
};

// Area-weighted uniform surface sampling via the square-root barycentric rule.
// Zero-area triangles are never chosen.
PointCloud sample_surface(const TriangleSoup& soup, std::int64_t n, Rng& rng);

// CD(A,B) = 1/2 (mean_a min_b |a-b| + mean_b min_a |a-b|), non-squared.
double chamfer(const PointCloud& a, const PointCloud& b);
double chamfer_brute(const PointCloud& a, const PointCloud& b);

// Synthetic shapes for demos and tests.
TriangleSoup make_icosphere(int subdivisions);
TriangleSoup make_torus(double major_radius, double minor_radius, int segments_major,
                        int segments_minor);

}  // namespace salforge::geom
