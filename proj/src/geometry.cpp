#include "salforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace salforge::geom {

void TriangleSoup::validate() const {
    const int nv = static_cast<int>(vertices.size());
    for (const Vec3& v : vertices)
        if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z))
            throw ContractError("TriangleSoup: non-finite vertex coordinate");
    for (std::size_t t = 0; t < triangles.size(); ++t)
        for (int k = 0; k < 3; ++k) {
            const int i = triangles[t][k];
            if (i < 0 || i >= nv)
                throw ContractError("TriangleSoup: triangle " + std::to_string(t) +
                                    " references vertex " + std::to_string(i) + " of " +
                                    std::to_string(nv));
        }
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * cross(b - a, c - a).norm();
}

Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.norm2();
    if (len2 <= 0.0) return a;
    double t = dot(p - a, ab) / len2;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    return a + ab * t;
}

ClosestPoint point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a;
    // Degenerate triangles are a polyline; use the edges.
    const double cr2 = cross(ab, ac).norm2();
    if (!(cr2 > 1e-20 * ab.norm2() * ac.norm2())) {
        Vec3 best = closest_point_on_segment(p, a, b);
        double bd = (p - best).norm2();
        for (const auto& [s, e] : {std::pair{a, c}, std::pair{b, c}}) {
            const Vec3 q = closest_point_on_segment(p, s, e);
            const double d = (p - q).norm2();
            if (d < bd) {
                bd = d;
                best = q;
            }
        }
        return {std::sqrt(bd), best};
    }

    // Voronoi-region walk over the closed triangle.
    const Vec3 ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return {(p - a).norm(), a};

    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return {(p - b).norm(), b};

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double t = d1 / (d1 - d3);
        const Vec3 q = a + ab * t;
        return {(p - q).norm(), q};
    }

    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return {(p - c).norm(), c};

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double t = d2 / (d2 - d6);
        const Vec3 q = a + ac * t;
        return {(p - q).norm(), q};
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0) {
        const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        const Vec3 q = b + (c - b) * t;
        return {(p - q).norm(), q};
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    const Vec3 q = a + ab * v + ac * w;
    return {(p - q).norm(), q};
}

NormalizeTransform normalize(TriangleSoup& soup) {
    if (soup.vertices.empty()) throw ContractError("normalize: empty soup");
    Aabb box;
    for (const Vec3& v : soup.vertices) box.grow(v);
    const Vec3 center = (box.lo + box.hi) * 0.5;
    double r2 = 0;
    for (const Vec3& v : soup.vertices) r2 = std::max(r2, (v - center).norm2());
    const double radius = std::sqrt(r2);
    if (!(radius > 0)) throw ContractError("normalize: all vertices coincide");
    for (Vec3& v : soup.vertices) v = (v - center) / radius;
    return {center, radius};
}

NormalizeTransform normalize(PointCloud& cloud) {
    if (cloud.empty()) throw ContractError("normalize: empty cloud");
    Aabb box;
    for (const Vec3& v : cloud) box.grow(v);
    const Vec3 center = (box.lo + box.hi) * 0.5;
    double r2 = 0;
    for (const Vec3& v : cloud) r2 = std::max(r2, (v - center).norm2());
    const double radius = std::sqrt(r2);
    if (!(radius > 0)) throw ContractError("normalize: all points coincide");
    for (Vec3& v : cloud) v = (v - center) / radius;
    return {center, radius};
}

// ---- BVH -------------------------------------------------------------------

namespace {
constexpr int kLeafSize = 4;
constexpr int kBins = 16;
}  // namespace

void Bvh::build(std::vector<Aabb> boxes) {
    nodes_.clear();
    order_.resize(boxes.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (boxes.empty()) return;
    std::vector<Vec3> centroids(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i)
        centroids[i] = (boxes[i].lo + boxes[i].hi) * 0.5;
    nodes_.reserve(boxes.size() * 2);
    build_rec(boxes, centroids, 0, static_cast<int>(boxes.size()));
}

int Bvh::build_rec(std::vector<Aabb>& boxes, std::vector<Vec3>& centroids, int first, int count) {
    const int ni = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    for (int i = first; i < first + count; ++i) box.grow(boxes[order_[i]]);
    nodes_[ni].box = box;

    if (count <= kLeafSize) {
        nodes_[ni].first = first;
        nodes_[ni].count = count;
        return ni;
    }

    Aabb cbox;
    for (int i = first; i < first + count; ++i) cbox.grow(centroids[order_[i]]);
    const Vec3 cext = cbox.extent();

    // Binned SAH over all three axes; fall back to a median split when every
    // centroid lands in one bin.
    int best_axis = -1, best_bin = -1;
    double best_cost = 1e300;
    for (int axis = 0; axis < 3; ++axis) {
        const double lo = axis == 0 ? cbox.lo.x : axis == 1 ? cbox.lo.y : cbox.lo.z;
        const double ext = axis == 0 ? cext.x : axis == 1 ? cext.y : cext.z;
        if (!(ext > 0)) continue;
        Aabb bin_box[kBins];
        int bin_count[kBins] = {};
        for (int i = first; i < first + count; ++i) {
            const int prim = order_[i];
            const double c =
                axis == 0 ? centroids[prim].x : axis == 1 ? centroids[prim].y : centroids[prim].z;
            int bi = static_cast<int>((c - lo) / ext * kBins);
            bi = std::clamp(bi, 0, kBins - 1);
            bin_box[bi].grow(boxes[prim]);
            ++bin_count[bi];
        }
        Aabb right_acc[kBins];
        Aabb acc;
        for (int b = kBins - 1; b >= 1; --b) {
            if (bin_count[b] > 0) acc.grow(bin_box[b]);
            right_acc[b] = acc;
        }
        Aabb left;
        int nleft = 0;
        for (int b = 0; b + 1 < kBins; ++b) {
            if (bin_count[b] > 0) left.grow(bin_box[b]);
            nleft += bin_count[b];
            const int nright = count - nleft;
            if (nleft == 0 || nright == 0) continue;
            const double cost =
                left.surface_area() * nleft + right_acc[b + 1].surface_area() * nright;
            if (cost < best_cost) {
                best_cost = cost;
                best_axis = axis;
                best_bin = b;
            }
        }
    }

    int mid;
    if (best_axis < 0) {
        mid = first + count / 2;
    } else {
        const double lo = best_axis == 0 ? cbox.lo.x : best_axis == 1 ? cbox.lo.y : cbox.lo.z;
        const double ext = best_axis == 0 ? cext.x : best_axis == 1 ? cext.y : cext.z;
        auto bin_of = [&](int prim) {
            const double c = best_axis == 0 ? centroids[prim].x
                           : best_axis == 1 ? centroids[prim].y
                                            : centroids[prim].z;
            return std::clamp(static_cast<int>((c - lo) / ext * kBins), 0, kBins - 1);
        };
        auto it = std::stable_partition(order_.begin() + first, order_.begin() + first + count,
                                        [&](int prim) { return bin_of(prim) <= best_bin; });
        mid = static_cast<int>(it - order_.begin());
        if (mid == first || mid == first + count) mid = first + count / 2;
    }

    const int left = build_rec(boxes, centroids, first, mid - first);
    const int right = build_rec(boxes, centroids, mid, first + count - mid);
    nodes_[ni].left = left;
    nodes_[ni].right = right;
    return ni;
}

TriangleBvh::TriangleBvh(const TriangleSoup& soup) : soup_(&soup) {
    if (soup.triangles.empty()) throw ContractError("TriangleBvh: soup has no triangles");
    std::vector<Aabb> boxes(soup.triangles.size());
    for (std::size_t t = 0; t < soup.triangles.size(); ++t)
        for (int k = 0; k < 3; ++k) boxes[t].grow(soup.vertices[soup.triangles[t][k]]);
    bvh_.build(std::move(boxes));
}

SurfaceHit TriangleBvh::unsigned_distance(const Vec3& p) const {
    auto prim_dist2 = [&](int t) {
        const auto& tri = soup_->triangles[t];
        const ClosestPoint cp = point_triangle_distance(p, soup_->vertices[tri[0]],
                                                        soup_->vertices[tri[1]],
                                                        soup_->vertices[tri[2]]);
        return cp.dist * cp.dist;
    };
    auto [d2, idx] = bvh_.nearest(p, prim_dist2);
    const auto& tri = soup_->triangles[idx];
    const ClosestPoint cp = point_triangle_distance(p, soup_->vertices[tri[0]],
                                                    soup_->vertices[tri[1]],
                                                    soup_->vertices[tri[2]]);
    return {cp.dist, cp.point, idx};
}

SurfaceHit unsigned_distance_brute(const TriangleSoup& soup, const Vec3& p) {
    if (soup.triangles.empty()) throw ContractError("unsigned_distance: soup has no triangles");
    double best = 1e300;
    int best_idx = -1;
    for (std::size_t t = 0; t < soup.triangles.size(); ++t) {
        const auto& tri = soup.triangles[t];
        const ClosestPoint cp = point_triangle_distance(p, soup.vertices[tri[0]],
                                                        soup.vertices[tri[1]],
                                                        soup.vertices[tri[2]]);
        const double d2 = cp.dist * cp.dist;
        if (d2 < best) {
            best = d2;
            best_idx = static_cast<int>(t);
        }
    }
    const auto& tri = soup.triangles[best_idx];
    const ClosestPoint cp = point_triangle_distance(p, soup.vertices[tri[0]],
                                                    soup.vertices[tri[1]], soup.vertices[tri[2]]);
    return {cp.dist, cp.point, best_idx};
}

PointBvh::PointBvh(const PointCloud& cloud) : cloud_(&cloud) {
    if (cloud.empty()) throw ContractError("PointBvh: empty cloud");
    std::vector<Aabb> boxes(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) boxes[i].grow(cloud[i]);
    bvh_.build(std::move(boxes));
}

std::pair<double, int> PointBvh::nearest(const Vec3& p) const {
    auto prim_dist2 = [&](int i) { return ((*cloud_)[i] - p).norm2(); };
    auto [d2, idx] = bvh_.nearest(p, prim_dist2);
    return {std::sqrt(d2), idx};
}

PointCloud sample_surface(const TriangleSoup& soup, std::int64_t n, Rng& rng) {
    PointCloud out;
    if (n == 0) return out;
    std::vector<double> cumulative;
    std::vector<int> tri_of;
    cumulative.reserve(soup.triangles.size());
    double total = 0;
    for (std::size_t t = 0; t < soup.triangles.size(); ++t) {
        const auto& tri = soup.triangles[t];
        const double a = triangle_area(soup.vertices[tri[0]], soup.vertices[tri[1]],
                                       soup.vertices[tri[2]]);
        if (a > 0) {
            total += a;
            cumulative.push_back(total);
            tri_of.push_back(static_cast<int>(t));
        }
    }
    if (cumulative.empty())
        throw ContractError("sample_surface: no non-degenerate triangles");
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double u = rng.uniform() * total;
        const std::size_t pick =
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
        const auto& tri = soup.triangles[tri_of[std::min(pick, cumulative.size() - 1)]];
        const Vec3 &a = soup.vertices[tri[0]], &b = soup.vertices[tri[1]],
                   &c = soup.vertices[tri[2]];
        const double s = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        out.push_back(a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2));
    }
    return out;
}

namespace {

double mean_nearest(const PointCloud& from, const PointBvh& to_bvh) {
    double sum = 0;
    for (const Vec3& p : from) sum += to_bvh.nearest(p).first;
    return sum / static_cast<double>(from.size());
}

double mean_nearest_brute(const PointCloud& from, const PointCloud& to) {
    double sum = 0;
    for (const Vec3& p : from) {
        double best = 1e300;
        for (const Vec3& q : to) best = std::min(best, (p - q).norm2());
        sum += std::sqrt(best);
    }
    return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw ContractError("chamfer: empty cloud");
    const PointBvh bvh_a(a), bvh_b(b);
    return 0.5 * (mean_nearest(a, bvh_b) + mean_nearest(b, bvh_a));
}

double chamfer_brute(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw ContractError("chamfer: empty cloud");
    return 0.5 * (mean_nearest_brute(a, b) + mean_nearest_brute(b, a));
}

// ---- synthetic shapes -------------------------------------------------------

TriangleSoup make_icosphere(int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleSoup s;
    s.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                  {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& v : s.vertices) v = v / v.norm();
    s.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                   {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                   {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                   {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int iter = 0; iter < subdivisions; ++iter) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int i, int j) {
            const auto key = std::minmax(i, j);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 m = (s.vertices[i] + s.vertices[j]) * 0.5;
            m = m / m.norm();
            s.vertices.push_back(m);
            const int idx = static_cast<int>(s.vertices.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(s.triangles.size() * 4);
        for (const auto& tri : s.triangles) {
            const int ab = mid(tri[0], tri[1]);
            const int bc = mid(tri[1], tri[2]);
            const int ca = mid(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        s.triangles = std::move(next);
    }
    return s;
}

TriangleSoup make_torus(double major_radius, double minor_radius, int segments_major,
                        int segments_minor) {
    TriangleSoup s;
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < segments_major; ++i) {
        const double u = 2.0 * pi * i / segments_major;
        for (int j = 0; j < segments_minor; ++j) {
            const double v = 2.0 * pi * j / segments_minor;
            const double r = major_radius + minor_radius * std::cos(v);
            s.vertices.push_back({r * std::cos(u), r * std::sin(u), minor_radius * std::sin(v)});
        }
    }
    auto vid = [&](int i, int j) {
        return (i % segments_major) * segments_minor + (j % segments_minor);
    };
    for (int i = 0; i < segments_major; ++i)
        for (int j = 0; j < segments_minor; ++j) {
            const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
            s.triangles.push_back({a, b, c});
            s.triangles.push_back({a, c, d});
        }
    return s;
}

}  // namespace salforge::geom
