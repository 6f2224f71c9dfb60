// geometry.hpp
//
// Structured P1 triangulation of the unit square. The bottom edge y = 0 is
// the boundary portion on which the concentrated terms collapse.

#ifndef BCONC_GEOMETRY_HPP
#define BCONC_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bconc {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

using Triangle = std::array<std::size_t, 3>;
using Edge = std::array<std::size_t, 2>;

/// Uniform (n x n cells) mesh of [0,1]^2, each cell split along the
/// lower-left to upper-right diagonal. Vertex (i,j) has index i + j*(n+1);
/// cell (i,j) owns triangles 2*(i + j*n) (below the diagonal) and
/// 2*(i + j*n) + 1 (above it). Immutable after construction.
class TriMesh {
public:
    explicit TriMesh(std::size_t n);

    std::size_t cells_per_side() const noexcept { return n_; }
    double h() const noexcept { return std::sqrt(2.0) / static_cast<double>(n_); }
    /// Grid spacing 1/n.
    double spacing() const noexcept { return 1.0 / static_cast<double>(n_); }

    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_triangles() const noexcept { return triangles_.size(); }

    const std::vector<Point2>& vertices() const noexcept { return vertices_; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    /// Edges on y = 0, ordered by increasing x.
    const std::vector<Edge>& gamma_edges() const noexcept { return gamma_edges_; }
    const std::vector<Edge>& other_boundary_edges() const noexcept { return other_edges_; }

    const Point2& vertex(std::size_t v) const { return vertices_[v]; }
    const Triangle& triangle(std::size_t t) const { return triangles_[t]; }

    std::size_t vertex_index(std::size_t i, std::size_t j) const noexcept { return i + j * (n_ + 1); }

    /// Signed area (positive for counterclockwise triangles).
    double signed_area(std::size_t t) const
    {
        const auto& tri = triangles_[t];
        const Point2& a = vertices_[tri[0]];
        const Point2& b = vertices_[tri[1]];
        const Point2& c = vertices_[tri[2]];
        return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    }

private:
    std::size_t n_;
    std::vector<Point2> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<Edge> gamma_edges_;
    std::vector<Edge> other_edges_;
};

inline TriMesh::TriMesh(std::size_t n) : n_(n)
{
    if (n == 0)
        throw std::invalid_argument("build_uniform_mesh: n must be at least 1");

    const double dn = static_cast<double>(n);
    vertices_.reserve((n + 1) * (n + 1));
    for (std::size_t j = 0; j <= n; ++j)
        for (std::size_t i = 0; i <= n; ++i)
            vertices_.push_back({static_cast<double>(i) / dn, static_cast<double>(j) / dn});

    triangles_.reserve(2 * n * n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t v00 = vertex_index(i, j), v10 = vertex_index(i + 1, j);
            const std::size_t v01 = vertex_index(i, j + 1), v11 = vertex_index(i + 1, j + 1);
            triangles_.push_back({v00, v10, v11});
            triangles_.push_back({v00, v11, v01});
        }
    }

    for (std::size_t i = 0; i < n; ++i)
        gamma_edges_.push_back({vertex_index(i, 0), vertex_index(i + 1, 0)});
    for (std::size_t j = 0; j < n; ++j) {
        other_edges_.push_back({vertex_index(n, j), vertex_index(n, j + 1)});  // right
        other_edges_.push_back({vertex_index(0, j), vertex_index(0, j + 1)});  // left
    }
    for (std::size_t i = 0; i < n; ++i)
        other_edges_.push_back({vertex_index(i, n), vertex_index(i + 1, n)});  // top
}

inline std::shared_ptr<const TriMesh> build_uniform_mesh(std::size_t n)
{
    return std::make_shared<const TriMesh>(n);
}

struct Location {
    std::size_t triangle;
    std::array<double, 3> bary;  // matches the vertex order of the triangle
};

/// O(1) point location on the structured grid. Points on shared edges or
/// vertices go to the lowest-index triangle containing them.
inline Location locate_point(const TriMesh& mesh, const Point2& p)
{
    if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0))
        throw std::out_of_range("locate_point: point outside the closed unit square");

    const auto n = static_cast<long>(mesh.cells_per_side());
    const double dn = static_cast<double>(n);
    const double sx = p.x * dn, sy = p.y * dn;
    // ceil - 1 puts grid-line points into the lower-index neighbouring cell.
    const long i = std::clamp(static_cast<long>(std::ceil(sx)) - 1, 0L, n - 1);
    const long j = std::clamp(static_cast<long>(std::ceil(sy)) - 1, 0L, n - 1);
    const double s = std::clamp(sx - static_cast<double>(i), 0.0, 1.0);
    const double t = std::clamp(sy - static_cast<double>(j), 0.0, 1.0);

    const std::size_t cell = static_cast<std::size_t>(i + j * n);
    if (s >= t)  // triangle (v00, v10, v11)
        return {2 * cell, {1.0 - s, s - t, t}};
    return {2 * cell + 1, {1.0 - t, s, t - s}};  // triangle (v00, v11, v01)
}

} // namespace bconc

#endif
