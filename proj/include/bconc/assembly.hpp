// assembly.hpp
//
// P1 matrices and load vectors for the weak forms
//
//   a_eps(u,v) = (grad u, grad v) + lambda (u,v) + (1/eps) int_{omega_eps} V_eps u v
//   a_0(u,v)   = (grad u, grad v) + lambda (u,v) + int_Gamma V0 u v
//
// and the right-hand sides F_{0,eps}, F_1 and F_0. Lambda is applied when
// the system is built (solver.hpp), not here.

#ifndef BCONC_ASSEMBLY_HPP
#define BCONC_ASSEMBLY_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "concentration.hpp"
#include "fe_field.hpp"
#include "geometry.hpp"
#include "nonlinearity.hpp"
#include "oscillation.hpp"
#include "quadrature.hpp"
#include "sparse.hpp"

namespace bconc {

using LoadVector = std::vector<double>;

inline SparseMatrix assemble_stiffness(const TriMesh& mesh)
{
    std::vector<Triplet> t;
    t.reserve(9 * mesh.num_triangles());
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
        const Triangle& tri = mesh.triangle(e);
        std::array<Point2, 3> v{mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2])};
        const double det = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y);
        const double area = 0.5 * det;
        // grad(lambda_a) = (y_b - y_c, x_c - x_b) / det with (a,b,c) cyclic
        std::array<double, 3> gx, gy;
        for (int a = 0; a < 3; ++a) {
            const Point2& pb = v[(a + 1) % 3];
            const Point2& pc = v[(a + 2) % 3];
            gx[a] = (pb.y - pc.y) / det;
            gy[a] = (pc.x - pb.x) / det;
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                t.push_back({tri[a], tri[b], area * (gx[a] * gx[b] + gy[a] * gy[b])});
    }
    return SparseMatrix::from_triplets(mesh.num_vertices(), std::move(t));
}

/// Consistent mass, local matrix area/12 * [[2,1,1],[1,2,1],[1,1,2]].
inline SparseMatrix assemble_mass(const TriMesh& mesh)
{
    std::vector<Triplet> t;
    t.reserve(9 * mesh.num_triangles());
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
        const Triangle& tri = mesh.triangle(e);
        const double area = mesh.signed_area(e);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                t.push_back({tri[a], tri[b], area / 12.0 * (a == b ? 2.0 : 1.0)});
    }
    return SparseMatrix::from_triplets(mesh.num_vertices(), std::move(t));
}

/// Strip quadrature nodes for one (mesh, strip) pair, with their element
/// locations resolved once so repeated load assemblies are cheap.
class StripQuadrature {
public:
    struct Node {
        double x, y, weight;
        Location where;
    };

    StripQuadrature(const TriMesh& mesh, const StripRegion& region) : eps_(region.eps)
    {
        for (const StripNode& q : strip_nodes(region, &mesh))
            nodes_.push_back({q.x, q.y, q.weight, locate_point(mesh, {q.x, q.y})});
    }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    double eps() const noexcept { return eps_; }

private:
    double eps_;
    std::vector<Node> nodes_;
};

namespace detail {

inline double interpolate_at(const TriMesh& mesh, const std::vector<double>& u, const Location& loc)
{
    const Triangle& tri = mesh.triangle(loc.triangle);
    return loc.bary[0] * u[tri[0]] + loc.bary[1] * u[tri[1]] + loc.bary[2] * u[tri[2]];
}

/// sum_q weight(q) * phi_a phi_b over strip nodes.
template <class Weight>
SparseMatrix strip_weighted_mass(const TriMesh& mesh, const StripQuadrature& quad, Weight&& weight)
{
    std::vector<Triplet> t;
    t.reserve(9 * quad.nodes().size());
    for (const auto& q : quad.nodes()) {
        const double w = q.weight * weight(q);
        if (w == 0.0)
            continue;
        const Triangle& tri = mesh.triangle(q.where.triangle);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                t.push_back({tri[a], tri[b], w * q.where.bary[a] * q.where.bary[b]});
    }
    return SparseMatrix::from_triplets(mesh.num_vertices(), std::move(t));
}

/// Calls f(edge_vertices, x, weight, t) at the 8 Gauss points of every
/// Gamma edge; t in (0,1) is the local coordinate from the left vertex.
template <class F>
void for_each_gamma_point(const TriMesh& mesh, F&& f)
{
    for (const Edge& e : mesh.gamma_edges()) {
        const double xa = mesh.vertex(e[0]).x, xb = mesh.vertex(e[1]).x;
        const double len = xb - xa;
        for (std::size_t q = 0; q < gauss8.nodes.size(); ++q) {
            const double t = gauss8.nodes[q];
            f(e, xa + len * t, len * gauss8.weights[q], t);
        }
    }
}

template <class Weight>
SparseMatrix boundary_weighted_mass(const TriMesh& mesh, Weight&& weight)
{
    std::vector<Triplet> t;
    for_each_gamma_point(mesh, [&](const Edge& e, double x, double w, double s) {
        const double ww = w * weight(x, s, e);
        const std::array<double, 2> phi{1.0 - s, s};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                t.push_back({e[a], e[b], ww * phi[a] * phi[b]});
    });
    return SparseMatrix::from_triplets(mesh.num_vertices(), std::move(t));
}

} // namespace detail

/// Q_ij = (1/eps) int_{omega_eps} V_eps phi_i phi_j.
inline SparseMatrix assemble_concentrated_potential(const TriMesh& mesh, const StripQuadrature& quad,
                                                    const PotentialFamily& family)
{
    const double eps = quad.eps();
    return detail::strip_weighted_mass(
        mesh, quad, [&](const StripQuadrature::Node& q) { return family.Veps(eps, q.x, q.y); });
}

inline SparseMatrix assemble_concentrated_potential(const TriMesh& mesh, const StripRegion& region,
                                                    const PotentialFamily& family)
{
    return assemble_concentrated_potential(mesh, StripQuadrature(mesh, region), family);
}

/// B_ij = int_Gamma V0 phi_i phi_j.
inline SparseMatrix assemble_boundary_potential(const TriMesh& mesh,
                                                const std::function<double(double)>& V0)
{
    return detail::boundary_weighted_mass(mesh, [&](double x, double, const Edge&) { return V0(x); });
}

/// entry i = int_Omega f1(xi, u) phi_i, degree-4 triangle quadrature.
inline LoadVector assemble_volume_load(const TriMesh& mesh, const Nonlinearity& f1, const FEField& u)
{
    LoadVector load(mesh.num_vertices(), 0.0);
    const auto& rule = triangle_degree4;
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
        const Triangle& tri = mesh.triangle(e);
        const double area = mesh.signed_area(e);
        const Point2 &a = mesh.vertex(tri[0]), &b = mesh.vertex(tri[1]), &c = mesh.vertex(tri[2]);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const auto& l = rule.bary[q];
            const double x = l[0] * a.x + l[1] * b.x + l[2] * c.x;
            const double y = l[0] * a.y + l[1] * b.y + l[2] * c.y;
            const double uq = l[0] * u.values[tri[0]] + l[1] * u.values[tri[1]] + l[2] * u.values[tri[2]];
            const double w = area * rule.weights[q] * f1(x, y, uq);
            for (int k = 0; k < 3; ++k)
                load[tri[k]] += w * l[k];
        }
    }
    return load;
}

/// entry i = (1/eps) int_{omega_eps} f0(xi, u) phi_i.
inline LoadVector assemble_concentrated_load(const TriMesh& mesh, const StripQuadrature& quad,
                                             const Nonlinearity& f0, const FEField& u)
{
    LoadVector load(mesh.num_vertices(), 0.0);
    for (const auto& q : quad.nodes()) {
        const double uq = detail::interpolate_at(mesh, u.values, q.where);
        const double w = q.weight * f0(q.x, q.y, uq);
        const Triangle& tri = mesh.triangle(q.where.triangle);
        for (int k = 0; k < 3; ++k)
            load[tri[k]] += w * q.where.bary[k];
    }
    return load;
}

inline LoadVector assemble_concentrated_load(const TriMesh& mesh, const StripRegion& region,
                                             const Nonlinearity& f0, const FEField& u)
{
    return assemble_concentrated_load(mesh, StripQuadrature(mesh, region), f0, u);
}

/// entry i = int_Gamma mu f0(x, 0, u) phi_i; zero away from Gamma.
inline LoadVector assemble_boundary_load(const TriMesh& mesh, const MuCoefficient& mu,
                                         const Nonlinearity& f0, const FEField& u)
{
    LoadVector load(mesh.num_vertices(), 0.0);
    detail::for_each_gamma_point(mesh, [&](const Edge& e, double x, double w, double s) {
        const double uq = (1.0 - s) * u.values[e[0]] + s * u.values[e[1]];
        const double val = w * mu(x) * f0(x, 0.0, uq);
        load[e[0]] += val * (1.0 - s);
        load[e[1]] += val * s;
    });
    return load;
}

// Derivatives of the loads with respect to the nodal values of u, used as
// the nonlinear part of the Newton Jacobian.

inline SparseMatrix assemble_volume_load_jacobian(const TriMesh& mesh, const Nonlinearity& f1,
                                                  const FEField& u)
{
    std::vector<Triplet> t;
    if (f1.u_independent())
        return SparseMatrix::zero(mesh.num_vertices());
    const auto& rule = triangle_degree4;
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
        const Triangle& tri = mesh.triangle(e);
        const double area = mesh.signed_area(e);
        const Point2 &a = mesh.vertex(tri[0]), &b = mesh.vertex(tri[1]), &c = mesh.vertex(tri[2]);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const auto& l = rule.bary[q];
            const double x = l[0] * a.x + l[1] * b.x + l[2] * c.x;
            const double y = l[0] * a.y + l[1] * b.y + l[2] * c.y;
            const double uq = l[0] * u.values[tri[0]] + l[1] * u.values[tri[1]] + l[2] * u.values[tri[2]];
            const double w = area * rule.weights[q] * f1.derivative(x, y, uq);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    t.push_back({tri[i], tri[j], w * l[i] * l[j]});
        }
    }
    return SparseMatrix::from_triplets(mesh.num_vertices(), std::move(t));
}

inline SparseMatrix assemble_concentrated_load_jacobian(const TriMesh& mesh,
                                                        const StripQuadrature& quad,
                                                        const Nonlinearity& f0, const FEField& u)
{
    if (f0.u_independent())
        return SparseMatrix::zero(mesh.num_vertices());
    return detail::strip_weighted_mass(mesh, quad, [&](const StripQuadrature::Node& q) {
        return f0.derivative(q.x, q.y, detail::interpolate_at(mesh, u.values, q.where));
    });
}

inline SparseMatrix assemble_boundary_load_jacobian(const TriMesh& mesh, const MuCoefficient& mu,
                                                    const Nonlinearity& f0, const FEField& u)
{
    if (f0.u_independent())
        return SparseMatrix::zero(mesh.num_vertices());
    return detail::boundary_weighted_mass(mesh, [&](double x, double s, const Edge& e) {
        const double uq = (1.0 - s) * u.values[e[0]] + s * u.values[e[1]];
        return mu(x) * f0.derivative(x, 0.0, uq);
    });
}

} // namespace bconc

#endif
