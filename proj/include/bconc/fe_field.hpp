// fe_field.hpp
//
// Nodal P1 fields on a TriMesh, their evaluation and H1 / L2 norms.

#ifndef BCONC_FE_FIELD_HPP
#define BCONC_FE_FIELD_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace bconc {

struct FEField {
    std::shared_ptr<const TriMesh> mesh;
    std::vector<double> values;  // one per vertex

    FEField() = default;
    FEField(std::shared_ptr<const TriMesh> m, std::vector<double> v)
        : mesh(std::move(m)), values(std::move(v))
    {
        if (!mesh)
            throw std::invalid_argument("FEField: null mesh");
        if (values.size() != mesh->num_vertices())
            throw std::invalid_argument("FEField: coefficient count differs from vertex count");
    }

    static FEField zero(std::shared_ptr<const TriMesh> m)
    {
        const std::size_t nv = m->num_vertices();
        return FEField(std::move(m), std::vector<double>(nv, 0.0));
    }

    double operator()(double x, double y) const
    {
        const Location loc = locate_point(*mesh, {x, y});
        const Triangle& tri = mesh->triangle(loc.triangle);
        return loc.bary[0] * values[tri[0]] + loc.bary[1] * values[tri[1]] +
               loc.bary[2] * values[tri[2]];
    }
};

inline FEField interpolate(std::shared_ptr<const TriMesh> mesh,
                           const std::function<double(double, double)>& f)
{
    std::vector<double> v;
    v.reserve(mesh->num_vertices());
    for (const Point2& p : mesh->vertices())
        v.push_back(f(p.x, p.y));
    return FEField(std::move(mesh), std::move(v));
}

namespace detail {

struct EnergyParts {
    double gradient = 0.0;  // int |grad u|^2
    double mass = 0.0;      // int u^2
};

inline EnergyParts energy_parts(const TriMesh& mesh, const std::vector<double>& u)
{
    EnergyParts e;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Triangle& tri = mesh.triangle(t);
        const Point2& a = mesh.vertex(tri[0]);
        const Point2& b = mesh.vertex(tri[1]);
        const Point2& c = mesh.vertex(tri[2]);
        const double ua = u[tri[0]], ub = u[tri[1]], uc = u[tri[2]];
        const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        const double area = 0.5 * det;
        const double gx = ((ub - ua) * (c.y - a.y) - (uc - ua) * (b.y - a.y)) / det;
        const double gy = ((uc - ua) * (b.x - a.x) - (ub - ua) * (c.x - a.x)) / det;
        e.gradient += area * (gx * gx + gy * gy);
        e.mass += area / 6.0 * (ua * ua + ub * ub + uc * uc + ua * ub + ub * uc + uc * ua);
    }
    return e;
}

inline void require_same_mesh(const FEField& u, const FEField& w)
{
    if (!u.mesh || !w.mesh || u.mesh->cells_per_side() != w.mesh->cells_per_side())
        throw std::invalid_argument("h1_error: fields live on different meshes");
}

} // namespace detail

inline double h1_norm(const FEField& u)
{
    const auto e = detail::energy_parts(*u.mesh, u.values);
    return std::sqrt(e.gradient + e.mass);
}

inline double l2_norm(const FEField& u)
{
    return std::sqrt(detail::energy_parts(*u.mesh, u.values).mass);
}

inline FEField difference(const FEField& u, const FEField& w)
{
    detail::require_same_mesh(u, w);
    std::vector<double> d(u.values.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = u.values[i] - w.values[i];
    return FEField(u.mesh, std::move(d));
}

inline double h1_error(const FEField& u, const FEField& w) { return h1_norm(difference(u, w)); }
inline double l2_error(const FEField& u, const FEField& w) { return l2_norm(difference(u, w)); }

} // namespace bconc

#endif
