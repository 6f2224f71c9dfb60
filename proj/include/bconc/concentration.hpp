// concentration.hpp
//
// Integrals concentrated on the oscillating strip
//
//     omega_eps = {(x,y) : 0 < x < 1, 0 < y < eps G_eps(x)}
//
// scaled by 1/eps, and their trace limits on y = 0. Strip integrals are
// evaluated in strip coordinates (x,z) -> (x, eps G_eps(x) z), which maps
// the strip onto the unit square with Jacobian eps G_eps(x).

#ifndef BCONC_CONCENTRATION_HPP
#define BCONC_CONCENTRATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include "fe_field.hpp"
#include "geometry.hpp"
#include "oscillation.hpp"
#include "quadrature.hpp"

namespace bconc {

/// Smallest strip width the quadrature is sized for.
inline constexpr double min_eps = 1e-4;

struct StripRegion {
    double eps;
    OscillationProfile profile;

    StripRegion(double e, OscillationProfile p) : eps(e), profile(std::move(p)) { validate(); }

    void validate() const
    {
        check_eps(eps);
        if (eps < min_eps)
            throw std::invalid_argument("strip: eps below the supported window (1e-4)");
        if (!(eps * profile.G1() < 1.0))
            throw std::invalid_argument("strip: eps*G1 >= 1, strip leaves the unit square");
    }

    double G_eps(double x) const { return profile(x, x / eps); }
    /// Upper boundary y = eps G_eps(x).
    double top(double x) const { return eps * G_eps(x); }
};

/// A function on the closed unit square. When `mesh` is set the function is
/// piecewise linear on it and quadrature splits at element boundaries.
struct ScalarField2D {
    std::function<double(double, double)> f;
    std::shared_ptr<const TriMesh> mesh;

    ScalarField2D() = default;
    template <class F, class = std::enable_if_t<!std::is_same_v<std::remove_cvref_t<F>, ScalarField2D> &&
                                                 std::is_invocable_r_v<double, F, double, double>>>
    ScalarField2D(F&& fn) : f(std::forward<F>(fn)) {}

    double operator()(double x, double y) const { return f(x, y); }

    static ScalarField2D constant(double c)
    {
        return ScalarField2D([c](double, double) { return c; });
    }
};

inline ScalarField2D as_scalar_field(FEField u)
{
    ScalarField2D s;
    s.mesh = u.mesh;
    s.f = [field = std::move(u)](double x, double y) { return field(x, y); };
    return s;
}

inline bool strip_contains(const StripRegion& region, const Point2& p)
{
    return p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < region.top(p.x);
}

/// A quadrature node of a strip integral. `weight` already includes the
/// 1/eps scaling and the strip Jacobian, so sum(weight * f) approximates
/// (1/eps) int_{omega_eps} f.
struct StripNode {
    double x, y, weight;
};

namespace detail {

inline std::vector<double> merged_breakpoints(std::size_t uniform_panels, const TriMesh* mesh)
{
    std::vector<double> pts;
    for (std::size_t p = 0; p <= uniform_panels; ++p)
        pts.push_back(static_cast<double>(p) / static_cast<double>(uniform_panels));
    if (mesh) {
        const std::size_t n = mesh->cells_per_side();
        for (std::size_t i = 0; i <= n; ++i)
            pts.push_back(static_cast<double>(i) / static_cast<double>(n));
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double p : pts)
        if (out.empty() || p - out.back() > 1e-14)
            out.push_back(p);
    return out;
}

} // namespace detail

/// Tensor 4x4 Gauss nodes on the strip. x-panels have width at most
/// eps*l0/8. With a mesh, x-panels also break at grid columns and the
/// z-direction breaks where the vertical line at x crosses a grid row or a
/// cell diagonal, so P1 integrands are smooth on every piece.
inline std::vector<StripNode> strip_nodes(const StripRegion& region, const TriMesh* mesh = nullptr)
{
    region.validate();
    const double eps = region.eps;
    const auto panels = static_cast<std::size_t>(std::ceil(8.0 / (eps * region.profile.l0())));
    const std::vector<double> xb = detail::merged_breakpoints(panels, mesh);

    std::vector<StripNode> nodes;
    nodes.reserve((xb.size() - 1) * 16);
    std::vector<double> zb;
    for (std::size_t p = 0; p + 1 < xb.size(); ++p) {
        const double a = xb[p], width = xb[p + 1] - xb[p];
        for (std::size_t qx = 0; qx < gauss4.nodes.size(); ++qx) {
            const double x = a + width * gauss4.nodes[qx];
            const double g = region.G_eps(x);
            const double top = eps * g;
            const double wx = width * gauss4.weights[qx] * g;

            zb.assign({0.0});
            if (mesh) {
                const auto n = mesh->cells_per_side();
                const double dn = static_cast<double>(n);
                const double col = std::min(std::floor(x * dn), dn - 1.0);
                const double shift = x * dn - col;  // diagonal crosses row j at (j + shift)/n
                for (std::size_t j = 0;; ++j) {
                    const double row = static_cast<double>(j) / dn;
                    if (row >= top)
                        break;
                    if (j > 0)
                        zb.push_back(row / top);
                    const double diag = (static_cast<double>(j) + shift) / dn;
                    if (diag < top && diag > row)
                        zb.push_back(diag / top);
                }
            }
            zb.push_back(1.0);

            for (std::size_t k = 0; k + 1 < zb.size(); ++k) {
                const double za = zb[k], zw = zb[k + 1] - zb[k];
                if (zw <= 0.0)
                    continue;
                for (std::size_t qz = 0; qz < gauss4.nodes.size(); ++qz) {
                    const double z = za + zw * gauss4.nodes[qz];
                    nodes.push_back({x, top * z, wx * zw * gauss4.weights[qz]});
                }
            }
        }
    }
    return nodes;
}

inline const TriMesh* shared_mesh(const ScalarField2D& a, const ScalarField2D& b)
{
    if (a.mesh)
        return a.mesh.get();
    return b.mesh.get();
}

/// (1/eps) int_{omega_eps} h phi, evaluated in strip coordinates.
inline double concentrated_integral(const StripRegion& region, const ScalarField2D& h,
                                    const ScalarField2D& phi)
{
    CompensatedSum s;
    for (const StripNode& q : strip_nodes(region, shared_mesh(h, phi)))
        s += q.weight * h(q.x, q.y) * phi(q.x, q.y);
    return s.value();
}

namespace detail {

/// Composite 8-point Gauss over [0,1] on 64 panels, refined at grid
/// columns when a mesh is given.
template <class F>
double boundary_quadrature(F&& f, const TriMesh* mesh)
{
    const std::vector<double> xb = merged_breakpoints(64, mesh);
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < xb.size(); ++p) {
        const double a = xb[p], w = xb[p + 1] - xb[p];
        double part = 0.0;
        for (std::size_t q = 0; q < gauss8.nodes.size(); ++q)
            part += gauss8.weights[q] * f(a + w * gauss8.nodes[q]);
        s += w * part;
    }
    return s;
}

} // namespace detail

/// int_0^1 mu(x) h(x,0) phi(x,0) dx.
inline double trace_integral(const MuCoefficient& mu, const ScalarField2D& h,
                             const ScalarField2D& phi)
{
    return detail::boundary_quadrature(
        [&](double x) { return mu(x) * h(x, 0.0) * phi(x, 0.0); }, shared_mesh(h, phi));
}

inline double concentration_gap(const StripRegion& region, const MuCoefficient& mu,
                                const ScalarField2D& h, const ScalarField2D& phi)
{
    return std::abs(concentrated_integral(region, h, phi) - trace_integral(mu, h, phi));
}

enum class PotentialKind { zero, canonical, y_weighted, custom };

/// A family V_eps concentrated on the strip together with its boundary
/// limit V0. The catalog families are built from V0 and mu so that the
/// concentrated pairing converges to int_Gamma V0 phi.
class PotentialFamily {
public:
    using Boundary = std::function<double(double)>;
    using Strip = std::function<double(double eps, double x, double y)>;

    static PotentialFamily zero()
    {
        return PotentialFamily(
            PotentialKind::zero, [](double) { return 0.0; },
            [](double, double, double) { return 0.0; });
    }

    /// V_eps(x,y) = V0(x) / mu(x).
    static PotentialFamily canonical(Boundary V0, const MuCoefficient& mu)
    {
        auto strip = [V0, mu](double, double x, double) { return V0(x) / mu(x); };
        return PotentialFamily(PotentialKind::canonical, std::move(V0), std::move(strip));
    }

    /// V_eps(x,y) = 2y / (eps G_eps(x)) * V0(x) / mu(x); the linear weight in
    /// z averages to one across the strip.
    static PotentialFamily y_weighted(Boundary V0, const MuCoefficient& mu,
                                      OscillationProfile profile)
    {
        auto strip = [V0, mu, p = std::move(profile)](double eps, double x, double y) {
            const double top = eps * p(x, x / eps);
            return 2.0 * y / top * V0(x) / mu(x);
        };
        return PotentialFamily(PotentialKind::y_weighted, std::move(V0), std::move(strip));
    }

    static PotentialFamily custom(Boundary V0, Strip Veps)
    {
        return PotentialFamily(PotentialKind::custom, std::move(V0), std::move(Veps));
    }

    double V0(double x) const { return boundary_(x); }
    double Veps(double eps, double x, double y) const { return strip_(eps, x, y); }
    const Boundary& boundary() const noexcept { return boundary_; }
    PotentialKind kind() const noexcept { return kind_; }

private:
    PotentialFamily(PotentialKind k, Boundary b, Strip s)
        : kind_(k), boundary_(std::move(b)), strip_(std::move(s)) {}

    PotentialKind kind_;
    Boundary boundary_;
    Strip strip_;
};

/// <T_eps(u), phi> = (1/eps) int_{omega_eps} V_eps u phi.
inline double potential_pairing_eps(const StripRegion& region, const PotentialFamily& family,
                                    const ScalarField2D& u, const ScalarField2D& phi)
{
    CompensatedSum s;
    for (const StripNode& q : strip_nodes(region, shared_mesh(u, phi)))
        s += q.weight * family.Veps(region.eps, q.x, q.y) * u(q.x, q.y) * phi(q.x, q.y);
    return s.value();
}

/// <T_0(u), phi> = int_Gamma V0 u phi.
inline double potential_pairing_limit(const std::function<double(double)>& V0,
                                      const ScalarField2D& u, const ScalarField2D& phi)
{
    return detail::boundary_quadrature(
        [&](double x) { return V0(x) * u(x, 0.0) * phi(x, 0.0); }, shared_mesh(u, phi));
}

/// Finite-dimensional stand-in for ||T_eps - T_0||: the largest normalised
/// pairing gap over all pairs drawn from `test_set`. H1 norms of the test
/// functions are those of their P1 interpolants on `reference`.
inline double operator_gap_proxy(const StripRegion& region, const PotentialFamily& family,
                                 const std::vector<ScalarField2D>& test_set,
                                 std::shared_ptr<const TriMesh> reference)
{
    if (test_set.empty())
        throw std::invalid_argument("operator_gap_proxy: empty test set");

    std::vector<double> norms;
    for (const auto& f : test_set) {
        const double nrm = h1_norm(interpolate(reference, f.f));
        if (!(nrm > 0.0))
            throw std::invalid_argument("operator_gap_proxy: test function with zero H1 norm");
        norms.push_back(nrm);
    }

    const std::vector<StripNode> nodes = strip_nodes(region);
    double worst = 0.0;
    for (std::size_t a = 0; a < test_set.size(); ++a) {
        for (std::size_t b = a; b < test_set.size(); ++b) {
            const auto& u = test_set[a];
            const auto& phi = test_set[b];
            CompensatedSum acc;
            for (const StripNode& q : nodes)
                acc += q.weight * family.Veps(region.eps, q.x, q.y) * u(q.x, q.y) * phi(q.x, q.y);
            const double eps_side = acc.value();
            const double limit_side = potential_pairing_limit(family.boundary(), u, phi);
            worst = std::max(worst, std::abs(eps_side - limit_side) / (norms[a] * norms[b]));
        }
    }
    return worst;
}

inline double operator_gap_proxy(const StripRegion& region, const PotentialFamily& family,
                                 const std::vector<ScalarField2D>& test_set)
{
    return operator_gap_proxy(region, family, test_set, build_uniform_mesh(64));
}

/// max over fields of ((1/eps) int_{omega_eps} |v|^q) / ||v||_{H1}^q.
inline double verify_uniform_bound(const StripRegion& region, int q,
                                   const std::vector<FEField>& fields)
{
    if (q != 2 && q != 4)
        throw std::invalid_argument("verify_uniform_bound: q must be 2 or 4");
    if (fields.empty())
        throw std::invalid_argument("verify_uniform_bound: no sample fields");

    double worst = 0.0;
    const TriMesh* cached_mesh = nullptr;
    std::vector<StripNode> nodes;
    for (const FEField& v : fields) {
        const double nrm = h1_norm(v);
        if (!(nrm > 0.0))
            throw std::invalid_argument("verify_uniform_bound: field with zero H1 norm");
        if (v.mesh.get() != cached_mesh) {
            cached_mesh = v.mesh.get();
            nodes = strip_nodes(region, cached_mesh);
        }
        CompensatedSum s;
        for (const StripNode& node : nodes) {
            const double val = std::abs(v(node.x, node.y));
            s += node.weight * (q == 2 ? val * val : val * val * val * val);
        }
        worst = std::max(worst, s.value() / std::pow(nrm, q));
    }
    return worst;
}

} // namespace bconc

#endif
