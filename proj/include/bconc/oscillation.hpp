// oscillation.hpp
//
// The oscillating strip profile G(x,y), periodic in y with period l(x), its
// rescaled form G_eps(x) = G(x, x/eps) and the period average mu(x) that
// G_eps converges to weakly-*.

#ifndef BCONC_OSCILLATION_HPP
#define BCONC_OSCILLATION_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "quadrature.hpp"

namespace bconc {

enum class ProfileKind { constant, pure_periodic, x_modulated, custom_sampled };

inline std::string to_string(ProfileKind k)
{
    switch (k) {
    case ProfileKind::constant: return "constant";
    case ProfileKind::pure_periodic: return "pure-periodic";
    case ProfileKind::x_modulated: return "x-modulated";
    case ProfileKind::custom_sampled: return "custom-sampled";
    }
    return "unknown";
}

struct ProfileBounds {
    double G0, G1;  // 0 < G0 <= G <= G1
    double l0, l1;  // 0 < l0 <= l <= l1
};

/// Immutable value object. The catalog constructors and `custom` all verify
/// the advertised bounds and the periodicity on a 100 x 100 sample grid.
class OscillationProfile {
public:
    using Function2 = std::function<double(double, double)>;
    using Function1 = std::function<double(double)>;

    /// G = c.
    static OscillationProfile constant(double c)
    {
        return OscillationProfile(
            ProfileKind::constant, {c}, [c](double, double) { return c; },
            [](double) { return 1.0; }, {c, c, 1.0, 1.0});
    }

    /// G = a + b cos(2 pi y / L), requires a > b >= 0 and L > 0.
    static OscillationProfile pure_periodic(double a, double b, double L)
    {
        if (!(a > b && b >= 0.0))
            throw std::invalid_argument("pure-periodic profile requires a > b >= 0");
        if (!(L > 0.0))
            throw std::invalid_argument("pure-periodic profile requires period L > 0");
        const double k = 2.0 * std::numbers::pi / L;
        return OscillationProfile(
            ProfileKind::pure_periodic, {a, b, L},
            [a, b, k](double, double y) { return a + b * std::cos(k * y); },
            [L](double) { return L; }, {a - b, a + b, L, L});
    }

    /// G = 1 + a x sin^2(2 pi y), l = 1. The default a = 1 gives mu = 1 + x/2.
    static OscillationProfile x_modulated(double a = 1.0)
    {
        if (!(a >= 0.0))
            throw std::invalid_argument("x-modulated profile requires a >= 0");
        return OscillationProfile(
            ProfileKind::x_modulated, {a},
            [a](double x, double y) {
                const double s = std::sin(2.0 * std::numbers::pi * y);
                return 1.0 + a * x * s * s;
            },
            [](double) { return 1.0; }, {1.0, 1.0 + a, 1.0, 1.0});
    }

    /// Any continuous profile with a (possibly x-dependent) period.
    static OscillationProfile custom(Function2 G, Function1 period, ProfileBounds bounds)
    {
        return OscillationProfile(ProfileKind::custom_sampled, {}, std::move(G), std::move(period),
                                  bounds);
    }

    double operator()(double x, double y) const { return G_(x, y); }
    double period(double x) const { return period_(x); }
    const ProfileBounds& bounds() const noexcept { return bounds_; }
    double G0() const noexcept { return bounds_.G0; }
    double G1() const noexcept { return bounds_.G1; }
    double l0() const noexcept { return bounds_.l0; }
    double l1() const noexcept { return bounds_.l1; }
    ProfileKind kind() const noexcept { return kind_; }
    const std::vector<double>& params() const noexcept { return params_; }

private:
    OscillationProfile(ProfileKind kind, std::vector<double> params, Function2 G, Function1 period,
                       ProfileBounds bounds)
        : kind_(kind), params_(std::move(params)), G_(std::move(G)), period_(std::move(period)),
          bounds_(bounds)
    {
        verify();
    }

    void verify() const;

    ProfileKind kind_;
    std::vector<double> params_;
    Function2 G_;
    Function1 period_;
    ProfileBounds bounds_;
};

inline void OscillationProfile::verify() const
{
    const auto& b = bounds_;
    if (!(b.G0 > 0.0 && b.G0 <= b.G1 && std::isfinite(b.G1)))
        throw std::invalid_argument("profile bounds must satisfy 0 < G0 <= G1");
    if (!(b.l0 > 0.0 && b.l0 <= b.l1 && std::isfinite(b.l1)))
        throw std::invalid_argument("profile period bounds must satisfy 0 < l0 <= l1");

    constexpr int samples = 100;
    constexpr double slack = 1e-12;
    for (int ix = 0; ix < samples; ++ix) {
        const double x = (ix + 0.5) / samples;
        const double l = period_(x);
        if (!(l >= b.l0 - slack && l <= b.l1 + slack))
            throw std::invalid_argument("profile period l(x) outside [l0, l1] at x = " +
                                        std::to_string(x));
        for (int iy = 0; iy < samples; ++iy) {
            const double y = l * iy / samples;
            const double g = G_(x, y);
            if (!(g >= b.G0 - slack && g <= b.G1 + slack))
                throw std::invalid_argument("profile G(x,y) outside [G0, G1] at (" +
                                            std::to_string(x) + ", " + std::to_string(y) + ")");
            if (std::abs(G_(x, y + l) - g) >= 1e-12)
                throw std::invalid_argument("profile G(x, .) is not l(x)-periodic at x = " +
                                            std::to_string(x));
        }
    }
}

inline void check_eps(double eps)
{
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw std::invalid_argument("eps must be a positive finite number");
}

/// G_eps(x) = G(x, x/eps).
inline double eval_G_eps(const OscillationProfile& profile, double eps, double x)
{
    check_eps(eps);
    return profile(x, x / eps);
}

/// Period average of G(x, .). Composite 8-point Gauss-Legendre, doubling
/// the panel count until two successive estimates agree to 1e-12.
inline double cell_average_mu(const OscillationProfile& profile, double x)
{
    if (!(x >= 0.0 && x <= 1.0))
        throw std::out_of_range("cell_average_mu: x outside [0,1]");
    if (profile.kind() == ProfileKind::constant)
        return profile.params()[0];

    const double l = profile.period(x);
    auto g = [&](double y) { return profile(x, y); };
    double prev = composite(gauss8, g, 0.0, l, 1) / l;
    for (std::size_t panels = 2; panels <= (1u << 20); panels *= 2) {
        const double cur = composite(gauss8, g, 0.0, l, panels) / l;
        if (std::abs(cur - prev) < 1e-12)
            return cur;
        prev = cur;
    }
    throw std::runtime_error("cell_average_mu: quadrature did not reach 1e-12");
}

/// The homogenised boundary coefficient mu(x). Carries an optional scale
/// factor (1 in normal use; the verification CLI can distort it).
class MuCoefficient {
public:
    static MuCoefficient from_profile(OscillationProfile profile)
    {
        // x-independent kinds: one quadrature instead of one per evaluation
        if (profile.kind() == ProfileKind::constant || profile.kind() == ProfileKind::pure_periodic)
            return constant(cell_average_mu(profile, 0.5));
        return MuCoefficient([p = std::move(profile)](double x) { return cell_average_mu(p, x); });
    }
    static MuCoefficient constant(double c)
    {
        return MuCoefficient([c](double) { return c; });
    }
    static MuCoefficient from_function(std::function<double(double)> f)
    {
        return MuCoefficient(std::move(f));
    }

    double operator()(double x) const { return scale_ * eval_(x); }

    MuCoefficient scaled(double factor) const
    {
        MuCoefficient m = *this;
        m.scale_ *= factor;
        return m;
    }

    /// mu at the vertices on y = 0, ordered by x.
    std::vector<double> sample(const TriMesh& mesh) const
    {
        std::vector<double> out;
        out.reserve(mesh.cells_per_side() + 1);
        for (std::size_t i = 0; i <= mesh.cells_per_side(); ++i)
            out.push_back((*this)(mesh.vertex(mesh.vertex_index(i, 0)).x));
        return out;
    }

private:
    explicit MuCoefficient(std::function<double(double)> f) : eval_(std::move(f)) {}

    std::function<double(double)> eval_;
    double scale_ = 1.0;
};

/// |int_0^1 (G_eps - mu) phi dx|, 8-point Gauss on panels of width at most
/// eps*l0/8 so every oscillation period holds at least eight panels.
inline double weak_star_residual(const OscillationProfile& profile, double eps,
                                 const std::function<double(double)>& phi,
                                 const MuCoefficient& mu)
{
    check_eps(eps);
    const auto panels = static_cast<std::size_t>(std::ceil(8.0 / (eps * profile.l0())));
    auto integrand = [&](double x) { return (profile(x, x / eps) - mu(x)) * phi(x); };
    return std::abs(composite(gauss8, integrand, 0.0, 1.0, panels));
}

inline double weak_star_residual(const OscillationProfile& profile, double eps,
                                 const std::function<double(double)>& phi)
{
    return weak_star_residual(profile, eps, phi, MuCoefficient::from_profile(profile));
}

} // namespace bconc

#endif
