// nonlinearity.hpp
//
// Reaction terms f(x, y, u) and the C1 cut-off that makes them globally
// Lipschitz outside |u| <= R without touching solutions bounded by R.

#ifndef BCONC_NONLINEARITY_HPP
#define BCONC_NONLINEARITY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bconc {

/// Identity on |u| <= R, constant R + 1/2 for |u| >= R + 1, and the
/// quadratic blend R + t - t^2/2 (t = |u| - R) between, which matches value
/// and slope at both junctions.
struct Cutoff {
    double R = 2.0;

    double value(double u) const
    {
        const double a = std::abs(u);
        if (a <= R)
            return u;
        const double t = std::min(a - R, 1.0);
        return std::copysign(R + t - 0.5 * t * t, u);
    }

    double derivative(double u) const
    {
        const double a = std::abs(u);
        if (a <= R)
            return 1.0;
        return a >= R + 1.0 ? 0.0 : 1.0 - (a - R);
    }
};

class Nonlinearity {
public:
    using Function = std::function<double(double x, double y, double u)>;

    /// f = 0.
    static Nonlinearity zero(double R = 2.0) { return affine(0.0, 0.0, R); }

    /// f = a u + b.
    static Nonlinearity affine(double a, double b, double R = 2.0)
    {
        return Nonlinearity(
            "affine", {a, b}, R, [a, b](double, double, double u) { return a * u + b; },
            [a](double, double, double) { return a; }, a == 0.0);
    }

    /// f = u - u^3.
    static Nonlinearity logistic(double R = 2.0)
    {
        return Nonlinearity(
            "logistic", {}, R, [](double, double, double u) { return u - u * u * u; },
            [](double, double, double u) { return 1.0 - 3.0 * u * u; }, false);
    }

    /// f = a u / (1 + u^2).
    static Nonlinearity saturating(double a = 1.0, double R = 2.0)
    {
        return Nonlinearity(
            "saturating", {a}, R,
            [a](double, double, double u) { return a * u / (1.0 + u * u); },
            [a](double, double, double u) {
                const double d = 1.0 + u * u;
                return a * (1.0 - u * u) / (d * d);
            },
            false);
    }

    /// u-independent source f = g(x, y).
    static Nonlinearity source(std::function<double(double, double)> g, double R = 2.0)
    {
        return Nonlinearity(
            "source", {}, R, [g = std::move(g)](double x, double y, double) { return g(x, y); },
            [](double, double, double) { return 0.0; }, true);
    }

    double operator()(double x, double y, double u) const { return f_(x, y, cutoff_.value(u)); }

    /// d/du of the cut-off nonlinearity.
    double derivative(double x, double y, double u) const
    {
        return df_(x, y, cutoff_.value(u)) * cutoff_.derivative(u);
    }

    const std::string& tag() const noexcept { return tag_; }
    const std::vector<double>& params() const noexcept { return params_; }
    double radius() const noexcept { return cutoff_.R; }
    /// True when f does not depend on u at all.
    bool u_independent() const noexcept { return u_independent_; }

private:
    Nonlinearity(std::string tag, std::vector<double> params, double R, Function f, Function df,
                 bool u_independent)
        : tag_(std::move(tag)), params_(std::move(params)), cutoff_{R}, f_(std::move(f)),
          df_(std::move(df)), u_independent_(u_independent)
    {
        if (!(R > 0.0) || !std::isfinite(R))
            throw std::invalid_argument("nonlinearity cut-off radius R must be positive");
    }

    std::string tag_;
    std::vector<double> params_;
    Cutoff cutoff_;
    Function f_;
    Function df_;
    bool u_independent_;
};

} // namespace bconc

#endif
