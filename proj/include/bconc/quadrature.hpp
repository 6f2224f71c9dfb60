// quadrature.hpp
//
// Fixed Gauss rules used throughout: Gauss-Legendre on an interval and a
// degree-4 symmetric rule on triangles.

#ifndef BCONC_QUADRATURE_HPP
#define BCONC_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace bconc {

template <std::size_t N>
struct GaussRule1D {
    std::array<double, N> nodes;    // on [0,1]
    std::array<double, N> weights;  // sum to 1
};

namespace detail {

template <std::size_t N, std::size_t H>
constexpr GaussRule1D<N> unit_interval_rule(const std::array<double, H>& xi,
                                            const std::array<double, H>& wi)
{
    static_assert(N == 2 * H);
    GaussRule1D<N> r{};
    for (std::size_t k = 0; k < H; ++k) {
        r.nodes[H - 1 - k] = 0.5 * (1.0 - xi[k]);
        r.nodes[H + k]     = 0.5 * (1.0 + xi[k]);
        r.weights[H - 1 - k] = 0.5 * wi[k];
        r.weights[H + k]     = 0.5 * wi[k];
    }
    return r;
}

} // namespace detail

/// 4-point Gauss-Legendre, exact for degree 7.
inline constexpr GaussRule1D<4> gauss4 = detail::unit_interval_rule<4, 2>(
    {0.33998104358485626480, 0.86113631159405257522},
    {0.65214515486254614263, 0.34785484513745385737});

/// 8-point Gauss-Legendre, exact for degree 15.
inline constexpr GaussRule1D<8> gauss8 = detail::unit_interval_rule<8, 4>(
    {0.18343464249564980494, 0.52553240991632898582,
     0.79666647741362673959, 0.96028985649753623168},
    {0.36268378337836198297, 0.31370664587788728734,
     0.22238103445337447054, 0.10122853629037625915});

/// Composite rule: integrate f over [a,b] with `panels` equal panels.
template <std::size_t N, class F>
double composite(const GaussRule1D<N>& rule, F&& f, double a, double b, std::size_t panels)
{
    if (panels == 0)
        throw std::invalid_argument("composite quadrature: zero panels");
    const double width = (b - a) / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double left = a + width * static_cast<double>(p);
        double s = 0.0;
        for (std::size_t q = 0; q < N; ++q)
            s += rule.weights[q] * f(left + width * rule.nodes[q]);
        total += s * width;
    }
    return total;
}

/// Degree-4 six-point symmetric triangle rule (Dunavant). Barycentric
/// coordinates and weights normalised to sum to one.
struct TriangleRule {
    std::array<std::array<double, 3>, 6> bary;
    std::array<double, 6> weights;
};

inline constexpr TriangleRule triangle_degree4 = [] {
    constexpr double a1 = 0.44594849091596488632, b1 = 1.0 - 2.0 * a1;
    constexpr double a2 = 0.09157621350977074346, b2 = 1.0 - 2.0 * a2;
    constexpr double w1 = 0.22338158967801146569,
                     w2 = 0.10995174365532186739;
    TriangleRule r{};
    r.bary = {{{a1, a1, b1}, {a1, b1, a1}, {b1, a1, a1},
               {a2, a2, b2}, {a2, b2, a2}, {b2, a2, a2}}};
    r.weights = {w1, w1, w1, w2, w2, w2};
    return r;
}();

/// Neumaier compensated sum. Strip rules at small eps have ~1e5 nodes.
class CompensatedSum {
public:
    CompensatedSum& operator+=(double v)
    {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            carry_ += (sum_ - t) + v;
        else
            carry_ += (v - t) + sum_;
        sum_ = t;
        return *this;
    }
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

} // namespace bconc

#endif
