// study.hpp
//
// Eps sweeps (u^eps_h against the same-mesh limit solution u_h), mesh
// refinement against a manufactured or finest-mesh reference, the lemma
// suite of concentration diagnostics, and CSV tables for all three.

#ifndef BCONC_STUDY_HPP
#define BCONC_STUDY_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "concentration.hpp"
#include "solver.hpp"

namespace bconc {

// ---------------------------------------------------------------------------
// Deterministic helpers

/// Uniform double in [0,1) from the top 53 bits. std::uniform_real_distribution
/// is implementation-defined; this is not.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// sum_{k,l <= 3} c_kl cos(k pi x) cos(l pi y), c_kl uniform in [-1,1).
inline std::function<double(double, double)> random_cosine_series(std::mt19937_64& rng)
{
    std::array<double, 16> c{};
    for (double& v : c)
        v = 2.0 * unit_uniform(rng) - 1.0;
    return [c](double x, double y) {
        constexpr double pi = std::numbers::pi;
        double s = 0.0;
        for (int k = 0; k < 4; ++k)
            for (int l = 0; l < 4; ++l)
                s += c[static_cast<std::size_t>(4 * k + l)] * std::cos(k * pi * x) * std::cos(l * pi * y);
        return s;
    };
}

/// Interpolated random series scaled to max |u| = bound at the vertices.
inline FEField random_bounded_field(std::shared_ptr<const TriMesh> mesh, std::mt19937_64& rng, double bound)
{
    FEField u = interpolate(mesh, random_cosine_series(rng));
    double m = 0.0;
    for (double v : u.values)
        m = std::max(m, std::abs(v));
    for (double& v : u.values)
        v *= bound / m;
    return u;
}

/// Independent uniform nodal values in [-1, 1], scaled to unit H1 norm.
inline FEField random_unit_field(std::shared_ptr<const TriMesh> mesh, std::mt19937_64& rng)
{
    FEField u = FEField::zero(std::move(mesh));
    for (double& v : u.values)
        v = 2.0 * unit_uniform(rng) - 1.0;
    const double nrm = h1_norm(u);
    for (double& v : u.values)
        v /= nrm;
    return u;
}

/// Test functions for the operator gap: 1, x, y, cos(pi x), cos(pi y).
inline std::vector<ScalarField2D> standard_test_set()
{
    constexpr double pi = std::numbers::pi;
    return {ScalarField2D::constant(1.0), ScalarField2D([](double x, double) { return x; }),
            ScalarField2D([](double, double y) { return y; }),
            ScalarField2D([](double x, double) { return std::cos(pi * x); }),
            ScalarField2D([](double, double y) { return std::cos(pi * y); })};
}

/// Test functions for the weak-star residual: 1, x, e^x, cos(pi x), 1/(1+x).
inline std::vector<std::function<double(double)>> standard_line_tests()
{
    return {[](double) { return 1.0; }, [](double x) { return x; }, [](double x) { return std::exp(x); },
            [](double x) { return std::cos(std::numbers::pi * x); }, [](double x) { return 1.0 / (1.0 + x); }};
}

/// The fixed smooth pair of the concentration diagnostics:
/// h = e^x (1 + y), phi = cos(pi x).
inline std::pair<ScalarField2D, ScalarField2D> standard_concentration_pair()
{
    return {ScalarField2D([](double x, double y) { return std::exp(x) * (1.0 + y); }),
            ScalarField2D([](double x, double) { return std::cos(std::numbers::pi * x); })};
}

inline double max_weak_star_residual(const OscillationProfile& profile, double eps, const MuCoefficient& mu)
{
    double r = 0.0;
    for (const auto& phi : standard_line_tests())
        r = std::max(r, weak_star_residual(profile, eps, phi, mu));
    return r;
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
/// writes only its own output slot, so results do not depend on scheduling.
/// The exception of the lowest failing index is rethrown.
template <class Body>
void parallel_for_index(std::size_t count, std::size_t threads, Body&& body)
{
    threads = std::max<std::size_t>(1, std::min(threads, count));
    std::vector<std::exception_ptr> errors(count);
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& th : pool)
            th.join();
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

/// n(eps) = ceil(c_mesh / eps), guarded against 8 / 0.025 = 320.00000000000006.
inline std::size_t mesh_size_for(double eps, double c_mesh)
{
    return static_cast<std::size_t>(std::ceil(c_mesh / eps * (1.0 - 1e-12)));
}

/// The limit problem paired with an eps problem: mu from the profile, V0
/// from the potential family, same lambda and nonlinearities.
inline ProblemSpec limit_problem_of(const ProblemSpec& spec, double mu_scale = 1.0)
{
    const auto* e = std::get_if<EpsMode>(&spec.mode);
    if (!e)
        throw std::invalid_argument("limit_problem_of: spec is not an eps problem");
    ProblemSpec lim = spec;
    lim.mode = LimitMode{MuCoefficient::from_profile(e->profile).scaled(mu_scale), e->potential.boundary()};
    return lim;
}

// ---------------------------------------------------------------------------
// Eps sweep

struct SweepConfig {
    std::vector<double> eps_list;  // strictly decreasing
    double c_mesh = 8.0;
    ProblemSpec spec;  // eps mode; the eps field is replaced row by row
    SolveOptions opts;
    std::size_t threads = 1;
    double mu_scale = 1.0;  // debug distortion of the limit coefficient
    std::function<void(const std::string&)> log;  // optional progress sink
};

struct SweepRow {
    double eps = 0.0;
    std::size_t n = 0;
    double h = 0.0;
    double h1_error = 0.0;
    double l2_error = 0.0;
    std::size_t picard_iters = 0;
    double coercivity_eps = 0.0;
    double coercivity_limit = 0.0;
    double concentration_gap = 0.0;
    double weak_star_residual = 0.0;
    double operator_gap_proxy = 0.0;
    double wall_time = 0.0;  // seconds
    bool converged = false;  // both solves of the row converged

    bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    bool operator==(const SweepResult&) const = default;
};

inline void validate_sweep(const SweepConfig& cfg)
{
    const auto* e = std::get_if<EpsMode>(&cfg.spec.mode);
    if (!e)
        throw ConfigError("problem.mode", "the sweep needs an eps problem");
    if (cfg.eps_list.empty())
        throw ConfigError("study.eps_list", "empty eps list");
    for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
        const double eps = cfg.eps_list[i];
        if (!(eps >= min_eps) || !std::isfinite(eps))
            throw ConfigError("study.eps_list", "entry " + std::to_string(i) + " is not a valid eps");
        if (eps * e->profile.G1() >= 1.0)
            throw ConfigError("study.eps_list", "eps * G1 >= 1 at entry " + std::to_string(i));
        if (i > 0 && !(eps < cfg.eps_list[i - 1]))
            throw ConfigError("study.eps_list", "eps list must be strictly decreasing");
    }
    if (!(cfg.c_mesh >= 8.0))
        throw ConfigError("study.c_mesh", "c_mesh must be at least 8");
}

/// Solves the eps problem and the limit problem on the mesh n(eps) for every
/// eps. Limit solutions are computed once per distinct n. Non-converged
/// solves mark the row; indefinite systems propagate IndefiniteSystem.
inline SweepResult run_eps_sweep(const SweepConfig& cfg)
{
    using clock = std::chrono::steady_clock;
    validate_sweep(cfg);
    const auto& emode = std::get<EpsMode>(cfg.spec.mode);
    const ProblemSpec limit_spec = limit_problem_of(cfg.spec, cfg.mu_scale);
    const MuCoefficient mu = std::get<LimitMode>(limit_spec.mode).mu;

    std::vector<std::size_t> sizes;
    for (double eps : cfg.eps_list)
        sizes.push_back(mesh_size_for(eps, cfg.c_mesh));
    std::vector<std::size_t> distinct = sizes;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    struct LimitSolution {
        std::shared_ptr<const TriMesh> mesh;
        FEField u;
        SolveReport report;
        double seconds = 0.0;
    };
    std::vector<LimitSolution> limits(distinct.size());
    parallel_for_index(distinct.size(), cfg.threads, [&](std::size_t i) {
        const auto t0 = clock::now();
        auto mesh = build_uniform_mesh(distinct[i]);
        auto [u, rep] = solve(DiscreteSystem(mesh, limit_spec), cfg.opts);
        limits[i] = {mesh, std::move(u), std::move(rep),
                     std::chrono::duration<double>(clock::now() - t0).count()};
    });
    auto limit_index = [&](std::size_t n) {
        return static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), n) - distinct.begin());
    };

    const auto [h_pair, phi_pair] = standard_concentration_pair();
    const auto test_set = standard_test_set();
    const auto reference = build_uniform_mesh(64);

    SweepResult result;
    result.rows.resize(cfg.eps_list.size());
    parallel_for_index(cfg.eps_list.size(), cfg.threads, [&](std::size_t i) {
        const auto t0 = clock::now();
        const double eps = cfg.eps_list[i];
        const LimitSolution& lim = limits[limit_index(sizes[i])];

        ProblemSpec spec = cfg.spec;
        std::get<EpsMode>(spec.mode).eps = eps;
        auto [u, rep] = solve(DiscreteSystem(lim.mesh, spec), cfg.opts);

        const StripRegion region(eps, emode.profile);
        SweepRow& row = result.rows[i];
        row.eps = eps;
        row.n = sizes[i];
        row.h = lim.mesh->h();
        row.h1_error = h1_error(u, lim.u);
        row.l2_error = l2_error(u, lim.u);
        row.picard_iters = rep.iterations;
        row.coercivity_eps = rep.coercivity;
        row.coercivity_limit = lim.report.coercivity;
        row.concentration_gap = concentration_gap(region, mu, h_pair, phi_pair);
        row.weak_star_residual = max_weak_star_residual(emode.profile, eps, mu);
        row.operator_gap_proxy = operator_gap_proxy(region, emode.potential, test_set, reference);
        row.converged = rep.converged && lim.report.converged;
        // the first row on a mesh also pays for its limit solve
        const bool first_on_mesh = std::find(sizes.begin(), sizes.end(), sizes[i]) - sizes.begin() ==
                                   static_cast<std::ptrdiff_t>(i);
        row.wall_time = std::chrono::duration<double>(clock::now() - t0).count() +
                        (first_on_mesh ? lim.seconds : 0.0);
    });

    if (cfg.log)
        for (const auto& r : result.rows) {
            char buf[256];
            std::snprintf(buf, sizeof buf, "eps=%.6g n=%zu h1_error=%.6e iters=%zu converged=%d wall_time=%.2fs",
                          r.eps, r.n, r.h1_error, r.picard_iters, r.converged ? 1 : 0, r.wall_time);
            cfg.log(buf);
        }
    return result;
}

// ---------------------------------------------------------------------------
// Mesh refinement

/// Exact solution with its gradient, for true discretization errors.
struct ExactSolution {
    std::function<double(double, double)> u;
    std::function<std::array<double, 2>(double, double)> grad;
};

/// H1 and L2 errors of a P1 field against an exact solution, degree-4
/// quadrature per triangle.
inline std::pair<double, double> errors_against(const FEField& uh, const ExactSolution& ex)
{
    const TriMesh& m = *uh.mesh;
    CompensatedSum grad_part, mass_part;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const Triangle& tri = m.triangle(t);
        const Point2 &a = m.vertex(tri[0]), &b = m.vertex(tri[1]), &c = m.vertex(tri[2]);
        const double ua = uh.values[tri[0]], ub = uh.values[tri[1]], uc = uh.values[tri[2]];
        const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        const double area = 0.5 * det;
        const double gx = ((ub - ua) * (c.y - a.y) - (uc - ua) * (b.y - a.y)) / det;
        const double gy = ((uc - ua) * (b.x - a.x) - (ub - ua) * (c.x - a.x)) / det;
        for (std::size_t q = 0; q < triangle_degree4.weights.size(); ++q) {
            const auto& l = triangle_degree4.bary[q];
            const double x = l[0] * a.x + l[1] * b.x + l[2] * c.x;
            const double y = l[0] * a.y + l[1] * b.y + l[2] * c.y;
            const double w = area * triangle_degree4.weights[q];
            const double e = l[0] * ua + l[1] * ub + l[2] * uc - ex.u(x, y);
            const auto g = ex.grad(x, y);
            grad_part += w * ((gx - g[0]) * (gx - g[0]) + (gy - g[1]) * (gy - g[1]));
            mass_part += w * e * e;
        }
    }
    return {std::sqrt(grad_part.value() + mass_part.value()), std::sqrt(mass_part.value())};
}

/// The coarse field evaluated at the vertices of `fine`; exact on nested meshes.
inline FEField prolongate(const FEField& coarse, std::shared_ptr<const TriMesh> fine)
{
    return interpolate(std::move(fine), [&](double x, double y) { return coarse(x, y); });
}

struct RefinementRow {
    std::size_t n = 0;
    double h = 0.0;
    double h1_error = 0.0;
    double l2_error = 0.0;
    double h1_order = std::nan("");  // against the previous row
    double l2_order = std::nan("");
    std::size_t iterations = 0;
    bool converged = false;
};

struct RefinementResult {
    std::vector<RefinementRow> rows;
};

/// Solves `spec` on each n in n_list. Errors are measured against `exact`
/// when given, otherwise against the finest-mesh solution by prolongation of
/// each coarse solution (the finest row then has zero error).
inline RefinementResult run_mesh_refinement(const ProblemSpec& spec, std::vector<std::size_t> n_list,
                                            const SolveOptions& opts,
                                            const std::optional<ExactSolution>& exact = std::nullopt,
                                            std::size_t threads = 1)
{
    if (n_list.empty())
        throw std::invalid_argument("run_mesh_refinement: empty mesh list");
    std::sort(n_list.begin(), n_list.end());
    std::vector<std::pair<FEField, SolveReport>> sols(n_list.size());
    parallel_for_index(n_list.size(), threads, [&](std::size_t i) {
        sols[i] = solve(DiscreteSystem(build_uniform_mesh(n_list[i]), spec), opts);
    });

    RefinementResult res;
    const FEField& finest = sols.back().first;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        RefinementRow r;
        r.n = n_list[i];
        r.h = sols[i].first.mesh->h();
        r.iterations = sols[i].second.iterations;
        r.converged = sols[i].second.converged;
        if (exact) {
            std::tie(r.h1_error, r.l2_error) = errors_against(sols[i].first, *exact);
        } else {
            const FEField up = prolongate(sols[i].first, finest.mesh);
            r.h1_error = h1_error(up, finest);
            r.l2_error = l2_error(up, finest);
        }
        if (i > 0) {
            const auto& p = res.rows.back();
            const double dh = std::log(p.h / r.h);
            if (r.h1_error > 0.0 && p.h1_error > 0.0)
                r.h1_order = std::log(p.h1_error / r.h1_error) / dh;
            if (r.l2_error > 0.0 && p.l2_error > 0.0)
                r.l2_order = std::log(p.l2_error / r.l2_error) / dh;
        }
        res.rows.push_back(r);
    }
    return res;
}

/// Limit problem with exact solution u* = cos(pi x) cos(pi y) + 2: V0 = 1,
/// mu = 2, u-independent f1 = (2 pi^2 + lambda) cos(pi x) cos(pi y) + 2 lambda
/// and f0 = u*(x,0) / 2, so that du/dn + V0 u = mu f0 holds on Gamma.
inline std::pair<ProblemSpec, ExactSolution> manufactured_problem(double lambda = 1.0)
{
    constexpr double pi = std::numbers::pi;
    ProblemSpec s;
    s.lambda = lambda;
    s.mode = LimitMode{MuCoefficient::constant(2.0), [](double) { return 1.0; }};
    s.f1 = Nonlinearity::source([lambda](double x, double y) {
        return (2.0 * pi * pi + lambda) * std::cos(pi * x) * std::cos(pi * y) + 2.0 * lambda;
    });
    s.f0 = Nonlinearity::source([](double x, double) { return 0.5 * (std::cos(pi * x) + 2.0); });
    ExactSolution ex{[](double x, double y) { return std::cos(pi * x) * std::cos(pi * y) + 2.0; },
                     [](double x, double y) {
                         return std::array<double, 2>{-pi * std::sin(pi * x) * std::cos(pi * y),
                                                      -pi * std::cos(pi * x) * std::sin(pi * y)};
                     }};
    return {s, ex};
}

/// f1 = lambda c, no potential and no boundary source: u = c exactly.
inline ProblemSpec constant_solution_problem(double lambda, double c)
{
    ProblemSpec s;
    s.lambda = lambda;
    s.mode = LimitMode{};
    s.f1 = Nonlinearity::source([v = lambda * c](double, double) { return v; });
    return s;
}

// ---------------------------------------------------------------------------
// Lemma suite

struct LemmaConfig {
    OscillationProfile profile = OscillationProfile::pure_periodic(2.0, 1.0, 1.0);
    PotentialKind family = PotentialKind::canonical;  // canonical or y_weighted
    std::function<double(double)> V0 = [](double) { return 1.0; };
    Nonlinearity f0 = Nonlinearity::saturating(1.0, 2.0);
    std::vector<double> eps_list;
    std::size_t mesh_n = 64;
    std::size_t random_fields = 10;
    std::uint64_t seed = 20240611;
    /// Debug distortion of mu wherever it enters (1 in normal use).
    double mu_scale = 1.0;
    std::size_t threads = 1;
};

struct LemmaRow {
    double eps = 0.0;
    double weak_star_residual = 0.0;
    double concentration_gap = 0.0;
    double operator_gap_proxy = 0.0;
    double uniform_bound_q2 = 0.0;
    double uniform_bound_q4 = 0.0;
    double load_gap = 0.0;
};

struct LemmaCheck {
    std::string column;
    bool passed = false;
    std::string detail;
};

struct LemmaResult {
    std::vector<LemmaRow> rows;
    std::vector<LemmaCheck> checks;

    bool all_passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.passed; });
    }
};

inline PotentialFamily make_family(PotentialKind kind, std::function<double(double)> V0, const MuCoefficient& mu,
                                   const OscillationProfile& profile)
{
    switch (kind) {
    case PotentialKind::canonical: return PotentialFamily::canonical(std::move(V0), mu);
    case PotentialKind::y_weighted: return PotentialFamily::y_weighted(std::move(V0), mu, profile);
    case PotentialKind::zero: return PotentialFamily::zero();
    default: throw std::invalid_argument("make_family: custom families cannot be built from V0");
    }
}

namespace detail {

/// A gap column passes when it is negligible throughout or strictly
/// decreasing. The overall reduction is reported, not asserted.
inline LemmaCheck check_decrease(const std::string& name, const std::vector<double>& eps,
                                 const std::vector<double>& col)
{
    LemmaCheck c{name, false, {}};
    char buf[256];
    if (std::all_of(col.begin(), col.end(), [](double v) { return v < 1e-8; })) {
        c.passed = true;
        c.detail = "all values below 1e-8";
        return c;
    }
    for (std::size_t i = 1; i < col.size(); ++i)
        if (!(col[i] < col[i - 1])) {
            std::snprintf(buf, sizeof buf, "not strictly decreasing at eps=%.6g (%.6e >= %.6e)", eps[i], col[i],
                          col[i - 1]);
            c.detail = buf;
            return c;
        }
    std::snprintf(buf, sizeof buf, "strictly decreasing, last/first = %.4g", col.back() / col.front());
    c.detail = buf;
    c.passed = true;
    return c;
}

inline LemmaCheck check_bounded(const std::string& name, const std::vector<double>& col, double G1)
{
    const double lo = *std::min_element(col.begin(), col.end());
    const double hi = *std::max_element(col.begin(), col.end());
    char buf[256];
    std::snprintf(buf, sizeof buf, "max/min = %.4g (needs < 2), max = %.4g (needs <= %.4g)", hi / lo, hi,
                  4.0 * G1);
    return {name, lo > 0.0 && hi / lo < 2.0 && hi <= 4.0 * G1, buf};
}

} // namespace detail

/// Per eps: weak-star residual (max over the line tests), concentration gap
/// of the fixed pair, operator gap over the standard test set, uniform-bound
/// ratios (q = 2, 4) over random unit fields, and the largest Euclidean gap
/// between concentrated and boundary f0 loads over random fields bounded by
/// the cutoff radius.
inline LemmaResult run_lemma_suite(const LemmaConfig& cfg)
{
    if (cfg.eps_list.empty())
        throw ConfigError("study.eps_list", "empty eps list");
    for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
        if (cfg.eps_list[i] * cfg.profile.G1() >= 1.0)
            throw ConfigError("study.eps_list", "eps * G1 >= 1 at entry " + std::to_string(i));
        if (i > 0 && !(cfg.eps_list[i] < cfg.eps_list[i - 1]))
            throw ConfigError("study.eps_list", "eps list must be strictly decreasing");
    }
    const MuCoefficient mu = MuCoefficient::from_profile(cfg.profile).scaled(cfg.mu_scale);
    const PotentialFamily family = make_family(cfg.family, cfg.V0, mu, cfg.profile);
    const auto mesh = build_uniform_mesh(cfg.mesh_n);
    const auto [h_pair, phi_pair] = standard_concentration_pair();
    const auto test_set = standard_test_set();

    std::mt19937_64 rng(cfg.seed);
    std::vector<FEField> unit_fields, bounded_fields;
    for (std::size_t k = 0; k < cfg.random_fields; ++k)
        unit_fields.push_back(random_unit_field(mesh, rng));
    for (std::size_t k = 0; k < cfg.random_fields; ++k)
        bounded_fields.push_back(random_bounded_field(mesh, rng, cfg.f0.radius()));

    LemmaResult res;
    res.rows.resize(cfg.eps_list.size());
    parallel_for_index(cfg.eps_list.size(), cfg.threads, [&](std::size_t i) {
        const double eps = cfg.eps_list[i];
        const StripRegion region(eps, cfg.profile);
        LemmaRow& r = res.rows[i];
        r.eps = eps;
        r.weak_star_residual = max_weak_star_residual(cfg.profile, eps, mu);
        r.concentration_gap = concentration_gap(region, mu, h_pair, phi_pair);
        r.operator_gap_proxy = operator_gap_proxy(region, family, test_set, mesh);
        r.uniform_bound_q2 = verify_uniform_bound(region, 2, unit_fields);
        r.uniform_bound_q4 = verify_uniform_bound(region, 4, unit_fields);
        const StripQuadrature quad(*mesh, region);
        for (const FEField& u : bounded_fields) {
            const LoadVector a = assemble_concentrated_load(*mesh, quad, cfg.f0, u);
            const LoadVector b = assemble_boundary_load(*mesh, mu, cfg.f0, u);
            double s = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j)
                s += (a[j] - b[j]) * (a[j] - b[j]);
            r.load_gap = std::max(r.load_gap, std::sqrt(s));
        }
    });

    auto column = [&](double LemmaRow::*m) {
        std::vector<double> c;
        for (const auto& r : res.rows)
            c.push_back(r.*m);
        return c;
    };
    const auto& eps = cfg.eps_list;
    res.checks.push_back(detail::check_decrease("weak_star_residual", eps, column(&LemmaRow::weak_star_residual)));
    res.checks.push_back(detail::check_decrease("concentration_gap", eps, column(&LemmaRow::concentration_gap)));
    res.checks.push_back(detail::check_decrease("operator_gap_proxy", eps, column(&LemmaRow::operator_gap_proxy)));
    res.checks.push_back(detail::check_bounded("uniform_bound_q2", column(&LemmaRow::uniform_bound_q2), cfg.profile.G1()));
    res.checks.push_back(detail::check_bounded("uniform_bound_q4", column(&LemmaRow::uniform_bound_q4), cfg.profile.G1()));
    res.checks.push_back(detail::check_decrease("load_gap", eps, column(&LemmaRow::load_gap)));
    return res;
}

// ---------------------------------------------------------------------------
// CSV

/// A numeric table. Integer columns are written without exponent; all
/// others as %.16e, which round-trips doubles exactly.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<bool> integer;  // per column
    std::vector<std::vector<double>> rows;

    std::size_t column_index(const std::string& name) const
    {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end())
            throw std::out_of_range("CSV has no column '" + name + "'");
        return static_cast<std::size_t>(it - columns.begin());
    }
};

inline std::string format_csv(const CsvTable& t)
{
    std::string out;
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        out += (c ? "," : "") + t.columns[c];
    out += '\n';
    char buf[64];
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (t.integer[c])
                std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(row[c]));
            else
                std::snprintf(buf, sizeof buf, "%.16e", row[c]);
            out += (c ? "," : "");
            out += buf;
        }
        out += '\n';
    }
    return out;
}

inline void write_csv(const CsvTable& t, const std::string& path)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("write_csv: cannot open '" + path + "': " + std::strerror(errno));
    f << format_csv(t);
    f.close();
    if (!f)
        throw std::runtime_error("write_csv: write to '" + path + "' failed");
}

inline CsvTable parse_csv(const std::string& text)
{
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("parse_csv: missing header");
    {
        std::istringstream hs(line);
        std::string name;
        while (std::getline(hs, name, ','))
            t.columns.push_back(name);
    }
    t.integer.assign(t.columns.size(), true);
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            char* end = nullptr;
            row.push_back(std::strtod(cell.c_str(), &end));
            if (end == cell.c_str() || *end != '\0')
                throw std::runtime_error("parse_csv: bad number '" + cell + "'");
            if (cell.find_first_of(".eEn") != std::string::npos)
                t.integer[row.size() - 1] = false;
        }
        if (row.size() != t.columns.size())
            throw std::runtime_error("parse_csv: row width differs from header");
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline CsvTable read_csv(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("read_csv: cannot open '" + path + "': " + std::strerror(errno));
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

/// Sweep columns in SweepRow order. wall_time is optional because it is the
/// one column that differs between otherwise identical runs.
inline CsvTable to_table(const SweepResult& r, bool include_wall_time = false)
{
    CsvTable t;
    auto add = [&](const char* name, bool integer) {
        t.columns.push_back(name);
        t.integer.push_back(integer);
    };
    add("eps", false);
    add("n", true);
    add("h", false);
    add("h1_error", false);
    add("l2_error", false);
    add("picard_iters", true);
    add("coercivity_eps", false);
    add("coercivity_limit", false);
    add("concentration_gap", false);
    add("weak_star_residual", false);
    add("operator_gap_proxy", false);
    if (include_wall_time)
        add("wall_time", false);
    add("converged", true);
    for (const auto& s : r.rows) {
        std::vector<double> v{s.eps,
                              static_cast<double>(s.n),
                              s.h,
                              s.h1_error,
                              s.l2_error,
                              static_cast<double>(s.picard_iters),
                              s.coercivity_eps,
                              s.coercivity_limit,
                              s.concentration_gap,
                              s.weak_star_residual,
                              s.operator_gap_proxy};
        if (include_wall_time)
            v.push_back(s.wall_time);
        v.push_back(s.converged ? 1.0 : 0.0);
        t.rows.push_back(std::move(v));
    }
    return t;
}

inline SweepResult sweep_from_table(const CsvTable& t)
{
    SweepResult r;
    const bool timed = std::find(t.columns.begin(), t.columns.end(), "wall_time") != t.columns.end();
    for (const auto& row : t.rows) {
        auto get = [&](const char* name) { return row[t.column_index(name)]; };
        SweepRow s;
        s.eps = get("eps");
        s.n = static_cast<std::size_t>(get("n"));
        s.h = get("h");
        s.h1_error = get("h1_error");
        s.l2_error = get("l2_error");
        s.picard_iters = static_cast<std::size_t>(get("picard_iters"));
        s.coercivity_eps = get("coercivity_eps");
        s.coercivity_limit = get("coercivity_limit");
        s.concentration_gap = get("concentration_gap");
        s.weak_star_residual = get("weak_star_residual");
        s.operator_gap_proxy = get("operator_gap_proxy");
        s.wall_time = timed ? get("wall_time") : 0.0;
        s.converged = get("converged") != 0.0;
        r.rows.push_back(s);
    }
    return r;
}

inline void write_csv(const SweepResult& r, const std::string& path, bool include_wall_time = false)
{
    write_csv(to_table(r, include_wall_time), path);
}

inline CsvTable to_table(const LemmaResult& r)
{
    CsvTable t;
    t.columns = {"eps", "weak_star_residual", "concentration_gap", "operator_gap_proxy",
                 "uniform_bound_q2", "uniform_bound_q4", "load_gap"};
    t.integer.assign(t.columns.size(), false);
    for (const auto& s : r.rows)
        t.rows.push_back({s.eps, s.weak_star_residual, s.concentration_gap, s.operator_gap_proxy,
                          s.uniform_bound_q2, s.uniform_bound_q4, s.load_gap});
    return t;
}

inline CsvTable to_table(const RefinementResult& r)
{
    CsvTable t;
    t.columns = {"n", "h", "h1_error", "l2_error", "h1_order", "l2_order", "iterations", "converged"};
    t.integer = {true, false, false, false, false, false, true, true};
    for (const auto& s : r.rows)
        t.rows.push_back({static_cast<double>(s.n), s.h, s.h1_error, s.l2_error, s.h1_order, s.l2_order,
                          static_cast<double>(s.iterations), s.converged ? 1.0 : 0.0});
    return t;
}

} // namespace bconc

#endif
