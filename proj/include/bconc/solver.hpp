// solver.hpp
//
// Discrete eps-problem and limit problem, the coercivity threshold, and the
// fixed-point (Picard) and Newton solvers for A u = F(u).

#ifndef BCONC_SOLVER_HPP
#define BCONC_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "assembly.hpp"
#include "concentration.hpp"
#include "errors.hpp"
#include "fe_field.hpp"
#include "geometry.hpp"
#include "nonlinearity.hpp"
#include "oscillation.hpp"
#include "sparse.hpp"

namespace bconc {

/// Potential concentrated on the strip of width eps.
struct EpsMode {
    double eps;
    OscillationProfile profile;
    PotentialFamily potential;
};

/// Potential V0 and flux weight mu on Gamma.
struct LimitMode {
    MuCoefficient mu = MuCoefficient::constant(1.0);
    std::function<double(double)> V0 = [](double) { return 0.0; };
};

struct ProblemSpec {
    double lambda = 1.0;
    Nonlinearity f0 = Nonlinearity::zero();
    Nonlinearity f1 = Nonlinearity::zero();
    std::variant<LimitMode, EpsMode> mode;

    bool is_eps_problem() const noexcept { return std::holds_alternative<EpsMode>(mode); }
};

/// Matrices and quadrature of one problem on one mesh. The system matrix is
/// A = K + lambda M + P with P the concentrated potential (eps mode) or the
/// boundary potential (limit mode).
class DiscreteSystem {
public:
    DiscreteSystem(std::shared_ptr<const TriMesh> mesh, ProblemSpec spec)
        : mesh_(std::move(mesh)), spec_(std::move(spec)), K_(assemble_stiffness(*mesh_)),
          M_(assemble_mass(*mesh_))
    {
        if (!std::isfinite(spec_.lambda))
            throw std::invalid_argument("lambda must be finite");
        if (const auto* e = std::get_if<EpsMode>(&spec_.mode)) {
            quad_.emplace(*mesh_, StripRegion(e->eps, e->profile));
            P_ = assemble_concentrated_potential(*mesh_, *quad_, e->potential);
        } else {
            P_ = assemble_boundary_potential(*mesh_, std::get<LimitMode>(spec_.mode).V0);
        }
        A_ = with_lambda(spec_.lambda);
    }

    SparseMatrix with_lambda(double lambda) const
    {
        return SparseMatrix::linear_combination({{1.0, &K_}, {lambda, &M_}, {1.0, &P_}});
    }

    const SparseMatrix& matrix() const noexcept { return A_; }
    const SparseMatrix& stiffness() const noexcept { return K_; }
    const SparseMatrix& mass() const noexcept { return M_; }
    const SparseMatrix& potential() const noexcept { return P_; }
    const std::shared_ptr<const TriMesh>& mesh() const noexcept { return mesh_; }
    const ProblemSpec& spec() const noexcept { return spec_; }

    /// F(u) = F_{0,eps}(u) + F_1(u) or F_0(u) + F_1(u).
    LoadVector load(const FEField& u) const
    {
        LoadVector F = assemble_volume_load(*mesh_, spec_.f1, u);
        const LoadVector G = quad_ ? assemble_concentrated_load(*mesh_, *quad_, spec_.f0, u)
                                   : assemble_boundary_load(*mesh_, limit().mu, spec_.f0, u);
        for (std::size_t i = 0; i < F.size(); ++i)
            F[i] += G[i];
        return F;
    }

    /// dF/du at u.
    SparseMatrix load_jacobian(const FEField& u) const
    {
        const SparseMatrix J1 = assemble_volume_load_jacobian(*mesh_, spec_.f1, u);
        const SparseMatrix J0 = quad_ ? assemble_concentrated_load_jacobian(*mesh_, *quad_, spec_.f0, u)
                                      : assemble_boundary_load_jacobian(*mesh_, limit().mu, spec_.f0, u);
        return SparseMatrix::linear_combination({{1.0, &J1}, {1.0, &J0}});
    }

private:
    const LimitMode& limit() const { return std::get<LimitMode>(spec_.mode); }

    std::shared_ptr<const TriMesh> mesh_;
    ProblemSpec spec_;
    SparseMatrix K_, M_, P_, A_;
    std::optional<StripQuadrature> quad_;
};

inline SparseMatrix build_system(std::shared_ptr<const TriMesh> mesh, const ProblemSpec& spec)
{
    return DiscreteSystem(std::move(mesh), spec).matrix();
}

// ---------------------------------------------------------------------------
// Coercivity

struct CoercivityOptions {
    double tol = 1e-8;
    std::size_t max_outer = 500;
    double inner_tol = 1e-10;
};

struct CoercivityEstimate {
    double theta = 0.0;       // smallest eigenvalue of A x = theta (K+M) x
    bool converged = false;
    std::size_t iterations = 0;
    double shift = 0.0;       // > 0 when the pencil had to be shifted to stay definite
    bool positive() const noexcept { return theta > 0.0; }
};

/// Inverse power iteration for the smallest eigenvalue of the pencil
/// (A, K+M). Starts unshifted; if CG meets nonpositive curvature the pencil
/// is indefinite and the iteration restarts on A + s(K+M) with s large
/// enough to make it definite, so the negative eigenvalue is still found.
inline CoercivityEstimate estimate_coercivity(const SparseMatrix& A, const SparseMatrix& K,
                                              const SparseMatrix& M, CoercivityOptions opts = {})
{
    const std::size_t n = A.size();
    const SparseMatrix B = SparseMatrix::linear_combination({{1.0, &K}, {1.0, &M}});

    auto normalize = [&](std::vector<double>& v) {
        const double nrm = std::sqrt(B.bilinear(v, v));
        for (double& x : v)
            x /= nrm;
    };

    CoercivityEstimate est;
    double shift = 0.0;
    std::size_t total = 0;
    for (int restart = 0; restart < 64; ++restart) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
        normalize(x);

        const SparseMatrix S = SparseMatrix::linear_combination({{1.0, &A}, {shift, &B}});
        double theta = A.bilinear(x, x);
        bool restarted = false;
        for (std::size_t it = 1; it <= opts.max_outer; ++it) {
            ++total;
            const std::vector<double> rhs = B * x;
            std::vector<double> y = x;
            if (theta + shift > 0.0)
                for (double& v : y)
                    v /= theta + shift;
            const CgResult cg = conjugate_gradient(S, rhs, y, {opts.inner_tol, 0});
            if (cg.nonpositive_curvature) {
                const auto& p = cg.curvature_direction;
                const double rq = A.bilinear(p, p) / B.bilinear(p, p);
                shift = std::max({2.0 * shift, 1.0, -2.0 * rq});
                restarted = true;
                break;
            }
            normalize(y);
            x = std::move(y);
            const double next = A.bilinear(x, x);
            const bool done = std::abs(next - theta) <= opts.tol * std::max(1.0, std::abs(next));
            theta = next;
            if (done) {
                est.converged = true;
                break;
            }
        }
        if (!restarted) {
            est.theta = theta;
            est.shift = shift;
            est.iterations = total;
            return est;
        }
    }
    throw std::runtime_error("estimate_coercivity: could not find a definite shift");
}

inline CoercivityEstimate estimate_coercivity(const DiscreteSystem& sys, CoercivityOptions opts = {})
{
    return estimate_coercivity(sys.matrix(), sys.stiffness(), sys.mass(), opts);
}

enum class LambdaStarStatus { found, coercive_at_min, indefinite_at_max };

struct LambdaStarResult {
    LambdaStarStatus status;
    double lambda_star;  // bisection midpoint when found, otherwise the offending end
    double lo, hi;       // final bracket
};

/// Bisection on lambda for the sign of the smallest pencil eigenvalue.
inline LambdaStarResult find_lambda_star(std::shared_ptr<const TriMesh> mesh, const ProblemSpec& spec,
                                         double lambda_min, double lambda_max, double tol = 1e-3)
{
    if (!(lambda_min < lambda_max))
        throw std::invalid_argument("find_lambda_star: empty lambda range");
    const DiscreteSystem sys(std::move(mesh), spec);
    auto coercive = [&](double lambda) {
        return estimate_coercivity(sys.with_lambda(lambda), sys.stiffness(), sys.mass()).positive();
    };
    if (coercive(lambda_min))
        return {LambdaStarStatus::coercive_at_min, lambda_min, lambda_min, lambda_max};
    if (!coercive(lambda_max))
        return {LambdaStarStatus::indefinite_at_max, lambda_max, lambda_min, lambda_max};
    double lo = lambda_min, hi = lambda_max;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (coercive(mid) ? hi : lo) = mid;
    }
    return {LambdaStarStatus::found, 0.5 * (lo + hi), lo, hi};
}

// ---------------------------------------------------------------------------
// Nonlinear solves

enum class SolveMethod { picard, newton };

struct SolveOptions {
    SolveMethod method = SolveMethod::picard;
    double tol_rel = 1e-10;       // on ||u_{k+1} - u_k||_H1 / (1 + ||u_k||_H1)
    std::size_t max_iter = 200;
    double damping = 1.0;
    double linear_tol = 1e-12;
    bool check_coercivity = true;
};

struct SolveReport {
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<double> residual_history;  // H1 size of each update
    double final_residual = 0.0;
    double defect = 0.0;       // ||A u - F(u)||_2 / (1 + ||F(0)||_2)
    double coercivity = 0.0;   // NaN when the gate was skipped
    double final_damping = 1.0;
    std::string message;
};

namespace detail {

inline void solve_spd(const SparseMatrix& A, const std::vector<double>& rhs, std::vector<double>& x,
                      double tol, const char* what)
{
    const CgResult cg = conjugate_gradient(A, rhs, x, {tol, 0});
    if (cg.nonpositive_curvature)
        throw IndefiniteSystem(std::string(what) +
                               ": nonpositive curvature in CG; lambda is at or below the "
                               "coercivity threshold (see estimate_coercivity)");
}

inline double normalized_defect(const DiscreteSystem& sys, const FEField& u, double load_scale)
{
    const std::vector<double> Au = sys.matrix() * u.values;
    const LoadVector F = sys.load(u);
    double s = 0.0;
    for (std::size_t i = 0; i < Au.size(); ++i)
        s += (Au[i] - F[i]) * (Au[i] - F[i]);
    return std::sqrt(s) / (1.0 + load_scale);
}

inline double gate_coercivity(const DiscreteSystem& sys, const SolveOptions& opts)
{
    if (!opts.check_coercivity)
        return std::nan("");
    const CoercivityEstimate c = estimate_coercivity(sys);
    if (!c.positive())
        throw IndefiniteSystem("estimate_coercivity reports theta = " + std::to_string(c.theta) +
                               " <= 0; refusing to iterate on an indefinite system");
    return c.theta;
}

} // namespace detail

/// Damped fixed-point iteration u <- (1-d) u + d A^{-1} F(u). The damping is
/// halved (down to 1/16) whenever the defect grows three iterations running.
inline std::pair<FEField, SolveReport> picard_solve(const DiscreteSystem& sys, const SolveOptions& opts,
                                                    FEField u)
{
    if (!(opts.tol_rel > 0.0))
        throw std::invalid_argument("SolveOptions: tol_rel must be positive");
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw std::invalid_argument("SolveOptions: damping must lie in (0,1]");

    SolveReport rep;
    rep.coercivity = detail::gate_coercivity(sys, opts);
    const double load_scale = norm2(sys.load(FEField::zero(sys.mesh())));

    double d = opts.damping;
    double prev_defect = std::numeric_limits<double>::infinity();
    int growth = 0;
    LoadVector F = sys.load(u);
    for (std::size_t k = 1; k <= opts.max_iter; ++k) {
        std::vector<double> w = u.values;
        detail::solve_spd(sys.matrix(), F, w, opts.linear_tol, "picard_solve");

        FEField next(u.mesh, std::vector<double>(u.values.size()));
        for (std::size_t i = 0; i < w.size(); ++i)
            next.values[i] = (1.0 - d) * u.values[i] + d * w[i];
        const double change = h1_error(next, u);
        const double scale = 1.0 + h1_norm(u);
        rep.residual_history.push_back(change);
        rep.iterations = k;
        u = std::move(next);
        F = sys.load(u);

        const std::vector<double> Au = sys.matrix() * u.values;
        double s = 0.0;
        for (std::size_t i = 0; i < Au.size(); ++i)
            s += (Au[i] - F[i]) * (Au[i] - F[i]);
        rep.defect = std::sqrt(s) / (1.0 + load_scale);

        if (change <= opts.tol_rel * scale) {
            rep.converged = true;
            break;
        }
        growth = rep.defect > prev_defect ? growth + 1 : 0;
        prev_defect = rep.defect;
        if (growth >= 3 && d > 1.0 / 16.0) {
            d = std::max(d / 2.0, 1.0 / 16.0);
            growth = 0;
        }
    }
    rep.final_residual = rep.residual_history.empty() ? 0.0 : rep.residual_history.back();
    rep.final_damping = d;
    rep.message = rep.converged ? "converged" : "max_iter reached without convergence";
    return {std::move(u), std::move(rep)};
}

inline std::pair<FEField, SolveReport> picard_solve(std::shared_ptr<const TriMesh> mesh,
                                                    const ProblemSpec& spec, const SolveOptions& opts,
                                                    std::optional<FEField> initial = std::nullopt)
{
    const DiscreteSystem sys(mesh, spec);
    return picard_solve(sys, opts, initial ? std::move(*initial) : FEField::zero(mesh));
}

/// Newton on R(u) = A u - F(u) with Jacobian A - F'(u).
inline std::pair<FEField, SolveReport> newton_solve(const DiscreteSystem& sys, const SolveOptions& opts,
                                                    FEField u)
{
    if (!(opts.tol_rel > 0.0))
        throw std::invalid_argument("SolveOptions: tol_rel must be positive");
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw std::invalid_argument("SolveOptions: damping must lie in (0,1]");

    SolveReport rep;
    rep.coercivity = detail::gate_coercivity(sys, opts);
    const double load_scale = norm2(sys.load(FEField::zero(sys.mesh())));
    const double d = opts.damping;

    for (std::size_t k = 1; k <= opts.max_iter; ++k) {
        const LoadVector F = sys.load(u);
        std::vector<double> rhs = sys.matrix() * u.values;
        for (std::size_t i = 0; i < rhs.size(); ++i)
            rhs[i] = F[i] - rhs[i];
        const SparseMatrix dF = sys.load_jacobian(u);
        const SparseMatrix J = SparseMatrix::linear_combination({{1.0, &sys.matrix()}, {-1.0, &dF}});

        std::vector<double> delta(rhs.size(), 0.0);
        const CgResult cg = conjugate_gradient(J, rhs, delta, {opts.linear_tol, 0});
        if (cg.nonpositive_curvature || !cg.converged) {
            rep.iterations = k;
            rep.message = "Jacobian solve failed (singular or indefinite); fall back to picard_solve";
            break;
        }
        FEField step(u.mesh, std::move(delta));
        const double change = d * h1_norm(step);
        const double scale = 1.0 + h1_norm(u);
        for (std::size_t i = 0; i < u.values.size(); ++i)
            u.values[i] += d * step.values[i];
        rep.residual_history.push_back(change);
        rep.iterations = k;
        if (change <= opts.tol_rel * scale) {
            rep.converged = true;
            rep.message = "converged";
            break;
        }
    }
    if (rep.message.empty())
        rep.message = "max_iter reached without convergence";
    rep.defect = detail::normalized_defect(sys, u, load_scale);
    rep.final_residual = rep.residual_history.empty() ? 0.0 : rep.residual_history.back();
    rep.final_damping = d;
    return {std::move(u), std::move(rep)};
}

inline std::pair<FEField, SolveReport> newton_solve(std::shared_ptr<const TriMesh> mesh,
                                                    const ProblemSpec& spec, const SolveOptions& opts,
                                                    std::optional<FEField> initial = std::nullopt)
{
    const DiscreteSystem sys(mesh, spec);
    return newton_solve(sys, opts, initial ? std::move(*initial) : FEField::zero(mesh));
}

/// Dispatch on opts.method.
inline std::pair<FEField, SolveReport> solve(const DiscreteSystem& sys, const SolveOptions& opts,
                                             std::optional<FEField> initial = std::nullopt)
{
    FEField start = initial ? std::move(*initial) : FEField::zero(sys.mesh());
    return opts.method == SolveMethod::newton ? newton_solve(sys, opts, std::move(start))
                                              : picard_solve(sys, opts, std::move(start));
}

} // namespace bconc

#endif
