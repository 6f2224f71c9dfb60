// Acceptance suite: one PASS/FAIL line per criterion, thresholds fixed here.
// Usage: acceptance <path to the bconc executable>
// Exit status is nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bconc/study.hpp"

using namespace bconc;

namespace {

constexpr double pi = std::numbers::pi;

std::string cli_path;
std::filesystem::path work_dir;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Command {
    int code;
    std::string out;
};

/// Runs the CLI with the given argument string; stderr goes to a log file.
Command run_cli(const std::string& args, const std::string& log_name)
{
    const std::string cmd = "\"" + cli_path + "\" " + args + " 2>\"" + (work_dir / log_name).string() + "\"";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p)
        return {-1, {}};
    std::string out;
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;)
        out.append(buf, n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

bool strictly_decreasing(const std::vector<double>& v)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1]))
            return false;
    return true;
}

std::string join(const std::vector<double>& v)
{
    std::string s;
    for (double x : v)
        s += (s.empty() ? "" : ", ") + fmt("%.4g", x);
    return s;
}

const std::vector<double> dyadic{0.1, 0.05, 0.025, 0.0125, 0.00625};

OscillationProfile catalog() { return OscillationProfile::pure_periodic(2.0, 1.0, 1.0); }

Eigen::MatrixXd to_eigen(const SparseMatrix& A)
{
    const auto d = A.dense();
    const auto n = static_cast<Eigen::Index>(A.size());
    Eigen::MatrixXd M(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            M(r, c) = d[static_cast<std::size_t>(r * n + c)];
    return M;
}

// ---------------------------------------------------------------------------

Outcome mu_correctness()
{
    const Command cos = run_cli("mu --set 'geometry.profile.params=[2,1,1]' --x-samples 11", "c1a.log");
    const Command mod = run_cli("mu --set geometry.profile.kind=x-modulated --x-samples 11", "c1b.log");
    if (cos.code != 0 || mod.code != 0)
        return {false, fmt("cli exit codes %d, %d", cos.code, mod.code)};
    const CsvTable a = parse_csv(cos.out), b = parse_csv(mod.out);
    if (a.rows.size() != 11 || b.rows.size() != 11)
        return {false, "expected 11 sample rows"};
    double err_cos = 0.0, err_mod = 0.0;
    for (const auto& r : a.rows)
        err_cos = std::max(err_cos, std::abs(r[1] - 2.0));
    // independent oracle: trapezoid rule over one period, exact for this
    // trigonometric polynomial once the node count exceeds its degree
    for (const auto& r : b.rows) {
        const double x = r[0];
        constexpr int m = 64;
        double s = 0.0;
        for (int k = 0; k < m; ++k) {
            const double sn = std::sin(2.0 * pi * k / m);
            s += 1.0 + x * sn * sn;
        }
        err_mod = std::max(err_mod, std::abs(r[1] - s / m));
    }
    return {err_cos <= 1e-12 && err_mod <= 1e-10,
            fmt("max |mu - 2| = %.2e (tol 1e-12), x-modulated max dev = %.2e (tol 1e-10)", err_cos, err_mod)};
}

Outcome weak_star_limit()
{
    const auto profile = OscillationProfile::pure_periodic(2.0, 1.0, 2.0 * pi);  // G_eps = 2 + cos(x/eps)
    std::string detail;
    bool ok = true;
    for (double eps : {0.1, 0.01}) {
        const double r = weak_star_residual(profile, eps, [](double) { return 1.0; });
        const double oracle = std::abs(eps * std::sin(1.0 / eps));
        ok = ok && std::abs(r - oracle) <= 1e-8;
        detail += fmt("eps=%g: %.10f vs %.10f (diff %.1e); ", eps, r, oracle, std::abs(r - oracle));
    }
    return {ok, detail + "tol 1e-8"};
}

Outcome concentration_to_trace()
{
    const auto profile = catalog();
    const auto mu = MuCoefficient::from_profile(profile);
    const auto [h, phi] = standard_concentration_pair();
    std::vector<double> gaps;
    for (double eps : dyadic)
        gaps.push_back(concentration_gap(StripRegion(eps, profile), mu, h, phi));
    const bool dec = strictly_decreasing(gaps);
    const double ratio = gaps.back() / gaps.front();
    return {dec && ratio < 0.1, fmt("gaps [%s], strictly decreasing: %s, final/initial = %.4f (needs < 0.1)",
                                    join(gaps).c_str(), dec ? "yes" : "no", ratio)};
}

Outcome uniform_bound()
{
    const auto profile = catalog();
    const auto mesh = build_uniform_mesh(64);
    std::mt19937_64 rng(20240611);
    std::vector<FEField> fields;
    for (int k = 0; k < 10; ++k)
        fields.push_back(random_unit_field(mesh, rng));
    bool ok = true;
    std::string detail;
    for (int q : {2, 4}) {
        std::vector<double> r;
        for (double eps : {0.2, 0.1, 0.05})
            r.push_back(verify_uniform_bound(StripRegion(eps, profile), q, fields));
        const double hi = *std::max_element(r.begin(), r.end()), lo = *std::min_element(r.begin(), r.end());
        ok = ok && lo > 0.0 && hi / lo < 2.0 && hi <= 4.0 * profile.G1();
        detail += fmt("q=%d: [%s] max/min %.3f; ", q, join(r).c_str(), hi / lo);
    }
    return {ok, detail + fmt("needs max/min < 2 and max <= %g", 4.0 * profile.G1())};
}

Outcome operator_convergence()
{
    const auto profile = catalog();
    const auto mu = MuCoefficient::from_profile(profile);
    const auto test_set = standard_test_set();
    const auto reference = build_uniform_mesh(64);
    bool ok = true;
    std::string detail;
    for (PotentialKind kind : {PotentialKind::canonical, PotentialKind::y_weighted}) {
        const PotentialFamily family = make_family(kind, [](double) { return 1.0; }, mu, profile);
        std::vector<double> g;
        for (double eps : dyadic)
            g.push_back(operator_gap_proxy(StripRegion(eps, profile), family, test_set, reference));
        const bool dec = strictly_decreasing(g);
        const double ratio = g.back() / g.front();
        ok = ok && dec && ratio < 0.1;
        detail += fmt("%s: [%s] decreasing %s, ratio %.4f; ", kind == PotentialKind::canonical ? "canonical" : "y-weighted",
                      join(g).c_str(), dec ? "yes" : "no", ratio);
    }
    return {ok, detail + "needs ratio < 0.1"};
}

Outcome coercivity()
{
    const auto profile = catalog();
    const auto mu = MuCoefficient::from_profile(profile);
    auto spec_for = [&](bool eps_mode, double V0, double lambda) {
        ProblemSpec s;
        s.lambda = lambda;
        const PotentialFamily fam = PotentialFamily::canonical([V0](double) { return V0; }, mu);
        if (eps_mode)
            s.mode = EpsMode{0.1, profile, fam};
        else
            s.mode = LimitMode{mu, fam.boundary()};
        return s;
    };
    bool ok = true;
    double worst = 1e300, zero_dev = 0.0;
    for (std::size_t n : {8u, 16u, 32u}) {
        const auto mesh = build_uniform_mesh(n);
        for (bool eps_mode : {false, true}) {
            worst = std::min(worst, estimate_coercivity(DiscreteSystem(mesh, spec_for(eps_mode, 1.0, 1.0))).theta);
            zero_dev = std::max(
                zero_dev, std::abs(estimate_coercivity(DiscreteSystem(mesh, spec_for(eps_mode, 0.0, 1.0))).theta - 1.0));
        }
    }
    ok = worst >= 0.99 && zero_dev <= 1e-8;
    std::string detail = fmt("V0=1, lambda=1: min theta %.6f (needs >= 0.99); V=0: max |theta-1| %.1e; ", worst, zero_dev);

    const auto mesh = build_uniform_mesh(16);
    for (bool eps_mode : {false, true}) {
        const ProblemSpec s = spec_for(eps_mode, -2.0, 0.0);
        const LambdaStarResult ls = find_lambda_star(mesh, s, 1e-3, 10.0);
        const DiscreteSystem sys(mesh, s);
        const SparseMatrix KP = SparseMatrix::linear_combination({{1.0, &sys.stiffness()}, {1.0, &sys.potential()}});
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(KP), to_eigen(sys.mass()),
                                                                     Eigen::EigenvaluesOnly);
        const double oracle = -es.eigenvalues().minCoeff();
        const double rel = std::abs(ls.lambda_star - oracle) / oracle;
        ok = ok && ls.status == LambdaStarStatus::found && ls.lambda_star > 0.0 && rel <= 0.05;
        detail += fmt("V0=-2 %s: lambda* %.4f vs dense %.4f (rel %.2e, tol 5%%); ", eps_mode ? "eps=0.1" : "limit",
                      ls.lambda_star, oracle, rel);
    }
    return {ok, detail};
}

Outcome solver_correctness()
{
    bool ok = true;
    std::string detail;
    {
        const auto mesh = build_uniform_mesh(32);
        const auto [u, rep] = solve(DiscreteSystem(mesh, constant_solution_problem(3.0, 0.75)), SolveOptions{});
        const ExactSolution c{[](double, double) { return 0.75; },
                              [](double, double) { return std::array<double, 2>{0.0, 0.0}; }};
        const double e = errors_against(u, c).first;
        ok = ok && rep.converged && e < 1e-9;
        detail += fmt("constant: |u-c|_H1 = %.1e (tol 1e-9); ", e);
    }
    {
        const auto [spec, ex] = manufactured_problem();
        const RefinementResult r = run_mesh_refinement(spec, {16, 32, 64, 128}, SolveOptions{}, ex);
        std::vector<double> h1o, l2o;
        for (std::size_t i = 1; i < r.rows.size(); ++i) {
            h1o.push_back(r.rows[i].h1_order);
            l2o.push_back(r.rows[i].l2_order);
            ok = ok && std::abs(r.rows[i].h1_order - 1.0) <= 0.2 && std::abs(r.rows[i].l2_order - 2.0) <= 0.3;
        }
        detail += fmt("H1 orders [%s] (1 +- 0.2), L2 orders [%s] (2 +- 0.3); ", join(h1o).c_str(), join(l2o).c_str());
    }
    {
        // logistic catalog problem: catalog strip, canonical V0 = 1, f0 = u - u^3, f1 = 1
        const auto profile = catalog();
        ProblemSpec s;
        s.lambda = 5.0;
        s.f0 = Nonlinearity::logistic();
        s.f1 = Nonlinearity::affine(0.0, 1.0);
        s.mode = EpsMode{0.1, profile,
                         PotentialFamily::canonical([](double) { return 1.0; }, MuCoefficient::from_profile(profile))};
        const DiscreteSystem sys(build_uniform_mesh(80), s);
        SolveOptions po, no;
        no.method = SolveMethod::newton;
        const auto [up, rp] = solve(sys, po);
        const auto [un, rn] = solve(sys, no);
        const double d = h1_error(up, un);
        ok = ok && rp.converged && rn.converged && d <= 1e-8;
        detail += fmt("Picard (%zu it) vs Newton (%zu it): %.1e (tol 1e-8)", rp.iterations, rn.iterations, d);
    }
    return {ok, detail};
}

std::string sweep_first_path() { return (work_dir / "sweep_threads4.csv").string(); }

Outcome theorem_sweep()
{
    const Command c = run_cli("sweep --threads 4 --out \"" + sweep_first_path() + "\"", "c8.log");
    if (c.code != 0)
        return {false, fmt("sweep exit code %d", c.code)};
    const CsvTable t = read_csv(sweep_first_path());
    std::vector<double> h1, eps;
    for (const auto& row : t.rows) {
        h1.push_back(row[t.column_index("h1_error")]);
        eps.push_back(row[t.column_index("eps")]);
    }
    if (h1.size() != 4)
        return {false, "expected 4 sweep rows"};
    const double factor = h1.front() / h1.back();
    std::vector<double> rates;
    for (std::size_t i = 1; i < h1.size(); ++i)
        rates.push_back(std::log(h1[i - 1] / h1[i]) / std::log(eps[i - 1] / eps[i]));
    return {factor >= 5.0, fmt("h1_error [%s], monotone %s, observed rates [%s], overall factor %.3f (needs >= 5)",
                               join(h1).c_str(), strictly_decreasing(h1) ? "yes" : "no", join(rates).c_str(), factor)};
}

Outcome determinism()
{
    const std::string second = (work_dir / "sweep_threads1.csv").string();
    if (!std::filesystem::exists(sweep_first_path())) {
        const Command c = run_cli("sweep --threads 4 --out \"" + sweep_first_path() + "\"", "c9a.log");
        if (c.code != 0)
            return {false, fmt("sweep (threads 4) exit code %d", c.code)};
    }
    const Command c = run_cli("sweep --threads 1 --out \"" + second + "\"", "c9b.log");
    if (c.code != 0)
        return {false, fmt("sweep (threads 1) exit code %d", c.code)};
    const std::string a = slurp(sweep_first_path()), b = slurp(second);
    return {!a.empty() && a == b, fmt("threads 4: %zu bytes, threads 1: %zu bytes, identical: %s", a.size(), b.size(),
                                      a == b ? "yes" : "no")};
}

Outcome negative_control()
{
    const std::string cfg = std::string(BCONC_SOURCE_DIR) + "/docs/lemma_config.json";
    const std::string good = (work_dir / "lemmas.csv").string(), bad = (work_dir / "lemmas_mu2.csv").string();
    const Command ok = run_cli("verify --config \"" + cfg + "\" --out \"" + good + "\"", "c10a.log");
    const Command neg = run_cli("verify --config \"" + cfg + "\" --out \"" + bad + "\" --debug-mu-scale 2", "c10b.log");
    if (neg.code != 4)
        return {false, fmt("verify with mu x2 exited %d (expected 4)", neg.code)};
    const CsvTable t = read_csv(bad);
    std::vector<double> g;
    for (const auto& row : t.rows)
        g.push_back(row[t.column_index("concentration_gap")]);
    // stagnation: the gap does not fall below half its initial value, while
    // the undistorted run shrinks it by more than 10x
    const double ratio = g.back() / g.front();
    return {ok.code == 0 && ratio >= 0.5,
            fmt("control exit %d, mu x2 exit %d, mu x2 concentration gaps [%s] final/initial %.3f (stagnation: >= 0.5)",
                ok.code, neg.code, join(g).c_str(), ratio)};
}

} // namespace

int main(int argc, char** argv)
{
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path to bconc>\n");
        return 2;
    }
    cli_path = argv[1];
    work_dir = std::filesystem::temp_directory_path() / "bconc_acceptance";
    std::filesystem::create_directories(work_dir);

    const std::vector<Criterion> criteria{
        {1, "mu correctness", 1.0, mu_correctness},
        {2, "weak-* limit of G_eps", 5.0, weak_star_limit},
        {3, "concentrated integral -> trace integral", 30.0, concentration_to_trace},
        {4, "uniform concentrated bound", 60.0, uniform_bound},
        {5, "potential operators T_eps -> T_0", 60.0, operator_convergence},
        {6, "coercivity and lambda*", 60.0, coercivity},
        {7, "solver correctness", 120.0, solver_correctness},
        {8, "eps sweep: h1_error decreases by >= 5x", 600.0, theorem_sweep},
        {9, "determinism across thread counts", 1e300, determinism},
        {10, "negative control (mu x2)", 1e300, negative_control},
    };

    int passed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = secs <= c.budget_seconds;
        const bool pass = o.pass && in_budget;
        passed += pass;
        std::string budget = c.budget_seconds < 1e300 ? fmt(" (budget %.0f s)", c.budget_seconds) : "";
        std::printf("[%s] %2d %s: %s | %.2f s%s%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                    secs, budget.c_str(), in_budget ? "" : " OVER BUDGET");
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/%zu criteria passed\n", passed, criteria.size());
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
