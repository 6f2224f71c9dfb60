// sparse.hpp
//
// Compressed-row sparse matrices and a Jacobi-preconditioned conjugate
// gradient solver that reports nonpositive curvature instead of failing
// silently on indefinite systems.

#ifndef BCONC_SPARSE_HPP
#define BCONC_SPARSE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bconc {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Duplicate (row, col) entries are summed in input order.
    static SparseMatrix from_triplets(std::size_t n, std::vector<Triplet> entries)
    {
        for (const auto& t : entries)
            if (t.row >= n || t.col >= n)
                throw std::out_of_range("SparseMatrix: triplet index out of range");
        std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });

        SparseMatrix m;
        m.n_ = n;
        m.row_ptr_.assign(n + 1, 0);
        for (std::size_t k = 0; k < entries.size();) {
            const std::size_t r = entries[k].row, c = entries[k].col;
            double v = 0.0;
            for (; k < entries.size() && entries[k].row == r && entries[k].col == c; ++k)
                v += entries[k].value;
            m.cols_.push_back(c);
            m.vals_.push_back(v);
            ++m.row_ptr_[r + 1];
        }
        for (std::size_t r = 0; r < n; ++r)
            m.row_ptr_[r + 1] += m.row_ptr_[r];
        return m;
    }

    static SparseMatrix zero(std::size_t n) { return from_triplets(n, {}); }

    /// sum_k coeff_k * M_k on the union sparsity pattern.
    static SparseMatrix linear_combination(
        std::initializer_list<std::pair<double, const SparseMatrix*>> terms)
    {
        std::size_t n = 0;
        std::vector<Triplet> t;
        for (const auto& [coeff, mat] : terms) {
            n = mat->size();
            mat->append_triplets(t, coeff);
        }
        for (const auto& [coeff, mat] : terms)
            if (mat->size() != n)
                throw std::invalid_argument("linear_combination: dimension mismatch");
        return from_triplets(n, std::move(t));
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t nonzeros() const noexcept { return vals_.size(); }

    void multiply(std::span<const double> x, std::span<double> y) const
    {
        for (std::size_t r = 0; r < n_; ++r) {
            double s = 0.0;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                s += vals_[k] * x[cols_[k]];
            y[r] = s;
        }
    }

    std::vector<double> operator*(const std::vector<double>& x) const
    {
        if (x.size() != n_)
            throw std::invalid_argument("SparseMatrix: vector size mismatch");
        std::vector<double> y(n_);
        multiply(x, y);
        return y;
    }

    /// x^T A y
    double bilinear(const std::vector<double>& x, const std::vector<double>& y) const
    {
        double s = 0.0;
        for (std::size_t r = 0; r < n_; ++r) {
            double row = 0.0;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                row += vals_[k] * y[cols_[k]];
            s += x[r] * row;
        }
        return s;
    }

    double coeff(std::size_t r, std::size_t c) const
    {
        const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
        const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
        const auto it = std::lower_bound(first, last, c);
        return (it != last && *it == c) ? vals_[static_cast<std::size_t>(it - cols_.begin())] : 0.0;
    }

    std::vector<double> diagonal() const
    {
        std::vector<double> d(n_);
        for (std::size_t r = 0; r < n_; ++r)
            d[r] = coeff(r, r);
        return d;
    }

    /// max |A - A^T|
    double max_asymmetry() const
    {
        double worst = 0.0;
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                worst = std::max(worst, std::abs(vals_[k] - coeff(cols_[k], r)));
        return worst;
    }

    /// Rows with at least one entry of magnitude above `tol`.
    std::vector<std::size_t> nonzero_rows(double tol = 0.0) const
    {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                if (std::abs(vals_[k]) > tol) {
                    rows.push_back(r);
                    break;
                }
        return rows;
    }

    void append_triplets(std::vector<Triplet>& out, double scale = 1.0) const
    {
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                out.push_back({r, cols_[k], scale * vals_[k]});
    }

    /// Row-major dense copy; intended for small test problems.
    std::vector<double> dense() const
    {
        std::vector<double> d(n_ * n_, 0.0);
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                d[r * n_ + cols_[k]] += vals_[k];
        return d;
    }

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> cols_;
    std::vector<double> vals_;
};

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct CgOptions {
    double tol = 1e-12;        // on ||r|| / ||b||
    std::size_t max_iter = 0;  // 0: ten times the unknown count
};

struct CgResult {
    bool converged = false;
    bool nonpositive_curvature = false;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    /// Set when nonpositive curvature stopped the solve: the search
    /// direction p with p^T A p <= 0.
    std::vector<double> curvature_direction;
};

/// Preconditioned CG for A x = b; `x` holds the initial guess on entry.
inline CgResult conjugate_gradient(const SparseMatrix& A, std::span<const double> b,
                                   std::span<double> x, CgOptions opts = {})
{
    const std::size_t n = A.size();
    if (b.size() != n || x.size() != n)
        throw std::invalid_argument("conjugate_gradient: size mismatch");
    const std::size_t max_iter = opts.max_iter ? opts.max_iter : 10 * std::max<std::size_t>(n, 1);

    CgResult res;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        res.converged = true;
        return res;
    }

    std::vector<double> inv_diag = A.diagonal();
    for (double& d : inv_diag)
        d = d > 0.0 ? 1.0 / d : 1.0;

    std::vector<double> r(n), z(n), p(n), q(n);
    A.multiply(x, r);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = b[i] - r[i];

    double rnorm = norm2(r);
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual < opts.tol) {
        res.converged = true;
        return res;
    }

    for (std::size_t i = 0; i < n; ++i)
        z[i] = inv_diag[i] * r[i];
    p = z;
    double rho = dot(r, z);

    for (std::size_t it = 1; it <= max_iter; ++it) {
        A.multiply(p, q);
        const double curvature = dot(p, q);
        if (!(curvature > 0.0)) {
            res.nonpositive_curvature = true;
            res.iterations = it;
            res.curvature_direction = p;
            return res;
        }
        const double alpha = rho / curvature;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rnorm = norm2(r);
        res.iterations = it;
        res.relative_residual = rnorm / bnorm;
        if (res.relative_residual < opts.tol) {
            res.converged = true;
            return res;
        }
        for (std::size_t i = 0; i < n; ++i)
            z[i] = inv_diag[i] * r[i];
        const double rho_next = dot(r, z);
        const double beta = rho_next / rho;
        rho = rho_next;
        for (std::size_t i = 0; i < n; ++i)
            p[i] = z[i] + beta * p[i];
    }
    return res;
}

} // namespace bconc

#endif
