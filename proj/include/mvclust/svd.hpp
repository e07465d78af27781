#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mvclust/errors.hpp"
#include "mvclust/matrix.hpp"

namespace mvclust {

// Truncated SVD result: a ~ u * diag(sigma) * vt with u (n x r), vt (r x m),
// sigma descending. Columns of u are orthonormal even for zero singular
// values (completed with a deterministic Gram-Schmidt basis).
struct SvdResult {
    Matrix u;
    std::vector<double> sigma;
    Matrix vt;
};

namespace detail {

// One-sided Jacobi: rotates column pairs of `work` (n x m, m is the thin
// side) until all pairs are numerically orthogonal; accumulates rotations
// into `v` (m x m). Throws NumericError if the sweep cap is exceeded.
inline void one_sided_jacobi(Matrix& work, Matrix& v) {
    const std::size_t n = work.rows();
    const std::size_t m = work.cols();
    v = Matrix::identity(m);
    constexpr double tol = 1e-14;
    constexpr int max_sweeps = 60;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool converged = true;
        for (std::size_t p = 0; p + 1 < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double xp = work(i, p);
                    const double xq = work(i, q);
                    app += xp * xp;
                    aqq += xq * xq;
                    apq += xp * xq;
                }
                if (std::fabs(apq) <= tol * std::sqrt(app * aqq)) continue;
                converged = false;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double xp = work(i, p);
                    const double xq = work(i, q);
                    work(i, p) = c * xp - s * xq;
                    work(i, q) = s * xp + c * xq;
                }
                for (std::size_t i = 0; i < m; ++i) {
                    const double vp = v(i, p);
                    const double vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (converged) return;
    }
    throw NumericError("svd: Jacobi sweeps did not converge");
}

// Fills column j of u with a unit vector orthogonal to columns [0, j) by
// orthogonalizing standard basis vectors; deterministic.
inline void complete_orthonormal_column(Matrix& u, std::size_t j) {
    const std::size_t n = u.rows();
    std::vector<double> cand(n);
    for (std::size_t trial = 0; trial < n; ++trial) {
        std::fill(cand.begin(), cand.end(), 0.0);
        cand[trial] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t c = 0; c < j; ++c) {
                double proj = 0.0;
                for (std::size_t i = 0; i < n; ++i) proj += cand[i] * u(i, c);
                for (std::size_t i = 0; i < n; ++i) cand[i] -= proj * u(i, c);
            }
        }
        double norm = std::sqrt(std::inner_product(cand.begin(), cand.end(), cand.begin(), 0.0));
        if (norm > 0.5) {
            for (std::size_t i = 0; i < n; ++i) u(i, j) = cand[i] / norm;
            return;
        }
    }
    throw NumericError("svd: failed to complete orthonormal basis");
}

} // namespace detail

// Top-r singular triplets of a. Jacobi runs on the thinner dimension; the
// sign of each singular vector is fixed so its largest-magnitude component
// is positive, making the output deterministic.
inline SvdResult svd_truncated(const Matrix& a, std::size_t r) {
    if (a.rows() == 0 || a.cols() == 0)
        throw ShapeError("svd_truncated: empty matrix");
    const std::size_t min_dim = std::min(a.rows(), a.cols());
    if (r < 1 || r > min_dim)
        throw ShapeError("svd_truncated: rank " + std::to_string(r) + " out of range [1, " +
                         std::to_string(min_dim) + "]");

    const bool transposed = a.rows() < a.cols();
    Matrix work = transposed ? transpose(a) : a; // n x m with m <= n
    const std::size_t n = work.rows();
    const std::size_t m = work.cols();

    Matrix v;
    detail::one_sided_jacobi(work, v);

    std::vector<double> sigma_all(m);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += work(i, j) * work(i, j);
        sigma_all[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma_all[x] > sigma_all[y]; });

    const double sigma_max = sigma_all.empty() ? 0.0 : sigma_all[order[0]];
    const double rank_tol = sigma_max * static_cast<double>(std::max(n, m)) * 1e-15;

    Matrix u(n, r);
    Matrix vt(r, m);
    std::vector<double> sigma(r);
    for (std::size_t jr = 0; jr < r; ++jr) {
        const std::size_t src = order[jr];
        sigma[jr] = sigma_all[src];
        for (std::size_t i = 0; i < m; ++i) vt(jr, i) = v(i, src);
        if (sigma[jr] > rank_tol && sigma[jr] > 0.0) {
            for (std::size_t i = 0; i < n; ++i) u(i, jr) = work(i, src) / sigma[jr];
        } else {
            detail::complete_orthonormal_column(u, jr);
        }
    }

    SvdResult res;
    if (transposed) {
        res.u = transpose(vt);
        res.vt = transpose(u);
    } else {
        res.u = std::move(u);
        res.vt = std::move(vt);
    }
    res.sigma = std::move(sigma);

    // sign convention: largest-magnitude component of each left vector positive
    for (std::size_t j = 0; j < r; ++j) {
        std::size_t imax = 0;
        double amax = -1.0;
        for (std::size_t i = 0; i < res.u.rows(); ++i) {
            const double av = std::fabs(res.u(i, j));
            if (av > amax) {
                amax = av;
                imax = i;
            }
        }
        if (res.u(imax, j) < 0.0) {
            for (std::size_t i = 0; i < res.u.rows(); ++i) res.u(i, j) = -res.u(i, j);
            for (std::size_t i = 0; i < res.vt.cols(); ++i) res.vt(j, i) = -res.vt(j, i);
        }
    }
    return res;
}

} // namespace mvclust
