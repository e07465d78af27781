#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "mvclust/errors.hpp"
#include "mvclust/kmeans.hpp"
#include "mvclust/matrix.hpp"

namespace mvclust {

// Anchor graph of one view: each latent sample row is expressed as a
// simplex-constrained combination of m anchors.
struct AnchorGraph {
    Matrix anchors;          // m x l, one anchor per row
    Matrix coeffs;           // n x m, rows on the probability simplex
    double gamma = 0.0;
    double objective = 0.0;  // sum_i ||z_i - A^T c_i||^2 + gamma ||C||_F^2
};

// Euclidean projection onto {c >= 0, sum c = 1} (sort-based).
inline std::vector<double> project_to_simplex(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cumsum = 0.0;
    double theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cumsum += sorted[i];
        const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
        if (sorted[i] - t > 0.0) {
            rho = i + 1;
            theta = t;
        }
    }
    (void)rho;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::max(v[i] - theta, 0.0);
    return out;
}

namespace detail {

// Gaussian elimination with partial pivoting; returns false on a (near-)
// singular pivot. a is n x (n+1) augmented, solution written to x.
inline bool solve_dense(std::vector<std::vector<double>>& a, std::vector<double>& x) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::fabs(a[col][col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r][col]) > best) {
                best = std::fabs(a[r][col]);
                piv = r;
            }
        }
        if (best < 1e-13) return false;
        std::swap(a[col], a[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
        }
    }
    x.resize(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
    return true;
}

} // namespace detail

// Per-row solver for min_c ||z - A^T c||^2 + gamma ||c||^2 over the
// probability simplex. Primal active-set method (exact KKT, finite
// termination for gamma > 0) with a projected-gradient fallback for
// degenerate instances. The Gram matrix is built once per anchor set so the
// per-row cost is O(f^3 + m f) for support size f.
class SimplexQpSolver {
public:
    SimplexQpSolver(const Matrix& anchors, double gamma)
        : anchors_(anchors), gamma_(gamma), m_(anchors.rows()) {
        if (m_ == 0) throw InputError("SimplexQpSolver: no anchors");
        if (gamma < 0.0) throw InputError("SimplexQpSolver: gamma must be >= 0");
        if (!anchors.is_finite()) throw NumericError("SimplexQpSolver: non-finite anchors");
        gram_ = Matrix(m_, m_);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = i; j < m_; ++j) {
                double s = dot(anchors.row(i), anchors.row(j));
                gram_(i, j) = s;
                gram_(j, i) = s;
            }
            gram_(i, i) += gamma_;
        }
        // Gershgorin bound on 2*lambda_max, used by the fallback step size
        lipschitz_ = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < m_; ++j) row_sum += std::fabs(gram_(i, j));
            lipschitz_ = std::max(lipschitz_, 2.0 * row_sum);
        }
        if (lipschitz_ <= 0.0) lipschitz_ = 1.0;
    }

    std::vector<double> solve(std::span<const double> z_row) const {
        if (z_row.size() != anchors_.cols())
            throw ShapeError("SimplexQpSolver::solve: sample dimension mismatch");
        for (double v : z_row)
            if (!std::isfinite(v)) throw NumericError("SimplexQpSolver::solve: non-finite input");

        std::vector<double> b(m_);
        for (std::size_t j = 0; j < m_; ++j) b[j] = dot(anchors_.row(j), z_row);

        std::vector<double> c;
        if (!active_set(b, c)) c = projected_gradient(b);

        // final projection: clamp solver dust, renormalize to an exact simplex row
        double sum = 0.0;
        for (double& v : c) {
            if (v < 0.0) v = 0.0;
            sum += v;
        }
        if (sum <= 0.0) {
            std::fill(c.begin(), c.end(), 1.0 / static_cast<double>(m_));
        } else {
            for (double& v : c) v /= sum;
        }
        return c;
    }

    // Max KKT violation of c for sample z: stationarity on the support,
    // dual feasibility and complementary slackness off it, plus |sum c - 1|.
    double kkt_residual(std::span<const double> z_row, std::span<const double> c) const {
        std::vector<double> g = gradient(z_row, c);
        double lambda = 0.0;
        std::size_t free_count = 0;
        for (std::size_t j = 0; j < m_; ++j) {
            if (c[j] > 1e-10) {
                lambda += -g[j];
                ++free_count;
            }
        }
        if (free_count > 0) lambda /= static_cast<double>(free_count);
        double res = 0.0;
        double sum = 0.0;
        for (std::size_t j = 0; j < m_; ++j) {
            sum += c[j];
            const double mu = g[j] + lambda;
            if (c[j] > 1e-10)
                res = std::max(res, std::fabs(mu));
            else
                res = std::max(res, std::max(0.0, -mu));
            res = std::max(res, std::fabs(c[j] * mu));
        }
        return std::max(res, std::fabs(sum - 1.0));
    }

    double objective_value(std::span<const double> z_row, std::span<const double> c) const {
        std::vector<double> recon(anchors_.cols(), 0.0);
        for (std::size_t j = 0; j < m_; ++j) {
            if (c[j] == 0.0) continue;
            const auto a = anchors_.row(j);
            for (std::size_t d = 0; d < recon.size(); ++d) recon[d] += c[j] * a[d];
        }
        double obj = 0.0;
        for (std::size_t d = 0; d < recon.size(); ++d) {
            const double diff = z_row[d] - recon[d];
            obj += diff * diff;
        }
        for (std::size_t j = 0; j < m_; ++j) obj += gamma_ * c[j] * c[j];
        return obj;
    }

    std::size_t anchor_count() const { return m_; }

private:
    // g = 2 (G c - b)
    std::vector<double> gradient(std::span<const double> z_row,
                                 std::span<const double> c) const {
        std::vector<double> g(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m_; ++j)
                if (c[j] != 0.0) s += gram_(i, j) * c[j];
            g[i] = 2.0 * (s - dot(anchors_.row(i), z_row));
        }
        return g;
    }

    bool active_set(const std::vector<double>& b, std::vector<double>& c_out) const {
        // start at the best single-anchor vertex (lowest index on ties)
        std::size_t j0 = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m_; ++j) {
            const double v = gram_(j, j) - 2.0 * b[j]; // objective at e_j minus ||z||^2
            if (v < best) {
                best = v;
                j0 = j;
            }
        }
        std::vector<bool> free_set(m_, false);
        free_set[j0] = true;
        std::vector<double> c(m_, 0.0);
        c[j0] = 1.0;

        const std::size_t cap = 4 * m_ + 16;
        for (std::size_t iter = 0; iter < cap; ++iter) {
            std::vector<std::size_t> F;
            for (std::size_t j = 0; j < m_; ++j)
                if (free_set[j]) F.push_back(j);
            const std::size_t f = F.size();

            // KKT system on the support: [2 G_FF, 1; 1^T, 0]
            std::vector<std::vector<double>> kkt(f + 1, std::vector<double>(f + 2, 0.0));
            for (std::size_t a = 0; a < f; ++a) {
                for (std::size_t bb = 0; bb < f; ++bb) kkt[a][bb] = 2.0 * gram_(F[a], F[bb]);
                kkt[a][f] = 1.0;
                kkt[a][f + 1] = 2.0 * b[F[a]];
                kkt[f][a] = 1.0;
            }
            kkt[f][f + 1] = 1.0;
            std::vector<double> sol;
            if (!detail::solve_dense(kkt, sol)) return false;
            const double lambda = sol[f];

            double min_c = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < f; ++a) min_c = std::min(min_c, sol[a]);

            if (min_c >= -1e-12) {
                for (std::size_t a = 0; a < f; ++a) c[F[a]] = std::max(sol[a], 0.0);
                // multipliers for the bound-active coordinates
                std::vector<double> g(m_);
                for (std::size_t i = 0; i < m_; ++i) {
                    double s = 0.0;
                    for (std::size_t a = 0; a < f; ++a) s += gram_(i, F[a]) * c[F[a]];
                    g[i] = 2.0 * (s - b[i]);
                }
                double scale = 1.0;
                for (std::size_t i = 0; i < m_; ++i) scale = std::max(scale, std::fabs(g[i]));
                std::size_t worst = m_;
                double worst_mu = -1e-10 * scale;
                for (std::size_t i = 0; i < m_; ++i) {
                    if (free_set[i]) continue;
                    const double mu = g[i] + lambda;
                    if (mu < worst_mu) {
                        worst_mu = mu;
                        worst = i;
                    }
                }
                if (worst == m_) {
                    c_out = std::move(c);
                    return true;
                }
                free_set[worst] = true;
            } else {
                // longest feasible step toward the EQP solution
                double alpha = 1.0;
                std::size_t blocking = m_;
                for (std::size_t a = 0; a < f; ++a) {
                    if (sol[a] < 0.0) {
                        const double denom = c[F[a]] - sol[a];
                        const double step = denom > 0.0 ? c[F[a]] / denom : 0.0;
                        if (step < alpha) {
                            alpha = step;
                            blocking = F[a];
                        }
                    }
                }
                if (blocking == m_) return false;
                for (std::size_t a = 0; a < f; ++a)
                    c[F[a]] = c[F[a]] + alpha * (sol[a] - c[F[a]]);
                c[blocking] = 0.0;
                free_set[blocking] = false;
            }
        }
        return false; // cycling guard tripped
    }

    std::vector<double> projected_gradient(const std::vector<double>& b) const {
        std::vector<double> c(m_, 1.0 / static_cast<double>(m_));
        const double step = 1.0 / lipschitz_;
        std::vector<double> g(m_), y(m_);
        for (std::size_t iter = 0; iter < 200000; ++iter) {
            for (std::size_t i = 0; i < m_; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < m_; ++j) s += gram_(i, j) * c[j];
                g[i] = 2.0 * (s - b[i]);
            }
            for (std::size_t i = 0; i < m_; ++i) y[i] = c[i] - step * g[i];
            std::vector<double> next = project_to_simplex(y);
            double delta = 0.0;
            for (std::size_t i = 0; i < m_; ++i) delta = std::max(delta, std::fabs(next[i] - c[i]));
            c = std::move(next);
            if (delta < 1e-15) break;
        }
        return c;
    }

    Matrix anchors_;
    Matrix gram_;
    double gamma_;
    double lipschitz_ = 1.0;
    std::size_t m_;
};

// Single-row convenience wrapper around SimplexQpSolver.
inline std::vector<double> solve_simplex_qp(std::span<const double> z_row, const Matrix& anchors,
                                            double gamma) {
    return SimplexQpSolver(anchors, gamma).solve(z_row);
}

// Anchors are k-means centroids of the latent rows (k = m).
inline Matrix select_anchors(const Matrix& z, std::size_t m, std::uint64_t seed) {
    if (m == 0 || m > z.rows())
        throw InputError("select_anchors: m=" + std::to_string(m) + " out of range for n=" +
                         std::to_string(z.rows()));
    return kmeans_fit(z, m, seed).centroids;
}

inline AnchorGraph build_anchor_graph(const Matrix& z, std::size_t m, double gamma,
                                      std::uint64_t seed) {
    AnchorGraph g;
    g.gamma = gamma;
    g.anchors = select_anchors(z, m, seed);
    g.coeffs = Matrix(z.rows(), m);
    SimplexQpSolver solver(g.anchors, gamma);
    double obj = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const std::vector<double> c = solver.solve(z.row(i));
        for (std::size_t j = 0; j < m; ++j) g.coeffs(i, j) = c[j];
        obj += solver.objective_value(z.row(i), c);
    }
    g.objective = obj;
    ensure_finite(g.coeffs, "build_anchor_graph coeffs");
    return g;
}

// Small-n self-expressive oracle: every sample written as a simplex
// combination of the other samples (diagonal fixed to zero).
inline Matrix full_subspace_oracle(const Matrix& x, double gamma) {
    const std::size_t n = x.rows();
    if (n > 200) throw InputError("full_subspace_oracle: n > 200");
    if (n < 2) throw InputError("full_subspace_oracle: need at least 2 samples");
    Matrix s(n, n);
    Matrix others(n - 1, x.cols());
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            for (std::size_t d = 0; d < x.cols(); ++d) others(r, d) = x(j, d);
            ++r;
        }
        const std::vector<double> c = solve_simplex_qp(x.row(i), others, gamma);
        r = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            s(i, j) = c[r++];
        }
    }
    return s;
}

} // namespace mvclust
