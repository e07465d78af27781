#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mvclust/anchor_graph.hpp"
#include "mvclust/errors.hpp"
#include "mvclust/kmeans.hpp"
#include "mvclust/matrix.hpp"
#include "mvclust/svd.hpp"

namespace mvclust {

struct SpectralEmbedding {
    Matrix u;                  // n x k left singular vectors of the coefficient matrix
    std::vector<double> sigma; // top-k singular values
    bool rank_deficient = false;
};

// Top-k left singular vectors of C. These span the same subspace as the
// top-k eigenvectors of the similarity C C^T, so spectral clustering of the
// anchor graph reduces to an n x m SVD instead of an n x n eigenproblem.
inline SpectralEmbedding spectral_embed(const AnchorGraph& graph, std::size_t k) {
    const std::size_t m = graph.coeffs.cols();
    if (k == 0 || k > m)
        throw InputError("spectral_embed: k=" + std::to_string(k) + " out of range for m=" +
                         std::to_string(m));
    SvdResult svd = svd_truncated(graph.coeffs, k);
    SpectralEmbedding e;
    e.u = std::move(svd.u);
    e.sigma = std::move(svd.sigma);
    const double tol = e.sigma.empty() ? 0.0
                                       : e.sigma.front() * static_cast<double>(
                                             std::max(graph.coeffs.rows(), m)) * 1e-14;
    e.rank_deficient = !e.sigma.empty() && e.sigma.back() <= tol;
    return e;
}

// Horizontal concatenation of the per-view embeddings, n x (V k).
inline Matrix concat_embeddings(const std::vector<Matrix>& per_view) {
    if (per_view.empty()) throw InputError("concat_embeddings: no views");
    const std::size_t n = per_view.front().rows();
    std::size_t total = 0;
    for (const Matrix& m : per_view) {
        if (m.rows() != n) throw ShapeError("concat_embeddings: row count mismatch");
        total += m.cols();
    }
    Matrix out(n, total);
    std::size_t offset = 0;
    for (const Matrix& m : per_view) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) out(i, offset + j) = m(i, j);
        offset += m.cols();
    }
    return out;
}

// Student-t soft assignment between embedding rows and centroids:
// t_ij = (alpha + ||u_i - mu_j||^2)^-1 / sum_j' (alpha + ||u_i - mu_j'||^2)^-1
inline Matrix student_t_assign(const Matrix& u, const Matrix& centroids, double alpha) {
    if (alpha <= 0.0) throw InputError("student_t_assign: alpha must be > 0");
    if (u.cols() != centroids.cols())
        throw ShapeError("student_t_assign: dimension mismatch");
    const std::size_t n = u.rows();
    const std::size_t k = centroids.rows();
    Matrix t(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double kernel = 1.0 / (alpha + squared_distance(u.row(i), centroids.row(j)));
            t(i, j) = kernel;
            denom += kernel;
        }
        for (std::size_t j = 0; j < k; ++j) t(i, j) /= denom;
    }
    ensure_finite(t, "student_t_assign");
    return t;
}

// Sharpened target distribution: square each assignment, discount by the
// soft cluster frequency (column sum over all samples), renormalize rows.
inline Matrix sharpen_target(const Matrix& t) {
    const std::size_t n = t.rows();
    const std::size_t k = t.cols();
    std::vector<double> freq(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) freq[j] += t(i, j);
    for (std::size_t j = 0; j < k; ++j)
        if (freq[j] <= 0.0)
            throw NumericError("sharpen_target: zero column sum in cluster " + std::to_string(j));
    Matrix p(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            p(i, j) = t(i, j) * t(i, j) / freq[j];
            denom += p(i, j);
        }
        if (denom <= 0.0)
            throw NumericError("sharpen_target: zero row mass at sample " + std::to_string(i));
        for (std::size_t j = 0; j < k; ++j) p(i, j) /= denom;
    }
    return p;
}

// y_i = argmax_j p_ij, ties to the lowest cluster index.
inline std::vector<std::size_t> predict(const Matrix& p) {
    std::vector<std::size_t> y(p.rows(), 0);
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < p.cols(); ++j) {
            if (p(i, j) > best) {
                best = p(i, j);
                y[i] = j;
            }
        }
    }
    return y;
}

// Global pseudo-labeling state: per-view embeddings, their concatenation,
// global k-means centroids, the Student-t assignment T and its sharpened
// target P.
struct SpectralState {
    std::vector<Matrix> per_view_u;
    Matrix global_u;   // n x (V k)
    Matrix centroids;  // k x (V k)
    Matrix t_dist;     // n x k
    Matrix target;     // n x k
    double alpha = 0.0;
    bool rank_deficient = false;
};

inline SpectralState build_spectral_state(const std::vector<AnchorGraph>& graphs, std::size_t k,
                                          double alpha, std::uint64_t seed) {
    if (graphs.empty()) throw InputError("build_spectral_state: no views");
    SpectralState s;
    s.alpha = alpha;
    for (const AnchorGraph& g : graphs) {
        SpectralEmbedding e = spectral_embed(g, k);
        s.rank_deficient = s.rank_deficient || e.rank_deficient;
        s.per_view_u.push_back(std::move(e.u));
    }
    s.global_u = concat_embeddings(s.per_view_u);
    s.centroids = kmeans_fit(s.global_u, k, seed).centroids;
    s.t_dist = student_t_assign(s.global_u, s.centroids, alpha);
    s.target = sharpen_target(s.t_dist);
    return s;
}

} // namespace mvclust
