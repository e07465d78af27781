#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mvclust/errors.hpp"
#include "mvclust/matrix.hpp"
#include "mvclust/rng.hpp"

namespace mvclust {

struct KMeansResult {
    Matrix centroids;                // k x dim
    std::vector<std::size_t> labels; // length n
    double inertia = 0.0;            // sum of squared distances to assigned centroid
};

namespace detail {

// Nearest centroid; equidistant ties resolved toward the lowest index.
inline std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
        const double d = squared_distance(point, centroids.row(j));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

inline double assignment_inertia(const Matrix& points, const Matrix& centroids,
                                 const std::vector<std::size_t>& labels) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i)
        s += squared_distance(points.row(i), centroids.row(labels[i]));
    return s;
}

} // namespace detail

// k-means++ seeding: first centroid uniform, the rest sampled with
// probability proportional to the squared distance to the nearest chosen
// centroid. Rows are chosen without index repetition. Deterministic per seed.
inline Matrix kmeans_pp_seed(const Matrix& points, std::size_t k, std::uint64_t seed) {
    const std::size_t n = points.rows();
    if (n == 0) throw InputError("kmeans_pp_seed: empty input");
    if (k == 0 || k > n)
        throw InputError("kmeans_pp_seed: k=" + std::to_string(k) + " out of range for n=" +
                         std::to_string(n));
    Rng rng(seed);
    std::vector<bool> chosen(n, false);
    std::vector<std::size_t> centers;
    centers.reserve(k);

    centers.push_back(rng.index(n));
    chosen[centers[0]] = true;

    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        const auto last = points.row(centers.back());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points.row(i), last));
            if (!chosen[i]) total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i]) continue;
                acc += d2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        }
        if (pick == n) {
            // all remaining distances zero (duplicate data): uniform among unchosen
            std::size_t offset = rng.index(n - centers.size());
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i]) continue;
                if (offset == 0) {
                    pick = i;
                    break;
                }
                --offset;
            }
        }
        chosen[pick] = true;
        centers.push_back(pick);
    }

    Matrix out(k, points.cols());
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t c = 0; c < points.cols(); ++c) out(j, c) = points(centers[j], c);
    return out;
}

// Single Lloyd run from a k-means++ seeding. When `inertia_trace` is given it
// records the assignment cost after every iteration's assign/repair step.
inline KMeansResult kmeans_single(const Matrix& points, std::size_t k, std::uint64_t seed,
                                  std::size_t max_iter,
                                  std::vector<double>* inertia_trace = nullptr) {
    const std::size_t n = points.rows();
    const std::size_t dim = points.cols();

    KMeansResult res;
    res.centroids = kmeans_pp_seed(points, k, seed);
    res.labels.assign(n, 0);

    std::vector<std::size_t> counts(k);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = detail::nearest_centroid(points.row(i), res.centroids);
            if (j != res.labels[i]) changed = true;
            res.labels[i] = j;
        }

        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) ++counts[res.labels[i]];

        // empty-cluster repair: hand the point farthest from its centroid to
        // the empty cluster (keeps k clusters, never increases inertia)
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] > 0) continue;
            std::size_t donor = n;
            double worst = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[res.labels[i]] < 2) continue;
                const double d = squared_distance(points.row(i), res.centroids.row(res.labels[i]));
                if (d > worst) {
                    worst = d;
                    donor = i;
                }
            }
            if (donor == n) continue; // all clusters singletons; nothing to move
            --counts[res.labels[donor]];
            res.labels[donor] = j;
            ++counts[j];
            for (std::size_t c = 0; c < dim; ++c) res.centroids(j, c) = points(donor, c);
            changed = true;
        }

        if (inertia_trace)
            inertia_trace->push_back(detail::assignment_inertia(points, res.centroids, res.labels));

        // update step: centroids become means of their members
        Matrix sums(k, dim);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < dim; ++c) sums(res.labels[i], c) += points(i, c);
        for (std::size_t j = 0; j < k; ++j)
            if (counts[j] > 0)
                for (std::size_t c = 0; c < dim; ++c)
                    res.centroids(j, c) = sums(j, c) / static_cast<double>(counts[j]);

        if (!changed && iter > 0) break;
    }

    // final assignment against the final centroids
    for (std::size_t i = 0; i < n; ++i)
        res.labels[i] = detail::nearest_centroid(points.row(i), res.centroids);
    res.inertia = detail::assignment_inertia(points, res.centroids, res.labels);
    return res;
}

// Lloyd's algorithm with k-means++ seeding and n_init restarts (lowest
// inertia wins; ties by restart index). Each restart draws its stream from
// derive_seed(seed, {restart}).
inline KMeansResult kmeans_fit(const Matrix& points, std::size_t k, std::uint64_t seed,
                               std::size_t max_iter = 300, std::size_t n_init = 10) {
    const std::size_t n = points.rows();
    if (n == 0) throw InputError("kmeans_fit: empty input");
    if (k == 0 || k > n)
        throw InputError("kmeans_fit: k=" + std::to_string(k) + " out of range for n=" +
                         std::to_string(n));
    if (max_iter < 1) throw InputError("kmeans_fit: max_iter must be >= 1");
    if (n_init < 1) throw InputError("kmeans_fit: n_init must be >= 1");

    KMeansResult best;
    bool have = false;
    for (std::size_t restart = 0; restart < n_init; ++restart) {
        KMeansResult r = kmeans_single(points, k, derive_seed(seed, {restart}), max_iter);
        if (!have || r.inertia < best.inertia) {
            best = std::move(r);
            have = true;
        }
    }
    ensure_finite(best.centroids, "kmeans_fit centroids");
    return best;
}

} // namespace mvclust
