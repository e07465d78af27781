#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "mvclust/errors.hpp"

namespace mvclust {

using Labeling = std::vector<std::size_t>;

struct MetricsReport {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    std::size_t n = 0;
    std::size_t k_pred = 0;
    std::size_t k_true = 0;
};

namespace detail {

inline std::size_t label_count(const Labeling& l) {
    std::size_t k = 0;
    for (std::size_t v : l) k = std::max(k, v + 1);
    return k;
}

// n_ij = |{s : pred_s = i, truth_s = j}|
inline std::vector<std::vector<std::size_t>> contingency(const Labeling& pred,
                                                         const Labeling& truth) {
    const std::size_t kp = label_count(pred);
    const std::size_t kt = label_count(truth);
    std::vector<std::vector<std::size_t>> table(kp, std::vector<std::size_t>(kt, 0));
    for (std::size_t s = 0; s < pred.size(); ++s) ++table[pred[s]][truth[s]];
    return table;
}

// Min-cost assignment on a square cost matrix, O(n^3) shortest augmenting
// path with potentials. Returns the column assigned to each row.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, n), way(n + 1, n);
    for (std::size_t i = 0; i < n; ++i) {
        p[n] = i;
        std::size_t j0 = n;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = n;
            for (std::size_t j = 0; j < n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0][j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != n);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != n);
    }
    std::vector<std::size_t> row_to_col(n, n);
    for (std::size_t j = 0; j < n; ++j)
        if (p[j] < n) row_to_col[p[j]] = j;
    return row_to_col;
}

inline double comb2(double x) { return x * (x - 1.0) / 2.0; }

} // namespace detail

// Clustering accuracy: best fraction of agreeing samples over all bijective
// relabelings, found with min-cost assignment on the negated confusion
// matrix. Unequal cluster counts are handled by zero-padding to square.
inline double accuracy(const Labeling& pred, const Labeling& truth) {
    if (pred.size() != truth.size())
        throw InputError("accuracy: length mismatch");
    if (pred.empty()) throw InputError("accuracy: empty labelings");
    const auto table = detail::contingency(pred, truth);
    const std::size_t kp = table.size();
    const std::size_t kt = table[0].size();
    const std::size_t dim = std::max(kp, kt);
    std::vector<std::vector<double>> cost(dim, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < kp; ++i)
        for (std::size_t j = 0; j < kt; ++j)
            cost[i][j] = -static_cast<double>(table[i][j]);
    const auto match = detail::hungarian(cost);
    double correct = 0.0;
    for (std::size_t i = 0; i < kp; ++i)
        if (match[i] < kt) correct += static_cast<double>(table[i][match[i]]);
    return correct / static_cast<double>(pred.size());
}

// Normalized mutual information with geometric-mean normalization,
// I(pred;truth) / sqrt(H(pred) H(truth)). Degenerate single-cluster
// labelings have zero entropy; NMI is defined as 0 in that case.
inline double nmi(const Labeling& pred, const Labeling& truth) {
    if (pred.size() != truth.size())
        throw InputError("nmi: length mismatch");
    if (pred.empty()) throw InputError("nmi: empty labelings");
    const auto table = detail::contingency(pred, truth);
    const std::size_t kp = table.size();
    const std::size_t kt = table[0].size();
    const double n = static_cast<double>(pred.size());

    std::vector<double> row(kp, 0.0), col(kt, 0.0);
    for (std::size_t i = 0; i < kp; ++i)
        for (std::size_t j = 0; j < kt; ++j) {
            row[i] += static_cast<double>(table[i][j]);
            col[j] += static_cast<double>(table[i][j]);
        }

    double hp = 0.0, ht = 0.0, mi = 0.0;
    for (double r : row)
        if (r > 0.0) hp -= (r / n) * std::log(r / n);
    for (double c : col)
        if (c > 0.0) ht -= (c / n) * std::log(c / n);
    for (std::size_t i = 0; i < kp; ++i)
        for (std::size_t j = 0; j < kt; ++j) {
            const double nij = static_cast<double>(table[i][j]);
            if (nij > 0.0) mi += (nij / n) * std::log(n * nij / (row[i] * col[j]));
        }

    if (hp <= 0.0 || ht <= 0.0) return 0.0;
    return mi / std::sqrt(hp * ht);
}

// Adjusted Rand index via the pair-counting formula. Identical trivial
// partitions (max RI == E[RI]) return 1 per the standard convention.
inline double ari(const Labeling& pred, const Labeling& truth) {
    if (pred.size() != truth.size())
        throw InputError("ari: length mismatch");
    if (pred.empty()) throw InputError("ari: empty labelings");
    const auto table = detail::contingency(pred, truth);
    const std::size_t kp = table.size();
    const std::size_t kt = table[0].size();
    const double n = static_cast<double>(pred.size());

    std::vector<double> row(kp, 0.0), col(kt, 0.0);
    double sum_nij2 = 0.0;
    for (std::size_t i = 0; i < kp; ++i)
        for (std::size_t j = 0; j < kt; ++j) {
            const double nij = static_cast<double>(table[i][j]);
            row[i] += nij;
            col[j] += nij;
            sum_nij2 += detail::comb2(nij);
        }
    double sum_a2 = 0.0, sum_b2 = 0.0;
    for (double r : row) sum_a2 += detail::comb2(r);
    for (double c : col) sum_b2 += detail::comb2(c);

    const double total = detail::comb2(n);
    const double expected = sum_a2 * sum_b2 / total;
    const double maximum = 0.5 * (sum_a2 + sum_b2);
    if (maximum == expected) return 1.0;
    return (sum_nij2 - expected) / (maximum - expected);
}

inline MetricsReport evaluate(const Labeling& pred, const Labeling& truth) {
    MetricsReport r;
    r.acc = accuracy(pred, truth);
    r.nmi = nmi(pred, truth);
    r.ari = ari(pred, truth);
    r.n = pred.size();
    r.k_pred = detail::label_count(pred);
    r.k_true = detail::label_count(truth);
    return r;
}

} // namespace mvclust
