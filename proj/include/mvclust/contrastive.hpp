#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mvclust/autoencoder.hpp"
#include "mvclust/errors.hpp"
#include "mvclust/matrix.hpp"
#include "mvclust/selfsup.hpp"

namespace mvclust {

// Cosine similarity of two assignment columns; in [0, 1] for nonnegative
// inputs.
inline double column_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("column_similarity: length mismatch");
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na <= 0.0 || nb <= 0.0)
        throw NumericError("column_similarity: zero vector");
    return dot(a, b) / (na * nb);
}

namespace detail {

inline std::vector<double> column_of(const Matrix& m, std::size_t j) {
    std::vector<double> col(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) col[i] = m(i, j);
    return col;
}

} // namespace detail

// Contrastive loss over the cluster-assignment columns of two views. For
// anchor column j of view m the positive is column j of view n; the other
// same-cluster-index pairs across both views are negatives. The self pair
// (similarity 1) is excluded from the denominator.
inline double pair_contrastive_loss(const Matrix& qm, const Matrix& qn, double tau) {
    if (!qm.same_shape(qn)) throw ShapeError("pair_contrastive_loss: shape mismatch");
    if (tau <= 0.0) throw InputError("pair_contrastive_loss: tau must be > 0");
    const std::size_t k = qm.cols();
    double loss = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const auto anchor = detail::column_of(qm, j);
        const double pos = column_similarity(anchor, detail::column_of(qn, j));
        double denom = 0.0;
        for (std::size_t kp = 0; kp < k; ++kp) {
            if (kp != j)
                denom += std::exp(column_similarity(anchor, detail::column_of(qm, kp)) / tau);
            denom += std::exp(column_similarity(anchor, detail::column_of(qn, kp)) / tau);
        }
        if (denom <= 0.0)
            throw NumericError("pair_contrastive_loss: non-positive denominator");
        loss += -std::log(std::exp(pos / tau) / denom);
    }
    return loss / static_cast<double>(k);
}

// Full label-consistency objective: averaged pairwise contrastive losses
// plus the negative-entropy regularizer sum_m sum_j s_j^m log s_j^m on the
// soft cluster frequencies s_j^m (column means), which penalizes collapse.
inline double label_consistency_loss(const std::vector<Matrix>& qs, double tau,
                                     double entropy_weight = 1.0) {
    if (qs.size() < 2) throw InputError("label_consistency_loss: need at least 2 views");
    const std::size_t V = qs.size();
    double contrast = 0.0;
    for (std::size_t m = 0; m < V; ++m)
        for (std::size_t n = 0; n < V; ++n) {
            if (m == n) continue;
            contrast += pair_contrastive_loss(qs[m], qs[n], tau);
        }
    contrast *= 0.5;

    double reg = 0.0;
    const double N = static_cast<double>(qs[0].rows());
    for (const Matrix& q : qs) {
        for (std::size_t j = 0; j < q.cols(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < q.rows(); ++i) s += q(i, j);
            s /= N;
            if (s > 0.0) reg += s * std::log(s);
        }
    }
    return contrast + entropy_weight * reg;
}

struct LabelConsistencyGrads {
    double loss = 0.0;
    double contrastive_part = 0.0;
    double entropy_part = 0.0;
    std::vector<Matrix> q_grads; // dL/dQ^v per view
};

namespace detail {

// d cos(x, y) / dx = y/(|x||y|) - cos * x/|x|^2, accumulated into gx.
inline void add_cosine_grad(std::span<const double> x, std::span<const double> y, double sim,
                            double coef, std::vector<double>& gx) {
    const double nx = std::sqrt(dot(x, x));
    const double ny = std::sqrt(dot(y, y));
    const double inv = 1.0 / (nx * ny);
    const double self = sim / (nx * nx);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += coef * (y[i] * inv - self * x[i]);
}

} // namespace detail

// Loss and exact dL/dQ^v of label_consistency_loss; the gradients feed
// soft_assign_backward and from there the encoders.
inline LabelConsistencyGrads label_consistency_with_grads(const std::vector<Matrix>& qs,
                                                          double tau,
                                                          double entropy_weight = 1.0) {
    if (qs.size() < 2) throw InputError("label_consistency_with_grads: need at least 2 views");
    if (tau <= 0.0) throw InputError("label_consistency_with_grads: tau must be > 0");
    const std::size_t V = qs.size();
    const std::size_t n = qs[0].rows();
    const std::size_t k = qs[0].cols();
    for (const Matrix& q : qs)
        if (q.rows() != n || q.cols() != k)
            throw ShapeError("label_consistency_with_grads: view shape mismatch");

    // cache columns
    std::vector<std::vector<std::vector<double>>> cols(V);
    for (std::size_t v = 0; v < V; ++v) {
        cols[v].resize(k);
        for (std::size_t j = 0; j < k; ++j) cols[v][j] = detail::column_of(qs[v], j);
    }

    LabelConsistencyGrads out;
    out.q_grads.assign(V, Matrix(n, k));
    // per-column gradient accumulators
    std::vector<std::vector<std::vector<double>>> col_grads(V);
    for (std::size_t v = 0; v < V; ++v)
        col_grads[v].assign(k, std::vector<double>(n, 0.0));

    const double inv_k = 1.0 / static_cast<double>(k);
    double contrast = 0.0;
    for (std::size_t m = 0; m < V; ++m) {
        for (std::size_t nn = 0; nn < V; ++nn) {
            if (m == nn) continue;
            // ordered pair (m, nn); the 1/2 in front of the double sum
            const double pair_w = 0.5;
            for (std::size_t j = 0; j < k; ++j) {
                const auto& anchor = cols[m][j];
                // similarities against both views' columns
                std::vector<double> sim_m(k), sim_n(k);
                double denom = 0.0;
                for (std::size_t kp = 0; kp < k; ++kp) {
                    sim_n[kp] = column_similarity(anchor, cols[nn][kp]);
                    denom += std::exp(sim_n[kp] / tau);
                    if (kp != j) {
                        sim_m[kp] = column_similarity(anchor, cols[m][kp]);
                        denom += std::exp(sim_m[kp] / tau);
                    }
                }
                if (denom <= 0.0)
                    throw NumericError("label_consistency: non-positive denominator");
                contrast += pair_w * inv_k * (-(sim_n[j] / tau) + std::log(denom));

                // numerator term
                {
                    const double coef = -pair_w * inv_k / tau;
                    detail::add_cosine_grad(anchor, cols[nn][j], sim_n[j], coef,
                                            col_grads[m][j]);
                    detail::add_cosine_grad(cols[nn][j], anchor, sim_n[j], coef,
                                            col_grads[nn][j]);
                }
                // denominator terms
                for (std::size_t kp = 0; kp < k; ++kp) {
                    const double coef_n =
                        pair_w * inv_k * std::exp(sim_n[kp] / tau) / (tau * denom);
                    detail::add_cosine_grad(anchor, cols[nn][kp], sim_n[kp], coef_n,
                                            col_grads[m][j]);
                    detail::add_cosine_grad(cols[nn][kp], anchor, sim_n[kp], coef_n,
                                            col_grads[nn][kp]);
                    if (kp != j) {
                        const double coef_m =
                            pair_w * inv_k * std::exp(sim_m[kp] / tau) / (tau * denom);
                        detail::add_cosine_grad(anchor, cols[m][kp], sim_m[kp], coef_m,
                                                col_grads[m][j]);
                        detail::add_cosine_grad(cols[m][kp], anchor, sim_m[kp], coef_m,
                                                col_grads[m][kp]);
                    }
                }
            }
        }
    }

    // entropy regularizer on column means
    double reg = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += qs[v](i, j);
            s /= static_cast<double>(n);
            if (s > 0.0) {
                reg += s * std::log(s);
                const double dcol = entropy_weight * (std::log(s) + 1.0) /
                                    static_cast<double>(n);
                for (std::size_t i = 0; i < n; ++i) col_grads[v][j][i] += dcol;
            }
        }
    }

    for (std::size_t v = 0; v < V; ++v)
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t i = 0; i < n; ++i) out.q_grads[v](i, j) = col_grads[v][j][i];

    out.contrastive_part = contrast;
    out.entropy_part = reg;
    out.loss = contrast + entropy_weight * reg;
    return out;
}

struct ContrastiveTraceRow {
    std::size_t round = 0;
    std::size_t epoch = 0;
    double loss = 0.0;         // full Eq. objective
    double entropy_part = 0.0; // regularizer value (unweighted)
};

struct ContrastiveConfig {
    double tau = 1.0;
    double entropy_weight = 1.0;
    std::size_t epochs = 50;
    AdamConfig adam{1e-4, 0.9, 0.999, 1e-8};
    bool train_centroids = true;
    double rec_weight = 0.0; // optional reconstruction term to prevent drift
    std::size_t round = 0;   // only stamped into the trace
};

struct ContrastiveResult {
    std::vector<Matrix> q;
    std::vector<ContrastiveTraceRow> trace;
};

// Finetunes encoders (and optionally the per-view centroids) by Adam on the
// label-consistency loss computed through the soft assignments. Decoders are
// left untouched unless rec_weight > 0.
inline ContrastiveResult train_contrastive(std::vector<MlpAutoencoder>& models,
                                           std::vector<Matrix>& mu,
                                           const std::vector<Matrix>& views,
                                           const ContrastiveConfig& cfg) {
    const std::size_t V = models.size();
    if (views.size() != V || mu.size() != V)
        throw ShapeError("train_contrastive: views/models/centroids count mismatch");
    if (V < 2) throw InputError("train_contrastive: need at least 2 views");

    std::vector<AdamState> model_states;
    std::vector<std::vector<double>> mu_m(V), mu_v(V);
    std::vector<std::size_t> mu_steps(V, 0);
    for (std::size_t v = 0; v < V; ++v) {
        model_states.push_back(make_adam_state(models[v], cfg.adam));
        mu_m[v].assign(mu[v].size(), 0.0);
        mu_v[v].assign(mu[v].size(), 0.0);
    }

    ContrastiveResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<Matrix> z(V), q(V);
        for (std::size_t v = 0; v < V; ++v) {
            z[v] = encode(models[v], views[v]);
            if (!z[v].is_finite() || !mu[v].is_finite())
                throw TrainingError("train_contrastive: diverged at epoch " +
                                    std::to_string(epoch) + " view " + std::to_string(v));
            try {
                q[v] = soft_assign(z[v], mu[v]);
            } catch (const NumericError& e) {
                throw TrainingError("train_contrastive: diverged at epoch " +
                                    std::to_string(epoch) + " view " + std::to_string(v) + " (" +
                                    e.what() + ")");
            }
        }
        LabelConsistencyGrads lc =
            label_consistency_with_grads(q, cfg.tau, cfg.entropy_weight);
        if (!std::isfinite(lc.loss))
            throw TrainingError("train_contrastive: non-finite loss at epoch " +
                                std::to_string(epoch));
        result.trace.push_back({cfg.round, epoch, lc.loss, lc.entropy_part});

        for (std::size_t v = 0; v < V; ++v) {
            SoftAssignGrads sg = soft_assign_backward(z[v], mu[v], lc.q_grads[v]);
            ModelGrads grads = backward(models[v], views[v], &sg.z_grad, cfg.rec_weight);
            adam_step(models[v], grads, model_states[v]);
            if (cfg.train_centroids) {
                ++mu_steps[v];
                adam_update(mu[v].data(), sg.mu_grad.data(), mu_m[v], mu_v[v], mu_steps[v],
                            cfg.adam);
            }
        }
    }

    for (std::size_t v = 0; v < V; ++v)
        result.q.push_back(soft_assign(encode(models[v], views[v]), mu[v]));
    return result;
}

} // namespace mvclust
