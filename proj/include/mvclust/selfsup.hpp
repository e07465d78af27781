#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mvclust/autoencoder.hpp"
#include "mvclust/errors.hpp"
#include "mvclust/matrix.hpp"

namespace mvclust {

// Per-view soft assignment with the unit-dof Student-t kernel:
// q_ij = (1 + ||z_i - mu_j||^2)^-1 / sum_j' (1 + ||z_i - mu_j'||^2)^-1
inline Matrix soft_assign(const Matrix& z, const Matrix& mu) {
    if (z.cols() != mu.cols())
        throw ShapeError("soft_assign: latent dimension mismatch (" + std::to_string(z.cols()) +
                         " vs " + std::to_string(mu.cols()) + ")");
    const std::size_t n = z.rows();
    const std::size_t k = mu.rows();
    Matrix q(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double kernel = 1.0 / (1.0 + squared_distance(z.row(i), mu.row(j)));
            q(i, j) = kernel;
            denom += kernel;
        }
        for (std::size_t j = 0; j < k; ++j) q(i, j) /= denom;
    }
    ensure_finite(q, "soft_assign");
    return q;
}

// KL(P || Q) = sum_ij p_ij log(p_ij / q_ij); zero target entries contribute
// nothing. A zero q under positive p is a hard error rather than infinity.
inline double kl_loss(const Matrix& p, const Matrix& q) {
    if (!p.same_shape(q)) throw ShapeError("kl_loss: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p.data()[i];
        if (pi <= 0.0) continue;
        const double qi = q.data()[i];
        if (qi <= 0.0) throw NumericError("kl_loss: zero assignment under positive target");
        s += pi * std::log(pi / qi);
    }
    return s;
}

struct SoftAssignGrads {
    Matrix z_grad;  // n x l
    Matrix mu_grad; // k x l
};

// Chain rule through soft_assign for an arbitrary upstream dL/dQ.
// With w_ij = (1 + ||z_i - mu_j||^2)^-1 and row sums S_i:
//   dL/dw_ij = (upstream_ij - sum_j' upstream_ij' q_ij') / S_i
//   dL/dz_i  = -2 sum_j dL/dw_ij w_ij^2 (z_i - mu_j)
inline SoftAssignGrads soft_assign_backward(const Matrix& z, const Matrix& mu,
                                            const Matrix& upstream) {
    if (z.cols() != mu.cols())
        throw ShapeError("soft_assign_backward: latent dimension mismatch");
    if (upstream.rows() != z.rows() || upstream.cols() != mu.rows())
        throw ShapeError("soft_assign_backward: upstream must be (n, k)");
    const std::size_t n = z.rows();
    const std::size_t k = mu.rows();
    const std::size_t l = z.cols();

    SoftAssignGrads g;
    g.z_grad = Matrix(n, l);
    g.mu_grad = Matrix(k, l);

    std::vector<double> w(k);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            w[j] = 1.0 / (1.0 + squared_distance(z.row(i), mu.row(j)));
            s += w[j];
        }
        double dot_uq = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot_uq += upstream(i, j) * (w[j] / s);
        for (std::size_t j = 0; j < k; ++j) {
            const double dw = (upstream(i, j) - dot_uq) / s;
            const double coef = -2.0 * dw * w[j] * w[j];
            for (std::size_t d = 0; d < l; ++d) {
                const double diff = z(i, d) - mu(j, d);
                g.z_grad(i, d) += coef * diff;
                g.mu_grad(j, d) -= coef * diff;
            }
        }
    }
    return g;
}

// Gradients of kl_loss(p, soft_assign(z, mu)) with the target held constant.
inline SoftAssignGrads selfsup_gradients(const Matrix& z, const Matrix& mu, const Matrix& p) {
    if (p.rows() != z.rows() || p.cols() != mu.rows())
        throw ShapeError("selfsup_gradients: target must be (n, k)");
    const Matrix q = soft_assign(z, mu);
    Matrix upstream(p.rows(), p.cols());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p.data()[i];
        upstream.data()[i] = pi > 0.0 ? -pi / q.data()[i] : 0.0;
    }
    return soft_assign_backward(z, mu, upstream);
}

struct SelfsupTraceRow {
    std::size_t round = 0;
    std::size_t epoch = 0;
    std::size_t view = 0;
    double rec_loss = 0.0;
    double kl = 0.0;
};

struct SelfsupConfig {
    std::size_t epochs = 100;
    AdamConfig adam{};             // lr 1e-3
    double rec_weight = 1.0;
    double kl_weight = 1.0;
    double label_change_tol = 1e-3; // early stop; 0 disables
    std::size_t round = 0;          // only stamped into the trace
};

struct SelfsupResult {
    std::vector<Matrix> q; // per-view soft assignments after training
    std::vector<SelfsupTraceRow> trace;
    std::size_t epochs_run = 0;
};

// Joint refinement: per view, full-batch Adam on
// rec_weight * L_rec + kl_weight * KL(P || Q^v) over encoder/decoder
// parameters and the view centroids, with the target P fixed.
inline SelfsupResult train_selfsup(std::vector<MlpAutoencoder>& models,
                                   const std::vector<Matrix>& views, const Matrix& target,
                                   std::vector<Matrix>& mu, const SelfsupConfig& cfg) {
    const std::size_t V = models.size();
    if (views.size() != V || mu.size() != V)
        throw ShapeError("train_selfsup: views/models/centroids count mismatch");

    std::vector<AdamState> model_states;
    std::vector<std::vector<double>> mu_m(V), mu_v(V);
    std::vector<std::size_t> mu_steps(V, 0);
    for (std::size_t v = 0; v < V; ++v) {
        model_states.push_back(make_adam_state(models[v], cfg.adam));
        mu_m[v].assign(mu[v].size(), 0.0);
        mu_v[v].assign(mu[v].size(), 0.0);
    }

    SelfsupResult result;
    result.q.resize(V);
    std::vector<std::size_t> prev_labels;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Matrix mean_q;
        for (std::size_t v = 0; v < V; ++v) {
            const Matrix z = encode(models[v], views[v]);
            if (!z.is_finite() || !mu[v].is_finite())
                throw TrainingError("train_selfsup: diverged at epoch " + std::to_string(epoch) +
                                    " view " + std::to_string(v));
            Matrix q;
            try {
                q = soft_assign(z, mu[v]);
            } catch (const NumericError& e) {
                throw TrainingError("train_selfsup: diverged at epoch " + std::to_string(epoch) +
                                    " view " + std::to_string(v) + " (" + e.what() + ")");
            }
            const double rec = reconstruction_loss(models[v], views[v]);
            const double kl = kl_loss(target, q);
            if (!std::isfinite(rec) || !std::isfinite(kl))
                throw TrainingError("train_selfsup: non-finite loss at epoch " +
                                    std::to_string(epoch) + " view " + std::to_string(v));
            result.trace.push_back({cfg.round, epoch, v, rec, kl});

            ModelGrads grads;
            if (cfg.kl_weight != 0.0) {
                SoftAssignGrads sg = selfsup_gradients(z, mu[v], target);
                Matrix latent_grad = cfg.kl_weight * sg.z_grad;
                grads = backward(models[v], views[v], &latent_grad, cfg.rec_weight);
                Matrix mu_grad = cfg.kl_weight * sg.mu_grad;
                ++mu_steps[v];
                adam_update(mu[v].data(), mu_grad.data(), mu_m[v], mu_v[v], mu_steps[v],
                            cfg.adam);
            } else {
                grads = backward(models[v], views[v], nullptr, cfg.rec_weight);
            }
            adam_step(models[v], grads, model_states[v]);

            if (mean_q.empty())
                mean_q = q;
            else
                mean_q = mean_q + q;
        }

        // early stop on a stable consensus labeling
        if (cfg.label_change_tol > 0.0) {
            std::vector<std::size_t> labels(mean_q.rows());
            for (std::size_t i = 0; i < mean_q.rows(); ++i) {
                double best = -1.0;
                for (std::size_t j = 0; j < mean_q.cols(); ++j)
                    if (mean_q(i, j) > best) {
                        best = mean_q(i, j);
                        labels[i] = j;
                    }
            }
            if (!prev_labels.empty()) {
                std::size_t changed = 0;
                for (std::size_t i = 0; i < labels.size(); ++i)
                    if (labels[i] != prev_labels[i]) ++changed;
                const double frac = static_cast<double>(changed) /
                                    static_cast<double>(labels.size());
                if (frac < cfg.label_change_tol) {
                    result.epochs_run = epoch + 1;
                    break;
                }
            }
            prev_labels = std::move(labels);
        }
        result.epochs_run = epoch + 1;
    }

    for (std::size_t v = 0; v < V; ++v)
        result.q[v] = soft_assign(encode(models[v], views[v]), mu[v]);
    return result;
}

} // namespace mvclust
