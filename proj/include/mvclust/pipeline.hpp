#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "mvclust/anchor_graph.hpp"
#include "mvclust/autoencoder.hpp"
#include "mvclust/contrastive.hpp"
#include "mvclust/dataset.hpp"
#include "mvclust/errors.hpp"
#include "mvclust/io.hpp"
#include "mvclust/kmeans.hpp"
#include "mvclust/metrics.hpp"
#include "mvclust/selfsup.hpp"
#include "mvclust/spectral.hpp"

namespace mvclust {

struct PipelineConfig {
    std::size_t k = 4;
    std::size_t anchors = 40;  // m; useful range roughly [10, 100]
    double gamma = 1.0;        // anchor-graph sparsity, from {0.1, 1, 10}
    double alpha = 0.001;      // Student-t offset of the global assignment
    double tau = 1.0;          // contrastive temperature
    std::size_t latent_dim = 10;
    std::vector<std::size_t> hidden_dims = {500, 500, 2000};
    std::size_t rounds = 3;    // alternations of {anchors, C, U, P} + selfsup
    std::size_t pretrain_epochs = 200;
    std::size_t selfsup_epochs = 100;
    std::size_t contrastive_epochs = 50;
    double pretrain_lr = 1e-3;
    double selfsup_lr = 1e-3;
    double contrastive_lr = 1e-4;
    double kl_weight = 1.0;
    double entropy_weight = 1.0;
    bool use_selfsup = true;
    bool use_contrastive = true;
    std::uint64_t seed = 0;
};

inline json config_to_json(const PipelineConfig& c) {
    return json{{"k", c.k},
                {"anchors", c.anchors},
                {"gamma", c.gamma},
                {"alpha", c.alpha},
                {"tau", c.tau},
                {"latent_dim", c.latent_dim},
                {"hidden_dims", c.hidden_dims},
                {"rounds", c.rounds},
                {"pretrain_epochs", c.pretrain_epochs},
                {"selfsup_epochs", c.selfsup_epochs},
                {"contrastive_epochs", c.contrastive_epochs},
                {"pretrain_lr", c.pretrain_lr},
                {"selfsup_lr", c.selfsup_lr},
                {"contrastive_lr", c.contrastive_lr},
                {"kl_weight", c.kl_weight},
                {"entropy_weight", c.entropy_weight},
                {"use_selfsup", c.use_selfsup},
                {"use_contrastive", c.use_contrastive},
                {"seed", c.seed}};
}

// Flat JSON with explicit keys; unknown keys are errors so sweep typos fail
// loudly instead of silently running defaults.
inline PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "k")
            c.k = value.get<std::size_t>();
        else if (key == "anchors")
            c.anchors = value.get<std::size_t>();
        else if (key == "gamma")
            c.gamma = value.get<double>();
        else if (key == "alpha")
            c.alpha = value.get<double>();
        else if (key == "tau")
            c.tau = value.get<double>();
        else if (key == "latent_dim")
            c.latent_dim = value.get<std::size_t>();
        else if (key == "hidden_dims")
            c.hidden_dims = value.get<std::vector<std::size_t>>();
        else if (key == "rounds")
            c.rounds = value.get<std::size_t>();
        else if (key == "pretrain_epochs")
            c.pretrain_epochs = value.get<std::size_t>();
        else if (key == "selfsup_epochs")
            c.selfsup_epochs = value.get<std::size_t>();
        else if (key == "contrastive_epochs")
            c.contrastive_epochs = value.get<std::size_t>();
        else if (key == "pretrain_lr")
            c.pretrain_lr = value.get<double>();
        else if (key == "selfsup_lr")
            c.selfsup_lr = value.get<double>();
        else if (key == "contrastive_lr")
            c.contrastive_lr = value.get<double>();
        else if (key == "kl_weight")
            c.kl_weight = value.get<double>();
        else if (key == "entropy_weight")
            c.entropy_weight = value.get<double>();
        else if (key == "use_selfsup")
            c.use_selfsup = value.get<bool>();
        else if (key == "use_contrastive")
            c.use_contrastive = value.get<bool>();
        else if (key == "seed")
            c.seed = value.get<std::uint64_t>();
        else
            throw InputError("config: unknown key '" + key + "'");
    }
    return c;
}

inline void validate_config(const PipelineConfig& c, const MultiViewDataset& ds) {
    if (ds.views.empty() || ds.n() == 0) throw InputError("pipeline: empty dataset");
    if (c.k == 0 || c.anchors == 0 || c.latent_dim == 0 || c.rounds == 0)
        throw InputError("pipeline: counts must be positive");
    if (c.anchors < c.k)
        throw InputError("pipeline: anchors (" + std::to_string(c.anchors) +
                         ") must be >= k (" + std::to_string(c.k) + ")");
    if (c.anchors > ds.n())
        throw InputError("pipeline: anchors exceed sample count");
    if (c.k > ds.n()) throw InputError("pipeline: k exceeds sample count");
    if (c.alpha <= 0.0) throw InputError("pipeline: alpha must be > 0");
    if (c.tau <= 0.0) throw InputError("pipeline: tau must be > 0");
    if (c.gamma < 0.0) throw InputError("pipeline: gamma must be >= 0");
    for (const Matrix& v : ds.views)
        if (!v.is_finite()) throw InputError("pipeline: dataset has non-finite entries");
}

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RunResult {
    std::vector<std::size_t> labels;
    std::optional<MetricsReport> metrics;
    std::vector<std::vector<double>> pretrain_trace; // per view, per epoch L_r
    std::vector<SelfsupTraceRow> selfsup_trace;
    std::vector<ContrastiveTraceRow> contrastive_trace;
    std::vector<StageTiming> timings;
    PipelineConfig config;
    // final state, kept for exports and checkpointing
    std::vector<MlpAutoencoder> models;
    std::vector<Matrix> mu;
    std::vector<Matrix> q;
    std::vector<AnchorGraph> graphs;
    SpectralState state;
};

namespace detail {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}

    // Times the stage and prefixes any library error with the stage tag,
    // preserving the error type (and therefore the CLI exit code).
    template <typename F>
    auto run(const std::string& stage, F&& fn) -> decltype(fn()) {
        using R = decltype(fn());
        const auto start = std::chrono::steady_clock::now();
        auto rethrow = [&stage](const auto& e) {
            using E = std::decay_t<decltype(e)>;
            throw E("stage " + stage + ": " + e.what());
        };
        if constexpr (std::is_void_v<R>) {
            try {
                fn();
            } catch (const ShapeError& e) {
                rethrow(e);
            } catch (const InputError& e) {
                rethrow(e);
            } catch (const TrainingError& e) {
                rethrow(e);
            } catch (const NumericError& e) {
                rethrow(e);
            }
            finish(stage, start);
        } else {
            std::optional<R> out;
            try {
                out = fn();
            } catch (const ShapeError& e) {
                rethrow(e);
            } catch (const InputError& e) {
                rethrow(e);
            } catch (const TrainingError& e) {
                rethrow(e);
            } catch (const NumericError& e) {
                rethrow(e);
            }
            finish(stage, start);
            return std::move(*out);
        }
    }

private:
    void finish(const std::string& stage, std::chrono::steady_clock::time_point start) {
        const auto end = std::chrono::steady_clock::now();
        sink_.push_back({stage, std::chrono::duration<double>(end - start).count()});
    }
    std::vector<StageTiming>& sink_;
};

} // namespace detail

// Full pipeline: pretrain autoencoders, alternate {anchors, coefficients,
// spectral target} with KL self-supervision for `rounds` rounds, finetune
// with label-consistency contrastive learning, then rebuild the anchor
// graphs and target from the final embeddings and read off the labels.
// Deterministic given (dataset, config): every random draw derives from the
// master seed via fixed tags.
inline RunResult run_pipeline(const MultiViewDataset& ds, const PipelineConfig& cfg,
                              std::vector<MlpAutoencoder> pretrained = {}) {
    validate_config(cfg, ds);
    const std::size_t V = ds.view_count();

    RunResult r;
    r.config = cfg;
    detail::StageClock clock(r.timings);

    // seed tags: 10=model init, 20=anchor rounds, 21=global kmeans,
    // 22=centroid init, 30/31=final rebuild
    if (!pretrained.empty()) {
        if (pretrained.size() != V)
            throw InputError("run_pipeline: pretrained model count mismatch");
        r.models = std::move(pretrained);
        for (std::size_t v = 0; v < V; ++v)
            if (r.models[v].input_dim() != ds.views[v].cols())
                throw ShapeError("run_pipeline: pretrained model " + std::to_string(v) +
                                 " does not match view width");
    } else {
        clock.run("pretrain", [&] {
            for (std::size_t v = 0; v < V; ++v) {
                std::vector<std::size_t> dims;
                dims.push_back(ds.views[v].cols());
                dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
                dims.push_back(cfg.latent_dim);
                MlpAutoencoder model = make_autoencoder(dims, derive_seed(cfg.seed, {10, v}));
                AdamConfig adam;
                adam.lr = cfg.pretrain_lr;
                r.pretrain_trace.push_back(
                    pretrain_autoencoder(model, ds.views[v], cfg.pretrain_epochs, adam));
                r.models.push_back(std::move(model));
            }
        });
    }

    // per-view centroids initialized once from the pretrained embeddings
    clock.run("centroid_init", [&] {
        for (std::size_t v = 0; v < V; ++v) {
            const Matrix z = encode(r.models[v], ds.views[v]);
            r.mu.push_back(kmeans_fit(z, cfg.k, derive_seed(cfg.seed, {22, v})).centroids);
        }
    });

    if (cfg.use_selfsup) {
        for (std::size_t round = 0; round < cfg.rounds; ++round) {
            const std::string tag = "round" + std::to_string(round);
            auto state = clock.run("target_" + tag, [&] {
                std::vector<AnchorGraph> graphs;
                for (std::size_t v = 0; v < V; ++v) {
                    const Matrix z = encode(r.models[v], ds.views[v]);
                    graphs.push_back(build_anchor_graph(z, cfg.anchors, cfg.gamma,
                                                        derive_seed(cfg.seed, {20, round, v})));
                }
                return build_spectral_state(graphs, cfg.k, cfg.alpha,
                                            derive_seed(cfg.seed, {21, round}));
            });
            clock.run("selfsup_" + tag, [&] {
                SelfsupConfig sc;
                sc.epochs = cfg.selfsup_epochs;
                sc.adam.lr = cfg.selfsup_lr;
                sc.kl_weight = cfg.kl_weight;
                sc.round = round;
                SelfsupResult sr = train_selfsup(r.models, ds.views, state.target, r.mu, sc);
                r.selfsup_trace.insert(r.selfsup_trace.end(), sr.trace.begin(), sr.trace.end());
            });
        }
    }

    if (cfg.use_contrastive && V >= 2) {
        clock.run("contrastive", [&] {
            ContrastiveConfig cc;
            cc.tau = cfg.tau;
            cc.entropy_weight = cfg.entropy_weight;
            cc.epochs = cfg.contrastive_epochs;
            cc.adam.lr = cfg.contrastive_lr;
            cc.round = cfg.use_selfsup ? cfg.rounds : 0;
            ContrastiveResult cr = train_contrastive(r.models, r.mu, ds.views, cc);
            r.contrastive_trace = std::move(cr.trace);
        });
    }

    // final rebuild from the finetuned embeddings (Algorithm: coefficients
    // are recomputed after contrastive learning, prediction reads the
    // resulting target distribution)
    clock.run("final_graphs", [&] {
        for (std::size_t v = 0; v < V; ++v) {
            const Matrix z = encode(r.models[v], ds.views[v]);
            r.graphs.push_back(
                build_anchor_graph(z, cfg.anchors, cfg.gamma, derive_seed(cfg.seed, {30, v})));
        }
    });
    clock.run("final_target", [&] {
        r.state = build_spectral_state(r.graphs, cfg.k, cfg.alpha, derive_seed(cfg.seed, {31}));
        r.labels = predict(r.state.target);
        for (std::size_t v = 0; v < V; ++v)
            r.q.push_back(soft_assign(encode(r.models[v], ds.views[v]), r.mu[v]));
    });

    if (ds.truth) r.metrics = evaluate(r.labels, *ds.truth);
    return r;
}

struct SweepCell {
    std::size_t anchors = 0;
    double gamma = 0.0;
    double acc = std::numeric_limits<double>::quiet_NaN();
    double nmi_v = std::numeric_limits<double>::quiet_NaN();
    double ari_v = std::numeric_limits<double>::quiet_NaN();
    double runtime_seconds = 0.0;
    std::string error; // empty on success
};

struct SweepGrid {
    std::vector<std::size_t> anchors;
    std::vector<double> gammas;
};

// One pipeline run per (anchors, gamma) grid point; failures are recorded
// per cell and the sweep continues.
inline std::vector<SweepCell> sweep(const MultiViewDataset& ds, const PipelineConfig& base,
                                    const SweepGrid& grid) {
    if (grid.anchors.empty() || grid.gammas.empty())
        throw InputError("sweep: empty grid");
    std::vector<SweepCell> cells;
    for (std::size_t m : grid.anchors) {
        for (double g : grid.gammas) {
            SweepCell cell;
            cell.anchors = m;
            cell.gamma = g;
            PipelineConfig cfg = base;
            cfg.anchors = m;
            cfg.gamma = g;
            const auto start = std::chrono::steady_clock::now();
            try {
                RunResult rr = run_pipeline(ds, cfg);
                if (rr.metrics) {
                    cell.acc = rr.metrics->acc;
                    cell.nmi_v = rr.metrics->nmi;
                    cell.ari_v = rr.metrics->ari;
                }
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            const auto end = std::chrono::steady_clock::now();
            cell.runtime_seconds = std::chrono::duration<double>(end - start).count();
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

} // namespace mvclust
