// Command-line front end: synth / pretrain / run / eval / sweep /
// export-graph. Exit codes: 0 success, 1 input error, 2 numerical or
// training error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mvclust/mvclust.hpp"

namespace fs = std::filesystem;
using namespace mvclust;

namespace {

// Config resolution: defaults < --config file < explicit CLI flags.
struct ConfigArgs {
    std::string config_path;
    json overlay;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flat keys)");
        auto opt_u = [this, cmd](const std::string& flag, const char* key, const char* desc) {
            cmd->add_option_function<std::size_t>(
                flag, [this, key](std::size_t v) { overlay[key] = v; }, desc);
        };
        auto opt_d = [this, cmd](const std::string& flag, const char* key, const char* desc) {
            cmd->add_option_function<double>(
                flag, [this, key](double v) { overlay[key] = v; }, desc);
        };
        auto opt_b = [this, cmd](const std::string& flag, const char* key, const char* desc) {
            cmd->add_option_function<bool>(
                flag, [this, key](bool v) { overlay[key] = v; }, desc);
        };
        opt_u("--k", "k", "number of clusters");
        opt_u("--anchors", "anchors", "anchor count m");
        opt_d("--gamma", "gamma", "anchor-graph sparsity coefficient");
        opt_d("--alpha", "alpha", "Student-t offset for the global assignment");
        opt_d("--tau", "tau", "contrastive temperature");
        opt_u("--latent-dim", "latent_dim", "latent dimension");
        cmd->add_option_function<std::vector<std::size_t>>(
            "--hidden-dims",
            [this](std::vector<std::size_t> v) { overlay["hidden_dims"] = v; },
            "encoder hidden widths (comma separated)")
            ->delimiter(',');
        opt_u("--rounds", "rounds", "target-refresh rounds");
        opt_u("--pretrain-epochs", "pretrain_epochs", "autoencoder pretraining epochs");
        opt_u("--selfsup-epochs", "selfsup_epochs", "self-supervised epochs per round");
        opt_u("--contrastive-epochs", "contrastive_epochs", "contrastive finetuning epochs");
        opt_d("--pretrain-lr", "pretrain_lr", "pretraining learning rate");
        opt_d("--selfsup-lr", "selfsup_lr", "self-supervised learning rate");
        opt_d("--contrastive-lr", "contrastive_lr", "contrastive learning rate");
        opt_d("--kl-weight", "kl_weight", "weight of the KL term");
        opt_d("--entropy-weight", "entropy_weight", "weight of the entropy regularizer");
        opt_b("--use-selfsup", "use_selfsup", "enable the self-supervised stage");
        opt_b("--use-contrastive", "use_contrastive", "enable the contrastive stage");
        cmd->add_option_function<std::uint64_t>(
            "--seed", [this](std::uint64_t v) { overlay["seed"] = v; }, "master seed");
    }

    PipelineConfig resolve() const {
        json merged = json::object();
        if (!config_path.empty()) merged = read_json_file(config_path);
        (void)config_from_json(merged); // reject unknown keys in the file itself
        for (const auto& [k, v] : overlay.items()) merged[k] = v;
        return config_from_json(merged);
    }
};

void write_trace_csv(const std::string& path, const RunResult& r) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << "stage,round,epoch,view,l_r,l_c,l_q,entropy\n";
    for (std::size_t v = 0; v < r.pretrain_trace.size(); ++v)
        for (std::size_t e = 0; e < r.pretrain_trace[v].size(); ++e)
            out << "pretrain,0," << e << ',' << v << ','
                << detail::format_double(r.pretrain_trace[v][e]) << ",,,\n";
    for (const SelfsupTraceRow& row : r.selfsup_trace)
        out << "selfsup," << row.round << ',' << row.epoch << ',' << row.view << ','
            << detail::format_double(row.rec_loss) << ',' << detail::format_double(row.kl)
            << ",,\n";
    for (const ContrastiveTraceRow& row : r.contrastive_trace)
        out << "contrastive," << row.round << ',' << row.epoch << ",,,,"
            << detail::format_double(row.loss) << ',' << detail::format_double(row.entropy_part)
            << '\n';
}

std::vector<MlpAutoencoder> load_models_dir(const std::string& dir, std::size_t view_count) {
    std::vector<MlpAutoencoder> models;
    for (std::size_t v = 0; v < view_count; ++v) {
        const std::string path = (fs::path(dir) / ("model_view" + std::to_string(v) + ".json")).string();
        models.push_back(load_model(path));
    }
    return models;
}

void write_run_outputs(const std::string& out_dir, const RunResult& r) {
    fs::create_directories(out_dir);
    write_labels_csv((fs::path(out_dir) / "labels.csv").string(), r.labels);
    write_trace_csv((fs::path(out_dir) / "trace.csv").string(), r);
    write_json_file((fs::path(out_dir) / "config.lock.json").string(), config_to_json(r.config));
    if (r.metrics)
        write_json_file((fs::path(out_dir) / "metrics.json").string(),
                        metrics_to_json(*r.metrics));
    json timings = json::array();
    for (const StageTiming& t : r.timings)
        timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    write_json_file((fs::path(out_dir) / "timings.json").string(), timings);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view anchor-graph subspace clustering"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic multi-view dataset");
    SyntheticSpec spec;
    std::string synth_out = "synth_data";
    std::vector<std::size_t> synth_dims;
    std::vector<std::size_t> uninformative;
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--n", spec.n, "sample count");
    synth->add_option("--k", spec.k, "cluster count");
    synth->add_option("--views", spec.views, "view count");
    synth->add_option("--dims", synth_dims, "per-view dimensions")->delimiter(',');
    synth->add_option("--separation", spec.separation, "center separation in sigma units");
    synth->add_option("--noise", spec.noise, "per-view noise sigma");
    synth->add_option("--latent-dim", spec.latent_dim, "shared latent dimension");
    synth->add_option("--seed", spec.seed, "generator seed");
    synth->add_option("--uninformative", uninformative, "views generated as pure noise")
        ->delimiter(',');
    synth->callback([&] {
        spec.dims = synth_dims;
        if (!uninformative.empty()) {
            spec.informative.assign(spec.views, true);
            for (std::size_t v : uninformative) {
                if (v >= spec.views) throw InputError("synth: uninformative view out of range");
                spec.informative[v] = false;
            }
        }
        const MultiViewDataset ds = generate_synthetic(spec);
        const std::string manifest = save_dataset(ds, synth_out);
        std::cout << manifest << "\n";
    });

    // ---- pretrain ----
    auto* pre = app.add_subcommand("pretrain", "pretrain per-view autoencoders");
    std::string pre_data, pre_out = "models";
    ConfigArgs pre_cfg;
    pre->add_option("--data", pre_data, "dataset manifest")->required();
    pre->add_option("--out", pre_out, "output directory");
    pre_cfg.attach(pre);
    pre->callback([&] {
        const PipelineConfig cfg = pre_cfg.resolve();
        const MultiViewDataset ds = load_dataset(pre_data);
        validate_config(cfg, ds);
        fs::create_directories(pre_out);
        std::ofstream trace((fs::path(pre_out) / "trace.csv").string());
        trace << "stage,round,epoch,view,l_r,l_c,l_q,entropy\n";
        for (std::size_t v = 0; v < ds.view_count(); ++v) {
            std::vector<std::size_t> dims;
            dims.push_back(ds.views[v].cols());
            dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
            dims.push_back(cfg.latent_dim);
            MlpAutoencoder model = make_autoencoder(dims, derive_seed(cfg.seed, {10, v}));
            AdamConfig adam;
            adam.lr = cfg.pretrain_lr;
            const auto losses = pretrain_autoencoder(model, ds.views[v], cfg.pretrain_epochs, adam);
            for (std::size_t e = 0; e < losses.size(); ++e)
                trace << "pretrain,0," << e << ',' << v << ','
                      << detail::format_double(losses[e]) << ",,,\n";
            save_model((fs::path(pre_out) / ("model_view" + std::to_string(v) + ".json")).string(),
                       model);
            std::cout << "view " << v << ": loss " << (losses.empty() ? 0.0 : losses.front())
                      << " -> " << reconstruction_loss(model, ds.views[v]) << "\n";
        }
        write_json_file((fs::path(pre_out) / "config.lock.json").string(), config_to_json(cfg));
    });

    // ---- run ----
    auto* run = app.add_subcommand("run", "run the full clustering pipeline");
    std::string run_data, run_out = "run_out", run_models;
    ConfigArgs run_cfg;
    run->add_option("--data", run_data, "dataset manifest")->required();
    run->add_option("--out", run_out, "output directory");
    run->add_option("--models", run_models, "directory of pretrained checkpoints (skips pretraining)");
    run_cfg.attach(run);
    run->callback([&] {
        const PipelineConfig cfg = run_cfg.resolve();
        const MultiViewDataset ds = load_dataset(run_data);
        std::vector<MlpAutoencoder> pretrained;
        if (!run_models.empty()) pretrained = load_models_dir(run_models, ds.view_count());
        const RunResult r = run_pipeline(ds, cfg, std::move(pretrained));
        write_run_outputs(run_out, r);
        std::cout << "labels: " << (fs::path(run_out) / "labels.csv").string() << "\n";
        if (r.metrics)
            std::cout << "acc " << r.metrics->acc << "  nmi " << r.metrics->nmi << "  ari "
                      << r.metrics->ari << "\n";
        for (const StageTiming& t : r.timings)
            std::cout << t.stage << ": " << t.seconds << " s\n";
    });

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "score a labels file against ground truth");
    std::string eval_pred, eval_truth, eval_out;
    eval_cmd->add_option("--pred", eval_pred, "predicted labels csv")->required();
    eval_cmd->add_option("--truth", eval_truth, "ground-truth labels csv")->required();
    eval_cmd->add_option("--out", eval_out, "write metrics JSON here");
    eval_cmd->callback([&] {
        const auto pred = read_labels_csv(eval_pred);
        const auto truth = read_labels_csv(eval_truth);
        const MetricsReport rep = evaluate(pred, truth);
        const json j = metrics_to_json(rep);
        std::cout << j.dump(2) << "\n";
        if (!eval_out.empty()) write_json_file(eval_out, j);
    });

    // ---- sweep ----
    auto* sw = app.add_subcommand("sweep", "grid sweep over anchors and gamma");
    std::string sw_data, sw_out = "sweep.csv";
    std::vector<std::size_t> sw_anchors;
    std::vector<double> sw_gammas;
    ConfigArgs sw_cfg;
    sw->add_option("--data", sw_data, "dataset manifest")->required();
    sw->add_option("--out", sw_out, "output csv");
    sw->add_option("--anchor-grid", sw_anchors, "anchor counts")->delimiter(',')->required();
    sw->add_option("--gamma-grid", sw_gammas, "gamma values")->delimiter(',')->required();
    sw_cfg.attach(sw);
    sw->callback([&] {
        const PipelineConfig cfg = sw_cfg.resolve();
        const MultiViewDataset ds = load_dataset(sw_data);
        const auto cells = sweep(ds, cfg, SweepGrid{sw_anchors, sw_gammas});
        std::ofstream out(sw_out);
        if (!out) throw InputError("cannot write " + sw_out);
        out << "anchors,gamma,acc,nmi,ari,runtime_seconds,error\n";
        for (const SweepCell& c : cells) {
            out << c.anchors << ',' << detail::format_double(c.gamma) << ','
                << detail::format_double(c.acc) << ',' << detail::format_double(c.nmi_v) << ','
                << detail::format_double(c.ari_v) << ','
                << detail::format_double(c.runtime_seconds) << ',' << c.error << '\n';
        }
        std::cout << sw_out << "\n";
    });

    // ---- export-graph ----
    auto* eg = app.add_subcommand("export-graph", "export anchor graphs and spectral state");
    std::string eg_data, eg_out = "graph_out", eg_models;
    ConfigArgs eg_cfg;
    eg->add_option("--data", eg_data, "dataset manifest")->required();
    eg->add_option("--out", eg_out, "output directory");
    eg->add_option("--models", eg_models, "directory of pretrained checkpoints");
    eg_cfg.attach(eg);
    eg->callback([&] {
        const PipelineConfig cfg = eg_cfg.resolve();
        const MultiViewDataset ds = load_dataset(eg_data);
        validate_config(cfg, ds);
        std::vector<MlpAutoencoder> models;
        if (!eg_models.empty()) {
            models = load_models_dir(eg_models, ds.view_count());
        } else {
            for (std::size_t v = 0; v < ds.view_count(); ++v) {
                std::vector<std::size_t> dims;
                dims.push_back(ds.views[v].cols());
                dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
                dims.push_back(cfg.latent_dim);
                MlpAutoencoder model = make_autoencoder(dims, derive_seed(cfg.seed, {10, v}));
                AdamConfig adam;
                adam.lr = cfg.pretrain_lr;
                pretrain_autoencoder(model, ds.views[v], cfg.pretrain_epochs, adam);
                models.push_back(std::move(model));
            }
        }
        std::vector<AnchorGraph> graphs;
        for (std::size_t v = 0; v < ds.view_count(); ++v) {
            const Matrix z = encode(models[v], ds.views[v]);
            const std::uint64_t seed = derive_seed(cfg.seed, {30, v});
            graphs.push_back(build_anchor_graph(z, cfg.anchors, cfg.gamma, seed));
            export_anchor_graph(eg_out, "view" + std::to_string(v), graphs.back(), seed);
        }
        const SpectralState state =
            build_spectral_state(graphs, cfg.k, cfg.alpha, derive_seed(cfg.seed, {31}));
        export_embedding(eg_out, state.global_u, state.target, cfg.k, cfg.alpha, 0);
        std::cout << eg_out << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ShapeError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
