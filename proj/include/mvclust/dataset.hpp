#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mvclust/errors.hpp"
#include "mvclust/io.hpp"
#include "mvclust/matrix.hpp"
#include "mvclust/rng.hpp"

namespace mvclust {

// V feature matrices over the same n samples, plus optional ground truth.
struct MultiViewDataset {
    std::string name;
    std::vector<Matrix> views; // each n x d_v
    std::optional<std::vector<std::size_t>> truth;

    std::size_t n() const { return views.empty() ? 0 : views.front().rows(); }
    std::size_t view_count() const { return views.size(); }
};

struct SyntheticSpec {
    std::size_t n = 500;
    std::size_t k = 4;
    std::size_t views = 2;
    std::vector<std::size_t> dims;      // per-view feature dims; defaults to 16 each
    double separation = 6.0;            // min center distance in units of cluster sigma
    double noise = 0.1;                 // per-view observation noise sigma
    std::uint64_t seed = 0;
    std::size_t latent_dim = 4;         // shared latent space dimension
    std::vector<bool> informative;      // per-view; an uninformative view is pure noise
};

// Shared-latent Gaussian blob generator: cluster identity lives in a common
// latent space; each view observes it through an independent random linear
// map plus noise. Uninformative views drop the signal entirely.
inline MultiViewDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n == 0 || spec.k == 0 || spec.views == 0 || spec.latent_dim == 0)
        throw InputError("generate_synthetic: counts must be positive");
    if (spec.k > spec.n) throw InputError("generate_synthetic: k > n");
    if (!spec.dims.empty() && spec.dims.size() != spec.views)
        throw InputError("generate_synthetic: dims size must match view count");
    if (!spec.informative.empty() && spec.informative.size() != spec.views)
        throw InputError("generate_synthetic: informative size must match view count");
    if (spec.separation < 0.0 || spec.noise < 0.0)
        throw InputError("generate_synthetic: separation/noise must be >= 0");

    std::vector<std::size_t> dims = spec.dims;
    if (dims.empty()) dims.assign(spec.views, 16);
    for (std::size_t d : dims)
        if (d == 0) throw InputError("generate_synthetic: zero view dimension");

    const std::size_t s = spec.latent_dim;

    // cluster centers: gaussian draws rescaled so the closest pair sits at
    // exactly `separation` (within-cluster sigma is 1)
    Rng center_rng(derive_seed(spec.seed, {0}));
    Matrix centers(spec.k, s);
    for (double& v : centers.data()) v = center_rng.normal();
    if (spec.k > 1) {
        double min_d = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < spec.k; ++a)
            for (std::size_t b = a + 1; b < spec.k; ++b)
                min_d = std::min(min_d, std::sqrt(squared_distance(centers.row(a), centers.row(b))));
        const double scale = min_d > 0.0 ? spec.separation / min_d : 0.0;
        for (double& v : centers.data()) v *= scale;
    }

    // balanced labels, shuffled deterministically
    std::vector<std::size_t> labels(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) labels[i] = i % spec.k;
    Rng shuffle_rng(derive_seed(spec.seed, {1}));
    for (std::size_t i = spec.n; i > 1; --i)
        std::swap(labels[i - 1], labels[shuffle_rng.index(i)]);

    Rng latent_rng(derive_seed(spec.seed, {2}));
    Matrix latent(spec.n, s);
    for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t d = 0; d < s; ++d)
            latent(i, d) = centers(labels[i], d) + latent_rng.normal();

    MultiViewDataset ds;
    ds.name = "synthetic";
    ds.truth = labels;
    for (std::size_t v = 0; v < spec.views; ++v) {
        const bool informative = spec.informative.empty() || spec.informative[v];
        Rng view_rng(derive_seed(spec.seed, {3, v}));
        Matrix x(spec.n, dims[v]);
        if (informative) {
            // random linear map, columns scaled to unit expected norm
            Matrix w(s, dims[v]);
            for (double& val : w.data()) val = view_rng.normal() / std::sqrt(static_cast<double>(s));
            x = matmul(latent, w);
        }
        for (double& val : x.data()) val += spec.noise * view_rng.normal();
        ds.views.push_back(std::move(x));
    }
    return ds;
}

// Manifest: JSON {name, views: [csv paths], labels: optional csv path};
// paths are resolved relative to the manifest location.
inline MultiViewDataset load_dataset(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    const json j = read_json_file(manifest_path);
    if (!j.contains("views") || !j.at("views").is_array() || j.at("views").empty())
        throw InputError(manifest_path + ": manifest needs a non-empty 'views' array");

    const fs::path base = fs::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    MultiViewDataset ds;
    ds.name = j.value("name", "dataset");
    std::vector<std::string> view_paths;
    for (const json& vp : j.at("views")) view_paths.push_back(vp.get<std::string>());
    for (const std::string& vp : view_paths) ds.views.push_back(read_csv_matrix(resolve(vp)));

    for (std::size_t v = 1; v < ds.views.size(); ++v) {
        if (ds.views[v].rows() != ds.views[0].rows())
            throw InputError("row count mismatch between views '" + view_paths[0] + "' (" +
                             std::to_string(ds.views[0].rows()) + " rows) and '" + view_paths[v] +
                             "' (" + std::to_string(ds.views[v].rows()) + " rows)");
    }

    if (j.contains("labels") && !j.at("labels").is_null()) {
        auto labels = read_labels_csv(resolve(j.at("labels").get<std::string>()));
        if (labels.size() != ds.n())
            throw InputError(manifest_path + ": label count " + std::to_string(labels.size()) +
                             " does not match sample count " + std::to_string(ds.n()));
        ds.truth = std::move(labels);
    }
    return ds;
}

// Writes view CSVs, optional labels, and the manifest into `dir`; returns
// the manifest path.
inline std::string save_dataset(const MultiViewDataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    json manifest{{"name", ds.name}};
    for (std::size_t v = 0; v < ds.views.size(); ++v) {
        const std::string fname = "view" + std::to_string(v) + ".csv";
        write_csv_matrix((fs::path(dir) / fname).string(), ds.views[v]);
        manifest["views"].push_back(fname);
    }
    if (ds.truth) {
        write_labels_csv((fs::path(dir) / "labels.csv").string(), *ds.truth);
        manifest["labels"] = "labels.csv";
    }
    const std::string mpath = (fs::path(dir) / "manifest.json").string();
    write_json_file(mpath, manifest);
    return mpath;
}

} // namespace mvclust
