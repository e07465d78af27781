#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "mvclust/dataset.hpp"
#include "mvclust/pipeline.hpp"
#include "oracles.hpp"

using namespace mvclust;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("mvclust_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// minimal independent CSV parser used as the reference
Matrix reference_parse(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        const char* p = line.c_str();
        char* end = nullptr;
        while (*p) {
            row.push_back(std::strtod(p, &end));
            p = (*end == ',') ? end + 1 : end;
        }
        rows.push_back(std::move(row));
    }
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    return m;
}

PipelineConfig tiny_config() {
    PipelineConfig cfg;
    cfg.k = 4;
    cfg.anchors = 12;
    cfg.latent_dim = 4;
    cfg.hidden_dims = {16, 16};
    cfg.rounds = 1;
    cfg.pretrain_epochs = 40;
    cfg.selfsup_epochs = 15;
    cfg.contrastive_epochs = 10;
    cfg.seed = 7;
    return cfg;
}

} // namespace

TEST(Synthetic, DeterministicRegeneration) {
    SyntheticSpec spec;
    spec.n = 60;
    spec.k = 3;
    spec.views = 2;
    spec.seed = 123;
    const MultiViewDataset a = generate_synthetic(spec);
    const MultiViewDataset b = generate_synthetic(spec);
    ASSERT_EQ(a.views.size(), b.views.size());
    for (std::size_t v = 0; v < a.views.size(); ++v) EXPECT_EQ(a.views[v], b.views[v]);
    EXPECT_EQ(*a.truth, *b.truth);
}

TEST(Synthetic, BalancedLabelsAndShapes) {
    SyntheticSpec spec;
    spec.n = 90;
    spec.k = 3;
    spec.views = 3;
    spec.dims = {7, 11, 5};
    spec.seed = 5;
    const MultiViewDataset ds = generate_synthetic(spec);
    EXPECT_EQ(ds.n(), 90u);
    EXPECT_EQ(ds.views[0].cols(), 7u);
    EXPECT_EQ(ds.views[1].cols(), 11u);
    EXPECT_EQ(ds.views[2].cols(), 5u);
    std::vector<std::size_t> counts(3, 0);
    for (std::size_t l : *ds.truth) ++counts[l];
    for (std::size_t c : counts) EXPECT_EQ(c, 30u);
}

TEST(Synthetic, ZeroSeparationCarriesNoSignal) {
    SyntheticSpec spec;
    spec.n = 160;
    spec.k = 4;
    spec.views = 2;
    spec.dims = {10, 10};
    spec.separation = 0.0;
    spec.seed = 17;
    const MultiViewDataset ds = generate_synthetic(spec);
    PipelineConfig cfg = tiny_config();
    const RunResult r = run_pipeline(ds, cfg);
    ASSERT_TRUE(r.metrics.has_value());
    // best-permutation accuracy of a signal-free clustering sits near 1/k
    // (above it by matching inflation, far below a real signal)
    EXPECT_LT(r.metrics->acc, 0.5);
    EXPECT_GE(r.metrics->acc, 0.25 - 1e-12);
}

TEST(Synthetic, UninformativeViewIsPureNoise) {
    SyntheticSpec spec;
    spec.n = 100;
    spec.k = 2;
    spec.views = 2;
    spec.dims = {8, 8};
    spec.separation = 6.0;
    spec.seed = 3;
    spec.informative = {true, false};
    const MultiViewDataset ds = generate_synthetic(spec);
    // the noise view must not correlate with labels: column means per
    // cluster stay within a fraction of the cluster separation
    double max_gap = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
        double m0 = 0.0, m1 = 0.0;
        std::size_t c0 = 0, c1 = 0;
        for (std::size_t i = 0; i < 100; ++i) {
            if ((*ds.truth)[i] == 0) {
                m0 += ds.views[1](i, j);
                ++c0;
            } else {
                m1 += ds.views[1](i, j);
                ++c1;
            }
        }
        max_gap = std::max(max_gap, std::fabs(m0 / c0 - m1 / c1));
    }
    EXPECT_LT(max_gap, 1.0);
}

TEST(Synthetic, MultiViewComplementaritySmoke) {
    // paired runs: adding a pure-noise view to an informative one must not
    // beat or be beaten by chance — the pair stays above the noise-only run
    SyntheticSpec two;
    two.n = 120;
    two.k = 3;
    two.views = 2;
    two.dims = {10, 10};
    two.separation = 5.0;
    two.noise = 0.2;
    two.seed = 21;
    two.informative = {true, false};
    const MultiViewDataset ds_pair = generate_synthetic(two);

    MultiViewDataset ds_noise = ds_pair;
    ds_noise.views.erase(ds_noise.views.begin()); // keep only the noise view

    PipelineConfig cfg = tiny_config();
    cfg.k = 3;
    const RunResult with_signal = run_pipeline(ds_pair, cfg);
    const RunResult noise_only = run_pipeline(ds_noise, cfg);
    EXPECT_GT(with_signal.metrics->acc, noise_only.metrics->acc);
}

TEST(Synthetic, InvalidSpecRejected) {
    SyntheticSpec spec;
    spec.n = 10;
    spec.k = 20;
    EXPECT_THROW(generate_synthetic(spec), InputError);
    SyntheticSpec bad_dims;
    bad_dims.views = 2;
    bad_dims.dims = {3};
    EXPECT_THROW(generate_synthetic(bad_dims), InputError);
}

TEST(DatasetIo, ManifestRoundTrip) {
    SyntheticSpec spec;
    spec.n = 40;
    spec.k = 2;
    spec.views = 2;
    spec.dims = {5, 3};
    spec.seed = 9;
    const MultiViewDataset ds = generate_synthetic(spec);
    const fs::path dir = temp_dir("roundtrip");
    const std::string manifest = save_dataset(ds, dir.string());
    const MultiViewDataset loaded = load_dataset(manifest);
    ASSERT_EQ(loaded.views.size(), ds.views.size());
    for (std::size_t v = 0; v < ds.views.size(); ++v) EXPECT_EQ(loaded.views[v], ds.views[v]);
    EXPECT_EQ(*loaded.truth, *ds.truth);
    fs::remove_all(dir);
}

TEST(DatasetIo, MismatchedRowCountsNamesBothViews) {
    const fs::path dir = temp_dir("mismatch");
    write_csv_matrix((dir / "a.csv").string(), Matrix(4, 2, 1.0));
    write_csv_matrix((dir / "b.csv").string(), Matrix(5, 2, 1.0));
    write_json_file((dir / "manifest.json").string(),
                    json{{"name", "bad"}, {"views", {"a.csv", "b.csv"}}});
    try {
        load_dataset((dir / "manifest.json").string());
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("a.csv"), std::string::npos);
        EXPECT_NE(msg.find("b.csv"), std::string::npos);
    }
    fs::remove_all(dir);
}

TEST(DatasetIo, NonNumericCellNamesFileAndLine) {
    const fs::path dir = temp_dir("badcell");
    {
        std::ofstream out(dir / "view.csv");
        out << "1.0,2.0\n3.0,oops\n";
    }
    try {
        read_csv_matrix((dir / "view.csv").string());
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("view.csv"), std::string::npos);
        EXPECT_NE(msg.find(":2"), std::string::npos);
    }
    fs::remove_all(dir);
}

TEST(DatasetIo, HeaderLineSkipped) {
    const fs::path dir = temp_dir("header");
    {
        std::ofstream out(dir / "view.csv");
        out << "col_a,col_b\n1.5,2.5\n3.5,4.5\n";
    }
    const Matrix m = read_csv_matrix((dir / "view.csv").string());
    EXPECT_EQ(m.rows(), 2u);
    EXPECT_DOUBLE_EQ(m(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(m(1, 1), 4.5);
    fs::remove_all(dir);
}

TEST(DatasetIo, RaggedRowRejected) {
    const fs::path dir = temp_dir("ragged");
    {
        std::ofstream out(dir / "view.csv");
        out << "1,2,3\n4,5\n";
    }
    EXPECT_THROW(read_csv_matrix((dir / "view.csv").string()), InputError);
    fs::remove_all(dir);
}

TEST(DatasetIo, LargeCsvMatchesReferenceParser) {
    // 1e5 cells: library parser must agree bit-for-bit with an independent
    // strtod-based reference
    const Matrix m = oracle::random_matrix(1000, 100, 77);
    const fs::path dir = temp_dir("large");
    const std::string path = (dir / "big.csv").string();
    write_csv_matrix(path, m);
    const Matrix lib = read_csv_matrix(path);
    const Matrix ref = reference_parse(path);
    ASSERT_TRUE(lib.same_shape(ref));
    EXPECT_EQ(lib, ref);
    EXPECT_EQ(lib, m); // full 17-digit round trip
    fs::remove_all(dir);
}

TEST(DatasetIo, LabelsRoundTrip) {
    const fs::path dir = temp_dir("labels");
    const std::vector<std::size_t> labels = {0, 2, 1, 1, 0, 3};
    const std::string path = (dir / "labels.csv").string();
    write_labels_csv(path, labels);
    EXPECT_EQ(read_labels_csv(path), labels);
    fs::remove_all(dir);
}
