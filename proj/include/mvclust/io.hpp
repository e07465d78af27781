#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvclust/anchor_graph.hpp"
#include "mvclust/autoencoder.hpp"
#include "mvclust/errors.hpp"
#include "mvclust/matrix.hpp"
#include "mvclust/metrics.hpp"

namespace mvclust {

using json = nlohmann::json;

namespace detail {

inline bool parse_double(std::string_view cell, double& out) {
    std::size_t begin = 0, end = cell.size();
    while (begin < end && (cell[begin] == ' ' || cell[begin] == '\t')) ++begin;
    while (end > begin && (cell[end - 1] == ' ' || cell[end - 1] == '\t' || cell[end - 1] == '\r'))
        --end;
    if (begin == end) return false;
    const char* first = cell.data() + begin;
    const char* last = cell.data() + end;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            cells.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return cells;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

// Reads a comma-delimited numeric matrix. An optional single header line
// (any non-numeric first row) is skipped. Errors name the file and line.
inline Matrix read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv(line);
        if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
        if (sv.empty()) continue;
        const auto cells = detail::split_csv_line(sv);
        std::vector<double> row(cells.size());
        bool ok = true;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!detail::parse_double(cells[c], row[c])) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            if (first_content_line) { // header line
                first_content_line = false;
                continue;
            }
            throw InputError(path + ":" + std::to_string(lineno) + ": non-numeric cell");
        }
        first_content_line = false;
        if (!rows.empty() && row.size() != rows.front().size())
            throw InputError(path + ":" + std::to_string(lineno) + ": ragged row (expected " +
                             std::to_string(rows.front().size()) + " cells, got " +
                             std::to_string(row.size()) + ")");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(path + ": no numeric rows");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    if (!m.is_finite()) throw InputError(path + ": non-finite values");
    return m;
}

inline void write_csv_matrix(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << detail::format_double(m(i, j));
        }
        out << '\n';
    }
}

// labels file: one cluster index per line
inline std::vector<std::size_t> read_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<std::size_t> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv(line);
        if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
        if (sv.empty()) continue;
        double v = 0.0;
        if (!detail::parse_double(sv, v) || v < 0.0 || v != std::floor(v))
            throw InputError(path + ":" + std::to_string(lineno) + ": invalid label");
        labels.push_back(static_cast<std::size_t>(v));
    }
    if (labels.empty()) throw InputError(path + ": no labels");
    return labels;
}

inline void write_labels_csv(const std::string& path, const std::vector<std::size_t>& labels) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    for (std::size_t v : labels) out << v << '\n';
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << j.dump(2) << '\n';
}

// ---- model checkpoints -------------------------------------------------

inline json layer_to_json(const Layer& l) {
    return json{{"rows", l.w.rows()},
                {"cols", l.w.cols()},
                {"w", l.w.data()},
                {"b", l.b},
                {"act", l.act == Activation::ReLU ? "relu" : "linear"}};
}

inline Layer layer_from_json(const json& j) {
    Layer l;
    const std::size_t rows = j.at("rows").get<std::size_t>();
    const std::size_t cols = j.at("cols").get<std::size_t>();
    l.w = Matrix(rows, cols);
    l.w.data() = j.at("w").get<std::vector<double>>();
    if (l.w.data().size() != rows * cols)
        throw InputError("checkpoint: weight tensor size mismatch");
    l.b = j.at("b").get<std::vector<double>>();
    if (l.b.size() != cols) throw InputError("checkpoint: bias size mismatch");
    const std::string act = j.at("act").get<std::string>();
    if (act == "relu")
        l.act = Activation::ReLU;
    else if (act == "linear")
        l.act = Activation::Linear;
    else
        throw InputError("checkpoint: unknown activation '" + act + "'");
    return l;
}

// Versioned JSON checkpoint; doubles serialize losslessly, so save/load
// round-trips at full 64-bit precision.
inline void save_model(const std::string& path, const MlpAutoencoder& model) {
    json j{{"format", "mvclust-autoencoder"},
           {"version", 1},
           {"layer_dims", model.layer_dims},
           {"seed", model.init_seed}};
    for (const Layer& l : model.encoder) j["encoder"].push_back(layer_to_json(l));
    for (const Layer& l : model.decoder) j["decoder"].push_back(layer_to_json(l));
    write_json_file(path, j);
}

inline MlpAutoencoder load_model(const std::string& path) {
    const json j = read_json_file(path);
    if (j.value("format", "") != "mvclust-autoencoder")
        throw InputError(path + ": not an autoencoder checkpoint");
    if (j.value("version", 0) != 1)
        throw InputError(path + ": unsupported checkpoint version");
    MlpAutoencoder m;
    m.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    m.init_seed = j.at("seed").get<std::uint64_t>();
    for (const json& lj : j.at("encoder")) m.encoder.push_back(layer_from_json(lj));
    for (const json& lj : j.at("decoder")) m.decoder.push_back(layer_from_json(lj));
    if (m.encoder.size() + 1 != m.layer_dims.size() || m.decoder.size() != m.encoder.size())
        throw InputError(path + ": inconsistent layer structure");
    return m;
}

// ---- inspection exports --------------------------------------------------

// coeffs + anchors as CSV with a JSON sidecar carrying the solve parameters.
inline void export_anchor_graph(const std::string& dir, const std::string& stem,
                                const AnchorGraph& g, std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_csv_matrix((fs::path(dir) / (stem + "_coeffs.csv")).string(), g.coeffs);
    write_csv_matrix((fs::path(dir) / (stem + "_anchors.csv")).string(), g.anchors);
    write_json_file((fs::path(dir) / (stem + "_graph.json")).string(),
                    json{{"gamma", g.gamma},
                         {"anchors", g.anchors.rows()},
                         {"seed", seed},
                         {"objective", g.objective}});
}

inline void export_embedding(const std::string& dir, const Matrix& u, const Matrix& p,
                             std::size_t k, double alpha, std::size_t round) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_csv_matrix((fs::path(dir) / "embedding_u.csv").string(), u);
    write_csv_matrix((fs::path(dir) / "target_p.csv").string(), p);
    write_json_file((fs::path(dir) / "embedding.json").string(),
                    json{{"k", k}, {"alpha", alpha}, {"round", round}});
}

inline json metrics_to_json(const MetricsReport& r) {
    return json{{"acc", r.acc},   {"nmi", r.nmi},       {"ari", r.ari},
                {"n", r.n},       {"k_pred", r.k_pred}, {"k_true", r.k_true}};
}

} // namespace mvclust
