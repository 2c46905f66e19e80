#pragma once

// CSV ingestion and JSON persistence for datasets, models and bound reports.
//
// CSV: comma-delimited, '.' decimal point, first row is the header.
//   dataset:    x1..x{n_z}, y1..y{n_y}   (any column order)
//   trajectory: t, x1.. or y1.., u1..
// Numbers are written with 17 significant digits so a write/read cycle
// reproduces every double exactly.

#include <Eigen/Dense>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gpkit/error.hpp"
#include "gpkit/gpr.hpp"
#include "gpkit/kernels.hpp"
#include "gpkit/uncertainty.hpp"

namespace gpkit::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Parsed CSV: header names plus numeric rows. `line` records the 1-based
/// file line of every row for error reporting.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> line;

    [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) { return i; }
        }
        return std::nullopt;
    }

    [[nodiscard]] std::size_t require(std::string_view name) const {
        if (auto i = find(name)) { return *i; }
        throw MissingColumn("CSV is missing column '" + std::string(name) + "'");
    }

    /// Indices of prefix1, prefix2, ... up to the first missing one.
    [[nodiscard]] std::vector<std::size_t> numbered(std::string_view prefix) const {
        std::vector<std::size_t> out;
        for (int k = 1;; ++k) {
            auto i = find(std::string(prefix) + std::to_string(k));
            if (!i) { break; }
            out.push_back(*i);
        }
        return out;
    }

    /// Matrix with one row per selected column and one column per CSV row.
    [[nodiscard]] MatrixXd columns(const std::vector<std::size_t>& idx) const {
        MatrixXd m(static_cast<Index>(idx.size()), static_cast<Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t c = 0; c < idx.size(); ++c) {
                m(static_cast<Index>(c), static_cast<Index>(r)) = rows[r][idx[c]];
            }
        }
        return m;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) { s.remove_prefix(1); }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) { s.remove_suffix(1); }
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) { break; }
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_number(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') { cell.remove_prefix(1); }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) { return std::nullopt; }
    return v;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) { continue; }
        const auto cells = detail::split(line);
        if (!have_header) {
            for (auto c : cells) { t.header.emplace_back(c); }
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ParseError(lineno, "*", "expected " + std::to_string(t.header.size()) + " cells, found " +
                                               std::to_string(cells.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto v = detail::parse_number(cells[c]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError(lineno, t.header[c], "not a finite number: '" + std::string(cells[c]) + "'");
            }
            row.push_back(*v);
        }
        t.rows.push_back(std::move(row));
        t.line.push_back(lineno);
    }
    if (!have_header) { throw ParseError(1, "*", "empty file, header row required"); }
    return t;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) { throw IoError("cannot open '" + path + "'"); }
    return parse_csv(in);
}

/// Dataset from x1.., y1.. columns. `noise` is broadcast when it has one
/// entry, otherwise it must have one entry per output.
inline Dataset dataset_from_table(const CsvTable& t, const VectorXd& noise = VectorXd::Zero(1)) {
    (void)t.require("x1");
    (void)t.require("y1");
    const auto xi = t.numbered("x");
    const auto yi = t.numbered("y");
    Dataset d{t.columns(xi), t.columns(yi).transpose(), VectorXd()};
    if (noise.size() == 1) {
        d.noise = VectorXd::Constant(d.n_y(), noise(0));
    } else {
        gpkit::detail::require_dims(noise.size() == d.n_y(), "dataset: one noise level per output required");
        d.noise = noise;
    }
    d.validate();
    return d;
}

inline Dataset load_dataset_csv(const std::string& path, const VectorXd& noise = VectorXd::Zero(1)) {
    return dataset_from_table(read_csv(path), noise);
}

inline void write_dataset_csv(std::ostream& out, const Dataset& d) {
    for (Index i = 0; i < d.n_z(); ++i) { out << (i ? "," : "") << "x" << i + 1; }
    for (Index i = 0; i < d.n_y(); ++i) { out << ",y" << i + 1; }
    out << "\n";
    for (Index r = 0; r < d.n_d(); ++r) {
        for (Index i = 0; i < d.n_z(); ++i) { out << (i ? "," : "") << format_double(d.x(i, r)); }
        for (Index i = 0; i < d.n_y(); ++i) { out << "," << format_double(d.y(r, i)); }
        out << "\n";
    }
}

inline void save_dataset_csv(const std::string& path, const Dataset& d) {
    std::ofstream out(path);
    if (!out) { throw IoError("cannot write '" + path + "'"); }
    write_dataset_csv(out, d);
}

/// Time series: one column per time step. `states` holds x1.. (or y1.. when
/// no x columns exist); `inputs` holds u1.. (zero rows when absent).
struct Trajectory {
    VectorXd t;
    MatrixXd states;
    MatrixXd inputs;
    char state_prefix = 'x';
};

inline Trajectory trajectory_from_table(const CsvTable& tab) {
    Trajectory tr;
    const auto ti = tab.require("t");
    tr.t = tab.columns({ti}).row(0).transpose();
    auto si = tab.numbered("x");
    if (si.empty()) {
        si = tab.numbered("y");
        tr.state_prefix = 'y';
    }
    tr.states = tab.columns(si);
    tr.inputs = tab.columns(tab.numbered("u"));
    return tr;
}

inline Trajectory load_trajectory_csv(const std::string& path) { return trajectory_from_table(read_csv(path)); }

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json vec_to_json(const VectorXd& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) { a.push_back(v(i)); }
    return a;
}

inline VectorXd vec_from_json(const json& a) {
    if (!a.is_array()) { throw InvalidArgument("JSON: expected a numeric array"); }
    VectorXd v(static_cast<Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) { v(static_cast<Index>(i)) = a[i].get<double>(); }
    return v;
}

/// Columns of m as a list of points.
inline json cols_to_json(const MatrixXd& m) {
    json a = json::array();
    for (Index j = 0; j < m.cols(); ++j) { a.push_back(vec_to_json(m.col(j))); }
    return a;
}

inline MatrixXd cols_from_json(const json& a, Index rows) {
    if (!a.is_array()) { throw InvalidArgument("JSON: expected an array of points"); }
    MatrixXd m(rows, static_cast<Index>(a.size()));
    for (std::size_t j = 0; j < a.size(); ++j) {
        const VectorXd c = vec_from_json(a[j]);
        gpkit::detail::require_dims(c.size() == rows, "JSON: point has the wrong dimension");
        m.col(static_cast<Index>(j)) = c;
    }
    return m;
}

inline json kernel_to_json(const KernelSpec& k) {
    return {{"family", std::string(family_name(k.family()))},
            {"phi", vec_to_json(k.phi())},
            {"degree", k.degree()},
            {"input_dim", k.input_dim()}};
}

inline KernelSpec kernel_from_json(const json& j) {
    const auto name = j.at("family").get<std::string>();
    const auto fam = parse_family(name);
    if (!fam) { throw UnsupportedKernel("unknown kernel family '" + name + "'"); }
    return {*fam, vec_from_json(j.at("phi")), j.value("degree", 0), j.at("input_dim").get<Index>()};
}

inline json mean_to_json(const MeanSpec& m) {
    const char* kind = m.kind == MeanSpec::Kind::Zero ? "zero" : m.kind == MeanSpec::Kind::Constant ? "constant" : "per_dimension";
    return {{"kind", kind}, {"values", vec_to_json(m.values)}};
}

inline MeanSpec mean_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    const VectorXd values = j.contains("values") ? vec_from_json(j.at("values")) : VectorXd();
    if (kind == "zero") { return MeanSpec::zero(); }
    if (kind == "constant") { return {MeanSpec::Kind::Constant, values}; }
    if (kind == "per_dimension") { return MeanSpec::per_dimension(values); }
    throw InvalidArgument("unknown mean kind '" + kind + "'");
}

inline json model_to_json(const TrainedGP& gp) {
    const Dataset& d = gp.dataset();
    json kernels = json::array();
    json alpha = json::array();
    for (Index i = 0; i < gp.n_outputs(); ++i) {
        kernels.push_back(kernel_to_json(gp.kernel(i)));
        alpha.push_back(vec_to_json(gp.alpha(i)));
    }
    json y = json::array();
    for (Index r = 0; r < d.n_d(); ++r) { y.push_back(vec_to_json(d.y.row(r).transpose())); }
    return {{"schema_version", kSchemaVersion},
            {"input_dim", d.n_z()},
            {"output_dim", d.n_y()},
            {"kernels", kernels},
            {"mean", mean_to_json(gp.mean())},
            {"x", cols_to_json(d.x)},
            {"y", y},
            {"noise", vec_to_json(d.noise)},
            {"alpha", alpha}};
}

inline std::string model_to_string(const TrainedGP& gp) { return model_to_json(gp).dump(2) + "\n"; }

/// Rebuilds the model (Cholesky factors and alpha are recomputed) and checks
/// the recomputed alpha against the stored one.
inline TrainedGP model_from_json(const json& j) {
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
        throw SchemaVersionMismatch("model schema_version " + std::to_string(version) + ", expected " +
                                    std::to_string(kSchemaVersion));
    }
    const auto nz = j.at("input_dim").get<Index>();
    const auto ny = j.at("output_dim").get<Index>();
    Dataset d;
    d.x = cols_from_json(j.at("x"), nz);
    d.y = cols_from_json(j.at("y"), ny).transpose();
    d.noise = vec_from_json(j.at("noise"));

    std::vector<KernelSpec> kernels;
    for (const auto& k : j.at("kernels")) { kernels.push_back(kernel_from_json(k)); }
    TrainedGP gp = fit(d, kernels, mean_from_json(j.at("mean")));

    const json& alpha = j.at("alpha");
    gpkit::detail::require_dims(static_cast<Index>(alpha.size()) == gp.n_outputs(), "model: one alpha vector per output");
    for (Index i = 0; i < gp.n_outputs(); ++i) {
        const VectorXd stored = vec_from_json(alpha[static_cast<std::size_t>(i)]);
        const VectorXd& fresh = gp.alpha(i);
        if (stored.size() != fresh.size()) { throw IntegrityError("model: alpha length mismatch"); }
        if (stored.size() == 0) { continue; }
        const double tol = 1e-8 * std::max(1.0, fresh.cwiseAbs().maxCoeff());
        if ((stored - fresh).cwiseAbs().maxCoeff() > tol) {
            throw IntegrityError("model: stored alpha for output " + std::to_string(i + 1) +
                                 " does not match the refitted model");
        }
    }
    return gp;
}

inline void save_model(const std::string& path, const TrainedGP& gp) {
    std::ofstream out(path);
    if (!out) { throw IoError("cannot write '" + path + "'"); }
    out << model_to_string(gp);
}

inline TrainedGP load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) { throw IoError("cannot open '" + path + "'"); }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("'" + path + "' is not valid JSON: " + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const json::exception& e) {
        throw IoError("'" + path + "' does not follow the model schema: " + e.what());
    }
}

inline json bound_to_json(const BoundReport& r) {
    json params;
    if (r.method == BoundMethod::Robust) {
        params = {{"c", r.params.c}};
    } else {
        params = {{"delta", r.params.delta},
                  {"rkhs_norm_bound", r.params.rkhs_norm_bound},
                  {"gamma_max", r.params.gamma_max},
                  {"beta", r.params.beta}};
    }
    params["n_d"] = r.params.n_d;
    return {{"method", r.method == BoundMethod::Robust ? "robust" : "info"},
            {"points", cols_to_json(r.points)},
            {"center", vec_to_json(r.center)},
            {"halfwidth", vec_to_json(r.halfwidth)},
            {"params", params}};
}

inline BoundReport bound_from_json(const json& j) {
    BoundReport r;
    const auto method = j.at("method").get<std::string>();
    if (method != "robust" && method != "info") { throw InvalidArgument("unknown bound method '" + method + "'"); }
    r.method = method == "robust" ? BoundMethod::Robust : BoundMethod::InfoTheoretic;
    r.center = vec_from_json(j.at("center"));
    r.halfwidth = vec_from_json(j.at("halfwidth"));
    const json& pts = j.at("points");
    const Index dim = pts.empty() ? 1 : static_cast<Index>(pts[0].size());
    r.points = cols_from_json(pts, dim);
    const json& p = j.at("params");
    r.params.c = p.value("c", 0.0);
    r.params.delta = p.value("delta", 0.0);
    r.params.rkhs_norm_bound = p.value("rkhs_norm_bound", 0.0);
    r.params.gamma_max = p.value("gamma_max", 0.0);
    r.params.beta = p.value("beta", 0.0);
    r.params.n_d = p.value("n_d", Index{0});
    return r;
}

}  // namespace gpkit::io
