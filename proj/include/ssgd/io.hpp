#pragma once

// File formats: plain CSV matrices (one row per line, no header; vectors are
// single-column), the JSON sketch-distribution spec, and the CSV/JSON trace
// and report artifacts. All floating-point table output goes through
// format_g6 (6 significant digits, locale-independent) so files are
// byte-stable across runs.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssgd/async_sim.hpp"
#include "ssgd/dense.hpp"
#include "ssgd/sketch.hpp"
#include "ssgd/solvers.hpp"

namespace ssgd {

inline std::string format_g6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// CSV matrices

inline DenseMatrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() &&
                       (cell[used] == ' ' || cell[used] == '\t' || cell[used] == '\r'))
                    ++used;
                if (used != cell.size())
                    throw validation_error("");
                row.push_back(v);
            } catch (const std::exception&) {
                throw validation_error(path + ": row " + std::to_string(line_no) +
                                       ": cannot parse '" + cell + "' as a number");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw validation_error(path + ": row " + std::to_string(line_no) +
                                   " has " + std::to_string(row.size()) +
                                   " columns, expected " + std::to_string(rows.front().size()));
        if (row.empty())
            throw validation_error(path + ": row " + std::to_string(line_no) + " is empty");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw validation_error(path + ": empty matrix file");
    DenseMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j) m(i, j) = rows[i][j];
    return m;
}

inline Vector read_vector_csv(const std::string& path) {
    const DenseMatrix m = read_matrix_csv(path);
    if (m.cols() != 1)
        throw validation_error(path + ": expected a single-column vector file, found " +
                               std::to_string(m.cols()) + " columns");
    Vector v(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, 0);
    return v;
}

inline void write_matrix_csv(const std::string& path, const DenseMatrix& m) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot write file: " + path);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_g6(m(i, j));
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// distribution spec
//
// {"variant": "coordinate"|"block"|"gaussian",
//  "weights": [...],          optional, uniform when missing;
//                             "row-norm" selects Kaczmarz row-norm weights
//  "blocks": [[...], ...],    block variant only (0-based row indices)
//  "q": int}                  gaussian sketch width

inline SketchDistribution parse_distribution(const nlohmann::json& spec, std::size_t m,
                                             const LinearSystem* sys_for_row_norm = nullptr) {
    if (!spec.is_object() || !spec.contains("variant"))
        throw validation_error("distribution spec: missing 'variant'");
    const std::string variant = spec.at("variant").get<std::string>();

    auto read_weights = [&](std::size_t expected) -> Vector {
        if (!spec.contains("weights")) return {};
        const auto& w = spec.at("weights");
        if (w.is_string()) {
            if (w.get<std::string>() != "row-norm")
                throw validation_error("distribution spec: unknown weights keyword '" +
                                       w.get<std::string>() + "'");
            return {};  // handled by caller
        }
        Vector out;
        for (const auto& v : w) out.push_back(v.get<double>());
        if (out.size() != expected)
            throw validation_error("distribution spec: expected " + std::to_string(expected) +
                                   " weights, found " + std::to_string(out.size()));
        return out;
    };

    if (variant == "coordinate") {
        if (spec.contains("weights") && spec.at("weights").is_string()) {
            if (!sys_for_row_norm)
                throw validation_error("distribution spec: row-norm weights need a system");
            return SketchDistribution::coordinate_row_norm(*sys_for_row_norm);
        }
        Vector w = read_weights(m);
        if (w.empty()) return SketchDistribution::coordinate_uniform(m);
        return SketchDistribution::coordinate(std::move(w));
    }
    if (variant == "block") {
        if (!spec.contains("blocks"))
            throw validation_error("distribution spec: block variant needs 'blocks'");
        std::vector<std::vector<std::size_t>> blocks;
        for (const auto& blk : spec.at("blocks")) {
            std::vector<std::size_t> b;
            for (const auto& idx : blk) b.push_back(idx.get<std::size_t>());
            blocks.push_back(std::move(b));
        }
        Vector w = read_weights(blocks.size());
        return SketchDistribution::row_block(m, std::move(blocks), std::move(w));
    }
    if (variant == "gaussian") {
        if (!spec.contains("q"))
            throw validation_error("distribution spec: gaussian variant needs 'q'");
        return SketchDistribution::gaussian(m, spec.at("q").get<std::size_t>());
    }
    throw validation_error("distribution spec: unknown variant '" + variant + "'");
}

inline SketchDistribution read_distribution_file(const std::string& path, std::size_t m,
                                                 const LinearSystem* sys = nullptr) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open file: " + path);
    nlohmann::json spec;
    try {
        in >> spec;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(path + ": invalid JSON: " + e.what());
    }
    return parse_distribution(spec, m, sys);
}

// ---------------------------------------------------------------------------
// trace / report artifacts

inline void write_trace_csv(const std::string& path, const RunTrace& trace) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot write file: " + path);
    out << "step,error_bsq,bound\n";
    for (const auto& r : trace.records) {
        out << r.step << ',' << format_g6(r.error_bsq) << ',';
        if (std::isfinite(r.bound)) out << format_g6(r.bound);
        out << '\n';
    }
}

inline nlohmann::json trace_metadata(const RunTrace& trace) {
    nlohmann::json meta;
    meta["solver"] = trace.solver;
    meta["omega"] = trace.stepsize;
    if (std::isfinite(trace.damping)) meta["theta"] = trace.damping;
    meta["tau"] = trace.tau;
    meta["seed"] = trace.seed;
    if (std::isfinite(trace.lambda_min_plus)) {
        meta["lambda_min_plus"] = trace.lambda_min_plus;
        meta["lambda_max"] = trace.lambda_max;
    }
    return meta;
}

inline void write_report_csv(const std::string& path, const ConvergenceReport& report) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot write file: " + path);
    out << "interval,mean_error,bound\n";
    for (const auto& r : report.intervals) {
        out << r.interval << ',' << format_g6(r.mean_error) << ',';
        if (std::isfinite(r.bound)) out << format_g6(r.bound);
        out << '\n';
    }
}

inline void write_events_csv(const std::string& path, const ConvergenceReport& report) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot write file: " + path);
    out << "t,worker,delta,error\n";
    for (const auto& e : report.events)
        out << e.t << ',' << e.worker << ',' << e.staleness << ',' << format_g6(e.mean_error)
            << '\n';
}

inline nlohmann::json report_metadata(const ConvergenceReport& report) {
    nlohmann::json meta;
    meta["theta"] = report.damping;
    meta["omega"] = report.stepsize;
    meta["tau"] = report.tau;
    meta["c"] = report.c;
    meta["delta_a"] = report.delay_max;
    meta["trials"] = report.trials;
    meta["seed"] = report.seed;
    meta["initial_error"] = report.initial_error;
    meta["bound_feasible"] = report.bound_feasible;
    if (report.bound_feasible) meta["rate_bound"] = report.rate_bound;
    if (std::isfinite(report.k1)) {
        meta["k1"] = report.k1;
        meta["k2"] = report.k2;
    }
    return meta;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

inline nlohmann::json profile_to_json(const SpectralProfile& p) {
    nlohmann::json j;
    j["eigenvalues"] = p.eigenvalues;
    j["lambda_min_plus"] = p.lambda_min_plus;
    j["lambda_max"] = p.lambda_max;
    j["k"] = p.k;
    j["omega_star"] = p.omega_star;
    j["kappa"] = p.kappa;
    j["case"] = to_string(p.case_tag);
    if (p.expectation_standard_error > 0.0)
        j["expectation_standard_error"] = p.expectation_standard_error;
    return j;
}

} // namespace ssgd
