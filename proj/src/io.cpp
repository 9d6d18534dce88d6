// io.cpp — Serialization of results, checkpoints and tables

#include "esln/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace esln {

using nlohmann::json;

std::string format_double(double x) {
    if (x == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

namespace {

json complex_array(const std::vector<CMatrix>& series) {
    json out = json::array();
    for (const auto& m : series) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
            rows.push_back(std::move(row));
        }
        out.push_back(std::move(rows));
    }
    return out;
}

json real_array(const std::vector<Matrix>& series) {
    json out = json::array();
    for (const auto& m : series) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            rows.push_back(std::move(row));
        }
        out.push_back(std::move(rows));
    }
    return out;
}

json moments_to_json(const Moments& m) {
    return {{"count", m.count}, {"mean", m.mean}, {"m2", m.m2}};
}

Moments moments_from_json(const json& j) {
    Moments m;
    m.count = j.at("count").get<double>();
    m.mean = j.at("mean").get<std::vector<double>>();
    m.m2 = j.at("m2").get<std::vector<double>>();
    if (m.mean.size() % Moments::kWidth != 0 ||
        m.m2.size() != m.mean.size() / Moments::kWidth * Moments::kPairs)
        throw ValidationError("checkpoint", "malformed accumulator");
    return m;
}

json grid_json(const TimeGrids& g) {
    return {{"t_f", g.t_f()}, {"n_t", g.n_t}, {"dt", g.dt},
            {"n_tau", g.n_tau}, {"dtau", g.dtau}, {"hbar_beta", g.hbar_beta()}};
}

json header(const RunConfig& config) {
    json doc;
    doc["format"] = "esln-result";
    doc["version"] = 1;
    doc["config"] = config_echo(config);
    doc["master_seed"] = config.ensemble.master_seed;
    return doc;
}

double finite_or_null_guard(double x) { return std::isfinite(x) ? x : 1e308; }

}  // namespace

json config_echo(const RunConfig& config) {
    json c = emit_config(config);
    c.erase("output");
    return c;
}

json result_document(const RunConfig& config, const Pipeline& pipeline, const EnsembleResult& r) {
    json doc = header(config);
    doc["complete"] = true;
    doc["normalize"] = normalize_name(r.normalize);
    doc["n_traj"] = r.n_traj;
    doc["n_ok"] = r.n_ok;
    doc["n_failed"] = r.n_failed;
    json failures = json::array();
    for (const auto& f : r.failures) failures.push_back({{"index", f.index}, {"message", f.message}});
    doc["failures"] = failures;
    doc["z_factor"] = {{"mean", {r.z_mean.real(), r.z_mean.imag()}}, {"se", {r.z_se_re, r.z_se_im}}};
    doc["grid"] = grid_json(pipeline.grids);
    doc["noise"] = {{"dim", pipeline.factor.layout.dim()},
                    {"rank", pipeline.factor.rank()},
                    {"method", factor_method_name(pipeline.factor.method)},
                    {"residual", pipeline.factor.residual},
                    {"cross_kernel", cross_kernel_name(config.noise.cross_kernel)}};
    doc["modes"] = {{"omegas", std::vector<double>(pipeline.modes.omegas.data(),
                                                   pipeline.modes.omegas.data() + pipeline.modes.omegas.size())}};
    doc["times"] = r.times;
    doc["mean_rho0"] = complex_array({r.mean_rho0});
    doc["mean_rho"] = complex_array(r.mean_rho);
    doc["stderr"] = real_array(r.stderr_rho);
    doc["se_re"] = real_array(r.se_re);
    doc["se_im"] = real_array(r.se_im);

    const PhysicalityReport ph = hermiticity_trace_report(r);
    doc["physicality"] = {{"hermiticity_z", finite_or_null_guard(ph.hermiticity_z)},
                          {"trace_z", finite_or_null_guard(ph.trace_z)},
                          {"min_eigenvalue", ph.min_eigenvalue},
                          {"verdict", verdict_name(ph.verdict)}};
    if (r.mean_rho.size() > 1) {
        const StationarityReport st = stationarity_report(r);
        doc["stationarity"] = {{"max_z", finite_or_null_guard(st.max_z)},
                               {"t_index", st.worst_t},
                               {"row", st.worst_row},
                               {"col", st.worst_col}};
    }
    return doc;
}

json checkpoint_document(const RunConfig& config, const EnsembleCheckpoint& s) {
    json doc = header(config);
    doc["complete"] = false;
    doc["n_traj"] = config.ensemble.n_traj;
    json nodes = json::array();
    for (const auto& n : s.nodes) nodes.push_back({{"level", n.level}, {"moments", moments_to_json(n.moments)}});
    json failures = json::array();
    for (const auto& f : s.failures) failures.push_back({{"index", f.index}, {"message", f.message}});
    doc["checkpoint"] = {{"next_block", s.next_block},
                         {"n_ok", s.n_ok},
                         {"failures", failures},
                         {"nodes", nodes},
                         {"z_moments", moments_to_json(s.z_moments)}};
    return doc;
}

EnsembleCheckpoint checkpoint_from_document(const json& doc, const RunConfig& config) {
    try {
        if (doc.value("format", "") != "esln-result" || !doc.contains("checkpoint"))
            throw ValidationError("checkpoint", "not a checkpoint document");
        if (doc.at("config") != config_echo(config))
            throw ValidationError("checkpoint", "written for a different configuration or seed");
        const json& c = doc.at("checkpoint");
        EnsembleCheckpoint s;
        s.next_block = c.at("next_block").get<std::size_t>();
        s.n_ok = c.at("n_ok").get<std::size_t>();
        for (const auto& f : c.at("failures"))
            s.failures.push_back({f.at("index").get<std::uint64_t>(), f.at("message").get<std::string>()});
        for (const auto& n : c.at("nodes"))
            s.nodes.push_back({n.at("level").get<int>(), moments_from_json(n.at("moments"))});
        s.z_moments = moments_from_json(c.at("z_moments"));
        return s;
    } catch (const json::exception& e) {
        throw ValidationError("checkpoint", e.what());
    }
}

std::string dump_document(const json& doc) { return doc.dump() + "\n"; }

void write_text(const std::string& path, const std::string& text) {
    // Write to a sibling temporary, then rename, so a crash never leaves half a file.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("output", "cannot write '" + path + "'");
        out << text;
        if (!out) throw ValidationError("output", "write failed for '" + path + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ValidationError("output", "cannot move '" + tmp + "' to '" + path + "'");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string series_csv(const std::vector<double>& times, const std::vector<CMatrix>& mean,
                       const std::vector<Matrix>* se_re, const std::vector<Matrix>* se_im) {
    std::string out = "t,row,col,re,im,se_re,se_im\n";
    for (std::size_t k = 0; k < mean.size(); ++k) {
        const CMatrix& m = mean[k];
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                out += format_double(times[k]) + ',' + std::to_string(i) + ',' + std::to_string(j) + ',';
                out += format_double(m(i, j).real()) + ',' + format_double(m(i, j).imag()) + ',';
                out += format_double(se_re ? (*se_re)[k](i, j) : 0.0) + ',';
                out += format_double(se_im ? (*se_im)[k](i, j) : 0.0) + '\n';
            }
    }
    return out;
}

std::string result_csv(const EnsembleResult& r) { return series_csv(r.times, r.mean_rho, &r.se_re, &r.se_im); }

std::string oracle_csv(const TimeGrids& grids, const OracleResult& oracle) {
    std::vector<double> times;
    for (int k = 0; k < grids.n_t; ++k) times.push_back(grids.t(k));
    return series_csv(times, oracle.rho_series, nullptr, nullptr);
}

std::vector<CsvRow> parse_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "t,row,col,re,im,se_re,se_im")
                throw ParseError(origin + ": line 1: unexpected header '" + line + "'");
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7)
            throw ParseError(origin + ": line " + std::to_string(line_no) + ": expected 7 columns");
        try {
            CsvRow r;
            r.t = std::stod(cells[0]);
            r.row = std::stoi(cells[1]);
            r.col = std::stoi(cells[2]);
            r.re = std::stod(cells[3]);
            r.im = std::stod(cells[4]);
            r.se_re = std::stod(cells[5]);
            r.se_im = std::stod(cells[6]);
            rows.push_back(r);
        } catch (const std::exception&) {
            throw ParseError(origin + ": line " + std::to_string(line_no) + ": malformed number");
        }
    }
    if (line_no == 0) throw ParseError(origin + ": empty file");
    return rows;
}

std::vector<CsvRow> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), path);
}

CompareReport compare_series(const std::vector<CsvRow>& a, const std::vector<CsvRow>& b, double threshold) {
    if (a.size() != b.size())
        throw DimensionMismatch("CSV files have " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()) + " rows");
    CompareReport rep;
    rep.threshold = threshold;
    auto z_of = [](double diff, double se) {
        if (se > 0.0) return std::abs(diff) / se;
        return std::abs(diff) < 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    };
    for (std::size_t k = 0; k < a.size(); ++k) {
        const CsvRow &x = a[k], &y = b[k];
        if (x.row != y.row || x.col != y.col || std::abs(x.t - y.t) > 1e-9 * std::max(1.0, std::abs(x.t)))
            throw DimensionMismatch("CSV row " + std::to_string(k + 2) + " describes different (t, row, col)");
        const double se_re = std::hypot(x.se_re, y.se_re), se_im = std::hypot(x.se_im, y.se_im);
        const double z = std::max(z_of(x.re - y.re, se_re), z_of(x.im - y.im, se_im));
        rep.max_abs_diff = std::max({rep.max_abs_diff, std::abs(x.re - y.re), std::abs(x.im - y.im)});
        rep.max_se = std::max({rep.max_se, se_re, se_im});
        ++rep.n_compared;
        if (!(z < threshold)) ++rep.n_over;
        if (k == 0 || z > rep.max_z) {
            rep.max_z = z;
            rep.worst = x;
        }
    }
    return rep;
}

std::string kernel_table_real(const KernelContext& ctx, const TimeGrids& grids) {
    std::string out = "t,i,j,L_R,L_I\n";
    for (int k = 0; k < grids.n_t; ++k) {
        const double t = grids.t(k);
        const Matrix lr = l_matrix(ctx, KernelKind::R, t), li = l_matrix(ctx, KernelKind::I, t);
        for (int i = 0; i < ctx.size(); ++i)
            for (int j = 0; j < ctx.size(); ++j)
                out += format_double(t) + ',' + std::to_string(i) + ',' + std::to_string(j) + ',' +
                       format_double(lr(i, j)) + ',' + format_double(li(i, j)) + '\n';
    }
    return out;
}

std::string kernel_table_imag(const KernelContext& ctx, const TimeGrids& grids) {
    std::string out = "tau,i,j,L_e,L_o\n";
    for (int k = 0; k < grids.n_tau; ++k) {
        const double tau = grids.tau(k);
        const Matrix le = l_matrix(ctx, KernelKind::Even, tau), lo = l_matrix(ctx, KernelKind::Odd, tau);
        for (int i = 0; i < ctx.size(); ++i)
            for (int j = 0; j < ctx.size(); ++j)
                out += format_double(tau) + ',' + std::to_string(i) + ',' + std::to_string(j) + ',' +
                       format_double(le(i, j)) + ',' + format_double(lo(i, j)) + '\n';
    }
    return out;
}

json noise_report_json(const NoiseReport& report, const NoiseFactor& factor) {
    json blocks = json::array();
    for (const auto& b : report.blocks)
        blocks.push_back({{"block", b.name},
                          {"worst_z", finite_or_null_guard(b.worst_z)},
                          {"n_entries", b.n_entries},
                          {"pass", b.pass}});
    return {{"n_samples", report.n_samples},
            {"threshold", report.threshold},
            {"method", factor_method_name(factor.method)},
            {"rank", factor.rank()},
            {"residual", factor.residual},
            {"blocks", blocks},
            {"pass", report.pass()}};
}

std::string noise_entries_csv(const NoiseReport& report) {
    std::string out = "field_a,i,k,field_b,j,l,target_re,target_im,emp_re,emp_im,se_re,se_im,z\n";
    for (const auto& e : report.entries) {
        out += std::string(field_name(e.a)) + ',' + std::to_string(e.i) + ',' + std::to_string(e.k) + ',' +
               field_name(e.b) + ',' + std::to_string(e.j) + ',' + std::to_string(e.l) + ',' +
               format_double(e.target.real()) + ',' + format_double(e.target.imag()) + ',' +
               format_double(e.empirical.real()) + ',' + format_double(e.empirical.imag()) + ',' +
               format_double(e.se_re) + ',' + format_double(e.se_im) + ',' + format_double(e.z) + '\n';
    }
    return out;
}

}  // namespace esln
