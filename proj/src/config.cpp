// config.cpp — Strict JSON configuration reader and canonical writer

#include "esln/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace esln {

using nlohmann::json;

namespace {

std::string type_name(const json& j) { return j.type_name(); }

// Object view that records which keys were consumed and rejects the rest.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_, "expected an object, got " + type_name(j_));
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    const json& get(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ValidationError(field(key), "missing required key");
        return j_.at(key);
    }
    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    double number(const std::string& key) { return as_number(get(key), field(key)); }
    double number_or(const std::string& key, double fallback) {
        const json* v = find(key);
        return v ? as_number(*v, field(key)) : fallback;
    }
    long long integer(const std::string& key) { return as_integer(get(key), field(key)); }
    long long integer_or(const std::string& key, long long fallback) {
        const json* v = find(key);
        return v ? as_integer(*v, field(key)) : fallback;
    }
    std::string string_or(const std::string& key, const std::string& fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ValidationError(field(key), "expected a string");
        return v->get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ValidationError(field(it.key()), "unknown key");
    }

    static double as_number(const json& v, const std::string& field) {
        if (!v.is_number()) throw ValidationError(field, "expected a number, got " + type_name(v));
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ValidationError(field, "must be finite");
        return x;
    }
    static long long as_integer(const json& v, const std::string& field) {
        if (v.is_number_integer()) return v.get<long long>();
        if (v.is_number_float()) {
            const double x = v.get<double>();
            if (std::floor(x) == x && std::abs(x) < 9e15) return static_cast<long long>(x);
        }
        throw ValidationError(field, "expected an integer");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

cplx entry_from_json(const json& e, const std::string& field) {
    if (e.is_number()) return cplx(Section::as_number(e, field), 0.0);
    if (e.is_array() && e.size() == 2)
        return cplx(Section::as_number(e[0], field), Section::as_number(e[1], field));
    throw ValidationError(field, "matrix entries must be numbers or [re, im] pairs");
}

Vector vector_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw ValidationError(field, "expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k)
        v(static_cast<Eigen::Index>(k)) = Section::as_number(j[k], field + "[" + std::to_string(k) + "]");
    return v;
}

Matrix real_matrix_from_json(const json& j, const std::string& field) {
    const CMatrix c = matrix_from_json(j, field);
    if (max_abs(c.imag()) != 0.0) throw ValidationError(field, "must be real");
    return c.real();
}

void require_positive(double x, const std::string& field) {
    if (!(x > 0.0)) throw ValidationError(field, "must be positive");
}

}  // namespace

json matrix_to_json(const CMatrix& m) {
    const bool real = max_abs(m.imag()) == 0.0;
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (real) row.push_back(m(i, j).real());
            else row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

CMatrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw ValidationError(field, "expected a nested array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return CMatrix(0, 0);
    if (!j[0].is_array()) throw ValidationError(field, "expected a nested array");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    CMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        const std::string rf = field + "[" + std::to_string(r) + "]";
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ValidationError(rf, "rows must all have " + std::to_string(cols) + " entries");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = entry_from_json(row[static_cast<std::size_t>(c)], rf + "[" + std::to_string(c) + "]");
    }
    return m;
}

CovarianceOptions RunConfig::covariance_options() const {
    CovarianceOptions o;
    o.cross = noise.cross_kernel;
    o.dim_cap = noise.dim_cap;
    return o;
}

EnsembleOptions RunConfig::ensemble_options() const {
    EnsembleOptions o;
    o.n_traj = ensemble.n_traj;
    o.master_seed = ensemble.master_seed;
    o.normalize = ensemble.normalize;
    o.block_size = ensemble.block_size;
    o.checkpoint_interval = ensemble.checkpoint_interval;
    return o;
}

Pipeline RunConfig::prepare() const {
    return Pipeline::prepare(system, bath, grids.t_f, grids.n_t, grids.n_tau, covariance_options(),
                             noise.factorization);
}

RunConfig parse_config(const json& doc) {
    RunConfig cfg;
    Section root(doc, "");

    {
        Section s(root.get("system"), "system");
        const long long dim = s.integer("dim");
        if (dim < 1) throw ValidationError("system.dim", "must be >= 1");
        cfg.system.dim = static_cast<int>(dim);
        cfg.system.hbar = s.number_or("hbar", 1.0);
        require_positive(cfg.system.hbar, "system.hbar");
        cfg.system.beta = s.number("beta");
        require_positive(cfg.system.beta, "system.beta");
        cfg.system.h0 = matrix_from_json(s.get("h0"), "system.h0");
        if (const json* cs = s.find("couplings")) {
            if (!cs->is_array()) throw ValidationError("system.couplings", "expected an array of matrices");
            for (std::size_t k = 0; k < cs->size(); ++k)
                cfg.system.couplings.push_back(
                    matrix_from_json((*cs)[k], "system.couplings[" + std::to_string(k) + "]"));
        }
        if (const json* ds = s.find("drives")) {
            if (!ds->is_array()) throw ValidationError("system.drives", "expected an array");
            for (std::size_t k = 0; k < ds->size(); ++k) {
                const std::string path = "system.drives[" + std::to_string(k) + "]";
                Section d((*ds)[k], path);
                Drive drive;
                drive.op = matrix_from_json(d.get("op"), path + ".op");
                const Vector amp = vector_from_json(d.get("amplitude"), path + ".amplitude");
                drive.amplitude.assign(amp.data(), amp.data() + amp.size());
                drive.dt = d.number_or("dt", 0.0);  // 0: resolved to the real-time grid below
                d.finish();
                cfg.system.drives.push_back(std::move(drive));
            }
        }
        s.finish();
    }

    {
        Section s(root.get("bath"), "bath");
        cfg.bath.masses = vector_from_json(s.get("masses"), "bath.masses");
        cfg.bath.lambda = real_matrix_from_json(s.get("lambda"), "bath.lambda");
        s.finish();
    }

    {
        Section s(root.get("grids"), "grids");
        cfg.grids.t_f = s.number("t_f");
        require_positive(cfg.grids.t_f, "grids.t_f");
        const long long n_t = s.integer("n_t"), n_tau = s.integer("n_tau");
        if (n_t < 2) throw ValidationError("grids.n_t", "grid needs >= 2 points");
        if (n_tau < 2) throw ValidationError("grids.n_tau", "grid needs >= 2 points");
        if (n_t > 1000000 || n_tau > 1000000) throw ValidationError("grids", "grid too large");
        cfg.grids.n_t = static_cast<int>(n_t);
        cfg.grids.n_tau = static_cast<int>(n_tau);
        s.finish();
    }

    if (const json* e = root.find("ensemble")) {
        Section s(*e, "ensemble");
        const long long n = s.integer_or("n_traj", 1000);
        if (n < 2) throw ValidationError("ensemble.n_traj", "must be >= 2");
        cfg.ensemble.n_traj = static_cast<std::size_t>(n);
        if (const json* seed = s.find("master_seed")) {
            if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long long>() >= 0))
                throw ValidationError("ensemble.master_seed", "expected a non-negative integer");
            cfg.ensemble.master_seed = seed->get<std::uint64_t>();
        }
        cfg.ensemble.normalize = parse_normalize(s.string_or("normalize", "ensemble"));
        const long long ci = s.integer_or("checkpoint_interval", 0);
        if (ci < 0) throw ValidationError("ensemble.checkpoint_interval", "must be >= 0");
        cfg.ensemble.checkpoint_interval = static_cast<std::size_t>(ci);
        const long long bs = s.integer_or("block_size", 64);
        if (bs < 1) throw ValidationError("ensemble.block_size", "must be >= 1");
        cfg.ensemble.block_size = static_cast<std::size_t>(bs);
        s.finish();
    }

    if (const json* n = root.find("noise")) {
        Section s(*n, "noise");
        cfg.noise.factorization = parse_factor_method(s.string_or("factorization", "takagi"));
        const long long cap = s.integer_or("dim_cap", 6000);
        if (cap < 1) throw ValidationError("noise.dim_cap", "must be >= 1");
        cfg.noise.dim_cap = static_cast<Eigen::Index>(cap);
        cfg.noise.cross_kernel = parse_cross_kernel(s.string_or("cross_kernel", "contour"));
        s.finish();
    }

    if (const json* o = root.find("oracle")) {
        Section s(*o, "oracle");
        const long long nl = s.integer_or("n_levels", 8);
        if (nl < 2) throw ValidationError("oracle.n_levels", "must be >= 2");
        cfg.oracle.n_levels = static_cast<int>(nl);
        const long long cap = s.integer_or("cap", 4096);
        if (cap < 1) throw ValidationError("oracle.cap", "must be >= 1");
        cfg.oracle.cap = static_cast<Eigen::Index>(cap);
        const long long sub = s.integer_or("n_substeps", 8);
        if (sub < 1) throw ValidationError("oracle.n_substeps", "must be >= 1");
        cfg.oracle.n_substeps = static_cast<int>(sub);
        s.finish();
    }

    if (const json* o = root.find("output")) {
        Section s(*o, "output");
        cfg.output.document = s.string_or("document", "");
        cfg.output.csv = s.string_or("csv", "");
        cfg.output.checkpoint = s.string_or("checkpoint", "");
        s.finish();
    }
    root.finish();

    // Cross-block checks.
    const double grid_dt = cfg.grids.t_f / (cfg.grids.n_t - 1);
    for (std::size_t k = 0; k < cfg.system.drives.size(); ++k) {
        Drive& d = cfg.system.drives[k];
        const std::string path = "system.drives[" + std::to_string(k) + "]";
        if (d.dt == 0.0) {
            if (d.amplitude.size() != static_cast<std::size_t>(cfg.grids.n_t))
                throw ValidationError(path + ".amplitude",
                                      "without dt the amplitude must have one sample per real-time grid point");
            d.dt = grid_dt;
        }
        if (!(d.dt > 0.0)) throw ValidationError(path + ".dt", "must be positive");
        if (d.span() < cfg.grids.t_f * (1.0 - 1e-12))
            throw ValidationError(path + ".amplitude", "samples do not cover [0, t_f]");
    }
    if (cfg.bath.lambda.rows() == cfg.bath.size() && cfg.bath.lambda.cols() == cfg.bath.size() &&
        max_abs(cfg.bath.lambda - cfg.bath.lambda.transpose()) > 1e-12 * max_abs(cfg.bath.lambda))
        throw ValidationError("bath.lambda", "not symmetric within 1e-12");
    cfg.system.validate();
    cfg.bath.validate();
    if (cfg.system.n_sites() != cfg.bath.size())
        throw ValidationError("system.couplings", std::to_string(cfg.system.n_sites()) +
                                                      " couplings for " + std::to_string(cfg.bath.size()) +
                                                      " bath sites");
    return cfg;
}

RunConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into line and column.
        std::size_t line = 1, col = 1;
        for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }
    return parse_config(doc);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

json emit_config(const RunConfig& c) {
    json sys;
    sys["dim"] = c.system.dim;
    sys["hbar"] = c.system.hbar;
    sys["beta"] = c.system.beta;
    sys["h0"] = matrix_to_json(c.system.h0);
    json couplings = json::array();
    for (const auto& f : c.system.couplings) couplings.push_back(matrix_to_json(f));
    sys["couplings"] = couplings;
    json drives = json::array();
    for (const auto& d : c.system.drives)
        drives.push_back({{"op", matrix_to_json(d.op)}, {"amplitude", d.amplitude}, {"dt", d.dt}});
    sys["drives"] = drives;

    json bath;
    bath["masses"] = std::vector<double>(c.bath.masses.data(), c.bath.masses.data() + c.bath.masses.size());
    bath["lambda"] = matrix_to_json(c.bath.lambda.cast<cplx>());

    json doc;
    doc["system"] = sys;
    doc["bath"] = bath;
    doc["grids"] = {{"t_f", c.grids.t_f}, {"n_t", c.grids.n_t}, {"n_tau", c.grids.n_tau}};
    doc["ensemble"] = {{"n_traj", c.ensemble.n_traj},
                       {"master_seed", c.ensemble.master_seed},
                       {"normalize", normalize_name(c.ensemble.normalize)},
                       {"checkpoint_interval", c.ensemble.checkpoint_interval},
                       {"block_size", c.ensemble.block_size}};
    doc["noise"] = {{"factorization", factor_method_name(c.noise.factorization)},
                    {"dim_cap", c.noise.dim_cap},
                    {"cross_kernel", cross_kernel_name(c.noise.cross_kernel)}};
    doc["oracle"] = {{"n_levels", c.oracle.n_levels}, {"cap", c.oracle.cap}, {"n_substeps", c.oracle.n_substeps}};
    doc["output"] = {{"document", c.output.document}, {"csv", c.output.csv}, {"checkpoint", c.output.checkpoint}};
    return doc;
}

namespace {

template <typename A, typename B>
bool same(const A& x, const B& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
}

}  // namespace

bool operator==(const RunConfig& a, const RunConfig& b) {
    auto same_list = [](const std::vector<CMatrix>& x, const std::vector<CMatrix>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t k = 0; k < x.size(); ++k)
            if (!same(x[k], y[k])) return false;
        return true;
    };
    if (a.system.dim != b.system.dim || a.system.hbar != b.system.hbar || a.system.beta != b.system.beta)
        return false;
    if (!same(a.system.h0, b.system.h0) || !same_list(a.system.couplings, b.system.couplings)) return false;
    if (a.system.drives.size() != b.system.drives.size()) return false;
    for (std::size_t k = 0; k < a.system.drives.size(); ++k) {
        const Drive &x = a.system.drives[k], &y = b.system.drives[k];
        if (!same(x.op, y.op) || x.amplitude != y.amplitude || x.dt != y.dt) return false;
    }
    if (!same(a.bath.masses, b.bath.masses) || !same(a.bath.lambda, b.bath.lambda)) return false;
    if (a.grids.t_f != b.grids.t_f || a.grids.n_t != b.grids.n_t || a.grids.n_tau != b.grids.n_tau) return false;
    const auto &e = a.ensemble, &f = b.ensemble;
    if (e.n_traj != f.n_traj || e.master_seed != f.master_seed || e.normalize != f.normalize ||
        e.checkpoint_interval != f.checkpoint_interval || e.block_size != f.block_size)
        return false;
    if (a.noise.factorization != b.noise.factorization || a.noise.dim_cap != b.noise.dim_cap ||
        a.noise.cross_kernel != b.noise.cross_kernel)
        return false;
    if (a.oracle.n_levels != b.oracle.n_levels || a.oracle.cap != b.oracle.cap ||
        a.oracle.n_substeps != b.oracle.n_substeps)
        return false;
    return a.output.document == b.output.document && a.output.csv == b.output.csv &&
           a.output.checkpoint == b.output.checkpoint;
}

}  // namespace esln
