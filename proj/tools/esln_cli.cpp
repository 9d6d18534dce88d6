// esln_cli.cpp — Command-line front end: run, equilibrate, verify-noise, kernels, oracle, compare

#include "esln/config.hpp"
#include "esln/ensemble.hpp"
#include "esln/io.hpp"
#include "esln/oracle.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace {

using namespace esln;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitComparison = 4;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    int workers{1};
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "configuration document (JSON)")->required();
    cmd->add_option("--seed", c.seed, "master seed; overrides ensemble.master_seed");
    cmd->add_option("--workers", c.workers, "trajectory worker threads")->check(CLI::PositiveNumber);
}

RunConfig load(const Common& c) {
    RunConfig cfg = load_config(c.config);
    if (c.seed) cfg.ensemble.master_seed = *c.seed;
    return cfg;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") std::cout << text;
    else write_text(path, text);
}

int cmd_run(const Common& c, std::optional<std::size_t> n_traj, std::string doc_path, std::string csv_path,
            std::string ckpt_path, bool resume) {
    RunConfig cfg = load(c);
    if (n_traj) cfg.ensemble.n_traj = *n_traj;
    if (doc_path.empty()) doc_path = cfg.output.document;
    if (csv_path.empty()) csv_path = cfg.output.csv;
    if (ckpt_path.empty()) ckpt_path = cfg.output.checkpoint;

    const Pipeline pipeline = cfg.prepare();
    EnsembleOptions opts = cfg.ensemble_options();
    opts.workers = c.workers;
    if (!ckpt_path.empty() && opts.checkpoint_interval > 0)
        opts.on_checkpoint = [&](const EnsembleCheckpoint& s) {
            write_text(ckpt_path, dump_document(checkpoint_document(cfg, s)));
        };

    std::optional<EnsembleCheckpoint> state;
    if (resume) {
        if (ckpt_path.empty()) throw ValidationError("output.checkpoint", "--resume needs a checkpoint path");
        if (std::filesystem::exists(ckpt_path))
            state = checkpoint_from_document(read_json_file(ckpt_path), cfg);
    }
    const EnsembleResult result = run_ensemble(pipeline, opts, state ? &*state : nullptr);

    const nlohmann::json doc = result_document(cfg, pipeline, result);
    emit(doc_path.empty() ? "-" : doc_path, dump_document(doc));
    if (!csv_path.empty()) write_text(csv_path, result_csv(result));

    double worst = 0.0;
    for (const auto& s : result.stderr_rho) worst = std::max(worst, s.maxCoeff());
    std::cerr << "run: " << result.n_ok << " ok, " << result.n_failed << " failed, worst stderr "
              << worst << ", physicality " << doc["physicality"]["verdict"].get<std::string>() << "\n";
    return kExitOk;
}

int cmd_equilibrate(const Common& c, std::optional<std::size_t> n_traj, const std::string& out) {
    RunConfig cfg = load(c);
    if (n_traj) cfg.ensemble.n_traj = *n_traj;
    const Pipeline pipeline = cfg.prepare();
    EnsembleOptions opts = cfg.ensemble_options();
    opts.workers = c.workers;
    opts.imaginary_only = true;
    const EnsembleResult r = run_ensemble(pipeline, opts);
    nlohmann::json doc;
    doc["format"] = "esln-equilibrate";
    doc["config"] = config_echo(cfg);
    doc["master_seed"] = cfg.ensemble.master_seed;
    doc["normalize"] = normalize_name(r.normalize);
    doc["n_traj"] = r.n_traj;
    doc["n_ok"] = r.n_ok;
    doc["n_failed"] = r.n_failed;
    nlohmann::json rho = nlohmann::json::array(), se = nlohmann::json::array();
    for (int i = 0; i < r.dim; ++i) {
        nlohmann::json row = nlohmann::json::array(), srow = nlohmann::json::array();
        for (int j = 0; j < r.dim; ++j) {
            row.push_back({r.mean_rho0(i, j).real(), r.mean_rho0(i, j).imag()});
            srow.push_back({r.se_re[0](i, j), r.se_im[0](i, j)});
        }
        rho.push_back(row);
        se.push_back(srow);
    }
    doc["mean_rho0"] = rho;
    doc["se"] = se;
    doc["z_factor"] = {{"mean", {r.z_mean.real(), r.z_mean.imag()}}, {"se", {r.z_se_re, r.z_se_im}}};
    emit(out, dump_document(doc));
    return kExitOk;
}

int cmd_verify_noise(const Common& c, std::size_t samples, int points, const std::string& out,
                     const std::string& csv) {
    const RunConfig cfg = load(c);
    const Pipeline pipeline = cfg.prepare();
    const NoiseReport rep = verify_empirical(pipeline.factor, pipeline.covariance, samples,
                                             cfg.ensemble.master_seed, points, !csv.empty());
    if (!csv.empty()) write_text(csv, noise_entries_csv(rep));
    nlohmann::json doc = noise_report_json(rep, pipeline.factor);
    doc["master_seed"] = cfg.ensemble.master_seed;
    emit(out, dump_document(doc));
    for (const auto& b : rep.blocks)
        std::cerr << (b.pass ? "PASS " : "FAIL ") << b.name << " worst_z=" << b.worst_z << " (" << b.n_entries
                  << " entries)\n";
    return rep.pass() ? kExitOk : kExitComparison;
}

int cmd_kernels(const Common& c, const std::string& prefix) {
    const RunConfig cfg = load(c);
    cfg.system.validate();
    const NormalModes modes = diagonalize_bath(cfg.bath);
    const KernelContext ctx = make_kernel_context(modes, cfg.bath, cfg.system);
    const TimeGrids grids = TimeGrids::make(cfg.grids.t_f, cfg.grids.n_t, cfg.grids.n_tau,
                                            cfg.system.hbar * cfg.system.beta);
    if (prefix.empty() || prefix == "-") {
        std::cout << kernel_table_real(ctx, grids) << "\n" << kernel_table_imag(ctx, grids);
    } else {
        write_text(prefix + "_real.csv", kernel_table_real(ctx, grids));
        write_text(prefix + "_imag.csv", kernel_table_imag(ctx, grids));
    }
    return kExitOk;
}

int cmd_oracle(const Common& c, std::optional<int> n_levels, std::string csv) {
    RunConfig cfg = load(c);
    if (n_levels) cfg.oracle.n_levels = *n_levels;
    const NormalModes modes = diagonalize_bath(cfg.bath);
    const TimeGrids grids = TimeGrids::make(cfg.grids.t_f, cfg.grids.n_t, cfg.grids.n_tau,
                                            cfg.system.hbar * cfg.system.beta);
    const OracleResult r = exact_reduced_dynamics(cfg.system, modes, cfg.bath, cfg.oracle, grids);
    for (const auto& w : r.warnings) std::cerr << w << "\n";
    emit(csv.empty() ? "-" : csv, oracle_csv(grids, r));
    return kExitOk;
}

int cmd_compare(const std::string& a, const std::string& b, double threshold) {
    const CompareReport rep = compare_series(read_csv(a), read_csv(b), threshold);
    std::cout << "compared " << rep.n_compared << " elements: max z-score " << rep.max_z << " at t="
              << rep.worst.t << " (" << rep.worst.row << "," << rep.worst.col << "), " << rep.n_over
              << " at or above " << threshold << ", max |diff| " << rep.max_abs_diff << ", max se "
              << rep.max_se << "\n";
    std::cout << (rep.pass() ? "PASS" : "FAIL") << "\n";
    return rep.pass() ? kExitOk : kExitComparison;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"esln: stochastic Liouville-von Neumann simulator for open quantum systems"};
    app.require_subcommand(1);

    Common run_c, eq_c, vn_c, k_c, o_c;
    std::optional<std::size_t> run_n, eq_n;
    std::string run_doc, run_csv, run_ckpt, eq_out, vn_out, vn_csv, k_prefix, o_csv, cmp_a, cmp_b;
    bool run_resume = false;
    std::size_t vn_samples = 100000;
    int vn_points = 8;
    std::optional<int> o_levels;
    double cmp_threshold = 5.0;

    auto* run = app.add_subcommand("run", "full pipeline: covariance, factorization, ensemble, outputs");
    add_common(run, run_c);
    run->add_option("--n-traj", run_n, "override ensemble.n_traj");
    run->add_option("-o,--output", run_doc, "output document path (default: output.document or stdout)");
    run->add_option("--csv", run_csv, "CSV path (default: output.csv)");
    run->add_option("--checkpoint", run_ckpt, "checkpoint path (default: output.checkpoint)");
    run->add_flag("--resume", run_resume, "continue from the checkpoint if it exists");

    auto* eq = app.add_subcommand("equilibrate", "imaginary-time phase only; reports the mean initial density");
    add_common(eq, eq_c);
    eq->add_option("--n-traj", eq_n, "override ensemble.n_traj");
    eq->add_option("-o,--output", eq_out, "output path (default stdout)");

    auto* vn = app.add_subcommand("verify-noise", "empirical pseudo-covariance check of the sampler");
    add_common(vn, vn_c);
    vn->add_option("--samples", vn_samples, "number of bundles")->check(CLI::Range(100, 100000000));
    vn->add_option("--points", vn_points, "grid points checked per field and site")->check(CLI::PositiveNumber);
    vn->add_option("-o,--output", vn_out, "report path (default stdout)");
    vn->add_option("--csv", vn_csv, "dump of every checked entry");

    auto* kn = app.add_subcommand("kernels", "dump L^R, L^I, L^e, L^o tables over the grids");
    add_common(kn, k_c);
    kn->add_option("-o,--output", k_prefix, "file prefix; writes PREFIX_real.csv and PREFIX_imag.csv");

    auto* orc = app.add_subcommand("oracle", "exact reduced dynamics on the truncated bath");
    add_common(orc, o_c);
    orc->add_option("--n-levels", o_levels, "override oracle.n_levels");
    orc->add_option("--csv", o_csv, "CSV path (default stdout)");

    auto* cmp = app.add_subcommand("compare", "per-element z-scores between two series CSVs");
    cmp->add_option("a", cmp_a, "first CSV (e.g. ensemble)")->required();
    cmp->add_option("b", cmp_b, "second CSV (e.g. oracle)")->required();
    cmp->add_option("--threshold", cmp_threshold, "z-score gate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(run_c, run_n, run_doc, run_csv, run_ckpt, run_resume);
        if (*eq) return cmd_equilibrate(eq_c, eq_n, eq_out);
        if (*vn) return cmd_verify_noise(vn_c, vn_samples, vn_points, vn_out, vn_csv);
        if (*kn) return cmd_kernels(k_c, k_prefix);
        if (*orc) return cmd_oracle(o_c, o_levels, o_csv);
        if (*cmp) return cmd_compare(cmp_a, cmp_b, cmp_threshold);
    } catch (const Error& e) {
        std::cerr << "esln: " << e.what() << "\n";
        return e.kind() == ErrorKind::Config ? kExitConfig : kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "esln: internal error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
