// io.hpp — Output documents, CSV series, checkpoints and CSV comparison

#pragma once

#include "esln/config.hpp"
#include "esln/ensemble.hpp"
#include "esln/kernels.hpp"
#include "esln/noise.hpp"
#include "esln/oracle.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace esln {

// Config echo without the output block (locations are not part of a result).
nlohmann::json config_echo(const RunConfig& config);

nlohmann::json result_document(const RunConfig& config, const Pipeline& pipeline,
                               const EnsembleResult& result);

nlohmann::json checkpoint_document(const RunConfig& config, const EnsembleCheckpoint& state);

// Restores reducer state; throws ValidationError if the checkpoint was written
// for a different configuration or seed.
EnsembleCheckpoint checkpoint_from_document(const nlohmann::json& doc, const RunConfig& config);

// Compact, deterministic serialization with a trailing newline.
std::string dump_document(const nlohmann::json& doc);

void write_text(const std::string& path, const std::string& text);
nlohmann::json read_json_file(const std::string& path);

struct CsvRow {
    double t;
    int row, col;
    double re, im, se_re, se_im;
};

// Columns t,row,col,re,im,se_re,se_im; values in shortest round-trip form.
std::string series_csv(const std::vector<double>& times, const std::vector<CMatrix>& mean,
                       const std::vector<Matrix>* se_re, const std::vector<Matrix>* se_im);
std::string result_csv(const EnsembleResult& result);
std::string oracle_csv(const TimeGrids& grids, const OracleResult& oracle);

std::vector<CsvRow> parse_csv(const std::string& text, const std::string& origin = "csv");
std::vector<CsvRow> read_csv(const std::string& path);

struct CompareReport {
    std::size_t n_compared{0};
    std::size_t n_over{0};
    double max_z{0.0};
    double max_abs_diff{0.0};
    double max_se{0.0};  // largest combined standard error among compared rows
    CsvRow worst{};
    double threshold{5.0};
    bool pass() const { return max_z < threshold; }
};

// Per-element z-scores |a - b| / sqrt(se_a^2 + se_b^2), real and imaginary
// parts separately.  Zero standard error with a difference below 1e-12 counts
// as z = 0.  Rows must describe the same (t, row, col) sequence.
CompareReport compare_series(const std::vector<CsvRow>& a, const std::vector<CsvRow>& b,
                             double threshold = 5.0);

// Kernel tables over the grids: "t,i,j,L_R,L_I" and "tau,i,j,L_e,L_o".
std::string kernel_table_real(const KernelContext& ctx, const TimeGrids& grids);
std::string kernel_table_imag(const KernelContext& ctx, const TimeGrids& grids);

nlohmann::json noise_report_json(const NoiseReport& report, const NoiseFactor& factor);
std::string noise_entries_csv(const NoiseReport& report);

std::string format_double(double x);

}  // namespace esln
