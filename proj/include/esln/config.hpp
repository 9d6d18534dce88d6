// config.hpp — Run configuration document: strict parsing and canonical emission

#pragma once

#include "esln/ensemble.hpp"
#include "esln/model.hpp"
#include "esln/noise.hpp"
#include "esln/oracle.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>

namespace esln {

struct GridConfig {
    double t_f{1.0};
    int n_t{2};
    int n_tau{2};
};

struct EnsembleConfig {
    std::size_t n_traj{1000};
    std::uint64_t master_seed{0};
    NormalizeMode normalize{NormalizeMode::Ensemble};
    std::size_t checkpoint_interval{0};
    std::size_t block_size{64};
};

struct NoiseConfig {
    FactorMethod factorization{FactorMethod::Takagi};
    Eigen::Index dim_cap{6000};
    CrossKernel cross_kernel{CrossKernel::Contour};
};

struct OutputConfig {
    std::string document;
    std::string csv;
    std::string checkpoint;
};

struct RunConfig {
    SystemSpec system;
    BathSpec bath;
    GridConfig grids;
    EnsembleConfig ensemble;
    NoiseConfig noise;
    TruncatedBath oracle;
    OutputConfig output;

    CovarianceOptions covariance_options() const;
    EnsembleOptions ensemble_options() const;
    Pipeline prepare() const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

// Validates everything checkable without building the noise covariance.
// Throws ParseError (with line and column) or ValidationError (with field path).
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

nlohmann::json emit_config(const RunConfig& config);

// Matrix helpers shared with the output writers.
nlohmann::json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const nlohmann::json& j, const std::string& field);

}  // namespace esln
