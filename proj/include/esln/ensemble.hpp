// ensemble.hpp — Trajectory orchestration, deterministic reduction and error estimates
//
// Trajectory j draws its noise from rng::derive(master_seed, j).  Trajectories
// are grouped in fixed blocks of consecutive indices; each block is reduced in
// index order and blocks are merged along a fixed binary tree keyed by block
// index, so the result does not depend on how blocks are scheduled.
//
// Every output element is estimated as a ratio R = mean(X) / mean(T), where X
// is the weighted trajectory value and T its weight: the imaginary-time trace
// in `ensemble` normalization, 1 in `per-trajectory` normalization.  Standard
// errors come from the linearization E_j = (X_j - R T_j) / mean(T), applied to
// real and imaginary parts separately.

#pragma once

#include "esln/kernels.hpp"
#include "esln/model.hpp"
#include "esln/noise.hpp"
#include "esln/propagate.hpp"
#include "esln/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace esln {

enum class NormalizeMode { Ensemble, PerTrajectory };

const char* normalize_name(NormalizeMode m);
NormalizeMode parse_normalize(const std::string& name);

// Everything a trajectory needs, built once and shared read-only.
struct Pipeline {
    SystemSpec system;
    BathSpec bath;
    NormalModes modes;
    KernelContext kernels;
    TimeGrids grids;
    NoiseCovariance covariance;
    NoiseFactor factor;

    static Pipeline prepare(const SystemSpec& system, const BathSpec& bath, double t_f, int n_t,
                            int n_tau, const CovarianceOptions& cov_options = {},
                            FactorMethod method = FactorMethod::Takagi);
};

// Moments of the per-element 6-vector (Re X, Im X, Re T, Im T, Re Y, Im Y),
// with Y = X(t) - X(0).  Means and co-moment sums are merged pairwise.
struct Moments {
    static constexpr int kWidth = 6;
    static constexpr int kPairs = kWidth * (kWidth + 1) / 2;

    double count{0.0};
    std::vector<double> mean;  // n_elements * kWidth
    std::vector<double> m2;    // n_elements * kPairs, upper triangle row-major

    static Moments zeros(std::size_t n_elements);
    std::size_t n_elements() const { return mean.size() / kWidth; }

    void add(const double* sample_rows);  // n_elements * kWidth values
    static Moments merge(const Moments& a, const Moments& b);
};

// Block-index keyed pairwise merge; equivalent to a binary counter.
class PairwiseReducer {
public:
    struct Node {
        int level;
        Moments moments;
    };

    void push(Moments block);
    Moments result(std::size_t n_elements) const;
    const std::vector<Node>& nodes() const { return stack_; }
    void restore(std::vector<Node> nodes) { stack_ = std::move(nodes); }

private:
    std::vector<Node> stack_;
};

struct FailureRecord {
    std::uint64_t index;
    std::string message;
};

struct EnsembleCheckpoint;

struct EnsembleOptions {
    std::size_t n_traj{1000};
    std::uint64_t master_seed{0};
    NormalizeMode normalize{NormalizeMode::Ensemble};
    int workers{1};
    std::size_t block_size{64};
    double max_failure_fraction{0.01};
    bool imaginary_only{false};  // report only the normalized rho_bar(hbar beta)

    // Called after every merged block, in block order, with the reducer state.
    std::size_t checkpoint_interval{0};  // trajectories; 0 disables
    std::function<void(const EnsembleCheckpoint&)> on_checkpoint;
};

// Resumable reducer state.
struct EnsembleCheckpoint {
    std::size_t next_block{0};
    std::size_t n_ok{0};
    std::vector<FailureRecord> failures;
    std::vector<PairwiseReducer::Node> nodes;
    Moments z_moments;  // (Re z, Im z) per trajectory, z = Tr(rho_bar) / dim
};

struct EnsembleResult {
    int dim{1};
    std::vector<double> times;
    std::vector<CMatrix> mean_rho;
    std::vector<Matrix> se_re, se_im;
    std::vector<Matrix> stderr_rho;  // hypot(se_re, se_im)
    std::vector<Matrix> drift_se_re, drift_se_im;  // SE of mean_rho(t) - mean_rho(0)
    CMatrix mean_rho0;
    std::size_t n_traj{0}, n_ok{0}, n_failed{0};
    std::vector<FailureRecord> failures;
    std::uint64_t master_seed{0};
    NormalizeMode normalize{NormalizeMode::Ensemble};
    cplx z_mean{0.0};
    double z_se_re{0.0}, z_se_im{0.0};
};

// Throws TooManyFailures when failed / n_traj exceeds the allowed fraction.
EnsembleResult run_ensemble(const Pipeline& pipeline, const EnsembleOptions& options,
                            const EnsembleCheckpoint* resume = nullptr);

// Weighted outputs of a single trajectory, as accumulated by run_ensemble.
struct TrajectorySample {
    std::vector<CMatrix> x;  // weighted series
    cplx weight;
    cplx z_factor;
};
TrajectorySample run_trajectory(const Pipeline& pipeline, const NoiseBundle& bundle,
                                NormalizeMode normalize, bool imaginary_only = false);

enum class Verdict { Pass, Fail, Inconclusive };
const char* verdict_name(Verdict v);

struct PhysicalityReport {
    double hermiticity_z{0.0};  // max over t of max_ij |R_ij - conj(R_ji)| / SE
    double trace_z{0.0};        // max over t of |Tr R - 1| / SE
    double min_eigenvalue{0.0}; // over the Hermitized means
    double threshold{5.0};
    std::size_t min_trajectories{100};
    Verdict verdict{Verdict::Pass};
};

PhysicalityReport hermiticity_trace_report(const EnsembleResult& result, double threshold = 5.0,
                                           std::size_t min_trajectories = 100);

struct StationarityReport {
    double max_z{0.0};
    int worst_t{0}, worst_row{0}, worst_col{0};
    double threshold{5.0};
    bool pass() const { return max_z < threshold; }
};

// Max over t, elements and re/im parts of |R(t) - R(0)| / SE(drift).
StationarityReport stationarity_report(const EnsembleResult& result, double threshold = 5.0);

}  // namespace esln
