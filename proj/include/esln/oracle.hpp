// oracle.hpp — Exact reference dynamics on a Fock-truncated system+bath space
//
// Basis order is system (x) mode_1 (x) ... (x) mode_M, the system index being
// the slowest.  Modes are unit-mass after the normal-mode transform, with
// x_l = sqrt(hbar / 2 w_l) (a + a^dagger).

#pragma once

#include "esln/model.hpp"
#include "esln/noise.hpp"
#include "esln/types.hpp"

#include <string>
#include <vector>

namespace esln {

struct TruncatedBath {
    int n_levels{8};
    Eigen::Index cap{4096};
    int n_substeps{8};  // midpoint exponentials per grid interval when driven

    Eigen::Index total_dim(int system_dim, int n_modes) const;
};

// Throws CapExceeded when the total dimension passes trunc.cap.
CMatrix build_total_hamiltonian(const SystemSpec& system, const NormalModes& modes,
                                const BathSpec& bath, const TruncatedBath& trunc);

// Same with an explicit system Hamiltonian in place of system.h0.
CMatrix build_total_hamiltonian(const SystemSpec& system, const CMatrix& h_system,
                                const NormalModes& modes, const BathSpec& bath,
                                const TruncatedBath& trunc);

// Tr over every bath index of a total-space operator.
CMatrix partial_trace_bath(const CMatrix& rho_tot, int system_dim);

struct OracleResult {
    std::vector<CMatrix> rho_series;
    Vector occupations;                 // <n_l> in the initial thermal state
    std::vector<std::string> warnings;  // truncation warnings
};

// Canonical state of the t = 0 Hamiltonian (h0 plus couplings), then unitary
// evolution under the full, possibly driven, Hamiltonian.
OracleResult exact_reduced_dynamics(const SystemSpec& system, const NormalModes& modes,
                                    const BathSpec& bath, const TruncatedBath& trunc,
                                    const TimeGrids& grids);

// e^{-beta H} / Tr for a Hermitian H.
CMatrix gibbs_state(const CMatrix& h, double beta);

}  // namespace esln
