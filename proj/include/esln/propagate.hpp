// propagate.hpp — Imaginary-time quench and real-time stochastic propagation of one trajectory
//
// Imaginary time:  -hbar d(rho_bar)/d(tau) = H_bar(tau) rho_bar,
//                  H_bar = h0 - sum_i mu_bar_i(tau) f_i,   rho_bar(0) = 1.
// Real time:       i hbar d(rho)/dt = [H, rho] - sum_i eta_i [f_i, rho]
//                                     - (hbar/2) sum_i nu_i {f_i, rho}.
// Both are integrated with classical RK4, one step per grid interval, with the
// noises linearly interpolated between grid points (so the half-step value is
// the mean of the two neighbours).

#pragma once

#include "esln/model.hpp"
#include "esln/noise.hpp"
#include "esln/types.hpp"

#include <vector>

namespace esln {

enum class Phase { Imaginary, Real };

struct TrajectoryState {
    CMatrix rho;
    Phase phase{Phase::Imaginary};
    int index{0};
};

struct Equilibrated {
    CMatrix rho0;       // rho_bar(hbar beta) / Tr
    CMatrix rho_bar;    // unnormalized rho_bar(hbar beta)
    cplx z_factor;      // Tr(rho_bar(hbar beta)) / dim
};

struct TrajectoryOutput {
    std::vector<CMatrix> rho_series;  // one entry per real-time grid point
    CMatrix rho0;
    cplx z_factor;
};

// d(rho)/dt for the real-time equation at fixed noise values eta, nu (one per site).
CMatrix commutator_step_generator(const SystemSpec& system, const CMatrix& h, const CVector& eta,
                                  const CVector& nu, const CMatrix& rho);

// Same, evaluating H at time t through hamiltonian_at.
CMatrix commutator_step_generator(const SystemSpec& system, double t, const CVector& eta,
                                  const CVector& nu, const CMatrix& rho);

// Throws Diverged if any entry is non-finite or exceeds 1e300 in magnitude.
void check_finite(const CMatrix& m, const char* where, int index);

Equilibrated equilibrate(const SystemSpec& system, const NoiseBundle& bundle, const TimeGrids& grids);

// rho_series[0] == rho0 exactly.
TrajectoryOutput evolve(const SystemSpec& system, const NoiseBundle& bundle, const TimeGrids& grids,
                        const CMatrix& rho0);

// Alternative integrator: rho(t) = U+(t) rho0 V(t) with
// i hbar dU+/dt = H+ U+,  i hbar dV/dt = -V H-,  H+- = H - sum_i (eta_i +- hbar nu_i / 2) f_i.
TrajectoryOutput evolve_split(const SystemSpec& system, const NoiseBundle& bundle,
                              const TimeGrids& grids, const CMatrix& rho0);

}  // namespace esln
