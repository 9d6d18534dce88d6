// propagate.cpp — RK4 integration of the imaginary-time and real-time trajectory equations

#include "esln/propagate.hpp"

#include <cmath>
#include <string>

namespace esln {

namespace {

const cplx kI(0.0, 1.0);

void check_bundle(const SystemSpec& system, const NoiseBundle& b, const TimeGrids& grids) {
    const int m = system.n_sites();
    if (b.eta.rows() != m || b.nu.rows() != m || b.mu_bar.rows() != m)
        throw DimensionMismatch("noise bundle has wrong number of sites");
    if (b.eta.cols() != grids.n_t || b.nu.cols() != grids.n_t)
        throw DimensionMismatch("noise bundle does not match the real-time grid");
    if (b.mu_bar.cols() != grids.n_tau)
        throw DimensionMismatch("noise bundle does not match the imaginary-time grid");
}

// sum_i c_i f_i
CMatrix weighted_sum(const SystemSpec& system, const CVector& c) {
    CMatrix out = CMatrix::Zero(system.dim, system.dim);
    for (int i = 0; i < system.n_sites(); ++i) out += c(i) * system.couplings[i];
    return out;
}

// H_bar(tau) rho_bar / (-hbar)
CMatrix quench_rhs(const SystemSpec& system, const CVector& mu, const CMatrix& rho) {
    const CMatrix hbar_mat = system.h0 - weighted_sum(system, mu);
    return (hbar_mat * rho) / (-system.hbar);
}

}  // namespace

CMatrix commutator_step_generator(const SystemSpec& system, const CMatrix& h, const CVector& eta,
                                  const CVector& nu, const CMatrix& rho) {
    // [H - sum eta f, rho] - (hbar/2) {sum nu f, rho}, folded into H+ rho - rho H-.
    const CMatrix fe = weighted_sum(system, eta);
    const CMatrix fn = weighted_sum(system, nu);
    const CMatrix hp = h - fe - (0.5 * system.hbar) * fn;
    const CMatrix hm = h - fe + (0.5 * system.hbar) * fn;
    return (hp * rho - rho * hm) / (kI * system.hbar);
}

CMatrix commutator_step_generator(const SystemSpec& system, double t, const CVector& eta,
                                  const CVector& nu, const CMatrix& rho) {
    return commutator_step_generator(system, hamiltonian_at(system, t), eta, nu, rho);
}

void check_finite(const CMatrix& m, const char* where, int index) {
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        const cplx v = m(k);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || std::abs(v) > 1e300)
            throw Diverged(std::string(where) + " step " + std::to_string(index));
    }
}

Equilibrated equilibrate(const SystemSpec& system, const NoiseBundle& bundle, const TimeGrids& grids) {
    check_bundle(system, bundle, grids);
    const double h = grids.dtau;
    CMatrix rho = CMatrix::Identity(system.dim, system.dim);
    for (int k = 0; k + 1 < grids.n_tau; ++k) {
        const CVector mu0 = bundle.mu_bar.col(k);
        const CVector mu1 = bundle.mu_bar.col(k + 1);
        const CVector mum = 0.5 * (mu0 + mu1);
        const CMatrix k1 = quench_rhs(system, mu0, rho);
        const CMatrix k2 = quench_rhs(system, mum, rho + 0.5 * h * k1);
        const CMatrix k3 = quench_rhs(system, mum, rho + 0.5 * h * k2);
        const CMatrix k4 = quench_rhs(system, mu1, rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_finite(rho, "imaginary-time", k + 1);
    }
    Equilibrated out;
    out.rho_bar = rho;
    const cplx tr = rho.trace();
    if (tr == cplx(0.0) || !std::isfinite(std::abs(tr)))
        throw Diverged("imaginary-time trace vanished or overflowed");
    out.rho0 = rho / tr;
    out.z_factor = tr / double(system.dim);
    return out;
}

TrajectoryOutput evolve(const SystemSpec& system, const NoiseBundle& bundle, const TimeGrids& grids,
                        const CMatrix& rho0) {
    check_bundle(system, bundle, grids);
    if (rho0.rows() != system.dim || rho0.cols() != system.dim)
        throw DimensionMismatch("rho0 has wrong dimension");
    const double h = grids.dt;
    TrajectoryOutput out;
    out.rho0 = rho0;
    out.z_factor = 1.0;
    out.rho_series.reserve(static_cast<std::size_t>(grids.n_t));
    out.rho_series.push_back(rho0);
    CMatrix rho = rho0;
    CMatrix h_prev = hamiltonian_at(system, 0.0);
    for (int k = 0; k + 1 < grids.n_t; ++k) {
        const double t = grids.t(k);
        const CMatrix h_mid = hamiltonian_at(system, t + 0.5 * h);
        const CMatrix h_next = hamiltonian_at(system, grids.t(k + 1));
        const CVector e0 = bundle.eta.col(k), e1 = bundle.eta.col(k + 1);
        const CVector n0 = bundle.nu.col(k), n1 = bundle.nu.col(k + 1);
        const CVector em = 0.5 * (e0 + e1), nm = 0.5 * (n0 + n1);
        const CMatrix k1 = commutator_step_generator(system, h_prev, e0, n0, rho);
        const CMatrix k2 = commutator_step_generator(system, h_mid, em, nm, rho + 0.5 * h * k1);
        const CMatrix k3 = commutator_step_generator(system, h_mid, em, nm, rho + 0.5 * h * k2);
        const CMatrix k4 = commutator_step_generator(system, h_next, e1, n1, rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_finite(rho, "real-time", k + 1);
        out.rho_series.push_back(rho);
        h_prev = h_next;
    }
    return out;
}

TrajectoryOutput evolve_split(const SystemSpec& system, const NoiseBundle& bundle,
                              const TimeGrids& grids, const CMatrix& rho0) {
    check_bundle(system, bundle, grids);
    if (rho0.rows() != system.dim || rho0.cols() != system.dim)
        throw DimensionMismatch("rho0 has wrong dimension");
    const double h = grids.dt;
    const double hb = system.hbar;
    auto h_pm = [&](const CMatrix& hq, const CVector& eta, const CVector& nu, double sign) {
        return CMatrix(hq - weighted_sum(system, eta) - (sign * 0.5 * hb) * weighted_sum(system, nu));
    };
    // dU/dt = H+ U / (i hbar),  dV/dt = -V H- / (i hbar)
    auto du = [&](const CMatrix& hp, const CMatrix& u) { return CMatrix((hp * u) / (kI * hb)); };
    auto dv = [&](const CMatrix& hm, const CMatrix& v) { return CMatrix(-(v * hm) / (kI * hb)); };

    TrajectoryOutput out;
    out.rho0 = rho0;
    out.z_factor = 1.0;
    out.rho_series.reserve(static_cast<std::size_t>(grids.n_t));
    out.rho_series.push_back(rho0);
    CMatrix u = CMatrix::Identity(system.dim, system.dim);
    CMatrix v = u;
    for (int k = 0; k + 1 < grids.n_t; ++k) {
        const double t = grids.t(k);
        const CMatrix h0 = hamiltonian_at(system, t);
        const CMatrix hm = hamiltonian_at(system, t + 0.5 * h);
        const CMatrix h1 = hamiltonian_at(system, grids.t(k + 1));
        const CVector e0 = bundle.eta.col(k), e1 = bundle.eta.col(k + 1);
        const CVector n0 = bundle.nu.col(k), n1 = bundle.nu.col(k + 1);
        const CVector em = 0.5 * (e0 + e1), nm = 0.5 * (n0 + n1);
        const CMatrix p0 = h_pm(h0, e0, n0, 1.0), pm = h_pm(hm, em, nm, 1.0), p1 = h_pm(h1, e1, n1, 1.0);
        const CMatrix q0 = h_pm(h0, e0, n0, -1.0), qm = h_pm(hm, em, nm, -1.0), q1 = h_pm(h1, e1, n1, -1.0);

        const CMatrix a1 = du(p0, u), b1 = dv(q0, v);
        const CMatrix a2 = du(pm, u + 0.5 * h * a1), b2 = dv(qm, v + 0.5 * h * b1);
        const CMatrix a3 = du(pm, u + 0.5 * h * a2), b3 = dv(qm, v + 0.5 * h * b2);
        const CMatrix a4 = du(p1, u + h * a3), b4 = dv(q1, v + h * b3);
        u += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        const CMatrix rho = u * rho0 * v;
        check_finite(rho, "real-time (split)", k + 1);
        out.rho_series.push_back(rho);
    }
    return out;
}

}  // namespace esln
