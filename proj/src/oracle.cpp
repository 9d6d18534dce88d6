// oracle.cpp — Exact diagonalization oracle

#include "esln/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace esln {

Eigen::Index TruncatedBath::total_dim(int system_dim, int n_modes) const {
    double d = system_dim;
    for (int l = 0; l < n_modes; ++l) d *= n_levels;
    if (d > 9e18) return std::numeric_limits<Eigen::Index>::max();
    return static_cast<Eigen::Index>(d);
}

namespace {

// 1 (x) ... (x) op (x) ... (x) 1 on the bath factor, mode l of m.
CMatrix embed_mode(const CMatrix& op, int l, int m, int n_levels) {
    CMatrix out = CMatrix::Identity(1, 1);
    for (int k = 0; k < m; ++k) {
        const CMatrix f = (k == l) ? op : CMatrix(CMatrix::Identity(n_levels, n_levels));
        CMatrix next(out.rows() * f.rows(), out.cols() * f.cols());
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index j = 0; j < out.cols(); ++j)
                next.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) = out(i, j) * f;
        out = std::move(next);
    }
    return out;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CMatrix annihilation(int n) {
    CMatrix a = CMatrix::Zero(n, n);
    for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(double(k));
    return a;
}

CMatrix hermitian_exp(const CMatrix& h, cplx factor) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const CVector ph = (factor * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

void check_cap(const SystemSpec& system, const NormalModes& modes, const TruncatedBath& trunc) {
    if (trunc.n_levels < 2) throw ValidationError("oracle.n_levels", "must be >= 2");
    const Eigen::Index d = trunc.total_dim(system.dim, modes.size());
    if (d > trunc.cap)
        throw CapExceeded("oracle dimension " + std::to_string(d) + " exceeds cap " +
                          std::to_string(trunc.cap));
}

}  // namespace

CMatrix build_total_hamiltonian(const SystemSpec& system, const CMatrix& h_system,
                                const NormalModes& modes, const BathSpec& bath,
                                const TruncatedBath& trunc) {
    check_cap(system, modes, trunc);
    const int m = modes.size();
    const int n = trunc.n_levels;
    const std::vector<CMatrix> g = mode_couplings(modes, bath, system);
    Eigen::Index bath_dim = 1;
    for (int l = 0; l < m; ++l) bath_dim *= n;

    CMatrix h = kron(h_system, CMatrix::Identity(bath_dim, bath_dim));
    const CMatrix a = annihilation(n);
    const CMatrix x_unit = a + a.adjoint();
    CMatrix number = CMatrix::Zero(n, n);
    for (int k = 0; k < n; ++k) number(k, k) = k + 0.5;
    const CMatrix id_s = CMatrix::Identity(system.dim, system.dim);
    for (int l = 0; l < m; ++l) {
        const double w = modes.omegas(l);
        h += kron(id_s, embed_mode(system.hbar * w * number, l, m, n));
        const CMatrix x = std::sqrt(system.hbar / (2.0 * w)) * embed_mode(x_unit, l, m, n);
        h -= kron(g[l], x);
    }
    return 0.5 * (h + h.adjoint());
}

CMatrix build_total_hamiltonian(const SystemSpec& system, const NormalModes& modes,
                                const BathSpec& bath, const TruncatedBath& trunc) {
    return build_total_hamiltonian(system, system.h0, modes, bath, trunc);
}

CMatrix partial_trace_bath(const CMatrix& rho_tot, int system_dim) {
    const Eigen::Index b = rho_tot.rows() / system_dim;
    CMatrix out = CMatrix::Zero(system_dim, system_dim);
    for (int i = 0; i < system_dim; ++i)
        for (int j = 0; j < system_dim; ++j)
            out(i, j) = rho_tot.block(i * b, j * b, b, b).trace();
    return out;
}

CMatrix gibbs_state(const CMatrix& h, double beta) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const Vector& e = es.eigenvalues();
    const double e0 = e.minCoeff();
    const Vector p = (-beta * (e.array() - e0)).exp().matrix();
    const CMatrix v = es.eigenvectors();
    return v * (p / p.sum()).cast<cplx>().asDiagonal() * v.adjoint();
}

OracleResult exact_reduced_dynamics(const SystemSpec& system, const NormalModes& modes,
                                    const BathSpec& bath, const TruncatedBath& trunc,
                                    const TimeGrids& grids) {
    OracleResult out;
    const int m = modes.size();
    const int n = trunc.n_levels;
    const CMatrix h_tot = build_total_hamiltonian(system, modes, bath, trunc);

    Eigen::SelfAdjointEigenSolver<CMatrix> es(h_tot);
    const Vector& e = es.eigenvalues();
    const CMatrix& v = es.eigenvectors();
    const Vector p_raw = (-system.beta * (e.array() - e.minCoeff())).exp().matrix();
    const Vector p = p_raw / p_raw.sum();
    const CMatrix rho_tot0 = v * p.cast<cplx>().asDiagonal() * v.adjoint();

    out.occupations.resize(m);
    CMatrix number = CMatrix::Zero(n, n);
    for (int k = 0; k < n; ++k) number(k, k) = k;
    for (int l = 0; l < m; ++l) {
        const CMatrix nl = kron(CMatrix::Identity(system.dim, system.dim), embed_mode(number, l, m, n));
        out.occupations(l) = (rho_tot0 * nl).trace().real();
        // The truncated estimate cannot grow past the cutoff, so the free-mode
        // Bose occupation is checked as well.
        const double bose = 1.0 / std::expm1(system.beta * system.hbar * modes.omegas(l));
        const double occ = std::max(out.occupations(l), bose);
        if (occ > n - 2) {
            std::ostringstream msg;
            msg << "TruncationWarning: mode " << l << " occupation " << occ
                << " exceeds n_levels - 2 = " << (n - 2);
            out.warnings.push_back(msg.str());
        }
    }

    out.rho_series.reserve(static_cast<std::size_t>(grids.n_t));
    if (system.drives.empty()) {
        // The canonical state is diagonal in the eigenbasis of the static
        // Hamiltonian, so every phase e^{-i E t / hbar} cancels.
        const CMatrix rho_s = partial_trace_bath(rho_tot0, system.dim);
        out.rho_series.assign(static_cast<std::size_t>(grids.n_t), rho_s);
        return out;
    }

    CMatrix rho = rho_tot0;
    out.rho_series.push_back(partial_trace_bath(rho, system.dim));
    const int ns = std::max(trunc.n_substeps, 1);
    const double hs = grids.dt / ns;
    const cplx factor(0.0, -hs / system.hbar);
    const Eigen::Index bath_dim = h_tot.rows() / system.dim;
    const CMatrix id_b = CMatrix::Identity(bath_dim, bath_dim);
    for (int k = 0; k + 1 < grids.n_t; ++k) {
        for (int s = 0; s < ns; ++s) {
            const double tm = grids.t(k) + (s + 0.5) * hs;
            const CMatrix ht = h_tot + kron(hamiltonian_at(system, tm) - system.h0, id_b);
            const CMatrix u = hermitian_exp(ht, factor);
            rho = u * rho * u.adjoint();
        }
        out.rho_series.push_back(partial_trace_bath(rho, system.dim));
    }
    return out;
}

}  // namespace esln
