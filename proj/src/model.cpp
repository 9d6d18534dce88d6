// model.cpp — Validation, bath diagonalization and coupling transforms

#include "esln/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace esln {

namespace {

void require_square(const CMatrix& m, int dim, const std::string& field) {
    if (m.rows() != dim || m.cols() != dim) {
        throw DimensionMismatch(field + " must be " + std::to_string(dim) + "x" +
                                std::to_string(dim) + ", got " + std::to_string(m.rows()) +
                                "x" + std::to_string(m.cols()));
    }
}

void require_hermitian(const CMatrix& m, const std::string& field) {
    if (!m.allFinite()) throw ValidationError(field, "non-finite entries");
    if (!is_hermitian(m)) throw ValidationError(field, "not Hermitian within 1e-12");
}

}  // namespace

void SystemSpec::validate() const {
    if (dim < 1) throw ValidationError("system.dim", "must be >= 1");
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ValidationError("system.hbar", "must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("system.beta", "must be positive");
    require_square(h0, dim, "system.h0");
    require_hermitian(h0, "system.h0");
    for (std::size_t k = 0; k < drives.size(); ++k) {
        const std::string field = "system.drives[" + std::to_string(k) + "]";
        require_square(drives[k].op, dim, field + ".op");
        require_hermitian(drives[k].op, field + ".op");
        if (drives[k].amplitude.size() < 2)
            throw ValidationError(field + ".amplitude", "needs at least 2 samples");
        if (!(drives[k].dt > 0.0)) throw ValidationError(field, "sample spacing must be positive");
        for (double a : drives[k].amplitude)
            if (!std::isfinite(a)) throw ValidationError(field + ".amplitude", "non-finite sample");
    }
    for (std::size_t i = 0; i < couplings.size(); ++i) {
        const std::string field = "system.couplings[" + std::to_string(i) + "]";
        require_square(couplings[i], dim, field);
        require_hermitian(couplings[i], field);
    }
}

void BathSpec::validate() const {
    const int m = size();
    if (lambda.rows() != m || lambda.cols() != m)
        throw DimensionMismatch("bath.lambda must be " + std::to_string(m) + "x" + std::to_string(m));
    for (int i = 0; i < m; ++i)
        if (!(masses(i) > 0.0) || !std::isfinite(masses(i)))
            throw ValidationError("bath.masses", "entries must be positive");
    if (!lambda.allFinite()) throw ValidationError("bath.lambda", "non-finite entries");
    if (max_abs(lambda - lambda.transpose()) > 1e-12 * max_abs(lambda))
        throw AsymmetricInput("bath.lambda is not symmetric within 1e-12");
}

NormalModes diagonalize_bath(const BathSpec& bath) {
    bath.validate();
    const int m = bath.size();
    NormalModes modes;
    if (m == 0) {
        modes.omegas.resize(0);
        modes.evecs.resize(0, 0);
        return modes;
    }
    const Vector inv_sqrt_m = bath.masses.cwiseSqrt().cwiseInverse();
    Matrix d = inv_sqrt_m.asDiagonal() * bath.lambda * inv_sqrt_m.asDiagonal();
    d = 0.5 * (d + d.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> solver(d);
    if (solver.info() != Eigen::Success) throw NonPositiveMode("dynamical matrix eigensolver failed");
    const Vector& w2 = solver.eigenvalues();
    for (int l = 0; l < m; ++l) {
        if (!(w2(l) > 0.0))
            throw NonPositiveMode("dynamical matrix eigenvalue " + std::to_string(w2(l)) +
                                  " <= 0 (unstable bath)");
    }
    modes.omegas = w2.cwiseSqrt();
    modes.evecs = solver.eigenvectors();

    for (int l = 0; l < m; ++l) {
        auto col = modes.evecs.col(l);
        const double peak = col.cwiseAbs().maxCoeff();
        int pick = 0;
        for (int i = 0; i < m; ++i) {
            if (std::abs(col(i)) >= peak * (1.0 - 1e-10)) {
                pick = i;
                break;
            }
        }
        if (col(pick) < 0.0) col = -col;
    }
    return modes;
}

std::vector<CMatrix> mode_couplings(const NormalModes& modes, const BathSpec& bath,
                                    const SystemSpec& system) {
    const int m = modes.size();
    if (bath.size() != m || system.n_sites() != m)
        throw DimensionMismatch("mode_couplings: " + std::to_string(system.n_sites()) +
                                " couplings for " + std::to_string(m) + " modes");
    std::vector<CMatrix> g(m, CMatrix::Zero(system.dim, system.dim));
    for (int l = 0; l < m; ++l)
        for (int i = 0; i < m; ++i)
            g[l] += (modes.evecs(i, l) / std::sqrt(bath.masses(i))) * system.couplings[i];
    return g;
}

std::vector<CMatrix> site_couplings(const NormalModes& modes, const BathSpec& bath,
                                    const std::vector<CMatrix>& g) {
    const int m = modes.size();
    if (bath.size() != m || static_cast<int>(g.size()) != m)
        throw DimensionMismatch("site_couplings: size mismatch");
    std::vector<CMatrix> f;
    f.reserve(m);
    for (int i = 0; i < m; ++i) {
        CMatrix fi = CMatrix::Zero(g.empty() ? 0 : g[0].rows(), g.empty() ? 0 : g[0].cols());
        for (int l = 0; l < m; ++l) fi += modes.evecs(i, l) * g[l];
        f.push_back(std::sqrt(bath.masses(i)) * fi);
    }
    return f;
}

CMatrix hamiltonian_at(const SystemSpec& system, double t) {
    CMatrix h = system.h0;
    for (const Drive& d : system.drives) {
        const double span = d.span();
        const double slack = 1e-9 * std::max(1.0, span);
        if (t < -slack || t > span + slack)
            throw OutOfRange("t = " + std::to_string(t) + " outside drive grid [0, " +
                             std::to_string(span) + "]");
        const double x = std::clamp(t / d.dt, 0.0, double(d.amplitude.size() - 1));
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(x), d.amplitude.size() - 2);
        const double frac = x - double(k);
        const double a = (1.0 - frac) * d.amplitude[k] + frac * d.amplitude[k + 1];
        h += a * d.op;
    }
    return h;
}

namespace pauli {
CMatrix identity() { return CMatrix::Identity(2, 2); }
CMatrix x() {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
CMatrix y() {
    CMatrix m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}
CMatrix z() {
    CMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
}  // namespace pauli

}  // namespace esln
