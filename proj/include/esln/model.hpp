// model.hpp — Open-system and harmonic-bath specifications, normal-mode transform

#pragma once

#include "esln/types.hpp"

#include <vector>

namespace esln {

// External field V(t) = amplitude(t) * op, with amplitude sampled every `dt`
// starting at t = 0 and linearly interpolated in between.
struct Drive {
    CMatrix op;
    std::vector<double> amplitude;
    double dt{0.0};

    double span() const { return amplitude.empty() ? 0.0 : dt * double(amplitude.size() - 1); }
};

struct SystemSpec {
    int dim{1};
    CMatrix h0;
    std::vector<Drive> drives;
    std::vector<CMatrix> couplings;  // f_i, one per bath site
    double hbar{1.0};
    double beta{1.0};

    int n_sites() const { return static_cast<int>(couplings.size()); }

    // Throws ValidationError / DimensionMismatch on the first broken invariant.
    void validate() const;
};

struct BathSpec {
    Vector masses;
    Matrix lambda;  // force-constant matrix

    int size() const { return static_cast<int>(masses.size()); }
    void validate() const;
};

// omegas ascending; evecs(i, l) is component i of mode l.
struct NormalModes {
    Vector omegas;
    Matrix evecs;

    int size() const { return static_cast<int>(omegas.size()); }
};

// Eigen-decomposition of the dynamical matrix D_ij = Lambda_ij / sqrt(m_i m_j).
// Columns are sign-fixed so that the largest-magnitude entry (first one on
// ties) is positive.
NormalModes diagonalize_bath(const BathSpec& bath);

// g_l = sum_i e_{l i} f_i / sqrt(m_i)
std::vector<CMatrix> mode_couplings(const NormalModes& modes, const BathSpec& bath,
                                    const SystemSpec& system);

// Inverse relation f_i = sqrt(m_i) sum_l e_{i l} g_l.
std::vector<CMatrix> site_couplings(const NormalModes& modes, const BathSpec& bath,
                                    const std::vector<CMatrix>& g);

// h0 + sum_k amplitude_k(t) V_k.  Throws OutOfRange outside a drive's span.
CMatrix hamiltonian_at(const SystemSpec& system, double t);

// Helpers used throughout tests and examples.
namespace pauli {
CMatrix identity();
CMatrix x();
CMatrix y();
CMatrix z();
}  // namespace pauli

}  // namespace esln
