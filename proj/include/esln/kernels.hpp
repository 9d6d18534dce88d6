// kernels.hpp — Bath memory kernels K_l and their site-representation sums L_ij
//
// For a unit-mass mode of frequency w the thermal displacement correlation is
// hbar * K(theta) with
//
//     K(theta) = cosh(w (hbar*beta/2 - i theta)) / (2 w sinh(hbar*beta*w/2)),
//
// defined on the strip -hbar*beta <= Im(theta) <= 0.  Real times give the
// K^R / K^I split, imaginary times the even/odd pair K^e / K^o, and complex
// times t - i tau are evaluated from the closed form directly.

#pragma once

#include "esln/model.hpp"
#include "esln/types.hpp"

namespace esln {

struct KernelContext {
    NormalModes modes;
    Vector masses;
    double hbar{1.0};
    double beta{1.0};

    KernelContext() = default;
    KernelContext(NormalModes m, Vector masses_, double hbar_, double beta_);

    int size() const { return modes.size(); }
    double hbar_beta() const { return hbar * beta; }
    double omega(int l) const { return modes.omegas(l); }

    // weight(l)(i, j) = e_{l i} e_{l j} / sqrt(m_i m_j)
    const Matrix& weight(int l) const { return weights_.at(static_cast<std::size_t>(l)); }

private:
    std::vector<Matrix> weights_;
};

KernelContext make_kernel_context(const NormalModes& modes, const BathSpec& bath,
                                  const SystemSpec& system);

// Real-time pieces.
double k_real_r(const KernelContext& ctx, int l, double t);
double k_real_i(const KernelContext& ctx, int l, double t);

// Imaginary-time pieces, K(i tau) = K^e(tau) + K^o(tau).
double k_imag_even(const KernelContext& ctx, int l, double tau);
double k_imag_odd(const KernelContext& ctx, int l, double tau);

// K(t - i tau).  Uses an exponential form of the closed expression that stays
// finite for any tau in [0, hbar*beta] even when w*hbar*beta is huge.
cplx k_complex(const KernelContext& ctx, int l, double t, double tau);

// Alternative term-by-term split of K(t - i tau) whose imaginary part carries
// "+ coth * sinh" where the exact decomposition has "- coth * sinh".  Only
// reachable through the cross-kernel comparison flag.
double k_printed_real(const KernelContext& ctx, int l, double t, double tau);
double k_printed_imag(const KernelContext& ctx, int l, double t, double tau);

enum class KernelKind { R, I, Even, Odd };

// L_ij(arg) = sum_l e_{l i} e_{l j} K_l(arg) / sqrt(m_i m_j) for a real kernel
// kind; arg is t for R/I and tau for Even/Odd.
Matrix l_matrix(const KernelContext& ctx, KernelKind kind, double arg);

// L_ij(t - i tau) from k_complex.
CMatrix l_matrix_complex(const KernelContext& ctx, double t, double tau);

}  // namespace esln
