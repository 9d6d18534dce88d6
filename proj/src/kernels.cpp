// kernels.cpp — Closed-form kernel evaluation

#include "esln/kernels.hpp"

#include <cmath>

namespace esln {

KernelContext::KernelContext(NormalModes m, Vector masses_, double hbar_, double beta_)
    : modes(std::move(m)), masses(std::move(masses_)), hbar(hbar_), beta(beta_) {
    const int n = modes.size();
    if (masses.size() != n) throw DimensionMismatch("KernelContext: masses/modes size mismatch");
    for (int l = 0; l < n; ++l) {
        if (!(modes.omegas(l) * hbar * beta > 0.0))
            throw NonPositiveMode("KernelContext: zero-frequency mode");
    }
    weights_.reserve(static_cast<std::size_t>(n));
    const Vector inv_sqrt_m = masses.cwiseSqrt().cwiseInverse();
    for (int l = 0; l < n; ++l) {
        const Vector w = modes.evecs.col(l).cwiseProduct(inv_sqrt_m);
        weights_.push_back(w * w.transpose());
    }
}

KernelContext make_kernel_context(const NormalModes& modes, const BathSpec& bath,
                                  const SystemSpec& system) {
    return KernelContext(modes, bath.masses, system.hbar, system.beta);
}

namespace {

double coth_half(const KernelContext& ctx, int l) {
    return 1.0 / std::tanh(0.5 * ctx.hbar_beta() * ctx.omega(l));
}

}  // namespace

double k_real_r(const KernelContext& ctx, int l, double t) {
    const double w = ctx.omega(l);
    return coth_half(ctx, l) * std::cos(w * t) / (2.0 * w);
}

double k_real_i(const KernelContext& ctx, int l, double t) {
    const double w = ctx.omega(l);
    return -std::sin(w * t) / (2.0 * w);
}

double k_imag_even(const KernelContext& ctx, int l, double tau) {
    const double w = ctx.omega(l);
    return std::cosh(w * tau) * coth_half(ctx, l) / (2.0 * w);
}

double k_imag_odd(const KernelContext& ctx, int l, double tau) {
    const double w = ctx.omega(l);
    return std::sinh(w * tau) / (2.0 * w);
}

cplx k_complex(const KernelContext& ctx, int l, double t, double tau) {
    // cosh(a - w tau - i w t) / sinh(a), a = w hbar beta / 2, rewritten as
    // [e^{-w tau - i w t} + e^{-w (hbar beta - tau) + i w t}] / (1 - e^{-2a}).
    const double w = ctx.omega(l);
    const double hb = ctx.hbar_beta();
    const cplx i(0.0, 1.0);
    const cplx num = std::exp(-w * tau - i * w * t) + std::exp(-w * (hb - tau) + i * w * t);
    return num / (2.0 * w * (-std::expm1(-w * hb)));
}

double k_printed_real(const KernelContext& ctx, int l, double t, double tau) {
    const double w = ctx.omega(l);
    return (coth_half(ctx, l) * std::cosh(w * tau) - std::sinh(w * tau)) * std::cos(w * t) / (2.0 * w);
}

double k_printed_imag(const KernelContext& ctx, int l, double t, double tau) {
    const double w = ctx.omega(l);
    return -(std::cosh(w * tau) + std::sinh(w * tau) * coth_half(ctx, l)) * std::sin(w * t) / (2.0 * w);
}

Matrix l_matrix(const KernelContext& ctx, KernelKind kind, double arg) {
    const int m = ctx.size();
    Matrix out = Matrix::Zero(m, m);
    for (int l = 0; l < m; ++l) {
        double k = 0.0;
        switch (kind) {
            case KernelKind::R: k = k_real_r(ctx, l, arg); break;
            case KernelKind::I: k = k_real_i(ctx, l, arg); break;
            case KernelKind::Even: k = k_imag_even(ctx, l, arg); break;
            case KernelKind::Odd: k = k_imag_odd(ctx, l, arg); break;
        }
        out += k * ctx.weight(l);
    }
    return out;
}

CMatrix l_matrix_complex(const KernelContext& ctx, double t, double tau) {
    const int m = ctx.size();
    CMatrix out = CMatrix::Zero(m, m);
    for (int l = 0; l < m; ++l) out += k_complex(ctx, l, t, tau) * ctx.weight(l).cast<cplx>();
    return out;
}

}  // namespace esln
