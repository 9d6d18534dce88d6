// takagi.cpp — Takagi factorization via LAPACK dsyevd on the real embedding

#include "esln/takagi.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace esln {

TakagiFactor takagi(const CMatrix& sym, double rel_cutoff) {
    const Eigen::Index n = sym.rows();
    if (sym.cols() != n) throw DimensionMismatch("takagi: matrix must be square");
    TakagiFactor out;
    if (n == 0 || max_abs(sym) == 0.0) {
        out.u.resize(n, 0);
        out.s.resize(0);
        return out;
    }

    const Eigen::Index n2 = 2 * n;
    Matrix b(n2, n2);
    const Matrix x = 0.5 * (sym.real() + sym.real().transpose());
    const Matrix y = 0.5 * (sym.imag() + sym.imag().transpose());
    b.topLeftCorner(n, n) = x;
    b.topRightCorner(n, n) = y;
    b.bottomLeftCorner(n, n) = y;
    b.bottomRightCorner(n, n) = -x;

    Vector w(n2);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n2),
                                           b.data(), static_cast<lapack_int>(n2), w.data());
    if (info != 0) throw FactorizationFailure("dsyevd returned info = " + std::to_string(info));
    const Matrix& z = b;
    const auto found = static_cast<lapack_int>(n2);

    double smax = 0.0;
    for (lapack_int k = 0; k < found; ++k) smax = std::max(smax, w(k));
    std::vector<Eigen::Index> keep;
    if (!(smax > 0.0)) {
        out.u.resize(n, 0);
        out.s.resize(0);
        return out;
    }
    for (lapack_int k = 0; k < found; ++k)
        if (w(k) > rel_cutoff * smax) keep.push_back(k);

    // Largest singular values first.
    std::sort(keep.begin(), keep.end(), [&](Eigen::Index p, Eigen::Index q) { return w(p) > w(q); });
    out.u.resize(n, static_cast<Eigen::Index>(keep.size()));
    out.s.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        out.s(col) = w(keep[c]);
        out.u.col(col).real() = z.col(keep[c]).head(n);
        out.u.col(col).imag() = z.col(keep[c]).tail(n);
    }
    return out;
}

CMatrix symmetric_cholesky(const CMatrix& sym, double jitter) {
    const Eigen::Index n = sym.rows();
    if (sym.cols() != n) throw DimensionMismatch("symmetric_cholesky: matrix must be square");
    CMatrix l = CMatrix::Zero(n, n);
    const double scale = std::max(max_abs(sym), 1e-300);
    for (Eigen::Index j = 0; j < n; ++j) {
        cplx d = sym(j, j) + jitter;
        for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        const cplx pivot = std::sqrt(d);
        if (!std::isfinite(pivot.real()) || !std::isfinite(pivot.imag()) ||
            std::abs(pivot) <= 1e-14 * std::sqrt(scale))
            throw FactorizationFailure("symmetric Cholesky pivot " + std::to_string(j) + " vanished");
        l(j, j) = pivot;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            cplx v = sym(i, j);
            for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / pivot;
        }
    }
    return l;
}

}  // namespace esln
