// takagi.hpp — Factorizations of complex symmetric matrices, S = A A^T

#pragma once

#include "esln/types.hpp"

namespace esln {

// S = U diag(s) U^T with orthonormal columns in U and s > cutoff * max(s).
//
// Built from the real symmetric embedding [[X, Y], [Y, -X]] of S = X + iY:
// an eigenpair (a; b) with eigenvalue s > 0 gives the Takagi vector a + ib,
// since S conj(a + ib) = s (a + ib).  Eigenvalues come in +/- pairs, so only
// the positive half is kept.
struct TakagiFactor {
    CMatrix u;
    Vector s;
};

TakagiFactor takagi(const CMatrix& sym, double rel_cutoff = 1e-12);

// Unpivoted complex-symmetric (non-conjugated) Cholesky of S + jitter * I.
// Throws FactorizationFailure on a vanishing or non-finite pivot.
CMatrix symmetric_cholesky(const CMatrix& sym, double jitter);

}  // namespace esln
