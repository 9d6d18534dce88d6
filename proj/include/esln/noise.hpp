// noise.hpp — Correlated complex Gaussian noise on the real/imaginary time grids
//
// Three fields per bath site: eta(t) and nu(t) on the real-time grid and
// mu_bar(tau) on the imaginary-time grid.  Only the pseudo-covariance
// <z z^T> is prescribed; realizations are z = A w with A A^T = Sigma and w a
// real standard-normal vector, so <z z^T> = Sigma holds by construction and
// <z z^H> = A A^H is whatever the factorization yields.

#pragma once

#include "esln/kernels.hpp"
#include "esln/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace esln {

struct TimeGrids {
    int n_t{2};
    double dt{0.0};
    int n_tau{2};
    double dtau{0.0};

    static TimeGrids make(double t_f, int n_t, int n_tau, double hbar_beta);

    double t_f() const { return dt * (n_t - 1); }
    double hbar_beta() const { return dtau * (n_tau - 1); }
    double t(int k) const { return dt * k; }
    double tau(int k) const { return dtau * k; }
};

enum class NoiseField { Eta = 0, Nu = 1, MuBar = 2 };

const char* field_name(NoiseField f);

// Row layout of the stacked noise vector: [eta | nu | mu_bar], each block
// site-major with time as the fast index.
struct NoiseLayout {
    int n_sites{0};
    int n_t{0};
    int n_tau{0};

    Eigen::Index dim() const { return Eigen::Index(n_sites) * (2 * n_t + n_tau); }
    int n_times(NoiseField f) const { return f == NoiseField::MuBar ? n_tau : n_t; }
    Eigen::Index index(NoiseField f, int site, int k) const;
};

// How the <eta mu_bar> cross block is built.
//   Contour: +hbar L(-t - i tau), from ordering the bath correlation along the
//            closed time contour with the quench operator ordered left of its
//            start (the propagation convention used by `equilibrate`).
//   Direct:  -hbar L(t - i tau) with L evaluated from the closed form.
//   Printed: -hbar [L^R + i L^I](t - i tau) using the alternative split
//            (k_printed_real / k_printed_imag).
enum class CrossKernel { Contour, Direct, Printed };

const char* cross_kernel_name(CrossKernel c);
CrossKernel parse_cross_kernel(const std::string& name);

struct CovarianceOptions {
    CrossKernel cross{CrossKernel::Contour};
    double theta_at_zero{0.5};
    Eigen::Index dim_cap{6000};
};

struct NoiseCovariance {
    NoiseLayout layout;
    CMatrix sigma;  // complex symmetric pseudo-covariance

    Eigen::Index dim() const { return layout.dim(); }
    cplx at(NoiseField a, int i, int k, NoiseField b, int j, int l) const {
        return sigma(layout.index(a, i, k), layout.index(b, j, l));
    }
};

NoiseCovariance build_covariance(const KernelContext& ctx, const TimeGrids& grids,
                                 const CovarianceOptions& options = {});

// True when every eta-eta site block depends on t_k - t_l only.
bool eta_block_is_toeplitz(const NoiseCovariance& cov, double tol = 0.0);

enum class FactorMethod { Takagi, Cholesky };

const char* factor_method_name(FactorMethod m);
FactorMethod parse_factor_method(const std::string& name);

struct NoiseFactor {
    NoiseLayout layout;
    CMatrix a;  // dim x rank, a a^T = sigma
    FactorMethod method{FactorMethod::Takagi};
    double residual{0.0};  // ||a a^T - sigma||_max / ||sigma||_max

    Eigen::Index rank() const { return a.cols(); }
};

// Takagi first unless `preferred` is Cholesky; falls back to jittered
// symmetric Cholesky when the Takagi residual check fails.
NoiseFactor factorize(const NoiseCovariance& cov, FactorMethod preferred = FactorMethod::Takagi);

struct NoiseBundle {
    CMatrix eta;     // n_sites x n_t
    CMatrix nu;      // n_sites x n_t
    CMatrix mu_bar;  // n_sites x n_tau
    std::uint64_t seed{0};

    static NoiseBundle zeros(const NoiseLayout& layout);
};

// Counter-based normal stream: the k-th draw depends only on (key, k).
namespace rng {
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive(std::uint64_t master, std::uint64_t index);
void standard_normals(std::uint64_t key, double* out, std::size_t n);
}  // namespace rng

NoiseBundle sample(const NoiseFactor& factor, std::uint64_t seed);

// Stacked-vector view of a bundle and its inverse.
CVector pack(const NoiseLayout& layout, const NoiseBundle& b);
NoiseBundle unpack(const NoiseLayout& layout, const CVector& z, std::uint64_t seed = 0);

struct EntryCheck {
    NoiseField a, b;
    int i, k, j, l;
    cplx target, empirical;
    double se_re, se_im, z;
};

struct BlockCheck {
    std::string name;
    double worst_z{0.0};
    std::size_t n_entries{0};
    bool pass{true};
};

struct NoiseReport {
    std::size_t n_samples{0};
    double threshold{5.0};
    std::vector<BlockCheck> blocks;
    std::vector<EntryCheck> entries;

    bool pass() const;
    double worst_z() const;
};

// Compares the empirical pseudo-covariance of `n_samples` bundles (bundle s
// drawn with seed rng::derive(seed, s)) against cov.sigma on up to
// `points_per_field` evenly spaced grid points per field and site.
NoiseReport verify_empirical(const NoiseFactor& factor, const NoiseCovariance& cov,
                             std::size_t n_samples, std::uint64_t seed,
                             int points_per_field = 8, bool keep_entries = false);

struct CharacteristicCheck {
    cplx mc_mean;
    double se_re, se_im;
    cplx target;  // exp(-k^T Sigma k / 2)

    double z() const;
};

// Monte Carlo estimate of <exp(i z^T k)> against its Gaussian closed form,
// for several test vectors sharing the same bundles.
std::vector<CharacteristicCheck> characteristic_check(const NoiseFactor& factor,
                                                      const NoiseCovariance& cov,
                                                      const std::vector<CVector>& ks,
                                                      std::size_t n_samples,
                                                      std::uint64_t seed);

}  // namespace esln
