// noise.cpp — Covariance assembly, factorization, sampling and statistical checks

#include "esln/noise.hpp"

#include "esln/takagi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace esln {

TimeGrids TimeGrids::make(double t_f, int n_t, int n_tau, double hbar_beta) {
    if (n_t < 2) throw ValidationError("grids.n_t", "grid needs >= 2 points");
    if (n_tau < 2) throw ValidationError("grids.n_tau", "grid needs >= 2 points");
    if (!(t_f > 0.0) || !std::isfinite(t_f)) throw ValidationError("grids.t_f", "must be positive");
    if (!(hbar_beta > 0.0)) throw ValidationError("system.beta", "hbar*beta must be positive");
    TimeGrids g;
    g.n_t = n_t;
    g.dt = t_f / (n_t - 1);
    g.n_tau = n_tau;
    g.dtau = hbar_beta / (n_tau - 1);
    return g;
}

const char* field_name(NoiseField f) {
    switch (f) {
        case NoiseField::Eta: return "eta";
        case NoiseField::Nu: return "nu";
        case NoiseField::MuBar: return "mu_bar";
    }
    return "?";
}

Eigen::Index NoiseLayout::index(NoiseField f, int site, int k) const {
    const Eigen::Index m = n_sites;
    switch (f) {
        case NoiseField::Eta: return Eigen::Index(site) * n_t + k;
        case NoiseField::Nu: return m * n_t + Eigen::Index(site) * n_t + k;
        case NoiseField::MuBar: return 2 * m * n_t + Eigen::Index(site) * n_tau + k;
    }
    return -1;
}

const char* cross_kernel_name(CrossKernel c) {
    switch (c) {
        case CrossKernel::Contour: return "contour";
        case CrossKernel::Direct: return "direct";
        case CrossKernel::Printed: return "printed";
    }
    return "?";
}

CrossKernel parse_cross_kernel(const std::string& name) {
    if (name == "contour") return CrossKernel::Contour;
    if (name == "direct") return CrossKernel::Direct;
    if (name == "printed") return CrossKernel::Printed;
    throw ValidationError("noise.cross_kernel", "expected contour | direct | printed, got '" + name + "'");
}

const char* factor_method_name(FactorMethod m) {
    return m == FactorMethod::Takagi ? "takagi" : "cholesky";
}

FactorMethod parse_factor_method(const std::string& name) {
    if (name == "takagi") return FactorMethod::Takagi;
    if (name == "cholesky") return FactorMethod::Cholesky;
    throw ValidationError("noise.factorization", "expected takagi | cholesky, got '" + name + "'");
}

NoiseCovariance build_covariance(const KernelContext& ctx, const TimeGrids& grids,
                                 const CovarianceOptions& options) {
    NoiseCovariance cov;
    cov.layout = NoiseLayout{ctx.size(), grids.n_t, grids.n_tau};
    const Eigen::Index dim = cov.dim();
    if (dim > options.dim_cap)
        throw CapExceeded("noise covariance dimension " + std::to_string(dim) + " exceeds cap " +
                          std::to_string(options.dim_cap));
    cov.sigma = CMatrix::Zero(dim, dim);
    const int m = ctx.size();
    if (m == 0) return cov;

    const double hbar = ctx.hbar;
    const cplx i_unit(0.0, 1.0);
    const NoiseLayout& lay = cov.layout;

    // Lag tables.
    std::vector<Matrix> lr(grids.n_t), li(grids.n_t), lmu(grids.n_tau);
    for (int k = 0; k < grids.n_t; ++k) {
        lr[k] = hbar * l_matrix(ctx, KernelKind::R, grids.t(k));
        li[k] = l_matrix(ctx, KernelKind::I, grids.t(k));
    }
    for (int k = 0; k < grids.n_tau; ++k) {
        // L^e(s) - L^o(s) = L(-i s) for s >= 0, evaluated in the stable form.
        lmu[k] = hbar * l_matrix_complex(ctx, 0.0, grids.tau(k)).real();
    }

    auto put = [&](Eigen::Index p, Eigen::Index q, cplx v) {
        cov.sigma(p, q) = v;
        cov.sigma(q, p) = v;
    };

    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k < grids.n_t; ++k) {
                for (int l = 0; l < grids.n_t; ++l) {
                    const int lag = std::abs(k - l);
                    put(lay.index(NoiseField::Eta, i, k), lay.index(NoiseField::Eta, j, l), lr[lag](i, j));
                    double theta = 0.0;
                    if (k > l) theta = 1.0;
                    else if (k == l) theta = options.theta_at_zero;
                    // L^I is odd; for k >= l the lag is non-negative.
                    const double lim = (k >= l) ? li[lag](i, j) : 0.0;
                    put(lay.index(NoiseField::Eta, i, k), lay.index(NoiseField::Nu, j, l),
                        2.0 * i_unit * theta * lim);
                }
            }
            for (int k = 0; k < grids.n_tau; ++k)
                for (int l = 0; l < grids.n_tau; ++l)
                    put(lay.index(NoiseField::MuBar, i, k), lay.index(NoiseField::MuBar, j, l),
                        lmu[std::abs(k - l)](i, j));
        }
    }

    for (int k = 0; k < grids.n_t; ++k) {
        const double t = grids.t(k);
        for (int l = 0; l < grids.n_tau; ++l) {
            const double tau = grids.tau(l);
            CMatrix block;
            switch (options.cross) {
                case CrossKernel::Contour:
                    block = hbar * l_matrix_complex(ctx, -t, tau);
                    break;
                case CrossKernel::Direct:
                    block = -hbar * l_matrix_complex(ctx, t, tau);
                    break;
                case CrossKernel::Printed: {
                    block = CMatrix::Zero(m, m);
                    for (int mode = 0; mode < m; ++mode) {
                        const cplx kv(k_printed_real(ctx, mode, t, tau), k_printed_imag(ctx, mode, t, tau));
                        block += kv * ctx.weight(mode).cast<cplx>();
                    }
                    block *= -hbar;
                    break;
                }
            }
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    put(lay.index(NoiseField::Eta, i, k), lay.index(NoiseField::MuBar, j, l), block(i, j));
        }
    }
    return cov;
}

bool eta_block_is_toeplitz(const NoiseCovariance& cov, double tol) {
    const NoiseLayout& lay = cov.layout;
    for (int i = 0; i < lay.n_sites; ++i)
        for (int j = 0; j < lay.n_sites; ++j)
            for (int k = 0; k < lay.n_t; ++k)
                for (int l = 0; l < lay.n_t; ++l) {
                    const cplx ref = (k >= l) ? cov.at(NoiseField::Eta, i, k - l, NoiseField::Eta, j, 0)
                                              : cov.at(NoiseField::Eta, i, 0, NoiseField::Eta, j, l - k);
                    if (std::abs(cov.at(NoiseField::Eta, i, k, NoiseField::Eta, j, l) - ref) > tol)
                        return false;
                }
    return true;
}

namespace {

double relative_residual(const CMatrix& a, const CMatrix& sigma) {
    const double scale = max_abs(sigma);
    if (scale == 0.0) return a.size() == 0 ? 0.0 : max_abs(a);
    const CMatrix prod = a * a.transpose();
    return max_abs(prod - sigma) / scale;
}

constexpr double kResidualTol = 1e-8;

}  // namespace

NoiseFactor factorize(const NoiseCovariance& cov, FactorMethod preferred) {
    NoiseFactor f;
    f.layout = cov.layout;
    const Eigen::Index n = cov.dim();
    if (n == 0 || max_abs(cov.sigma) == 0.0) {
        f.a.resize(n, 0);
        f.method = preferred;
        return f;
    }

    std::string why;
    if (preferred == FactorMethod::Takagi) {
        try {
            TakagiFactor t = takagi(cov.sigma);
            f.a = t.u * t.s.cwiseSqrt().asDiagonal();
            f.method = FactorMethod::Takagi;
            f.residual = relative_residual(f.a, cov.sigma);
            if (f.residual <= kResidualTol) return f;
            why = "takagi residual " + std::to_string(f.residual);
        } catch (const FactorizationFailure& e) {
            why = e.what();
        }
    }
    try {
        const double jitter = 1e-10 * max_abs(cov.sigma);
        f.a = symmetric_cholesky(cov.sigma, jitter);
        f.method = FactorMethod::Cholesky;
        f.residual = relative_residual(f.a, cov.sigma);
        if (f.residual <= kResidualTol) return f;
        why += (why.empty() ? "" : "; ") + std::string("cholesky residual ") + std::to_string(f.residual);
    } catch (const FactorizationFailure& e) {
        why += (why.empty() ? "" : "; ") + std::string(e.what());
    }
    throw FactorizationFailure(why);
}

NoiseBundle NoiseBundle::zeros(const NoiseLayout& layout) {
    NoiseBundle b;
    b.eta = CMatrix::Zero(layout.n_sites, layout.n_t);
    b.nu = CMatrix::Zero(layout.n_sites, layout.n_t);
    b.mu_bar = CMatrix::Zero(layout.n_sites, layout.n_tau);
    return b;
}

namespace rng {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64(index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

void standard_normals(std::uint64_t key, double* out, std::size_t n) {
    const std::uint64_t base = mix64(key);
    auto uniform = [&](std::uint64_t counter) {
        const std::uint64_t bits = mix64(base + counter * 0x9E3779B97F4A7C15ULL);
        return (double(bits >> 11) + 0.5) * 0x1.0p-53;  // (0, 1)
    };
    for (std::size_t p = 0; 2 * p < n; ++p) {
        const double r = std::sqrt(-2.0 * std::log(uniform(2 * p)));
        const double phi = 2.0 * std::numbers::pi * uniform(2 * p + 1);
        out[2 * p] = r * std::cos(phi);
        if (2 * p + 1 < n) out[2 * p + 1] = r * std::sin(phi);
    }
}

}  // namespace rng

NoiseBundle unpack(const NoiseLayout& lay, const CVector& z, std::uint64_t seed) {
    NoiseBundle b = NoiseBundle::zeros(lay);
    b.seed = seed;
    for (int i = 0; i < lay.n_sites; ++i) {
        for (int k = 0; k < lay.n_t; ++k) {
            b.eta(i, k) = z(lay.index(NoiseField::Eta, i, k));
            b.nu(i, k) = z(lay.index(NoiseField::Nu, i, k));
        }
        for (int k = 0; k < lay.n_tau; ++k) b.mu_bar(i, k) = z(lay.index(NoiseField::MuBar, i, k));
    }
    return b;
}

CVector pack(const NoiseLayout& lay, const NoiseBundle& b) {
    CVector z(lay.dim());
    for (int i = 0; i < lay.n_sites; ++i) {
        for (int k = 0; k < lay.n_t; ++k) {
            z(lay.index(NoiseField::Eta, i, k)) = b.eta(i, k);
            z(lay.index(NoiseField::Nu, i, k)) = b.nu(i, k);
        }
        for (int k = 0; k < lay.n_tau; ++k) z(lay.index(NoiseField::MuBar, i, k)) = b.mu_bar(i, k);
    }
    return z;
}

NoiseBundle sample(const NoiseFactor& factor, std::uint64_t seed) {
    const Eigen::Index r = factor.rank();
    if (r == 0) {
        NoiseBundle b = NoiseBundle::zeros(factor.layout);
        b.seed = seed;
        return b;
    }
    Vector w(r);
    rng::standard_normals(seed, w.data(), static_cast<std::size_t>(r));
    const CVector z = factor.a * w.cast<cplx>();
    return unpack(factor.layout, z, seed);
}

bool NoiseReport::pass() const {
    return std::all_of(blocks.begin(), blocks.end(), [](const BlockCheck& b) { return b.pass; });
}

double NoiseReport::worst_z() const {
    double w = 0.0;
    for (const auto& b : blocks) w = std::max(w, b.worst_z);
    return w;
}

namespace {

struct Pick {
    NoiseField field;
    int site;
    int k;
    Eigen::Index row;
};

std::vector<Pick> pick_points(const NoiseLayout& lay, int per_field) {
    std::vector<Pick> picks;
    for (NoiseField f : {NoiseField::Eta, NoiseField::Nu, NoiseField::MuBar}) {
        const int n = lay.n_times(f);
        const int count = std::min(n, std::max(per_field, 1));
        for (int i = 0; i < lay.n_sites; ++i) {
            int last = -1;
            for (int c = 0; c < count; ++c) {
                const int k = count == 1 ? 0
                                         : static_cast<int>(std::lround(double(c) * (n - 1) / (count - 1)));
                if (k == last) continue;
                last = k;
                picks.push_back({f, i, k, lay.index(f, i, k)});
            }
        }
    }
    return picks;
}

std::string block_name(NoiseField a, NoiseField b) {
    if (int(a) > int(b)) std::swap(a, b);
    return std::string(field_name(a)) + "-" + field_name(b);
}

// z-score of an estimate against a target given per-part standard errors.
// Deviations below `floor` are at the level of the factorization residual,
// where a a^T and sigma legitimately differ, and count as zero.
double zscore(cplx diff, double se_re, double se_im, double floor) {
    auto part = [&](double d, double se) {
        if (std::abs(d) <= floor) return 0.0;
        if (se > 0.0) return std::abs(d) / se;
        return std::numeric_limits<double>::infinity();
    };
    return std::max(part(diff.real(), se_re), part(diff.imag(), se_im));
}

}  // namespace

NoiseReport verify_empirical(const NoiseFactor& factor, const NoiseCovariance& cov,
                             std::size_t n_samples, std::uint64_t seed, int points_per_field,
                             bool keep_entries) {
    if (n_samples < 100) throw ValidationError("verify.n_samples", "needs at least 100 samples");
    NoiseReport report;
    report.n_samples = n_samples;
    const std::vector<Pick> picks = pick_points(factor.layout, points_per_field);
    const Eigen::Index p = static_cast<Eigen::Index>(picks.size());
    const Eigen::Index r = factor.rank();

    CMatrix a_sub(p, r);
    for (Eigen::Index q = 0; q < p; ++q) a_sub.row(q) = factor.a.row(picks[q].row);
    const Matrix ar = a_sub.real(), ai = a_sub.imag();

    // Running sums of products z_p z_q and of squared real/imag parts.
    Matrix sum_re = Matrix::Zero(p, p), sum_im = Matrix::Zero(p, p);
    Matrix sq_re = Matrix::Zero(p, p), sq_im = Matrix::Zero(p, p);

    const std::size_t batch = 512;
    Matrix w(r, static_cast<Eigen::Index>(batch));
    for (std::size_t s0 = 0; s0 < n_samples; s0 += batch) {
        const std::size_t nb = std::min(batch, n_samples - s0);
        const auto cols = static_cast<Eigen::Index>(nb);
        for (std::size_t s = 0; s < nb; ++s)
            rng::standard_normals(rng::derive(seed, s0 + s), w.col(static_cast<Eigen::Index>(s)).data(),
                                  static_cast<std::size_t>(r));
        const Matrix zr = ar * w.leftCols(cols);
        const Matrix zi = ai * w.leftCols(cols);
        for (Eigen::Index c = 0; c < cols; ++c) {
            for (Eigen::Index q2 = 0; q2 < p; ++q2) {
                const double br = zr(q2, c), bi = zi(q2, c);
                for (Eigen::Index q1 = 0; q1 <= q2; ++q1) {
                    const double re = zr(q1, c) * br - zi(q1, c) * bi;
                    const double im = zr(q1, c) * bi + zi(q1, c) * br;
                    sum_re(q1, q2) += re;
                    sum_im(q1, q2) += im;
                    sq_re(q1, q2) += re * re;
                    sq_im(q1, q2) += im * im;
                }
            }
        }
    }

    const double n = double(n_samples);
    const double floor = std::max(1e-12, 10.0 * factor.residual) * max_abs(cov.sigma);
    std::vector<BlockCheck> blocks;
    auto block_for = [&](const std::string& name) -> BlockCheck& {
        for (auto& b : blocks)
            if (b.name == name) return b;
        blocks.push_back(BlockCheck{name, 0.0, 0, true});
        return blocks.back();
    };
    for (const char* name : {"eta-eta", "eta-nu", "eta-mu_bar", "mu_bar-mu_bar", "nu-nu", "nu-mu_bar"})
        block_for(name);

    for (Eigen::Index q2 = 0; q2 < p; ++q2) {
        for (Eigen::Index q1 = 0; q1 <= q2; ++q1) {
            const cplx mean(sum_re(q1, q2) / n, sum_im(q1, q2) / n);
            const double var_re = std::max(0.0, (sq_re(q1, q2) / n - mean.real() * mean.real()) * n / (n - 1));
            const double var_im = std::max(0.0, (sq_im(q1, q2) / n - mean.imag() * mean.imag()) * n / (n - 1));
            const double se_re = std::sqrt(var_re / n), se_im = std::sqrt(var_im / n);
            const cplx target = cov.sigma(picks[q1].row, picks[q2].row);
            const double z = zscore(mean - target, se_re, se_im, floor);
            BlockCheck& b = block_for(block_name(picks[q1].field, picks[q2].field));
            b.worst_z = std::max(b.worst_z, z);
            ++b.n_entries;
            if (keep_entries)
                report.entries.push_back({picks[q1].field, picks[q2].field, picks[q1].site, picks[q1].k,
                                          picks[q2].site, picks[q2].k, target, mean, se_re, se_im, z});
        }
    }
    for (auto& b : blocks) b.pass = b.worst_z < report.threshold;
    report.blocks = std::move(blocks);
    return report;
}

double CharacteristicCheck::z() const {
    const double se = std::hypot(se_re, se_im);
    const double d = std::abs(mc_mean - target);
    if (se > 0.0) return d / se;
    return d <= 1e-13 ? 0.0 : std::numeric_limits<double>::infinity();
}

std::vector<CharacteristicCheck> characteristic_check(const NoiseFactor& factor,
                                                      const NoiseCovariance& cov,
                                                      const std::vector<CVector>& ks,
                                                      std::size_t n_samples, std::uint64_t seed) {
    const std::size_t nk = ks.size();
    std::vector<double> s_re(nk, 0.0), s_im(nk, 0.0), q_re(nk, 0.0), q_im(nk, 0.0);
    for (const auto& k : ks)
        if (k.size() != cov.dim()) throw DimensionMismatch("characteristic_check: test vector size");
    for (std::size_t s = 0; s < n_samples; ++s) {
        const NoiseBundle b = sample(factor, rng::derive(seed, s));
        const CVector z = pack(factor.layout, b);
        for (std::size_t v = 0; v < nk; ++v) {
            const cplx x = std::exp(cplx(0.0, 1.0) * z.cwiseProduct(ks[v]).sum());
            s_re[v] += x.real();
            s_im[v] += x.imag();
            q_re[v] += x.real() * x.real();
            q_im[v] += x.imag() * x.imag();
        }
    }
    const double n = double(n_samples);
    std::vector<CharacteristicCheck> out;
    for (std::size_t v = 0; v < nk; ++v) {
        CharacteristicCheck c;
        c.mc_mean = cplx(s_re[v] / n, s_im[v] / n);
        const double var_re = std::max(0.0, (q_re[v] / n - c.mc_mean.real() * c.mc_mean.real()) * n / (n - 1));
        const double var_im = std::max(0.0, (q_im[v] / n - c.mc_mean.imag() * c.mc_mean.imag()) * n / (n - 1));
        c.se_re = std::sqrt(var_re / n);
        c.se_im = std::sqrt(var_im / n);
        const cplx quad = ks[v].transpose() * cov.sigma * ks[v];
        c.target = std::exp(-0.5 * quad);
        out.push_back(c);
    }
    return out;
}

}  // namespace esln
