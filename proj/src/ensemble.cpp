// ensemble.cpp — Trajectory workers, pairwise reduction and ensemble statistics

#include "esln/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

namespace esln {

const char* normalize_name(NormalizeMode m) {
    return m == NormalizeMode::Ensemble ? "ensemble" : "per-trajectory";
}

NormalizeMode parse_normalize(const std::string& name) {
    if (name == "ensemble") return NormalizeMode::Ensemble;
    if (name == "per-trajectory") return NormalizeMode::PerTrajectory;
    throw ValidationError("ensemble.normalize", "expected ensemble | per-trajectory, got '" + name + "'");
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        case Verdict::Inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

Pipeline Pipeline::prepare(const SystemSpec& system, const BathSpec& bath, double t_f, int n_t,
                           int n_tau, const CovarianceOptions& cov_options, FactorMethod method) {
    system.validate();
    bath.validate();
    if (system.n_sites() != bath.size())
        throw DimensionMismatch(std::to_string(system.n_sites()) + " couplings for " +
                                std::to_string(bath.size()) + " bath sites");
    Pipeline p;
    p.system = system;
    p.bath = bath;
    p.modes = diagonalize_bath(bath);
    p.kernels = make_kernel_context(p.modes, bath, system);
    p.grids = TimeGrids::make(t_f, n_t, n_tau, system.hbar * system.beta);
    for (std::size_t k = 0; k < system.drives.size(); ++k)
        if (system.drives[k].span() < p.grids.t_f() * (1.0 - 1e-12))
            throw ValidationError("system.drives[" + std::to_string(k) + "].amplitude",
                                  "samples do not cover [0, t_f]");
    p.covariance = build_covariance(p.kernels, p.grids, cov_options);
    if (!eta_block_is_toeplitz(p.covariance))
        throw FactorizationFailure("eta-eta covariance block is not stationary");
    p.factor = factorize(p.covariance, method);
    return p;
}

// ---------------------------------------------------------------------------
// Moments

Moments Moments::zeros(std::size_t n_elements) {
    Moments m;
    m.mean.assign(n_elements * kWidth, 0.0);
    m.m2.assign(n_elements * kPairs, 0.0);
    return m;
}

void Moments::add(const double* x) {
    count += 1.0;
    const double inv = 1.0 / count;
    const std::size_t n = n_elements();
    double delta[kWidth];
    for (std::size_t e = 0; e < n; ++e) {
        double* mu = &mean[e * kWidth];
        double* c = &m2[e * kPairs];
        const double* xe = x + e * kWidth;
        for (int a = 0; a < kWidth; ++a) {
            delta[a] = xe[a] - mu[a];
            mu[a] += delta[a] * inv;
        }
        int p = 0;
        for (int a = 0; a < kWidth; ++a)
            for (int b = a; b < kWidth; ++b) c[p++] += delta[a] * (xe[b] - mu[b]);
    }
}

Moments Moments::merge(const Moments& a, const Moments& b) {
    if (a.count == 0.0) return b;
    if (b.count == 0.0) return a;
    Moments out = Moments::zeros(a.n_elements());
    out.count = a.count + b.count;
    const double wb = b.count / out.count;
    const double cross = a.count * b.count / out.count;
    const std::size_t n = a.n_elements();
    double delta[kWidth];
    for (std::size_t e = 0; e < n; ++e) {
        for (int k = 0; k < kWidth; ++k) {
            const std::size_t i = e * kWidth + k;
            delta[k] = b.mean[i] - a.mean[i];
            out.mean[i] = a.mean[i] + delta[k] * wb;
        }
        int p = 0;
        for (int r = 0; r < kWidth; ++r)
            for (int c = r; c < kWidth; ++c, ++p) {
                const std::size_t i = e * kPairs + p;
                out.m2[i] = a.m2[i] + b.m2[i] + delta[r] * delta[c] * cross;
            }
    }
    return out;
}

void PairwiseReducer::push(Moments block) {
    stack_.push_back({0, std::move(block)});
    while (stack_.size() >= 2 && stack_[stack_.size() - 1].level == stack_[stack_.size() - 2].level) {
        Node right = std::move(stack_.back());
        stack_.pop_back();
        Node& left = stack_.back();
        left.moments = Moments::merge(left.moments, right.moments);
        left.level += 1;
    }
}

Moments PairwiseReducer::result(std::size_t n_elements) const {
    if (stack_.empty()) return Moments::zeros(n_elements);
    Moments acc = stack_.back().moments;
    for (std::size_t k = stack_.size() - 1; k-- > 0;) acc = Moments::merge(stack_[k].moments, acc);
    return acc;
}

// ---------------------------------------------------------------------------
// Trajectories

TrajectorySample run_trajectory(const Pipeline& pipeline, const NoiseBundle& bundle,
                                NormalizeMode normalize, bool imaginary_only) {
    const Equilibrated eq = equilibrate(pipeline.system, bundle, pipeline.grids);
    TrajectorySample s;
    s.z_factor = eq.z_factor;
    s.weight = normalize == NormalizeMode::Ensemble ? eq.z_factor : cplx(1.0);
    if (imaginary_only) {
        s.x.push_back(s.weight * eq.rho0);
        return s;
    }
    TrajectoryOutput out = evolve(pipeline.system, bundle, pipeline.grids, eq.rho0);
    s.x = std::move(out.rho_series);
    if (normalize == NormalizeMode::Ensemble)
        for (auto& m : s.x) m *= s.weight;
    return s;
}

namespace {

struct BlockResult {
    Moments moments;
    Moments z_moments;
    std::size_t n_ok{0};
    std::vector<FailureRecord> failures;
};

class BlockRunner {
public:
    BlockRunner(const Pipeline& p, const EnsembleOptions& o)
        : pipeline_(p), options_(o), a_re_(p.factor.a.real()), a_im_(p.factor.a.imag()) {
        n_times_ = o.imaginary_only ? 1 : p.grids.n_t;
        const std::size_t d = static_cast<std::size_t>(p.system.dim);
        n_elements_ = static_cast<std::size_t>(n_times_) * d * d;
    }

    std::size_t n_elements() const { return n_elements_; }
    int n_times() const { return n_times_; }

    BlockResult run(std::size_t block) const {
        const std::size_t first = block * options_.block_size;
        const std::size_t count = std::min(options_.block_size, options_.n_traj - first);
        BlockResult res;
        res.moments = Moments::zeros(n_elements_);
        res.z_moments = Moments::zeros(1);

        const Eigen::Index r = pipeline_.factor.rank();
        Matrix w(r, static_cast<Eigen::Index>(count));
        std::vector<std::uint64_t> seeds(count);
        for (std::size_t s = 0; s < count; ++s) {
            seeds[s] = rng::derive(options_.master_seed, first + s);
            rng::standard_normals(seeds[s], w.col(static_cast<Eigen::Index>(s)).data(),
                                  static_cast<std::size_t>(r));
        }
        Matrix zr, zi;
        if (r > 0) {
            zr = a_re_ * w;
            zi = a_im_ * w;
        }

        const int d = pipeline_.system.dim;
        std::vector<double> row(n_elements_ * Moments::kWidth);
        for (std::size_t s = 0; s < count; ++s) {
            NoiseBundle bundle;
            if (r > 0) {
                const auto c = static_cast<Eigen::Index>(s);
                CVector z(zr.rows());
                z.real() = zr.col(c);
                z.imag() = zi.col(c);
                bundle = unpack(pipeline_.factor.layout, z, seeds[s]);
            } else {
                bundle = NoiseBundle::zeros(pipeline_.factor.layout);
                bundle.seed = seeds[s];
            }
            TrajectorySample ts;
            try {
                ts = run_trajectory(pipeline_, bundle, options_.normalize, options_.imaginary_only);
            } catch (const Diverged& e) {
                res.failures.push_back({first + s, e.what()});
                continue;
            }
            std::size_t e = 0;
            for (int k = 0; k < n_times_; ++k) {
                const CMatrix& x = ts.x[static_cast<std::size_t>(k)];
                const CMatrix& x0 = ts.x[0];
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j, ++e) {
                        double* v = &row[e * Moments::kWidth];
                        v[0] = x(i, j).real();
                        v[1] = x(i, j).imag();
                        v[2] = ts.weight.real();
                        v[3] = ts.weight.imag();
                        const cplx y = x(i, j) - x0(i, j);
                        v[4] = y.real();
                        v[5] = y.imag();
                    }
            }
            res.moments.add(row.data());
            const double zrow[Moments::kWidth] = {ts.z_factor.real(), ts.z_factor.imag(), 0, 0, 0, 0};
            res.z_moments.add(zrow);
            ++res.n_ok;
        }
        return res;
    }

private:
    const Pipeline& pipeline_;
    const EnsembleOptions& options_;
    Matrix a_re_, a_im_;
    int n_times_{1};
    std::size_t n_elements_{0};
};

// SE of the real and imaginary parts of mean(U) / mean(T) for the
// numerator at positions (ur, ui) of the moment vector; T sits at (2, 3).
struct RatioStats {
    cplx value;
    double se_re, se_im;
};

RatioStats ratio_stats(const Moments& m, std::size_t e, int ur, int ui) {
    const double* mu = &m.mean[e * Moments::kWidth];
    const double* c2 = &m.m2[e * Moments::kPairs];
    auto cov = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        // Upper-triangle row-major offset of (a, b).
        const int off = a * Moments::kWidth - a * (a - 1) / 2 + (b - a);
        return c2[off] / (m.count - 1.0);
    };
    const cplx u(mu[ur], mu[ui]);
    const cplx t(mu[2], mu[3]);
    RatioStats out;
    out.value = u / t;
    const cplx alpha = 1.0 / t;
    const cplx beta = -out.value / t;
    const int idx[4] = {ur, ui, 2, 3};
    const double g_re[4] = {alpha.real(), -alpha.imag(), beta.real(), -beta.imag()};
    const double g_im[4] = {alpha.imag(), alpha.real(), beta.imag(), beta.real()};
    double v_re = 0.0, v_im = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const double cab = cov(idx[a], idx[b]);
            v_re += g_re[a] * g_re[b] * cab;
            v_im += g_im[a] * g_im[b] * cab;
        }
    out.se_re = std::sqrt(std::max(v_re, 0.0) / m.count);
    out.se_im = std::sqrt(std::max(v_im, 0.0) / m.count);
    return out;
}

void check_failures(std::size_t n_failed, const EnsembleOptions& o) {
    if (double(n_failed) > o.max_failure_fraction * double(o.n_traj))
        throw TooManyFailures(std::to_string(n_failed) + " of " + std::to_string(o.n_traj) +
                              " trajectories diverged");
}

}  // namespace

EnsembleResult run_ensemble(const Pipeline& pipeline, const EnsembleOptions& options,
                            const EnsembleCheckpoint* resume) {
    if (options.n_traj < 2) throw ValidationError("ensemble.n_traj", "must be >= 2");
    if (options.block_size < 1) throw ValidationError("ensemble.block_size", "must be >= 1");
    const BlockRunner runner(pipeline, options);
    const std::size_t n_blocks = (options.n_traj + options.block_size - 1) / options.block_size;

    PairwiseReducer reducer, z_reducer;
    EnsembleCheckpoint state;
    state.z_moments = Moments::zeros(1);
    if (resume) {
        state = *resume;
        reducer.restore(state.nodes);
        if (state.next_block > n_blocks) throw ValidationError("checkpoint", "block index past the end");
        for (const auto& n : state.nodes)
            if (n.moments.n_elements() != runner.n_elements())
                throw ValidationError("checkpoint", "accumulator shape does not match the configuration");
    }

    std::size_t merged_traj = state.next_block * options.block_size;
    auto absorb = [&](BlockResult&& br) {
        reducer.push(std::move(br.moments));
        state.z_moments = Moments::merge(state.z_moments, br.z_moments);
        state.n_ok += br.n_ok;
        for (auto& f : br.failures) state.failures.push_back(std::move(f));
        check_failures(state.failures.size(), options);
        ++state.next_block;
        const std::size_t before = merged_traj;
        merged_traj = std::min(options.n_traj, state.next_block * options.block_size);
        if (options.checkpoint_interval > 0 && options.on_checkpoint &&
            merged_traj / options.checkpoint_interval != before / options.checkpoint_interval) {
            state.nodes = reducer.nodes();
            options.on_checkpoint(state);
        }
    };

    const int workers = std::max(1, options.workers);
    if (workers == 1) {
        for (std::size_t b = state.next_block; b < n_blocks;) {
            absorb(runner.run(b));
            b = state.next_block;
        }
    } else {
        std::atomic<std::size_t> next{state.next_block};
        std::atomic<bool> stop{false};
        std::mutex mu;
        std::condition_variable cv;
        std::map<std::size_t, BlockResult> done;
        std::exception_ptr error;

        auto work = [&]() {
            while (!stop.load()) {
                const std::size_t b = next.fetch_add(1);
                if (b >= n_blocks) break;
                try {
                    BlockResult br = runner.run(b);
                    std::lock_guard<std::mutex> lock(mu);
                    done.emplace(b, std::move(br));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!error) error = std::current_exception();
                    stop = true;
                }
                cv.notify_all();
            }
        };
        std::vector<std::thread> pool;
        for (int k = 0; k < workers; ++k) pool.emplace_back(work);

        std::exception_ptr reduce_error;
        try {
            while (state.next_block < n_blocks) {
                std::unique_lock<std::mutex> lock(mu);
                cv.wait(lock, [&] { return error || done.count(state.next_block) > 0; });
                if (error) break;
                BlockResult br = std::move(done.at(state.next_block));
                done.erase(state.next_block);
                lock.unlock();
                absorb(std::move(br));
            }
        } catch (...) {
            reduce_error = std::current_exception();
        }
        stop = true;
        for (auto& t : pool) t.join();
        if (reduce_error) std::rethrow_exception(reduce_error);
        if (error) std::rethrow_exception(error);
    }

    const Moments total = reducer.result(runner.n_elements());
    EnsembleResult res;
    res.dim = pipeline.system.dim;
    res.n_traj = options.n_traj;
    res.n_ok = state.n_ok;
    res.n_failed = state.failures.size();
    res.failures = state.failures;
    res.master_seed = options.master_seed;
    res.normalize = options.normalize;
    if (res.n_ok < 2) throw TooManyFailures("fewer than two trajectories succeeded");

    const int d = res.dim;
    const int nt = runner.n_times();
    std::size_t e = 0;
    for (int k = 0; k < nt; ++k) {
        res.times.push_back(options.imaginary_only ? 0.0 : pipeline.grids.t(k));
        CMatrix mean(d, d);
        Matrix se_re(d, d), se_im(d, d), dse_re(d, d), dse_im(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j, ++e) {
                const RatioStats x = ratio_stats(total, e, 0, 1);
                const RatioStats y = ratio_stats(total, e, 4, 5);
                mean(i, j) = x.value;
                se_re(i, j) = x.se_re;
                se_im(i, j) = x.se_im;
                dse_re(i, j) = y.se_re;
                dse_im(i, j) = y.se_im;
            }
        res.mean_rho.push_back(mean);
        res.se_re.push_back(se_re);
        res.se_im.push_back(se_im);
        res.stderr_rho.push_back((se_re.cwiseProduct(se_re) + se_im.cwiseProduct(se_im)).cwiseSqrt());
        res.drift_se_re.push_back(dse_re);
        res.drift_se_im.push_back(dse_im);
    }
    res.mean_rho0 = res.mean_rho.front();

    const Moments& zm = state.z_moments;
    res.z_mean = cplx(zm.mean[0], zm.mean[1]);
    if (zm.count > 1.0) {
        res.z_se_re = std::sqrt(zm.m2[0] / (zm.count - 1.0) / zm.count);
        res.z_se_im = std::sqrt(zm.m2[Moments::kWidth] / (zm.count - 1.0) / zm.count);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

double zscore(double deviation, double se) {
    if (se > 0.0) return deviation / se;
    return deviation <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

PhysicalityReport hermiticity_trace_report(const EnsembleResult& result, double threshold,
                                           std::size_t min_trajectories) {
    PhysicalityReport rep;
    rep.threshold = threshold;
    rep.min_trajectories = min_trajectories;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    const int d = result.dim;
    for (std::size_t k = 0; k < result.mean_rho.size(); ++k) {
        const CMatrix& r = result.mean_rho[k];
        const Matrix& sr = result.se_re[k];
        const Matrix& si = result.se_im[k];
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                // Standard errors of R_ij and R_ji added in quadrature.
                const cplx dev = r(i, j) - std::conj(r(j, i));
                const double z_re = zscore(std::abs(dev.real()), std::hypot(sr(i, j), sr(j, i)));
                const double z_im = zscore(std::abs(dev.imag()), std::hypot(si(i, j), si(j, i)));
                rep.hermiticity_z = std::max({rep.hermiticity_z, z_re, z_im});
            }
        const cplx tr = r.trace() - 1.0;
        double v_re = 0.0, v_im = 0.0;
        for (int i = 0; i < d; ++i) {
            v_re += sr(i, i) * sr(i, i);
            v_im += si(i, i) * si(i, i);
        }
        rep.trace_z = std::max({rep.trace_z, zscore(std::abs(tr.real()), std::sqrt(v_re)),
                                zscore(std::abs(tr.imag()), std::sqrt(v_im))});
        const CMatrix herm = 0.5 * (r + r.adjoint());
        Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
        rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues().minCoeff());
    }
    const bool bad = !(rep.hermiticity_z < threshold) || !(rep.trace_z < threshold);
    if (!bad) rep.verdict = Verdict::Pass;
    else if (result.n_ok < min_trajectories) rep.verdict = Verdict::Inconclusive;
    else rep.verdict = Verdict::Fail;
    return rep;
}

StationarityReport stationarity_report(const EnsembleResult& result, double threshold) {
    StationarityReport rep;
    rep.threshold = threshold;
    const int d = result.dim;
    const CMatrix& r0 = result.mean_rho.front();
    for (std::size_t k = 1; k < result.mean_rho.size(); ++k) {
        const CMatrix diff = result.mean_rho[k] - r0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const double z = std::max(zscore(std::abs(diff(i, j).real()), result.drift_se_re[k](i, j)),
                                          zscore(std::abs(diff(i, j).imag()), result.drift_se_im[k](i, j)));
                if (z > rep.max_z) {
                    rep.max_z = z;
                    rep.worst_t = static_cast<int>(k);
                    rep.worst_row = i;
                    rep.worst_col = j;
                }
            }
    }
    return rep;
}

}  // namespace esln
