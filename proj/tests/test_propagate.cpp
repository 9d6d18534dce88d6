// test_propagate.cpp — Imaginary-time quench, real-time stochastic propagation and the step generator

#include "catch2/catch_amalgamated.hpp"

#include "esln/propagate.hpp"
#include "scenarios.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace esln;
using Catch::Approx;

namespace {

const cplx kI(0.0, 1.0);

NoiseBundle zero_bundle(int m, const TimeGrids& g) {
    return NoiseBundle::zeros(NoiseLayout{m, g.n_t, g.n_tau});
}

NoiseBundle random_bundle(std::mt19937_64& gen, int m, const TimeGrids& g, double scale, bool real_eta_only = false) {
    NoiseBundle b = zero_bundle(m, g);
    b.eta = scale * test::random_cmatrix(gen, m, g.n_t);
    if (real_eta_only) {
        b.eta = b.eta.real().cast<cplx>();
    } else {
        b.nu = scale * test::random_cmatrix(gen, m, g.n_t);
        b.mu_bar = scale * test::random_cmatrix(gen, m, g.n_tau);
    }
    return b;
}

CMatrix plus_state() {
    CMatrix r(2, 2);
    r << 0.5, 0.5, 0.5, 0.5;
    return r;
}

}  // namespace

TEST_CASE("step generator on Pauli examples", "[propagate]") {
    for (double hbar : {1.0, 0.5}) {
        SystemSpec s;
        s.dim = 2;
        s.hbar = hbar;
        s.h0 = CMatrix::Zero(2, 2);
        s.couplings = {pauli::x()};
        const CVector zero = CVector::Zero(1);
        const CVector one = CVector::Constant(1, 1.0);

        const CMatrix h = pauli::z() + 0.3 * pauli::y();
        CHECK(max_abs(commutator_step_generator(s, h, zero, zero, CMatrix::Identity(2, 2))) == 0.0);

        const CMatrix d_eta = commutator_step_generator(s, s.h0, one, zero, pauli::z());
        CHECK(max_abs(d_eta - 2.0 * pauli::y() / hbar) < 1e-14);

        const CVector nu = CVector::Constant(1, 2.0 / hbar);
        const CMatrix d_nu = commutator_step_generator(s, s.h0, zero, nu, pauli::x());
        CHECK(max_abs(d_nu - 2.0 * kI * CMatrix::Identity(2, 2) / hbar) < 1e-14);
    }
}

TEST_CASE("step generator equals the commutator form", "[propagate]") {
    std::mt19937_64 gen(4);
    SystemSpec s;
    s.dim = 3;
    s.hbar = 0.7;
    s.h0 = test::random_hermitian(gen, 3);
    s.couplings = {test::random_hermitian(gen, 3), test::random_hermitian(gen, 3)};
    const CVector eta = test::random_cmatrix(gen, 2, 1);
    const CVector nu = test::random_cmatrix(gen, 2, 1);
    const CMatrix rho = test::random_cmatrix(gen, 3, 3);
    CMatrix expect = s.h0 * rho - rho * s.h0;
    for (int i = 0; i < 2; ++i) {
        const CMatrix& f = s.couplings[i];
        expect -= eta(i) * (f * rho - rho * f);
        expect -= 0.5 * s.hbar * nu(i) * (f * rho + rho * f);
    }
    expect /= kI * s.hbar;
    CHECK(max_abs(commutator_step_generator(s, 0.0, eta, nu, rho) - expect) < 1e-13);
}

TEST_CASE("equilibrate without noise gives the Gibbs state", "[propagate]") {
    SECTION("two levels, closed form") {
        const double e = 1.3, beta = 1.0;
        SystemSpec s;
        s.dim = 2;
        s.beta = beta;
        s.h0 = CMatrix::Zero(2, 2);
        s.h0(1, 1) = e;
        s.couplings = {pauli::z()};
        const TimeGrids g = TimeGrids::make(1.0, 2, 201, beta);
        const Equilibrated q = equilibrate(s, zero_bundle(1, g), g);
        const double z = 1.0 + std::exp(-beta * e);
        CHECK(std::abs(q.rho0(0, 0) - 1.0 / z) < 1e-8);
        CHECK(std::abs(q.rho0(1, 1) - std::exp(-beta * e) / z) < 1e-8);
        CHECK(std::abs(q.rho0(0, 1)) < 1e-15);
        CHECK(std::abs(q.rho0.trace() - 1.0) < 1e-12);
        CHECK(std::abs(q.z_factor - z / 2.0) < 1e-8);
    }
    SECTION("random Hermitian, matrix-exponential reference") {
        std::mt19937_64 gen(10);
        SystemSpec s;
        s.dim = 4;
        s.hbar = 0.6;
        s.beta = 1.7;
        s.h0 = test::random_hermitian(gen, 4);
        const TimeGrids g = TimeGrids::make(1.0, 2, 401, s.hbar * s.beta);
        const Equilibrated q = equilibrate(s, zero_bundle(0, g), g);
        CHECK(max_abs(q.rho0 - test::expm_gibbs(s.h0, s.beta)) < 1e-8);
    }
    SECTION("infinite-temperature limit") {
        SystemSpec s = test::two_level(1.0, {0.3});
        s.beta = 1e-9;
        const TimeGrids g = TimeGrids::make(1.0, 2, 2, s.hbar * s.beta);
        const Equilibrated q = equilibrate(s, zero_bundle(1, g), g);
        CHECK(max_abs(q.rho0 - CMatrix::Identity(2, 2) / 2.0) < 1e-9);
    }
}

TEST_CASE("constant noise on an identity coupling only rescales the weight", "[propagate]") {
    std::mt19937_64 gen(11);
    SystemSpec s;
    s.dim = 3;
    s.hbar = 1.0;
    s.beta = 0.9;
    s.h0 = test::random_hermitian(gen, 3);
    s.couplings = {CMatrix::Identity(3, 3)};
    const TimeGrids g = TimeGrids::make(1.0, 2, 301, s.beta);
    NoiseBundle b = zero_bundle(1, g);
    const cplx mu(0.4, 0.25);
    b.mu_bar.setConstant(mu);
    const Equilibrated q = equilibrate(s, b, g);
    CHECK(max_abs(q.rho0 - test::expm_gibbs(s.h0, s.beta)) < 1e-8);
    // rho_bar(hbar beta) = exp(beta mu) exp(-beta H).
    const cplx expect = std::exp(s.beta * mu) * (-s.beta * s.h0).exp().trace() / 3.0;
    CHECK(std::abs(q.z_factor - expect) < 1e-8 * std::abs(expect));
}

TEST_CASE("divergence is reported", "[propagate]") {
    CMatrix m = CMatrix::Identity(2, 2);
    CHECK_NOTHROW(check_finite(m, "test", 0));
    m(0, 1) = 2e300;
    CHECK_THROWS_AS(check_finite(m, "test", 0), Diverged);
    m(0, 1) = cplx(std::nan(""), 0.0);
    CHECK_THROWS_AS(check_finite(m, "test", 0), Diverged);

    SystemSpec s = test::two_level(1.0, {1.0});
    s.couplings = {CMatrix::Identity(2, 2)};
    const TimeGrids g = TimeGrids::make(1.0, 2, 101, 1.0);
    NoiseBundle b = zero_bundle(1, g);
    b.mu_bar.setConstant(2000.0);
    CHECK_THROWS_AS(equilibrate(s, b, g), Diverged);
}

TEST_CASE("bundle shape is checked", "[propagate]") {
    const SystemSpec s = test::two_level(1.0, {0.3});
    const TimeGrids g = TimeGrids::make(1.0, 11, 5, 1.0);
    const TimeGrids other = TimeGrids::make(1.0, 12, 5, 1.0);
    CHECK_THROWS_AS(evolve(s, zero_bundle(1, other), g, plus_state()), DimensionMismatch);
    CHECK_THROWS_AS(equilibrate(s, zero_bundle(2, g), g), DimensionMismatch);
}

TEST_CASE("noise-free evolution is unitary", "[propagate]") {
    for (double hbar : {1.0, 0.8}) {
        SystemSpec s;
        s.dim = 2;
        s.hbar = hbar;
        s.h0 = pauli::z();
        s.couplings = {0.5 * pauli::x()};
        const TimeGrids g = TimeGrids::make(3.0, 601, 2, 1.0);
        const TrajectoryOutput out = evolve(s, zero_bundle(1, g), g, plus_state());
        CHECK(out.rho_series.size() == 601);
        CHECK(out.rho_series.front() == plus_state());
        for (int k : {0, 100, 333, 600}) {
            const double t = g.t(k);
            CHECK(std::abs(out.rho_series[k](0, 1) - 0.5 * std::exp(-2.0 * kI * t / hbar)) < 1e-8);
        }
        const CMatrix u = test::expm_unitary(s.h0, g.t_f(), hbar);
        CHECK(max_abs(out.rho_series.back() - u * plus_state() * u.adjoint()) < 1e-8);
    }
}

TEST_CASE("real eta without nu keeps trajectories Hermitian and trace-preserving", "[propagate]") {
    std::mt19937_64 gen(12);
    SystemSpec s = test::two_level(1.0, {0.4, 0.7});
    s.couplings[1] = 0.7 * pauli::x();
    const TimeGrids g = TimeGrids::make(2.0, 201, 2, 1.0);
    const NoiseBundle b = random_bundle(gen, 2, g, 1.0, true);
    const TrajectoryOutput out = evolve(s, b, g, plus_state());
    for (const auto& r : out.rho_series) {
        CHECK(max_abs(r - r.adjoint()) < 1e-12);
        CHECK(std::abs(r.trace() - 1.0) < 1e-12);
    }
}

TEST_CASE("zero couplings ignore the noise", "[propagate]") {
    std::mt19937_64 gen(13);
    SystemSpec s;
    s.dim = 2;
    s.h0 = 0.4 * pauli::x() + pauli::z();
    s.couplings = {CMatrix::Zero(2, 2)};
    const TimeGrids g = TimeGrids::make(2.0, 101, 11, 1.0);
    const TrajectoryOutput noisy = evolve(s, random_bundle(gen, 1, g, 2.0), g, plus_state());
    const TrajectoryOutput clean = evolve(s, zero_bundle(1, g), g, plus_state());
    for (int k = 0; k < g.n_t; ++k) CHECK(max_abs(noisy.rho_series[k] - clean.rho_series[k]) < 1e-15);
}

TEST_CASE("evolution is linear in the initial density", "[propagate]") {
    std::mt19937_64 gen(14);
    SystemSpec s = test::two_level(1.0, {0.5});
    const TimeGrids g = TimeGrids::make(2.0, 81, 11, 1.0);
    const NoiseBundle b = random_bundle(gen, 1, g, 1.0);
    const CMatrix ra = test::random_cmatrix(gen, 2, 2);
    const CMatrix rb = test::random_cmatrix(gen, 2, 2);
    const cplx alpha(0.3, -1.2);
    const auto sum = evolve(s, b, g, alpha * ra + rb);
    const auto ea = evolve(s, b, g, ra);
    const auto eb = evolve(s, b, g, rb);
    for (int k = 0; k < g.n_t; ++k) {
        const CMatrix lin = alpha * ea.rho_series[k] + eb.rho_series[k];
        CHECK(max_abs(sum.rho_series[k] - lin) <= 1e-12 * std::max(1.0, max_abs(lin)));
    }
}

TEST_CASE("split propagators agree with the direct integration", "[propagate]") {
    std::mt19937_64 gen(15);
    SystemSpec s = test::two_level(1.0, {0.5, 0.3});
    s.couplings[1] = 0.3 * pauli::x();
    s.drives.push_back(Drive{pauli::z(), {0.0, 0.5, -0.5, 0.2}, 1.0});
    const TimeGrids g = TimeGrids::make(3.0, 601, 11, 1.0);
    const NoiseBundle b = random_bundle(gen, 2, g, 0.5);
    const auto direct = evolve(s, b, g, plus_state());
    const auto split = evolve_split(s, b, g, plus_state());
    CHECK(max_abs(direct.rho_series.back() - split.rho_series.back()) < 1e-8);
    CHECK(split.rho_series.front() == plus_state());
}

TEST_CASE("trace changes at the rate i sum nu Tr(f rho)", "[propagate]") {
    SystemSpec s = test::two_level(1.0, {0.5, 0.4});
    s.couplings[1] = 0.4 * pauli::x();
    const int n = 2001;
    const TimeGrids g = TimeGrids::make(2.0, n, 2, 1.0);
    NoiseBundle b = zero_bundle(2, g);
    for (int k = 0; k < n; ++k) {
        const double t = g.t(k);
        // Affine noises are reproduced exactly by the linear interpolation inside a step.
        b.eta(0, k) = 0.3 - 0.2 * t;
        b.eta(1, k) = cplx(0.2 * t, -0.1);
        b.nu(0, k) = cplx(0.6 * t - 0.3, 0.2);
        b.nu(1, k) = cplx(0.5, 0.3 * t);
    }
    const auto out = evolve(s, b, g, plus_state());
    std::vector<cplx> rate(n);
    for (int k = 0; k < n; ++k) {
        cplx r = 0.0;
        for (int i = 0; i < 2; ++i) r += b.nu(i, k) * (s.couplings[i] * out.rho_series[k]).trace();
        rate[k] = kI * r;
    }
    // Composite Simpson over each pair of intervals.
    cplx integral = 0.0;
    double worst = 0.0;
    for (int k = 0; k + 2 < n; k += 2) {
        integral += g.dt / 3.0 * (rate[k] + 4.0 * rate[k + 1] + rate[k + 2]);
        const cplx drift = out.rho_series[k + 2].trace() - out.rho_series[0].trace();
        worst = std::max(worst, std::abs(drift - integral));
    }
    CHECK(worst < 1e-8);
    // The trace does move: single trajectories are not trace-preserving.
    CHECK(std::abs(out.rho_series.back().trace() - 1.0) > 1e-2);
}

TEST_CASE("RK4 order under step halving", "[propagate]") {
    const double factor = test::rk4_order_factor();
    INFO("factor " << factor);
    CHECK(factor >= 12.0);
    CHECK(factor <= 20.0);
}
