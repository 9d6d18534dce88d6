// test_model.cpp — Normal-mode transform, coupling maps and time-dependent Hamiltonians

#include "catch2/catch_amalgamated.hpp"

#include "esln/model.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace esln;
using Catch::Approx;

namespace {

Matrix lam2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

Matrix reconstruct_lambda(const NormalModes& nm, const BathSpec& b) {
    const Vector sm = b.masses.cwiseSqrt();
    return sm.asDiagonal() * nm.evecs * nm.omegas.cwiseAbs2().asDiagonal() * nm.evecs.transpose() *
           sm.asDiagonal();
}

}  // namespace

TEST_CASE("single mode diagonalization", "[model]") {
    const BathSpec b = test::bath({1.0}, Matrix::Constant(1, 1, 4.0));
    const NormalModes nm = diagonalize_bath(b);
    REQUIRE(nm.size() == 1);
    CHECK(nm.omegas(0) == Approx(2.0).epsilon(1e-14));
    CHECK(nm.evecs(0, 0) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("two coupled sites split into symmetric and antisymmetric modes", "[model]") {
    const BathSpec b = test::bath({1.0, 1.0}, lam2(2, -1, -1, 2));
    const NormalModes nm = diagonalize_bath(b);
    CHECK(nm.omegas(0) == Approx(1.0).epsilon(1e-13));
    CHECK(nm.omegas(1) == Approx(std::sqrt(3.0)).epsilon(1e-13));
    const double r = 1.0 / std::sqrt(2.0);
    // Largest-magnitude entry positive, first entry on ties.
    CHECK(nm.evecs(0, 0) == Approx(r).epsilon(1e-13));
    CHECK(nm.evecs(1, 0) == Approx(r).epsilon(1e-13));
    CHECK(nm.evecs(0, 1) == Approx(r).epsilon(1e-13));
    CHECK(nm.evecs(1, 1) == Approx(-r).epsilon(1e-13));
}

TEST_CASE("degenerate dynamical matrix keeps an orthonormal basis", "[model]") {
    const BathSpec b = test::bath({1.0, 4.0}, lam2(1, 0, 0, 4));
    const NormalModes nm = diagonalize_bath(b);
    CHECK(nm.omegas(0) == Approx(1.0).epsilon(1e-13));
    CHECK(nm.omegas(1) == Approx(1.0).epsilon(1e-13));
    CHECK((nm.evecs.transpose() * nm.evecs - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    for (int l = 0; l < 2; ++l) {
        Eigen::Index arg;
        nm.evecs.col(l).cwiseAbs().maxCoeff(&arg);
        CHECK(nm.evecs(arg, l) > 0.0);
    }
    CHECK((reconstruct_lambda(nm, b) - b.lambda).norm() / b.lambda.norm() < 1e-8);
}

TEST_CASE("random baths reconstruct the force-constant matrix", "[model]") {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 1 + trial % 5;
        Matrix a = Matrix::NullaryExpr(m, m, [&] { return u(gen) - 1.5; });
        Matrix lambda = a * a.transpose() + Matrix::Identity(m, m);
        std::vector<double> masses(m);
        for (double& x : masses) x = u(gen);
        const BathSpec b = test::bath(masses, lambda);
        const NormalModes nm = diagonalize_bath(b);
        CHECK((nm.evecs.transpose() * nm.evecs - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((reconstruct_lambda(nm, b) - lambda).norm() / lambda.norm() < 1e-8);
        for (int l = 1; l < m; ++l) CHECK(nm.omegas(l) >= nm.omegas(l - 1));
    }
}

TEST_CASE("bath validation errors", "[model]") {
    CHECK_THROWS_AS(diagonalize_bath(test::bath({1.0, 1.0}, lam2(2, -1, -0.5, 2))), AsymmetricInput);
    CHECK_THROWS_AS(diagonalize_bath(test::bath({1.0, 1.0}, lam2(1, 2, 2, 1))), NonPositiveMode);
    CHECK_THROWS_AS(diagonalize_bath(test::bath({1.0}, Matrix::Constant(1, 1, 0.0))), NonPositiveMode);
}

TEST_CASE("mode couplings", "[model]") {
    SystemSpec s;
    s.dim = 2;
    s.h0 = CMatrix::Zero(2, 2);

    SECTION("identity transformation for one unit-mass site") {
        s.couplings = {pauli::z()};
        const BathSpec b = test::bath({1.0}, Matrix::Constant(1, 1, 4.0));
        const auto g = mode_couplings(diagonalize_bath(b), b, s);
        REQUIRE(g.size() == 1);
        CHECK(max_abs(g[0] - pauli::z()) < 1e-14);
    }
    SECTION("two sites, one coupled") {
        s.couplings = {pauli::z(), CMatrix::Zero(2, 2)};
        const BathSpec b = test::bath({1.0, 1.0}, lam2(2, -1, -1, 2));
        const auto g = mode_couplings(diagonalize_bath(b), b, s);
        const CMatrix expect = pauli::z() / std::sqrt(2.0);
        CHECK(max_abs(g[0] - expect) < 1e-13);
        CHECK(max_abs(g[1] - expect) < 1e-13);
    }
    SECTION("zero couplings stay zero") {
        s.couplings = {CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)};
        const BathSpec b = test::bath({1.0, 2.0}, lam2(2, -1, -1, 2));
        for (const auto& g : mode_couplings(diagonalize_bath(b), b, s)) CHECK(max_abs(g) == 0.0);
    }
    SECTION("dimension mismatch") {
        s.couplings = {pauli::z()};
        const BathSpec b = test::bath({1.0, 1.0}, lam2(2, -1, -1, 2));
        CHECK_THROWS_AS(mode_couplings(diagonalize_bath(b), b, s), DimensionMismatch);
    }
}

TEST_CASE("site couplings invert mode couplings", "[model]") {
    std::mt19937_64 gen(5);
    for (int m = 1; m <= 4; ++m) {
        SystemSpec s;
        s.dim = 3;
        s.h0 = test::random_hermitian(gen, 3);
        std::vector<double> masses;
        for (int i = 0; i < m; ++i) {
            s.couplings.push_back(test::random_hermitian(gen, 3));
            masses.push_back(0.5 + i);
        }
        Matrix lambda = Matrix::Identity(m, m) * 3.0;
        for (int i = 0; i + 1 < m; ++i) lambda(i, i + 1) = lambda(i + 1, i) = -0.7;
        const BathSpec b = test::bath(masses, lambda);
        const NormalModes nm = diagonalize_bath(b);
        const auto g = mode_couplings(nm, b, s);
        for (const auto& gl : g) CHECK(is_hermitian(gl, 1e-12));
        const auto f = site_couplings(nm, b, g);
        for (int i = 0; i < m; ++i) CHECK(max_abs(f[i] - s.couplings[i]) < 1e-10);
    }
}

TEST_CASE("hamiltonian_at interpolates drives", "[model]") {
    SystemSpec s;
    s.dim = 2;
    s.h0 = pauli::x();

    SECTION("static") {
        CHECK(max_abs(hamiltonian_at(s, 0.37) - s.h0) == 0.0);
    }
    SECTION("constant drive") {
        s.drives.push_back(Drive{pauli::z(), {1.0, 1.0, 1.0, 1.0}, 0.5});
        for (double t : {0.0, 0.3, 1.2, 1.5}) CHECK(max_abs(hamiltonian_at(s, t) - s.h0 - pauli::z()) < 1e-15);
    }
    SECTION("midpoint") {
        s.drives.push_back(Drive{pauli::z(), {0.0, 1.0}, 1.0});
        CHECK(max_abs(hamiltonian_at(s, 0.5) - (s.h0 + 0.5 * pauli::z())) < 1e-15);
        CHECK_THROWS_AS(hamiltonian_at(s, 1.5), OutOfRange);
        CHECK_THROWS_AS(hamiltonian_at(s, -0.1), OutOfRange);
    }
    SECTION("Hermitian on every grid time") {
        std::mt19937_64 gen(3);
        s.drives.push_back(Drive{test::random_hermitian(gen, 2), {0.2, -1.0, 0.7, 3.0, 0.0}, 0.25});
        for (int k = 0; k <= 100; ++k) CHECK(is_hermitian(hamiltonian_at(s, k * 0.01), 1e-14));
    }
}

TEST_CASE("system validation", "[model]") {
    SystemSpec s = test::two_level(1.0, {0.3});
    CHECK_NOTHROW(s.validate());
    s.couplings[0](0, 1) = cplx(0.1, 0.0);
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = test::two_level(1.0, {0.3});
    s.h0(0, 1) = cplx(0.0, 0.2);
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = test::two_level(1.0, {0.3});
    s.couplings[0] = CMatrix::Identity(3, 3);
    CHECK_THROWS(s.validate());
    s = test::two_level(1.0, {0.3});
    s.beta = 0.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
}
