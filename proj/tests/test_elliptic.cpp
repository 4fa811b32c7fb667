#include <random>

#include "heunlab/elliptic.hpp"
#include "heunlab/quadrature.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace heunlab;
using testutil::I;
using testutil::rel;

namespace
{

// Frozen from the 50-digit theta-series oracle (oracle::e1).
constexpr double kE1SquareLattice = 6.8751858180203728275;
// Frozen from the Laurent series with Eisenstein invariants (oracle::wp_laurent).
const complex kWpSquare{3.3721036737358201254, -5.9914186004556423957};
// Frozen from oracle::sigma / oracle::zeta at 50 digits.
const complex kPhi0{-1.1869436742741541566, -1.7054147063311439116};

} // namespace

TEST_CASE("oracles reproduce the frozen reference values")
{
    using namespace oracle;
    CHECK(std::abs(to_double(e1(oracle::I())) - complex(kE1SquareLattice)) < 1e-15);
    cplx z(real("0.3"), real("0.2"));
    CHECK(std::abs(to_double(wp_laurent(z, oracle::I())) - kWpSquare) < 1e-15);
    cplx tau2(real(0), real("1.2"));
    cplx x(real("0.4")), al(real("0.1"), real("0.2"));
    cplx phi = sigma(x - al, tau2) / sigma(x, tau2) * exp(zeta(al, tau2) * x);
    CHECK(std::abs(to_double(phi) - kPhi0) < 1e-15);
}

TEST_CASE("lattice_from_tau: square lattice")
{
    auto L = lattice_from_tau(I);
    CHECK(std::abs(L.g3) < 1e-14 * std::pow(std::abs(L.e1), 3));
    CHECK(std::abs(L.e2) < 1e-13);
    CHECK(std::abs(L.e1 + L.e2 + L.e3) < 1e-13);
    CHECK(std::abs(L.e1 - kE1SquareLattice) < 1e-12);
    CHECK(std::abs(L.e1.imag()) < 1e-14);
    CHECK(std::abs(L.t - 2.0) < 1e-13);
}

TEST_CASE("lattice_from_tau: errors")
{
    CHECK_THROWS_AS(lattice_from_tau(complex(0.3, 0.0)), DomainError);
    CHECK_THROWS_AS(lattice_from_tau(complex(0.3, -1.0)), DomainError);
    CHECK_THROWS_AS(lattice_from_tau(complex(0.3, 1e-12)), PrecisionError);
}

TEST_CASE("lattice invariants over random tau")
{
    std::mt19937_64 rng(11);
    for (int k = 0; k < 50; ++k) {
        complex tau = testutil::random_tau(rng);
        auto L = lattice_from_tau(tau);
        double s = std::max(1.0, std::abs(L.e1));
        CHECK(std::abs(L.e1 + L.e2 + L.e3) < 1e-12 * s);
        CHECK(std::abs(L.g2 + 4.0 * (L.e1 * L.e2 + L.e2 * L.e3 + L.e3 * L.e1)) < 1e-12 * s * s);
        CHECK(std::abs(L.g3 - 4.0 * L.e1 * L.e2 * L.e3) < 1e-12 * s * s * s);
        complex legendre = L.eta1 * L.omega3 - L.eta3 * L.omega1 - std::numbers::pi * I / 2.0;
        CHECK(std::abs(legendre) < 1e-12);
        CHECK(std::abs(L.t - (L.e3 - L.e1) / (L.e2 - L.e1)) < 1e-12 * std::abs(L.t));
    }
}

TEST_CASE("lattice_from_tau: non-reduced tau agrees with the reduced frame")
{
    // tau and tau + 2 give the same lattice; tau -> -1/tau rescales it.
    complex tau{0.23, 0.91};
    auto A = lattice_from_tau(tau);
    auto B = lattice_from_tau(tau + 2.0);
    CHECK(rel(A.e1, B.e1) < 1e-12);
    CHECK(rel(A.e3, B.e3) < 1e-12);
    // Close to the real axis the Legendre relation still holds.
    auto C = lattice_from_tau(complex{0.37, 0.02});
    complex legendre = C.eta1 * C.omega3 - C.eta3 * C.omega1 - std::numbers::pi * I / 2.0;
    CHECK(std::abs(legendre) < 1e-10);
}

TEST_CASE("tau_from_t: round trip at tau = i")
{
    auto L = lattice_from_tau(I);
    CHECK(std::abs(tau_from_t(L.t) - I) < 1e-12);
}

TEST_CASE("tau_from_t: real t > 1 lies on the imaginary axis (bisection oracle)")
{
    // t is real and decreasing in Im tau along the imaginary axis.
    for (double target : {1.3, 2.0, 3.0, 7.5}) {
        double lo = 0.3, hi = 6.0;
        for (int k = 0; k < 200; ++k) {
            double mid = 0.5 * (lo + hi);
            double tm = lattice_from_tau(complex(0.0, mid)).t.real();
            (tm > target ? lo : hi) = mid;
        }
        complex expected{0.0, 0.5 * (lo + hi)};
        CHECK(std::abs(tau_from_t(target) - expected) < 1e-10);
    }
}

TEST_CASE("tau_from_t: t = 1/2 lies on the Gamma(2) boundary at 1 + i")
{
    complex tau = tau_from_t(0.5);
    CHECK(std::abs(tau - complex(1.0, 1.0)) < 1e-11);
    CHECK(std::abs(lattice_from_tau(tau).t - 0.5) < 1e-12);
}

TEST_CASE("tau_from_t: t near 1 gives large Im tau (q-expansion oracle)")
{
    // t - 1 = 16 q + 128 q^2 + O(q^3), q = exp(pi i tau)
    for (double eps : {1e-4, 1e-6, 1e-9}) {
        complex t = 1.0 + eps;
        complex tau = tau_from_t(t);
        // invert the two-term expansion for q
        double q = (-16.0 + std::sqrt(256.0 + 512.0 * eps)) / 256.0;
        complex expected = std::log(complex(q)) / (std::numbers::pi * I);
        CHECK(std::abs(tau - expected) < 1e-6);
        CHECK(tau.imag() > 2.0);
    }
}

TEST_CASE("tau_from_t: generic complex t round trips and lies in the fundamental domain")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int k = 0; k < 40; ++k) {
        complex t{u(rng), u(rng)};
        if (std::abs(t) < 0.05 || std::abs(t - 1.0) < 0.05)
            continue;
        complex tau = tau_from_t(t);
        CHECK(std::abs(lattice_from_tau(tau).t - t) < 1e-10 * std::max(1.0, std::abs(t)));
        CHECK(std::abs(tau.real()) <= 1.0 + 1e-12);
        CHECK(std::abs(tau - 0.5) >= 0.5 - 1e-12);
        CHECK(std::abs(tau + 0.5) >= 0.5 - 1e-12);
    }
    CHECK_THROWS_AS(tau_from_t(0.0), DomainError);
    CHECK_THROWS_AS(tau_from_t(1.0), DomainError);
}

TEST_CASE("eval_weierstrass: parity and branch points")
{
    auto L = lattice_from_tau(complex(0.1, 1.3));
    complex z{0.21, -0.17};
    CHECK(rel(wp(-z, L), wp(z, L)) < 1e-13);
    CHECK(rel(wp_prime(-z, L), -wp_prime(z, L)) < 1e-13);
    CHECK(rel(wp(L.omega1, L), L.e1) < 1e-14);
    CHECK(std::abs(wp_prime(L.omega1, L)) < 1e-11);
    CHECK(std::abs(wp_prime(L.omega2, L)) < 1e-11);
    CHECK(std::abs(wp_prime(L.omega3, L)) < 1e-11);
}

TEST_CASE("eval_weierstrass: wp(0.3+0.2i) at tau = i")
{
    auto L = lattice_from_tau(I);
    auto v = eval_weierstrass(WeierstrassKind::wp, complex(0.3, 0.2), L);
    CHECK(std::abs(v.value - kWpSquare) < 1e-12);
    CHECK(v.error_estimate < 1e-11);
    CHECK(v.kind == WeierstrassKind::wp);
}

TEST_CASE("eval_weierstrass: pole proximity")
{
    auto L = lattice_from_tau(complex(0.2, 1.1));
    complex pole = 2.0 + L.tau;
    try {
        (void)wp(pole + complex(1e-9, 0.0), L);
        FAIL("expected pole proximity error");
    } catch (const PoleProximityError &e) {
        CHECK(std::abs(e.nearest_lattice_point - pole) < 1e-12);
    }
    CHECK_NOTHROW((void)sigma(pole, L));
    CHECK(std::abs(sigma(pole, L)) < 1e-12);
}

TEST_CASE("wp satisfies its differential equation (100 random points)")
{
    std::mt19937_64 rng(2024);
    for (int k = 0; k < 100; ++k) {
        complex tau = testutil::random_tau(rng);
        auto L = lattice_from_tau(tau);
        complex z = testutil::random_point(rng, L, 1e-3);
        auto v = eval_weierstrass(WeierstrassKind::wp, z, L);
        complex p = v.value, dp = wp_prime(z, L);
        double res = std::abs(dp * dp - (4.0 * p * p * p - L.g2 * p - L.g3));
        CHECK(res < 1e-10 * std::max(1.0, std::pow(std::abs(p), 3)));
    }
}

TEST_CASE("periodicity and quasi-periodicity")
{
    std::mt19937_64 rng(7);
    for (int k = 0; k < 40; ++k) {
        complex tau = testutil::random_tau(rng);
        auto L = lattice_from_tau(tau);
        complex z = testutil::random_point(rng, L, 0.05);
        for (int j : {1, 3}) {
            complex w = 2.0 * L.omega(j);
            CHECK(std::abs(wp(z + w, L) - wp(z, L)) < 1e-10 * std::max(1.0, std::abs(wp(z, L))));
            CHECK(std::abs(zeta(z + w, L) - zeta(z, L) - 2.0 * L.eta(j)) < 1e-10 * std::max(1.0, std::abs(zeta(z, L))));
            // sigma(z + 2w) = -exp(2 eta (z + w)) sigma(z)
            complex lhs = sigma(z + w, L);
            complex rhs = -std::exp(2.0 * L.eta(j) * (z + L.omega(j))) * sigma(z, L);
            CHECK(rel(lhs, rhs) < 1e-10 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST_CASE("zeta' = -wp and sigma'/sigma = zeta")
{
    auto L = lattice_from_tau(complex(-0.3, 1.05));
    const double h = 1e-3;
    for (complex z : {complex(0.2, 0.1), complex(-0.31, 0.4), complex(0.05, -0.33)}) {
        // fourth-order central differences
        auto d = [&](auto f) { return (-f(z + 2 * h) + 8.0 * f(z + h) - 8.0 * f(z - h) + f(z - 2 * h)) / (12 * h); };
        complex dz = d([&](complex u) { return zeta(u, L); });
        complex ds = d([&](complex u) { return std::log(sigma(u, L)); });
        CHECK(rel(dz, -wp(z, L)) < 1e-8);
        CHECK(rel(ds, zeta(z, L)) < 1e-8);
    }
}

TEST_CASE("extended precision lattice agrees with double")
{
    auto Ld = lattice_from_tau(complex(0.11, 0.97));
    auto Le = lattice_from_tau<long double>({0.11L, 0.97L});
    CHECK(std::abs(complex(Le.e1) - Ld.e1) < 1e-13);
    CHECK(std::abs(complex(Le.eta1) - Ld.eta1) < 1e-13);
    auto Lx = lattice_from_tau<long double>({0.0L, 1.0L});
    CHECK(std::abs(static_cast<double>(Lx.e1.real()) - kE1SquareLattice) < 1e-15);
}

TEST_CASE("eval_phi: examples")
{
    auto L = lattice_from_tau(complex(0.0, 1.2));
    complex alpha{0.1, 0.2};
    CHECK(std::abs(eval_phi(0, complex(0.4), alpha, L) - kPhi0) < 1e-12);
    // Phi_0 has a simple pole at x = 0 with residue sigma(-alpha)/sigma'(0) = -sigma(alpha).
    CHECK_THROWS_AS(eval_phi(0, complex(0.0), alpha, L), PoleProximityError);
    const double h = 1e-4;
    complex residue = 0.5 * (h * eval_phi(0, complex(h), alpha, L) - h * eval_phi(0, complex(-h), alpha, L));
    CHECK(rel(residue, -sigma(alpha, L)) < 1e-7);
    complex x{0.13, 0.07};
    complex ratio = eval_phi(0, x + 1.0, alpha, L) / eval_phi(0, x, alpha, L);
    CHECK(rel(ratio, std::exp(-2.0 * L.eta1 * alpha + zeta(alpha, L))) < 1e-12);
    CHECK_THROWS_AS(eval_phi(1, x, L.tau, L), DegeneracyError);
}

TEST_CASE("eval_phi: quasi-periodicity for derivatives of order 0, 1, 2")
{
    std::mt19937_64 rng(99);
    for (int k = 0; k < 20; ++k) {
        complex tau = testutil::random_tau(rng, 1.8);
        auto L = lattice_from_tau(tau);
        complex alpha = testutil::random_point(rng, L, 0.1);
        complex x = testutil::random_point(rng, L, 0.1);
        complex za = zeta(alpha, L);
        for (int i = 0; i < 4; ++i) {
            if (std::abs(x + L.omega(i) - nearest_lattice_point(x + L.omega(i), L)) < 0.1)
                continue;
            auto base = eval_phi_derivatives(i, x, alpha, L);
            for (int kk : {1, 3}) {
                complex w = 2.0 * L.omega(kk);
                complex factor = std::exp(-2.0 * L.eta(kk) * alpha + w * za);
                auto shifted = eval_phi_derivatives(i, x + w, alpha, L);
                for (int j = 0; j < 3; ++j) {
                    complex expected = factor * base[j];
                    CHECK(std::abs(shifted[j] - expected) <= 1e-9 * std::max(std::abs(expected), 1e-300));
                }
            }
        }
    }
}

TEST_CASE("elliptic_log: branch points and round trips")
{
    auto L = lattice_from_tau(complex(0.15, 1.1));
    for (int i = 1; i <= 3; ++i) {
        auto r = elliptic_log(L.e(i), L, complex(0.1, 0.1));
        CHECK(r.double_root);
        CHECK(std::abs(r.x - L.omega(i)) < 1e-15);
    }
    std::mt19937_64 rng(3);
    for (int k = 0; k < 30; ++k) {
        complex x0 = testutil::random_point(rng, L, 0.05);
        auto r = elliptic_log(wp(x0, L), L, x0);
        CHECK(std::abs(r.x - x0) < 1e-9);
        CHECK(!r.double_root);
    }
}

TEST_CASE("elliptic_log: w = 5+2i at tau = i against the integral from infinity")
{
    auto L = lattice_from_tau(I);
    complex w{5.0, 2.0};
    // x = int_w^inf dz / sqrt(4z^3 - g2 z - g3), root ~ 2 z^(3/2) at large z
    BranchedIntegrand f;
    f.tag = "elliptic log";
    f.radicand = [&](complex z) { return 4.0 * z * z * z - L.g2 * z - L.g3; };
    f.body = [](complex, complex r) { return 1.0 / r; };
    f.singularities = {L.e1, L.e2, L.e3};
    const double R = 40.0;
    complex zR = R * w / std::abs(w);
    f.branch_seed = 2.0 * std::pow(zR, 1.5);
    PathPolyline path = build_safe_path(zR, w, f.singularities, 0.5);
    QuadratureOptions opt;
    opt.tol = 1e-13;
    auto q = integrate_from_infinity(f, w / std::abs(w), R, path, opt);
    complex x_quad = -q.value; // int_inf^w = -int_w^inf
    auto r = elliptic_log(w, L, x_quad);
    CHECK(std::abs(wp(r.x, L) - w) < 1e-11);
    // equal up to sign and lattice: compare with the +- candidate nearest to the quadrature value
    complex diff = r.x - x_quad;
    CHECK(std::abs(diff - nearest_lattice_point(diff, L)) < 1e-10);
}
