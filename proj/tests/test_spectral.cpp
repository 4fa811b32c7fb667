#include <numbers>
#include <random>

#include "heunlab/spectral.hpp"
#include "test_util.hpp"

using namespace heunlab;
using testutil::I;
using testutil::rel;

namespace
{

complex lame2_Q_closed(complex E, const Lattice &L)
{
    return (E * E - 3.0 * L.g2) * (E - 3.0 * L.e1) * (E - 3.0 * L.e2) * (E - 3.0 * L.e3);
}

// Frozen from eval_lambda_integral (basepoint 0.13+0.21i, principal sqrt(Xi)
// there) and confirmed by the finite-difference check below.
const complex kLambdaLame2{-22.600328736066039, 13.708299557673982};

// Random E away from the branch points of the genus-two curve.
complex random_E(std::mt19937_64 &rng, const Lattice &L, double box = 10.0)
{
    std::uniform_real_distribution<double> u(-box, box);
    auto bp = lame2_branch_points(L);
    for (;;) {
        complex E{u(rng), u(rng)};
        bool ok = true;
        for (complex b : bp)
            if (std::abs(E - b) < 1.0)
                ok = false;
        if (ok)
            return E;
    }
}

} // namespace

TEST_CASE("build_xi_even: trivial potential")
{
    auto L = lattice_from_tau(complex(0.1, 1.2));
    auto sd = build_xi_even({0, 0, 0, 0}, 5.0, L);
    CHECK(sd.c0 == complex(1.0));
    CHECK(std::abs(sd.Q - 5.0) < 1e-14);
    CHECK(std::abs(compute_Q(sd, L) - 5.0) < 1e-14);
}

TEST_CASE("build_xi_even: Lame l0 = 2 closed form")
{
    auto L = lattice_from_tau(complex(0.2, 1.05));
    complex E{1.5, -0.7};
    auto sd = build_xi_even({2, 0, 0, 0}, E, L);
    CHECK(sd.normalization == "closed-form");
    REQUIRE(sd.b[0].size() == 2);
    CHECK(std::abs(sd.b[0][0] - 9.0) < 1e-14);
    CHECK(rel(sd.b[0][1], 3.0 * E) < 1e-10);
    CHECK(rel(sd.c0, E * E - 9.0 * L.g2 / 4.0) < 1e-10);
}

TEST_CASE("build_xi_even: l = (1,0,0,0) at E = 1, tau = i")
{
    // Oracle: least squares for c0/b over 50 points in long double. With
    // V = 2 wp, the operator maps 1 -> -4 wp' and wp -> 4 E wp'.
    auto Lx = lattice_from_tau<long double>({0.0L, 1.0L});
    const long double E = 1.0L;
    std::complex<long double> num = 0, den = 0;
    for (int k = 0; k < 50; ++k) {
        std::complex<long double> x{0.05L + 0.017L * k, 0.11L + 0.0071L * k};
        auto [p, dp] = wp_and_prime(x, Lx);
        // operator rows for basis {1, wp}; exact expressions evaluated in long double
        std::complex<long double> d3 = 12.0L * p * dp;
        std::complex<long double> r0 = -2.0L * (2.0L * dp);
        std::complex<long double> r1 = d3 - 4.0L * (2.0L * p - E) * dp - 2.0L * (2.0L * dp) * p;
        num += std::conj(r0) * r1;
        den += std::conj(r0) * r0;
    }
    // c0 r0 + b r1 = 0 with b = 1
    std::complex<long double> c0_oracle = -num / den;
    CHECK(std::abs(std::complex<double>(c0_oracle) - 1.0) < 1e-15);

    auto L = lattice_from_tau(I);
    auto sd = build_xi_even({1, 0, 0, 0}, 1.0, L);
    CHECK(sd.normalization == "unit-leading");
    CHECK(std::abs(sd.b[0][0] - 1.0) < 1e-15);
    CHECK(std::abs(sd.c0 - 1.0) < 1e-12);
    // Q = E^3 - g2 E / 4 + g3 / 4 for the n = 1 Lame product
    CHECK(rel(sd.Q, 1.0 - L.g2 / 4.0 + L.g3 / 4.0) < 1e-11);
}

TEST_CASE("compute_Q: Lame l0 = 2 examples")
{
    auto L = lattice_from_tau(complex(0.0, 1.3));
    auto at_e1 = build_xi_even({2, 0, 0, 0}, 3.0 * L.e1, L);
    CHECK(std::abs(compute_Q(at_e1, L)) < 1e-9 * sample_Q(at_e1, L).scale);

    complex E{1.0, 1.0};
    auto sd = build_xi_even({2, 0, 0, 0}, E, L);
    complex Q = compute_Q(sd, L);
    CHECK(std::abs(Q - lame2_Q_closed(E, L)) < 1e-9 * std::abs(Q));
}

TEST_CASE("Q is constant in x and Xi is even")
{
    std::mt19937_64 rng(41);
    const std::vector<MultiIndex> indices{{1, 0, 0, 0}, {2, 0, 0, 0}, {1, 1, 0, 0}, {0, 1, 1, 1}, {1, 2, 0, 1},
                                          {3, 0, 0, 0}, {2, 1, 0, 0}};
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (const auto &l : indices) {
        complex tau = testutil::random_tau(rng, 1.6);
        auto L = lattice_from_tau(tau);
        complex E{u(rng), u(rng)};
        auto sd = build_xi_even(l, E, L);
        auto q = sample_Q(sd, L, 20);
        INFO("l = ", l[0], l[1], l[2], l[3], " tau = ", tau, " E = ", E);
        CHECK(q.spread < 1e-9 * q.scale);
        for (int k = 0; k < 5; ++k) {
            complex x = testutil::random_point(rng, L, 0.1);
            bool near_pole = false;
            for (int i = 0; i < 4; ++i)
                near_pole = near_pole || std::abs(reduce_to_cell(x - L.omega(i), L)) < 0.1;
            if (near_pole)
                continue;
            complex a = eval_xi(sd, x, L)[0], b = eval_xi(sd, -x, L)[0];
            CHECK(std::abs(a - b) < 1e-10 * std::max(1.0, std::abs(a)));
            CHECK(xi_equation_residual(sd, x, L) < 1e-8);
        }
    }
}

TEST_CASE("eval_lambda_integral: trivial potential gives exp(x)")
{
    auto L = lattice_from_tau(complex(0.0, 1.1));
    auto sd = build_xi_even({0, 0, 0, 0}, -1.0, L);
    complex bp{0.1, 0.0};
    for (complex x : {complex(0.4, 0.2), complex(-0.3, 0.5), complex(1.7, -0.2)}) {
        auto v = eval_lambda_integral(sd, x, bp, L);
        CHECK(rel(v.value, std::exp(x - bp)) < 1e-12);
    }
}

TEST_CASE("eval_lambda_integral: Lame l0 = 2 value and equation")
{
    auto L = lattice_from_tau(I);
    auto sd = build_xi_even({2, 0, 0, 0}, 1.0, L);
    const complex bp{0.13, 0.21}, x{0.31, 0.07};
    auto Lam = [&](complex z) { return eval_lambda_integral(sd, z, bp, L).value; };
    CHECK(std::abs(Lam(x) - kLambdaLame2) < 1e-10 * std::abs(kLambdaLame2));
    // oracle: fourth-order finite-difference second derivative plugged into the equation
    const double h = 1e-3;
    complex d2 = (-Lam(x + 2 * h) + 16.0 * Lam(x + h) - 30.0 * Lam(x) + 16.0 * Lam(x - h) - Lam(x - 2 * h)) / (12 * h * h);
    complex res = -d2 + 6.0 * wp(x, L) * Lam(x) - 1.0 * Lam(x);
    CHECK(std::abs(res) < 1e-6 * std::abs(Lam(x)));
    CHECK(lambda_equation_residual(sd, x, L) < 1e-7);
}

TEST_CASE("eval_lambda_integral: period ratios are x-independent and match the multiplier")
{
    auto L = lattice_from_tau(complex(0.0, 1.3));
    complex E{1.0, 1.0};
    for (int sign : {1, -1}) {
        auto sd = build_xi_even({2, 0, 0, 0}, E, L, sign);
        auto hk = hk_parameters_lame2(E, L, sign);
        const complex bp{0.13, 0.21};
        for (int k : {1, 3}) {
            complex w = 2.0 * L.omega(k);
            auto ratio = [&](complex x) {
                return eval_lambda_integral(sd, x + w, bp, L).value / eval_lambda_integral(sd, x, bp, L).value;
            };
            complex r1 = ratio(bp), r2 = ratio(complex(0.2, -0.3));
            CHECK(rel(r1, r2) < 1e-8);
            CHECK(rel(r1, monodromy_multiplier_elliptic(hk, k, L)) < 1e-8);
        }
    }
}

TEST_CASE("eval_lambda_integral: clearance errors")
{
    auto L = lattice_from_tau(complex(0.0, 1.2));
    auto sd = build_xi_even({2, 0, 0, 0}, complex(0.5, 0.5), L);
    auto zeros = xi_zeros(sd, L);
    REQUIRE(!zeros.x.empty());
    for (std::size_t k = 0; k < zeros.x.size(); ++k)
        CHECK(std::abs(eval_xi(sd, zeros.x[k], L)[0]) < 1e-8 * std::abs(sd.c0));
    CHECK_THROWS_AS(eval_lambda_integral(sd, zeros.x[0] + 1e-4, complex(0.13, 0.21), L), ClearanceError);
    CHECK_THROWS_AS(eval_lambda_integral(sd, complex(1e-3, 0.0), complex(0.13, 0.21), L), ClearanceError);
}

TEST_CASE("hk_parameters_lame2: branch point and degenerate cases")
{
    auto L = lattice_from_tau(complex(0.1, 1.1));
    auto hk = hk_parameters_lame2(3.0 * L.e1, L);
    CHECK(std::abs(hk.kappa) < 1e-12);
    complex E = 3.0 * L.e1;
    complex expected = -(27.0 * std::pow(L.e1, 3) - 27.0 * L.g3) / (9.0 * (9.0 * L.e1 * L.e1 - 3.0 * L.g2));
    CHECK(rel(hk.wp_alpha, expected) < 1e-12);
    CHECK(rel(hk.wp_alpha, L.e1) < 1e-10);
    CHECK(std::abs(monodromy_multiplier_elliptic(hk, 1, L) - 1.0) < 1e-9);
    CHECK(std::abs(hk.wp_alpha - lame2_xi(E, L)) < 1e-12 * std::abs(hk.wp_alpha));
    complex degenerate = std::sqrt(3.0 * L.g2);
    CHECK_THROWS_AS(hk_parameters_lame2(degenerate, L), DegeneracyError);
}

TEST_CASE("hk_parameters_lame2: curve membership and the closed kappa^2")
{
    std::mt19937_64 rng(8);
    for (int n = 0; n < 10; ++n) {
        auto L = lattice_from_tau(testutil::random_tau(rng, 1.8));
        complex E = random_E(rng, L);
        auto hk = hk_parameters_lame2(E, L);
        complex p = hk.wp_alpha, dp = hk.wp_prime_alpha;
        CHECK(std::abs(dp * dp - (4.0 * p * p * p - L.g2 * p - L.g3)) <
              1e-10 * std::max(1.0, std::pow(std::abs(p), 3)));
        complex k2 = 4.0 / 9.0 * -(E - 3.0 * L.e1) * (E - 3.0 * L.e2) * (E - 3.0 * L.e3) / (E * E - 3.0 * L.g2);
        CHECK(rel(hk.kappa * hk.kappa, k2) < 1e-10);
        CHECK(rel(wp(hk.alpha, L), p) < 1e-10);
        CHECK(rel(wp_prime(hk.alpha, L), dp) < 1e-8);
    }
}

TEST_CASE("monodromy_multiplier_elliptic: examples")
{
    auto L = lattice_from_tau(complex(0.0, 1.1));
    HKAnsatz trivial;
    trivial.alpha = L.omega1;
    trivial.kappa = 0.0;
    CHECK(std::abs(monodromy_multiplier_elliptic(trivial, 1, L) - 1.0) < 1e-13);
    auto hk = hk_parameters_lame2(2.0, L);
    HKAnsatz neg = hk;
    neg.alpha = -hk.alpha;
    neg.kappa = -hk.kappa;
    for (int k : {1, 3})
        CHECK(std::abs(monodromy_multiplier_elliptic(hk, k, L) * monodromy_multiplier_elliptic(neg, k, L) - 1.0) < 1e-12);
    HKAnsatz deg = hk;
    deg.degenerate = true;
    CHECK_THROWS_AS(monodromy_multiplier_elliptic(deg, 1, L), DegeneracyError);
}

TEST_CASE("elliptic and hyperelliptic multipliers agree as unordered pairs")
{
    auto L = lattice_from_tau(complex(0.0, 1.1));
    auto hk = hk_parameters_lame2(2.0, L);
    auto m = monodromy_multiplier_elliptic(hk, 3, L);
    auto h = monodromy_multiplier_hyperelliptic(2.0, 3, L).value;
    CHECK(std::min(std::abs(h - m), std::abs(h - 1.0 / m)) < 1e-7 * std::max(1.0, std::abs(m)));
}

TEST_CASE("Hermite-Krichever form fitted from Lambda reproduces the closed alpha and kappa")
{
    std::mt19937_64 rng(2718);
    for (int trial = 0; trial < 6; ++trial) {
        auto L = lattice_from_tau(trial == 0 ? complex(0.0, 1.1) : testutil::random_tau(rng, 1.5));
        complex E = trial == 0 ? complex(2.0) : random_E(rng, L, 6.0);
        auto sd = build_xi_even({2, 0, 0, 0}, E, L);
        const complex bp{0.13, 0.21};
        auto Lam = [&](complex x) { return eval_lambda_integral(sd, x, bp, L).value; };
        // fit alpha from the two multipliers: log M3 - tau log M1 = 2 pi i alpha
        complex M1 = Lam(bp + 1.0) / Lam(bp), M3 = Lam(bp + L.tau) / Lam(bp);
        complex alpha = (std::log(M3) - L.tau * std::log(M1)) / (2.0 * std::numbers::pi * I);
        auto closed = hk_parameters_lame2(E, L);
        alpha += nearest_lattice_point(closed.alpha - alpha, L);
        CHECK(rel(wp(alpha, L), closed.wp_alpha) < 1e-7);
        complex base_kappa = std::log(M1) + 2.0 * L.eta1 * alpha - zeta(alpha, L);
        // kappa is fixed mod 2 pi i by M1; pick the branch that reconstructs Lambda
        auto pts = sample_points(L, 10, 0.15);
        double best = 1e300;
        complex best_kappa;
        for (int n = -3; n <= 3; ++n) {
            complex kappa = base_kappa + 2.0 * std::numbers::pi * I * double(n);
            // least squares for b0, b1 in exp(kappa x)(b0 Phi0 + b1 Phi0')
            complex a00 = 0, a01 = 0, a11 = 0, r0 = 0, r1 = 0;
            std::vector<std::array<complex, 3>> rows;
            for (complex x : pts) {
                auto phi = eval_phi_derivatives(0, x, alpha, L);
                complex e = std::exp(kappa * x);
                complex u = e * phi[0], v = e * phi[1], y = Lam(x);
                rows.push_back({u, v, y});
                a00 += std::conj(u) * u;
                a01 += std::conj(u) * v;
                a11 += std::conj(v) * v;
                r0 += std::conj(u) * y;
                r1 += std::conj(v) * y;
            }
            complex det = a00 * a11 - std::conj(a01) * a01;
            complex b0 = (r0 * a11 - a01 * r1) / det, b1 = (a00 * r1 - std::conj(a01) * r0) / det;
            double worst = 0;
            for (auto &r : rows)
                worst = std::max(worst, std::abs(b0 * r[0] + b1 * r[1] - r[2]) / std::abs(r[2]));
            if (worst < best) {
                best = worst;
                best_kappa = kappa;
            }
        }
        CHECK(best < 1e-6);
        INFO("trial ", trial, " kappa ", best_kappa, " closed ", closed.kappa, " alpha ", alpha, " closed ", closed.alpha);
        CHECK(rel(best_kappa, closed.kappa) < 1e-7);
    }
}

TEST_CASE("verify_reduction_identities")
{
    auto L = lattice_from_tau(I);
    SUBCASE("E = 3 e1 gives zero-length legs")
    {
        auto rep = verify_reduction_identities(3.0 * L.e1, L);
        CHECK(std::abs(rep.kappa_identity[0].lhs) < 1e-12);
        CHECK(std::abs(rep.kappa_identity[0].rhs) < 1e-9);
        CHECK(rep.kappa_identity[0].pass);
    }
    SUBCASE("E = 2 + 0.5i")
    {
        complex E{2.0, 0.5};
        auto rep = verify_reduction_identities(E, L);
        CHECK(std::abs(rep.xi - hk_parameters_lame2(E, L).wp_alpha) < 1e-14 * std::abs(rep.xi));
        CHECK(rep.alpha_identity.residual < 1e-6);
        for (auto &c : rep.kappa_identity)
            CHECK(c.residual < 1e-6);
        CHECK(rep.pass);
    }
}

TEST_CASE("principal_sqrt_minus_Q is stable across the cut")
{
    complex a = principal_sqrt_minus_Q(complex(4.0, 1e-14)), b = principal_sqrt_minus_Q(complex(4.0, -1e-14));
    CHECK(std::abs(a - complex(0.0, 2.0)) < 1e-14);
    CHECK(std::abs(b - complex(0.0, 2.0)) < 1e-14);
    CHECK(std::abs(principal_sqrt_minus_Q(complex(-4.0, 0.0)) - 2.0) < 1e-14);
}
