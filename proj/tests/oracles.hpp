#pragma once

// Independent 50-digit reference implementations used only by the tests.
// They share no code with the library: theta functions are summed directly
// from their q-series, the Weierstrass invariants come from Eisenstein
// series and wp from its Laurent expansion.

#include <complex>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

namespace oracle
{

using real = boost::multiprecision::cpp_bin_float_50;
using cplx = boost::multiprecision::cpp_complex_50;

inline real pi()
{
    return boost::math::constants::pi<real>();
}

inline cplx I()
{
    return cplx(real(0), real(1));
}

inline cplx from(std::complex<double> z)
{
    return cplx(real(z.real()), real(z.imag()));
}

inline std::complex<double> to_double(const cplx &z)
{
    return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

inline real eps()
{
    return real("1e-55");
}

inline cplx nome(const cplx &tau)
{
    return exp(I() * pi() * tau);
}

// theta_2(0), theta_3(0), theta_4(0)
inline cplx theta2_0(const cplx &tau)
{
    cplx q = nome(tau), s = 0;
    for (int n = 0; n < 400; ++n) {
        real e = real(2 * n + 1) * real(2 * n + 1) / 4;
        cplx term = 2 * exp(I() * pi() * tau * e);
        s += term;
        if (abs(term) < eps())
            break;
    }
    return s;
}

inline cplx theta3_0(const cplx &tau)
{
    cplx q = nome(tau), s = 1;
    for (int n = 1; n < 400; ++n) {
        cplx term = 2 * pow(q, n * n);
        s += term;
        if (abs(term) < eps())
            break;
    }
    return s;
}

inline cplx theta4_0(const cplx &tau)
{
    cplx q = nome(tau), s = 1;
    for (int n = 1; n < 400; ++n) {
        cplx term = 2 * pow(q, n * n) * (n % 2 ? -1 : 1);
        s += term;
        if (abs(term) < eps())
            break;
    }
    return s;
}

// theta_1(v) and its v-derivatives up to order 3: sum 2 (-1)^n q^((n+1/2)^2) sin((2n+1) v)
inline std::vector<cplx> theta1(const cplx &v, const cplx &tau)
{
    std::vector<cplx> d(4, cplx(0));
    for (int n = 0; n < 400; ++n) {
        real m = real(2 * n + 1);
        cplx c = 2 * exp(I() * pi() * tau * (m * m / 4)) * (n % 2 ? -1 : 1);
        cplx s = sin(m * v), co = cos(m * v);
        d[0] += c * s;
        d[1] += c * m * co;
        d[2] -= c * m * m * s;
        d[3] -= c * m * m * m * co;
        if (abs(c) * pow(m, 3) * exp(m * abs(v.imag())) < eps())
            break;
    }
    return d;
}

inline cplx e1(const cplx &tau)
{
    cplx t3 = theta3_0(tau), t4 = theta4_0(tau);
    return pi() * pi() / 3 * (pow(t3, 4) + pow(t4, 4));
}

inline cplx eta1(const cplx &tau)
{
    auto d = theta1(cplx(0), tau);
    return -pi() * pi() / 6 * d[3] / d[1];
}

inline cplx sigma(const cplx &z, const cplx &tau)
{
    auto d0 = theta1(cplx(0), tau);
    auto d = theta1(pi() * z, tau);
    return exp(eta1(tau) * z * z) * d[0] / (pi() * d0[1]);
}

inline cplx zeta(const cplx &z, const cplx &tau)
{
    auto d = theta1(pi() * z, tau);
    return 2 * eta1(tau) * z + pi() * d[1] / d[0];
}

// g2, g3 for the lattice Z + tau Z from E4 and E6.
inline std::pair<cplx, cplx> invariants(const cplx &tau)
{
    cplx x = exp(2 * I() * pi() * tau);
    cplx s4 = 0, s6 = 0;
    cplx xn = 1;
    for (int n = 1; n < 2000; ++n) {
        xn *= x;
        cplx r = xn / (1 - xn);
        cplx t4 = real(n) * n * n * r, t6 = real(n) * n * n * n * n * r;
        s4 += t4;
        s6 += t6;
        if (abs(t6) < eps())
            break;
    }
    cplx E4 = 1 + 240 * s4, E6 = 1 - 504 * s6;
    real p = pi();
    return {4 * pow(p, 4) / 3 * E4, 8 * pow(p, 6) / 27 * E6};
}

// wp(z) from its Laurent series at 0; valid for |z| well inside the
// distance to the nearest nonzero lattice point.
inline cplx wp_laurent(const cplx &z, const cplx &tau, int terms = 200)
{
    auto [g2, g3] = invariants(tau);
    std::vector<cplx> c(terms + 1, cplx(0));
    c[2] = g2 / 20;
    c[3] = g3 / 28;
    for (int k = 4; k <= terms; ++k) {
        cplx s = 0;
        for (int m = 2; m <= k - 2; ++m)
            s += c[m] * c[k - m];
        c[k] = 3 * s / real((2 * k + 1) * (k - 3));
    }
    cplx z2 = z * z, acc = 1 / z2, zp = z2;
    for (int k = 2; k <= terms; ++k) {
        acc += c[k] * zp;
        zp *= z2;
    }
    return acc;
}

} // namespace oracle
