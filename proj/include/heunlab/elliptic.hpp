#pragma once

// Weierstrass elliptic functions for the lattice generated by
// 2*omega1 = 1 and 2*omega3 = tau.
//
// Evaluation reduces tau to the SL(2,Z) fundamental domain (so the lattice is
// scale * (Z + tau_reduced Z)), reduces the argument to the centred period
// parallelogram and sums the theta series of theta_1 and its derivatives.
// Truncation is decided from an explicit bound on the first omitted term.
//
// All routines are templated on the real type; double and long double are
// instantiated. long double is the extended precision mode used to build
// reference values.

#include <array>
#include <complex>
#include <cstdint>

#include "heunlab/errors.hpp"

namespace heunlab
{

using complex = std::complex<double>;

struct EllipticConfig {
    // Absolute truncation target of the theta series (before round-off).
    double target = 1e-13;
    // Minimum distance to a lattice point, measured in reduced coordinates.
    double pole_clearance = 1e-6;
};

// Working precision for routines that offer a reference mode.
enum class Precision { standard, extended };

enum class WeierstrassKind { wp, wp_prime, zeta, sigma };

const char *to_string(WeierstrassKind kind);

namespace detail
{

// Z + tau_r Z with tau_r in the SL(2,Z) fundamental domain; the user lattice
// is scale times this one.
template <typename T>
struct ReducedLattice {
    std::complex<T> tau_r;
    std::complex<T> scale;
    std::array<std::int64_t, 4> matrix{1, 0, 0, 1}; // tau_r = (a tau + b)/(c tau + d)
    std::complex<T> eta1_r;
    std::complex<T> eta3_r;
    std::complex<T> theta1_prime0; // normalised by q^(1/4)
};

} // namespace detail

template <typename T>
struct BasicLattice {
    using cplx = std::complex<T>;

    cplx tau;
    cplx omega1; // 1/2
    cplx omega2; // -omega1 - omega3
    cplx omega3; // tau/2
    cplx e1, e2, e3;
    cplx g2, g3;
    cplx eta1, eta3;
    cplx t; // (e3 - e1)/(e2 - e1)
    EllipticConfig config;
    detail::ReducedLattice<T> reduced;

    // omega_0 = 0, omega_1, omega_2, omega_3
    cplx omega(int i) const;
    // e_i for i = 1, 2, 3
    cplx e(int i) const;
    // eta_i = zeta(omega_i) for i = 1, 2, 3 (eta_2 = -eta_1 - eta_3)
    cplx eta(int i) const;
};

using Lattice = BasicLattice<double>;
using LatticeExt = BasicLattice<long double>;

template <typename T>
struct EllipticValue {
    std::complex<T> z;
    WeierstrassKind kind;
    std::complex<T> value;
    T error_estimate;
};

template <typename T>
BasicLattice<T> lattice_from_tau(std::complex<T> tau, const EllipticConfig &config = {});

inline Lattice lattice_from_tau(complex tau, const EllipticConfig &config = {})
{
    return lattice_from_tau<double>(tau, config);
}

// Inverse of the cross ratio t(tau) = (e3-e1)/(e2-e1). The result lies in
// the fundamental domain of Gamma(2):
//   |Re tau| <= 1, |tau - 1/2| >= 1/2, |tau + 1/2| >= 1/2,
// with the boundary identified so that Re tau > -1 and points on the circles
// are taken on the side with Re tau >= 0.
complex tau_from_t(complex t);

template <typename T>
EllipticValue<T> eval_weierstrass(WeierstrassKind kind, std::complex<T> z, const BasicLattice<T> &lattice);

template <typename T>
std::complex<T> wp(std::complex<T> z, const BasicLattice<T> &lattice)
{
    return eval_weierstrass(WeierstrassKind::wp, z, lattice).value;
}

template <typename T>
std::complex<T> wp_prime(std::complex<T> z, const BasicLattice<T> &lattice)
{
    return eval_weierstrass(WeierstrassKind::wp_prime, z, lattice).value;
}

template <typename T>
std::complex<T> zeta(std::complex<T> z, const BasicLattice<T> &lattice)
{
    return eval_weierstrass(WeierstrassKind::zeta, z, lattice).value;
}

template <typename T>
std::complex<T> sigma(std::complex<T> z, const BasicLattice<T> &lattice)
{
    return eval_weierstrass(WeierstrassKind::sigma, z, lattice).value;
}

// wp and wp' in one pass.
template <typename T>
std::pair<std::complex<T>, std::complex<T>> wp_and_prime(std::complex<T> z, const BasicLattice<T> &lattice);

// Phi_i(x, alpha) = sigma(x + omega_i - alpha)/sigma(x + omega_i) * exp(zeta(alpha) x).
// Throws DegeneracyError when alpha is a lattice point.
template <typename T>
std::complex<T> eval_phi(int i, std::complex<T> x, std::complex<T> alpha, const BasicLattice<T> &lattice);

// Phi_i and its first two x-derivatives.
template <typename T>
std::array<std::complex<T>, 3> eval_phi_derivatives(int i, std::complex<T> x, std::complex<T> alpha,
                                                    const BasicLattice<T> &lattice);

template <typename T>
struct EllipticLog {
    std::complex<T> x;
    bool double_root = false; // w was a branch point e_i, so wp'(x) = 0
};

// Solves wp(x) = w. Of the preimages +-x0 + lattice, returns the one nearest
// to branch_seed; with a seed inside the centred period parallelogram the
// result is reduced to that cell. For w = e_i the result is omega_i itself
// when the seed lies in the centred cell (double_root is set).
template <typename T>
EllipticLog<T> elliptic_log(std::complex<T> w, const BasicLattice<T> &lattice, std::complex<T> branch_seed);

template <typename T>
std::complex<T> nearest_lattice_point(std::complex<T> z, const BasicLattice<T> &lattice);

// z minus the lattice point whose centred cell contains z.
template <typename T>
std::complex<T> reduce_to_cell(std::complex<T> z, const BasicLattice<T> &lattice);

// Carlson's symmetric elliptic integral R_F for complex arguments.
template <typename T>
std::complex<T> carlson_rf(std::complex<T> x, std::complex<T> y, std::complex<T> z);

// Complete elliptic integral K(m) (parameter m = k^2) by the arithmetic-geometric mean.
complex elliptic_k(complex m);

} // namespace heunlab
