#pragma once

// Finite-gap data for -f'' + sum_i l_i(l_i+1) wp(x+omega_i) f = E f at a
// fixed numeric E: the even elliptic function Xi, the constant Q, the
// integral representation sqrt(Xi) exp(int sqrt(-Q)/Xi), and the
// Hermite-Krichever parameters of the l = (2,0,0,0) Lame case.

#include <array>
#include <string>
#include <vector>

#include "heunlab/elliptic.hpp"
#include "heunlab/quadrature.hpp"

namespace heunlab
{

using MultiIndex = std::array<int, 4>;

struct SpectralData {
    MultiIndex l{0, 0, 0, 0};
    complex E;
    // Xi(x) = c0 + sum_i sum_j b[i][j] wp(x + omega_i)^(l_i - j)
    complex c0;
    std::array<std::vector<complex>, 4> b;
    complex Q;
    double Q_spread = 0.0; // standard deviation of the sampled Q
    int sqrtQ_sign = 1;    // sqrt(-Q) = sign * principal_sqrt_minus_Q(Q)
    std::string normalization; // "closed-form" or "unit-leading"

    complex sqrt_minus_Q() const;
};

// Principal sqrt(-Q); for Q real positive up to round-off it returns +i sqrt(Q).
complex principal_sqrt_minus_Q(complex Q);

// Xi and its first three x-derivatives.
std::array<complex, 4> eval_xi(const SpectralData &sd, complex x, const Lattice &L);

// Xi as a rational function of w = wp(x).
complex xi_of_wp(const SpectralData &sd, complex w, const Lattice &L);

// V(x) = sum_i l_i(l_i+1) wp(x + omega_i) and V'(x).
std::array<complex, 2> eval_potential(const MultiIndex &l, complex x, const Lattice &L);

// Deterministic generic points in the centred cell, at least `clearance`
// (reduced coordinates) from every half period.
std::vector<complex> sample_points(const Lattice &L, int n, double clearance = 0.1);

SpectralData build_xi_even(const MultiIndex &l, complex E, const Lattice &L, int sqrtQ_sign = 1);

struct QSamples {
    complex mean;
    double spread = 0.0; // standard deviation over the samples
    // mean of |Xi^2 (E - V)| + |Xi Xi''/2| + |Xi'^2/4|; spreads are judged against
    // this since Q itself can vanish
    double scale = 0.0;
    std::vector<complex> values;
};

QSamples sample_Q(const SpectralData &sd, const Lattice &L, int n = 24);

// Throws NumericError when the sampled values are not constant to `rel_tol`.
complex compute_Q(const SpectralData &sd, const Lattice &L, double rel_tol = 1e-8);

// Residual of Xi''' - 4(V-E)Xi' - 2V'Xi at x, relative to the size of its terms.
double xi_equation_residual(const SpectralData &sd, complex x, const Lattice &L);

// Zeros of Xi in x: the roots w_k of the numerator of xi_of_wp, and one
// preimage x_k in the centred cell for each (the other is -x_k).
struct XiZeros {
    std::vector<complex> wp_values;
    std::vector<complex> x;
};
XiZeros xi_zeros(const SpectralData &sd, const Lattice &L);

struct LambdaOptions {
    double clearance = 0.02;
    double tol = 1e-12;
};

struct LambdaValue {
    complex value;
    complex sqrt_xi;  // continued along the path from the principal value at the basepoint
    complex exponent; // int_basepoint^x sqrt(-Q)/Xi
    double error = 0.0;
    PathPolyline path;
};

// Lambda(x) = sqrt(Xi(x)) exp(int_basepoint^x sqrt(-Q)/Xi dx'), continued
// along a safe path from the basepoint.
LambdaValue eval_lambda_integral(const SpectralData &sd, complex x, complex basepoint, const Lattice &L,
                                 const LambdaOptions &options = {});

// Lambda'/Lambda and Lambda''/Lambda from Xi; exact given Xi and Q.
std::array<complex, 2> lambda_log_derivatives(const SpectralData &sd, complex x, const Lattice &L);

// -Lambda'' + (V - E) Lambda, divided by |Lambda| max(1, |V|, |E|).
double lambda_equation_residual(const SpectralData &sd, complex x, const Lattice &L);

struct HKAnsatz {
    complex alpha;
    complex kappa;
    complex wp_alpha;
    complex wp_prime_alpha;
    MultiIndex term_counts{0, 0, 0, 0};
    bool degenerate = false;
    complex sqrt_minus_Q;
};

// Closed-form alpha, kappa for l = (2,0,0,0) with the sqrt(-Q) branch of
// sqrtQ_sign; wp'(alpha) and kappa are the odd rational functions
//   wp'(alpha) = 2 s (E^3 - 9 g2 E + 54 g3) / (27 (E^2 - 3 g2)^2),
//   kappa = 2 s / (3 (E^2 - 3 g2)),  s = sqrt(-Q),
// matching Lambda(x) from eval_lambda_integral.
HKAnsatz hk_parameters_lame2(complex E, const Lattice &L, int sqrtQ_sign = 1);

// -2 eta_k alpha + 2 omega_k zeta(alpha) + 2 kappa omega_k
complex monodromy_exponent_elliptic(const HKAnsatz &hk, int k, const Lattice &L);
complex monodromy_multiplier_elliptic(const HKAnsatz &hk, int k, const Lattice &L);

// Genus-two curve of the Lame l0 = 2 case: y^2 = -(E^2 - 3 g2) prod (E - 3 e_i).
complex lame2_curve(complex E, const Lattice &L);
std::array<complex, 5> lame2_branch_points(const Lattice &L);

// exp(-1/2 int_{sqrt(3 g2)}^E (-6 eta_k E' + 2 omega_k (E'^2 - 3 g2/2)) / y dE')
struct HyperellipticMultiplier {
    complex value;
    complex exponent;
    double error = 0.0;
};
HyperellipticMultiplier monodromy_multiplier_hyperelliptic(complex E, int k, const Lattice &L, double tol = 1e-11);

// xi(E) = -(E^3 - 27 g3) / (9 (E^2 - 3 g2))
complex lame2_xi(complex E, const Lattice &L);

struct IdentityCheck {
    std::string name;
    complex lhs;
    complex rhs;
    // Branch signs applied to the two integrals (first: lhs integral of the
    // alpha identity, or the hyperelliptic leg of a kappa identity).
    int lhs_sign = 1;
    int rhs_sign = 1;
    std::array<int, 2> lattice_shift{0, 0}; // lhs + m p1 + n p3 compared with rhs
    double residual = 0.0;
    bool pass = false;
};

struct ReductionReport {
    complex E;
    complex xi;
    IdentityCheck alpha_identity;
    std::array<IdentityCheck, 3> kappa_identity;
    bool pass = false;
};

// Both sides of the genus-two to genus-one reduction formulas, each by
// independent quadrature. The first is compared modulo the period lattice
// {m + n tau}. In the second the hyperelliptic leg runs from 3 e_i and the
// elliptic leg from e_i = xi(3 e_i) along the image of the same contour
// under xi, so the two sides agree exactly.
ReductionReport verify_reduction_identities(complex E, const Lattice &L, double tol = 1e-6,
                                            double quad_tol = 1e-11);

} // namespace heunlab
