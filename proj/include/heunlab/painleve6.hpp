#pragma once

// Explicit Painleve VI solution families obtained from the Fuchsian equation
// with one apparent singularity (x = +-delta_1, wp(delta_1) = b1), and the
// checks that tie them to the elliptic, rational and Hamiltonian forms.

#include <optional>
#include <string>
#include <vector>

#include "heunlab/elliptic.hpp"
#include "heunlab/quadrature.hpp"
#include "heunlab/spectral.hpp"

namespace heunlab
{

// (kappa_0, kappa_1, kappa_t, kappa_inf) = (l1, l2, l3, l0) + 1/2
struct Kappas {
    double k0 = 0.5, k1 = 0.5, kt = 0.5, kinf = 0.5;
};

Kappas kappas_from_l(const MultiIndex &l);

// Coefficient of 1/(w(w-1)) in the rational-form equation:
// ((k0 + k1 + kt - 1)^2 - kinf^2)/4.
double rational_kappa(const Kappas &k);

// -d^2/dx^2 + wp'/(wp - b1) d/dx + s1/(wp - b1) + sum l_i(l_i+1) wp(x + omega_i) - E
struct FuchsianODE_M1 {
    MultiIndex l{0, 0, 0, 0};
    complex b1, mu1, p;
    complex tildeE, tildeS1;
    Lattice lattice;
    bool apparent = false;
};

// Fills tildeE and tildeS1 from (b1, mu1, p). `apparent` is set when p agrees
// with apparency_p to 1e-10 relative.
FuchsianODE_M1 make_fuchsian_m1(const MultiIndex &l, complex b1, complex mu1, complex p, const Lattice &L);

// Inverse of make_fuchsian_m1: recovers mu1 and p from tildeE and tildeS1.
FuchsianODE_M1 fuchsian_m1_from_heun(const MultiIndex &l, complex b1, complex tildeE, complex tildeS1,
                                     const Lattice &L);

// Accessory parameter p making x = +-delta_1 apparent. Throws DomainError
// when b1 is a half-period value e_i.
complex apparency_p(complex b1, complex mu1, const MultiIndex &l, const Lattice &L);

// y'' + p1 y' + p2 y = 0 in w with singular points 0, 1, t, inf, lambda.
struct RationalODE {
    Kappas kappas;
    complex t, lambda, mu, H;
    double kappa = 0.0;

    complex p1(complex w) const;
    complex p2(complex w) const;
};

// Hamiltonian of the Painleve VI system at (lambda, mu, t).
complex hamiltonian_vi(complex lambda, complex mu, complex t, const Kappas &k);

// |(a0 + b_{-1}) b_{-1} + b0| at the singular point with exponents 0 and 2,
// where p1 = -1/s + a0 + ..., p2 = b_{-1}/s + b0 + ... in the local variable s.
// This is the coefficient whose vanishing removes the logarithm. Throws
// DomainError when the point is not a regular singularity of that kind.
double frobenius_apparency_check(const FuchsianODE_M1 &ode);
double frobenius_apparency_check(const RationalODE &ode);

enum class P6Family {
    hitchin_l0000,
    explicit_l1000,
    degenerate_mu0,
    degenerate_mui,
    degenerate_l1000_cubic,
    degenerate_l1000_ei
};

const char *to_string(P6Family family);
P6Family p6_family_from_string(const std::string &name);

struct P6Instance {
    P6Family family = P6Family::hitchin_l0000;
    complex c1, c3; // (C1, C3), or (D1, D3) for the degenerate families
    int branch = 0; // i in {1,2,3} for degenerate_mui and degenerate_l1000_ei
    MultiIndex l{0, 0, 0, 0};
    Kappas kappas;
};

// Sets l and kappas from the family. Throws DomainError for a missing or
// superfluous branch index.
P6Instance make_p6_instance(P6Family family, complex c1, complex c3, int branch = 0);

// omega = c1 omega_3 - c3 omega_1, eta = c1 eta_3 - c3 eta_1
std::pair<complex, complex> combined_period(const P6Instance &inst, const Lattice &L);

// Closed-form b1 = wp(delta_1). Throws ParameterSingularityError when omega
// is within 1e-8 of a lattice point or a denominator falls below 1e-10 of
// the scale of its terms.
complex family_b1(const P6Instance &inst, const Lattice &L);

// mu_1 for the instance. For degenerate_l1000_cubic, mu_1 is the root of the
// cubic closest to the Hamiltonian estimate (see hamiltonian_mu1).
complex family_mu1(const P6Instance &inst, const Lattice &L);

// mu_1 recovered from dlambda/dt through the first Hamilton equation, with
// lambda(t) sampled from family_b1 at tau +- h (fourth-order stencil).
complex hamiltonian_mu1(const P6Instance &inst, const Lattice &L, double h = 1e-4);

enum class HKCase { l0000, l1000 };

struct HKData {
    complex wp_alpha, wp_prime_alpha, kappa;
    complex sqrt_minus_Q;
};

struct MuB1 {
    complex mu1, b1;
};

// (mu1, b1) -> (wp(alpha), wp'(alpha), kappa), with sqrt(-Q) = sign * principal.
// Throws DegeneracyError when mu1 = 0 or Q = 0.
HKData hk_from_mu_b1(HKCase kase, const MuB1 &in, const Lattice &L, int sqrtQ_sign = 1);

// (wp(alpha), wp'(alpha), kappa) -> (mu1, b1). Throws DegeneracyError when
// kappa = 0 or a denominator vanishes.
MuB1 mu_b1_from_hk(HKCase kase, const HKData &in, const Lattice &L);

// HK data of the family at this lattice: alpha = c3 omega_1 - c1 omega_3 and
// kappa = zeta(-alpha) + c3 eta_1 - c1 eta_3. Only for the two Q != 0 families.
struct FamilyHK {
    complex alpha, kappa;
    HKData data;
};
FamilyHK family_hk(const P6Instance &inst, const Lattice &L);

// -2 eta_k alpha + 2 omega_k zeta(alpha) + 2 kappa omega_k for k = 1, 3
std::array<complex, 2> monodromy_constants(complex alpha, complex kappa, const Lattice &L);

// Xi and Q of the apparent M = 1 equation for l = 0 and l0 = 1.
struct P6Spectral {
    HKCase kase = HKCase::l0000;
    complex mu1, b1, Q;
    complex A, B; // l1000: Xi = wp + A + B/(wp - b1)
    int sqrtQ_sign = 1;

    complex sqrt_minus_Q() const;
};

P6Spectral xi_and_Q(HKCase kase, complex mu1, complex b1, const Lattice &L);

// Xi, Xi', Xi''
std::array<complex, 3> eval_xi(const P6Spectral &s, complex x, const Lattice &L);

// Lambda_g(x) = sqrt(Xi (wp - b1)) exp(int_basepoint^x sqrt(-Q)/Xi), with the
// square root principal at the basepoint and continued along a safe path.
LambdaValue eval_lambda_p6(const P6Spectral &s, complex x, complex basepoint, const Lattice &L,
                           const LambdaOptions &options = {});

// Relative residual of the M = 1 equation for Lambda_g at x, using analytic
// log-derivatives.
double lambda_p6_residual(const P6Spectral &s, complex x, const Lattice &L);

struct P6Frame {
    complex tau, t, lambda, delta1, mu, H_VI;
    complex gamma;       // 2 pi i d(delta_1)/d tau, when computed
    complex calH;        // (gamma^2 - sum (l_i + 1/2)^2 wp(delta + omega_i))/2
    bool has_gamma = false;
    Kappas kappas;
    double kappa = 0.0;
    complex b1, mu1, p;
};

// Cross-ratio coordinates, mu = (e2 - e1) mu1, H_VI and delta_1 (the preimage
// of b1 nearest `seed`). p and H_VI are NaN when b1 is some e_i.
P6Frame frame_map(complex b1, complex mu1, const MultiIndex &l, const Lattice &L, complex seed);

// frame_map on the family plus gamma from a fourth-order difference in tau.
P6Frame family_frame(const P6Instance &inst, complex tau, complex seed, double h = 1e-4);

enum class P6Mode { elliptic, rational, hamiltonian };

const char *to_string(P6Mode mode);
P6Mode p6_mode_from_string(const std::string &name);

struct P6ResidualOptions {
    double h = 0.0;            // derivative step; 0 picks min(2e-3 max(1,|tau|), spacing/4)
    bool richardson = true;    // one Richardson pass on the derivative stencils
    double max_spacing = 0.1;  // largest allowed gap between adjacent grid points
    complex seed{0.13, 0.21};  // first delta_1 seed (reduced to the cell)
};

struct P6Point {
    complex tau, t, b1, delta1, lambda;
    complex lhs, rhs;
    double residual = 0.0;
    bool flagged = false;
    std::string note;
};

struct P6ResidualReport {
    P6Mode mode = P6Mode::elliptic;
    std::vector<P6Point> points;
    double max = 0.0, median = 0.0; // over unflagged points
    int flagged = 0;
};

// Residual of the instance along the grid in the chosen form.
// Elliptic: |delta'' - rhs| / max(1, |rhs|). Rational: the Painleve VI
// equation in (lambda, t) with derivatives through dt/dtau, scaled by
// max(1, |lambda_tt|, |each term|). Hamiltonian: the second Hamilton
// equation with gamma from differences of delta_1.
// Points hitting a parameter singularity are flagged and skipped. Throws
// ContinuityError when delta_1 cannot be continued across a gap.
P6ResidualReport p6_residual(const P6Instance &inst, const std::vector<complex> &tau_grid, P6Mode mode,
                             const P6ResidualOptions &options = {});

} // namespace heunlab
