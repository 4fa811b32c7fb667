#pragma once

// Second-order linear ODEs y'' + p1 y' + p2 y = 0 in the complex plane:
// finite-difference residuals of candidate solutions, numerical continuation
// of a fundamental system along closed polygonal loops, and comparison of
// the resulting multipliers with the closed forms.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "heunlab/painleve6.hpp"
#include "heunlab/quadrature.hpp"
#include "heunlab/spectral.hpp"

namespace heunlab
{

struct SingularPoint {
    complex z;
    complex rho1, rho2; // local exponents
};

struct LinearODE2 {
    std::string label;
    std::function<complex(complex)> p1, p2;
    // Singular points; for doubly periodic coefficients these are
    // representatives and every lattice translate is singular too.
    std::vector<SingularPoint> singular;
    std::optional<Lattice> periodic;

    // Singular points (translates included) in the box spanned by a and b,
    // widened by margin.
    std::vector<complex> singular_points_near(complex a, complex b, double margin) const;
    double distance_to_singular(complex z) const;
};

// -y'' + (V(x) - E) y = 0 with V = sum l_i(l_i+1) wp(x + omega_i).
LinearODE2 elliptic_ode(const MultiIndex &l, complex E, const Lattice &L);

// The M = 1 equation: -y'' + wp'/(wp - b1) y' + (s1/(wp - b1) + V - E) y = 0.
LinearODE2 fuchsian_m1_ode(const FuchsianODE_M1 &ode);

// The rational form with singular points 0, 1, t, lambda (and infinity).
LinearODE2 rational_ode(const RationalODE &ode);

struct ResidualOptions {
    double clearance = 1e-2;
};

// max over points of |y'' + p1 y' + p2 y| / (|y''| + |p1 y'| + |p2 y|), with
// five-point derivatives at step min(1e-3, 0.1 * distance to the nearest
// singular point). Throws ClearanceError for a point inside the clearance.
double ode_residual(const LinearODE2 &ode, const std::function<complex(complex)> &y,
                    const std::vector<complex> &points, const ResidualOptions &options = {});

struct MonodromyOptions {
    double tol_per_length = 1e-10; // local error bound per unit arc length, relative to the state
    double clearance = 1e-2;
    long max_steps = 2'000'000;
};

struct MonodromyResult {
    complex base;
    PathPolyline loop;
    // Continued basis = initial basis * matrix. Columns of `basis` hold
    // (y, y') at the base point.
    Eigen::Matrix2cd basis;
    Eigen::Matrix2cd transport; // (y, y') at the end = transport * (y, y') at the start
    Eigen::Matrix2cd matrix;
    std::array<complex, 2> eigenvalues;
    complex det;
    long steps = 0;
};

// Identity basis (y, y') = (1, 0), (0, 1).
Eigen::Matrix2cd standard_basis();

// Continues the basis along the loop with an adaptive Dormand-Prince 5(4)
// integrator on the companion system. The loop must be closed, or for
// periodic coefficients close up to a lattice vector. Throws ClearanceError
// when the loop passes within the clearance of a listed singular point,
// IntegrationError (with the location) when the step size collapses, and
// DomainError for a degenerate basis or an open loop.
MonodromyResult monodromy_matrix(const LinearODE2 &ode, const PathPolyline &loop,
                                 const Eigen::Matrix2cd &basis = standard_basis(), const MonodromyOptions &options = {});

// Closed polygon with n vertices on the circle |z - centre| = radius,
// starting and ending at centre + radius.
PathPolyline circle_loop(complex centre, double radius, int n = 16);

// a followed by b; b must start where a ends.
PathPolyline concatenate(const PathPolyline &a, const PathPolyline &b);

// Straight displacement base -> base + 2 omega_k (k = 1 or 3). When the
// segment comes within `clearance` of a singular point the base point is
// moved sideways until it clears; the returned path starts at the base used.
PathPolyline period_cycle(const LinearODE2 &ode, complex base, int k, double clearance = 5e-2);

// exp(-int_loop p1), the Wronskian transport factor.
complex predicted_det(const LinearODE2 &ode, const PathPolyline &loop);

// Basis of (Lambda(x), Lambda(-x)) at x0, normalised to value 1: columns
// (1, u(x0)) and (1, -u(-x0)) with u = Lambda'/Lambda.
Eigen::Matrix2cd lambda_pair_basis(const SpectralData &sd, complex x0, const Lattice &L);
Eigen::Matrix2cd lambda_pair_basis(const P6Spectral &s, complex x0, const Lattice &L);

// Largest off-diagonal entry of the matrix relative to its largest diagonal entry.
double off_diagonal_leakage(const Eigen::Matrix2cd &m);

struct MultiplierComparison {
    int k = 1;
    complex exponent;           // -2 eta_k alpha + 2 omega_k zeta(alpha) + 2 kappa omega_k
    complex exponent_other;     // the same with omega_j (j the other cycle index) in the last two terms
    std::array<complex, 2> eigenvalues;
    double agreement = 0.0;       // min over pairings of max |eig - exp(+-exponent)|
    double agreement_other = 0.0; // the same for exponent_other
};

MultiplierComparison multiplier_compare(const MonodromyResult &result, complex alpha, complex kappa, int k,
                                        const Lattice &L);

} // namespace heunlab
