#include "heunlab/ode_monodromy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>
#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

namespace heunlab
{

namespace
{

namespace odeint = boost::numeric::odeint;

constexpr double kPi = std::numbers::pi;

// (real, imag) of a point in the basis 1, tau
std::pair<double, double> lattice_coords(complex z, const Lattice &L)
{
    const double n = z.imag() / L.tau.imag();
    return {z.real() - n * L.tau.real(), n};
}

complex potential_value(const MultiIndex &l, complex x, const Lattice &L)
{
    complex v = 0.0;
    for (int i = 0; i < 4; ++i)
        if (l[i] != 0)
            v += double(l[i] * (l[i] + 1)) * wp(x + L.omega(i), L);
    return v;
}

} // namespace

std::vector<complex> LinearODE2::singular_points_near(complex a, complex b, double margin) const
{
    const double xlo = std::min(a.real(), b.real()) - margin, xhi = std::max(a.real(), b.real()) + margin;
    const double ylo = std::min(a.imag(), b.imag()) - margin, yhi = std::max(a.imag(), b.imag()) + margin;
    auto inside = [&](complex z) { return z.real() >= xlo && z.real() <= xhi && z.imag() >= ylo && z.imag() <= yhi; };
    std::vector<complex> out;
    if (!periodic) {
        for (const auto &s : singular)
            if (inside(s.z))
                out.push_back(s.z);
        return out;
    }
    const Lattice &L = *periodic;
    double m0 = 1e300, m1 = -1e300, n0 = 1e300, n1 = -1e300;
    for (complex c : {complex(xlo, ylo), complex(xlo, yhi), complex(xhi, ylo), complex(xhi, yhi)}) {
        auto [m, n] = lattice_coords(c, L);
        m0 = std::min(m0, m), m1 = std::max(m1, m), n0 = std::min(n0, n), n1 = std::max(n1, n);
    }
    for (const auto &s : singular) {
        auto [sm, sn] = lattice_coords(s.z, L);
        for (long m = long(std::floor(m0 - sm)) - 1; m <= long(std::ceil(m1 - sm)) + 1; ++m)
            for (long n = long(std::floor(n0 - sn)) - 1; n <= long(std::ceil(n1 - sn)) + 1; ++n) {
                complex z = s.z + double(m) + double(n) * L.tau;
                if (inside(z))
                    out.push_back(z);
            }
    }
    return out;
}

double LinearODE2::distance_to_singular(complex z) const
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto &s : singular) {
        if (!periodic) {
            best = std::min(best, std::abs(z - s.z));
            continue;
        }
        const Lattice &L = *periodic;
        complex w = z - s.z;
        w -= nearest_lattice_point(w, L);
        for (int m = -1; m <= 1; ++m)
            for (int n = -1; n <= 1; ++n)
                best = std::min(best, std::abs(w - double(m) - double(n) * L.tau));
    }
    return best;
}

LinearODE2 elliptic_ode(const MultiIndex &l, complex E, const Lattice &L)
{
    LinearODE2 ode;
    ode.label = fmt::format("elliptic l=({},{},{},{})", l[0], l[1], l[2], l[3]);
    ode.p1 = [](complex) { return complex(0.0); };
    ode.p2 = [l, E, L](complex x) { return E - potential_value(l, x, L); };
    for (int i = 0; i < 4; ++i)
        if (l[i] != 0)
            ode.singular.push_back({L.omega(i), double(-l[i]), double(l[i] + 1)});
    ode.periodic = L;
    return ode;
}

LinearODE2 fuchsian_m1_ode(const FuchsianODE_M1 &m1)
{
    const Lattice &L = m1.lattice;
    LinearODE2 ode;
    ode.label = fmt::format("apparent M=1 l=({},{},{},{})", m1.l[0], m1.l[1], m1.l[2], m1.l[3]);
    const complex b1 = m1.b1, s1 = m1.tildeS1, E = m1.tildeE;
    const MultiIndex l = m1.l;
    ode.p1 = [b1, L](complex x) {
        auto [w, dw] = wp_and_prime(x, L);
        return -dw / (w - b1);
    };
    ode.p2 = [b1, s1, E, l, L](complex x) { return -(s1 / (wp(x, L) - b1) + potential_value(l, x, L) - E); };
    ode.singular.push_back({0.0, double(l[0]), double(-l[0] - 1)});
    for (int i = 1; i <= 3; ++i)
        if (l[i] != 0)
            ode.singular.push_back({L.omega(i), double(-l[i]), double(l[i] + 1)});
    const complex d = elliptic_log(b1, L, complex(0.1, 0.1)).x;
    ode.singular.push_back({d, 0.0, 2.0});
    ode.singular.push_back({-d, 0.0, 2.0});
    ode.periodic = L;
    return ode;
}

LinearODE2 rational_ode(const RationalODE &r)
{
    LinearODE2 ode;
    ode.label = "rational";
    ode.p1 = [r](complex w) { return r.p1(w); };
    ode.p2 = [r](complex w) { return r.p2(w); };
    ode.singular = {{0.0, 0.0, 1.0 - r.kappas.k0},
                    {1.0, 0.0, 1.0 - r.kappas.k1},
                    {r.t, 0.0, 1.0 - r.kappas.kt},
                    {r.lambda, 0.0, 2.0}};
    return ode;
}

double ode_residual(const LinearODE2 &ode, const std::function<complex(complex)> &y, const std::vector<complex> &points,
                    const ResidualOptions &options)
{
    double worst = 0.0;
    for (complex x : points) {
        const double d = ode.distance_to_singular(x);
        if (d < options.clearance)
            throw ClearanceError(fmt::format("ode_residual: {}{:+}i is {:.3g} from a singular point (clearance {:.3g})",
                                             x.real(), x.imag(), d, options.clearance));
        const double h = std::min(1e-3, 0.1 * d);
        const complex f0 = y(x), fp1 = y(x + h), fm1 = y(x - h), fp2 = y(x + 2.0 * h), fm2 = y(x - 2.0 * h);
        const complex d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
        const complex d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
        const complex a = ode.p1(x) * d1, b = ode.p2(x) * f0;
        const double scale = std::abs(d2) + std::abs(a) + std::abs(b);
        const double r = scale > 0.0 ? std::abs(d2 + a + b) / scale : 0.0;
        worst = std::max(worst, std::isfinite(r) ? r : std::numeric_limits<double>::infinity());
    }
    return worst;
}

Eigen::Matrix2cd standard_basis()
{
    return Eigen::Matrix2cd::Identity();
}

namespace
{

using State = std::array<double, 8>;

// Accepts a step when |error| <= tol * dt * max(1, |state|) in the max norm,
// i.e. a fixed local error budget per unit arc length.
class PerLengthErrorChecker
{
public:
    using value_type = double;
    using algebra_type = odeint::array_algebra;
    using operations_type = odeint::default_operations;

    explicit PerLengthErrorChecker(double tol = 1e-10) : tol_(tol) {}

    template <class S, class D, class E, class T>
    double error(const S &x, const D &dxdt, E &err, T dt) const
    {
        algebra_type a;
        return error(a, x, dxdt, err, dt);
    }

    template <class S, class D, class E, class T>
    double error(algebra_type &, const S &x, const D &, E &err, T dt) const
    {
        double e = 0.0, n = 1.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            e = std::max(e, std::abs(err[i]));
            n = std::max(n, std::abs(x[i]));
        }
        return e / (tol_ * std::abs(dt) * n);
    }

private:
    double tol_;
};

using Dopri = odeint::runge_kutta_dopri5<State>;
using Controlled = odeint::controlled_runge_kutta<Dopri, PerLengthErrorChecker>;

void pack(const Eigen::Matrix2cd &m, State &x)
{
    for (int c = 0; c < 2; ++c)
        for (int r = 0; r < 2; ++r) {
            x[2 * (2 * c + r)] = m(r, c).real();
            x[2 * (2 * c + r) + 1] = m(r, c).imag();
        }
}

Eigen::Matrix2cd unpack(const State &x)
{
    Eigen::Matrix2cd m;
    for (int c = 0; c < 2; ++c)
        for (int r = 0; r < 2; ++r)
            m(r, c) = complex(x[2 * (2 * c + r)], x[2 * (2 * c + r) + 1]);
    return m;
}

bool finite_state(const State &x)
{
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

// Transport of (y, y') along the straight segment a -> b.
Eigen::Matrix2cd transport_segment(const LinearODE2 &ode, complex a, complex b, Eigen::Matrix2cd phi,
                                   const MonodromyOptions &opt, long &steps)
{
    const double len = std::abs(b - a);
    if (len == 0.0)
        return phi;
    const complex u = (b - a) / len;
    auto sys = [&](const State &x, State &dx, double s) {
        const complex z = a + u * s;
        const complex q1 = ode.p1(z), q2 = ode.p2(z);
        for (int c = 0; c < 2; ++c) {
            const complex y(x[4 * c], x[4 * c + 1]), yp(x[4 * c + 2], x[4 * c + 3]);
            const complex dy = u * yp, dyp = u * (-q2 * y - q1 * yp);
            dx[4 * c] = dy.real();
            dx[4 * c + 1] = dy.imag();
            dx[4 * c + 2] = dyp.real();
            dx[4 * c + 3] = dyp.imag();
        }
    };
    Controlled stepper{PerLengthErrorChecker(opt.tol_per_length)};
    State x;
    pack(phi, x);
    double s = 0.0;
    double ds = std::min(len, 0.05 * std::max(opt.clearance, std::min(1.0, ode.distance_to_singular(a))));
    const double ds_min = 1e-13 * std::max(1.0, len);
    while (s < len) {
        if (s + ds > len)
            ds = len - s;
        if (++steps > opt.max_steps)
            throw IntegrationError(fmt::format("monodromy_matrix: step budget exhausted on '{}'", ode.label), a + u * s);
        const double s_before = s;
        auto res = stepper.try_step(sys, x, s, ds);
        if (res == odeint::fail) {
            if (ds < ds_min) {
                const complex z = a + u * s;
                throw IntegrationError(fmt::format("monodromy_matrix: step size collapsed near {}{:+}i on '{}'",
                                                   z.real(), z.imag(), ode.label),
                                       z);
            }
            continue;
        }
        if (!finite_state(x)) {
            const complex z = a + u * s_before;
            throw IntegrationError(fmt::format("monodromy_matrix: non-finite solution near {}{:+}i", z.real(), z.imag()), z);
        }
        if (len - s < 1e-15 * len)
            s = len;
    }
    return unpack(x);
}

std::array<complex, 2> eigenvalues_2x2(const Eigen::Matrix2cd &m)
{
    const complex half_tr = 0.5 * (m(0, 0) + m(1, 1));
    const complex det = m.determinant();
    const complex root = std::sqrt(half_tr * half_tr - det);
    complex l1 = std::abs(half_tr + root) >= std::abs(half_tr - root) ? half_tr + root : half_tr - root;
    complex l2 = l1 != 0.0 ? det / l1 : 0.0;
    return {l1, l2};
}

bool is_lattice_vector(complex d, const Lattice &L)
{
    return std::abs(d - nearest_lattice_point(d, L)) <= 1e-12 * std::max(1.0, std::abs(d));
}

} // namespace

MonodromyResult monodromy_matrix(const LinearODE2 &ode, const PathPolyline &loop, const Eigen::Matrix2cd &basis,
                                 const MonodromyOptions &options)
{
    if (loop.vertices.size() < 2)
        throw DomainError("monodromy_matrix: the loop needs at least two vertices");
    const complex start = loop.vertices.front(), end = loop.vertices.back();
    const bool closed = std::abs(end - start) <= 1e-12 * std::max(1.0, std::abs(start));
    if (!closed && !(ode.periodic && is_lattice_vector(end - start, *ode.periodic)))
        throw DomainError("monodromy_matrix: the loop is not closed (nor closed modulo the period lattice)");
    const double bnorm = basis.cwiseAbs().maxCoeff();
    if (!(std::abs(basis.determinant()) > 1e-13 * bnorm * bnorm))
        throw DomainError("monodromy_matrix: the initial basis is linearly dependent");
    for (std::size_t k = 0; k + 1 < loop.vertices.size(); ++k) {
        const complex a = loop.vertices[k], b = loop.vertices[k + 1];
        for (complex s : ode.singular_points_near(a, b, options.clearance))
            if (segment_distance(s, a, b) < options.clearance)
                throw ClearanceError(fmt::format("monodromy_matrix: segment {} passes within {:.3g} of the singular "
                                                 "point {}{:+}i",
                                                 k, segment_distance(s, a, b), s.real(), s.imag()));
    }
    MonodromyResult out;
    out.base = start;
    out.loop = loop;
    out.basis = basis;
    Eigen::Matrix2cd phi = Eigen::Matrix2cd::Identity();
    for (std::size_t k = 0; k + 1 < loop.vertices.size(); ++k)
        phi = transport_segment(ode, loop.vertices[k], loop.vertices[k + 1], phi, options, out.steps);
    out.transport = phi;
    out.matrix = basis.inverse() * phi * basis;
    out.det = phi.determinant();
    out.eigenvalues = eigenvalues_2x2(out.matrix);
    return out;
}

PathPolyline circle_loop(complex centre, double radius, int n)
{
    if (n < 3 || !(radius > 0.0))
        throw DomainError("circle_loop: need n >= 3 and a positive radius");
    PathPolyline p;
    for (int k = 0; k < n; ++k)
        p.vertices.push_back(centre + radius * std::exp(complex(0.0, 2.0 * kPi * k / n)));
    p.vertices.push_back(p.vertices.front());
    p.clearance = radius * std::cos(kPi / n);
    return p;
}

PathPolyline concatenate(const PathPolyline &a, const PathPolyline &b)
{
    if (a.vertices.empty() || b.vertices.empty())
        return a.vertices.empty() ? b : a;
    if (std::abs(a.vertices.back() - b.vertices.front()) > 1e-12 * std::max(1.0, std::abs(a.vertices.back())))
        throw DomainError("concatenate: the second path does not start where the first ends");
    PathPolyline p = a;
    p.vertices.insert(p.vertices.end(), b.vertices.begin() + 1, b.vertices.end());
    p.clearance = std::min(a.clearance, b.clearance);
    return p;
}

PathPolyline period_cycle(const LinearODE2 &ode, complex base, int k, double clearance)
{
    if (!ode.periodic)
        throw DomainError("period_cycle: the equation has no period lattice");
    if (k != 1 && k != 3)
        throw DomainError("period_cycle: k must be 1 or 3");
    const Lattice &L = *ode.periodic;
    const complex D = 2.0 * L.omega(k);
    const complex normal = complex(0.0, 1.0) * D / std::abs(D);
    const double step = 2.0 * clearance;
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double off = (attempt % 2 ? -1.0 : 1.0) * double((attempt + 1) / 2) * step;
        const complex a = base + off * normal, b = a + D;
        double dmin = std::numeric_limits<double>::infinity();
        for (complex s : ode.singular_points_near(a, b, clearance))
            dmin = std::min(dmin, segment_distance(s, a, b));
        if (dmin >= clearance) {
            PathPolyline p;
            p.vertices = {a, b};
            p.clearance = std::min(dmin, 1e300);
            return p;
        }
    }
    throw ClearanceError("period_cycle: no sideways offset clears the singular points");
}

complex predicted_det(const LinearODE2 &ode, const PathPolyline &loop)
{
    auto f = plain_integrand(ode.p1, "p1");
    return std::exp(-integrate_path(f, loop, 1e-12).value);
}

Eigen::Matrix2cd lambda_pair_basis(const SpectralData &sd, complex x0, const Lattice &L)
{
    Eigen::Matrix2cd b;
    b << 1.0, 1.0, lambda_log_derivatives(sd, x0, L)[0], -lambda_log_derivatives(sd, -x0, L)[0];
    return b;
}

Eigen::Matrix2cd lambda_pair_basis(const P6Spectral &s, complex x0, const Lattice &L)
{
    const complex sq = s.sqrt_minus_Q();
    auto u = [&](complex x) {
        auto xi = eval_xi(s, x, L);
        auto [w, dw] = wp_and_prime(x, L);
        return 0.5 * (xi[1] / xi[0] + dw / (w - s.b1)) + sq / xi[0];
    };
    Eigen::Matrix2cd b;
    b << 1.0, 1.0, u(x0), -u(-x0);
    return b;
}

double off_diagonal_leakage(const Eigen::Matrix2cd &m)
{
    const double diag = std::max(std::abs(m(0, 0)), std::abs(m(1, 1)));
    return std::max(std::abs(m(0, 1)), std::abs(m(1, 0))) / diag;
}

MultiplierComparison multiplier_compare(const MonodromyResult &result, complex alpha, complex kappa, int k,
                                        const Lattice &L)
{
    if (k != 1 && k != 3)
        throw DomainError("multiplier_compare: k must be 1 or 3");
    const int j = k == 1 ? 3 : 1;
    MultiplierComparison c;
    c.k = k;
    c.eigenvalues = result.eigenvalues;
    const complex za = zeta(alpha, L);
    c.exponent = -2.0 * L.eta(k) * alpha + 2.0 * L.omega(k) * za + 2.0 * kappa * L.omega(k);
    c.exponent_other = -2.0 * L.eta(k) * alpha + 2.0 * L.omega(j) * za + 2.0 * kappa * L.omega(j);
    auto agree = [&](complex e) {
        const complex m = std::exp(e), mi = std::exp(-e);
        const auto &ev = c.eigenvalues;
        double a = std::max(std::abs(ev[0] - m), std::abs(ev[1] - mi));
        double b = std::max(std::abs(ev[1] - m), std::abs(ev[0] - mi));
        return std::min(a, b);
    };
    c.agreement = agree(c.exponent);
    c.agreement_other = agree(c.exponent_other);
    return c;
}

} // namespace heunlab
