#include "heunlab/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace heunlab
{

const char *to_string(WeierstrassKind kind)
{
    switch (kind) {
        case WeierstrassKind::wp:
            return "wp";
        case WeierstrassKind::wp_prime:
            return "wp_prime";
        case WeierstrassKind::zeta:
            return "zeta";
        case WeierstrassKind::sigma:
            return "sigma";
    }
    return "?";
}

namespace
{

template <typename T>
constexpr T pi = std::numbers::pi_v<T>;

template <typename T>
std::complex<T> imag_unit()
{
    return {T(0), T(1)};
}

template <typename T>
bool finite(const std::complex<T> &z)
{
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

// Sums of the theta_1 series and its first three derivatives at v, each
// divided by 2 q^(1/4):
//   s0 = sum (-1)^n q^(n(n+1)) sin((2n+1)v)
//   s1 = d s0/dv, s2 = d^2 s0/dv^2, s3 = d^3 s0/dv^3.
template <typename T>
struct ThetaSums {
    std::complex<T> s0, s1, s2, s3;
    T tail = 0; // relative bound on the omitted terms
    int terms = 0;
};

template <typename T>
ThetaSums<T> theta_sums(std::complex<T> v, std::complex<T> tau_r, T target)
{
    const T im_tau = tau_r.imag();
    const T im_v = std::abs(v.imag());
    const T eps = std::numeric_limits<T>::epsilon();
    const T floor_rel = std::min(target, eps) * T(1e-3);
    // Scale of the leading term of s0: |sin v| (>= a fraction of e^{|Im v|} away from v ~ 0)
    const T lead = std::max(std::abs(std::sin(v)), std::numeric_limits<T>::min());
    const T lead_scale = std::min(T(1), lead) * std::exp(im_v) / std::max(T(1), std::cosh(im_v));

    ThetaSums<T> out;
    for (int n = 0; n < 64; ++n) {
        const T k = T(2 * n + 1);
        const T log_mag = -pi<T> * im_tau * T(n) * T(n + 1);
        // bound on |term| of the highest derivative relative to the leading scale
        const T bound = std::exp(log_mag + (k - T(1)) * im_v) * k * k * k;
        if (n > 0 && bound < floor_rel * lead_scale) {
            out.tail = bound / lead_scale;
            break;
        }
        const std::complex<T> nn =
            std::exp(imag_unit<T>() * pi<T> * tau_r * T(n) * T(n + 1)) * (n % 2 == 0 ? T(1) : T(-1));
        const std::complex<T> sn = std::sin(k * v);
        const std::complex<T> cn = std::cos(k * v);
        out.s0 += nn * sn;
        out.s1 += nn * k * cn;
        out.s2 -= nn * k * k * sn;
        out.s3 -= nn * k * k * k * cn;
        out.terms = n + 1;
    }
    return out;
}

template <typename T>
struct ReducedArg {
    std::complex<T> u0; // representative in the centred cell of Z + tau_r Z
    std::int64_t a = 0;  // u = u0 + a + b tau_r
    std::int64_t b = 0;
};

template <typename T>
ReducedArg<T> reduce_arg(std::complex<T> u, std::complex<T> tau_r)
{
    ReducedArg<T> r;
    const T bb = std::round(u.imag() / tau_r.imag());
    std::complex<T> u1 = u - bb * tau_r;
    const T aa = std::round(u1.real());
    r.u0 = u1 - aa;
    r.a = static_cast<std::int64_t>(aa);
    r.b = static_cast<std::int64_t>(bb);
    return r;
}

template <typename T>
detail::ReducedLattice<T> reduce_tau(std::complex<T> tau)
{
    detail::ReducedLattice<T> red;
    std::int64_t a = 1, b = 0, c = 0, d = 1;
    std::complex<T> tr = tau;
    for (int iter = 0; iter < 10000; ++iter) {
        const T n = std::round(tr.real());
        if (std::abs(n) > T(1e15)) {
            throw PrecisionError("tau reduction overflow");
        }
        const auto in = static_cast<std::int64_t>(n);
        tr -= n;
        a -= in * c;
        b -= in * d;
        if (std::norm(tr) < T(1) - T(64) * std::numeric_limits<T>::epsilon()) {
            tr = T(-1) / tr;
            const std::int64_t na = -c, nb = -d, nc = a, nd = b;
            a = na;
            b = nb;
            c = nc;
            d = nd;
        } else {
            break;
        }
        if (std::max(std::llabs(c), std::llabs(d)) > (std::int64_t(1) << 40)) {
            throw PrecisionError("tau too close to the real axis: modular reduction does not terminate");
        }
    }
    red.tau_r = tr;
    red.matrix = {a, b, c, d};
    red.scale = T(c) * tau + T(d);
    return red;
}

} // namespace

template <typename T>
typename BasicLattice<T>::cplx BasicLattice<T>::omega(int i) const
{
    switch (i) {
        case 0:
            return cplx(0);
        case 1:
            return omega1;
        case 2:
            return omega2;
        case 3:
            return omega3;
        default:
            throw DomainError("half-period index must be 0..3");
    }
}

template <typename T>
typename BasicLattice<T>::cplx BasicLattice<T>::e(int i) const
{
    switch (i) {
        case 1:
            return e1;
        case 2:
            return e2;
        case 3:
            return e3;
        default:
            throw DomainError("branch point index must be 1..3");
    }
}

template <typename T>
typename BasicLattice<T>::cplx BasicLattice<T>::eta(int i) const
{
    switch (i) {
        case 1:
            return eta1;
        case 2:
            return -eta1 - eta3;
        case 3:
            return eta3;
        default:
            throw DomainError("quasi-period index must be 1..3");
    }
}

namespace
{

template <typename T>
EllipticValue<T> eval_core(WeierstrassKind kind, std::complex<T> z, const BasicLattice<T> &lat, bool check_pole)
{
    using C = std::complex<T>;
    const auto &red = lat.reduced;
    if (!finite(z)) {
        throw DomainError("non-finite argument");
    }
    const C u = z / red.scale;
    const ReducedArg<T> ra = reduce_arg(u, red.tau_r);
    const C u0 = ra.u0;
    const T eps = std::numeric_limits<T>::epsilon();

    if (kind != WeierstrassKind::sigma && check_pole && std::abs(u0) < T(lat.config.pole_clearance)) {
        const C lp = red.scale * (T(ra.a) + T(ra.b) * red.tau_r);
        std::ostringstream os;
        os << "argument within pole clearance of lattice point (" << double(lp.real()) << ","
           << double(lp.imag()) << ")";
        throw PoleProximityError(os.str(), complex(double(lp.real()), double(lp.imag())));
    }

    const C v = pi<T> * u0;
    const ThetaSums<T> th = theta_sums(v, red.tau_r, T(lat.config.target));
    const T rel = T(16) * eps + th.tail;
    const C s = red.scale;

    EllipticValue<T> out{z, kind, C(0), T(0)};
    switch (kind) {
        case WeierstrassKind::wp: {
            const C r1 = th.s1 / th.s0;
            const C r2 = th.s2 / th.s0;
            const C val = -T(2) * red.eta1_r - pi<T> * pi<T> * (r2 - r1 * r1);
            out.value = val / (s * s);
            out.error_estimate =
                rel * (pi<T> * pi<T> * (std::abs(r2) + T(2) * std::norm(r1)) + T(2) * std::abs(red.eta1_r)) /
                std::norm(s);
            break;
        }
        case WeierstrassKind::wp_prime: {
            const C r1 = th.s1 / th.s0;
            const C r2 = th.s2 / th.s0;
            const C r3 = th.s3 / th.s0;
            const C val = -pi<T> * pi<T> * pi<T> * (r3 - T(3) * r1 * r2 + T(2) * r1 * r1 * r1);
            out.value = val / (s * s * s);
            out.error_estimate = rel * pi<T> * pi<T> * pi<T> *
                                 (std::abs(r3) + T(3) * std::abs(r1 * r2) + T(2) * std::pow(std::abs(r1), 3)) /
                                 std::pow(std::abs(s), 3);
            break;
        }
        case WeierstrassKind::zeta: {
            const C eta3_r = red.eta3_r;
            const C shift = T(2) * T(ra.a) * red.eta1_r + T(2) * T(ra.b) * eta3_r;
            const C local = T(2) * red.eta1_r * u0 + pi<T> * th.s1 / th.s0;
            out.value = (local + shift) / s;
            out.error_estimate = (rel * (std::abs(T(2) * red.eta1_r * u0) + pi<T> * std::abs(th.s1 / th.s0)) +
                                  eps * std::abs(shift) * T(4)) /
                                 std::abs(s);
            break;
        }
        case WeierstrassKind::sigma: {
            const C local = std::exp(red.eta1_r * u0 * u0) * th.s0 / (pi<T> * red.theta1_prime0);
            const std::int64_t m = ra.a, n = ra.b;
            const bool odd = ((m + n + m * n) % 2) != 0;
            const C omega_vec = T(m) + T(n) * red.tau_r;
            const C eta_vec = T(2) * T(m) * red.eta1_r + T(2) * T(n) * red.eta3_r;
            C val = std::exp(eta_vec * (u0 + omega_vec / T(2))) * local;
            if (odd) {
                val = -val;
            }
            out.value = s * val;
            out.error_estimate = std::abs(out.value) * (rel + eps * T(4) * (T(1) + std::abs(eta_vec * u0)));
            break;
        }
    }
    if (!finite(out.value)) {
        throw NumericError(std::string("non-finite ") + to_string(kind) + " value");
    }
    return out;
}

} // namespace

template <typename T>
BasicLattice<T> lattice_from_tau(std::complex<T> tau, const EllipticConfig &config)
{
    using C = std::complex<T>;
    if (!finite(tau) || !(tau.imag() > T(0))) {
        throw DomainError("lattice_from_tau requires Im tau > 0");
    }
    if (!(config.target > 0) || !(config.pole_clearance > 0)) {
        throw DomainError("elliptic configuration tolerances must be positive");
    }
    BasicLattice<T> lat;
    lat.tau = tau;
    lat.config = config;
    lat.omega1 = C(T(1) / T(2));
    lat.omega3 = tau / T(2);
    lat.omega2 = -lat.omega1 - lat.omega3;

    auto &red = lat.reduced;
    red = reduce_tau(tau);
    // theta series overflow guard: the leading term grows like exp(pi Im tau_r / 2)
    const T max_im = T(0.5) * std::log(std::numeric_limits<T>::max()) * T(2) / pi<T>;
    if (red.tau_r.imag() > max_im) {
        throw PrecisionError("tau too close to the real axis for the working precision");
    }
    const ThetaSums<T> th0 = theta_sums(C(0), red.tau_r, T(config.target));
    red.theta1_prime0 = th0.s1;
    red.eta1_r = -(pi<T> * pi<T> / T(6)) * th0.s3 / th0.s1;
    red.eta3_r = red.eta1_r * red.tau_r - imag_unit<T>() * pi<T>;

    lat.e1 = eval_core(WeierstrassKind::wp, lat.omega1, lat, false).value;
    lat.e2 = eval_core(WeierstrassKind::wp, lat.omega2, lat, false).value;
    lat.e3 = eval_core(WeierstrassKind::wp, lat.omega3, lat, false).value;
    lat.g2 = -T(4) * (lat.e1 * lat.e2 + lat.e2 * lat.e3 + lat.e3 * lat.e1);
    lat.g3 = T(4) * lat.e1 * lat.e2 * lat.e3;
    lat.eta1 = eval_core(WeierstrassKind::zeta, lat.omega1, lat, false).value;
    lat.eta3 = eval_core(WeierstrassKind::zeta, lat.omega3, lat, false).value;
    lat.t = (lat.e3 - lat.e1) / (lat.e2 - lat.e1);
    return lat;
}

template <typename T>
EllipticValue<T> eval_weierstrass(WeierstrassKind kind, std::complex<T> z, const BasicLattice<T> &lattice)
{
    return eval_core(kind, z, lattice, true);
}

template <typename T>
std::pair<std::complex<T>, std::complex<T>> wp_and_prime(std::complex<T> z, const BasicLattice<T> &lattice)
{
    using C = std::complex<T>;
    const auto &red = lattice.reduced;
    const C u = z / red.scale;
    const ReducedArg<T> ra = reduce_arg(u, red.tau_r);
    if (std::abs(ra.u0) < T(lattice.config.pole_clearance)) {
        // defer to the checked path for the error message
        (void)eval_weierstrass(WeierstrassKind::wp, z, lattice);
    }
    const ThetaSums<T> th = theta_sums(pi<T> * ra.u0, red.tau_r, T(lattice.config.target));
    const C r1 = th.s1 / th.s0;
    const C r2 = th.s2 / th.s0;
    const C r3 = th.s3 / th.s0;
    const C s = red.scale;
    const C p = (-T(2) * red.eta1_r - pi<T> * pi<T> * (r2 - r1 * r1)) / (s * s);
    const C dp = (-pi<T> * pi<T> * pi<T> * (r3 - T(3) * r1 * r2 + T(2) * r1 * r1 * r1)) / (s * s * s);
    return {p, dp};
}

template <typename T>
std::complex<T> nearest_lattice_point(std::complex<T> z, const BasicLattice<T> &lattice)
{
    using C = std::complex<T>;
    const C tau = lattice.tau;
    const T bb = std::round(z.imag() / tau.imag());
    const T aa = std::round((z - bb * tau).real());
    C best = aa + bb * tau;
    T best_d = std::abs(z - best);
    for (int da = -1; da <= 1; ++da) {
        for (int db = -1; db <= 1; ++db) {
            const C cand = (aa + T(da)) + (bb + T(db)) * tau;
            const T d = std::abs(z - cand);
            if (d < best_d) {
                best_d = d;
                best = cand;
            }
        }
    }
    return best;
}

template <typename T>
std::complex<T> reduce_to_cell(std::complex<T> z, const BasicLattice<T> &lattice)
{
    return z - nearest_lattice_point(z, lattice);
}

template <typename T>
std::complex<T> eval_phi(int i, std::complex<T> x, std::complex<T> alpha, const BasicLattice<T> &lattice)
{
    return eval_phi_derivatives(i, x, alpha, lattice)[0];
}

template <typename T>
std::array<std::complex<T>, 3> eval_phi_derivatives(int i, std::complex<T> x, std::complex<T> alpha,
                                                    const BasicLattice<T> &lattice)
{
    using C = std::complex<T>;
    if (std::abs(reduce_to_cell(alpha, lattice)) < T(lattice.config.pole_clearance)) {
        throw DegeneracyError("alpha is a lattice point: the Hermite-Krichever form degenerates");
    }
    const C xi = x + lattice.omega(i);
    if (std::abs(reduce_to_cell(xi, lattice)) < T(lattice.config.pole_clearance)) {
        const C lp = nearest_lattice_point(xi, lattice);
        throw PoleProximityError("x + omega_i is a zero of sigma", complex(double(lp.real()), double(lp.imag())));
    }
    const C num = eval_weierstrass(WeierstrassKind::sigma, xi - alpha, lattice).value;
    const C den = eval_weierstrass(WeierstrassKind::sigma, xi, lattice).value;
    const C za = zeta(alpha, lattice);
    const C phi = num / den * std::exp(za * x);
    const C g = zeta(xi - alpha, lattice) - zeta(xi, lattice) + za;
    const C dg = -wp(xi - alpha, lattice) + wp(xi, lattice);
    return {phi, phi * g, phi * (g * g + dg)};
}

template <typename T>
std::complex<T> carlson_rf(std::complex<T> x, std::complex<T> y, std::complex<T> z)
{
    using C = std::complex<T>;
    const T eps = std::numeric_limits<T>::epsilon();
    C a0 = (x + y + z) / T(3);
    const T qbound = std::pow(T(3) * eps, -T(1) / T(6)) *
                     std::max({std::abs(a0 - x), std::abs(a0 - y), std::abs(a0 - z)});
    C a = a0;
    C xm = x, ym = y, zm = z;
    T pow4 = 1;
    for (int it = 0; it < 200; ++it) {
        if (pow4 * qbound < std::abs(a)) {
            break;
        }
        const C sx = std::sqrt(xm), sy = std::sqrt(ym), sz = std::sqrt(zm);
        const C lam = sx * sy + sx * sz + sy * sz;
        a = (a + lam) / T(4);
        xm = (xm + lam) / T(4);
        ym = (ym + lam) / T(4);
        zm = (zm + lam) / T(4);
        pow4 /= T(4);
    }
    const C X = (a0 - x) * pow4 / a;
    const C Y = (a0 - y) * pow4 / a;
    const C Z = -X - Y;
    const C e2 = X * Y - Z * Z;
    const C e3 = X * Y * Z;
    return (T(1) - e2 / T(10) + e3 / T(14) + e2 * e2 / T(24) - T(3) * e2 * e3 / T(44)) / std::sqrt(a);
}

namespace
{

template <typename T>
bool newton_wp(std::complex<T> w, const BasicLattice<T> &lat, std::complex<T> &x)
{
    using C = std::complex<T>;
    const T eps = std::numeric_limits<T>::epsilon();
    const T wscale = std::max(T(1), std::abs(w));
    for (int it = 0; it < 60; ++it) {
        C p, dp;
        try {
            std::tie(p, dp) = wp_and_prime(x, lat);
        } catch (const Error &) {
            return false;
        }
        const C f = p - w;
        if (std::abs(f) <= T(4) * eps * std::max(wscale, std::abs(p))) {
            return true;
        }
        if (std::abs(dp) == T(0)) {
            return false;
        }
        C dx = f / dp;
        // keep the step inside roughly one cell
        const T lim = T(0.25) * std::min(T(1), lat.tau.imag());
        if (std::abs(dx) > lim) {
            dx *= lim / std::abs(dx);
        }
        x -= dx;
        if (!finite(x)) {
            return false;
        }
        if (std::abs(dx) <= T(4) * eps * std::max(T(1), std::abs(x))) {
            return true;
        }
    }
    try {
        const C p = wp_and_prime(x, lat).first;
        return std::abs(p - w) <= T(1e3) * eps * std::max(wscale, std::abs(p));
    } catch (const Error &) {
        return false;
    }
}

} // namespace

template <typename T>
EllipticLog<T> elliptic_log(std::complex<T> w, const BasicLattice<T> &lattice, std::complex<T> branch_seed)
{
    using C = std::complex<T>;
    if (!finite(w)) {
        throw DomainError("elliptic_log requires a finite value");
    }
    const T eps = std::numeric_limits<T>::epsilon();
    const T escale = std::max({T(1), std::abs(lattice.e1), std::abs(lattice.e2), std::abs(lattice.e3)});
    for (int i = 1; i <= 3; ++i) {
        if (std::abs(w - lattice.e(i)) <= T(16) * eps * escale) {
            const C om = lattice.omega(i);
            if (nearest_lattice_point(branch_seed, lattice) == C(0)) {
                return {om, true};
            }
            return {om + nearest_lattice_point(branch_seed - om, lattice), true};
        }
    }

    C x = carlson_rf(w - lattice.e1, w - lattice.e2, w - lattice.e3);
    bool ok = finite(x) && newton_wp(w, lattice, x);
    if (!ok) {
        // coarse search over the centred cell
        const int n = 24;
        T best = std::numeric_limits<T>::infinity();
        C best_x{};
        for (int ia = -n; ia <= n; ++ia) {
            for (int ib = 0; ib <= n; ++ib) {
                const C cand = T(ia) / T(2 * n) + T(ib) / T(2 * n) * lattice.tau;
                if (std::abs(cand) < T(1e-3)) {
                    continue;
                }
                try {
                    const T r = std::abs(wp(cand, lattice) - w);
                    if (r < best) {
                        best = r;
                        best_x = cand;
                    }
                } catch (const Error &) {
                }
            }
        }
        x = best_x;
        ok = newton_wp(w, lattice, x);
        if (!ok) {
            throw NumericError("elliptic_log: Newton iteration did not converge");
        }
    }

    const C c1 = x + nearest_lattice_point(branch_seed - x, lattice);
    const C c2 = -x + nearest_lattice_point(branch_seed + x, lattice);
    C pick = std::abs(c1 - branch_seed) <= std::abs(c2 - branch_seed) ? c1 : c2;
    // polish at the chosen representative
    C polished = pick;
    if (newton_wp(w, lattice, polished) && std::abs(polished - pick) < T(1e-6)) {
        pick = polished;
    }
    return {pick, false};
}

complex elliptic_k(complex m)
{
    complex a = 1.0;
    complex b = std::sqrt(1.0 - m);
    for (int it = 0; it < 100; ++it) {
        const complex an = 0.5 * (a + b);
        complex bn = std::sqrt(a * b);
        if (std::abs(an - bn) > std::abs(an + bn)) {
            bn = -bn;
        }
        a = an;
        b = bn;
        if (std::abs(a - b) <= 1e-16 * std::abs(a)) {
            break;
        }
    }
    return std::numbers::pi / (2.0 * a);
}

namespace
{

complex reduce_gamma2(complex tau)
{
    for (int it = 0; it < 1000; ++it) {
        const double n = std::round(tau.real() / 2.0);
        tau -= 2.0 * n;
        if (tau.real() <= -1.0 + 1e-13) {
            tau += 2.0;
        }
        if (std::abs(tau - 0.5) < 0.5 - 1e-14) {
            tau = tau / (1.0 - 2.0 * tau);
            continue;
        }
        if (std::abs(tau + 0.5) < 0.5 - 1e-14) {
            tau = tau / (1.0 + 2.0 * tau);
            continue;
        }
        // boundary circle on the left maps to the right one
        if (tau.real() < 0.0 && std::abs(std::abs(tau + 0.5) - 0.5) <= 1e-13) {
            tau = tau / (1.0 + 2.0 * tau);
        }
        return tau;
    }
    throw NumericError("Gamma(2) reduction did not terminate");
}

} // namespace

complex tau_from_t(complex t)
{
    if (!finite(t)) {
        throw DomainError("tau_from_t requires finite t");
    }
    if (std::abs(t) < 1e-300 || std::abs(t - 1.0) < 1e-300) {
        throw DomainError("tau_from_t: t must differ from 0 and 1");
    }
    const complex lam = (t - 1.0) / t;
    complex tau = complex(0, 1) * elliptic_k(1.0 - lam) / elliptic_k(lam);
    if (!finite(tau) || tau.imag() <= 0) {
        tau = complex(0, 1);
    }
    tau = reduce_gamma2(tau);
    const complex pii = complex(0, std::numbers::pi);
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        const Lattice lat = lattice_from_tau(tau);
        const complex f = lat.t - t;
        const complex dt = (lat.e2 - lat.e1) * lat.t * (lat.t - 1.0) / pii;
        complex step = f / dt;
        const double lim = 0.5 * tau.imag();
        if (std::abs(step) > lim) {
            step *= lim / std::abs(step);
        }
        tau -= step;
        if (tau.imag() <= 0) {
            tau = complex(tau.real(), 1e-3);
        }
        if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(tau))) {
            converged = true;
            break;
        }
    }
    tau = reduce_gamma2(tau);
    const Lattice lat = lattice_from_tau(tau);
    if (!converged && std::abs(lat.t - t) > 1e-10 * std::max(1.0, std::abs(t))) {
        throw NumericError("tau_from_t: Newton iteration did not converge");
    }
    if (std::abs(lat.t - t) > 1e-8 * std::max(1.0, std::abs(t))) {
        throw NumericError("tau_from_t: residual too large after convergence");
    }
    return tau;
}

#define HEUNLAB_INSTANTIATE(T)                                                                                    \
    template struct BasicLattice<T>;                                                                              \
    template BasicLattice<T> lattice_from_tau<T>(std::complex<T>, const EllipticConfig &);                         \
    template EllipticValue<T> eval_weierstrass<T>(WeierstrassKind, std::complex<T>, const BasicLattice<T> &);       \
    template std::pair<std::complex<T>, std::complex<T>> wp_and_prime<T>(std::complex<T>, const BasicLattice<T> &); \
    template std::complex<T> eval_phi<T>(int, std::complex<T>, std::complex<T>, const BasicLattice<T> &);           \
    template std::array<std::complex<T>, 3> eval_phi_derivatives<T>(int, std::complex<T>, std::complex<T>,          \
                                                                    const BasicLattice<T> &);                     \
    template EllipticLog<T> elliptic_log<T>(std::complex<T>, const BasicLattice<T> &, std::complex<T>);            \
    template std::complex<T> nearest_lattice_point<T>(std::complex<T>, const BasicLattice<T> &);                   \
    template std::complex<T> reduce_to_cell<T>(std::complex<T>, const BasicLattice<T> &);                          \
    template std::complex<T> carlson_rf<T>(std::complex<T>, std::complex<T>, std::complex<T>);

HEUNLAB_INSTANTIATE(double)
HEUNLAB_INSTANTIATE(long double)

#undef HEUNLAB_INSTANTIATE

} // namespace heunlab
