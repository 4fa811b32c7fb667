#include "heunlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace heunlab
{

namespace
{

constexpr complex kI{0.0, 1.0};

int degree(const MultiIndex &l)
{
    return l[0] + l[1] + l[2] + l[3];
}

// P^n and its first three derivatives for P = wp(y).
std::array<complex, 4> wp_power_derivs(int n, complex P, complex P1, complex g2)
{
    const complex P2 = 6.0 * P * P - 0.5 * g2;
    const complex P3 = 12.0 * P * P1;
    auto pw = [&](int k) { return k < 0 ? complex{} : std::pow(P, k); };
    const double m = n;
    std::array<complex, 4> d;
    d[0] = pw(n);
    d[1] = m * pw(n - 1) * P1;
    d[2] = m * (m - 1) * pw(n - 2) * P1 * P1 + m * pw(n - 1) * P2;
    d[3] = m * (m - 1) * (m - 2) * pw(n - 3) * P1 * P1 * P1 + 3 * m * (m - 1) * pw(n - 2) * P1 * P2 +
           m * pw(n - 1) * P3;
    return d;
}

// Basis of Xi: index 0 is the constant, then (i, j) in order.
struct BasisTerm {
    int i = -1; // -1 for the constant
    int power = 0;
};

std::vector<BasisTerm> xi_basis(const MultiIndex &l)
{
    std::vector<BasisTerm> out{{-1, 0}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < l[i]; ++j)
            out.push_back({i, l[i] - j});
    return out;
}

std::vector<complex> pack(const SpectralData &sd)
{
    std::vector<complex> v{sd.c0};
    for (int i = 0; i < 4; ++i)
        v.insert(v.end(), sd.b[i].begin(), sd.b[i].end());
    return v;
}

// wp(x + omega_i) and wp'(x + omega_i), i = 0..3.
std::array<std::pair<complex, complex>, 4> shifted_wp(complex x, const Lattice &L, const MultiIndex &l)
{
    std::array<std::pair<complex, complex>, 4> out{};
    for (int i = 0; i < 4; ++i)
        if (l[i] > 0)
            out[i] = wp_and_prime(x + L.omega(i), L);
    return out;
}

} // namespace

complex principal_sqrt_minus_Q(complex Q)
{
    // -Q within round-off of the negative real axis: treat Im(-Q) as +0 so a
    // sampled Q and a closed-form Q pick the same root
    if (Q.real() > 0.0 && std::abs(Q.imag()) <= 1e-9 * Q.real())
        return complex(0.0, std::sqrt(std::abs(Q)));
    return std::sqrt(-Q);
}

complex SpectralData::sqrt_minus_Q() const
{
    return double(sqrtQ_sign) * principal_sqrt_minus_Q(Q);
}

std::array<complex, 2> eval_potential(const MultiIndex &l, complex x, const Lattice &L)
{
    std::array<complex, 2> v{};
    for (int i = 0; i < 4; ++i) {
        if (l[i] == 0)
            continue;
        auto [p, dp] = wp_and_prime(x + L.omega(i), L);
        double c = l[i] * (l[i] + 1);
        v[0] += c * p;
        v[1] += c * dp;
    }
    return v;
}

std::array<complex, 4> eval_xi(const SpectralData &sd, complex x, const Lattice &L)
{
    std::array<complex, 4> out{sd.c0, 0.0, 0.0, 0.0};
    auto w = shifted_wp(x, L, sd.l);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < sd.l[i]; ++j) {
            auto d = wp_power_derivs(sd.l[i] - j, w[i].first, w[i].second, L.g2);
            for (int k = 0; k < 4; ++k)
                out[k] += sd.b[i][j] * d[k];
        }
    }
    return out;
}

complex xi_of_wp(const SpectralData &sd, complex w, const Lattice &L)
{
    complex xi = sd.c0;
    for (int i = 0; i < 4; ++i) {
        if (sd.l[i] == 0)
            continue;
        complex p = w;
        if (i > 0) {
            int j = i % 3 + 1, k = (i + 1) % 3 + 1;
            p = L.e(i) + (L.e(i) - L.e(j)) * (L.e(i) - L.e(k)) / (w - L.e(i));
        }
        for (int j = 0; j < sd.l[i]; ++j)
            xi += sd.b[i][j] * std::pow(p, sd.l[i] - j);
    }
    return xi;
}

std::vector<complex> sample_points(const Lattice &L, int n, double clearance)
{
    // additive recurrence with the plastic number: well spread in the cell
    const double g = 1.32471795724474602596;
    const double a1 = 1.0 / g, a2 = 1.0 / (g * g);
    const double unit = std::min(1.0, std::abs(L.tau));
    std::vector<complex> out;
    for (int k = 1; out.size() < static_cast<std::size_t>(n) && k < 100000; ++k) {
        double a = std::fmod(0.5 + a1 * k, 1.0) - 0.5;
        double b = std::fmod(0.5 + a2 * k, 1.0) - 0.5;
        complex z = a + b * L.tau;
        bool ok = true;
        for (int i = 0; i < 4 && ok; ++i)
            if (std::abs(reduce_to_cell(z - L.omega(i), L)) < clearance * unit)
                ok = false;
        if (ok)
            out.push_back(z);
    }
    return out;
}

namespace
{

// Operator Xi''' - 4(V-E) Xi' - 2 V' Xi applied to each basis term.
std::vector<complex> apply_operator(const MultiIndex &l, const std::vector<BasisTerm> &basis, complex x, complex E,
                                    const Lattice &L, double &row_scale)
{
    auto w = shifted_wp(x, L, l);
    auto V = eval_potential(l, x, L);
    std::vector<complex> row(basis.size());
    row_scale = 0;
    for (std::size_t k = 0; k < basis.size(); ++k) {
        std::array<complex, 4> d{1.0, 0.0, 0.0, 0.0};
        if (basis[k].i >= 0)
            d = wp_power_derivs(basis[k].power, w[basis[k].i].first, w[basis[k].i].second, L.g2);
        complex t3 = d[3], t1 = -4.0 * (V[0] - E) * d[1], t0 = -2.0 * V[1] * d[0];
        row[k] = t3 + t1 + t0;
        row_scale = std::max(row_scale, std::abs(t3) + std::abs(t1) + std::abs(t0));
    }
    return row;
}

void unpack(SpectralData &sd, const std::vector<complex> &v)
{
    sd.c0 = v[0];
    std::size_t k = 1;
    for (int i = 0; i < 4; ++i) {
        sd.b[i].assign(v.begin() + k, v.begin() + k + sd.l[i]);
        k += sd.l[i];
    }
}

} // namespace

double xi_equation_residual(const SpectralData &sd, complex x, const Lattice &L)
{
    auto basis = xi_basis(sd.l);
    double scale = 0;
    auto row = apply_operator(sd.l, basis, x, sd.E, L, scale);
    auto v = pack(sd);
    complex r{};
    double size = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        r += row[k] * v[k];
        size = std::max(size, std::abs(v[k]));
    }
    return std::abs(r) / std::max(scale * size, 1e-300);
}

SpectralData build_xi_even(const MultiIndex &l, complex E, const Lattice &L, int sqrtQ_sign)
{
    for (int v : l)
        if (v < 0)
            throw DomainError("multi-index entries must be non-negative");
    if (sqrtQ_sign != 1 && sqrtQ_sign != -1)
        throw DomainError("sqrtQ_sign must be +1 or -1");
    SpectralData sd;
    sd.l = l;
    sd.E = E;
    sd.sqrtQ_sign = sqrtQ_sign;
    auto basis = xi_basis(l);
    const int N = static_cast<int>(basis.size());
    std::vector<complex> coeffs(N);
    if (N == 1) {
        coeffs[0] = 1.0;
    } else {
        auto pts = sample_points(L, std::max(3 * N, 30), 0.1);
        Eigen::MatrixXcd A(pts.size(), N);
        for (std::size_t m = 0; m < pts.size(); ++m) {
            double s = 0;
            auto row = apply_operator(l, basis, pts[m], E, L, s);
            for (int k = 0; k < N; ++k)
                A(m, k) = row[k] / s;
        }
        Eigen::VectorXd colscale(N);
        for (int k = 0; k < N; ++k) {
            colscale(k) = std::max(A.col(k).norm(), 1e-300);
            A.col(k) /= colscale(k);
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeFullV);
        const auto &sv = svd.singularValues();
        if (sv(N - 1) > 1e-9 * sv(0))
            throw NumericError(fmt::format("no even elliptic solution of the symmetric-square equation "
                                           "(smallest singular value ratio {:.3g})",
                                           sv(N - 1) / sv(0)));
        if (sv(N - 2) < 1e-7 * sv(0))
            throw DegeneracyError("degenerate E: the symmetric-square system has a multi-dimensional kernel");
        Eigen::VectorXcd v = svd.matrixV().col(N - 1);
        for (int k = 0; k < N; ++k)
            coeffs[k] = v(k) / colscale(k);
    }

    // Normalisation.
    const bool lame2 = l == MultiIndex{2, 0, 0, 0};
    int lead = -1;
    int lmax = *std::max_element(l.begin(), l.end());
    if (lmax > 0) {
        int offset = 1;
        for (int i = 0; i < 4; ++i) {
            if (l[i] == lmax) {
                lead = offset;
                break;
            }
            offset += l[i];
        }
    } else {
        lead = 0;
    }
    double vmax = 0;
    for (auto c : coeffs)
        vmax = std::max(vmax, std::abs(c));
    if (std::abs(coeffs[lead]) < 1e-10 * vmax)
        throw DegeneracyError("degenerate E: the leading coefficient of Xi vanishes; renormalise");
    complex target = lame2 ? complex(9.0) : complex(1.0);
    complex f = target / coeffs[lead];
    for (auto &c : coeffs)
        c *= f;
    coeffs[lead] = target;
    sd.normalization = lame2 ? "closed-form" : "unit-leading";
    unpack(sd, coeffs);

    auto check_pts = sample_points(L, 8, 0.15);
    for (complex x : check_pts) {
        double r = xi_equation_residual(sd, x, L);
        if (r > 1e-8)
            throw NumericError(fmt::format("Xi fails the symmetric-square equation (relative residual {:.3g})", r));
    }
    auto q = sample_Q(sd, L);
    sd.Q = q.mean;
    sd.Q_spread = q.spread;
    return sd;
}

QSamples sample_Q(const SpectralData &sd, const Lattice &L, int n)
{
    QSamples out;
    for (complex x : sample_points(L, n, 0.1)) {
        auto xi = eval_xi(sd, x, L);
        auto V = eval_potential(sd.l, x, L);
        complex t0 = xi[0] * xi[0] * (sd.E - V[0]), t1 = 0.5 * xi[0] * xi[2], t2 = -0.25 * xi[1] * xi[1];
        complex q = t0 + t1 + t2;
        out.scale += std::abs(t0) + std::abs(t1) + std::abs(t2);
        out.values.push_back(q);
        out.mean += q;
    }
    out.mean /= double(out.values.size());
    out.scale /= double(out.values.size());
    double s = 0;
    for (auto q : out.values)
        s += std::norm(q - out.mean);
    out.spread = std::sqrt(s / out.values.size());
    return out;
}

complex compute_Q(const SpectralData &sd, const Lattice &L, double rel_tol)
{
    auto q = sample_Q(sd, L);
    if (q.spread > rel_tol * q.scale)
        throw NumericError(fmt::format("Q is not constant in x (spread {:.3g}, term scale {:.3g}): inconsistent Xi",
                                       q.spread, q.scale));
    return q.mean;
}

XiZeros xi_zeros(const SpectralData &sd, const Lattice &L)
{
    XiZeros out;
    const int D = degree(sd.l);
    if (D == 0)
        return out;
    // numerator N(w) = Xi(w) prod_{i>=1} (w - e_i)^{l_i}, degree D, by
    // interpolation at roots of unity on a circle enclosing the branch points
    double r = 1.0 + 2.0 * std::max({std::abs(L.e1), std::abs(L.e2), std::abs(L.e3), std::abs(sd.E)});
    std::vector<complex> vals(D + 1), nodes(D + 1);
    for (int k = 0; k <= D; ++k) {
        complex w = r * std::exp(2.0 * std::numbers::pi * kI * (double(k) / (D + 1) + 0.1 / (D + 1)));
        complex num = xi_of_wp(sd, w, L);
        for (int i = 1; i <= 3; ++i)
            num *= std::pow(w - L.e(i), sd.l[i]);
        vals[k] = num;
        nodes[k] = w;
    }
    Eigen::MatrixXcd V(D + 1, D + 1);
    Eigen::VectorXcd rhs(D + 1);
    for (int k = 0; k <= D; ++k) {
        for (int j = 0; j <= D; ++j)
            V(k, j) = std::pow(nodes[k] / r, j);
        rhs(k) = vals[k];
    }
    Eigen::VectorXcd c = V.partialPivLu().solve(rhs); // coefficients of (w/r)^j
    int deg = D;
    double cmax = c.cwiseAbs().maxCoeff();
    while (deg > 0 && std::abs(c(deg)) < 1e-12 * cmax)
        --deg;
    if (deg == 0)
        return out;
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
    for (int j = 0; j < deg; ++j)
        comp(0, j) = -c(deg - 1 - j) / c(deg);
    for (int j = 1; j < deg; ++j)
        comp(j, j - 1) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    for (int j = 0; j < deg; ++j) {
        complex w = es.eigenvalues()(j) * r;
        out.wp_values.push_back(w);
        out.x.push_back(elliptic_log(w, L, complex(0.01, 0.02)).x);
    }
    return out;
}

namespace
{

// Zeros and poles of Xi among the lattice translates covering the
// rectangle spanned by a and b (plus a margin of one cell).
std::vector<complex> xi_singular_points(const SpectralData &sd, const XiZeros &zeros, complex a, complex b,
                                        const Lattice &L)
{
    auto coords = [&](complex z) {
        double nb = z.imag() / L.tau.imag();
        return std::pair<double, double>{z.real() - nb * L.tau.real(), nb};
    };
    auto [a1, a2] = coords(a);
    auto [b1, b2] = coords(b);
    int m0 = int(std::floor(std::min(a1, b1))) - 2, m1 = int(std::ceil(std::max(a1, b1))) + 2;
    int n0 = int(std::floor(std::min(a2, b2))) - 2, n1 = int(std::ceil(std::max(a2, b2))) + 2;
    std::vector<complex> base;
    for (complex x : zeros.x) {
        base.push_back(x);
        base.push_back(-x);
    }
    for (int i = 0; i < 4; ++i)
        if (sd.l[i] > 0)
            base.push_back(L.omega(i));
    std::vector<complex> out;
    for (int m = m0; m <= m1; ++m)
        for (int n = n0; n <= n1; ++n)
            for (complex p : base)
                out.push_back(p + double(m) + double(n) * L.tau);
    return out;
}

} // namespace

LambdaValue eval_lambda_integral(const SpectralData &sd, complex x, complex basepoint, const Lattice &L,
                                 const LambdaOptions &options)
{
    const complex sq = sd.sqrt_minus_Q();
    LambdaValue out;
    auto zeros = xi_zeros(sd, L);
    auto sing = xi_singular_points(sd, zeros, basepoint, x, L);
    for (complex p : sing) {
        for (complex z : {x, basepoint}) {
            if (std::abs(z - p) < options.clearance)
                throw ClearanceError(fmt::format("point {}{:+}i within clearance {} of a zero or pole of Xi at "
                                                 "{}{:+}i",
                                                 z.real(), z.imag(), options.clearance, p.real(), p.imag()));
        }
    }
    const complex root0 = std::sqrt(eval_xi(sd, basepoint, L)[0]);
    if (x == basepoint) {
        out.value = out.sqrt_xi = root0;
        out.path.vertices = {basepoint, x};
        out.path.clearance = options.clearance;
        return out;
    }
    out.path = build_safe_path(basepoint, x, sing, options.clearance);

    BranchedIntegrand f;
    f.tag = "sqrt(-Q)/Xi";
    f.radicand = [&](complex z) { return eval_xi(sd, z, L)[0]; };
    f.body = [sq](complex, complex r) { return sq / (r * r); };
    f.singularities = sing;
    f.branch_seed = root0;
    QuadratureOptions qo;
    qo.tol = options.tol * std::max(1.0, std::abs(sq / (root0 * root0)) * out.path.length());
    auto q = integrate_path(f, out.path, qo);
    out.exponent = q.value;
    out.sqrt_xi = q.end_root;
    out.value = q.end_root * std::exp(q.value);
    out.error = q.error * std::abs(out.value);
    return out;
}

std::array<complex, 2> lambda_log_derivatives(const SpectralData &sd, complex x, const Lattice &L)
{
    auto xi = eval_xi(sd, x, L);
    const complex s = sd.sqrt_minus_Q();
    complex u = xi[1] / (2.0 * xi[0]) + s / xi[0];
    complex du = xi[2] / (2.0 * xi[0]) - xi[1] * xi[1] / (2.0 * xi[0] * xi[0]) - s * xi[1] / (xi[0] * xi[0]);
    return {u, du + u * u};
}

double lambda_equation_residual(const SpectralData &sd, complex x, const Lattice &L)
{
    auto d = lambda_log_derivatives(sd, x, L);
    auto V = eval_potential(sd.l, x, L);
    return std::abs(-d[1] + V[0] - sd.E) / std::max({1.0, std::abs(V[0]), std::abs(sd.E)});
}

HKAnsatz hk_parameters_lame2(complex E, const Lattice &L, int sqrtQ_sign)
{
    if (sqrtQ_sign != 1 && sqrtQ_sign != -1)
        throw DomainError("sqrtQ_sign must be +1 or -1");
    const complex g2 = L.g2, g3 = L.g3;
    const complex den = E * E - 3.0 * g2;
    if (std::abs(den) <= 1e-12 * std::max(std::abs(E * E), std::abs(3.0 * g2)))
        throw DegeneracyError("E^2 = 3 g2: alpha is a lattice point and the ansatz degenerates");
    HKAnsatz hk;
    hk.term_counts = {2, 0, 0, 0};
    const complex Q = den * (E - 3.0 * L.e1) * (E - 3.0 * L.e2) * (E - 3.0 * L.e3);
    const complex s = double(sqrtQ_sign) * principal_sqrt_minus_Q(Q);
    hk.sqrt_minus_Q = s;
    hk.wp_alpha = -(E * E * E - 27.0 * g3) / (9.0 * den);
    hk.wp_prime_alpha = 2.0 * s * (E * E * E - 9.0 * g2 * E + 54.0 * g3) / (27.0 * den * den);
    hk.kappa = 2.0 * s / (3.0 * den);
    auto lg = elliptic_log(hk.wp_alpha, L, complex(0.01, 0.02));
    hk.alpha = lg.x;
    if (!lg.double_root) {
        complex d = wp_prime(lg.x, L);
        if (std::abs(d - hk.wp_prime_alpha) > std::abs(d + hk.wp_prime_alpha))
            hk.alpha = -lg.x;
    }
    return hk;
}

complex monodromy_exponent_elliptic(const HKAnsatz &hk, int k, const Lattice &L)
{
    if (hk.degenerate)
        throw DegeneracyError("degenerate Hermite-Krichever data: the multiplier formula does not apply");
    if (k != 1 && k != 3)
        throw DomainError("period index must be 1 or 3");
    return -2.0 * L.eta(k) * hk.alpha + 2.0 * L.omega(k) * zeta(hk.alpha, L) + 2.0 * hk.kappa * L.omega(k);
}

complex monodromy_multiplier_elliptic(const HKAnsatz &hk, int k, const Lattice &L)
{
    return std::exp(monodromy_exponent_elliptic(hk, k, L));
}

complex lame2_curve(complex E, const Lattice &L)
{
    return -(E * E - 3.0 * L.g2) * (E - 3.0 * L.e1) * (E - 3.0 * L.e2) * (E - 3.0 * L.e3);
}

std::array<complex, 5> lame2_branch_points(const Lattice &L)
{
    complex r = std::sqrt(3.0 * L.g2);
    return {r, -r, 3.0 * L.e1, 3.0 * L.e2, 3.0 * L.e3};
}

complex lame2_xi(complex E, const Lattice &L)
{
    return -(E * E * E - 27.0 * L.g3) / (9.0 * (E * E - 3.0 * L.g2));
}

namespace
{

// Integral of body(z)/sqrt(radicand(z)) from the branch point `start` to
// `end` along a safe path, the root continued from an arbitrary sheet.
struct LegResult {
    complex value;
    double error = 0.0;
    PathPolyline path;
};

double leg_clearance(complex start, complex end, const std::vector<complex> &branch)
{
    double d = std::abs(end - start);
    for (complex p : branch) {
        if (std::abs(p - start) > 0)
            d = std::min(d, std::abs(p - start));
        if (std::abs(p - end) > 0)
            d = std::min(d, std::abs(p - end));
    }
    return std::min(0.25 * d, 1.0);
}

bool same_point(complex a, complex b)
{
    return std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(a));
}

LegResult branch_leg(const std::function<complex(complex)> &body, const std::function<complex(complex)> &radicand,
                     complex start, complex end, const std::vector<complex> &branch, double tol, std::string tag,
                     const PathPolyline *given = nullptr)
{
    LegResult out;
    if (same_point(start, end))
        return out;
    bool end_singular = false;
    std::vector<complex> others;
    for (complex p : branch) {
        if (same_point(p, start))
            continue;
        if (same_point(p, end)) {
            end_singular = true;
            continue;
        }
        others.push_back(p);
    }
    if (given) {
        out.path = *given;
    } else {
        out.path = build_safe_path(start, end, others, leg_clearance(start, end, others));
    }
    BranchedIntegrand f;
    f.tag = std::move(tag);
    f.radicand = radicand;
    f.body = [body](complex z, complex r) { return body(z) / r; };
    f.singularities = others;
    f.branch_seed = 1.0;
    QuadratureOptions o;
    o.tol = tol;
    o.singular_start = true;
    o.singular_end = end_singular;
    auto q = integrate_path(f, out.path, o);
    out.value = q.value;
    out.error = q.error;
    return out;
}

// int_inf^end body/sqrt(radicand) along the ray through `end`.
LegResult infinity_leg(const std::function<complex(complex)> &body, const std::function<complex(complex)> &radicand,
                       complex end, const std::vector<complex> &branch, double tol, std::string tag)
{
    double rmax = std::abs(end);
    for (complex p : branch)
        rmax = std::max(rmax, std::abs(p));
    const double R = 2.0 * rmax + 1.0;
    complex dir = std::abs(end) > 0 ? end / std::abs(end) : complex(1.0);
    complex z0 = R * dir;
    bool end_singular = false;
    std::vector<complex> others;
    for (complex p : branch) {
        if (same_point(p, end)) {
            end_singular = true;
            continue;
        }
        others.push_back(p);
    }
    double clear = 1.0;
    for (complex p : others)
        clear = std::min(clear, 0.25 * std::abs(p - end));
    for (std::size_t i = 0; i < others.size(); ++i)
        for (std::size_t j = i + 1; j < others.size(); ++j)
            clear = std::min(clear, 0.25 * std::abs(others[i] - others[j]));
    LegResult out;
    out.path = build_safe_path(z0, end, others, clear);
    BranchedIntegrand f;
    f.tag = std::move(tag);
    f.radicand = radicand;
    f.body = [body](complex z, complex r) { return body(z) / r; };
    f.singularities = branch;
    f.branch_seed = std::sqrt(radicand(z0));
    QuadratureOptions o;
    o.tol = tol;
    o.singular_end = end_singular;
    auto q = integrate_from_infinity(f, dir, R, out.path, o);
    out.value = q.value;
    out.error = q.error;
    return out;
}

// Integers (m, n) minimising |d - m p1 - n p3|.
std::array<int, 2> nearest_combination(complex d, complex p1, complex p3)
{
    Eigen::Matrix2d M;
    M << p1.real(), p3.real(), p1.imag(), p3.imag();
    Eigen::Vector2d v(d.real(), d.imag());
    Eigen::Vector2d s = M.fullPivLu().solve(v);
    std::array<int, 2> best{0, 0};
    double bestr = 1e300;
    for (int dm = -1; dm <= 1; ++dm)
        for (int dn = -1; dn <= 1; ++dn) {
            int m = int(std::lround(s(0))) + dm, n = int(std::lround(s(1))) + dn;
            double r = std::abs(d - double(m) * p1 - double(n) * p3);
            if (r < bestr) {
                bestr = r;
                best = {m, n};
            }
        }
    return best;
}

} // namespace

HyperellipticMultiplier monodromy_multiplier_hyperelliptic(complex E, int k, const Lattice &L, double tol)
{
    if (k != 1 && k != 3)
        throw DomainError("period index must be 1 or 3");
    auto bp = lame2_branch_points(L);
    std::vector<complex> branch(bp.begin(), bp.end());
    const complex eta = L.eta(k), om = L.omega(k), g2 = L.g2;
    auto leg = branch_leg([&](complex e) { return -6.0 * eta * e + 2.0 * om * (e * e - 1.5 * g2); },
                          [&](complex e) { return lame2_curve(e, L); }, bp[0], E, branch, tol,
                          "hyperelliptic multiplier");
    HyperellipticMultiplier out;
    out.exponent = -0.5 * leg.value;
    out.value = std::exp(out.exponent);
    out.error = 0.5 * leg.error;
    return out;
}

ReductionReport verify_reduction_identities(complex E, const Lattice &L, double tol, double quad_tol)
{
    ReductionReport rep;
    rep.E = E;
    rep.xi = lame2_xi(E, L);
    auto bp = lame2_branch_points(L);
    std::vector<complex> hyper(bp.begin(), bp.end());
    std::vector<complex> ell{L.e1, L.e2, L.e3};
    auto curve = [&](complex e) { return lame2_curve(e, L); };
    auto cubic = [&](complex z) { return 4.0 * z * z * z - L.g2 * z - L.g3; };

    // int_inf^xi dz / sqrt(cubic) = -3/2 int_inf^E E' dE' / y, modulo {m + n tau}
    {
        auto lhs = infinity_leg([](complex) { return complex(1.0); }, cubic, rep.xi, ell, quad_tol, "first kind");
        auto rhs = infinity_leg([](complex e) { return e; }, curve, E, hyper, quad_tol, "hyperelliptic first kind");
        IdentityCheck &c = rep.alpha_identity;
        c.name = "alpha-reduction";
        c.lhs = lhs.value;
        c.rhs = -1.5 * rhs.value;
        c.residual = 1e300;
        for (int s : {1, -1}) {
            complex d = c.rhs - double(s) * c.lhs;
            auto mn = nearest_combination(d, 1.0, L.tau);
            double r = std::abs(d - double(mn[0]) - double(mn[1]) * L.tau);
            if (r < c.residual) {
                c.residual = r;
                c.lhs_sign = s;
                c.lattice_shift = mn;
            }
        }
        c.pass = c.residual < tol;
    }

    // kappa = -1/2 int_{3e_i}^E (E'^2 - 3g2/2)/y dE' + int_{e_i}^xi z dz / sqrt(cubic)
    const HKAnsatz hk = hk_parameters_lame2(E, L, 1);
    for (int i = 1; i <= 3; ++i) {
        IdentityCheck &c = rep.kappa_identity[i - 1];
        c.name = fmt::format("kappa-reduction-{}", i);
        c.lhs = hk.kappa;
        const complex start = 3.0 * L.e(i);
        // The hyperelliptic contour also avoids E' = -6 e_j, where xi(E') = e_j
        // with multiplicity two, so that its image stays off the branch points.
        std::vector<complex> avoid = hyper;
        for (int j = 1; j <= 3; ++j)
            if (j != i && !same_point(-6.0 * L.e(j), 3.0 * L.e(j)))
                avoid.push_back(-6.0 * L.e(j));
        auto h = branch_leg([&](complex e) { return e * e - 1.5 * L.g2; }, curve, start, E, avoid, quad_tol,
                            "hyperelliptic second kind");
        // Elliptic leg along the image contour xi(E'), parametrised by E'.
        auto xi_prime = [&](complex e) {
            complex d = e * e - 3.0 * L.g2;
            return -(e * e * e * e - 9.0 * L.g2 * e * e + 54.0 * L.g3 * e) / (9.0 * d * d);
        };
        LegResult el;
        if (!h.path.vertices.empty())
            el = branch_leg([&](complex e) { return lame2_xi(e, L) * xi_prime(e); },
                            [&](complex e) { return cubic(lame2_xi(e, L)); }, start, E, avoid, quad_tol,
                            "elliptic second kind", &h.path);
        c.residual = 1e300;
        for (int s1 : {1, -1})
            for (int s2 : {1, -1}) {
                complex rhs = -0.5 * double(s1) * h.value + double(s2) * el.value;
                double r = std::abs(rhs - c.lhs);
                if (r < c.residual) {
                    c.residual = r;
                    c.rhs = rhs;
                    c.lhs_sign = s1;
                    c.rhs_sign = s2;
                }
            }
        c.residual /= std::max(1.0, std::abs(c.lhs));
        c.pass = c.residual < tol;
    }
    rep.pass = rep.alpha_identity.pass;
    for (auto &c : rep.kappa_identity)
        rep.pass = rep.pass && c.pass;
    return rep;
}

} // namespace heunlab
