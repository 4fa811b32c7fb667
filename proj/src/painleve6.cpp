#include "heunlab/painleve6.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "heunlab/modular.hpp"

namespace heunlab
{

namespace
{

constexpr double kPi = std::numbers::pi;
const complex kPiI{0.0, kPi};

complex cubic_at(complex b, const Lattice &L)
{
    return 4.0 * b * b * b - L.g2 * b - L.g3;
}

void require_generic_b1(complex b1, const Lattice &L, const char *who)
{
    if (!std::isfinite(b1.real()) || !std::isfinite(b1.imag()))
        throw DomainError(fmt::format("{}: b1 is not finite", who));
    for (int i = 1; i <= 3; ++i)
        if (std::abs(b1 - L.e(i)) <= 1e-12 * std::max(1.0, std::abs(L.e(i))))
            throw DomainError(fmt::format("{}: b1 coincides with e{}", who, i));
}

// wp(z + omega_i) from wp(z) by the half-period addition formula.
complex wp_shifted(complex w, int i, const Lattice &L)
{
    if (i == 0)
        return w;
    int j = i % 3 + 1, k = j % 3 + 1;
    return L.e(i) + (L.e(i) - L.e(j)) * (L.e(i) - L.e(k)) / (w - L.e(i));
}

bool small_against(complex value, double scale, double rel)
{
    return std::abs(value) <= rel * std::max(scale, std::numeric_limits<double>::min());
}

complex l1000_Q(complex mu1, complex b1, const Lattice &L)
{
    const complex c = cubic_at(b1, L);
    const complex D = 2.0 * c * mu1 * mu1 * mu1 - (12.0 * b1 * b1 - L.g2) * mu1 * mu1 + 4.0;
    complex Q = -D;
    for (int i = 1; i <= 3; ++i) {
        int j = i % 3 + 1, k = j % 3 + 1;
        Q *= 2.0 * (b1 * b1 + L.e(i) * b1 + L.e(j) * L.e(k)) * mu1 - 2.0 * b1 - L.e(i);
    }
    return Q;
}

complex l0000_Q(complex mu1, complex b1, const Lattice &L)
{
    complex Q = 2.0 * mu1;
    for (int i = 1; i <= 3; ++i)
        Q *= 2.0 * mu1 * (L.e(i) - b1) + 1.0;
    return Q;
}

} // namespace

Kappas kappas_from_l(const MultiIndex &l)
{
    for (int v : l)
        if (v < 0)
            throw DomainError("kappas_from_l: indices must be non-negative");
    return {l[1] + 0.5, l[2] + 0.5, l[3] + 0.5, l[0] + 0.5};
}

double rational_kappa(const Kappas &k)
{
    double s = k.k0 + k.k1 + k.kt - 1.0;
    return (s * s - k.kinf * k.kinf) / 4.0;
}

complex apparency_p(complex b1, complex mu1, const MultiIndex &l, const Lattice &L)
{
    require_generic_b1(b1, L, "apparency_p");
    complex sum = 0.0;
    for (int i = 1; i <= 3; ++i)
        sum += (l[i] + 0.5) / (b1 - L.e(i));
    const double ls = l[1] + l[2] + l[3];
    return cubic_at(b1, L) * (-mu1 * mu1 + sum * mu1) - b1 * (ls - l[0]) * (ls + l[0] + 1.0);
}

namespace
{

// p - tildeE = -2 (l1 l2 e3 + l2 l3 e1 + l3 l1 e2) + sum l_i (l_i e_i + 2 (e_i + b1))
complex p_minus_E(complex b1, const MultiIndex &l, const Lattice &L)
{
    complex v = -2.0 * (double(l[1] * l[2]) * L.e3 + double(l[2] * l[3]) * L.e1 + double(l[3] * l[1]) * L.e2);
    for (int i = 1; i <= 3; ++i)
        v += double(l[i]) * (double(l[i]) * L.e(i) + 2.0 * (L.e(i) + b1));
    return v;
}

complex half_sum_l(complex b1, const MultiIndex &l, const Lattice &L)
{
    complex v = 0.0;
    for (int i = 1; i <= 3; ++i)
        v += double(l[i]) / (2.0 * (b1 - L.e(i)));
    return v;
}

} // namespace

FuchsianODE_M1 make_fuchsian_m1(const MultiIndex &l, complex b1, complex mu1, complex p, const Lattice &L)
{
    require_generic_b1(b1, L, "make_fuchsian_m1");
    FuchsianODE_M1 ode;
    ode.l = l;
    ode.b1 = b1;
    ode.mu1 = mu1;
    ode.p = p;
    ode.lattice = L;
    ode.tildeS1 = -cubic_at(b1, L) * (mu1 - half_sum_l(b1, l, L));
    ode.tildeE = p - p_minus_E(b1, l, L);
    complex pa = apparency_p(b1, mu1, l, L);
    ode.apparent = std::abs(pa - p) <= 1e-10 * std::max(1.0, std::abs(pa));
    return ode;
}

FuchsianODE_M1 fuchsian_m1_from_heun(const MultiIndex &l, complex b1, complex tildeE, complex tildeS1,
                                     const Lattice &L)
{
    require_generic_b1(b1, L, "fuchsian_m1_from_heun");
    complex mu1 = -tildeS1 / cubic_at(b1, L) + half_sum_l(b1, l, L);
    complex p = tildeE + p_minus_E(b1, l, L);
    auto ode = make_fuchsian_m1(l, b1, mu1, p, L);
    ode.tildeE = tildeE;
    ode.tildeS1 = tildeS1;
    return ode;
}

complex RationalODE::p1(complex w) const
{
    return (1.0 - kappas.k0) / w + (1.0 - kappas.k1) / (w - 1.0) + (1.0 - kappas.kt) / (w - t) - 1.0 / (w - lambda);
}

complex RationalODE::p2(complex w) const
{
    return kappa / (w * (w - 1.0)) - t * (t - 1.0) * H / (w * (w - 1.0) * (w - t)) +
           lambda * (lambda - 1.0) * mu / (w * (w - 1.0) * (w - lambda));
}

complex hamiltonian_vi(complex lambda, complex mu, complex t, const Kappas &k)
{
    const complex brace = k.k0 * (lambda - 1.0) * (lambda - t) + k.k1 * lambda * (lambda - t) +
                          (k.kt - 1.0) * lambda * (lambda - 1.0);
    return (lambda * (lambda - 1.0) * (lambda - t) * mu * mu - brace * mu + rational_kappa(k) * (lambda - t)) /
           (t * (t - 1.0));
}

double frobenius_apparency_check(const FuchsianODE_M1 &ode)
{
    const Lattice &L = ode.lattice;
    require_generic_b1(ode.b1, L, "frobenius_apparency_check");
    const complex b = ode.b1;
    // local data at x = delta_1: wp - b1 = d1 s + d2 s^2 + ..., d1^2 = cubic(b1)
    const complex d1sq = cubic_at(b, L);
    if (small_against(d1sq, std::abs(4.0 * b * b * b) + std::abs(L.g2 * b) + std::abs(L.g3), 1e-14))
        throw DomainError("frobenius_apparency_check: wp'(delta_1) = 0, the singular point is not of the apparent type");
    const complex d2 = 3.0 * b * b - L.g2 / 4.0;
    complex V = 0.0;
    for (int i = 0; i < 4; ++i)
        V += double(ode.l[i] * (ode.l[i] + 1)) * wp_shifted(b, i, L);
    // a0 = -d2/d1, b_{-1} = -s1/d1, b0 = s1 d2/d1^2 - V + E
    const complex s = ode.tildeS1;
    return std::abs((s * s + 2.0 * d2 * s) / d1sq - V + ode.tildeE);
}

double frobenius_apparency_check(const RationalODE &ode)
{
    const complex lam = ode.lambda, t = ode.t;
    const double tiny = 1e-12;
    if (std::abs(t) < tiny || std::abs(t - 1.0) < tiny)
        throw DomainError("frobenius_apparency_check: t must avoid 0 and 1");
    if (std::abs(lam) < tiny || std::abs(lam - 1.0) < tiny || std::abs(lam - t) < tiny)
        throw DomainError("frobenius_apparency_check: lambda coincides with a fixed singular point");
    const Kappas &k = ode.kappas;
    const complex a0 = (1.0 - k.k0) / lam + (1.0 - k.k1) / (lam - 1.0) + (1.0 - k.kt) / (lam - t);
    const complex bm1 = ode.mu;
    const complex b0 = ode.kappa / (lam * (lam - 1.0)) - t * (t - 1.0) * ode.H / (lam * (lam - 1.0) * (lam - t)) -
                       ode.mu * (2.0 * lam - 1.0) / (lam * (lam - 1.0));
    return std::abs((a0 + bm1) * bm1 + b0);
}

const char *to_string(P6Family family)
{
    switch (family) {
    case P6Family::hitchin_l0000:
        return "hitchin_l0000";
    case P6Family::explicit_l1000:
        return "explicit_l1000";
    case P6Family::degenerate_mu0:
        return "degenerate_mu0";
    case P6Family::degenerate_mui:
        return "degenerate_mui";
    case P6Family::degenerate_l1000_cubic:
        return "degenerate_l1000_cubic";
    case P6Family::degenerate_l1000_ei:
        return "degenerate_l1000_ei";
    }
    return "?";
}

P6Family p6_family_from_string(const std::string &name)
{
    for (auto f : {P6Family::hitchin_l0000, P6Family::explicit_l1000, P6Family::degenerate_mu0,
                   P6Family::degenerate_mui, P6Family::degenerate_l1000_cubic, P6Family::degenerate_l1000_ei})
        if (name == to_string(f))
            return f;
    if (name == "hitchin")
        return P6Family::hitchin_l0000;
    if (name == "l1000")
        return P6Family::explicit_l1000;
    throw DomainError(fmt::format("unknown Painleve VI family '{}'", name));
}

P6Instance make_p6_instance(P6Family family, complex c1, complex c3, int branch)
{
    P6Instance inst;
    inst.family = family;
    inst.c1 = c1;
    inst.c3 = c3;
    inst.branch = branch;
    const bool needs_branch = family == P6Family::degenerate_mui || family == P6Family::degenerate_l1000_ei;
    if (needs_branch && (branch < 1 || branch > 3))
        throw DomainError(fmt::format("{} needs a branch index in 1..3", to_string(family)));
    if (!needs_branch && branch != 0)
        throw DomainError(fmt::format("{} takes no branch index", to_string(family)));
    const bool l1000 = family == P6Family::explicit_l1000 || family == P6Family::degenerate_l1000_cubic ||
                       family == P6Family::degenerate_l1000_ei;
    inst.l = l1000 ? MultiIndex{1, 0, 0, 0} : MultiIndex{0, 0, 0, 0};
    inst.kappas = kappas_from_l(inst.l);
    return inst;
}

std::pair<complex, complex> combined_period(const P6Instance &inst, const Lattice &L)
{
    return {inst.c1 * L.omega3 - inst.c3 * L.omega1, inst.c1 * L.eta3 - inst.c3 * L.eta1};
}

namespace
{

complex checked_ratio(complex num, complex den, double den_scale, const Lattice &L, const char *what)
{
    if (small_against(den, den_scale, 1e-10))
        throw ParameterSingularityError(
            fmt::format("{}: denominator vanishes at tau = {}{:+}i", what, L.tau.real(), L.tau.imag()), L.tau);
    return num / den;
}

} // namespace

complex family_b1(const P6Instance &inst, const Lattice &L)
{
    auto [om, et] = combined_period(inst, L);
    const complex g2 = L.g2, g3 = L.g3;
    auto require_off_lattice = [&] {
        if (std::abs(om - nearest_lattice_point(om, L)) < 1e-8)
            throw ParameterSingularityError(fmt::format("combined period is a lattice point at tau = {}{:+}i",
                                                        L.tau.real(), L.tau.imag()),
                                            L.tau);
    };
    switch (inst.family) {
    case P6Family::hitchin_l0000:
    case P6Family::explicit_l1000: {
        require_off_lattice();
        auto [P, Pd] = wp_and_prime(om, L);
        const complex zw = zeta(om, L);
        const complex Z = zw - et;
        if (inst.family == P6Family::hitchin_l0000)
            return P + checked_ratio(Pd, 2.0 * Z, std::abs(zw) + std::abs(et), L, "hitchin b1");
        const complex num = 2.0 * P * Z * Z * Z + 3.0 * Pd * Z * Z + (6.0 * P * P - g2) * Z + P * Pd;
        const complex den = 2.0 * (Z * Z * Z - 3.0 * P * Z - Pd);
        const double scale = 2.0 * (std::pow(std::abs(Z), 3) + 3.0 * std::abs(P * Z) + std::abs(Pd));
        return checked_ratio(num, den, scale, L, "l1000 b1");
    }
    case P6Family::degenerate_mu0:
        return checked_ratio(-et, om, std::abs(inst.c1 * L.omega3) + std::abs(inst.c3 * L.omega1), L, "mu0 b1");
    case P6Family::degenerate_mui: {
        const complex ei = L.e(inst.branch);
        const complex num = (g2 / 4.0 - 2.0 * ei * ei) * om + ei * et;
        const complex den = ei * om + et;
        return checked_ratio(num, den, std::abs(ei * om) + std::abs(et), L, "mui b1");
    }
    case P6Family::degenerate_l1000_cubic: {
        const complex num = 4.0 * et * et * et + g2 * om * om * et - 2.0 * g3 * om * om * om;
        const complex den = om * (g2 * om * om - 12.0 * et * et);
        const double scale = std::abs(om) * (std::abs(g2 * om * om) + 12.0 * std::norm(et));
        return checked_ratio(num, den, scale, L, "cubic b1");
    }
    case P6Family::degenerate_l1000_ei: {
        const complex ei = L.e(inst.branch);
        const complex num = -g2 * ei * om / 2.0 + (6.0 * ei * ei - g2) * et;
        const complex den = (6.0 * ei * ei - g2) * om - 6.0 * ei * et;
        return checked_ratio(num, den, std::abs((6.0 * ei * ei - g2) * om) + std::abs(6.0 * ei * et), L, "l1000 ei b1");
    }
    }
    throw DomainError("family_b1: unknown family");
}

namespace
{

// lambda as a function of tau, through family_b1
complex lambda_at(const P6Instance &inst, complex tau)
{
    auto L = lattice_from_tau(tau);
    return (family_b1(inst, L) - L.e1) / (L.e2 - L.e1);
}

template <typename F>
complex first_derivative(F &&f, complex x, double h)
{
    return (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
}

template <typename F>
complex second_derivative(F &&f, complex x, double h)
{
    return (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
}

complex brace_term(complex lam, complex t, const Kappas &k)
{
    return k.k0 * (lam - 1.0) * (lam - t) + k.k1 * lam * (lam - t) + (k.kt - 1.0) * lam * (lam - 1.0);
}

} // namespace

complex hamiltonian_mu1(const P6Instance &inst, const Lattice &L, double h)
{
    const complex tau = L.tau;
    const complex lam = (family_b1(inst, L) - L.e1) / (L.e2 - L.e1);
    const complex dlam = first_derivative([&](complex s) { return lambda_at(inst, s); }, tau, h);
    const complex dt = modular_derivative(ModularTag::t, L).dtau;
    const complex t = L.t;
    const complex lam_t = dlam / dt;
    const complex mu = (t * (t - 1.0) * lam_t + brace_term(lam, t, inst.kappas)) / (2.0 * lam * (lam - 1.0) * (lam - t));
    return mu / (L.e2 - L.e1);
}

FamilyHK family_hk(const P6Instance &inst, const Lattice &L)
{
    if (inst.family != P6Family::hitchin_l0000 && inst.family != P6Family::explicit_l1000)
        throw DegeneracyError(fmt::format("family {} has Q = 0 and no Hermite-Krichever data", to_string(inst.family)));
    auto [om, et] = combined_period(inst, L);
    if (std::abs(om - nearest_lattice_point(om, L)) < 1e-8)
        throw ParameterSingularityError("combined period is a lattice point", L.tau);
    FamilyHK out;
    out.alpha = -om;
    out.kappa = zeta(om, L) - et;
    auto [P, Pd] = wp_and_prime(om, L);
    out.data.wp_alpha = P;
    out.data.wp_prime_alpha = -Pd;
    out.data.kappa = out.kappa;
    return out;
}

complex family_mu1(const P6Instance &inst, const Lattice &L)
{
    switch (inst.family) {
    case P6Family::hitchin_l0000:
    case P6Family::explicit_l1000: {
        auto hk = family_hk(inst, L);
        HKCase kase = inst.family == P6Family::hitchin_l0000 ? HKCase::l0000 : HKCase::l1000;
        return mu_b1_from_hk(kase, hk.data, L).mu1;
    }
    case P6Family::degenerate_mu0:
        return 0.0;
    case P6Family::degenerate_mui: {
        complex b1 = family_b1(inst, L);
        require_generic_b1(b1, L, "family_mu1");
        return 1.0 / (2.0 * (b1 - L.e(inst.branch)));
    }
    case P6Family::degenerate_l1000_ei: {
        complex b1 = family_b1(inst, L);
        const complex ei = L.e(inst.branch);
        const complex den = 2.0 * (b1 * b1 + ei * b1 + ei * ei - L.g2 / 4.0);
        return checked_ratio(2.0 * b1 + ei, den, 2.0 * (std::norm(b1) + std::abs(ei * b1) + std::abs(ei * ei) +
                                                         std::abs(L.g2) / 4.0),
                             L, "l1000 ei mu1");
    }
    case P6Family::degenerate_l1000_cubic: {
        complex b1 = family_b1(inst, L);
        const complex c = cubic_at(b1, L);
        // 2 c mu^3 - (12 b1^2 - g2) mu^2 + 4 = 0
        Eigen::Matrix3cd comp = Eigen::Matrix3cd::Zero();
        comp(0, 0) = (12.0 * b1 * b1 - L.g2) / (2.0 * c);
        comp(0, 1) = 0.0;
        comp(0, 2) = -4.0 / (2.0 * c);
        comp(1, 0) = 1.0;
        comp(2, 1) = 1.0;
        Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(comp, false);
        const complex est = hamiltonian_mu1(inst, L, 1e-4 * std::max(1.0, std::abs(L.tau)));
        complex best = es.eigenvalues()(0);
        for (int k = 1; k < 3; ++k)
            if (std::abs(es.eigenvalues()(k) - est) < std::abs(best - est))
                best = es.eigenvalues()(k);
        // Newton polish on the cubic
        for (int it = 0; it < 3; ++it) {
            complex f = 2.0 * c * best * best * best - (12.0 * b1 * b1 - L.g2) * best * best + 4.0;
            complex df = 6.0 * c * best * best - 2.0 * (12.0 * b1 * b1 - L.g2) * best;
            if (df != 0.0)
                best -= f / df;
        }
        return best;
    }
    }
    throw DomainError("family_mu1: unknown family");
}

HKData hk_from_mu_b1(HKCase kase, const MuB1 &in, const Lattice &L, int sqrtQ_sign)
{
    if (sqrtQ_sign != 1 && sqrtQ_sign != -1)
        throw DomainError("sqrtQ_sign must be +1 or -1");
    const complex mu1 = in.mu1, b1 = in.b1;
    require_generic_b1(b1, L, "hk_from_mu_b1");
    if (mu1 == 0.0)
        throw DegeneracyError("mu1 = 0 gives Q = 0 or kappa = 0: use the degenerate (Q = 0) families");
    HKData out;
    const double scale = std::max({1.0, std::abs(b1), std::abs(L.e1), std::abs(L.e2), std::abs(L.e3)});
    if (kase == HKCase::l0000) {
        const complex Q = l0000_Q(mu1, b1, L);
        if (small_against(Q, std::abs(mu1) * std::pow(1.0 + 2.0 * std::abs(mu1) * 2.0 * scale, 3), 1e-12))
            throw DegeneracyError("Q = 0: use the degenerate (Q = 0) families");
        const complex s = double(sqrtQ_sign) * principal_sqrt_minus_Q(Q);
        out.sqrt_minus_Q = s;
        out.wp_alpha = b1 - 1.0 / (2.0 * mu1);
        out.wp_prime_alpha = -s / (2.0 * mu1 * mu1);
        out.kappa = s / (2.0 * mu1);
        return out;
    }
    const complex c = cubic_at(b1, L);
    const complex g2 = L.g2, g3 = L.g3;
    const complex m2 = mu1 * mu1, m3 = m2 * mu1;
    const complex D = 2.0 * c * m3 - (12.0 * b1 * b1 - g2) * m2 + 4.0;
    const complex Q = l1000_Q(mu1, b1, L);
    if (small_against(D, 2.0 * std::abs(c * m3) + std::abs((12.0 * b1 * b1 - g2) * m2) + 4.0, 1e-12) ||
        Q == 0.0)
        throw DegeneracyError("Q = 0: use the degenerate (Q = 0) families");
    const complex s = double(sqrtQ_sign) * principal_sqrt_minus_Q(Q);
    out.sqrt_minus_Q = s;
    out.wp_alpha =
        (2.0 * c * b1 * m3 + (-24.0 * b1 * b1 * b1 + 4.0 * g2 * b1 + 3.0 * g3) * m2 + (24.0 * b1 * b1 - 2.0 * g2) * mu1 -
         8.0 * b1) /
        D;
    out.wp_prime_alpha = -4.0 * (c * m3 - (12.0 * b1 * b1 - g2) * m2 + 12.0 * b1 * mu1 - 4.0) / (D * D) * s;
    out.kappa = 2.0 * mu1 / D * s;
    return out;
}

MuB1 mu_b1_from_hk(HKCase kase, const HKData &in, const Lattice &L)
{
    const complex P = in.wp_alpha, Pd = in.wp_prime_alpha, K = in.kappa;
    if (K == 0.0)
        throw DegeneracyError("kappa = 0: use the degenerate (Q = 0) families");
    if (kase == HKCase::l0000) {
        if (Pd == 0.0)
            throw DegeneracyError("wp'(alpha) = 0: alpha is a half period");
        return {-K / Pd, P - Pd / (2.0 * K)};
    }
    const complex g2 = L.g2;
    const complex cub = K * K * K - 3.0 * P * K + Pd;
    const complex den_mu = -2.0 * Pd * K * K * K + (12.0 * P * P - g2) * K * K - 6.0 * P * Pd * K + Pd * Pd;
    const double s1 = std::pow(std::abs(K), 3) + 3.0 * std::abs(P * K) + std::abs(Pd);
    const double s2 = 2.0 * std::abs(Pd) * std::pow(std::abs(K), 3) + std::abs((12.0 * P * P - g2) * K * K) +
                      6.0 * std::abs(P * Pd * K) + std::norm(Pd);
    if (small_against(cub, s1, 1e-13) || small_against(den_mu, s2, 1e-13))
        throw DegeneracyError("mu_b1_from_hk: vanishing denominator");
    MuB1 out;
    out.b1 = (2.0 * P * K * K * K - 3.0 * Pd * K * K + (6.0 * P * P - g2) * K - P * Pd) / (2.0 * cub);
    out.mu1 = 2.0 * cub * K / den_mu;
    return out;
}

std::array<complex, 2> monodromy_constants(complex alpha, complex kappa, const Lattice &L)
{
    const complex za = zeta(alpha, L);
    std::array<complex, 2> out;
    int k_index[2] = {1, 3};
    for (int j = 0; j < 2; ++j) {
        int k = k_index[j];
        out[j] = -2.0 * L.eta(k) * alpha + 2.0 * L.omega(k) * za + 2.0 * kappa * L.omega(k);
    }
    return out;
}

complex P6Spectral::sqrt_minus_Q() const
{
    return double(sqrtQ_sign) * principal_sqrt_minus_Q(Q);
}

P6Spectral xi_and_Q(HKCase kase, complex mu1, complex b1, const Lattice &L)
{
    require_generic_b1(b1, L, "xi_and_Q");
    P6Spectral s;
    s.kase = kase;
    s.mu1 = mu1;
    s.b1 = b1;
    if (kase == HKCase::l0000) {
        s.Q = l0000_Q(mu1, b1, L);
        return s;
    }
    const complex c = cubic_at(b1, L);
    s.A = -c * mu1 * mu1 + (6.0 * b1 * b1 - L.g2 / 2.0) * mu1 - b1;
    s.B = -c * mu1 / 2.0 + 3.0 * b1 * b1 - L.g2 / 4.0;
    s.Q = l1000_Q(mu1, b1, L);
    return s;
}

std::array<complex, 3> eval_xi(const P6Spectral &s, complex x, const Lattice &L)
{
    auto [w, dw] = wp_and_prime(x, L);
    const complex d2w = 6.0 * w * w - L.g2 / 2.0;
    const complex r = 1.0 / (w - s.b1);
    if (s.kase == HKCase::l0000)
        return {2.0 * s.mu1 + r, -dw * r * r, -d2w * r * r + 2.0 * dw * dw * r * r * r};
    return {w + s.A + s.B * r, dw - s.B * dw * r * r, d2w - s.B * d2w * r * r + 2.0 * s.B * dw * dw * r * r * r};
}

namespace
{

// Y = (wp - b1) Xi, which is polynomial in wp: returns Y, Y', Y''.
std::array<complex, 3> eval_y(const P6Spectral &s, complex x, const Lattice &L)
{
    auto [w, dw] = wp_and_prime(x, L);
    const complex d2w = 6.0 * w * w - L.g2 / 2.0;
    if (s.kase == HKCase::l0000)
        return {2.0 * s.mu1 * (w - s.b1) + 1.0, 2.0 * s.mu1 * dw, 2.0 * s.mu1 * d2w};
    const complex lin = 2.0 * w + s.A - s.b1;
    return {(w + s.A) * (w - s.b1) + s.B, lin * dw, 2.0 * dw * dw + lin * d2w};
}

// Values of wp where Y vanishes.
std::vector<complex> y_zero_values(const P6Spectral &s)
{
    if (s.kase == HKCase::l0000) {
        if (s.mu1 == 0.0)
            return {};
        return {s.b1 - 1.0 / (2.0 * s.mu1)};
    }
    // w^2 + (A - b1) w + (B - A b1)
    const complex bq = s.A - s.b1, cq = s.B - s.A * s.b1;
    const complex disc = std::sqrt(bq * bq - 4.0 * cq);
    complex r1 = (-bq - disc) / 2.0, r2 = (-bq + disc) / 2.0;
    // avoid cancellation in the smaller root
    if (std::abs(r1) > std::abs(r2) && r1 != 0.0)
        r2 = cq / r1;
    else if (r2 != 0.0)
        r1 = cq / r2;
    return {r1, r2};
}

std::vector<complex> p6_singular_points(const P6Spectral &s, complex a, complex b, const Lattice &L)
{
    std::vector<complex> base{0.0};
    for (complex w : y_zero_values(s)) {
        complex x = elliptic_log(w, L, complex(0.01, 0.02)).x;
        base.push_back(x);
        base.push_back(-x);
    }
    auto coords = [&](complex z) {
        double nb = z.imag() / L.tau.imag();
        return std::pair<double, double>{z.real() - nb * L.tau.real(), nb};
    };
    auto [a1, a2] = coords(a);
    auto [b1, b2] = coords(b);
    int m0 = int(std::floor(std::min(a1, b1))) - 2, m1 = int(std::ceil(std::max(a1, b1))) + 2;
    int n0 = int(std::floor(std::min(a2, b2))) - 2, n1 = int(std::ceil(std::max(a2, b2))) + 2;
    std::vector<complex> out;
    for (int m = m0; m <= m1; ++m)
        for (int n = n0; n <= n1; ++n)
            for (complex p : base)
                out.push_back(p + double(m) + double(n) * L.tau);
    return out;
}

} // namespace

LambdaValue eval_lambda_p6(const P6Spectral &s, complex x, complex basepoint, const Lattice &L,
                           const LambdaOptions &options)
{
    const complex sq = s.sqrt_minus_Q();
    LambdaValue out;
    auto sing = p6_singular_points(s, basepoint, x, L);
    for (complex p : sing)
        for (complex z : {x, basepoint})
            if (std::abs(z - p) < options.clearance)
                throw ClearanceError(fmt::format("point {}{:+}i within clearance {} of a zero or pole of Xi (wp - b1)",
                                                 z.real(), z.imag(), options.clearance));
    const complex root0 = std::sqrt(eval_y(s, basepoint, L)[0]);
    if (x == basepoint) {
        out.value = out.sqrt_xi = root0;
        out.path.vertices = {basepoint, x};
        out.path.clearance = options.clearance;
        return out;
    }
    out.path = build_safe_path(basepoint, x, sing, options.clearance);
    BranchedIntegrand f;
    f.tag = "sqrt(-Q)(wp - b1)/Y";
    f.radicand = [&](complex z) { return eval_y(s, z, L)[0]; };
    f.body = [&, sq](complex z, complex r) { return sq * (wp(z, L) - s.b1) / (r * r); };
    f.singularities = sing;
    f.branch_seed = root0;
    QuadratureOptions qo;
    const complex w0 = wp(basepoint, L) - s.b1;
    qo.tol = options.tol * std::max(1.0, std::abs(sq * w0 / (root0 * root0)) * out.path.length());
    auto q = integrate_path(f, out.path, qo);
    out.exponent = q.value;
    out.sqrt_xi = q.end_root;
    out.value = q.end_root * std::exp(q.value);
    out.error = q.error * std::abs(out.value);
    return out;
}

double lambda_p6_residual(const P6Spectral &s, complex x, const Lattice &L)
{
    auto y = eval_y(s, x, L);
    auto [w, dw] = wp_and_prime(x, L);
    const complex sq = s.sqrt_minus_Q();
    const complex u = y[1] / (2.0 * y[0]) + sq * (w - s.b1) / y[0];
    const complex du = y[2] / (2.0 * y[0]) - y[1] * y[1] / (2.0 * y[0] * y[0]) + sq * dw / y[0] -
                       sq * (w - s.b1) * y[1] / (y[0] * y[0]);
    const MultiIndex l = s.kase == HKCase::l0000 ? MultiIndex{0, 0, 0, 0} : MultiIndex{1, 0, 0, 0};
    auto ode = make_fuchsian_m1(l, s.b1, s.mu1, apparency_p(s.b1, s.mu1, l, L), L);
    const complex V = double(l[0] * (l[0] + 1)) * w;
    const complex t1 = du + u * u, t2 = dw / (w - s.b1) * u, t3 = ode.tildeS1 / (w - s.b1);
    const complex res = -t1 + t2 + t3 + V - ode.tildeE;
    const double scale = std::max({1.0, std::abs(t1), std::abs(t2), std::abs(t3), std::abs(V), std::abs(ode.tildeE)});
    return std::abs(res) / scale;
}

P6Frame frame_map(complex b1, complex mu1, const MultiIndex &l, const Lattice &L, complex seed)
{
    P6Frame f;
    f.tau = L.tau;
    f.t = L.t;
    f.b1 = b1;
    f.mu1 = mu1;
    f.lambda = (b1 - L.e1) / (L.e2 - L.e1);
    f.mu = (L.e2 - L.e1) * mu1;
    f.kappas = kappas_from_l(l);
    f.kappa = rational_kappa(f.kappas);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        f.p = apparency_p(b1, mu1, l, L);
        f.H_VI =
            ((f.p / 4.0 + f.kappa * L.e3) / (L.e2 - L.e1) + f.lambda * (1.0 - f.lambda) * f.mu) / (f.t * (1.0 - f.t));
    } catch (const DomainError &) {
        // b1 = e_i: lambda sits on 0, 1 or t and the accessory parameter is undefined
        f.p = f.H_VI = complex(nan, nan);
    }
    f.delta1 = elliptic_log(b1, L, seed).x;
    return f;
}

namespace
{

double weight(const MultiIndex &l, int i)
{
    return (l[i] + 0.5) * (l[i] + 0.5);
}

complex elliptic_rhs(const MultiIndex &l, complex delta, const Lattice &L)
{
    complex s = 0.0;
    for (int i = 0; i < 4; ++i)
        s += weight(l, i) * wp_prime(delta + L.omega(i), L);
    return s;
}

complex potential_sum(const MultiIndex &l, complex delta, const Lattice &L)
{
    complex s = 0.0;
    for (int i = 0; i < 4; ++i)
        s += weight(l, i) * wp(delta + L.omega(i), L);
    return s;
}

complex delta_at(const P6Instance &inst, complex tau, complex seed)
{
    auto L = lattice_from_tau(tau);
    return elliptic_log(family_b1(inst, L), L, seed).x;
}

} // namespace

P6Frame family_frame(const P6Instance &inst, complex tau, complex seed, double h)
{
    auto L = lattice_from_tau(tau);
    const complex b1 = family_b1(inst, L);
    P6Frame f = frame_map(b1, family_mu1(inst, L), inst.l, L, seed);
    const complex d0 = f.delta1;
    const complex dd = first_derivative([&](complex s) { return delta_at(inst, s, d0); }, tau, h);
    f.gamma = 2.0 * kPiI * dd;
    f.has_gamma = true;
    f.calH = 0.5 * (f.gamma * f.gamma - potential_sum(inst.l, d0, L));
    return f;
}

const char *to_string(P6Mode mode)
{
    switch (mode) {
    case P6Mode::elliptic:
        return "elliptic";
    case P6Mode::rational:
        return "rational";
    case P6Mode::hamiltonian:
        return "hamiltonian";
    }
    return "?";
}

P6Mode p6_mode_from_string(const std::string &name)
{
    for (auto m : {P6Mode::elliptic, P6Mode::rational, P6Mode::hamiltonian})
        if (name == to_string(m))
            return m;
    throw DomainError(fmt::format("unknown residual mode '{}'", name));
}

namespace
{

// Distance from `delta` to the nearest other preimage of the same wp value,
// relative to the distance from the prediction.
bool branch_is_clear(complex delta, complex predicted, const Lattice &L)
{
    const double d1 = std::abs(delta - predicted);
    // the reflected preimage closest to the prediction
    complex refl = -delta + nearest_lattice_point(predicted + delta, L);
    double d2 = std::abs(refl - predicted);
    if (std::abs(refl - delta) < 1e-12)
        d2 = std::numeric_limits<double>::infinity(); // a half period: both branches coincide
    // translates by the shortest periods
    const double shortest = std::min({std::abs(2.0 * L.omega1), std::abs(2.0 * L.omega3),
                                      std::abs(2.0 * L.omega1 + 2.0 * L.omega3), std::abs(2.0 * L.omega1 - 2.0 * L.omega3)});
    d2 = std::min(d2, shortest - d1);
    return d1 < 0.5 * d2;
}

struct StencilValue {
    complex lhs, rhs;
    double scale = 1.0;
};

StencilValue evaluate_mode(const P6Instance &inst, complex tau, complex delta0, double h, P6Mode mode)
{
    auto L = lattice_from_tau(tau);
    auto delta = [&](complex s) { return delta_at(inst, s, delta0); };
    StencilValue out;
    switch (mode) {
    case P6Mode::elliptic: {
        out.lhs = second_derivative(delta, tau, h);
        out.rhs = -elliptic_rhs(inst.l, delta0, L) / (8.0 * kPi * kPi);
        out.scale = std::max(1.0, std::abs(out.rhs));
        return out;
    }
    case P6Mode::hamiltonian: {
        auto gamma = [&](complex s) { return 2.0 * kPiI * first_derivative(delta, s, h); };
        out.lhs = 2.0 * kPiI * first_derivative(gamma, tau, h);
        out.rhs = 0.5 * elliptic_rhs(inst.l, delta0, L);
        out.scale = std::max(1.0, std::abs(out.rhs));
        return out;
    }
    case P6Mode::rational: {
        auto lam = [&](complex s) { return lambda_at(inst, s); };
        const complex l0 = lam(tau);
        const complex l_tau = first_derivative(lam, tau, h), l_tautau = second_derivative(lam, tau, h);
        const complex t = L.t;
        const complex t_tau = modular_derivative(ModularTag::t, L).dtau;
        const complex d21 = L.e2 - L.e1;
        const complex d21_tau = -(2.0 * L.eta1 + L.e3) * d21 / kPiI;
        const complex t_tautau = (d21_tau * t * (t - 1.0) + d21 * (2.0 * t - 1.0) * t_tau) / kPiI;
        const complex lt = l_tau / t_tau;
        const complex ltt = (l_tautau - lt * t_tautau) / (t_tau * t_tau);
        const Kappas &k = inst.kappas;
        const complex a = 0.5 * (1.0 / l0 + 1.0 / (l0 - 1.0) + 1.0 / (l0 - t)) * lt * lt;
        const complex b = -(1.0 / t + 1.0 / (t - 1.0) + 1.0 / (l0 - t)) * lt;
        const complex c = l0 * (l0 - 1.0) * (l0 - t) / (t * t * (t - 1.0) * (t - 1.0)) *
                          (k.kinf * k.kinf / 2.0 - k.k0 * k.k0 / 2.0 * t / (l0 * l0) +
                           k.k1 * k.k1 / 2.0 * (t - 1.0) / ((l0 - 1.0) * (l0 - 1.0)) +
                           (1.0 - k.kt * k.kt) / 2.0 * t * (t - 1.0) / ((l0 - t) * (l0 - t)));
        out.lhs = ltt;
        out.rhs = a + b + c;
        out.scale = std::max({1.0, std::abs(ltt), std::abs(a), std::abs(b), std::abs(c)});
        return out;
    }
    }
    return out;
}

} // namespace

P6ResidualReport p6_residual(const P6Instance &inst, const std::vector<complex> &tau_grid, P6Mode mode,
                             const P6ResidualOptions &options)
{
    if (tau_grid.empty())
        throw DomainError("p6_residual: empty tau grid");
    for (complex tau : tau_grid)
        if (!(tau.imag() > 0.0))
            throw DomainError("p6_residual: tau must lie in the upper half plane");
    double spacing = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < tau_grid.size(); ++k) {
        double gap = std::abs(tau_grid[k] - tau_grid[k - 1]);
        if (gap > options.max_spacing)
            throw ContinuityError(fmt::format("grid gap {:.3g} between tau[{}] and tau[{}] exceeds {:.3g}", gap, k - 1,
                                              k, options.max_spacing));
        spacing = std::min(spacing, gap);
    }
    P6ResidualReport rep;
    rep.mode = mode;
    std::optional<complex> prev_delta, prev2_delta;
    std::optional<complex> prev_tau, prev2_tau;
    std::size_t last_good = 0;
    for (std::size_t k = 0; k < tau_grid.size(); ++k) {
        const complex tau = tau_grid[k];
        P6Point pt;
        pt.tau = tau;
        auto L = lattice_from_tau(tau);
        pt.t = L.t;
        try {
            pt.b1 = family_b1(inst, L);
            for (int i = 1; i <= 3; ++i)
                if (std::abs(pt.b1 - L.e(i)) <= 1e-9 * std::max(1.0, std::abs(L.e(i))))
                    throw ParameterSingularityError(fmt::format("b1 = e{} at tau = {}{:+}i", i, tau.real(), tau.imag()),
                                                    tau);
        } catch (const ParameterSingularityError &e) {
            pt.flagged = true;
            pt.note = e.what();
            ++rep.flagged;
            rep.points.push_back(pt);
            continue;
        }
        pt.lambda = (pt.b1 - L.e1) / (L.e2 - L.e1);
        complex predicted;
        if (!prev_delta) {
            predicted = reduce_to_cell(options.seed, L);
        } else if (prev2_delta) {
            // linear extrapolation in tau
            complex slope = (*prev_delta - *prev2_delta) / (*prev_tau - *prev2_tau);
            predicted = *prev_delta + slope * (tau - *prev_tau);
        } else {
            predicted = *prev_delta;
        }
        pt.delta1 = elliptic_log(pt.b1, L, predicted).x;
        if (prev_delta && !branch_is_clear(pt.delta1, predicted, L))
            throw ContinuityError(fmt::format("delta_1 branch is ambiguous between tau[{}] = {}{:+}i and tau[{}] = "
                                              "{}{:+}i; refine the grid",
                                              last_good, prev_tau->real(), prev_tau->imag(), k, tau.real(),
                                              tau.imag()));
        prev2_delta = prev_delta;
        prev2_tau = prev_tau;
        prev_delta = pt.delta1;
        prev_tau = tau;
        last_good = k;

        double h = options.h;
        if (h == 0.0)
            h = std::min(2e-3 * std::max(1.0, std::abs(tau)), spacing / 4.0);
        try {
            auto coarse = evaluate_mode(inst, tau, pt.delta1, h, mode);
            StencilValue v = coarse;
            if (options.richardson) {
                auto fine = evaluate_mode(inst, tau, pt.delta1, h / 2.0, mode);
                v = fine;
                v.lhs = (16.0 * fine.lhs - coarse.lhs) / 15.0;
            }
            pt.lhs = v.lhs;
            pt.rhs = v.rhs;
            pt.residual = std::abs(v.lhs - v.rhs) / v.scale;
        } catch (const ParameterSingularityError &e) {
            pt.flagged = true;
            pt.note = e.what();
            ++rep.flagged;
        }
        rep.points.push_back(pt);
    }
    std::vector<double> res;
    for (auto &p : rep.points)
        if (!p.flagged)
            res.push_back(p.residual);
    if (!res.empty()) {
        rep.max = *std::max_element(res.begin(), res.end());
        std::sort(res.begin(), res.end());
        std::size_t n = res.size();
        rep.median = n % 2 ? res[n / 2] : 0.5 * (res[n / 2 - 1] + res[n / 2]);
    }
    return rep;
}

} // namespace heunlab
