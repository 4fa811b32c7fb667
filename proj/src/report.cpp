#include "heunlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "heunlab/modular.hpp"
#include "heunlab/ode_monodromy.hpp"
#include "heunlab/spectral.hpp"

namespace heunlab
{

using json = nlohmann::ordered_json;

namespace
{

constexpr double kPi = std::numbers::pi;
const complex kPiI{0.0, kPi};
const double kNaN = std::numeric_limits<double>::quiet_NaN();

json cjson(complex z)
{
    return json{{"re", z.real()}, {"im", z.imag()}};
}

double rel_to(complex a, complex b)
{
    return std::abs(a - b) / std::max(1.0, std::abs(b));
}

// Uniform draws straight from the engine bits, so the stream does not depend
// on the standard library's distribution implementations.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}
    double uniform(double a, double b) { return a + (b - a) * double(g_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 g_;
};

std::uint64_t suite_seed(std::uint64_t seed, const std::string &suite)
{
    std::uint64_t h = 1469598103934665603ull; // FNV-1a
    for (unsigned char c : suite)
        h = (h ^ c) * 1099511628211ull;
    return seed * 0x9E3779B97F4A7C15ull ^ h;
}

complex random_tau(Rng &rng, double ylo = 0.9, double yhi = 1.8)
{
    for (;;) {
        complex t{rng.uniform(-0.5, 0.5), rng.uniform(ylo, yhi)};
        if (std::abs(t) >= 1.0)
            return t;
    }
}

complex random_cell_point(Rng &rng, const Lattice &L, double clear = 0.08)
{
    for (;;) {
        complex z = rng.uniform(-0.5, 0.5) + rng.uniform(-0.5, 0.5) * L.tau;
        if (std::abs(z - nearest_lattice_point(z, L)) > clear)
            return z;
    }
}

complex random_E(Rng &rng, const Lattice &L)
{
    auto bp = lame2_branch_points(L);
    for (;;) {
        complex E{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        bool ok = true;
        for (complex b : bp)
            ok = ok && std::abs(E - b) > 0.5;
        if (ok)
            return E;
    }
}

double pair_distance(const std::array<complex, 2> &a, const std::array<complex, 2> &b)
{
    return std::min(std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1])),
                    std::max(std::abs(a[0] - b[1]), std::abs(a[1] - b[0])));
}

// distance from z to s * target + 2 pi i (Z + i Z), minimised over s = +-1
double dist_mod_2pii_sign(complex z, complex target)
{
    double best = std::numeric_limits<double>::infinity();
    for (double s : {1.0, -1.0}) {
        const complex d = (z - s * target) / (2.0 * kPiI);
        best = std::min(best, 2.0 * kPi * std::abs(d - complex(std::round(d.real()), std::round(d.imag()))));
    }
    return best;
}

std::vector<complex> imag_grid(double a, double b, int n)
{
    std::vector<complex> g;
    for (int k = 0; k < n; ++k)
        g.emplace_back(0.0, n == 1 ? a : a + (b - a) * k / (n - 1));
    return g;
}

class Checks
{
public:
    Checks(const RunConfig &cfg, std::string suite) : cfg_(cfg), suite_(std::move(suite)) {}

    void add(const std::string &check, const std::string &anchor, json inputs, double residual, double tol,
             std::string note = {})
    {
        CheckRecord r;
        r.name = fmt::format("{}.{}.{:02d}", suite_, check, counters_[check]++);
        r.anchor = anchor;
        r.inputs = std::move(inputs);
        r.residual = residual;
        r.tolerance = cfg_.tol.value_or(tol);
        r.pass = std::isfinite(residual) && residual <= r.tolerance;
        r.note = std::move(note);
        out_.push_back(std::move(r));
    }

    // Runs f for the residual; a library error becomes a failed record.
    template <typename F>
    void guarded(const std::string &check, const std::string &anchor, json inputs, double tol, F &&f)
    {
        std::string note;
        double residual = kNaN;
        try {
            residual = f(inputs, note);
        } catch (const std::exception &e) {
            note = e.what();
        }
        add(check, anchor, std::move(inputs), residual, tol, std::move(note));
    }

    std::vector<CheckRecord> take() { return std::move(out_); }

private:
    const RunConfig &cfg_;
    std::string suite_;
    std::map<std::string, int> counters_;
    std::vector<CheckRecord> out_;
};

std::vector<complex> taus_or(const RunConfig &cfg, Rng &rng, int n)
{
    if (cfg.taus)
        return *cfg.taus;
    std::vector<complex> t;
    for (int k = 0; k < n; ++k)
        t.push_back(random_tau(rng));
    return t;
}

template <typename T>
std::array<double, 4> elliptic_identities(complex tau_d, const std::vector<complex> &pts)
{
    using C = std::complex<T>;
    const auto L = lattice_from_tau<T>(C(tau_d));
    std::array<double, 4> r{0, 0, 0, 0};
    for (complex zd : pts) {
        const C z(zd);
        auto [p, dp] = wp_and_prime(z, L);
        const double sp = std::max(1.0, double(std::pow(std::abs(p), 3)));
        r[0] = std::max(r[0], double(std::abs(dp * dp - (T(4) * p * p * p - L.g2 * p - L.g3))) / sp);
        const C zz = zeta(z, L);
        for (int j : {1, 3}) {
            const C w = T(2) * L.omega(j);
            r[1] = std::max(r[1], double(std::abs(wp(z + w, L) - p)) / std::max(1.0, double(std::abs(p))));
            r[2] = std::max(r[2], double(std::abs(zeta(z + w, L) - zz - T(2) * L.eta(j))) /
                                      std::max(1.0, double(std::abs(zz))));
        }
    }
    const C pi_half_i(0, std::numbers::pi_v<T> / 2);
    r[3] = double(std::abs(L.eta1 * L.omega3 - L.eta3 * L.omega1 - pi_half_i));
    return r;
}

json l_json(const MultiIndex &l)
{
    return json::array({l[0], l[1], l[2], l[3]});
}

// ---------------------------------------------------------------- lame

std::vector<CheckRecord> suite_lame(const RunConfig &cfg)
{
    Checks c(cfg, "lame");
    Rng rng(suite_seed(cfg.seed, "lame"));
    const bool lame2 = cfg.l == MultiIndex{2, 0, 0, 0};
    for (complex tau : taus_or(cfg, rng, 2)) {
        const auto L = lattice_from_tau(tau);
        std::vector<complex> pts;
        for (int k = 0; k < 20; ++k)
            pts.push_back(random_cell_point(rng, L));
        const json base{{"tau", cjson(tau)}, {"points", pts.size()},
                        {"precision", cfg.precision == Precision::extended ? "extended" : "double"}};
        std::array<double, 4> r{kNaN, kNaN, kNaN, kNaN};
        std::string note;
        try {
            r = cfg.precision == Precision::extended ? elliptic_identities<long double>(tau, pts)
                                                     : elliptic_identities<double>(tau, pts);
        } catch (const std::exception &e) {
            note = e.what();
        }
        c.add("wp_differential_equation", "wp'^2 = 4 wp^3 - g2 wp - g3", base, r[0], 1e-10, note);
        c.add("wp_periodicity", "wp(z + 2 omega_j) = wp(z)", base, r[1], 1e-10, note);
        c.add("zeta_quasi_periodicity", "zeta(z + 2 omega_j) = zeta(z) + 2 eta_j", base, r[2], 1e-10, note);
        c.add("legendre_relation", "eta1 omega3 - eta3 omega1 = pi i / 2", base, r[3], 1e-12, note);

        for (int n = 0; n < 3; ++n) {
            const complex E = random_E(rng, L);
            json in{{"tau", cjson(tau)}, {"E", cjson(E)}, {"l", l_json(cfg.l)}};
            std::optional<SpectralData> sd;
            try {
                sd = build_xi_even(cfg.l, E, L);
            } catch (const std::exception &e) {
                c.add("xi_construction", "Xi''' - 4(V - E)Xi' - 2V'Xi = 0", in, kNaN, 1e-9, e.what());
                continue;
            }
            c.guarded("Q_constancy", "Xi Xi''/2 - Xi'^2/4 - (V - E) Xi^2 is constant in x", in, 1e-9,
                      [&](json &, std::string &) {
                          auto q = sample_Q(*sd, L);
                          return q.spread / q.scale;
                      });
            if (lame2)
                c.guarded("Q_closed_form", "Q = (E^2 - 3 g2) prod (E - 3 e_i)", in, 1e-9, [&](json &, std::string &) {
                    complex closed = (E * E - 3.0 * L.g2) * (E - 3.0 * L.e1) * (E - 3.0 * L.e2) * (E - 3.0 * L.e3);
                    return rel_to(sample_Q(*sd, L).mean, closed);
                });
            c.guarded("lambda_equation", "-Lambda'' + (V - E) Lambda = 0", in, 1e-7, [&](json &inp, std::string &) {
                double worst = 0.0;
                for (int k = 0; k < 5; ++k)
                    worst = std::max(worst, lambda_equation_residual(*sd, random_cell_point(rng, L, 0.1), L));
                inp["points"] = 5;
                return worst;
            });
            if (!lame2)
                continue;
            for (int k : {1, 3}) {
                json ink = in;
                ink["k"] = k;
                c.guarded("multiplier_pair", "elliptic and hyperelliptic multipliers agree as {m, 1/m}", ink, 1e-6,
                          [&](json &inp, std::string &) {
                              const complex m = monodromy_multiplier_elliptic(hk_parameters_lame2(E, L), k, L);
                              const complex h = monodromy_multiplier_hyperelliptic(E, k, L).value;
                              inp["m_elliptic"] = cjson(m);
                              inp["m_hyperelliptic"] = cjson(h);
                              return pair_distance({m, 1.0 / m}, {h, 1.0 / h}) /
                                     std::max(1.0, std::abs(m) + std::abs(1.0 / m));
                          });
            }
        }
    }
    return c.take();
}

// ---------------------------------------------------------------- reduction

std::vector<CheckRecord> suite_reduction(const RunConfig &cfg)
{
    Checks c(cfg, "reduction");
    Rng rng(suite_seed(cfg.seed, "reduction"));
    for (complex tau : taus_or(cfg, rng, 1)) {
        const auto L = lattice_from_tau(tau);
        for (int n = 0; n < 3; ++n) {
            const complex E = random_E(rng, L);
            json in{{"tau", cjson(tau)}, {"E", cjson(E)}};
            try {
                auto rep = verify_reduction_identities(E, L, cfg.tol.value_or(1e-6));
                json a = in;
                a["lattice_shift"] = json::array({rep.alpha_identity.lattice_shift[0], rep.alpha_identity.lattice_shift[1]});
                a["signs"] = json::array({rep.alpha_identity.lhs_sign, rep.alpha_identity.rhs_sign});
                c.add("alpha_identity", "genus-two alpha integral reduces to the elliptic one (mod periods)", a,
                      rep.alpha_identity.residual, 1e-6);
                for (int i = 0; i < 3; ++i) {
                    json k = in;
                    k["i"] = i + 1;
                    k["signs"] = json::array({rep.kappa_identity[i].lhs_sign, rep.kappa_identity[i].rhs_sign});
                    c.add("kappa_identity", "genus-two kappa integral reduces to the elliptic one", k,
                          rep.kappa_identity[i].residual, 1e-6);
                }
            } catch (const std::exception &e) {
                c.add("alpha_identity", "genus-two alpha integral reduces to the elliptic one (mod periods)", in, kNaN,
                      1e-6, e.what());
            }
        }
    }
    return c.take();
}

// ---------------------------------------------------------------- modular

std::vector<CheckRecord> suite_modular(const RunConfig &cfg)
{
    Checks c(cfg, "modular");
    Rng rng(suite_seed(cfg.seed, "modular"));
    const complex a{0.5, 0.0};
    for (complex tau : taus_or(cfg, rng, 3)) {
        json in{{"tau", cjson(tau)}, {"precision", cfg.precision == Precision::extended ? "extended" : "double"}};
        auto one = [&](ModularTag tag, complex expo) {
            auto fd = finite_difference_oracle(tag, tau, 0.0, expo, cfg.precision);
            return rel_to(fd.value, modular_derivative(tag, tau, expo).dtau);
        };
        c.guarded("dt_dtau", "dt/dtau = (e2 - e1) t (t - 1)/(pi i)", in, 1e-6,
                  [&](json &, std::string &) { return one(ModularTag::t, 0.0); });
        c.guarded("de_dtau", "de_i/dtau = (-2 eta1 e_i + e_i^2 - g2/6)/(pi i)", in, 1e-6, [&](json &, std::string &) {
            return std::max({one(ModularTag::e1, 0.0), one(ModularTag::e2, 0.0), one(ModularTag::e3, 0.0)});
        });
        c.guarded("deta1_dtau", "deta1/dtau = (-eta1^2 + g2/48)/(pi i)", in, 1e-6,
                  [&](json &, std::string &) { return one(ModularTag::eta1, 0.0); });
        json ina = in;
        ina["exponent"] = cjson(a);
        c.guarded("dpow_dtau", "d(e2 - e1)^a/dtau = -a (2 eta1 + e3)(e2 - e1)^a/(pi i)", ina, 1e-6,
                  [&](json &, std::string &) { return one(ModularTag::pow_e2_minus_e1, a); });
    }
    return c.take();
}

// ---------------------------------------------------------------- p6

// p6_residual on the grid with extra points inserted wherever consecutive
// taus are further apart than delta_1 continuation allows; only the
// requested points are reported.
P6ResidualReport residual_on(const P6Instance &inst, const std::vector<complex> &grid, P6Mode mode)
{
    const double max_gap = P6ResidualOptions{}.max_spacing;
    std::vector<complex> fine;
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (k > 0) {
            const int pieces = int(std::ceil(std::abs(grid[k] - grid[k - 1]) / (0.999 * max_gap)));
            for (int j = 1; j < pieces; ++j)
                fine.push_back(grid[k - 1] + (grid[k] - grid[k - 1]) * (double(j) / pieces));
        }
        keep.push_back(fine.size());
        fine.push_back(grid[k]);
    }
    auto full = p6_residual(inst, fine, mode);
    P6ResidualReport rep;
    rep.mode = mode;
    std::vector<double> res;
    for (std::size_t k : keep) {
        rep.points.push_back(full.points[k]);
        if (full.points[k].flagged)
            ++rep.flagged;
        else
            res.push_back(full.points[k].residual);
    }
    if (!res.empty()) {
        std::sort(res.begin(), res.end());
        rep.max = res.back();
        rep.median = res.size() % 2 ? res[res.size() / 2] : 0.5 * (res[res.size() / 2 - 1] + res[res.size() / 2]);
    }
    return rep;
}

json instance_json(const P6Instance &inst)
{
    return json{{"family", to_string(inst.family)}, {"c1", cjson(inst.c1)}, {"c3", cjson(inst.c3)},
                {"branch", inst.branch}, {"l", l_json(inst.l)}};
}

bool has_hk(const P6Instance &inst)
{
    return inst.family == P6Family::hitchin_l0000 || inst.family == P6Family::explicit_l1000;
}

// Constants -2 eta_k alpha + 2 omega_k zeta(alpha) + 2 kappa omega_k from
// (mu1, b1), with mu1 from the Hamilton equation.
std::array<complex, 2> hamiltonian_constants(const P6Instance &inst, const Lattice &L)
{
    const HKCase kase = inst.family == P6Family::hitchin_l0000 ? HKCase::l0000 : HKCase::l1000;
    MuB1 mb{hamiltonian_mu1(inst, L), family_b1(inst, L)};
    auto hk = hk_from_mu_b1(kase, mb, L);
    complex alpha = elliptic_log(hk.wp_alpha, L, complex(0.1, 0.1)).x;
    if (std::abs(wp_prime(alpha, L) - hk.wp_prime_alpha) > std::abs(wp_prime(-alpha, L) - hk.wp_prime_alpha))
        alpha = -alpha;
    return monodromy_constants(alpha, hk.kappa, L);
}

std::vector<complex> subsample(const std::vector<complex> &g, std::size_t n)
{
    if (g.size() <= n)
        return g;
    std::vector<complex> out;
    for (std::size_t k = 0; k < n; ++k)
        out.push_back(g[k * (g.size() - 1) / (n - 1)]);
    return out;
}

std::vector<CheckRecord> suite_p6(const RunConfig &cfg)
{
    Checks c(cfg, "p6");
    const P6Instance inst = instance_from_config(cfg);
    const std::vector<complex> grid = cfg.taus ? *cfg.taus : imag_grid(1.0, 1.5, 20);
    json base = instance_json(inst);
    base["grid"] = json::array({cjson(grid.front()), cjson(grid.back()), grid.size()});

    struct ModeSpec {
        P6Mode mode;
        const char *check;
        const char *anchor;
        double tol;
    };
    const ModeSpec modes[] = {
        {P6Mode::elliptic, "residual_elliptic", "delta'' = -(1/(8 pi^2)) sum (l_i + 1/2)^2 wp'(delta + omega_i)", 1e-6},
        {P6Mode::rational, "residual_rational", "Painleve VI in (lambda, t)", 1e-5},
        {P6Mode::hamiltonian, "residual_hamiltonian", "2 pi i dgamma/dtau = (1/2) sum (l_i + 1/2)^2 wp'(delta + omega_i)",
         1e-6},
    };
    for (const auto &m : modes)
        c.guarded(m.check, m.anchor, base, m.tol, [&](json &in, std::string &note) {
            auto rep = residual_on(inst, grid, m.mode);
            in["flagged"] = rep.flagged;
            in["median"] = rep.median;
            if (rep.flagged > 0)
                note = fmt::format("{} of {} points flagged at parameter singularities", rep.flagged, grid.size());
            return rep.flagged == int(grid.size()) ? kNaN : rep.max;
        });

    c.guarded("apparency", "log-free Frobenius expansion at x = delta_1 and w = lambda", base, 1e-10,
              [&](json &in, std::string &) {
                  double worst = 0.0;
                  int used = 0;
                  for (complex tau : subsample(grid, 5)) {
                      auto L = lattice_from_tau(tau);
                      complex b1, mu1;
                      try {
                          b1 = family_b1(inst, L);
                          mu1 = family_mu1(inst, L);
                      } catch (const ParameterSingularityError &) {
                          continue;
                      }
                      auto f = frame_map(b1, mu1, inst.l, L, complex(0.1, 0.1));
                      auto ode = make_fuchsian_m1(inst.l, b1, mu1, f.p, L);
                      worst = std::max(worst, frobenius_apparency_check(ode) / std::max(1.0, std::abs(f.p)));
                      RationalODE r{f.kappas, f.t, f.lambda, f.mu, f.H_VI, f.kappa};
                      worst = std::max(worst, frobenius_apparency_check(r) / std::max(1.0, std::abs(f.H_VI)));
                      ++used;
                  }
                  in["points"] = used;
                  return used ? worst : kNaN;
              });

    c.guarded("mu1_consistency", "mu1 of the family agrees with the Hamilton equation for dlambda/dt", base, 1e-6,
              [&](json &in, std::string &) {
                  double worst = 0.0;
                  int used = 0;
                  for (complex tau : subsample(grid, 5)) {
                      auto L = lattice_from_tau(tau);
                      try {
                          worst = std::max(worst, rel_to(family_mu1(inst, L), hamiltonian_mu1(inst, L)));
                          ++used;
                      } catch (const ParameterSingularityError &) {
                      }
                  }
                  in["points"] = used;
                  return used ? worst : kNaN;
              });

    if (has_hk(inst)) {
        const std::array<complex, 2> closed{kPiI * inst.c1, kPiI * inst.c3};
        std::vector<std::array<complex, 2>> consts;
        std::string note;
        try {
            for (complex tau : grid)
                consts.push_back(hamiltonian_constants(inst, lattice_from_tau(tau)));
        } catch (const std::exception &e) {
            note = e.what();
        }
        double dev = consts.empty() ? kNaN : 0.0, var = consts.empty() ? kNaN : 0.0;
        for (const auto &v : consts)
            for (int k = 0; k < 2; ++k) {
                dev = std::max(dev, dist_mod_2pii_sign(v[k], closed[k]));
                var = std::max(var, dist_mod_2pii_sign(v[k], consts.front()[k]));
            }
        if (!note.empty())
            dev = var = kNaN;
        c.add("monodromy_constants_closed_form",
              "-2 eta_k alpha + 2 omega_k zeta(alpha) + 2 kappa omega_k = pi i C_k (mod 2 pi i, sign)", base, dev, 1e-8,
              note);
        c.add("monodromy_constants_variation", "monodromy constants are independent of tau", base, var, 1e-8, note);
    }
    return c.take();
}

// ---------------------------------------------------------------- monodromy

std::vector<CheckRecord> suite_monodromy(const RunConfig &cfg)
{
    Checks c(cfg, "monodromy");
    Rng rng(suite_seed(cfg.seed, "monodromy"));
    P6Instance inst = instance_from_config(cfg);
    if (!has_hk(inst))
        inst = make_p6_instance(P6Family::hitchin_l0000, 0.31, 0.77);
    const complex base_point{0.13, 0.21};
    for (complex tau : taus_or(cfg, rng, 1)) {
        const auto L = lattice_from_tau(tau);
        for (int n = 0; n < 2; ++n) {
            const complex E = random_E(rng, L);
            auto ode = elliptic_ode({2, 0, 0, 0}, E, L);
            for (int k : {1, 3}) {
                json in{{"tau", cjson(tau)}, {"E", cjson(E)}, {"k", k}};
                std::optional<MonodromyResult> res;
                std::optional<HKAnsatz> hk;
                std::string err;
                try {
                    auto loop = period_cycle(ode, base_point, k);
                    auto sd = build_xi_even({2, 0, 0, 0}, E, L);
                    res = monodromy_matrix(ode, loop, lambda_pair_basis(sd, loop.vertices.front(), L));
                    hk = hk_parameters_lame2(E, L);
                } catch (const std::exception &e) {
                    err = e.what();
                }
                if (!res) {
                    c.add("lame_multiplier", "integrated multipliers = exp(+-(-2 eta_k alpha + 2 omega_k zeta(alpha) + "
                                             "2 kappa omega_k))",
                          in, kNaN, 1e-6, err);
                    continue;
                }
                auto cmp = multiplier_compare(*res, hk->alpha, hk->kappa, k, L);
                json inm = in;
                inm["eigenvalues"] = json::array({cjson(cmp.eigenvalues[0]), cjson(cmp.eigenvalues[1])});
                inm["agreement_omega_j_reading"] = cmp.agreement_other;
                const double scale = std::max(1.0, std::abs(std::exp(cmp.exponent)) + std::abs(std::exp(-cmp.exponent)));
                c.add("lame_multiplier",
                      "integrated multipliers = exp(+-(-2 eta_k alpha + 2 omega_k zeta(alpha) + 2 kappa omega_k))", inm,
                      cmp.agreement / scale, 1e-6);
                c.add("lame_diagonal_basis", "monodromy is diagonal in the (Lambda(x), Lambda(-x)) basis", in,
                      off_diagonal_leakage(res->matrix), 1e-6);
            }
        }

        json inp = instance_json(inst);
        inp["tau"] = cjson(tau);
        std::optional<FuchsianODE_M1> m1;
        std::optional<P6Spectral> spec;
        std::optional<FamilyHK> fhk;
        std::string err;
        try {
            const complex b1 = family_b1(inst, L), mu1 = family_mu1(inst, L);
            m1 = make_fuchsian_m1(inst.l, b1, mu1, apparency_p(b1, mu1, inst.l, L), L);
            spec = xi_and_Q(inst.family == P6Family::hitchin_l0000 ? HKCase::l0000 : HKCase::l1000, mu1, b1, L);
            fhk = family_hk(inst, L);
        } catch (const std::exception &e) {
            err = e.what();
        }
        for (int k : {1, 3}) {
            json in = inp;
            in["k"] = k;
            c.guarded("p6_multiplier", "integrated multipliers of the apparent equation = exp(+-pi i C_k)", in, 1e-6,
                      [&](json &io, std::string &) {
                          if (!m1)
                              throw NumericError(err);
                          auto ode = fuchsian_m1_ode(*m1);
                          auto loop = period_cycle(ode, base_point, k);
                          auto res = monodromy_matrix(ode, loop, lambda_pair_basis(*spec, loop.vertices.front(), L));
                          auto cmp = multiplier_compare(res, fhk->alpha, fhk->kappa, k, L);
                          io["eigenvalues"] = json::array({cjson(cmp.eigenvalues[0]), cjson(cmp.eigenvalues[1])});
                          io["agreement_omega_j_reading"] = cmp.agreement_other;
                          io["reading"] = cmp.agreement <= cmp.agreement_other ? "omega_k" : "omega_j";
                          io["diagonal_leakage"] = off_diagonal_leakage(res.matrix);
                          const complex ck = k == 1 ? inst.c1 : inst.c3;
                          const double to_closed = pair_distance(res.eigenvalues, {std::exp(kPiI * ck), std::exp(-kPiI * ck)});
                          return std::max({cmp.agreement, to_closed, off_diagonal_leakage(res.matrix)});
                      });
        }
        c.guarded("apparent_loop", "a loop around w = lambda has identity monodromy", inp, 1e-7,
                  [&](json &io, std::string &) {
                      if (!m1)
                          throw NumericError(err);
                      auto f = frame_map(m1->b1, m1->mu1, inst.l, L, complex(0.1, 0.1));
                      RationalODE r{f.kappas, f.t, f.lambda, f.mu, f.H_VI, f.kappa};
                      const double rad = 0.5 * std::min({std::abs(f.lambda), std::abs(f.lambda - 1.0), std::abs(f.lambda - f.t)});
                      io["lambda"] = cjson(f.lambda);
                      io["radius"] = rad;
                      auto res = monodromy_matrix(rational_ode(r), circle_loop(f.lambda, rad));
                      return (res.matrix - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
                  });
        c.guarded("wronskian_transport", "det(monodromy) = exp(-loop integral of p1)", inp, 1e-8,
                  [&](json &, std::string &) {
                      if (!m1)
                          throw NumericError(err);
                      auto f = frame_map(m1->b1, m1->mu1, inst.l, L, complex(0.1, 0.1));
                      RationalODE r{f.kappas, f.t, f.lambda, f.mu, f.H_VI, f.kappa};
                      auto ode = rational_ode(r);
                      double rad = 0.5 * std::min({1.0, std::abs(f.lambda), std::abs(f.t)});
                      auto loop = circle_loop(0.0, rad);
                      return std::abs(monodromy_matrix(ode, loop).det - predicted_det(ode, loop));
                  });
    }
    return c.take();
}

using SuiteFn = std::vector<CheckRecord> (*)(const RunConfig &);

SuiteFn suite_function(const std::string &name)
{
    if (name == "lame")
        return suite_lame;
    if (name == "reduction")
        return suite_reduction;
    if (name == "modular")
        return suite_modular;
    if (name == "p6")
        return suite_p6;
    if (name == "monodromy")
        return suite_monodromy;
    throw UsageError(fmt::format("unknown suite '{}'", name));
}

std::string csv_field(const std::string &s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s)
        out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
}

std::string fmt_double(double v)
{
    return fmt::format("{}", v);
}

} // namespace

const std::vector<std::string> &suite_names()
{
    static const std::vector<std::string> names{"lame", "reduction", "p6", "modular", "monodromy", "all"};
    return names;
}

P6Instance instance_from_config(const RunConfig &config)
{
    try {
        return make_p6_instance(p6_family_from_string(config.family), config.c1, config.c3, config.branch);
    } catch (const DomainError &e) {
        throw UsageError(e.what());
    }
}

void validate(const RunConfig &config)
{
    if (config.command != "verify" && config.command != "trajectory")
        throw UsageError(fmt::format("unknown command '{}'", config.command));
    const auto &names = suite_names();
    if (config.command == "verify" && std::find(names.begin(), names.end(), config.suite) == names.end())
        throw UsageError(fmt::format("unknown suite '{}'", config.suite));
    if (config.taus) {
        if (config.taus->empty())
            throw UsageError("empty tau sample list");
        for (complex t : *config.taus)
            if (!(t.imag() > 0.0) || !std::isfinite(t.real()))
                throw UsageError(fmt::format("tau = {} is not in the upper half plane", format_complex(t)));
    }
    if (config.tol && !(*config.tol > 0.0))
        throw UsageError("tolerance must be positive");
    if (config.format != "json" && config.format != "csv")
        throw UsageError(fmt::format("unknown format '{}'", config.format));
    for (int v : config.l)
        if (v < 0)
            throw UsageError("l indices must be non-negative");
    instance_from_config(config);
}

Report run_suite(const RunConfig &config)
{
    validate(config);
    Report rep;
    rep.config = config;
    std::vector<std::string> run;
    if (config.suite == "all")
        run = {"lame", "reduction", "p6", "modular", "monodromy"};
    else
        run = {config.suite};
    std::vector<std::future<std::vector<CheckRecord>>> jobs;
    for (const auto &s : run) {
        SuiteFn f = suite_function(s);
        jobs.push_back(std::async(std::launch::async, [f, &config] { return f(config); }));
    }
    for (auto &j : jobs) {
        auto recs = j.get();
        rep.checks.insert(rep.checks.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
    std::sort(rep.checks.begin(), rep.checks.end(), [](const auto &a, const auto &b) { return a.name < b.name; });
    for (const auto &c : rep.checks)
        (c.pass ? rep.passed : rep.failed)++;
    return rep;
}

json config_json(const RunConfig &config)
{
    json taus = nullptr;
    if (config.taus) {
        taus = json::array();
        for (complex t : *config.taus)
            taus.push_back(cjson(t));
    }
    return json{{"command", config.command},
                {"suite", config.suite},
                {"taus", taus},
                {"family", config.family},
                {"c1", cjson(config.c1)},
                {"c3", cjson(config.c3)},
                {"branch", config.branch},
                {"l", l_json(config.l)},
                {"tol", config.tol ? json(*config.tol) : json(nullptr)},
                {"precision", config.precision == Precision::extended ? "extended" : "double"},
                {"seed", config.seed},
                {"format", config.format}};
}

std::string report_json(const Report &report)
{
    json checks = json::array();
    for (const auto &c : report.checks)
        checks.push_back(json{{"name", c.name},
                              {"anchor", c.anchor},
                              {"inputs", c.inputs},
                              {"residual", std::isfinite(c.residual) ? json(c.residual) : json(nullptr)},
                              {"tolerance", c.tolerance},
                              {"pass", c.pass},
                              {"note", c.note}});
    json j{{"version", report.version},
           {"config", config_json(report.config)},
           {"checks", checks},
           {"summary",
            {{"total", report.checks.size()}, {"passed", report.passed}, {"failed", report.failed}, {"pass", report.pass()}}}};
    return j.dump(2) + "\n";
}

std::string report_csv(const Report &report)
{
    std::string out = "name,anchor,residual,tolerance,pass,note\n";
    for (const auto &c : report.checks)
        out += fmt::format("{},{},{},{},{},{}\n", csv_field(c.name), csv_field(c.anchor), fmt_double(c.residual),
                           fmt_double(c.tolerance), c.pass ? "true" : "false", csv_field(c.note));
    return out;
}

std::vector<TrajectoryRow> emit_trajectory(const P6Instance &inst, const std::vector<complex> &tau_grid)
{
    if (tau_grid.empty())
        throw UsageError("empty tau grid");
    auto ell = residual_on(inst, tau_grid, P6Mode::elliptic);
    auto rat = residual_on(inst, tau_grid, P6Mode::rational);
    std::vector<TrajectoryRow> rows;
    for (std::size_t k = 0; k < ell.points.size(); ++k) {
        const auto &p = ell.points[k];
        const auto &q = rat.points[k];
        TrajectoryRow r;
        r.tau = p.tau;
        r.t = p.t;
        r.b1 = p.b1;
        r.delta1 = p.delta1;
        r.lambda = p.lambda;
        r.flagged = p.flagged || q.flagged;
        r.note = !p.note.empty() ? p.note : q.note;
        r.residual_elliptic = p.flagged ? kNaN : p.residual;
        r.residual_rational = q.flagged ? kNaN : q.residual;
        if (p.flagged)
            r.b1 = r.delta1 = r.lambda = complex(kNaN, kNaN);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string trajectory_csv(const std::vector<TrajectoryRow> &rows)
{
    std::string out = "tau,t,b1,delta1,lambda,residual_elliptic,residual_rational,flagged,note\n";
    for (const auto &r : rows)
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", format_complex(r.tau), format_complex(r.t),
                           format_complex(r.b1), format_complex(r.delta1), format_complex(r.lambda),
                           fmt_double(r.residual_elliptic), fmt_double(r.residual_rational), r.flagged ? 1 : 0,
                           csv_field(r.note));
    return out;
}

std::string trajectory_json(const std::vector<TrajectoryRow> &rows, const RunConfig &config)
{
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    auto cnum = [](complex z) { return std::isfinite(z.real()) ? cjson(z) : json(nullptr); };
    json arr = json::array();
    for (const auto &r : rows)
        arr.push_back(json{{"tau", cjson(r.tau)},
                           {"t", cjson(r.t)},
                           {"b1", cnum(r.b1)},
                           {"delta1", cnum(r.delta1)},
                           {"lambda", cnum(r.lambda)},
                           {"residual_elliptic", num(r.residual_elliptic)},
                           {"residual_rational", num(r.residual_rational)},
                           {"flagged", r.flagged},
                           {"note", r.note}});
    json j{{"version", kToolVersion},
           {"config", config_json(config)},
           {"columns", json::array({"tau", "t", "b1", "delta1", "lambda", "residual_elliptic", "residual_rational",
                                    "flagged", "note"})},
           {"rows", arr}};
    return j.dump(2) + "\n";
}

std::string format_complex(complex z)
{
    const double im = z.imag();
    const bool neg = std::signbit(im) && !std::isnan(im);
    return fmt::format("{}{}{}i", z.real(), neg ? "-" : "+", std::abs(im));
}

namespace
{

double parse_real(const std::string &s, const std::string &whole)
{
    if (s.empty() || s == "+")
        return 1.0;
    if (s == "-")
        return -1.0;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception &) {
        throw UsageError(fmt::format("cannot parse complex number '{}'", whole));
    }
    if (used != s.size())
        throw UsageError(fmt::format("cannot parse complex number '{}'", whole));
    return v;
}

std::string trim(const std::string &s)
{
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos)
        return {};
    return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

} // namespace

complex parse_complex(const std::string &text)
{
    std::string s;
    for (char ch : text)
        if (ch != ' ' && ch != '\t')
            s += ch == 'j' ? 'i' : ch;
    if (s.empty())
        throw UsageError("empty complex number");
    if (s.back() != 'i') {
        if (s.find_first_of("+-", 1) != std::string::npos) {
            // "a+b" without the unit only makes sense for exponents
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(s, &used);
            } catch (const std::exception &) {
                throw UsageError(fmt::format("cannot parse complex number '{}'", text));
            }
            if (used != s.size())
                throw UsageError(fmt::format("cannot parse complex number '{}'", text));
            return v;
        }
        return parse_real(s, text);
    }
    s.pop_back();
    // split at the last sign that is not a leading sign or an exponent sign
    std::size_t split = std::string::npos;
    for (std::size_t k = s.size(); k-- > 1;)
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
            split = k;
            break;
        }
    if (split == std::string::npos)
        return {0.0, parse_real(s, text)};
    if (s.substr(0, split).empty())
        throw UsageError(fmt::format("cannot parse complex number '{}'", text));
    return {parse_real(s.substr(0, split), text), parse_real(s.substr(split), text)};
}

std::vector<complex> parse_tau_grid(const std::string &text)
{
    const std::string s = trim(text);
    std::vector<complex> out;
    if (s.empty())
        return out;
    if (s.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ':'))
            parts.push_back(trim(item));
        if (parts.size() != 3)
            throw UsageError(fmt::format("tau grid '{}' must have the form start:end:count", text));
        const complex a = parse_complex(parts[0]), b = parse_complex(parts[1]);
        long n = 0;
        try {
            std::size_t used = 0;
            n = std::stol(parts[2], &used);
            if (used != parts[2].size())
                throw std::invalid_argument("count");
        } catch (const std::exception &) {
            throw UsageError(fmt::format("tau grid count '{}' is not an integer", parts[2]));
        }
        if (n < 0)
            throw UsageError("tau grid count must be non-negative");
        for (long k = 0; k < n; ++k)
            out.push_back(n == 1 ? a : a + (b - a) * (double(k) / double(n - 1)));
        return out;
    }
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty())
            out.push_back(parse_complex(item));
    return out;
}

} // namespace heunlab
