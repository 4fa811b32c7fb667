#include "heunlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <fmt/format.h>

namespace heunlab
{

namespace
{

// Gauss-Kronrod 7/15 on [-1, 1].
constexpr std::array<double, 8> kXgk{0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                     0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                     0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                     0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk{0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                     0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                     0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                     0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg{0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

// Kronrod nodes in increasing order with their weights and Gauss weights
// (zero for Kronrod-only nodes).
struct Node {
    double x, wk, wg;
};

const std::array<Node, 15> &sorted_nodes()
{
    static const std::array<Node, 15> nodes = [] {
        std::array<Node, 15> n{};
        int k = 0;
        for (int j = 0; j < 7; ++j) {
            double wg = (j % 2 == 1) ? kWg[j / 2] : 0.0;
            n[k++] = {-kXgk[j], kWgk[j], wg};
        }
        n[k++] = {0.0, kWgk[7], kWg[3]};
        for (int j = 6; j >= 0; --j) {
            double wg = (j % 2 == 1) ? kWg[j / 2] : 0.0;
            n[k++] = {kXgk[j], kWgk[j], wg};
        }
        return n;
    }();
    return nodes;
}

double phase_step(complex a, complex b)
{
    if (a == complex{} || b == complex{})
        return 0.0;
    return std::abs(std::arg(b / a));
}

// Continues sqrt(radicand) from `previous`; takes the sign closest to it.
complex continue_root(complex radicand, complex previous)
{
    complex r = std::sqrt(radicand);
    if (std::norm(r - previous) > std::norm(r + previous))
        r = -r;
    return r;
}

// A parametrised piece of the path: z(s), z'(s) for s in [0, 1].
struct Piece {
    std::function<complex(double)> z;
    std::function<complex(double)> dz;
    double weight; // share of the total tolerance
    // Branch point at an end of the piece, if any. Near it the radicand
    // suffers cancellation and the node values carry roundoff of relative
    // size eps |z0| / |z - z0|.
    std::optional<complex> branch_point{};
};

struct Accumulator {
    complex value{};
    double error = 0.0;
    int evaluations = 0;
    double max_phase = 0.0;
    double worst_error = 0.0;
    complex worst_location{};
    bool failed = false;
};

class PathIntegrator
{
  public:
    PathIntegrator(const BranchedIntegrand &f, const QuadratureOptions &opt) : f_(f), opt_(opt) {}

    // Returns the root at s = 1.
    complex run(const Piece &piece, complex root, bool root_is_seed, Accumulator &acc)
    {
        seeded_ = !root_is_seed;
        return recurse(piece, 0.0, 1.0, root, opt_.tol * piece.weight, 0, acc);
    }

  private:
    complex root_at(complex z, complex previous)
    {
        if (!f_.radicand)
            return complex{1.0, 0.0};
        complex r = continue_root(f_.radicand(z), previous);
        return r;
    }

    complex recurse(const Piece &piece, double a, double b, complex left_root, double tol, int depth,
                    Accumulator &acc)
    {
        const auto &nodes = sorted_nodes();
        double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        complex k15{}, g7{};
        complex prev = left_root;
        bool seeded = seeded_;
        double local_phase = 0.0;
        std::array<complex, 15> roots{};
        double noise = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            double s = mid + half * nodes[j].x;
            complex z = piece.z(s);
            complex r = root_at(z, prev);
            if (f_.radicand && !seeded) {
                // Seed given as a direction; align the first node with it.
                if (std::real(r * std::conj(left_root)) < 0)
                    r = -r;
                seeded = true;
            } else if (f_.radicand) {
                local_phase = std::max(local_phase, phase_step(prev, r));
            }
            roots[j] = r;
            prev = r;
            complex v = f_.body(z, r) * piece.dz(s);
            if (piece.branch_point) {
                double gap = std::abs(z - *piece.branch_point);
                double scale = std::max(1.0, std::abs(*piece.branch_point));
                if (gap > 0)
                    noise += nodes[j].wk * std::abs(v) * scale / gap;
            }
            k15 += nodes[j].wk * v;
            g7 += nodes[j].wg * v;
        }
        acc.evaluations += 15;
        k15 *= half;
        g7 *= half;
        double err = std::abs(k15 - g7);
        double floor = 64 * std::numeric_limits<double>::epsilon() * std::abs(k15);
        floor = std::max(floor, 4 * std::numeric_limits<double>::epsilon() * half * noise);
        bool finite = std::isfinite(k15.real()) && std::isfinite(k15.imag());
        bool phase_ok = local_phase < std::numbers::pi / 4;
        bool converged = finite && phase_ok && err <= std::max(tol, floor);
        bool exhausted = depth >= opt_.max_depth || acc.evaluations > opt_.max_evaluations;
        if (converged || exhausted) {
            if (!converged) {
                acc.failed = true;
                double e = finite ? err : std::numeric_limits<double>::infinity();
                if (!(e <= acc.worst_error)) {
                    acc.worst_error = e;
                    acc.worst_location = piece.z(mid);
                }
                if (!finite)
                    return left_root;
            }
            acc.value += k15;
            acc.error += err;
            acc.max_phase = std::max(acc.max_phase, local_phase);
            seeded_ = true;
            complex zb = piece.z(b);
            if (!f_.radicand)
                return complex{1.0, 0.0};
            complex rb = f_.radicand(zb);
            if (rb == complex{})
                return complex{};
            return continue_root(rb, roots.back());
        }
        complex r = recurse(piece, a, mid, left_root, 0.5 * tol, depth + 1, acc);
        if (r == complex{})
            r = roots[7];
        return recurse(piece, mid, b, r, 0.5 * tol, depth + 1, acc);
    }

    const BranchedIntegrand &f_;
    const QuadratureOptions &opt_;
    bool seeded_ = true;
};

Piece straight_piece(complex z0, complex z1, double weight)
{
    complex d = z1 - z0;
    return {[z0, d](double s) { return z0 + d * s; }, [d](double) { return d; }, weight};
}

// z = z0 + (z1 - z0) s^2: removes (z - z0)^(-1/2) at s = 0.
Piece start_singular_piece(complex z0, complex z1, double weight)
{
    complex d = z1 - z0;
    return {[z0, d](double s) { return z0 + d * s * s; }, [d](double s) { return 2.0 * d * s; }, weight, z0};
}

// z = z1 + (z0 - z1) (1 - s)^2: removes (z1 - z)^(-1/2) at s = 1.
Piece end_singular_piece(complex z0, complex z1, double weight)
{
    complex d = z0 - z1;
    return {[z1, d](double s) { return z1 + d * (1 - s) * (1 - s); },
            [d](double s) { return -2.0 * d * (1 - s); }, weight, z1};
}

void check_failure(const Accumulator &acc, const BranchedIntegrand &f)
{
    if (acc.failed) {
        throw IntegrationError(fmt::format("quadrature of '{}' did not converge; worst segment near {}{:+}i "
                                           "(local error {:.3g})",
                                           f.tag, acc.worst_location.real(), acc.worst_location.imag(),
                                           acc.worst_error),
                               acc.worst_location);
    }
}

} // namespace

double PathPolyline::length() const
{
    double s = 0;
    for (std::size_t i = 1; i < vertices.size(); ++i)
        s += std::abs(vertices[i] - vertices[i - 1]);
    return s;
}

bool PathPolyline::closed(double tol) const
{
    return vertices.size() > 2 && std::abs(vertices.front() - vertices.back()) <= tol;
}

double segment_distance(complex p, complex a, complex b)
{
    complex d = b - a;
    double len2 = std::norm(d);
    if (len2 == 0)
        return std::abs(p - a);
    double s = std::real((p - a) * std::conj(d)) / len2;
    s = std::clamp(s, 0.0, 1.0);
    return std::abs(p - (a + s * d));
}

double path_clearance(const PathPolyline &path, std::span<const complex> singularities)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < path.vertices.size(); ++i)
        for (complex p : singularities)
            best = std::min(best, segment_distance(p, path.vertices[i - 1], path.vertices[i]));
    return best;
}

namespace
{

bool segment_clear(complex a, complex b, std::span<const complex> sing, double clearance)
{
    for (complex p : sing)
        if (segment_distance(p, a, b) < clearance)
            return false;
    return true;
}

// Closest singularity violating clearance on [a, b], measured along the segment.
std::optional<complex> first_violation(complex a, complex b, std::span<const complex> sing, double clearance)
{
    std::optional<complex> out;
    double best = std::numeric_limits<double>::infinity();
    complex d = b - a;
    for (complex p : sing) {
        if (segment_distance(p, a, b) >= clearance)
            continue;
        double s = std::real((p - a) * std::conj(d)) / std::norm(d);
        if (s < best) {
            best = s;
            out = p;
        }
    }
    return out;
}

bool route(complex a, complex b, std::span<const complex> sing, double clearance, int &budget,
           std::vector<complex> &out)
{
    if (segment_clear(a, b, sing, clearance)) {
        out.push_back(b);
        return true;
    }
    if (--budget < 0)
        return false;
    complex p = *first_violation(a, b, sing, clearance);
    complex d = (b - a) / std::abs(b - a);
    complex n = d * complex{0.0, 1.0};
    // Side of the chord the singularity lies on; detour on the other side first.
    double side = std::real((p - a) * std::conj(n));
    std::array<double, 2> signs = side > 0 ? std::array<double, 2>{-1.0, 1.0} : std::array<double, 2>{1.0, -1.0};
    double along = std::real((p - a) * std::conj(d));
    complex foot = a + along * d;
    for (double h = 1.5 * clearance; h < 64 * clearance + 4 * std::abs(b - a); h *= 1.5) {
        for (double sg : signs) {
            complex v = foot + sg * h * n;
            bool ok = true;
            for (complex q : sing)
                if (std::abs(v - q) < clearance)
                    ok = false;
            if (!ok)
                continue;
            if (segment_clear(a, v, sing, clearance) && segment_clear(v, b, sing, clearance)) {
                out.push_back(v);
                out.push_back(b);
                return true;
            }
        }
    }
    // No single vertex works: route to the best candidate vertex recursively.
    for (double h = 1.5 * clearance; h < 64 * clearance + 4 * std::abs(b - a); h *= 1.5) {
        for (double sg : signs) {
            complex v = foot + sg * h * n;
            bool ok = true;
            for (complex q : sing)
                if (std::abs(v - q) < clearance)
                    ok = false;
            if (!ok)
                continue;
            std::vector<complex> trial;
            int local = budget;
            if (route(a, v, sing, clearance, local, trial) && route(v, b, sing, clearance, local, trial)) {
                budget = local;
                out.insert(out.end(), trial.begin(), trial.end());
                return true;
            }
        }
    }
    return false;
}

} // namespace

PathPolyline build_safe_path(complex from, complex to, std::span<const complex> singularities, double clearance)
{
    if (!(clearance > 0))
        throw DomainError("path clearance must be positive");
    for (complex p : singularities) {
        if (std::abs(p - from) < clearance || std::abs(p - to) < clearance)
            throw DomainError(fmt::format("path endpoint within clearance {} of singularity {}{:+}i", clearance,
                                          p.real(), p.imag()));
    }
    if (from == to)
        throw DomainError("path endpoints coincide");
    PathPolyline path;
    path.clearance = clearance;
    path.vertices.push_back(from);
    int budget = 12 + 4 * static_cast<int>(singularities.size());
    if (!route(from, to, singularities, clearance, budget, path.vertices))
        throw PathError(fmt::format("no safe path found from {}{:+}i to {}{:+}i", from.real(), from.imag(),
                                    to.real(), to.imag()));
    return path;
}

BranchedIntegrand plain_integrand(std::function<complex(complex)> f, std::string tag)
{
    BranchedIntegrand b;
    b.tag = std::move(tag);
    b.body = [f = std::move(f)](complex z, complex) { return f(z); };
    return b;
}

namespace
{

QuadratureResult integrate_polyline(const BranchedIntegrand &f, const PathPolyline &path,
                                    const QuadratureOptions &options, complex start_root, bool start_is_seed,
                                    Accumulator &acc)
{
    const auto &v = path.vertices;
    if (v.size() < 2)
        throw DomainError("path needs at least two vertices");
    double total = path.length();
    if (!(total > 0))
        throw DomainError("path has zero length");
    PathIntegrator integ(f, options);
    complex root = start_root;
    bool seed = start_is_seed;
    std::size_t nseg = v.size() - 1;
    for (std::size_t i = 0; i < nseg; ++i) {
        complex a = v[i], b = v[i + 1];
        double w = std::abs(b - a) / total;
        if (w == 0)
            throw DomainError("consecutive path vertices coincide");
        bool s0 = options.singular_start && i == 0;
        bool s1 = options.singular_end && i + 1 == nseg;
        if (s0 && s1) {
            complex m = 0.5 * (a + b);
            root = integ.run(start_singular_piece(a, m, 0.5 * w), root, true, acc);
            root = integ.run(end_singular_piece(m, b, 0.5 * w), root, false, acc);
        } else if (s0) {
            root = integ.run(start_singular_piece(a, b, w), root, true, acc);
        } else if (s1) {
            root = integ.run(end_singular_piece(a, b, w), root, seed, acc);
        } else {
            root = integ.run(straight_piece(a, b, w), root, seed, acc);
        }
        seed = false;
    }
    QuadratureResult res;
    res.value = acc.value;
    res.error = acc.error;
    res.end_root = root;
    res.evaluations = acc.evaluations;
    res.max_phase_step = acc.max_phase;
    return res;
}

} // namespace

QuadratureResult integrate_path(const BranchedIntegrand &f, const PathPolyline &path, const QuadratureOptions &options)
{
    Accumulator acc;
    auto res = integrate_polyline(f, path, options, f.branch_seed, true, acc);
    check_failure(acc, f);
    return res;
}

QuadratureResult integrate_from_infinity(const BranchedIntegrand &f, complex direction, double radius,
                                         const PathPolyline &path, const QuadratureOptions &options)
{
    if (std::abs(direction) == 0 || !(radius > 0))
        throw DomainError("ray to infinity needs a direction and a positive radius");
    complex dir = direction / std::abs(direction);
    complex z0 = radius * dir;
    for (complex p : f.singularities)
        if (std::abs(p) >= radius)
            throw DomainError("ray radius must exceed every singularity modulus");
    if (std::abs(path.vertices.front() - z0) > 1e-12 * radius)
        throw DomainError("path must start at radius * direction");

    // Ray leg, integrated from u = 1 (z = z0) towards u = 0 (z = inf) so
    // that the root continues from the seed at z0; the sign is flipped after.
    Accumulator ray;
    PathIntegrator integ(f, options);
    Piece piece{[z0](double s) {
                    double u = 1 - s;
                    return z0 / (u * u);
                },
                [z0](double s) {
                    double u = 1 - s;
                    return 2.0 * z0 / (u * u * u);
                },
                0.5};
    // dz/ds with u = 1 - s: z = z0 u^-2, dz/du = -2 z0 u^-3, du/ds = -1.
    integ.run(piece, f.branch_seed, true, ray);
    check_failure(ray, f);

    Accumulator acc;
    QuadratureOptions o = options;
    o.singular_start = false;
    auto res = integrate_polyline(f, path, o, f.branch_seed, true, acc);
    check_failure(acc, f);
    res.value -= ray.value;
    res.error += ray.error;
    res.evaluations += ray.evaluations;
    res.max_phase_step = std::max(res.max_phase_step, ray.max_phase);
    return res;
}

} // namespace heunlab
