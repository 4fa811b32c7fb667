#pragma once

// Adaptive quadrature along polygonal paths in the complex plane, with
// optional continuation of a square-root factor sqrt(R(z)) along the path.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "heunlab/elliptic.hpp"

namespace heunlab
{

struct PathPolyline {
    std::vector<complex> vertices;
    double clearance = 0.0;

    double length() const;
    bool closed(double tol = 1e-14) const;
};

// Straight segment when possible, otherwise detours around the singularities
// keeping every point at least `clearance` away from each of them.
PathPolyline build_safe_path(complex from, complex to, std::span<const complex> singularities, double clearance);

// Minimum distance from any point of the path to the singularities.
double path_clearance(const PathPolyline &path, std::span<const complex> singularities);

// Integrand f(z, r) where r is sqrt(radicand(z)) continued along the path.
// Without a radicand, r is always 1.
struct BranchedIntegrand {
    std::string tag;
    std::function<complex(complex z, complex root)> body;
    std::function<complex(complex z)> radicand;
    std::vector<complex> singularities;
    // Approximate value (or, at a branch point, direction) of the root at
    // the path start; the first node takes the sign aligned with it.
    complex branch_seed{1.0, 0.0};
};

BranchedIntegrand plain_integrand(std::function<complex(complex)> f, std::string tag = "plain");

struct QuadratureOptions {
    double tol = 1e-9;
    int max_depth = 48;
    int max_evaluations = 4'000'000;
    // Endpoint singularities of inverse square-root type at the first/last
    // vertex, removed by z = z0 + (z1 - z0) s^2.
    bool singular_start = false;
    bool singular_end = false;
};

struct QuadratureResult {
    complex value;
    double error = 0.0;
    complex end_root{1.0, 0.0}; // continued root at the last vertex (0 at a branch point)
    int evaluations = 0;
    // Largest phase change of the root between adjacent nodes.
    double max_phase_step = 0.0;
};

QuadratureResult integrate_path(const BranchedIntegrand &f, const PathPolyline &path, const QuadratureOptions &options);

inline QuadratureResult integrate_path(const BranchedIntegrand &f, const PathPolyline &path, double tol = 1e-9)
{
    QuadratureOptions o;
    o.tol = tol;
    return integrate_path(f, path, o);
}

// Integral from infinity (approached along the ray arg z = arg direction)
// to the end of `path`. The path must start at radius * direction, beyond
// every singularity; `f.branch_seed` refers to the root at that point. The
// ray leg uses z = radius * direction / u^2.
QuadratureResult integrate_from_infinity(const BranchedIntegrand &f, complex direction, double radius,
                                         const PathPolyline &path, const QuadratureOptions &options);

// Distance from p to the segment [a, b].
double segment_distance(complex p, complex a, complex b);

} // namespace heunlab
