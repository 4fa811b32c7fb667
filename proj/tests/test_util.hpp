#pragma once

#include <complex>
#include <random>

#include <doctest.h>

#include "heunlab/elliptic.hpp"

namespace testutil
{

using heunlab::complex;
inline const complex I{0.0, 1.0};

inline double rel(complex a, complex b)
{
    return std::abs(a - b) / std::max(1.0, std::abs(b));
}

// Random tau in the SL(2,Z) fundamental domain with Im tau <= ymax.
inline complex random_tau(std::mt19937_64 &rng, double ymax = 2.5)
{
    std::uniform_real_distribution<double> ux(-0.5, 0.5), uy(0.0, ymax);
    for (;;) {
        complex t{ux(rng), uy(rng)};
        if (std::abs(t) >= 1.0)
            return t;
    }
}

// Random point of the centred cell at least `clear` away from lattice points.
inline complex random_point(std::mt19937_64 &rng, const heunlab::Lattice &L, double clear = 0.05)
{
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (;;) {
        complex z = u(rng) * 1.0 + u(rng) * L.tau;
        if (std::abs(z - heunlab::nearest_lattice_point(z, L)) > clear)
            return z;
    }
}

} // namespace testutil
