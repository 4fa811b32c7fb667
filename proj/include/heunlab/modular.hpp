#pragma once

// tau-derivatives of the modular quantities t, e_i, eta_1 and (e2 - e1)^a,
// in closed form and by finite differences of the lattice constants.

#include <string>

#include "heunlab/elliptic.hpp"

namespace heunlab
{

enum class ModularTag { t, e1, e2, e3, eta1, pow_e2_minus_e1 };

const char *to_string(ModularTag tag);
// Accepts the names produced by to_string; throws DomainError otherwise.
ModularTag modular_tag_from_string(const std::string &name);

struct ModularQuantity {
    ModularTag tag;
    complex exponent; // only used by pow_e2_minus_e1
    complex value;
    complex dtau;
};

ModularQuantity modular_derivative(ModularTag tag, const Lattice &L, complex exponent = 0.0);

inline ModularQuantity modular_derivative(ModularTag tag, complex tau, complex exponent = 0.0)
{
    return modular_derivative(tag, lattice_from_tau(tau), exponent);
}

// Value of the tagged quantity at tau (principal branch for the power).
template <typename T>
std::complex<T> modular_value(ModularTag tag, const BasicLattice<T> &L, std::complex<T> exponent);

struct FiniteDifference {
    complex value;   // after one Richardson level
    double error;    // |value - fine|
    complex coarse;  // fourth-order central difference with step h
    complex fine;    // same with step h/2
    double h;
};

// Default step 1e-4 max(1, |tau|). Throws PrecisionError when h is too small
// for the working precision and DomainError when h <= 0.
FiniteDifference finite_difference_oracle(ModularTag tag, complex tau, double h = 0.0, complex exponent = 0.0,
                                          Precision precision = Precision::standard);

} // namespace heunlab
