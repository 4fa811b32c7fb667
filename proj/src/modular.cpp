#include "heunlab/modular.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

namespace heunlab
{

const char *to_string(ModularTag tag)
{
    switch (tag) {
    case ModularTag::t:
        return "t";
    case ModularTag::e1:
        return "e1";
    case ModularTag::e2:
        return "e2";
    case ModularTag::e3:
        return "e3";
    case ModularTag::eta1:
        return "eta1";
    case ModularTag::pow_e2_minus_e1:
        return "pow_e2_minus_e1";
    }
    return "?";
}

ModularTag modular_tag_from_string(const std::string &name)
{
    for (auto tag : {ModularTag::t, ModularTag::e1, ModularTag::e2, ModularTag::e3, ModularTag::eta1,
                     ModularTag::pow_e2_minus_e1})
        if (name == to_string(tag))
            return tag;
    throw DomainError(fmt::format("unknown modular quantity '{}'", name));
}

template <typename T>
std::complex<T> modular_value(ModularTag tag, const BasicLattice<T> &L, std::complex<T> exponent)
{
    switch (tag) {
    case ModularTag::t:
        return L.t;
    case ModularTag::e1:
        return L.e1;
    case ModularTag::e2:
        return L.e2;
    case ModularTag::e3:
        return L.e3;
    case ModularTag::eta1:
        return L.eta1;
    case ModularTag::pow_e2_minus_e1:
        if (exponent == std::complex<T>(0))
            return 1;
        return std::pow(L.e2 - L.e1, exponent);
    }
    return 0;
}

template std::complex<double> modular_value(ModularTag, const Lattice &, std::complex<double>);
template std::complex<long double> modular_value(ModularTag, const LatticeExt &, std::complex<long double>);

ModularQuantity modular_derivative(ModularTag tag, const Lattice &L, complex exponent)
{
    const complex pi_i(0.0, std::numbers::pi);
    ModularQuantity out{tag, exponent, modular_value(tag, L, exponent), 0.0};
    auto de = [&](complex e) { return (-2.0 * L.eta1 * e + e * e - L.g2 / 6.0) / pi_i; };
    switch (tag) {
    case ModularTag::t:
        out.dtau = (L.e2 - L.e1) * L.t * (L.t - 1.0) / pi_i;
        break;
    case ModularTag::e1:
        out.dtau = de(L.e1);
        break;
    case ModularTag::e2:
        out.dtau = de(L.e2);
        break;
    case ModularTag::e3:
        out.dtau = de(L.e3);
        break;
    case ModularTag::eta1:
        out.dtau = (-L.eta1 * L.eta1 + L.g2 / 48.0) / pi_i;
        break;
    case ModularTag::pow_e2_minus_e1:
        out.dtau = -exponent * (2.0 * L.eta1 + L.e3) * out.value / pi_i;
        break;
    }
    return out;
}

namespace
{

template <typename T>
FiniteDifference central_differences(ModularTag tag, complex tau, double h, complex exponent)
{
    using C = std::complex<T>;
    const C tau_t(tau.real(), tau.imag()), a(exponent.real(), exponent.imag());
    const auto L0 = lattice_from_tau<T>(tau_t);
    const C log0 = std::log(L0.e2 - L0.e1);
    auto f = [&](T shift) {
        auto L = lattice_from_tau<T>(tau_t + C(shift));
        if (tag != ModularTag::pow_e2_minus_e1 || a == C(0))
            return modular_value(tag, L, a);
        // principal branch at tau, continued to the shifted points
        C lg = std::log(L.e2 - L.e1);
        const T two_pi = 2 * std::numbers::pi_v<T>;
        lg += C(0, two_pi * std::round((log0.imag() - lg.imag()) / two_pi));
        return std::exp(a * lg);
    };
    auto d4 = [&](T step) { return (-f(2 * step) + T(8) * f(step) - T(8) * f(-step) + f(-2 * step)) / (T(12) * step); };
    const C coarse = d4(T(h)), fine = d4(T(h) / 2);
    const C rich = (T(16) * fine - coarse) / T(15);
    FiniteDifference out;
    out.value = complex(double(rich.real()), double(rich.imag()));
    out.coarse = complex(double(coarse.real()), double(coarse.imag()));
    out.fine = complex(double(fine.real()), double(fine.imag()));
    out.error = double(std::abs(rich - fine));
    out.h = h;
    return out;
}

} // namespace

FiniteDifference finite_difference_oracle(ModularTag tag, complex tau, double h, complex exponent,
                                          Precision precision)
{
    if (!(tau.imag() > 0.0))
        throw DomainError("finite_difference_oracle: tau must lie in the upper half plane");
    const double scale = std::max(1.0, std::abs(tau));
    if (h == 0.0)
        h = 1e-4 * scale;
    if (!(h > 0.0))
        throw DomainError("finite_difference_oracle: step must be positive");
    const double eps = precision == Precision::extended ? double(std::numeric_limits<long double>::epsilon())
                                                        : std::numeric_limits<double>::epsilon();
    // below this the rounding error of the difference quotient exceeds ~1e-4 relative
    if (h < 1e4 * eps * scale)
        throw PrecisionError(fmt::format("finite_difference_oracle: step {:.3g} underflows the working precision", h));
    if (precision == Precision::extended)
        return central_differences<long double>(tag, tau, h, exponent);
    return central_differences<double>(tag, tau, h, exponent);
}

} // namespace heunlab
