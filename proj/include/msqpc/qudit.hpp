#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "msqpc/random.hpp"

namespace msqpc {

using Complex = std::complex<double>;

// Tolerance for algebraic identities (normalization, unitarity, fidelity).
inline constexpr double kAlgebraicTol = 1e-10;

// System dimension d. The comparison pipeline needs h = (d-1)/2 to be an
// integer with 2h = d-1, so only odd d >= 3 is accepted.
class Dimension {
public:
    explicit Dimension(int d) : d_(d) {
        if (d < 3 || d % 2 == 0) {
            throw std::domain_error(
                "dimension must be odd and >= 3 (h = (d-1)/2 must be an integer)");
        }
    }

    int value() const { return d_; }
    int h() const { return (d_ - 1) / 2; }

    friend bool operator==(Dimension a, Dimension b) { return a.d_ == b.d_; }
    friend bool operator!=(Dimension a, Dimension b) { return a.d_ != b.d_; }

private:
    int d_;
};

// The two conjugate measurement bases: T1 is computational (Z), T2 is the
// Fourier-transformed (X) basis.
enum class Basis { T1, T2 };

// Pure state of a single d-level system.
class QuditState {
public:
    explicit QuditState(std::vector<Complex> amplitudes)
        : amps_(std::move(amplitudes)) {
        if (amps_.size() < 3) throw std::domain_error("qudit state needs d >= 3");
        double norm2 = 0.0;
        for (const auto& a : amps_) norm2 += std::norm(a);
        if (std::abs(norm2 - 1.0) > kAlgebraicTol) {
            throw std::domain_error("qudit state is not unit-norm");
        }
    }

    int dim() const { return int(amps_.size()); }
    const std::vector<Complex>& amplitudes() const { return amps_; }
    Complex amplitude(int i) const { return amps_[std::size_t(i)]; }

private:
    std::vector<Complex> amps_;
};

struct MeasurementOutcome {
    int value;
    QuditState post_state;
};

namespace detail {

inline Complex unit_phase(double turns_num, double turns_den) {
    const double angle = 2.0 * std::numbers::pi * turns_num / turns_den;
    return Complex(std::cos(angle), std::sin(angle));
}

// Amplitude of basis vector |basis_k> in T1 coordinates at position delta.
inline Complex basis_amplitude(int d, Basis basis, int k, int delta) {
    if (basis == Basis::T1) return delta == k ? Complex(1.0) : Complex(0.0);
    return unit_phase(double(k) * double(delta), double(d)) / std::sqrt(double(d));
}

}  // namespace detail

// Basis vector `index` of the given basis, as a T1-coordinate state.
// For T2 this is F|index> = (1/sqrt(d)) sum_delta e^{2*pi*i*index*delta/d} |delta>.
inline QuditState prepare(Dimension d, Basis basis, int index) {
    if (index < 0 || index >= d.value()) {
        throw std::domain_error("preparation index out of range");
    }
    std::vector<Complex> amps(std::size_t(d.value()));
    for (int delta = 0; delta < d.value(); ++delta) {
        amps[std::size_t(delta)] = detail::basis_amplitude(d.value(), basis, index, delta);
    }
    return QuditState(std::move(amps));
}

// |<basis_value|state>|^2.
inline double outcome_probability(const QuditState& state, Basis basis, int value) {
    const int d = state.dim();
    if (value < 0 || value >= d) throw std::domain_error("outcome value out of range");
    Complex overlap(0.0);
    for (int delta = 0; delta < d; ++delta) {
        overlap += std::conj(detail::basis_amplitude(d, basis, value, delta)) *
                   state.amplitude(delta);
    }
    return std::norm(overlap);
}

// Born-rule measurement with collapse. The post-state is the exact basis
// vector of the measured basis, so repeated circuits accumulate no drift.
inline MeasurementOutcome measure(const QuditState& state, Basis basis,
                                  RandomSource& rng) {
    const int d = state.dim();
    const double r = rng.uniform_real();
    double cumulative = 0.0;
    int value = -1;
    int last_nonzero = 0;
    for (int k = 0; k < d; ++k) {
        const double p = outcome_probability(state, basis, k);
        if (p > 1e-15) last_nonzero = k;
        cumulative += p;
        if (r < cumulative) {
            value = k;
            break;
        }
    }
    if (value < 0) value = last_nonzero;  // guards against rounding shortfall
    return MeasurementOutcome{value, prepare(Dimension(d), basis, value)};
}

// Coefficients c_alpha with |delta> = sum_alpha c_alpha |J_alpha>, i.e. the
// inverse Fourier expansion c_alpha = (1/sqrt(d)) e^{-2*pi*i*alpha*delta/d}.
inline std::vector<Complex> inverse_fourier_expand(Dimension d, int delta) {
    if (delta < 0 || delta >= d.value()) {
        throw std::domain_error("delta out of range");
    }
    std::vector<Complex> coeffs(std::size_t(d.value()));
    for (int alpha = 0; alpha < d.value(); ++alpha) {
        coeffs[std::size_t(alpha)] =
            detail::unit_phase(-double(alpha) * double(delta), double(d.value())) /
            std::sqrt(double(d.value()));
    }
    return coeffs;
}

// Equality up to global phase: fidelity |<a|b>|^2 >= 1 - tol.
inline bool states_equal(const QuditState& a, const QuditState& b, double tol) {
    if (a.dim() != b.dim()) throw std::domain_error("dimension mismatch");
    Complex overlap(0.0);
    for (int i = 0; i < a.dim(); ++i) {
        overlap += std::conj(a.amplitude(i)) * b.amplitude(i);
    }
    return std::norm(overlap) >= 1.0 - tol;
}

}  // namespace msqpc
