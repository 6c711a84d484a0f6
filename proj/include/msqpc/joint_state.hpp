#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "msqpc/qudit.hpp"
#include "msqpc/random.hpp"

namespace msqpc {

// Dense complex matrix, row-major. Only used for Eve's probe unitaries,
// which live on the small d * probe_dim joint space.
class UnitaryMatrix {
public:
    UnitaryMatrix(int dim, std::vector<Complex> entries)
        : dim_(dim), entries_(std::move(entries)) {
        if (entries_.size() != std::size_t(dim_) * std::size_t(dim_)) {
            throw std::domain_error("matrix entry count does not match dimension");
        }
        check_unitary();
    }

    static UnitaryMatrix identity(int dim) {
        std::vector<Complex> e(std::size_t(dim) * std::size_t(dim), Complex(0.0));
        for (int i = 0; i < dim; ++i) e[std::size_t(i) * dim + i] = Complex(1.0);
        return UnitaryMatrix(dim, std::move(e));
    }

    int dim() const { return dim_; }
    Complex at(int row, int col) const {
        return entries_[std::size_t(row) * dim_ + std::size_t(col)];
    }

    std::vector<Complex> apply(const std::vector<Complex>& v) const {
        if (v.size() != std::size_t(dim_)) {
            throw std::domain_error("vector length does not match matrix dimension");
        }
        std::vector<Complex> out(std::size_t(dim_), Complex(0.0));
        for (int r = 0; r < dim_; ++r) {
            Complex acc(0.0);
            for (int c = 0; c < dim_; ++c) acc += at(r, c) * v[std::size_t(c)];
            out[std::size_t(r)] = acc;
        }
        return out;
    }

private:
    void check_unitary() const {
        for (int r = 0; r < dim_; ++r) {
            for (int c = 0; c < dim_; ++c) {
                Complex dot(0.0);
                for (int k = 0; k < dim_; ++k) {
                    dot += std::conj(at(k, r)) * at(k, c);
                }
                const Complex expect = r == c ? Complex(1.0) : Complex(0.0);
                if (std::abs(dot - expect) > kAlgebraicTol) {
                    throw std::domain_error("matrix is not unitary");
                }
            }
        }
    }

    int dim_;
    std::vector<Complex> entries_;
};

// Pure state of a transit particle together with an attached ancilla
// (Eve's probe). probe_dim == 1 means no probe: the state is an ordinary
// qudit. Amplitudes are system-major: amp[s * probe_dim + j].
class JointState {
public:
    explicit JointState(const QuditState& system)
        : sys_dim_(system.dim()), probe_dim_(1), amps_(system.amplitudes()) {}

    JointState(int sys_dim, int probe_dim, std::vector<Complex> amps)
        : sys_dim_(sys_dim), probe_dim_(probe_dim), amps_(std::move(amps)) {
        if (amps_.size() != std::size_t(sys_dim_) * std::size_t(probe_dim_)) {
            throw std::domain_error("joint amplitude count mismatch");
        }
        if (std::abs(norm_squared() - 1.0) > kAlgebraicTol) {
            throw std::domain_error("joint state is not unit-norm");
        }
    }

    int sys_dim() const { return sys_dim_; }
    int probe_dim() const { return probe_dim_; }
    const std::vector<Complex>& amplitudes() const { return amps_; }
    Complex amplitude(int s, int j) const {
        return amps_[std::size_t(s) * probe_dim_ + std::size_t(j)];
    }

    double norm_squared() const {
        double n = 0.0;
        for (const auto& a : amps_) n += std::norm(a);
        return n;
    }

    bool has_probe() const { return probe_dim_ > 1; }

    // Tensor a fresh probe register onto a probe-free state.
    JointState with_probe(const std::vector<Complex>& probe) const {
        if (probe_dim_ != 1) throw std::domain_error("probe already attached");
        std::vector<Complex> out(amps_.size() * probe.size());
        for (int s = 0; s < sys_dim_; ++s) {
            for (std::size_t j = 0; j < probe.size(); ++j) {
                out[std::size_t(s) * probe.size() + j] = amps_[std::size_t(s)] * probe[j];
            }
        }
        return JointState(sys_dim_, int(probe.size()), std::move(out));
    }

    JointState transformed(const UnitaryMatrix& u) const {
        if (u.dim() != sys_dim_ * probe_dim_) {
            throw std::domain_error("unitary dimension does not match joint space");
        }
        return JointState(sys_dim_, probe_dim_, u.apply(amps_));
    }

    // Probability that a measurement of the system part in `basis` reads k.
    double system_outcome_probability(Basis basis, int k) const {
        double p = 0.0;
        for (int j = 0; j < probe_dim_; ++j) {
            Complex overlap(0.0);
            for (int s = 0; s < sys_dim_; ++s) {
                overlap += std::conj(detail::basis_amplitude(sys_dim_, basis, k, s)) *
                           amplitude(s, j);
            }
            p += std::norm(overlap);
        }
        return p;
    }

    // Probe state conditioned on the system reading k in `basis`
    // (normalized; throws when the branch has zero weight).
    std::vector<Complex> conditional_probe(Basis basis, int k) const {
        std::vector<Complex> probe(std::size_t(probe_dim_), Complex(0.0));
        for (int j = 0; j < probe_dim_; ++j) {
            for (int s = 0; s < sys_dim_; ++s) {
                probe[std::size_t(j)] +=
                    std::conj(detail::basis_amplitude(sys_dim_, basis, k, s)) *
                    amplitude(s, j);
            }
        }
        double n = 0.0;
        for (const auto& a : probe) n += std::norm(a);
        if (n <= 0.0) throw std::domain_error("conditional probe on zero-weight branch");
        const double scale = 1.0 / std::sqrt(n);
        for (auto& a : probe) a *= scale;
        return probe;
    }

    // Collapse after the system read k in `basis`: exact basis vector on the
    // system tensored with the normalized conditional probe.
    JointState collapsed(Basis basis, int k) const {
        const auto probe = conditional_probe(basis, k);
        std::vector<Complex> out(std::size_t(sys_dim_) * std::size_t(probe_dim_),
                                 Complex(0.0));
        for (int s = 0; s < sys_dim_; ++s) {
            const Complex bs = detail::basis_amplitude(sys_dim_, basis, k, s);
            if (bs == Complex(0.0)) continue;
            for (int j = 0; j < probe_dim_; ++j) {
                out[std::size_t(s) * probe_dim_ + std::size_t(j)] = bs * probe[std::size_t(j)];
            }
        }
        return JointState(sys_dim_, probe_dim_, std::move(out));
    }

    // Born-rule measurement of the system part with collapse.
    std::pair<int, JointState> measure_system(Basis basis, RandomSource& rng) const {
        const double r = rng.uniform_real();
        double cumulative = 0.0;
        int value = -1;
        int last_nonzero = 0;
        for (int k = 0; k < sys_dim_; ++k) {
            const double p = system_outcome_probability(basis, k);
            if (p > 1e-15) last_nonzero = k;
            cumulative += p;
            if (r < cumulative) {
                value = k;
                break;
            }
        }
        if (value < 0) value = last_nonzero;  // guards against rounding shortfall
        return {value, collapsed(basis, value)};
    }

private:
    int sys_dim_;
    int probe_dim_;
    std::vector<Complex> amps_;
};

// Fidelity |<a|b>|^2 between two probe vectors of equal length.
inline double probe_fidelity(const std::vector<Complex>& a,
                             const std::vector<Complex>& b) {
    if (a.size() != b.size()) throw std::domain_error("probe dimension mismatch");
    Complex overlap(0.0);
    for (std::size_t i = 0; i < a.size(); ++i) overlap += std::conj(a[i]) * b[i];
    return std::norm(overlap);
}

}  // namespace msqpc
