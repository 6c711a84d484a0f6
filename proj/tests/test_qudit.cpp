#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "msqpc/joint_state.hpp"
#include "msqpc/qudit.hpp"

using namespace msqpc;

namespace {

// Independent oracle for Fourier-basis amplitudes: straight per-component
// evaluation of (1/sqrt(d)) e^{2*pi*i*t*delta/d} via std::polar.
Complex fourier_amp(int d, int t, int delta) {
    return std::polar(1.0 / std::sqrt(double(d)),
                      2.0 * std::numbers::pi * t * delta / d);
}

double abs_diff(Complex a, Complex b) { return std::abs(a - b); }

}  // namespace

TEST_CASE("dimension rejects even and tiny d") {
    CHECK_THROWS_AS(Dimension(4), std::domain_error);
    CHECK_THROWS_AS(Dimension(2), std::domain_error);
    CHECK_THROWS_AS(Dimension(1), std::domain_error);
    CHECK(Dimension(19).h() == 9);
    CHECK(Dimension(3).h() == 1);
}

TEST_CASE("prepare T1 gives standard basis vectors") {
    const auto s = prepare(Dimension(3), Basis::T1, 2);
    CHECK(abs_diff(s.amplitude(0), Complex(0)) < kAlgebraicTol);
    CHECK(abs_diff(s.amplitude(1), Complex(0)) < kAlgebraicTol);
    CHECK(abs_diff(s.amplitude(2), Complex(1)) < kAlgebraicTol);
}

TEST_CASE("prepare T2 matches the Fourier formula") {
    const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
    const auto s0 = prepare(Dimension(3), Basis::T2, 0);
    for (int i = 0; i < 3; ++i) {
        CHECK(abs_diff(s0.amplitude(i), Complex(inv_sqrt3)) < kAlgebraicTol);
    }
    const auto s1 = prepare(Dimension(3), Basis::T2, 1);
    for (int delta = 0; delta < 3; ++delta) {
        CHECK(abs_diff(s1.amplitude(delta), fourier_amp(3, 1, delta)) < kAlgebraicTol);
    }
}

TEST_CASE("prepare rejects out-of-range index") {
    CHECK_THROWS_AS(prepare(Dimension(3), Basis::T1, 3), std::domain_error);
    CHECK_THROWS_AS(prepare(Dimension(3), Basis::T2, -1), std::domain_error);
}

TEST_CASE("outcome probabilities") {
    const Dimension d3(3);
    CHECK(outcome_probability(prepare(d3, Basis::T1, 0), Basis::T1, 0) ==
          Catch::Approx(1.0).margin(1e-12));
    CHECK(outcome_probability(prepare(d3, Basis::T2, 0), Basis::T1, 1) ==
          Catch::Approx(1.0 / 3.0).margin(1e-12));
    // |<J_7|2>|^2 = 1/d via the inverse-transform expansion.
    CHECK(outcome_probability(prepare(Dimension(19), Basis::T1, 2), Basis::T2, 7) ==
          Catch::Approx(1.0 / 19.0).margin(1e-12));
}

TEST_CASE("probabilities sum to one") {
    for (int d : {3, 5, 7}) {
        for (Basis prep_basis : {Basis::T1, Basis::T2}) {
            for (Basis meas : {Basis::T1, Basis::T2}) {
                for (int t = 0; t < d; ++t) {
                    const auto s = prepare(Dimension(d), prep_basis, t);
                    double sum = 0.0;
                    for (int k = 0; k < d; ++k) sum += outcome_probability(s, meas, k);
                    CHECK(sum == Catch::Approx(1.0).margin(1e-10));
                }
            }
        }
    }
}

TEST_CASE("measurement of eigenstates is deterministic") {
    RandomSource rng(42);
    for (int rep = 0; rep < 50; ++rep) {
        const auto out = measure(prepare(Dimension(5), Basis::T1, 3), Basis::T1, rng);
        CHECK(out.value == 3);
        CHECK(states_equal(out.post_state, prepare(Dimension(5), Basis::T1, 3), 1e-10));
    }
    for (int rep = 0; rep < 50; ++rep) {
        const auto out = measure(prepare(Dimension(3), Basis::T2, 2), Basis::T2, rng);
        CHECK(out.value == 2);
    }
}

TEST_CASE("repeatability: same basis twice gives the same value") {
    RandomSource rng(7);
    for (int d : {3, 5, 7}) {
        for (int t = 0; t < d; ++t) {
            auto first = measure(prepare(Dimension(d), Basis::T2, t), Basis::T1, rng);
            auto second = measure(first.post_state, Basis::T1, rng);
            CHECK(second.value == first.value);
            CHECK(states_equal(second.post_state, first.post_state, 1e-10));
        }
    }
}

TEST_CASE("conjugate bases are mutually unbiased") {
    for (int d : {3, 5, 7, 19}) {
        for (int t = 0; t < d; ++t) {
            for (int delta = 0; delta < d; ++delta) {
                CHECK(outcome_probability(prepare(Dimension(d), Basis::T2, t), Basis::T1,
                                          delta) == Catch::Approx(1.0 / d).margin(1e-10));
                CHECK(outcome_probability(prepare(Dimension(d), Basis::T1, t), Basis::T2,
                                          delta) == Catch::Approx(1.0 / d).margin(1e-10));
            }
        }
    }
}

TEST_CASE("inverse Fourier expansion") {
    const auto c0 = inverse_fourier_expand(Dimension(3), 0);
    for (const auto& c : c0) {
        CHECK(abs_diff(c, Complex(1.0 / std::sqrt(3.0))) < kAlgebraicTol);
    }
    const auto c1 = inverse_fourier_expand(Dimension(3), 1);
    for (int alpha = 0; alpha < 3; ++alpha) {
        CHECK(abs_diff(c1[std::size_t(alpha)], std::conj(fourier_amp(3, 1, alpha))) <
              kAlgebraicTol);
    }
    CHECK_THROWS_AS(inverse_fourier_expand(Dimension(3), 3), std::domain_error);
}

TEST_CASE("Fourier round trip reproduces T1 basis vectors") {
    for (int d : {3, 5, 7, 19}) {
        for (int delta = 0; delta < d; ++delta) {
            const auto coeffs = inverse_fourier_expand(Dimension(d), delta);
            std::vector<Complex> recombined(std::size_t(d), Complex(0.0));
            for (int alpha = 0; alpha < d; ++alpha) {
                const auto basis_vec = prepare(Dimension(d), Basis::T2, alpha);
                for (int i = 0; i < d; ++i) {
                    recombined[std::size_t(i)] +=
                        coeffs[std::size_t(alpha)] * basis_vec.amplitude(i);
                }
            }
            const auto expected = prepare(Dimension(d), Basis::T1, delta);
            for (int i = 0; i < d; ++i) {
                CHECK(abs_diff(recombined[std::size_t(i)], expected.amplitude(i)) < 1e-10);
            }
        }
    }
}

TEST_CASE("states_equal compares up to global phase") {
    const Dimension d3(3);
    const auto one = prepare(d3, Basis::T1, 1);
    CHECK(states_equal(one, one, 1e-10));
    CHECK_FALSE(states_equal(one, prepare(d3, Basis::T1, 2), 1e-10));
    std::vector<Complex> phased{Complex(0.0), std::polar(1.0, std::numbers::pi / 7),
                                Complex(0.0)};
    CHECK(states_equal(one, QuditState(phased), 1e-10));
}

TEST_CASE("sampling consistency against exact probabilities") {
    RandomSource rng(20240817);
    const long samples = 100000;
    for (int d : {3, 5, 7}) {
        for (Basis prep_basis : {Basis::T1, Basis::T2}) {
            const int t = d / 2;
            const Basis meas = prep_basis == Basis::T1 ? Basis::T2 : Basis::T1;
            const auto s = prepare(Dimension(d), prep_basis, t);
            std::vector<long> counts(std::size_t(d), 0);
            for (long i = 0; i < samples; ++i) {
                ++counts[std::size_t(measure(s, meas, rng).value)];
            }
            for (int k = 0; k < d; ++k) {
                const double p = outcome_probability(s, meas, k);
                const double se = std::sqrt(p * (1.0 - p) / double(samples));
                CHECK(std::abs(double(counts[std::size_t(k)]) / double(samples) - p) <=
                      3.0 * se + 1e-12);
            }
        }
    }
}

TEST_CASE("normalization holds across random operation chains") {
    RandomSource rng(99);
    for (int i = 0; i < 20000; ++i) {
        const int d = std::vector<int>{3, 5, 7}[std::size_t(rng.uniform_index(3))];
        const Basis basis = rng.bernoulli(0.5) ? Basis::T1 : Basis::T2;
        const int t = int(rng.uniform_index(std::uint64_t(d)));
        auto s = prepare(Dimension(d), basis, t);
        const Basis meas = rng.bernoulli(0.5) ? Basis::T1 : Basis::T2;
        auto out = measure(s, meas, rng);
        double n = 0.0;
        for (const auto& a : out.post_state.amplitudes()) n += std::norm(a);
        REQUIRE(std::abs(n - 1.0) < 1e-10);
    }
}

TEST_CASE("joint state reduces to qudit behavior without a probe") {
    const Dimension d5(5);
    JointState js(prepare(d5, Basis::T2, 1));
    for (int k = 0; k < 5; ++k) {
        CHECK(js.system_outcome_probability(Basis::T1, k) ==
              Catch::Approx(0.2).margin(1e-10));
    }
    RandomSource rng(5);
    auto [value, collapsed] = js.measure_system(Basis::T1, rng);
    CHECK(collapsed.system_outcome_probability(Basis::T1, value) ==
          Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("joint state: probe attachment, unitarity and collapse") {
    const Dimension d3(3);
    JointState js(prepare(d3, Basis::T2, 1));
    std::vector<Complex> probe{Complex(1.0), Complex(0.0), Complex(0.0)};
    auto with = js.with_probe(probe);
    CHECK(with.probe_dim() == 3);
    CHECK(std::abs(with.norm_squared() - 1.0) < 1e-10);

    // controlled shift |t>|e> -> |t>|e + t>
    const int joint = 9;
    std::vector<Complex> entries(81, Complex(0.0));
    for (int s = 0; s < 3; ++s) {
        for (int j = 0; j < 3; ++j) {
            entries[std::size_t((s * 3 + (j + s) % 3) * joint + s * 3 + j)] = Complex(1.0);
        }
    }
    const UnitaryMatrix cshift(joint, entries);
    auto entangled = with.transformed(cshift);
    CHECK(std::abs(entangled.norm_squared() - 1.0) < 1e-10);
    // After the shift the probe reveals the system value.
    for (int k = 0; k < 3; ++k) {
        const auto cond = entangled.conditional_probe(Basis::T1, k);
        CHECK(std::abs(std::abs(cond[std::size_t(k)]) - 1.0) < 1e-10);
    }
    // T1 probabilities of the system are unchanged by a controlled unitary.
    for (int k = 0; k < 3; ++k) {
        CHECK(entangled.system_outcome_probability(Basis::T1, k) ==
              Catch::Approx(1.0 / 3.0).margin(1e-10));
    }
}

TEST_CASE("non-unitary matrices are rejected") {
    std::vector<Complex> bad(9, Complex(0.5));
    CHECK_THROWS_AS(UnitaryMatrix(3, bad), std::domain_error);
}
