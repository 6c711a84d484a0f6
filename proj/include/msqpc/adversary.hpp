#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "msqpc/joint_state.hpp"
#include "msqpc/protocol.hpp"
#include "msqpc/qudit.hpp"
#include "msqpc/random.hpp"

namespace msqpc {

enum class AttackKind {
    NoAttack,
    InterceptResendV1,  // fake to P_n on S_n, swap back on S'_n
    InterceptResendV2,  // fake to P_n on S_n, swap back on S''_n
    InterceptResendV3,  // fake to TP2 on S'_n, swap back on S''_n
    MeasureResend,      // T1 measurement on one chosen segment
    EntangleMeasureProbe,
};

inline const char* to_string(AttackKind k) {
    switch (k) {
        case AttackKind::NoAttack: return "none";
        case AttackKind::InterceptResendV1: return "ir-v1";
        case AttackKind::InterceptResendV2: return "ir-v2";
        case AttackKind::InterceptResendV3: return "ir-v3";
        case AttackKind::MeasureResend: return "mr";
        case AttackKind::EntangleMeasureProbe: return "probe";
    }
    return "unknown";
}

inline const char* to_string(ChannelSegment s) {
    switch (s) {
        case ChannelSegment::TP1toPn: return "tp1-pn";
        case ChannelSegment::PnToTP2: return "pn-tp2";
        case ChannelSegment::TP2toTP1: return "tp2-tp1";
    }
    return "unknown";
}

// Where Eve's two unitaries act. Fig2 is the analyzed placement; the other
// two reuse the same machinery with segments remapped.
enum class ProbePlacement {
    Fig2,               // U_E on S_n, U_F on S'_n
    EOnS1FOnS3,         // U_E on S_n, U_F on S''_n
    EOnS2FOnS3,         // U_E on S'_n, U_F on S''_n
};

struct ProbeAttack {
    int probe_dimension = 2;
    UnitaryMatrix u_e;
    UnitaryMatrix u_f;
    std::vector<Complex> initial_probe;
    ProbePlacement placement = ProbePlacement::Fig2;

    ProbeAttack(int probe_dim, UnitaryMatrix ue, UnitaryMatrix uf,
                std::vector<Complex> probe,
                ProbePlacement place = ProbePlacement::Fig2)
        : probe_dimension(probe_dim), u_e(std::move(ue)), u_f(std::move(uf)),
          initial_probe(std::move(probe)), placement(place) {
        if (probe_dimension < 2) throw std::domain_error("probe dimension must be >= 2");
        if (int(initial_probe.size()) != probe_dimension) {
            throw std::domain_error("initial probe length mismatch");
        }
        double n = 0.0;
        for (const auto& a : initial_probe) n += std::norm(a);
        if (std::abs(n - 1.0) > kAlgebraicTol) {
            throw std::domain_error("initial probe is not unit-norm");
        }
    }

    ChannelSegment u_e_segment() const {
        return placement == ProbePlacement::EOnS2FOnS3 ? ChannelSegment::PnToTP2
                                                       : ChannelSegment::TP1toPn;
    }
    ChannelSegment u_f_segment() const {
        return placement == ProbePlacement::Fig2 ? ChannelSegment::PnToTP2
                                                 : ChannelSegment::TP2toTP1;
    }
};

struct AttackStrategy {
    AttackKind kind = AttackKind::NoAttack;
    ChannelSegment mr_segment = ChannelSegment::TP1toPn;  // MeasureResend only
    std::optional<ProbeAttack> probe;                     // EntangleMeasureProbe only
    // Empty set means every position is attacked.
    std::set<int> target_positions;

    bool targets(int position) const {
        return target_positions.empty() || target_positions.count(position) > 0;
    }
    bool active() const { return kind != AttackKind::NoAttack; }
};

// Identity probe: Eve attaches an ancilla but never couples it.
inline ProbeAttack identity_probe(Dimension d) {
    const int joint = d.value() * d.value();
    std::vector<Complex> probe(std::size_t(d.value()), Complex(0.0));
    probe[0] = Complex(1.0);
    return ProbeAttack(d.value(), UnitaryMatrix::identity(joint),
                       UnitaryMatrix::identity(joint), std::move(probe));
}

// Controlled shift: U_E |t>|e> = |t>|e + t mod d>, U_F = identity.
inline ProbeAttack controlled_shift_probe(Dimension d) {
    const int dv = d.value();
    const int joint = dv * dv;
    std::vector<Complex> entries(std::size_t(joint) * std::size_t(joint), Complex(0.0));
    for (int s = 0; s < dv; ++s) {
        for (int j = 0; j < dv; ++j) {
            const int row = s * dv + (j + s) % dv;
            const int col = s * dv + j;
            entries[std::size_t(row) * joint + std::size_t(col)] = Complex(1.0);
        }
    }
    std::vector<Complex> probe(std::size_t(dv), Complex(0.0));
    probe[0] = Complex(1.0);
    return ProbeAttack(dv, UnitaryMatrix(joint, std::move(entries)),
                       UnitaryMatrix::identity(joint), std::move(probe));
}

// Family interpolating identity (theta = 0) to the controlled shift's
// action on the |0> probe (theta = pi/2): for system value s != 0 the probe
// is rotated by theta in the span of |0> and |s>.
inline ProbeAttack interpolated_probe(Dimension d, double theta) {
    const int dv = d.value();
    const int joint = dv * dv;
    const double c = std::cos(theta), s = std::sin(theta);
    std::vector<Complex> entries(std::size_t(joint) * std::size_t(joint), Complex(0.0));
    auto set = [&](int row, int col, double v) {
        entries[std::size_t(row) * joint + std::size_t(col)] = Complex(v);
    };
    for (int sys = 0; sys < dv; ++sys) {
        for (int j = 0; j < dv; ++j) {
            const int col = sys * dv + j;
            if (sys == 0 || (j != 0 && j != sys)) {
                set(col, col, 1.0);
            } else if (j == 0) {
                set(sys * dv + 0, col, c);
                set(sys * dv + sys, col, s);
            } else {  // j == sys
                set(sys * dv + 0, col, -s);
                set(sys * dv + sys, col, c);
            }
        }
    }
    std::vector<Complex> probe(std::size_t(dv), Complex(0.0));
    probe[0] = Complex(1.0);
    return ProbeAttack(dv, UnitaryMatrix(joint, std::move(entries)),
                       UnitaryMatrix::identity(joint), std::move(probe));
}

// Channel that splices Eve's strategy into the transit hooks. One instance
// serves one protocol run; intercepted particles are held per position and
// dropped between retry attempts.
class AttackChannel : public Channel {
public:
    explicit AttackChannel(AttackStrategy strategy)
        : strategy_(std::move(strategy)) {}

    void begin_attempt(int /*user*/, int /*attempt*/) override { memory_.clear(); }

    JointState transit(ChannelSegment segment, int /*user*/, int position,
                       JointState state, RandomSource& rng) override {
        if (!strategy_.active() || !strategy_.targets(position)) return state;
        switch (strategy_.kind) {
            case AttackKind::InterceptResendV1:
                return intercept_resend(segment, ChannelSegment::TP1toPn,
                                        ChannelSegment::PnToTP2, position,
                                        std::move(state), rng);
            case AttackKind::InterceptResendV2:
                return intercept_resend(segment, ChannelSegment::TP1toPn,
                                        ChannelSegment::TP2toTP1, position,
                                        std::move(state), rng);
            case AttackKind::InterceptResendV3:
                return intercept_resend(segment, ChannelSegment::PnToTP2,
                                        ChannelSegment::TP2toTP1, position,
                                        std::move(state), rng);
            case AttackKind::MeasureResend:
                if (segment == strategy_.mr_segment) {
                    return state.measure_system(Basis::T1, rng).second;
                }
                return state;
            case AttackKind::EntangleMeasureProbe: {
                const auto& probe = *strategy_.probe;
                if (segment == probe.u_e_segment()) {
                    state = state.with_probe(probe.initial_probe).transformed(probe.u_e);
                }
                if (segment == probe.u_f_segment()) {
                    state = state.transformed(probe.u_f);
                }
                return state;
            }
            case AttackKind::NoAttack:
                return state;
        }
        return state;
    }

private:
    JointState intercept_resend(ChannelSegment segment, ChannelSegment grab,
                                ChannelSegment swap_back, int position,
                                JointState state, RandomSource& rng) {
        if (segment == grab) {
            const int d = state.sys_dim();
            const int fake = int(rng.uniform_index(std::uint64_t(d)));
            memory_.emplace(position, std::move(state));
            return JointState(prepare(Dimension(d), Basis::T1, fake));
        }
        if (segment == swap_back) {
            auto it = memory_.find(position);
            if (it == memory_.end()) {
                throw std::logic_error("swap-back with empty intercept memory");
            }
            JointState genuine = std::move(it->second);
            memory_.erase(it);
            return genuine;  // the processed fake is discarded
        }
        return state;
    }

    AttackStrategy strategy_;
    std::map<int, JointState> memory_;
};

struct Scenario {
    Basis prep_basis;
    Mode r;
    Mode v;
};

struct ClosedForm {
    double rate;  // per-attacked-particle detection probability
    int step;     // 4 or 5 (Step-5 figures carry the 1/2 check-set sampling factor)
};

// The closed-form detection table assembled from the intercept-resend and
// measure-resend case analysis. Scenarios the analysis does not cover
// return nullopt; probe attacks are handled by the exact evaluator.
inline std::optional<ClosedForm> closed_form_detection(const AttackStrategy& strategy,
                                                       Dimension dim,
                                                       Scenario sc) {
    const double d = double(dim.value());
    const double step4_full = (d - 1.0) / d;
    const double step5_half = (d - 1.0) / (2.0 * d);
    const CaseId case_id = classify_case(sc.prep_basis, sc.r, sc.v);
    if (strategy.kind == AttackKind::NoAttack) return ClosedForm{0.0, 4};
    if (case_ignored(case_id)) return ClosedForm{0.0, 4};

    const bool rm = sc.r == Mode::Measure;
    const bool vm = sc.v == Mode::Measure;
    switch (strategy.kind) {
        case AttackKind::InterceptResendV1:
            if (sc.prep_basis == Basis::T2) return ClosedForm{0.0, 4};  // Case 2
            if (rm && !vm) return ClosedForm{step4_full, 4};
            if (rm && vm) return ClosedForm{step5_half, 5};
            return ClosedForm{0.0, 4};  // P_n reflected: undetectable
        case AttackKind::InterceptResendV2:
            if (sc.prep_basis == Basis::T2) return ClosedForm{0.0, 4};
            if (!rm && vm) return ClosedForm{step4_full, 4};
            if (rm && vm) return ClosedForm{step5_half, 5};
            if (rm && !vm) return ClosedForm{step4_full, 4};
            return ClosedForm{0.0, 4};
        case AttackKind::InterceptResendV3:
            if (sc.prep_basis == Basis::T2) return ClosedForm{0.0, 4};
            if (rm && vm) return ClosedForm{step5_half, 5};
            if (!rm && vm) return ClosedForm{step4_full, 4};
            return ClosedForm{0.0, 4};  // (M,R) and (R,R): swap-back hides Eve
        case AttackKind::MeasureResend:
            if (sc.prep_basis == Basis::T1) return ClosedForm{0.0, 4};
            // T2 original, both reflect: TP1's T2 measurement re-reads the
            // prepared index with probability 1/d after Eve's collapse.
            return ClosedForm{step4_full, 4};
        default:
            return std::nullopt;
    }
}

// Exact single-particle analysis of a probe attack: per-case
// detection probabilities by full branch enumeration on the joint space,
// plus the final probe states conditioned on the Case-8 measurement value.
struct ProbeEvaluation {
    double case1_rate = 0.0;
    double case2_rate = 0.0;
    double case3_rate = 0.0;
    double case4_rate = 0.0;
    double case8_rate = 0.0;
    // Final probe state on the Case-8 all-agree branch, indexed by m;
    // entries with negligible branch weight are empty.
    std::vector<std::vector<Complex>> case8_probe_by_value;
    std::vector<double> case8_branch_weight;
    double min_pairwise_probe_fidelity = 1.0;

    double total_rate() const {
        return case1_rate + case2_rate + case3_rate + case4_rate + case8_rate;
    }
    bool probe_independent(double tol = 1e-9) const {
        return min_pairwise_probe_fidelity >= 1.0 - tol;
    }
};

inline ProbeEvaluation probe_attack_evaluate(const ProbeAttack& attack, Dimension dim) {
    const int d = dim.value();
    const auto apply_segment = [&](JointState s, ChannelSegment seg) {
        if (seg == attack.u_e_segment()) {
            s = s.with_probe(attack.initial_probe).transformed(attack.u_e);
        }
        if (seg == attack.u_f_segment()) {
            if (!s.has_probe()) s = s.with_probe(attack.initial_probe);
            s = s.transformed(attack.u_f);
        }
        return s;
    };
    const auto ensure_probe = [&](JointState s) {
        // Probe-free states compare against product branches uniformly.
        return s.has_probe() ? s : s.with_probe(attack.initial_probe);
    };

    ProbeEvaluation out;
    out.case8_probe_by_value.assign(std::size_t(d), {});
    out.case8_branch_weight.assign(std::size_t(d), 0.0);

    for (int t = 0; t < d; ++t) {
        // Case 1: T1, reflect/reflect; TP1 must re-read t in T1.
        {
            JointState s(prepare(dim, Basis::T1, t));
            s = apply_segment(std::move(s), ChannelSegment::TP1toPn);
            s = apply_segment(std::move(s), ChannelSegment::PnToTP2);
            s = apply_segment(std::move(s), ChannelSegment::TP2toTP1);
            out.case1_rate += (1.0 - s.system_outcome_probability(Basis::T1, t)) / d;
        }
        // Case 2: T2, reflect/reflect; TP1 must re-read t in T2.
        {
            JointState s(prepare(dim, Basis::T2, t));
            s = apply_segment(std::move(s), ChannelSegment::TP1toPn);
            s = apply_segment(std::move(s), ChannelSegment::PnToTP2);
            s = apply_segment(std::move(s), ChannelSegment::TP2toTP1);
            out.case2_rate += (1.0 - s.system_outcome_probability(Basis::T2, t)) / d;
        }
        // Case 3: T1, measure/reflect; pass needs P_n = t and TP1 = t.
        {
            JointState s0(prepare(dim, Basis::T1, t));
            s0 = apply_segment(std::move(s0), ChannelSegment::TP1toPn);
            const JointState s0p = ensure_probe(std::move(s0));
            const double p1 = s0p.system_outcome_probability(Basis::T1, t);
            double pass = 0.0;
            if (p1 > 1e-15) {
                JointState s = s0p.collapsed(Basis::T1, t);
                s = apply_segment(std::move(s), ChannelSegment::PnToTP2);
                s = apply_segment(std::move(s), ChannelSegment::TP2toTP1);
                pass = p1 * s.system_outcome_probability(Basis::T1, t);
            }
            out.case3_rate += (1.0 - pass) / d;
        }
        // Case 4: T1, reflect/measure; pass needs TP2 = t and TP1 = t.
        {
            JointState s(prepare(dim, Basis::T1, t));
            s = apply_segment(std::move(s), ChannelSegment::TP1toPn);
            s = apply_segment(std::move(s), ChannelSegment::PnToTP2);
            const JointState s2 = ensure_probe(std::move(s));
            const double p2 = s2.system_outcome_probability(Basis::T1, t);
            double pass = 0.0;
            if (p2 > 1e-15) {
                JointState s3 = s2.collapsed(Basis::T1, t);
                s3 = apply_segment(std::move(s3), ChannelSegment::TP2toTP1);
                pass = p2 * s3.system_outcome_probability(Basis::T1, t);
            }
            out.case4_rate += (1.0 - pass) / d;
        }
        // Case 8: T1, measure/measure; pass needs P_n = TP2 = TP1 = t.
        {
            JointState s0(prepare(dim, Basis::T1, t));
            s0 = apply_segment(std::move(s0), ChannelSegment::TP1toPn);
            const JointState s0p = ensure_probe(std::move(s0));
            const double p1 = s0p.system_outcome_probability(Basis::T1, t);
            double pass = 0.0;
            if (p1 > 1e-15) {
                JointState s1 = s0p.collapsed(Basis::T1, t);
                s1 = apply_segment(std::move(s1), ChannelSegment::PnToTP2);
                const double p2 = s1.system_outcome_probability(Basis::T1, t);
                if (p2 > 1e-15) {
                    JointState s2 = s1.collapsed(Basis::T1, t);
                    s2 = apply_segment(std::move(s2), ChannelSegment::TP2toTP1);
                    const double p3 = s2.system_outcome_probability(Basis::T1, t);
                    pass = p1 * p2 * p3;
                    if (p3 > 1e-15) {
                        out.case8_probe_by_value[std::size_t(t)] =
                            s2.collapsed(Basis::T1, t).conditional_probe(Basis::T1, t);
                        out.case8_branch_weight[std::size_t(t)] = pass;
                    }
                }
            }
            out.case8_rate += (1.0 - pass) / d;
        }
    }

    for (int a = 0; a < d; ++a) {
        if (out.case8_probe_by_value[std::size_t(a)].empty()) continue;
        for (int b = a + 1; b < d; ++b) {
            if (out.case8_probe_by_value[std::size_t(b)].empty()) continue;
            const double f = probe_fidelity(out.case8_probe_by_value[std::size_t(a)],
                                            out.case8_probe_by_value[std::size_t(b)]);
            out.min_pairwise_probe_fidelity =
                std::min(out.min_pairwise_probe_fidelity, f);
        }
    }
    return out;
}

// Empirical detection tallies from full protocol runs, per (case, step).
// `rate` is the conditional per-checked-particle mismatch rate; `published_rate`
// multiplies in the Step-5 check-set sampling factor of 1/2 so the figures
// line up with the published (d-1)/(2d) convention.
struct DetectionCell {
    CaseId case_id;
    int step;  // 4 or 5
    long attacked = 0;
    long detected = 0;
    double sampling_factor = 1.0;
    std::optional<double> reference;        // conditional closed form
    std::optional<double> published_reference;  // closed form with the sampling factor applied

    double rate() const { return attacked > 0 ? double(detected) / double(attacked) : 0.0; }
    double published_rate() const { return rate() * sampling_factor; }
    // Wilson (z = 1) standard error; never zero, so "within 3 SE of 0" is testable.
    double stderr_wilson() const {
        const double n = double(attacked) + 1.0;
        const double p = (double(detected) + 0.5) / n;
        return std::sqrt(p * (1.0 - p) / n);
    }
};

struct DetectionStats {
    int d = 0;
    AttackKind kind = AttackKind::NoAttack;
    std::string attack_label;
    long trials = 0;
    long completed_runs = 0;
    std::map<RunStatus, long> status_counts;
    std::vector<DetectionCell> cells;  // ordered Case1..Case8

    DetectionCell* find(CaseId c, int step) {
        for (auto& cell : cells) {
            if (cell.case_id == c && cell.step == step) return &cell;
        }
        return nullptr;
    }
    const DetectionCell* find(CaseId c, int step) const {
        return const_cast<DetectionStats*>(this)->find(c, step);
    }
};

inline Scenario scenario_for_case(CaseId c) {
    switch (c) {
        case CaseId::Case1: return {Basis::T1, Mode::Reflect, Mode::Reflect};
        case CaseId::Case2: return {Basis::T2, Mode::Reflect, Mode::Reflect};
        case CaseId::Case3: return {Basis::T1, Mode::Measure, Mode::Reflect};
        case CaseId::Case4: return {Basis::T1, Mode::Reflect, Mode::Measure};
        case CaseId::Case5: return {Basis::T2, Mode::Reflect, Mode::Measure};
        case CaseId::Case6: return {Basis::T2, Mode::Measure, Mode::Reflect};
        case CaseId::Case7: return {Basis::T2, Mode::Measure, Mode::Measure};
        case CaseId::Case8: return {Basis::T1, Mode::Measure, Mode::Measure};
    }
    throw std::logic_error("bad case id");
}

// Runs the protocol `trials` times with the strategy installed and tallies
// detection events per (case, step). All inputs and the key are zeros: the
// security checks never look at them.
inline DetectionStats monte_carlo_detection(const ProtocolConfig& config,
                                            const AttackStrategy& strategy,
                                            long trials) {
    if (trials < 1) throw std::domain_error("trials must be >= 1");
    config.validate();
    const Dimension dim(config.d);

    DetectionStats stats;
    stats.d = config.d;
    stats.kind = strategy.kind;
    stats.attack_label = to_string(strategy.kind);
    stats.trials = trials;
    for (int c = 1; c <= 8; ++c) {
        const CaseId case_id = CaseId(c);
        const int step = case_id == CaseId::Case8 ? 5 : 4;
        DetectionCell cell;
        cell.case_id = case_id;
        cell.step = step;
        cell.sampling_factor = step == 5 ? 0.5 : 1.0;
        if (auto cf = closed_form_detection(strategy, dim, scenario_for_case(case_id))) {
            cell.published_reference = cf->rate;
            cell.reference = cf->step == 5 ? cf->rate * 2.0 : cf->rate;
        }
        stats.cells.push_back(cell);
    }

    const std::vector<std::vector<int>> inputs(
        std::size_t(config.users), std::vector<int>(std::size_t(config.length), 0));
    const std::vector<int> key(std::size_t(config.length), 0);

    for (long trial = 0; trial < trials; ++trial) {
        ProtocolConfig cfg = config;
        cfg.seed = mix64(config.seed, std::uint64_t(trial) + 1);
        AttackChannel channel(strategy);
        const Transcript tr = run_protocol(cfg, inputs, key, channel);
        ++stats.status_counts[tr.status];
        if (tr.status == RunStatus::Completed) ++stats.completed_runs;

        auto failed = [](const std::vector<CheckFailure>& fs, int u, int pos) {
            for (const auto& f : fs) {
                if (f.user == u && f.position == pos) return true;
            }
            return false;
        };
        for (int u = 0; u < config.users; ++u) {
            for (const auto& rec : tr.records[std::size_t(u)]) {
                if (!strategy.active() || !strategy.targets(rec.position)) continue;
                if (rec.case_id == CaseId::Case8) {
                    if (rec.check_role != CheckRole::Step5Check) continue;
                    auto* cell = stats.find(CaseId::Case8, 5);
                    ++cell->attacked;
                    if (failed(tr.step5_failures, u, rec.position)) ++cell->detected;
                } else {
                    auto* cell = stats.find(rec.case_id, 4);
                    ++cell->attacked;
                    if (!case_ignored(rec.case_id) &&
                        failed(tr.step4_failures, u, rec.position)) {
                        ++cell->detected;
                    }
                }
            }
        }
    }
    return stats;
}

}  // namespace msqpc
