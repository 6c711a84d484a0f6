#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "msqpc/comparison.hpp"
#include "msqpc/joint_state.hpp"
#include "msqpc/qudit.hpp"
#include "msqpc/random.hpp"

namespace msqpc {

// The three quantum transmissions of one particle's circuit:
// S_n (TP1 -> P_n), S'_n (P_n -> TP2), S''_n (TP2 -> TP1).
enum class ChannelSegment { TP1toPn, PnToTP2, TP2toTP1 };

// Hook applied to every in-transit particle. The default channel is the
// ideal noiseless one; the adversary module installs attacks here.
class Channel {
public:
    virtual ~Channel() = default;
    virtual void begin_attempt(int /*user*/, int /*attempt*/) {}
    virtual JointState transit(ChannelSegment /*segment*/, int /*user*/,
                               int /*position*/, JointState state,
                               RandomSource& /*rng*/) {
        return state;
    }
};

enum class Mode : int { Reflect = 0, Measure = 1 };

enum class CaseId : int {
    Case1 = 1, Case2, Case3, Case4, Case5, Case6, Case7, Case8
};

enum class CheckRole { Step4Check, Step5Check, Comparison, Ignored };

// Case row lookup from (preparation basis, P_n's bit, TP2's bit).
inline CaseId classify_case(Basis prep_basis, Mode r, Mode v) {
    if (prep_basis == Basis::T1) {
        if (r == Mode::Reflect && v == Mode::Reflect) return CaseId::Case1;
        if (r == Mode::Measure && v == Mode::Reflect) return CaseId::Case3;
        if (r == Mode::Reflect && v == Mode::Measure) return CaseId::Case4;
        return CaseId::Case8;
    }
    if (r == Mode::Reflect && v == Mode::Reflect) return CaseId::Case2;
    if (r == Mode::Reflect && v == Mode::Measure) return CaseId::Case5;
    if (r == Mode::Measure && v == Mode::Reflect) return CaseId::Case6;
    return CaseId::Case7;
}

inline bool case_ignored(CaseId c) {
    return c == CaseId::Case5 || c == CaseId::Case6 || c == CaseId::Case7;
}

// Basis in which TP1 measures the returned particle (Case 2 is the only
// T2 measurement; ignored cases are never measured).
inline Basis tp1_measurement_basis(CaseId c) {
    return c == CaseId::Case2 ? Basis::T2 : Basis::T1;
}

// Lifecycle of one position of one user's sequence.
struct ParticleRecord {
    int position = 0;  // 1-based within the 16L sequence
    Basis prep_basis = Basis::T1;
    int prep_index = 0;
    Mode r = Mode::Reflect;
    Mode v = Mode::Reflect;
    CaseId case_id = CaseId::Case1;
    CheckRole check_role = CheckRole::Ignored;
    std::optional<int> user_measurement;
    std::optional<int> tp2_measurement;
    std::optional<int> tp1_final_measurement;
};

struct ProtocolConfig {
    int d = 3;
    int users = 2;
    int length = 1;          // L
    int seq_multiplier = 16;  // sequence length = seq_multiplier * L
    std::uint64_t seed = 0;
    double t2_prep_probability = 0.5;
    int max_retries = 0;  // reruns of Steps 1-5 on an insufficient Case-8 supply

    // Replay plumbing: pin TP1's preparation index at (user, position).
    // Mode bits, basis draws and all checks are unaffected.
    std::map<std::pair<int, int>, int> forced_prep_index;

    int sequence_length() const { return seq_multiplier * length; }

    void validate() const {
        Dimension dim(d);
        if (users < 2) throw std::domain_error("need at least 2 users");
        if (length < 1) throw std::domain_error("length must be >= 1");
        if (seq_multiplier < 1) throw std::domain_error("multiplier must be >= 1");
        if (max_retries < 0) throw std::domain_error("retries must be >= 0");
        if (!(t2_prep_probability > 0.0 && t2_prep_probability < 1.0)) {
            throw std::domain_error("t2 preparation probability must be in (0,1)");
        }
    }
};

enum class RunStatus : int {
    Completed = 0,
    AbortedStep4Eavesdrop,
    AbortedInsufficientCase8,
    AbortedStep5ErrorRate,
};

inline const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Completed: return "completed";
        case RunStatus::AbortedStep4Eavesdrop: return "aborted-step4-eavesdrop";
        case RunStatus::AbortedInsufficientCase8: return "aborted-insufficient-case8";
        case RunStatus::AbortedStep5ErrorRate: return "aborted-step5-error-rate";
    }
    return "unknown";
}

struct ComparisonReport {
    std::vector<RelationMatrix> per_index;  // length L
};

struct Event {
    int step;
    std::string actor;
    int position;  // 0 when not tied to a particle
    std::string payload;
};

struct CheckFailure {
    int user;      // 0-based
    int position;  // 1-based
    CaseId case_id;
    int step;  // 4 or 5
};

struct Transcript {
    ProtocolConfig config;
    std::vector<int> key;                  // length L
    std::vector<std::vector<int>> inputs;  // users x L
    std::vector<std::vector<ParticleRecord>> records;  // final attempt, users x 16L
    std::vector<int> case8_counts;                     // per user
    std::vector<std::vector<int>> comparison_positions;  // users x L (when reached)
    std::vector<std::vector<int>> announced_c;           // users x L (when completed)
    std::vector<CheckFailure> step4_failures;
    std::vector<CheckFailure> step5_failures;
    int attempts_used = 1;
    RunStatus status = RunStatus::Completed;
    std::optional<ComparisonReport> report;
    std::vector<Event> log;
};

// One party's handling of an incoming particle: REFLECT passes it through
// untouched, MEASURE reads it in T1 and sends a fresh eigenstate of the
// observed value (the collapsed state; any probe entanglement has already
// factored out at that point).
struct TurnResult {
    JointState outgoing;
    std::optional<int> measured;
};

inline TurnResult party_turn(const JointState& incoming, Mode mode,
                             RandomSource& rng) {
    if (mode == Mode::Reflect) return TurnResult{incoming, std::nullopt};
    auto [value, collapsed] = incoming.measure_system(Basis::T1, rng);
    return TurnResult{std::move(collapsed), value};
}

// Step-4 verification over all users' non-ignored Case 1-4 particles.
// Case 1/2: TP1's measurement must reproduce the prepared index.
// Case 3 adds P_n's declared value, Case 4 adds TP2's declared value.
inline std::vector<CheckFailure> step4_check(
    const std::vector<std::vector<ParticleRecord>>& records) {
    std::vector<CheckFailure> failures;
    for (int u = 0; u < int(records.size()); ++u) {
        for (const auto& rec : records[std::size_t(u)]) {
            bool ok = true;
            switch (rec.case_id) {
                case CaseId::Case1:
                case CaseId::Case2:
                    ok = rec.tp1_final_measurement == rec.prep_index;
                    break;
                case CaseId::Case3:
                    if (!rec.user_measurement) {
                        throw std::domain_error("Case-3 particle lacks P_n's declaration");
                    }
                    ok = rec.tp1_final_measurement == rec.prep_index &&
                         *rec.user_measurement == rec.prep_index;
                    break;
                case CaseId::Case4:
                    if (!rec.tp2_measurement) {
                        throw std::domain_error("Case-4 particle lacks TP2's declaration");
                    }
                    ok = rec.tp1_final_measurement == rec.prep_index &&
                         *rec.tp2_measurement == rec.prep_index;
                    break;
                default:
                    continue;  // Case 5-7 ignored, Case 8 checked in Step 5
            }
            if (!ok) failures.push_back({u, rec.position, rec.case_id, 4});
        }
    }
    return failures;
}

// Uniformly random L-subset of one user's Case-8 positions becomes the
// check set; the comparison set is the first L of the remainder in
// position order.
struct Case8Partition {
    std::vector<int> check_positions;       // sorted
    std::vector<int> comparison_positions;  // sorted, length L
};

inline Case8Partition case8_partition(std::vector<int> case8_positions, int length,
                                      RandomSource& rng) {
    if (int(case8_positions.size()) < 2 * length) {
        throw std::logic_error("case8_partition requires at least 2L records");
    }
    std::sort(case8_positions.begin(), case8_positions.end());
    // Partial Fisher-Yates: the first L slots become the check set.
    for (int i = 0; i < length; ++i) {
        const int j = i + int(rng.uniform_index(case8_positions.size() - std::size_t(i)));
        std::swap(case8_positions[std::size_t(i)], case8_positions[std::size_t(j)]);
    }
    Case8Partition part;
    part.check_positions.assign(case8_positions.begin(),
                                case8_positions.begin() + length);
    std::sort(part.check_positions.begin(), part.check_positions.end());
    std::vector<int> rest(case8_positions.begin() + length, case8_positions.end());
    std::sort(rest.begin(), rest.end());
    rest.resize(std::size_t(length));
    part.comparison_positions = std::move(rest);
    return part;
}

// Step-5 verification: on every checked Case-8 particle the prepared index,
// P_n's value, TP2's value and TP1's value must all coincide. Zero tolerance.
inline std::vector<CheckFailure> step5_check(
    int user, const std::vector<const ParticleRecord*>& check_set) {
    std::vector<CheckFailure> failures;
    for (const auto* rec : check_set) {
        const bool ok = rec->user_measurement == rec->prep_index &&
                        rec->tp2_measurement == rec->prep_index &&
                        rec->tp1_final_measurement == rec->prep_index;
        if (!ok) failures.push_back({user, rec->position, rec->case_id, 5});
    }
    return failures;
}

// Steps 6-7: each user masks her private digit with her own measurement
// value and the shared key; TP1 unmasks with her value and classifies the
// pairwise differences. In an honest run user_m == tp1_m and this equals
// compare_pipeline.
struct FinalizeResult {
    std::vector<std::vector<int>> announced_c;  // users x L
    ComparisonReport report;
};

inline FinalizeResult finalize(const std::vector<std::vector<int>>& user_m,
                               const std::vector<std::vector<int>>& tp1_m,
                               const std::vector<int>& key,
                               const std::vector<std::vector<int>>& inputs,
                               Dimension d) {
    const int users = int(user_m.size());
    const int length = int(key.size());
    FinalizeResult out;
    out.announced_c.assign(std::size_t(users), std::vector<int>(std::size_t(length)));
    for (int n = 0; n < users; ++n) {
        for (int i = 0; i < length; ++i) {
            out.announced_c[std::size_t(n)][std::size_t(i)] =
                encode(ModDigit(user_m[std::size_t(n)][std::size_t(i)], d),
                       ModDigit(key[std::size_t(i)], d),
                       PrivateDigit(inputs[std::size_t(n)][std::size_t(i)], d))
                    .value();
        }
    }
    for (int i = 0; i < length; ++i) {
        std::vector<ModDigit> f;
        f.reserve(std::size_t(users));
        for (int n = 0; n < users; ++n) {
            f.push_back(decode(ModDigit(out.announced_c[std::size_t(n)][std::size_t(i)], d),
                               ModDigit(tp1_m[std::size_t(n)][std::size_t(i)], d)));
        }
        RelationMatrix matrix(users);
        for (int n = 0; n < users; ++n) {
            for (int other = n + 1; other < users; ++other) {
                matrix.set_pair(n, other,
                                classify(pairwise_difference(f[std::size_t(n)],
                                                             f[std::size_t(other)])));
            }
        }
        out.report.per_index.push_back(std::move(matrix));
    }
    return out;
}

namespace detail {

// Substream tags; every random draw in a run forks the root with
// (tag, attempt, user, position) so streams never interleave.
enum StreamTag : std::uint64_t {
    TagPrepBasis = 1,
    TagPrepIndex,
    TagUserMode,
    TagTp2Mode,
    TagUserMeasure,
    TagTp2Measure,
    TagTp1Measure,
    TagPartition,
    TagEve,
};

}  // namespace detail

// Full Steps 1-7 execution. Abort conditions land in Transcript::status,
// not in exceptions. All checks are evaluated even past the first failure
// so attack statistics can be tallied per particle; the status reflects
// the protocol's own abort order (Step 4, Case-8 supply, Step 5).
inline Transcript run_protocol(const ProtocolConfig& config,
                               const std::vector<std::vector<int>>& inputs,
                               const std::vector<int>& key, Channel& channel) {
    config.validate();
    const Dimension d(config.d);
    const int users = config.users;
    const int length = config.length;
    const int seq_len = config.sequence_length();

    if (int(inputs.size()) != users) throw std::domain_error("one input sequence per user");
    for (const auto& seq : inputs) {
        if (int(seq.size()) != length) throw std::domain_error("input length mismatch");
        for (int p : seq) PrivateDigit(p, d);  // range check
    }
    if (int(key.size()) != length) throw std::domain_error("key length mismatch");
    for (int k : key) ModDigit(k, d);  // range check

    const RandomSource root(config.seed);

    Transcript tr;
    tr.config = config;
    tr.key = key;
    tr.inputs = inputs;

    for (int attempt = 0;; ++attempt) {
        tr.records.assign(std::size_t(users), {});
        tr.case8_counts.assign(std::size_t(users), 0);
        tr.comparison_positions.assign(std::size_t(users), {});
        tr.announced_c.clear();
        tr.step4_failures.clear();
        tr.step5_failures.clear();
        tr.report.reset();
        tr.attempts_used = attempt + 1;

        std::vector<std::vector<JointState>> returned;
        returned.resize(std::size_t(users));

        // Steps 1-3: ping-pong circuits, strictly one particle in flight
        // per user sequence.
        for (int u = 0; u < users; ++u) {
            channel.begin_attempt(u, attempt);
            const std::string user_actor = "P" + std::to_string(u + 1);
            tr.records[std::size_t(u)].reserve(std::size_t(seq_len));
            returned[std::size_t(u)].reserve(std::size_t(seq_len));
            for (int pos = 1; pos <= seq_len; ++pos) {
                const auto tags = [&](std::uint64_t tag) {
                    return root.fork(tag, std::uint64_t(attempt), std::uint64_t(u),
                                     std::uint64_t(pos));
                };
                ParticleRecord rec;
                rec.position = pos;

                auto basis_rng = tags(detail::TagPrepBasis);
                rec.prep_basis = basis_rng.bernoulli(config.t2_prep_probability)
                                     ? Basis::T2
                                     : Basis::T1;
                auto index_rng = tags(detail::TagPrepIndex);
                rec.prep_index = int(index_rng.uniform_index(std::uint64_t(config.d)));
                if (auto it = config.forced_prep_index.find({u, pos});
                    it != config.forced_prep_index.end()) {
                    rec.prep_index = it->second;
                }

                JointState state(prepare(d, rec.prep_basis, rec.prep_index));
                tr.log.push_back({1, "TP1", pos, "send " + user_actor});

                auto eve_rng = tags(detail::TagEve);
                state = channel.transit(ChannelSegment::TP1toPn, u, pos,
                                        std::move(state), eve_rng);

                tr.log.push_back({2, user_actor, pos, "recv"});
                auto user_mode_rng = tags(detail::TagUserMode);
                rec.r = user_mode_rng.bernoulli(0.5) ? Mode::Measure : Mode::Reflect;
                auto user_meas_rng = tags(detail::TagUserMeasure);
                auto user_turn = party_turn(state, rec.r, user_meas_rng);
                rec.user_measurement = user_turn.measured;
                state = std::move(user_turn.outgoing);
                tr.log.push_back({2, user_actor, pos, "send TP2"});

                state = channel.transit(ChannelSegment::PnToTP2, u, pos,
                                        std::move(state), eve_rng);

                tr.log.push_back({3, "TP2", pos, "recv " + user_actor});
                auto tp2_mode_rng = tags(detail::TagTp2Mode);
                rec.v = tp2_mode_rng.bernoulli(0.5) ? Mode::Measure : Mode::Reflect;
                auto tp2_meas_rng = tags(detail::TagTp2Measure);
                auto tp2_turn = party_turn(state, rec.v, tp2_meas_rng);
                rec.tp2_measurement = tp2_turn.measured;
                state = std::move(tp2_turn.outgoing);
                tr.log.push_back({3, "TP2", pos, "send TP1"});

                state = channel.transit(ChannelSegment::TP2toTP1, u, pos,
                                        std::move(state), eve_rng);
                tr.log.push_back({3, "TP1", pos, "recv " + user_actor});

                rec.case_id = classify_case(rec.prep_basis, rec.r, rec.v);
                rec.check_role = case_ignored(rec.case_id) ? CheckRole::Ignored
                                                           : CheckRole::Step4Check;
                returned[std::size_t(u)].push_back(std::move(state));
                tr.records[std::size_t(u)].push_back(std::move(rec));
            }
        }

        // Step 4: announcements, then TP1 measures every non-ignored
        // returned particle in its per-case basis.
        tr.log.push_back({4, "TP1", 0, "announce-t2-positions"});
        for (int u = 0; u < users; ++u) {
            tr.log.push_back({4, "P" + std::to_string(u + 1), 0, "announce-r"});
        }
        tr.log.push_back({4, "TP2", 0, "announce-v"});
        for (int u = 0; u < users; ++u) {
            for (int pos = 1; pos <= seq_len; ++pos) {
                auto& rec = tr.records[std::size_t(u)][std::size_t(pos - 1)];
                if (case_ignored(rec.case_id)) continue;
                auto meas_rng = root.fork(detail::TagTp1Measure, std::uint64_t(attempt),
                                          std::uint64_t(u), std::uint64_t(pos));
                auto [value, collapsed] =
                    returned[std::size_t(u)][std::size_t(pos - 1)].measure_system(
                        tp1_measurement_basis(rec.case_id), meas_rng);
                (void)collapsed;
                rec.tp1_final_measurement = value;
                if (rec.case_id == CaseId::Case3) {
                    tr.log.push_back({4, "P" + std::to_string(u + 1), pos,
                                      "declare-state " + std::to_string(*rec.user_measurement)});
                } else if (rec.case_id == CaseId::Case4) {
                    tr.log.push_back({4, "TP2", pos,
                                      "declare-state " + std::to_string(*rec.tp2_measurement)});
                }
            }
        }
        tr.step4_failures = step4_check(tr.records);

        bool insufficient = false;
        for (int u = 0; u < users; ++u) {
            int count = 0;
            for (const auto& rec : tr.records[std::size_t(u)]) {
                if (rec.case_id == CaseId::Case8) ++count;
            }
            tr.case8_counts[std::size_t(u)] = count;
            if (count < 2 * length) insufficient = true;
        }

        // Step 5 (evaluated whenever the supply allows, for bookkeeping;
        // the status below still honors the protocol's abort order).
        std::vector<std::vector<int>> user_m;
        user_m.resize(std::size_t(users));
        std::vector<std::vector<int>> tp1_m;
        tp1_m.resize(std::size_t(users));
        bool have_comparison_sets = true;
        for (int u = 0; u < users; ++u) {
            auto& recs = tr.records[std::size_t(u)];
            std::vector<int> case8_positions;
            for (const auto& rec : recs) {
                if (rec.case_id == CaseId::Case8) case8_positions.push_back(rec.position);
            }
            if (int(case8_positions.size()) < 2 * length) {
                have_comparison_sets = false;
                continue;
            }
            auto part_rng = root.fork(detail::TagPartition, std::uint64_t(attempt),
                                      std::uint64_t(u), 0);
            auto part = case8_partition(case8_positions, length, part_rng);
            std::vector<const ParticleRecord*> check_set;
            for (int pos : part.check_positions) {
                auto& rec = recs[std::size_t(pos - 1)];
                rec.check_role = CheckRole::Step5Check;
                check_set.push_back(&rec);
                tr.log.push_back({5, "TP1", pos, "publish-check-position P" +
                                                     std::to_string(u + 1)});
                tr.log.push_back({5, "P" + std::to_string(u + 1), pos,
                                  "announce-value " + std::to_string(*rec.user_measurement)});
                tr.log.push_back({5, "TP2", pos,
                                  "announce-value " + std::to_string(*rec.tp2_measurement)});
            }
            auto failures = step5_check(u, check_set);
            tr.step5_failures.insert(tr.step5_failures.end(), failures.begin(),
                                     failures.end());
            tr.comparison_positions[std::size_t(u)] = part.comparison_positions;
            for (int pos : part.comparison_positions) {
                auto& rec = recs[std::size_t(pos - 1)];
                rec.check_role = CheckRole::Comparison;
                user_m[std::size_t(u)].push_back(*rec.user_measurement);
                tp1_m[std::size_t(u)].push_back(*rec.tp1_final_measurement);
            }
        }

        if (!tr.step4_failures.empty()) {
            tr.status = RunStatus::AbortedStep4Eavesdrop;
            tr.log.push_back({4, "TP1", 0, "abort eavesdropper-detected"});
            return tr;
        }
        if (insufficient) {
            tr.log.push_back({4, "TP1", 0, "suspend insufficient-case8 attempt=" +
                                               std::to_string(attempt + 1)});
            if (attempt < config.max_retries) continue;
            tr.status = RunStatus::AbortedInsufficientCase8;
            return tr;
        }
        if (!tr.step5_failures.empty()) {
            tr.status = RunStatus::AbortedStep5ErrorRate;
            tr.log.push_back({5, "TP1", 0, "abort nonzero-error-rate"});
            return tr;
        }
        (void)have_comparison_sets;

        // Steps 6-7.
        auto fin = finalize(user_m, tp1_m, key, inputs, d);
        tr.announced_c = fin.announced_c;
        for (int u = 0; u < users; ++u) {
            std::string payload = "announce-c";
            for (int c : fin.announced_c[std::size_t(u)]) {
                payload += " " + std::to_string(c);
            }
            tr.log.push_back({6, "P" + std::to_string(u + 1), 0, payload});
        }
        tr.log.push_back({7, "TP1", 0, "publish-results"});
        tr.report = std::move(fin.report);
        tr.status = RunStatus::Completed;
        return tr;
    }
}

inline Transcript run_protocol(const ProtocolConfig& config,
                               const std::vector<std::vector<int>>& inputs,
                               const std::vector<int>& key) {
    Channel ideal;
    return run_protocol(config, inputs, key, ideal);
}

}  // namespace msqpc
