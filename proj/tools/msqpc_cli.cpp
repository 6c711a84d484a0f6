// Command-line front end: seeded protocol runs, attack sweeps, the d = 19
// four-user worked example, and qudit-efficiency reporting.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msqpc/analysis.hpp"

namespace {

using namespace msqpc;

constexpr int kUsageExit = 64;
constexpr int kStatusExitBase = 1;  // Completed -> 0, aborts -> 2..4

int exit_code_for(RunStatus s) {
    return s == RunStatus::Completed ? 0 : kStatusExitBase + int(s);
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("MSQPC_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 1;
}

AttackStrategy parse_attack(const std::string& spec, int d) {
    AttackStrategy s;
    if (spec == "none") {
        s.kind = AttackKind::NoAttack;
    } else if (spec == "ir-v1") {
        s.kind = AttackKind::InterceptResendV1;
    } else if (spec == "ir-v2") {
        s.kind = AttackKind::InterceptResendV2;
    } else if (spec == "ir-v3") {
        s.kind = AttackKind::InterceptResendV3;
    } else if (spec.rfind("mr:", 0) == 0) {
        s.kind = AttackKind::MeasureResend;
        const std::string seg = spec.substr(3);
        if (seg == "tp1-pn") s.mr_segment = ChannelSegment::TP1toPn;
        else if (seg == "pn-tp2") s.mr_segment = ChannelSegment::PnToTP2;
        else if (seg == "tp2-tp1") s.mr_segment = ChannelSegment::TP2toTP1;
        else throw CLI::ValidationError("--attack", "unknown segment '" + seg + "'");
    } else if (spec.rfind("probe:", 0) == 0) {
        s.kind = AttackKind::EntangleMeasureProbe;
        const std::string which = spec.substr(6);
        const Dimension dim(d);
        if (which == "identity") s.probe = identity_probe(dim);
        else if (which == "cshift") s.probe = controlled_shift_probe(dim);
        else if (which.rfind("interp=", 0) == 0) {
            s.probe = interpolated_probe(dim, std::stod(which.substr(7)));
        } else {
            throw CLI::ValidationError("--attack", "unknown probe '" + which + "'");
        }
    } else {
        throw CLI::ValidationError("--attack", "unknown attack '" + spec + "'");
    }
    return s;
}

void write_output(const std::string& path, const std::string& body) {
    if (path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << body;
}

struct RunFlags {
    int d = 3;
    int users = 2;
    int length = 1;
    std::uint64_t seed = default_seed();
    int multiplier = 16;
    int retries = 0;
    double t2_prob = 0.5;
    std::string out_path;
    bool include_log = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_dimension = true) {
    if (with_dimension) cmd->add_option("--d", f.d, "system dimension (odd, >= 3)");
    cmd->add_option("--users", f.users, "number of classical users (>= 2)");
    cmd->add_option("--length", f.length, "private input length L");
    cmd->add_option("--seed", f.seed, "root seed (default: MSQPC_SEED or 1)");
    cmd->add_option("--multiplier", f.multiplier, "sequence length multiplier (default 16)");
    cmd->add_option("--retries", f.retries, "reruns allowed on insufficient Case-8 supply");
    cmd->add_option("--t2-prob", f.t2_prob, "probability of a T2 preparation");
    cmd->add_option("--out", f.out_path, "output file (default: stdout)");
    cmd->add_flag("--log", f.include_log, "embed the event log in the report");
}

ProtocolConfig config_from(const RunFlags& f) {
    if (f.d < 3 || f.d % 2 == 0) {
        throw CLI::ValidationError(
            "--d", "dimension must be odd and >= 3 so that h = (d-1)/2 is an integer");
    }
    ProtocolConfig cfg;
    cfg.d = f.d;
    cfg.users = f.users;
    cfg.length = f.length;
    cfg.seed = f.seed;
    cfg.seq_multiplier = f.multiplier;
    cfg.max_retries = f.retries;
    cfg.t2_prep_probability = f.t2_prob;
    cfg.validate();
    return cfg;
}

// Demo inputs: user n holds digits (n + i) mod (h + 1). Deterministic and
// distinct between users so the published relations are non-trivial.
std::vector<std::vector<int>> demo_inputs(const ProtocolConfig& cfg) {
    const int h = Dimension(cfg.d).h();
    std::vector<std::vector<int>> inputs(std::size_t(cfg.users));
    for (int n = 0; n < cfg.users; ++n) {
        for (int i = 0; i < cfg.length; ++i) {
            inputs[std::size_t(n)].push_back((n + i) % (h + 1));
        }
    }
    return inputs;
}

std::vector<int> demo_key(const ProtocolConfig& cfg) {
    std::vector<int> key;
    for (int i = 0; i < cfg.length; ++i) key.push_back((7 * i + 3) % cfg.d);
    return key;
}

int cmd_run(const RunFlags& flags) {
    const auto cfg = config_from(flags);
    const auto start = std::chrono::steady_clock::now();
    Transcript tr = run_protocol(cfg, demo_inputs(cfg), demo_key(cfg));
    const auto elapsed = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    write_output(flags.out_path, run_report(tr, std::nullopt, flags.include_log).dump(2) + "\n");
    std::cerr << "status: " << to_string(tr.status) << " (" << elapsed << " ms)\n";
    return exit_code_for(tr.status);
}

int cmd_attack(const RunFlags& flags, const std::string& attack_spec, long trials) {
    const auto cfg = config_from(flags);
    const auto strategy = parse_attack(attack_spec, cfg.d);
    const auto stats = monte_carlo_detection(cfg, strategy, trials);
    AttackChannel channel(strategy);
    Transcript tr = run_protocol(cfg, demo_inputs(cfg), demo_key(cfg), channel);
    write_output(flags.out_path, run_report(tr, stats, flags.include_log).dump(2) + "\n");
    std::cerr << "status: " << to_string(tr.status) << "\n";
    return exit_code_for(tr.status);
}

int cmd_sweep(const RunFlags& flags, const std::vector<int>& dims,
              const std::vector<std::string>& attacks, long trials) {
    std::ostringstream csv;
    csv << detection_csv_header() << '\n';
    for (int d : dims) {
        if (d < 3 || d % 2 == 0) {
            throw CLI::ValidationError(
                "--d", "dimension must be odd and >= 3 so that h = (d-1)/2 is an integer");
        }
        for (const auto& spec : attacks) {
            RunFlags f = flags;
            f.d = d;
            const auto cfg = config_from(f);
            const auto strategy = parse_attack(spec, d);
            auto stats = monte_carlo_detection(cfg, strategy, trials);
            stats.attack_label = spec;
            csv << detection_csv_rows(stats);
        }
    }
    write_output(flags.out_path, csv.str());
    return 0;
}

// Reproduces the d = 19 four-user worked example end to end: a full
// protocol run whose Case-8 comparison measurements are pinned to
// m = (7, 2, 9, 10) via the preparation-index override, then the audit
// chain c -> f -> R -> y.
int cmd_example() {
    ProtocolConfig cfg;
    cfg.d = 19;
    cfg.users = 4;
    cfg.length = 1;
    const std::vector<int> key{16};
    const std::vector<std::vector<int>> inputs{{5}, {3}, {5}, {6}};
    const std::vector<int> m{7, 2, 9, 10};

    // Pinned deterministic seed scan: the first candidate whose honest run
    // completes without retries fixes the randomness of the replay.
    Transcript honest;
    bool found = false;
    for (std::uint64_t i = 0; i < 1000 && !found; ++i) {
        cfg.seed = mix64(0x5eed, i);
        honest = run_protocol(cfg, inputs, key);
        found = honest.status == RunStatus::Completed;
    }
    if (!found) {
        std::cerr << "error: no completing seed found\n";
        return 1;
    }
    // Replay with the comparison-set preparation indices forced to m. Mode
    // bits, basis draws and the Case-8 partition are untouched, so the same
    // positions end up in the comparison sets.
    for (int u = 0; u < cfg.users; ++u) {
        for (int pos : honest.comparison_positions[std::size_t(u)]) {
            cfg.forced_prep_index[{u, pos}] = m[std::size_t(u)];
        }
    }
    Transcript tr = run_protocol(cfg, inputs, key);
    if (tr.status != RunStatus::Completed) {
        std::cerr << "error: forced replay did not complete\n";
        return 1;
    }

    const Dimension d(cfg.d);
    std::cout << "d = " << cfg.d << ", k = " << key[0] << "\n";
    auto row = [&](const char* name, const std::vector<int>& v) {
        std::cout << name << " = (";
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::cout << v[i] << (i + 1 < v.size() ? ", " : ")");
        }
        std::cout << "\n";
    };
    std::vector<int> p_row, c_row, f_row;
    for (int u = 0; u < cfg.users; ++u) {
        p_row.push_back(inputs[std::size_t(u)][0]);
        const int c = tr.announced_c[std::size_t(u)][0];
        c_row.push_back(c);
        f_row.push_back(decode(ModDigit(c, d), ModDigit(m[std::size_t(u)], d)).value());
    }
    row("p", p_row);
    row("m", m);
    row("c", c_row);
    row("f", f_row);

    const RelationMatrix& rel = tr.report->per_index[0];
    for (int a = 0; a < cfg.users; ++a) {
        for (int b = a + 1; b < cfg.users; ++b) {
            const int r = pairwise_difference(ModDigit(f_row[std::size_t(a)], d),
                                              ModDigit(f_row[std::size_t(b)], d))
                              .value();
            std::cout << "R" << a + 1 << b + 1 << " = " << r
                      << "  y = " << int(rel.at(a, b)) << "\n";
        }
    }

    // Total preorder from the relation matrix.
    std::vector<int> order(std::size_t(cfg.users));
    for (int u = 0; u < cfg.users; ++u) order[std::size_t(u)] = u;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return rel.at(a, b) == Relation::Less;
    });
    std::cout << "verdict: ";
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0) {
            std::cout << (rel.at(order[i - 1], order[i]) == Relation::Equal ? " = "
                                                                            : " < ");
        }
        std::cout << "p" << order[i] + 1;
    }
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-party semiquantum private comparison simulator"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "execute one seeded protocol run");
    add_run_flags(run_cmd, run_flags);

    RunFlags attack_flags;
    std::string attack_spec = "none";
    long attack_trials = 1000;
    auto* attack_cmd =
        app.add_subcommand("attack", "Monte Carlo detection rates for one attack");
    add_run_flags(attack_cmd, attack_flags);
    attack_cmd->add_option("--attack", attack_spec,
                           "none | ir-v1 | ir-v2 | ir-v3 | mr:<segment> | probe:<spec>");
    attack_cmd->add_option("--trials", attack_trials, "number of protocol runs");

    RunFlags sweep_flags;
    std::vector<int> sweep_dims{3};
    std::vector<std::string> sweep_attacks{"ir-v1"};
    long sweep_trials = 1000;
    auto* sweep_cmd = app.add_subcommand("sweep", "CSV sweep over d and attacks");
    add_run_flags(sweep_cmd, sweep_flags, /*with_dimension=*/false);
    sweep_cmd->add_option("--d", sweep_dims, "dimensions to sweep");
    sweep_cmd->add_option("--attack", sweep_attacks, "attacks to sweep");
    sweep_cmd->add_option("--trials", sweep_trials, "runs per cell");

    auto* example_cmd =
        app.add_subcommand("example", "reproduce the d = 19 four-user worked example");

    try {
        app.parse(argc, argv);
        if (run_cmd->parsed()) return cmd_run(run_flags);
        if (attack_cmd->parsed()) return cmd_attack(attack_flags, attack_spec, attack_trials);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_flags, sweep_dims, sweep_attacks, sweep_trials);
        if (example_cmd->parsed()) return cmd_example();
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageExit;
    } catch (const CLI::Error& e) {
        app.exit(e);
        return kUsageExit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageExit;
    }
    return kUsageExit;
}
