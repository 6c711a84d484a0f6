#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "msqpc/adversary.hpp"
#include "msqpc/protocol.hpp"

namespace msqpc {

using Json = nlohmann::ordered_json;

// Resource tally for the qudit-efficiency figure eta = theta / (sigma + mu).
struct EfficiencyInput {
    long sigma;  // qudits transmitted
    long mu;     // classical dits consumed
    long theta;  // private-input length compared
    std::string convention;

    EfficiencyInput(long s, long m, long t, std::string conv)
        : sigma(s), mu(m), theta(t), convention(std::move(conv)) {
        if (sigma < 0 || mu < 0 || theta < 0 || sigma + mu <= 0) {
            throw std::domain_error("invalid efficiency counts");
        }
    }
};

inline double efficiency(const EfficiencyInput& in) {
    if (in.sigma + in.mu == 0) throw std::domain_error("zero resource denominator");
    return double(in.theta) / double(in.sigma + in.mu);
}

enum class CountingConvention { PaperNeglectChecks, CountEverything };

inline const char* to_string(CountingConvention c) {
    return c == CountingConvention::PaperNeglectChecks ? "paper-neglect-checks"
                                                       : "count-everything";
}

// Resource counts from a completed transcript.
//
// PaperNeglectChecks follows the published accounting: sigma counts the
// N * 16L qudits of one protocol pass, mu counts only the N * L announced
// c digits, and everything spent on security checking is ignored.
//
// CountEverything additionally charges retries, the r/v announcements, the
// T2-position publication, the Case-3/4 declarations and the Step-5 value
// announcements, each as one dit of the alphabet actually used.
inline EfficiencyInput count_resources(const Transcript& tr,
                                       CountingConvention convention) {
    if (tr.status != RunStatus::Completed) {
        throw std::domain_error("resource counting requires a completed run");
    }
    const long users = tr.config.users;
    const long length = tr.config.length;
    const long seq_len = tr.config.sequence_length();

    if (convention == CountingConvention::PaperNeglectChecks) {
        return EfficiencyInput(users * seq_len, users * length, length,
                               to_string(convention));
    }

    const long attempts = tr.attempts_used;
    long sigma = users * seq_len * attempts;
    long mu = users * length;  // the c announcements
    for (const auto& ev : tr.log) {
        if (ev.payload.rfind("announce-r", 0) == 0) {
            mu += seq_len;  // binary dits, one per position
        } else if (ev.payload.rfind("announce-v", 0) == 0) {
            mu += users * seq_len;
        } else if (ev.payload.rfind("announce-t2-positions", 0) == 0) {
            mu += users * seq_len;
        } else if (ev.payload.rfind("declare-state", 0) == 0 ||
                   ev.payload.rfind("announce-value", 0) == 0 ||
                   ev.payload.rfind("publish-check-position", 0) == 0) {
            mu += 1;
        }
    }
    return EfficiencyInput(sigma, mu, length, to_string(convention));
}

inline Json to_json(const EfficiencyInput& in) {
    return Json{{"sigma", in.sigma},
                {"mu", in.mu},
                {"theta", in.theta},
                {"convention", in.convention},
                {"eta", efficiency(in)}};
}

inline int relation_to_int(Relation r) { return int(r); }

inline Json to_json(const RelationMatrix& m) {
    Json rows = Json::array();
    for (int n = 0; n < m.users(); ++n) {
        Json row = Json::array();
        for (int other = 0; other < m.users(); ++other) {
            row.push_back(relation_to_int(m.at(n, other)));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json to_json(const DetectionCell& cell) {
    Json j{{"case", int(cell.case_id)},
           {"step", cell.step},
           {"attacked", cell.attacked},
           {"detected", cell.detected},
           {"rate", cell.rate()},
           {"stderr", cell.stderr_wilson()},
           {"sampling_factor", cell.sampling_factor},
           {"published_rate", cell.published_rate()}};
    j["reference"] = cell.reference ? Json(*cell.reference) : Json(nullptr);
    j["published_reference"] = cell.published_reference ? Json(*cell.published_reference) : Json(nullptr);
    return j;
}

inline Json to_json(const DetectionStats& stats) {
    Json cells = Json::array();
    for (const auto& c : stats.cells) cells.push_back(to_json(c));
    Json statuses = Json::object();
    for (const auto& [status, count] : stats.status_counts) {
        statuses[to_string(status)] = count;
    }
    return Json{{"d", stats.d},
                {"attack", stats.attack_label},
                {"trials", stats.trials},
                {"completed_runs", stats.completed_runs},
                {"statuses", std::move(statuses)},
                {"cells", std::move(cells)}};
}

// One event per line: step, actor, position, payload, tab-separated.
inline std::string event_log_lines(const Transcript& tr) {
    std::ostringstream out;
    for (const auto& ev : tr.log) {
        out << ev.step << '\t' << ev.actor << '\t' << ev.position << '\t'
            << ev.payload << '\n';
    }
    return out.str();
}

// Machine-readable report for one run (schema version 1). Deterministic:
// no wall-clock fields, so identical seeds give byte-identical documents.
inline Json run_report(const Transcript& tr,
                       const std::optional<DetectionStats>& detection = std::nullopt,
                       bool include_log = false) {
    Json config{{"d", tr.config.d},
                {"users", tr.config.users},
                {"length", tr.config.length},
                {"seq_multiplier", tr.config.seq_multiplier},
                {"seed", tr.config.seed},
                {"t2_prep_probability", tr.config.t2_prep_probability},
                {"max_retries", tr.config.max_retries}};
    Json j{{"schema", 1}, {"config", std::move(config)}};
    j["status"] = to_string(tr.status);
    j["attempts_used"] = tr.attempts_used;
    j["case8_counts"] = tr.case8_counts;
    if (tr.report) {
        Json per_index = Json::array();
        for (const auto& m : tr.report->per_index) per_index.push_back(to_json(m));
        j["relations"] = std::move(per_index);
        j["announced_c"] = tr.announced_c;
        j["efficiency"] = Json::array(
            {to_json(count_resources(tr, CountingConvention::PaperNeglectChecks)),
             to_json(count_resources(tr, CountingConvention::CountEverything))});
    } else {
        j["relations"] = Json(nullptr);
    }
    if (detection) j["detection"] = to_json(*detection);
    if (include_log) j["events"] = event_log_lines(tr);
    return j;
}

// CSV rows for attack sweeps. Rates are reported in the published
// convention (Step-5 rows carry the 1/2 check-set sampling factor).
inline std::string detection_csv_header() {
    return "d,attack,case,step,attacked,detected,rate,stderr,reference";
}

inline std::string detection_csv_rows(const DetectionStats& stats) {
    std::ostringstream out;
    for (const auto& c : stats.cells) {
        out << stats.d << ',' << stats.attack_label << ',' << int(c.case_id) << ','
            << c.step << ',' << c.attacked << ',' << c.detected << ','
            << c.published_rate() << ',' << c.stderr_wilson() * c.sampling_factor << ',';
        if (c.published_reference) out << *c.published_reference;
        out << '\n';
    }
    return out.str();
}

}  // namespace msqpc
