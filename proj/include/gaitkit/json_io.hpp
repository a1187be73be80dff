#ifndef GAITKIT_JSON_IO_HPP
#define GAITKIT_JSON_IO_HPP

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitkit/error.hpp"
#include "gaitkit/evaluate.hpp"
#include "gaitkit/factors.hpp"
#include "gaitkit/pipeline.hpp"
#include "gaitkit/types.hpp"

namespace gaitkit::json_io {

using json = nlohmann::ordered_json;

namespace detail {

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> read_optional(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace detail

inline json to_json(const std::vector<GaitEvent>& events) {
    json out = json::array();
    for (const auto& e : events)
        out.push_back({{"time_s", e.time_s}, {"kind", to_string(e.kind)}, {"side", to_string(e.side)}});
    return out;
}

inline std::vector<GaitEvent> events_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("events JSON must be an array");
    std::vector<GaitEvent> out;
    try {
        for (const auto& e : j)
            out.push_back({e.at("time_s").get<double>(), parse_event_kind(e.at("kind").get<std::string>()),
                           e.contains("side") ? parse_side(e.at("side").get<std::string>()) : Side::Unknown, 0.0});
    } catch (const json::exception& ex) {
        throw ParseError(std::string("malformed event entry: ") + ex.what());
    }
    return out;
}

inline json to_json(const std::vector<Segment>& segments) {
    json out = json::array();
    for (const auto& s : segments) out.push_back({{"start_s", s.start_s}, {"end_s", s.end_s}, {"kind", to_string(s.kind)}});
    return out;
}

inline std::vector<Segment> segments_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("segments JSON must be an array");
    std::vector<Segment> out;
    try {
        for (const auto& s : j)
            out.push_back({s.at("start_s").get<double>(), s.at("end_s").get<double>(), parse_segment_kind(s.at("kind").get<std::string>())});
    } catch (const json::exception& ex) {
        throw ParseError(std::string("malformed segment entry: ") + ex.what());
    }
    return out;
}

inline json to_json(const std::vector<Turn>& turns) {
    json out = json::array();
    for (const auto& t : turns)
        out.push_back({{"start_s", t.start_s}, {"end_s", t.end_s}, {"angle_deg", t.angle_deg}, {"sharp", t.sharp}});
    return out;
}

inline json to_json(const BoutReport& b) {
    json j{{"start_s", b.bout.start_s}, {"end_s", b.bout.end_s}, {"frame_verified", b.frame_verified}};
    if (b.detection) {
        j["stride_s"] = b.detection->stride.stride_s;
        j["wavelet_scale"] = b.detection->params.scale;
        j["wavelet_axis"] = to_string(b.detection->params.axis);
        j["wavelet_sign"] = b.detection->params.sign;
        j["n_events"] = b.detection->events.size();
    } else {
        j["skipped"] = b.skipped;
    }
    return j;
}

inline json to_json(const TemporalErrorSet& e) {
    return {{"constant_s", e.constant_s},
            {"absolute_s", e.absolute_s},
            {"variable_s", detail::optional_number(e.variable_s)},
            {"total_variability_s", e.total_variability_s},
            {"median_s", e.median_s},
            {"median_abs_s", e.median_abs_s},
            {"iqr_s", e.iqr_s},
            {"n_steps", e.n_steps}};
}

inline json to_json(const Evaluation& ev) {
    const auto& m = ev.metrics;
    return {{"kind", to_string(ev.kind)},
            {"precision", detail::optional_number(m.precision)},
            {"recall", detail::optional_number(m.recall)},
            {"f1", detail::optional_number(m.f1)},
            {"tp", m.tp},
            {"fp", m.fp},
            {"fn", m.fn},
            {"errors", ev.errors ? to_json(*ev.errors) : json(nullptr)}};
}

/// One metric value per event kind from a metrics file; absent metrics come back empty.
struct MetricRow {
    EventKind kind;
    json row;
};

inline std::vector<MetricRow> metrics_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("metrics JSON must be an array");
    std::vector<MetricRow> out;
    try {
        for (const auto& r : j) out.push_back({parse_event_kind(r.at("kind").get<std::string>()), r});
    } catch (const json::exception& ex) {
        throw ParseError(std::string("malformed metrics entry: ") + ex.what());
    }
    return out;
}

/// Looks up `name` at the top level, then under `errors`.
inline std::optional<double> metric_value(const json& row, const std::string& name) {
    if (row.contains(name)) return detail::read_optional(row, name.c_str());
    if (row.contains("errors") && row.at("errors").is_object() && row.at("errors").contains(name))
        return detail::read_optional(row.at("errors"), name.c_str());
    return std::nullopt;
}

inline json to_json(const AggregateSummary& a) {
    return {{"median", a.median}, {"iqr", a.iqr},   {"q1", a.q1},
            {"q3", a.q3},         {"p05", a.p05},   {"p95", a.p95},
            {"mean", a.mean},     {"ci95_lo", detail::optional_number(a.ci95_lo)},
            {"ci95_hi", detail::optional_number(a.ci95_hi)},
            {"ws_iqr", detail::optional_number(a.ws_iqr)},
            {"n", a.n}};
}

inline json to_json(const std::vector<PosteriorSummary>& rows) {
    json out = json::array();
    for (const auto& p : rows)
        out.push_back({{"parameter", p.parameter},
                       {"mean", p.mean},
                       {"median", p.median},
                       {"std", p.std},
                       {"q5", p.q5},
                       {"q95", p.q95},
                       {"iqr", p.iqr},
                       {"z_score", p.z_score},
                       {"p_gt_z", p.p_gt_z},
                       {"r_hat", p.r_hat}});
    return out;
}

inline json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& ex) {
        throw ParseError("'" + path + "' is not valid JSON: " + ex.what());
    }
}

}  // namespace gaitkit::json_io

#endif
