#ifndef GAITKIT_EVALUATE_HPP
#define GAITKIT_EVALUATE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "gaitkit/error.hpp"
#include "gaitkit/signal.hpp"
#include "gaitkit/types.hpp"

namespace gaitkit {

inline constexpr double kDefaultMatchWindow = 0.5;

struct MatchReport {
    EventKind kind = EventKind::InitialContact;
    std::vector<std::pair<double, double>> pairs;  ///< (detected, reference)
    std::vector<double> false_positives;            ///< detected times
    std::vector<double> false_negatives;            ///< reference times
};

/// Greedy per-reference matching. Each reference, in time order, takes the closest unused
/// detection within +-window/2 (ties go to the earlier detection).
inline MatchReport match_events(std::span<const double> detected, std::span<const double> reference,
                                double window_s = kDefaultMatchWindow, EventKind kind = EventKind::InitialContact) {
    if (!(window_s > 0.0)) throw ContractError("matching window must be positive");
    if (!std::is_sorted(detected.begin(), detected.end())) throw ContractError("detected events are not sorted");
    if (!std::is_sorted(reference.begin(), reference.end())) throw ContractError("reference events are not sorted");
    const double half = 0.5 * window_s;

    MatchReport report;
    report.kind = kind;
    std::vector<bool> used(detected.size(), false);
    std::size_t lo = 0;
    for (double ref : reference) {
        while (lo < detected.size() && ref - detected[lo] > half) ++lo;
        std::optional<std::size_t> best;
        for (std::size_t j = lo; j < detected.size() && detected[j] - ref <= half; ++j) {
            if (used[j] || std::abs(detected[j] - ref) > half) continue;
            if (!best || std::abs(detected[j] - ref) < std::abs(detected[*best] - ref)) best = j;
        }
        if (best) {
            used[*best] = true;
            report.pairs.emplace_back(detected[*best], ref);
        } else {
            report.false_negatives.push_back(ref);
        }
    }
    for (std::size_t j = 0; j < detected.size(); ++j)
        if (!used[j]) report.false_positives.push_back(detected[j]);
    return report;
}

struct MetricSet {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

/// Precision, recall and F1. Zero denominators leave the metric absent rather than 0.
inline MetricSet compute_metrics(const MatchReport& report) {
    MetricSet m;
    m.tp = report.pairs.size();
    m.fp = report.false_positives.size();
    m.fn = report.false_negatives.size();
    const auto tp = static_cast<double>(m.tp);
    if (m.tp + m.fp > 0) m.precision = tp / static_cast<double>(m.tp + m.fp);
    if (m.tp + m.fn > 0) m.recall = tp / static_cast<double>(m.tp + m.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0)
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    return m;
}

/// Statistics of signed errors (detected - reference, seconds) over matched pairs.
struct TemporalErrorSet {
    double constant_s = 0.0;
    double absolute_s = 0.0;
    std::optional<double> variable_s;  ///< needs two or more pairs
    double total_variability_s = 0.0;  ///< root mean square
    double median_s = 0.0;
    double median_abs_s = 0.0;
    double iqr_s = 0.0;
    std::size_t n_steps = 0;
};

inline TemporalErrorSet temporal_errors(std::span<const double> errors) {
    if (errors.empty()) throw EmptySetError("no matched events to compute temporal errors from");
    TemporalErrorSet s;
    s.n_steps = errors.size();
    std::vector<double> abs_err(errors.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        abs_err[i] = std::abs(errors[i]);
        ss += errors[i] * errors[i];
    }
    s.constant_s = mean(errors);
    s.absolute_s = mean(abs_err);
    if (errors.size() >= 2) s.variable_s = sample_sd(errors);
    s.total_variability_s = std::sqrt(ss / static_cast<double>(errors.size()));
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    s.median_s = quantile_sorted(sorted, 0.5);
    s.iqr_s = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    s.median_abs_s = median(abs_err);
    return s;
}

inline TemporalErrorSet temporal_errors(const MatchReport& report) {
    std::vector<double> e;
    e.reserve(report.pairs.size());
    for (const auto& [det, ref] : report.pairs) e.push_back(det - ref);
    return temporal_errors(e);
}

/// Per-kind evaluation of one test.
struct Evaluation {
    EventKind kind = EventKind::InitialContact;
    MatchReport match;
    MetricSet metrics;
    std::optional<TemporalErrorSet> errors;
};

inline std::vector<double> event_times(const std::vector<GaitEvent>& events, EventKind kind) {
    std::vector<double> t;
    for (const auto& e : events)
        if (e.kind == kind) t.push_back(e.time_s);
    std::sort(t.begin(), t.end());
    return t;
}

inline Evaluation evaluate_kind(const std::vector<GaitEvent>& detected, const std::vector<GaitEvent>& reference,
                                EventKind kind, double window_s = kDefaultMatchWindow) {
    Evaluation ev;
    ev.kind = kind;
    ev.match = match_events(event_times(detected, kind), event_times(reference, kind), window_s, kind);
    ev.metrics = compute_metrics(ev.match);
    if (!ev.match.pairs.empty()) ev.errors = temporal_errors(ev.match);
    return ev;
}

// ---------------------------------------------------------------------------
// Aggregation

struct WithinSummary {
    double median = 0.0;
    double iqr = 0.0;
};

/// Median and IQR of each participant's values across tests.
inline std::map<std::string, WithinSummary> aggregate_within(const std::map<std::string, std::vector<double>>& values) {
    std::map<std::string, WithinSummary> out;
    for (const auto& [participant, v] : values) {
        if (v.empty()) throw EmptySetError("participant '" + participant + "' has no values");
        std::vector<double> s = v;
        std::sort(s.begin(), s.end());
        out[participant] = {quantile_sorted(s, 0.5), quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25)};
    }
    return out;
}

struct AggregateSummary {
    double median = 0.0;
    double iqr = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double p05 = 0.0;
    double p95 = 0.0;
    double mean = 0.0;
    std::optional<double> ci95_lo;
    std::optional<double> ci95_hi;
    std::optional<double> ws_iqr;
    std::size_t n = 0;
};

/// Across-participant summary; the 95% CI uses Student's t with n - 1 degrees of freedom.
inline AggregateSummary aggregate_across(std::span<const double> values, std::span<const double> within_iqrs = {}) {
    if (values.empty()) throw EmptySetError("nothing to aggregate");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    AggregateSummary a;
    a.n = s.size();
    a.median = quantile_sorted(s, 0.5);
    a.q1 = quantile_sorted(s, 0.25);
    a.q3 = quantile_sorted(s, 0.75);
    a.iqr = a.q3 - a.q1;
    a.p05 = quantile_sorted(s, 0.05);
    a.p95 = quantile_sorted(s, 0.95);
    a.mean = mean(s);
    if (s.size() >= 2) {
        const double sd = sample_sd(s);
        const boost::math::students_t dist(static_cast<double>(s.size() - 1));
        const double half = boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(s.size()));
        a.ci95_lo = a.mean - half;
        a.ci95_hi = a.mean + half;
    }
    if (!within_iqrs.empty()) a.ws_iqr = median(within_iqrs);
    return a;
}

/// Two-stage aggregation: within each participant, then across participant medians.
inline AggregateSummary aggregate_two_stage(const std::map<std::string, std::vector<double>>& values) {
    const auto within = aggregate_within(values);
    std::vector<double> medians, iqrs;
    for (const auto& [p, w] : within) {
        medians.push_back(w.median);
        iqrs.push_back(w.iqr);
    }
    return aggregate_across(medians, iqrs);
}

}  // namespace gaitkit

#endif
