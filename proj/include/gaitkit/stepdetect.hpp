#ifndef GAITKIT_STEPDETECT_HPP
#define GAITKIT_STEPDETECT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaitkit/error.hpp"
#include "gaitkit/frame.hpp"
#include "gaitkit/signal.hpp"
#include "gaitkit/types.hpp"

namespace gaitkit {

struct StrideEstimate {
    double stride_s = 0.0;
    double max_stride_s = 0.0;
};

enum class WaveletAxis { Vertical = 0, AnteroPosterior = 1 };

inline std::string_view to_string(WaveletAxis a) { return a == WaveletAxis::Vertical ? "vertical" : "antero_posterior"; }

struct WaveletParams {
    double scale = 1.0;  ///< samples
    WaveletAxis axis = WaveletAxis::Vertical;
    int sign = 1;

    /// Pseudo-frequency (Hz) the scale corresponds to.
    double center_frequency(double sample_rate) const { return kGaussianDerivativeCenterFrequency * sample_rate / scale; }
};

struct StepDetectConfig {
    PeriodicityConfig periodicity{};
    /// Maximum stride = (1 + tolerance) * estimated stride.
    double stride_tolerance = 0.5;
    double min_event_spacing_s = 0.25;
    /// Final contacts must follow their initial contact within this fraction of the maximum stride.
    double fc_gate_fraction = 0.25;
    /// Extrema weaker than this fraction of the signal's 95th-percentile excursion are ignored.
    double min_relative_amplitude = 0.3;
    double laterality_lowpass_hz = 2.0;
    double laterality_min_rad_s = 0.05;

    std::optional<double> scale_override;
    std::optional<WaveletAxis> axis_override;
    std::optional<int> sign_override;
    /// Cleared when the anatomical frame could not be established.
    bool allow_antero_posterior = true;
};

inline StrideEstimate estimate_stride_duration(const Bout& bout, const StepDetectConfig& cfg = {}) {
    const auto peak = find_stride_peak(bout.channel(0), bout.sample_rate, cfg.periodicity);
    if (!peak) throw NoCadenceError("no stride periodicity in bout starting at " + std::to_string(bout.start_s) + " s");
    return {peak->stride_s, (1.0 + cfg.stride_tolerance) * peak->stride_s};
}

namespace detail {

inline std::vector<double> wavelet_signal(std::span<const double> x, double scale, double sample_rate) {
    const double m = mean(x);
    std::vector<double> centred(x.size());
    std::transform(x.begin(), x.end(), centred.begin(), [m](double v) { return v - m; });
    return cwt_differentiate(cumulative_integral(centred, sample_rate), scale, sample_rate);
}

inline int majority_sign(std::span<const double> x, double scale, double step_s, double sample_rate) {
    const auto s1 = wavelet_signal(x, scale, sample_rate);
    const auto maxima = gaitkit::local_maxima(s1);
    const auto minima = gaitkit::local_minima(s1);
    if (maxima.empty() && minima.empty()) return 1;

    // Heel strikes are the sharpest feature of a step: the extreme type that marks them is the one
    // surrounded by more residual energy above a few step harmonics.
    const double m = mean(x);
    std::vector<double> centred(x.size());
    std::transform(x.begin(), x.end(), centred.begin(), [m](double v) { return v - m; });
    const double cutoff = std::min(3.0 / step_s, 0.4 * sample_rate);
    const auto smooth = lowpass_zero_phase(centred, cutoff, sample_rate);
    std::vector<double> cum(x.size() + 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) cum[i + 1] = cum[i] + (centred[i] - smooth[i]) * (centred[i] - smooth[i]);
    const auto half = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(step_s * sample_rate / 8.0)));
    auto energy = [&](std::size_t i) { return cum[std::min(x.size(), i + half + 1)] - cum[i > half ? i - half : 0]; };

    // each step-long block votes for the extreme type (strongest maximum or strongest minimum of s1)
    // that sits in more residual energy
    const auto step_n = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(step_s * sample_rate)));
    int votes_min = 0, votes_max = 0;
    std::size_t a = 0, b = 0;
    for (std::size_t first = 0; first + step_n <= x.size(); first += step_n) {
        const std::size_t last = first + step_n;
        std::optional<std::size_t> hi, lo;
        for (; a < maxima.size() && maxima[a] < last; ++a)
            if (maxima[a] >= first && (!hi || s1[maxima[a]] > s1[*hi])) hi = maxima[a];
        for (; b < minima.size() && minima[b] < last; ++b)
            if (minima[b] >= first && (!lo || s1[minima[b]] < s1[*lo])) lo = minima[b];
        if (!hi || !lo) continue;
        const double e_max = energy(*hi), e_min = energy(*lo);
        if (e_min > e_max)
            ++votes_min;
        else if (e_max > e_min)
            ++votes_max;
    }
    return votes_min > votes_max ? -1 : 1;
}

}  // namespace detail

/// Chooses the wavelet axis, scale and sign from the bout itself.
inline WaveletParams estimate_wavelet_params(const Bout& bout, const StrideEstimate& stride,
                                             const StepDetectConfig& cfg = {}) {
    if (!(stride.stride_s > 0.0)) throw NoCadenceError("stride estimate missing");
    const double fs = bout.sample_rate;
    const double step_s = 0.5 * stride.stride_s;
    WaveletParams p;

    if (cfg.axis_override) {
        p.axis = *cfg.axis_override;
    } else {
        const double rv = autocorrelation_at(bout.channel(0), fs, step_s);
        const double rap = cfg.allow_antero_posterior ? autocorrelation_at(bout.channel(1), fs, step_s) : -2.0;
        p.axis = rap > rv ? WaveletAxis::AnteroPosterior : WaveletAxis::Vertical;
    }

    // centre frequency of the analyzing function matched to the step frequency
    const double step_hz = 2.0 / stride.stride_s;
    p.scale = cfg.scale_override.value_or(kGaussianDerivativeCenterFrequency * fs / step_hz);

    if (cfg.sign_override) {
        p.sign = *cfg.sign_override >= 0 ? 1 : -1;
    } else {
        p.sign = detail::majority_sign(bout.channel(static_cast<int>(p.axis)), p.scale, step_s, fs);
    }
    return p;
}

/// Initial contacts from extrema of the integrated-then-differentiated axis signal, final
/// contacts from extrema of its second wavelet differentiation. Sides are left Unknown.
inline std::vector<GaitEvent> detect_events(const Bout& bout, const WaveletParams& params,
                                            const StepDetectConfig& cfg = {}) {
    if (!(params.scale > 0.0) || (params.sign != 1 && params.sign != -1))
        throw ContractError("invalid wavelet parameters");
    if (bout.size() < 2 * wavelet_support(params.scale))
        throw InsufficientDataError("bout of " + std::to_string(bout.size()) + " samples is shorter than two wavelet supports");

    const double fs = bout.sample_rate;
    const auto x = bout.channel(static_cast<int>(params.axis));
    const auto s1 = detail::wavelet_signal(x, params.scale, fs);
    const auto s2 = cwt_differentiate(s1, params.scale, fs);

    std::vector<GaitEvent> events;
    auto collect = [&](const std::vector<double>& s, bool want_max, EventKind kind) {
        const double centre = median(s);
        std::vector<double> dev(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) dev[i] = std::abs(s[i] - centre);
        const double floor = cfg.min_relative_amplitude * quantile(dev, 0.95);
        for (auto k : want_max ? local_maxima(s) : local_minima(s)) {
            const double excursion = want_max ? s[k] - centre : centre - s[k];
            if (!(excursion > floor)) continue;
            events.push_back({bout.time_at(k), kind, Side::Unknown, excursion});
        }
    };
    collect(s1, params.sign > 0, EventKind::InitialContact);
    collect(s2, params.sign < 0, EventKind::FinalContact);
    std::stable_sort(events.begin(), events.end(), [](const GaitEvent& a, const GaitEvent& b) { return a.time_s < b.time_s; });
    return events;
}

/// Physiological plausibility gates on a time-sorted event list.
inline std::vector<GaitEvent> quality_check(const std::vector<GaitEvent>& events, const StrideEstimate& stride,
                                            const StepDetectConfig& cfg = {}) {
    auto by_kind = [&](EventKind kind) {
        std::vector<GaitEvent> out;
        for (const auto& e : events)
            if (e.kind == kind) out.push_back(e);
        std::stable_sort(out.begin(), out.end(), [](const GaitEvent& a, const GaitEvent& b) { return a.time_s < b.time_s; });
        return out;
    };
    // too fast: collapse same-kind events closer than the minimum spacing onto the stronger one
    auto collapse = [&](const std::vector<GaitEvent>& in) {
        std::vector<GaitEvent> out;
        for (const auto& e : in) {
            if (!out.empty() && e.time_s - out.back().time_s < cfg.min_event_spacing_s) {
                if (e.strength > out.back().strength) out.back() = e;
                continue;
            }
            out.push_back(e);
        }
        return out;
    };
    auto ics = collapse(by_kind(EventKind::InitialContact));
    auto fcs = collapse(by_kind(EventKind::FinalContact));

    // too slow: gaps beyond the maximum stride break the chain; isolated contacts go
    std::vector<GaitEvent> kept_ics;
    for (std::size_t i = 0; i < ics.size(); ++i) {
        const bool linked_prev = i > 0 && ics[i].time_s - ics[i - 1].time_s <= stride.max_stride_s;
        const bool linked_next = i + 1 < ics.size() && ics[i + 1].time_s - ics[i].time_s <= stride.max_stride_s;
        if (linked_prev || linked_next) kept_ics.push_back(ics[i]);
    }

    // each final contact must follow an initial contact within the gate; at most one per step
    const double gate = cfg.fc_gate_fraction * stride.max_stride_s;
    std::vector<GaitEvent> kept_fcs;
    std::size_t j = 0;
    std::optional<std::size_t> owner;
    for (const auto& fc : fcs) {
        while (j < kept_ics.size() && kept_ics[j].time_s < fc.time_s) ++j;
        if (j == 0) continue;
        const std::size_t ic = j - 1;
        if (fc.time_s - kept_ics[ic].time_s > gate) continue;
        if (owner && *owner == ic) {
            if (fc.strength > kept_fcs.back().strength) kept_fcs.back() = fc;
            continue;
        }
        owner = ic;
        kept_fcs.push_back(fc);
    }

    std::vector<GaitEvent> out = kept_ics;
    out.insert(out.end(), kept_fcs.begin(), kept_fcs.end());
    std::stable_sort(out.begin(), out.end(), [](const GaitEvent& a, const GaitEvent& b) { return a.time_s < b.time_s; });
    return out;
}

/// Initial contacts take their side from the sign of the low-passed vertical angular
/// velocity; a final contact belongs to the foot opposite the initial contact before it.
inline std::vector<GaitEvent> assign_laterality(const std::vector<GaitEvent>& events, const Bout& bout,
                                                const StepDetectConfig& cfg = {}) {
    std::vector<GaitEvent> out = events;
    if (bout.size() == 0) return out;
    auto yaw = bout.gyro_channel(0);
    if (cfg.laterality_lowpass_hz < 0.5 * bout.sample_rate)
        yaw = lowpass_zero_phase(yaw, cfg.laterality_lowpass_hz, bout.sample_rate);

    Side last_ic = Side::Unknown;
    bool seen_ic = false;
    for (auto& e : out) {
        if (e.kind == EventKind::InitialContact) {
            const double k = std::round((e.time_s - bout.start_s) * bout.sample_rate);
            const auto i = static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(bout.size() - 1)));
            const double w = yaw[i];
            e.side = std::abs(w) < cfg.laterality_min_rad_s ? Side::Unknown : (w > 0.0 ? Side::Left : Side::Right);
            last_ic = e.side;
            seen_ic = true;
        } else {
            e.side = !seen_ic || last_ic == Side::Unknown ? Side::Unknown
                                                           : (last_ic == Side::Left ? Side::Right : Side::Left);
        }
    }
    return out;
}

struct BoutDetection {
    StrideEstimate stride;
    WaveletParams params;
    std::vector<GaitEvent> events;
};

/// Full adaptive step detection on one bout already expressed in the anatomical frame.
inline BoutDetection detect_bout(const Bout& anatomical, const StepDetectConfig& cfg = {}) {
    BoutDetection d;
    d.stride = estimate_stride_duration(anatomical, cfg);
    d.params = estimate_wavelet_params(anatomical, d.stride, cfg);
    const auto raw = detect_events(anatomical, d.params, cfg);
    d.events = assign_laterality(quality_check(raw, d.stride, cfg), anatomical, cfg);
    return d;
}

}  // namespace gaitkit

#endif
