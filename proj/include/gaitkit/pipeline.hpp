#ifndef GAITKIT_PIPELINE_HPP
#define GAITKIT_PIPELINE_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "gaitkit/frame.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/orientation.hpp"
#include "gaitkit/segmentation.hpp"
#include "gaitkit/stepdetect.hpp"
#include "gaitkit/types.hpp"

namespace gaitkit {

/// Every tunable constant of the processing chain.
struct PipelineConfig {
    double lowpass_cutoff_hz = 17.0;
    double madgwick_beta = kDefaultMadgwickBeta;
    /// Orientation estimates this long after the start are not trusted when the recording
    /// starts in motion.
    double convergence_guard_s = 2.0;
    SegmentationConfig segmentation{};
    FrameConfig frame{};
    StepDetectConfig step{};
    double match_window_s = 0.5;

    void validate() const {
        if (!(lowpass_cutoff_hz > 0.0)) throw ConfigError("lowpass_cutoff_hz must be positive");
        if (!(madgwick_beta > 0.0 && madgwick_beta <= 1.0)) throw ConfigError("madgwick_beta must lie in (0, 1]");
        if (convergence_guard_s < 0.0) throw ConfigError("convergence_guard_s must be non-negative");
        if (!(match_window_s > 0.0)) throw ConfigError("match_window_s must be positive");
        if (!(frame.min_duration_s > 0.0)) throw ConfigError("frame_min_duration_s must be positive");
        if (!(frame.min_eigen_ratio >= 1.0)) throw ConfigError("pca_min_eigen_ratio must be at least 1");
        if (!(step.stride_tolerance > 0.0)) throw ConfigError("stride_tolerance must be positive");
        if (!(step.min_event_spacing_s > 0.0)) throw ConfigError("min_event_spacing_s must be positive");
        if (!(step.fc_gate_fraction > 0.0 && step.fc_gate_fraction <= 1.0))
            throw ConfigError("fc_gate_fraction must lie in (0, 1]");
        if (!(step.min_relative_amplitude >= 0.0 && step.min_relative_amplitude < 1.0))
            throw ConfigError("min_relative_amplitude must lie in [0, 1)");
        if (!(step.laterality_lowpass_hz > 0.0)) throw ConfigError("laterality_lowpass_hz must be positive");
        if (step.laterality_min_rad_s < 0.0) throw ConfigError("laterality_min_rad_s must be non-negative");
        if (step.scale_override && !(*step.scale_override > 0.0)) throw ConfigError("wavelet_scale must be positive");
        const auto& p = step.periodicity;
        if (!(p.min_stride_s > 0.0 && p.max_stride_s > p.min_stride_s)) throw ConfigError("stride band is empty");
        if (!(p.min_coefficient > 0.0 && p.min_coefficient < 1.0)) throw ConfigError("gait_min_coefficient must lie in (0, 1)");
        segmentation.validate();
    }
};

struct BoutReport {
    Segment bout;
    std::optional<AnatomicalFrame> frame;
    bool frame_verified = false;
    std::optional<BoutDetection> detection;
    std::string skipped;  ///< why no events were produced, empty otherwise
};

struct PipelineResult {
    GravityAlignedRecording aligned;
    WindowLabels windows;
    std::vector<Segment> segments;  ///< partition from the moving/non-moving labels
    std::vector<Turn> turns;
    std::vector<Segment> eligible;  ///< bouts that are processed, after the convergence guard
    std::vector<Segment> refined;   ///< partition with sharp turns and gait bouts resolved, before the guard
    std::vector<BoutReport> bouts;
    std::vector<GaitEvent> events;
};

/// Runs one bout through frame alignment and adaptive step detection.
inline BoutReport process_bout(const GravityAlignedRecording& aligned, const Segment& bout_segment,
                               const PipelineConfig& cfg) {
    BoutReport report;
    report.bout = bout_segment;
    const Bout bout = extract_bout(aligned, bout_segment.start_s, bout_segment.end_s);
    StepDetectConfig step = cfg.step;
    Bout anatomical = bout;
    try {
        report.frame = estimate_frame(bout, cfg.frame);
        anatomical = to_anatomical(bout, *report.frame);
        report.frame_verified = verify_frame(anatomical, cfg.step.periodicity, cfg.frame);
    } catch (const InsufficientDataError&) {
    } catch (const AmbiguousDirectionError&) {
    }
    // without a trustworthy direction of travel only the vertical axis is usable
    if (!report.frame_verified) step.allow_antero_posterior = false;
    try {
        report.detection = detect_bout(anatomical, step);
    } catch (const NoCadenceError& e) {
        report.skipped = e.what();
    } catch (const InsufficientDataError& e) {
        report.skipped = e.what();
    }
    return report;
}

inline PipelineResult run_pipeline(const ImuRecording& raw, const PipelineConfig& cfg = {}) {
    cfg.validate();
    if (raw.size() < 2) throw InsufficientDataError("recording has fewer than 2 samples");
    const ImuRecording uniform = raw.sample_rate ? raw : regularize(raw);
    const ImuRecording filtered = lowpass_accel(uniform, cfg.lowpass_cutoff_hz);

    PipelineResult res;
    res.aligned = align_with_gravity(filtered, estimate_orientation(filtered, cfg.madgwick_beta));
    res.windows = classify_windows(res.aligned, cfg.segmentation);
    res.segments = segment(res.windows, cfg.segmentation);
    res.turns = detect_turns(res.aligned, cfg.segmentation);

    // The refined partition describes the activity; the convergence guard only limits which
    // stretches are processed, so it is applied afterwards.
    res.eligible = eligible_bouts(res.aligned, res.segments, res.turns, cfg.segmentation);
    res.refined = refine_segments(res.segments, res.turns, res.eligible);
    if (!res.windows.windows.empty() && res.windows.windows.front().moving && cfg.convergence_guard_s > 0.0) {
        const double guard = res.aligned.start() + cfg.convergence_guard_s;
        auto candidates = res.segments;
        for (auto& s : candidates)
            if (s.kind == SegmentKind::GaitBout && s.start_s < guard) s.start_s = std::min(guard, s.end_s);
        res.eligible = eligible_bouts(res.aligned, candidates, res.turns, cfg.segmentation);
    }

    for (const auto& b : res.eligible) {
        auto report = process_bout(res.aligned, b, cfg);
        if (report.detection)
            res.events.insert(res.events.end(), report.detection->events.begin(), report.detection->events.end());
        res.bouts.push_back(std::move(report));
    }
    std::stable_sort(res.events.begin(), res.events.end(),
                     [](const GaitEvent& a, const GaitEvent& b) { return a.time_s < b.time_s; });
    return res;
}

}  // namespace gaitkit

#endif
