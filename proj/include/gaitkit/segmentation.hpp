#ifndef GAITKIT_SEGMENTATION_HPP
#define GAITKIT_SEGMENTATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gaitkit/error.hpp"
#include "gaitkit/signal.hpp"
#include "gaitkit/types.hpp"

namespace gaitkit {

struct SegmentationConfig {
    double window_s = 0.6;
    double accel_ref = kGravity;
    double accel_tol = 0.10;
    double gyro_thresh = 0.6;   ///< rad/s, valid 0.2..0.6
    double std_thresh = 0.2;    ///< m/s^2, valid 0.05..0.4
    double merge_gap_s = 1.0;
    double rest_split_s = 2.0;
    double min_bout_s = 2.0;
    double boundary_margin_s = 2.0;
    double sharp_turn_deg = 90.0;

    // turn detector
    double turn_lowpass_hz = 1.5;
    double turn_peak_dps = 15.0;
    double turn_edge_dps = 5.0;
    double turn_merge_s = 0.05;

    // gait verification by autocorrelation
    PeriodicityConfig periodicity{};

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be strictly positive");
        };
        positive(window_s, "window_s");
        positive(accel_ref, "accel_ref");
        positive(accel_tol, "accel_tol");
        positive(gyro_thresh, "gyro_thresh");
        positive(std_thresh, "std_thresh");
        positive(merge_gap_s, "merge_gap_s");
        positive(rest_split_s, "rest_split_s");
        positive(min_bout_s, "min_bout_s");
        positive(boundary_margin_s, "boundary_margin_s");
        positive(sharp_turn_deg, "sharp_turn_deg");
        positive(turn_lowpass_hz, "turn_lowpass_hz");
        positive(turn_peak_dps, "turn_peak_dps");
        positive(turn_edge_dps, "turn_edge_dps");
        positive(turn_merge_s, "turn_merge_s");
        if (gyro_thresh < 0.2 || gyro_thresh > 0.6) throw ConfigError("gyro_thresh must lie in [0.2, 0.6] rad/s");
        if (std_thresh < 0.05 || std_thresh > 0.4) throw ConfigError("std_thresh must lie in [0.05, 0.4] m/s^2");
        if (accel_tol >= 1.0) throw ConfigError("accel_tol must be below 1");
        if (turn_edge_dps > turn_peak_dps) throw ConfigError("turn_edge_dps must not exceed turn_peak_dps");
    }
};

struct Window {
    std::size_t first = 0;  ///< sample index
    std::size_t count = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    bool moving = false;
};

/// Non-overlapping windows with moving/non-moving labels. `span_end_s` is where the kept
/// windows stop; a tail shorter than half a window is dropped.
struct WindowLabels {
    std::vector<Window> windows;
    double span_start_s = 0.0;
    double span_end_s = 0.0;
    double recording_end_s = 0.0;
};

inline WindowLabels classify_windows(const GravityAlignedRecording& rec, const SegmentationConfig& cfg = {}) {
    cfg.validate();
    const auto w = static_cast<std::size_t>(std::lround(cfg.window_s * rec.sample_rate));
    if (w < 2) throw ContractError("segmentation window must hold at least 2 samples");
    const auto min_tail = static_cast<std::size_t>(std::ceil(0.5 * cfg.window_s * rec.sample_rate - 1e-9));

    WindowLabels out;
    out.span_start_s = rec.start();
    out.recording_end_s = rec.end();
    const double dt = 1.0 / rec.sample_rate;
    const double lo = cfg.accel_ref * (1.0 - cfg.accel_tol);
    const double hi = cfg.accel_ref * (1.0 + cfg.accel_tol);

    for (std::size_t first = 0; first < rec.size(); first += w) {
        const std::size_t count = std::min(w, rec.size() - first);
        if (count < w && (count < min_tail || count < 2)) break;
        double acc_mag = 0.0, gyro_mag = 0.0;
        Vec3 m = Vec3::Zero();
        for (std::size_t i = first; i < first + count; ++i) {
            acc_mag += rec.accel[i].norm();
            gyro_mag += rec.gyro[i].norm();
            m += rec.accel[i];
        }
        const auto n = static_cast<double>(count);
        acc_mag /= n;
        gyro_mag /= n;
        m /= n;
        Vec3 var = Vec3::Zero();
        for (std::size_t i = first; i < first + count; ++i) var += (rec.accel[i] - m).cwiseAbs2();
        var /= (n - 1.0);
        const double combined_sd = std::sqrt(var.sum());

        Window win;
        win.first = first;
        win.count = count;
        win.start_s = rec.start() + static_cast<double>(first) * dt;
        win.end_s = rec.start() + static_cast<double>(first + count) * dt;
        const bool still = acc_mag >= lo && acc_mag <= hi && gyro_mag < cfg.gyro_thresh && combined_sd < cfg.std_thresh;
        win.moving = !still;
        out.windows.push_back(win);
    }
    out.span_end_s = out.windows.empty() ? out.span_start_s : out.windows.back().end_s;
    return out;
}

/// Turns the window labels into rests, boundaries, unknown movement and gait-bout candidates.
inline std::vector<Segment> segment(const WindowLabels& labels, const SegmentationConfig& cfg = {}) {
    cfg.validate();
    struct Run {
        double start, end;
        bool moving;
    };
    std::vector<Run> runs;
    for (const auto& w : labels.windows) {
        if (!runs.empty() && runs.back().moving == w.moving)
            runs.back().end = w.end_s;
        else
            runs.push_back({w.start_s, w.end_s, w.moving});
    }

    // absorb short movement between two still runs (gap measured edge to edge)
    std::vector<Run> merged;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const Run& r = runs[i];
        if (r.moving && !merged.empty() && !merged.back().moving && i + 1 < runs.size() &&
            r.end - r.start < cfg.merge_gap_s) {
            merged.back().end = runs[i + 1].end;
            ++i;
            continue;
        }
        if (!merged.empty() && merged.back().moving == r.moving)
            merged.back().end = r.end;
        else
            merged.push_back(r);
    }

    std::vector<Segment> out;
    const double rec_start = labels.span_start_s;
    const double rec_end = labels.recording_end_s;
    for (const auto& r : merged) {
        Segment s{r.start, r.end, SegmentKind::Unknown};
        if (r.moving) {
            s.kind = r.end - r.start >= cfg.min_bout_s - 1e-9 ? SegmentKind::GaitBout : SegmentKind::Unknown;
        } else if (r.start - rec_start <= cfg.boundary_margin_s + 1e-9 || rec_end - r.end <= cfg.boundary_margin_s + 1e-9) {
            s.kind = SegmentKind::Boundary;
        } else {
            s.kind = r.end - r.start < cfg.rest_split_s - 1e-9 ? SegmentKind::ShortRest : SegmentKind::LongRest;
        }
        out.push_back(s);
    }
    return out;
}

inline std::vector<Segment> segment(const GravityAlignedRecording& rec, const SegmentationConfig& cfg = {}) {
    return segment(classify_windows(rec, cfg), cfg);
}

struct Turn {
    double start_s = 0.0;
    double end_s = 0.0;
    double angle_deg = 0.0;  ///< signed, counter-clockwise about the vertical positive
    bool sharp = false;
};

/// Threshold-and-expand turn detection on the low-passed vertical angular velocity.
inline std::vector<Turn> detect_turns(const GravityAlignedRecording& rec, const SegmentationConfig& cfg = {}) {
    cfg.validate();
    const std::size_t n = rec.size();
    if (n < 2) return {};
    std::vector<double> yaw(n);
    for (std::size_t i = 0; i < n; ++i) yaw[i] = rec.gyro[i][0];
    yaw = lowpass_zero_phase(yaw, cfg.turn_lowpass_hz, rec.sample_rate);

    const double peak = deg2rad(cfg.turn_peak_dps);
    const double edge = deg2rad(cfg.turn_edge_dps);
    struct Span {
        std::size_t lo, hi;  // inclusive
    };
    std::vector<Span> spans;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(yaw[i]) <= peak) continue;
        std::size_t lo = i, hi = i;
        while (lo > 0 && std::abs(yaw[lo - 1]) >= edge) --lo;
        while (hi + 1 < n && std::abs(yaw[hi + 1]) >= edge) ++hi;
        spans.push_back({lo, hi});
        i = hi;
    }

    const double dt = 1.0 / rec.sample_rate;
    std::vector<Span> merged;
    for (const auto& s : spans) {
        if (!merged.empty() && static_cast<double>(s.lo - merged.back().hi) * dt < cfg.turn_merge_s)
            merged.back().hi = s.hi;
        else
            merged.push_back(s);
    }

    std::vector<Turn> out;
    for (const auto& s : merged) {
        double angle = 0.0;
        for (std::size_t i = s.lo; i <= s.hi; ++i) angle += yaw[i] * dt;
        Turn t;
        t.start_s = rec.start() + static_cast<double>(s.lo) * dt;
        t.end_s = rec.start() + static_cast<double>(s.hi + 1) * dt;
        t.angle_deg = rad2deg(angle);
        t.sharp = std::abs(t.angle_deg) >= cfg.sharp_turn_deg;
        out.push_back(t);
    }
    return out;
}

/// Outcome of the autocorrelation check on a bout's vertical acceleration.
struct GaitCheck {
    bool is_gait = false;
    double stride_lag_s = 0.0;
    double coefficient = 0.0;
};

inline GaitCheck check_gait(std::span<const double> vertical, double sample_rate, const PeriodicityConfig& cfg = {}) {
    const auto peak = find_stride_peak(vertical, sample_rate, cfg);
    if (!peak) return {};
    return {true, peak->stride_s, peak->coefficient};
}

inline bool verify_gait(std::span<const double> vertical, double sample_rate, const PeriodicityConfig& cfg = {}) {
    return check_gait(vertical, sample_rate, cfg).is_gait;
}

/// Sample index range [first, last) of a time interval.
inline std::pair<std::size_t, std::size_t> sample_range(const GravityAlignedRecording& rec, double start_s, double end_s) {
    const double fs = rec.sample_rate;
    auto idx = [&](double t) {
        const double k = std::round((t - rec.start()) * fs);
        return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(rec.size())));
    };
    return {idx(start_s), idx(end_s)};
}

inline std::vector<double> vertical_accel(const GravityAlignedRecording& rec, double start_s, double end_s) {
    const auto [a, b] = sample_range(rec, start_s, end_s);
    std::vector<double> v;
    v.reserve(b - a);
    for (std::size_t i = a; i < b; ++i) v.push_back(rec.accel[i][0]);
    return v;
}

/// Gait-bout candidates cut at sharp turns, then filtered by duration and periodicity.
inline std::vector<Segment> eligible_bouts(const GravityAlignedRecording& rec, const std::vector<Segment>& segments,
                                           const std::vector<Turn>& turns, const SegmentationConfig& cfg = {}) {
    cfg.validate();
    std::vector<Segment> out;
    for (const auto& seg : segments) {
        if (seg.kind != SegmentKind::GaitBout) continue;
        std::vector<std::pair<double, double>> pieces{{seg.start_s, seg.end_s}};
        for (const auto& t : turns) {
            if (!t.sharp) continue;
            std::vector<std::pair<double, double>> next;
            for (auto [a, b] : pieces) {
                if (t.end_s <= a || t.start_s >= b) {
                    next.emplace_back(a, b);
                    continue;
                }
                if (t.start_s > a) next.emplace_back(a, t.start_s);
                if (t.end_s < b) next.emplace_back(t.end_s, b);
            }
            pieces = std::move(next);
        }
        for (auto [a, b] : pieces) {
            if (b - a < cfg.min_bout_s - 1e-9) continue;
            if (!verify_gait(vertical_accel(rec, a, b), rec.sample_rate, cfg.periodicity)) continue;
            out.push_back({a, b, SegmentKind::GaitBout});
        }
    }
    return out;
}

/// Partition of the recording with every kind resolved: bout candidates are split into
/// eligible gait bouts, sharp-turn spans and leftover unknown movement.
inline std::vector<Segment> refine_segments(const std::vector<Segment>& segments, const std::vector<Turn>& turns,
                                            const std::vector<Segment>& eligible) {
    std::vector<Segment> out;
    for (const auto& seg : segments) {
        if (seg.kind != SegmentKind::GaitBout) {
            out.push_back(seg);
            continue;
        }
        std::vector<Segment> marks;
        for (const auto& e : eligible)
            if (e.start_s >= seg.start_s - 1e-9 && e.end_s <= seg.end_s + 1e-9) marks.push_back(e);
        for (const auto& t : turns) {
            if (!t.sharp) continue;
            const double a = std::max(t.start_s, seg.start_s), b = std::min(t.end_s, seg.end_s);
            if (b > a) marks.push_back({a, b, SegmentKind::SharpTurn});
        }
        std::sort(marks.begin(), marks.end(), [](const Segment& x, const Segment& y) { return x.start_s < y.start_s; });
        double cursor = seg.start_s;
        for (const auto& m : marks) {
            const double a = std::max(m.start_s, cursor);
            if (m.end_s <= a) continue;
            if (a > cursor + 1e-9) out.push_back({cursor, a, SegmentKind::Unknown});
            out.push_back({a, m.end_s, m.kind});
            cursor = m.end_s;
        }
        if (seg.end_s > cursor + 1e-9) out.push_back({cursor, seg.end_s, SegmentKind::Unknown});
    }
    return out;
}

}  // namespace gaitkit

#endif
