#ifndef GAITKIT_SYNTH_HPP
#define GAITKIT_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gaitkit/error.hpp"
#include "gaitkit/types.hpp"

namespace gaitkit {

struct SynthPhase {
    enum class Kind { Walk, Rest, Turn };
    Kind kind = Kind::Walk;
    double duration_s = 0.0;
    double angle_deg = 0.0;  ///< turns only; positive is counter-clockwise seen from above

    static SynthPhase walk(double d) { return {Kind::Walk, d, 0.0}; }
    static SynthPhase rest(double d) { return {Kind::Rest, d, 0.0}; }
    static SynthPhase turn(double angle, double d) { return {Kind::Turn, d, angle}; }
};

/// Waveform recipe for a synthetic trunk-worn IMU.
///
/// Body axes are x forward, y left, z up. During gait the vertical channel is a cosine at
/// step frequency peaking at every initial contact, a weaker stride-frequency cosine that
/// alternates left/right amplitude, and a narrow impact pulse at each initial contact. The
/// forward channel oscillates at step frequency with a stride component; the lateral channel
/// is quiet. Yaw rate peaks at each initial contact with a sign encoding the foot (positive
/// for left). Consecutive walk/turn phases share one gait clock.
struct SynthConfig {
    double duration_s = 0.0;  ///< 0 = sum of the script; otherwise must equal it
    double sample_rate_hz = 50.0;
    double stride_s = 1.2;
    double ic_phase = 0.25;  ///< first initial contact after gait onset, fraction of a stride
    double fc_phase = 0.12;  ///< final contact delay after its initial contact, fraction of a stride
    double vertical_amp = 2.0;
    double stride_harmonic = 0.15;  ///< relative amplitude of the stride-frequency vertical term
    double impact_amp = 1.5;
    double impact_width_s = 0.02;
    double ap_amp = 1.0;
    double yaw_amp = 0.2;  ///< rad/s
    double noise_sigma = 0.0;       ///< accelerometer, m/s^2 per axis
    double gyro_noise_sigma = 0.0;  ///< rad/s per axis
    Quaternion sensor_rotation = Quaternion::Identity();  ///< readings are this rotation applied to world-frame vectors
    std::vector<SynthPhase> script{SynthPhase::rest(3.0), SynthPhase::walk(10.0), SynthPhase::rest(3.0)};
    std::uint64_t seed = 1;
    Side first_side = Side::Left;
    /// Ground-truth segment classification rules.
    double boundary_margin_s = 2.0;
    double rest_split_s = 2.0;
    double min_bout_s = 2.0;
    double sharp_turn_deg = 90.0;

    double script_duration() const {
        double d = 0.0;
        for (const auto& p : script) d += p.duration_s;
        return d;
    }

    void validate() const {
        if (!(sample_rate_hz > 0.0)) throw ConfigError("sample_rate_hz must be positive");
        if (!(stride_s >= 0.4 && stride_s <= 2.25)) throw ConfigError("stride_s must lie in [0.4, 2.25] s");
        if (!(fc_phase > 0.0 && fc_phase < 0.25 * 1.5)) throw ConfigError("fc_phase must lie in (0, 0.375)");
        if (!(ic_phase >= 0.0 && ic_phase < 0.5)) throw ConfigError("ic_phase must lie in [0, 0.5)");
        if (noise_sigma < 0.0 || gyro_noise_sigma < 0.0) throw ConfigError("noise levels must be non-negative");
        if (impact_width_s <= 0.0) throw ConfigError("impact_width_s must be positive");
        if (script.empty()) throw ConfigError("script must contain at least one phase");
        for (const auto& p : script)
            if (!(p.duration_s > 0.0)) throw ConfigError("every script phase needs a positive duration");
        if (duration_s != 0.0 && std::abs(duration_s - script_duration()) > 1e-9)
            throw ConfigError("script phases (" + std::to_string(script_duration()) + " s) do not tile duration_s (" +
                              std::to_string(duration_s) + " s)");
        if (std::abs(sensor_rotation.norm() - 1.0) > 1e-6) throw ConfigError("sensor_rotation must be a unit quaternion");
    }
};

struct SynthOutput {
    ImuRecording recording;
    std::vector<GaitEvent> events;   ///< time-sorted, ICs and FCs
    std::vector<Segment> segments;
};

namespace detail {

inline double smoothstep(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

struct GaitRun {
    double start, end;
};

}  // namespace detail

inline SynthOutput generate(const SynthConfig& cfg) {
    cfg.validate();
    const double total = cfg.script_duration();
    const double fs = cfg.sample_rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(total * fs));
    const double step = 0.5 * cfg.stride_s;
    const double side0 = cfg.first_side == Side::Right ? -1.0 : 1.0;

    // gait runs: maximal stretches of walk/turn phases
    std::vector<detail::GaitRun> runs;
    struct TurnSpan {
        double start, end, rate;
    };
    std::vector<TurnSpan> turns;
    {
        double t = 0.0;
        bool in_run = false;
        for (const auto& p : cfg.script) {
            if (p.kind == SynthPhase::Kind::Rest) {
                in_run = false;
            } else {
                if (!in_run) runs.push_back({t, t + p.duration_s});
                runs.back().end = t + p.duration_s;
                in_run = true;
                if (p.kind == SynthPhase::Kind::Turn) turns.push_back({t, t + p.duration_s, deg2rad(p.angle_deg) / p.duration_s});
            }
            t += p.duration_s;
        }
    }

    SynthOutput out;
    struct RunEvents {
        std::vector<double> ics;
    };
    std::vector<RunEvents> run_events(runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& run = runs[r];
        for (int k = 0;; ++k) {
            const double ic = run.start + cfg.ic_phase * cfg.stride_s + k * step;
            if (ic > run.end - step / 2.0 + 1e-9) break;
            run_events[r].ics.push_back(ic);
            const Side side = (k % 2 == 0) == (side0 > 0) ? Side::Left : Side::Right;
            out.events.push_back({ic, EventKind::InitialContact, side, 0.0});
            const double fc = ic + cfg.fc_phase * cfg.stride_s;
            if (fc < run.end) out.events.push_back({fc, EventKind::FinalContact, side == Side::Left ? Side::Right : Side::Left, 0.0});
        }
    }
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const GaitEvent& a, const GaitEvent& b) { return a.time_s < b.time_s; });

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    auto& rec = out.recording;
    rec.sample_rate = fs;
    rec.device_id = "synth";
    rec.timestamps.resize(n);
    rec.accel.resize(n);
    rec.gyro.resize(n);
    const double w2 = 2.0 * cfg.impact_width_s * cfg.impact_width_s;

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        Vec3 a(0.0, 0.0, kGravity);
        Vec3 g = Vec3::Zero();
        for (std::size_t r = 0; r < runs.size(); ++r) {
            const auto& run = runs[r];
            if (t < run.start || t >= run.end) continue;
            const double env = detail::smoothstep((t - run.start) / (0.5 * step)) * detail::smoothstep((run.end - t) / (0.5 * step));
            const double first_ic = run.start + cfg.ic_phase * cfg.stride_s;
            const double phase = (t - first_ic) / step;  // in steps, integer at each IC
            double vertical = cfg.vertical_amp * (std::cos(2.0 * kPi * phase) + cfg.stride_harmonic * std::cos(kPi * phase));
            for (double ic : run_events[r].ics) {
                const double d = t - ic;
                if (std::abs(d) < 6.0 * cfg.impact_width_s) vertical += cfg.impact_amp * std::exp(-d * d / w2);
            }
            a.z() += env * vertical;
            a.x() += env * cfg.ap_amp * (std::sin(2.0 * kPi * phase) + 0.5 * std::sin(kPi * phase));
            g.z() += env * side0 * cfg.yaw_amp * std::cos(kPi * phase);
        }
        for (const auto& turn : turns)
            if (t >= turn.start && t < turn.end) g.z() += turn.rate;

        rec.timestamps[i] = t;
        rec.accel[i] = cfg.sensor_rotation * a;
        rec.gyro[i] = cfg.sensor_rotation * g;
    }
    // noise drawn in a fixed order after the clean signal so it never depends on the script
    if (cfg.noise_sigma > 0.0 || cfg.gyro_noise_sigma > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = 0; k < 3; ++k) rec.accel[i][k] += cfg.noise_sigma * unit(rng);
            for (int k = 0; k < 3; ++k) rec.gyro[i][k] += cfg.gyro_noise_sigma * unit(rng);
        }
    }

    // ground-truth segments
    double t = 0.0;
    auto push = [&](Segment s) {
        if (!out.segments.empty() && out.segments.back().kind == s.kind && s.kind == SegmentKind::GaitBout)
            out.segments.back().end_s = s.end_s;
        else
            out.segments.push_back(s);
    };
    for (std::size_t k = 0; k < cfg.script.size(); ++k) {
        const auto& p = cfg.script[k];
        const double a = t, b = t + p.duration_s;
        t = b;
        if (p.kind == SynthPhase::Kind::Rest) {
            SegmentKind kind;
            if (a <= cfg.boundary_margin_s + 1e-9 || total - b <= cfg.boundary_margin_s + 1e-9)
                kind = SegmentKind::Boundary;
            else
                kind = p.duration_s < cfg.rest_split_s ? SegmentKind::ShortRest : SegmentKind::LongRest;
            out.segments.push_back({a, b, kind});
        } else if (p.kind == SynthPhase::Kind::Turn && std::abs(p.angle_deg) >= cfg.sharp_turn_deg) {
            out.segments.push_back({a, b, SegmentKind::SharpTurn});
        } else {
            push({a, b, SegmentKind::GaitBout});
        }
    }
    for (auto& s : out.segments)
        if (s.kind == SegmentKind::GaitBout && s.duration() < cfg.min_bout_s) s.kind = SegmentKind::Unknown;
    return out;
}

}  // namespace gaitkit

#endif
