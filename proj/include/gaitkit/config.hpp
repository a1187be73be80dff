#ifndef GAITKIT_CONFIG_HPP
#define GAITKIT_CONFIG_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gaitkit/error.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/pipeline.hpp"
#include "gaitkit/synth.hpp"

namespace gaitkit::config {

// Files are `key = value` lines. `#` starts a comment; blank lines are ignored.

struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

inline std::vector<Entry> parse_entries(std::istream& in) {
    std::vector<Entry> out;
    std::set<std::string, std::less<>> seen;
    std::string raw;
    std::size_t n = 0;
    while (std::getline(in, raw)) {
        ++n;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = csv::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected `key = value`", n);
        Entry e{std::string(csv::trim(line.substr(0, eq))), std::string(csv::trim(line.substr(eq + 1))), n};
        if (e.key.empty()) throw ParseError("missing key before '='", n);
        if (!seen.insert(e.key).second) throw ParseError("duplicate key '" + e.key + "'", n);
        out.push_back(std::move(e));
    }
    return out;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class Config>
struct Field {
    std::string_view key;
    std::string_view help;
    std::function<std::string(const Config&)> get;
    std::function<void(Config&, std::string_view, std::size_t)> set;
};

namespace detail {

template <class Config>
Field<Config> number(std::string_view key, std::string_view help, double& (*ref)(Config&)) {
    return {key, help, [ref](const Config& c) { return format_double(ref(const_cast<Config&>(c))); },
            [ref](Config& c, std::string_view v, std::size_t line) { ref(c) = csv::parse_double(v, line); }};
}

inline std::uint64_t parse_seed(std::string_view v, std::size_t line) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw ParseError("invalid seed '" + std::string(v) + "'", line);
    return out;
}

}  // namespace detail

template <class Config>
Config parse(std::istream& in, const std::vector<Field<Config>>& fields, Config cfg = {}) {
    for (const auto& e : parse_entries(in)) {
        const Field<Config>* f = nullptr;
        for (const auto& candidate : fields)
            if (candidate.key == e.key) f = &candidate;
        if (!f) throw ParseError("unknown key '" + e.key + "'", e.line);
        f->set(cfg, e.value, e.line);
    }
    cfg.validate();
    return cfg;
}

template <class Config>
void write(std::ostream& out, const Config& cfg, const std::vector<Field<Config>>& fields) {
    for (const auto& f : fields) {
        out << "# " << f.help << '\n';
        out << f.key << " = " << f.get(cfg) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Pipeline

inline const std::vector<Field<PipelineConfig>>& pipeline_fields() {
    using C = PipelineConfig;
    using detail::number;
    static const std::vector<Field<C>> fields = [] {
        std::vector<Field<C>> f;
        f.push_back(number<C>("lowpass_cutoff_hz", "accelerometer low-pass cutoff (Hz)", [](C& c) -> double& { return c.lowpass_cutoff_hz; }));
        f.push_back(number<C>("madgwick_beta", "orientation filter gain", [](C& c) -> double& { return c.madgwick_beta; }));
        f.push_back(number<C>("convergence_guard_s", "ignore bouts this long after a start in motion (s)", [](C& c) -> double& { return c.convergence_guard_s; }));
        f.push_back(number<C>("window_s", "activity window length (s)", [](C& c) -> double& { return c.segmentation.window_s; }));
        f.push_back(number<C>("accel_ref", "expected acceleration magnitude at rest (m/s^2)", [](C& c) -> double& { return c.segmentation.accel_ref; }));
        f.push_back(number<C>("accel_tol", "relative tolerance on the mean acceleration magnitude", [](C& c) -> double& { return c.segmentation.accel_tol; }));
        f.push_back(number<C>("gyro_thresh", "mean angular speed below which a window may be still (rad/s, 0.2..0.6)", [](C& c) -> double& { return c.segmentation.gyro_thresh; }));
        f.push_back(number<C>("std_thresh", "combined acceleration SD below which a window may be still (m/s^2, 0.05..0.4)", [](C& c) -> double& { return c.segmentation.std_thresh; }));
        f.push_back(number<C>("merge_gap_s", "still intervals closer than this are merged (s)", [](C& c) -> double& { return c.segmentation.merge_gap_s; }));
        f.push_back(number<C>("rest_split_s", "rests shorter than this are short rests (s)", [](C& c) -> double& { return c.segmentation.rest_split_s; }));
        f.push_back(number<C>("min_bout_s", "shortest gait bout (s)", [](C& c) -> double& { return c.segmentation.min_bout_s; }));
        f.push_back(number<C>("boundary_margin_s", "still intervals this close to either end are boundaries (s)", [](C& c) -> double& { return c.segmentation.boundary_margin_s; }));
        f.push_back(number<C>("sharp_turn_deg", "turns at least this large split bouts (deg)", [](C& c) -> double& { return c.segmentation.sharp_turn_deg; }));
        f.push_back(number<C>("turn_lowpass_hz", "yaw-rate low-pass cutoff for turn detection (Hz)", [](C& c) -> double& { return c.segmentation.turn_lowpass_hz; }));
        f.push_back(number<C>("turn_peak_dps", "yaw rate that seeds a turn (deg/s)", [](C& c) -> double& { return c.segmentation.turn_peak_dps; }));
        f.push_back(number<C>("turn_edge_dps", "yaw rate at which a turn ends (deg/s)", [](C& c) -> double& { return c.segmentation.turn_edge_dps; }));
        f.push_back(number<C>("turn_merge_s", "turns separated by less than this are merged (s)", [](C& c) -> double& { return c.segmentation.turn_merge_s; }));
        // the periodicity band is shared by gait verification, frame verification and stride estimation
        auto shared = [](std::string_view key, std::string_view help, double PeriodicityConfig::*m) {
            return Field<C>{key, help, [m](const C& c) { return format_double(c.segmentation.periodicity.*m); },
                            [m](C& c, std::string_view v, std::size_t line) {
                                const double x = csv::parse_double(v, line);
                                c.segmentation.periodicity.*m = x;
                                c.step.periodicity.*m = x;
                            }};
        };
        f.push_back(shared("gait_min_stride_s", "shortest accepted stride (s)", &PeriodicityConfig::min_stride_s));
        f.push_back(shared("gait_max_stride_s", "longest accepted stride (s)", &PeriodicityConfig::max_stride_s));
        f.push_back(shared("gait_min_coefficient", "smallest autocorrelation accepted as gait", &PeriodicityConfig::min_coefficient));
        f.push_back(shared("step_peak_fraction", "a step peak must reach this fraction of the best peak", &PeriodicityConfig::step_peak_fraction));
        f.push_back(number<C>("frame_min_duration_s", "shortest bout used to estimate the walking direction (s)", [](C& c) -> double& { return c.frame.min_duration_s; }));
        f.push_back(number<C>("pca_min_eigen_ratio", "smallest ratio of horizontal variances for a usable direction", [](C& c) -> double& { return c.frame.min_eigen_ratio; }));
        f.push_back(number<C>("stride_tolerance", "maximum stride = (1 + tolerance) * estimated stride", [](C& c) -> double& { return c.step.stride_tolerance; }));
        f.push_back(number<C>("min_event_spacing_s", "same-kind events closer than this are collapsed (s)", [](C& c) -> double& { return c.step.min_event_spacing_s; }));
        f.push_back(number<C>("fc_gate_fraction", "final contacts must follow an initial contact within this fraction of the maximum stride", [](C& c) -> double& { return c.step.fc_gate_fraction; }));
        f.push_back(number<C>("min_relative_amplitude", "ignore wavelet extrema below this fraction of the 95th-percentile excursion", [](C& c) -> double& { return c.step.min_relative_amplitude; }));
        f.push_back(number<C>("laterality_lowpass_hz", "yaw-rate low-pass cutoff for left/right assignment (Hz)", [](C& c) -> double& { return c.step.laterality_lowpass_hz; }));
        f.push_back(number<C>("laterality_min_rad_s", "yaw rates smaller than this leave the side unknown (rad/s)", [](C& c) -> double& { return c.step.laterality_min_rad_s; }));
        f.push_back({"wavelet_scale", "wavelet scale in samples, or auto",
                     [](const C& c) { return c.step.scale_override ? format_double(*c.step.scale_override) : std::string("auto"); },
                     [](C& c, std::string_view v, std::size_t line) {
                         if (v == "auto") c.step.scale_override.reset();
                         else c.step.scale_override = csv::parse_double(v, line);
                     }});
        f.push_back({"wavelet_axis", "auto, vertical or antero_posterior",
                     [](const C& c) { return c.step.axis_override ? std::string(to_string(*c.step.axis_override)) : std::string("auto"); },
                     [](C& c, std::string_view v, std::size_t line) {
                         if (v == "auto") c.step.axis_override.reset();
                         else if (v == "vertical") c.step.axis_override = WaveletAxis::Vertical;
                         else if (v == "antero_posterior") c.step.axis_override = WaveletAxis::AnteroPosterior;
                         else throw ParseError("wavelet_axis must be auto, vertical or antero_posterior", line);
                     }});
        f.push_back({"wavelet_sign", "auto, 1 or -1",
                     [](const C& c) { return c.step.sign_override ? std::to_string(*c.step.sign_override) : std::string("auto"); },
                     [](C& c, std::string_view v, std::size_t line) {
                         if (v == "auto") c.step.sign_override.reset();
                         else if (v == "1" || v == "+1") c.step.sign_override = 1;
                         else if (v == "-1") c.step.sign_override = -1;
                         else throw ParseError("wavelet_sign must be auto, 1 or -1", line);
                     }});
        f.push_back(number<C>("match_window_s", "evaluation tolerance window, centred on each reference event (s)", [](C& c) -> double& { return c.match_window_s; }));
        return f;
    }();
    return fields;
}

inline PipelineConfig load_pipeline_config(std::istream& in) { return parse(in, pipeline_fields()); }

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    return load_pipeline_config(in);
}

inline void write_pipeline_config(std::ostream& out, const PipelineConfig& cfg = {}) { write(out, cfg, pipeline_fields()); }

// ---------------------------------------------------------------------------
// Synthetic recordings

/// `rest:3, walk:10, turn:120:1` means 3 s rest, 10 s walk, then a 120 degree turn over 1 s.
inline std::vector<SynthPhase> parse_script(std::string_view text, std::size_t line = 0) {
    std::vector<SynthPhase> out;
    for (auto item : csv::split(text)) {
        std::vector<std::string_view> parts;
        std::size_t pos = 0;
        while (true) {
            const auto colon = item.find(':', pos);
            parts.push_back(csv::trim(item.substr(pos, colon == std::string_view::npos ? std::string_view::npos : colon - pos)));
            if (colon == std::string_view::npos) break;
            pos = colon + 1;
        }
        if (parts[0] == "walk" && parts.size() == 2) out.push_back(SynthPhase::walk(csv::parse_double(parts[1], line)));
        else if (parts[0] == "rest" && parts.size() == 2) out.push_back(SynthPhase::rest(csv::parse_double(parts[1], line)));
        else if (parts[0] == "turn" && parts.size() == 3)
            out.push_back(SynthPhase::turn(csv::parse_double(parts[1], line), csv::parse_double(parts[2], line)));
        else throw ParseError("bad script item '" + std::string(item) + "' (use walk:D, rest:D or turn:ANGLE:D)", line);
    }
    return out;
}

inline std::string format_script(const std::vector<SynthPhase>& script) {
    std::string out;
    for (const auto& p : script) {
        if (!out.empty()) out += ", ";
        switch (p.kind) {
            case SynthPhase::Kind::Walk: out += "walk:" + format_double(p.duration_s); break;
            case SynthPhase::Kind::Rest: out += "rest:" + format_double(p.duration_s); break;
            case SynthPhase::Kind::Turn: out += "turn:" + format_double(p.angle_deg) + ":" + format_double(p.duration_s); break;
        }
    }
    return out;
}

inline const std::vector<Field<SynthConfig>>& synth_fields() {
    using C = SynthConfig;
    using detail::number;
    static const std::vector<Field<C>> fields = [] {
        std::vector<Field<C>> f;
        f.push_back(number<C>("duration_s", "total duration; 0 takes the script's length (s)", [](C& c) -> double& { return c.duration_s; }));
        f.push_back(number<C>("sample_rate_hz", "sampling rate (Hz)", [](C& c) -> double& { return c.sample_rate_hz; }));
        f.push_back(number<C>("stride_s", "stride duration (s)", [](C& c) -> double& { return c.stride_s; }));
        f.push_back(number<C>("ic_phase", "first initial contact after gait onset, fraction of a stride", [](C& c) -> double& { return c.ic_phase; }));
        f.push_back(number<C>("fc_phase", "final contact delay after its initial contact, fraction of a stride", [](C& c) -> double& { return c.fc_phase; }));
        f.push_back(number<C>("vertical_amp", "vertical oscillation amplitude (m/s^2)", [](C& c) -> double& { return c.vertical_amp; }));
        f.push_back(number<C>("stride_harmonic", "relative amplitude of the stride-frequency vertical term", [](C& c) -> double& { return c.stride_harmonic; }));
        f.push_back(number<C>("impact_amp", "heel-strike transient amplitude (m/s^2)", [](C& c) -> double& { return c.impact_amp; }));
        f.push_back(number<C>("impact_width_s", "heel-strike transient width (s)", [](C& c) -> double& { return c.impact_width_s; }));
        f.push_back(number<C>("ap_amp", "forward oscillation amplitude (m/s^2)", [](C& c) -> double& { return c.ap_amp; }));
        f.push_back(number<C>("yaw_amp", "step-to-step yaw-rate amplitude (rad/s)", [](C& c) -> double& { return c.yaw_amp; }));
        f.push_back(number<C>("noise_sigma", "accelerometer noise SD (m/s^2)", [](C& c) -> double& { return c.noise_sigma; }));
        f.push_back(number<C>("gyro_noise_sigma", "gyroscope noise SD (rad/s)", [](C& c) -> double& { return c.gyro_noise_sigma; }));
        f.push_back({"sensor_rotation", "fixed sensor orientation as a quaternion w,x,y,z (normalized on input)",
                     [](const C& c) {
                         const auto& q = c.sensor_rotation;
                         return format_double(q.w()) + "," + format_double(q.x()) + "," + format_double(q.y()) + "," + format_double(q.z());
                     },
                     [](C& c, std::string_view v, std::size_t line) {
                         const auto parts = csv::split(v);
                         if (parts.size() != 4) throw ParseError("sensor_rotation needs four comma-separated numbers", line);
                         Quaternion q(csv::parse_double(parts[0], line), csv::parse_double(parts[1], line),
                                      csv::parse_double(parts[2], line), csv::parse_double(parts[3], line));
                         if (!(q.norm() > 1e-12)) throw ParseError("sensor_rotation must be non-zero", line);
                         c.sensor_rotation = q.normalized();
                     }});
        f.push_back({"script", "comma-separated phases: walk:D, rest:D, turn:ANGLE:D",
                     [](const C& c) { return format_script(c.script); },
                     [](C& c, std::string_view v, std::size_t line) { c.script = parse_script(v, line); }});
        f.push_back({"seed", "noise seed", [](const C& c) { return std::to_string(c.seed); },
                     [](C& c, std::string_view v, std::size_t line) { c.seed = detail::parse_seed(v, line); }});
        f.push_back({"first_side", "foot of the first initial contact, L or R",
                     [](const C& c) { return std::string(to_string(c.first_side)); },
                     [](C& c, std::string_view v, std::size_t line) {
                         if (v == "L") c.first_side = Side::Left;
                         else if (v == "R") c.first_side = Side::Right;
                         else throw ParseError("first_side must be L or R", line);
                     }});
        f.push_back(number<C>("boundary_margin_s", "truth rule: rests this close to either end are boundaries (s)", [](C& c) -> double& { return c.boundary_margin_s; }));
        f.push_back(number<C>("rest_split_s", "truth rule: rests shorter than this are short rests (s)", [](C& c) -> double& { return c.rest_split_s; }));
        f.push_back(number<C>("min_bout_s", "truth rule: shortest gait bout (s)", [](C& c) -> double& { return c.min_bout_s; }));
        f.push_back(number<C>("sharp_turn_deg", "truth rule: turns at least this large are sharp (deg)", [](C& c) -> double& { return c.sharp_turn_deg; }));
        return f;
    }();
    return fields;
}

inline SynthConfig load_synth_config(std::istream& in) { return parse(in, synth_fields()); }

inline SynthConfig load_synth_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open synth config '" + path + "'");
    return load_synth_config(in);
}

inline void write_synth_config(std::ostream& out, const SynthConfig& cfg = {}) { write(out, cfg, synth_fields()); }

}  // namespace gaitkit::config

#endif
