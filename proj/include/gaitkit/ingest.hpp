#ifndef GAITKIT_INGEST_HPP
#define GAITKIT_INGEST_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gaitkit/error.hpp"
#include "gaitkit/signal.hpp"
#include "gaitkit/types.hpp"

namespace gaitkit {

namespace csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline double parse_double(std::string_view field, std::size_t line) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || field.empty())
        throw ParseError("invalid number '" + std::string(field) + "'", line);
    return v;
}

/// Reads non-blank lines, stripping a UTF-8 byte order mark from the first.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++number_;
            if (number_ == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
            if (!trim(line).empty()) return true;
        }
        return false;
    }
    std::size_t line_number() const { return number_; }

private:
    std::istream& in_;
    std::size_t number_ = 0;
};

}  // namespace csv

/// Parses the `t,ax,ay,az,gx,gy,gz` CSV contract.
inline ImuRecording load_recording(std::istream& in) {
    csv::LineReader reader(in);
    std::string line;
    if (!reader.next(line)) throw ParseError("empty recording: missing header `t,ax,ay,az,gx,gy,gz`", 1);
    const std::vector<std::string_view> expected{"t", "ax", "ay", "az", "gx", "gy", "gz"};
    if (csv::split(line) != expected)
        throw ParseError("bad header '" + std::string(csv::trim(line)) + "', expected `t,ax,ay,az,gx,gy,gz`",
                         reader.line_number());

    ImuRecording rec;
    while (reader.next(line)) {
        const auto fields = csv::split(line);
        const auto ln = reader.line_number();
        if (fields.size() != 7)
            throw ParseError("expected 7 fields, found " + std::to_string(fields.size()), ln);
        double v[7];
        for (int i = 0; i < 7; ++i) {
            v[i] = csv::parse_double(fields[static_cast<std::size_t>(i)], ln);
            if (!std::isfinite(v[i])) throw ParseError("non-finite value", ln);
        }
        if (!rec.timestamps.empty() && !(v[0] > rec.timestamps.back()))
            throw ContractError("line " + std::to_string(ln) + ": timestamp " + std::string(fields[0]) +
                                " does not increase");
        rec.timestamps.push_back(v[0]);
        rec.accel.emplace_back(v[1], v[2], v[3]);
        rec.gyro.emplace_back(v[4], v[5], v[6]);
    }
    return rec;
}

inline ImuRecording load_recording(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open recording '" + path + "'");
    auto rec = load_recording(static_cast<std::istream&>(in));
    rec.session_id = path;
    return rec;
}

inline void write_recording(std::ostream& out, const ImuRecording& rec) {
    out << "t,ax,ay,az,gx,gy,gz\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const auto& a = rec.accel[i];
        const auto& g = rec.gyro[i];
        out << rec.timestamps[i] << ',' << a.x() << ',' << a.y() << ',' << a.z() << ',' << g.x() << ',' << g.y() << ','
            << g.z() << '\n';
    }
}

/// Reference events, header `t,kind,side`.
inline std::vector<GaitEvent> load_reference_events(std::istream& in) {
    csv::LineReader reader(in);
    std::string line;
    if (!reader.next(line)) throw ParseError("empty reference file: missing header `t,kind,side`", 1);
    if (csv::split(line) != std::vector<std::string_view>{"t", "kind", "side"})
        throw ParseError("bad header, expected `t,kind,side`", reader.line_number());
    std::vector<GaitEvent> events;
    while (reader.next(line)) {
        const auto fields = csv::split(line);
        const auto ln = reader.line_number();
        if (fields.size() != 3) throw ParseError("expected 3 fields, found " + std::to_string(fields.size()), ln);
        GaitEvent e;
        e.time_s = csv::parse_double(fields[0], ln);
        try {
            e.kind = parse_event_kind(fields[1]);
            e.side = parse_side(fields[2]);
        } catch (const ParseError& err) {
            throw ParseError(err.what(), ln);
        }
        events.push_back(e);
    }
    return events;
}

inline std::vector<GaitEvent> load_reference_events(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reference events '" + path + "'");
    return load_reference_events(static_cast<std::istream&>(in));
}

inline void write_reference_events(std::ostream& out, const std::vector<GaitEvent>& events) {
    out << "t,kind,side\n" << std::setprecision(17);
    for (const auto& e : events) out << e.time_s << ',' << to_string(e.kind) << ',' << to_string(e.side) << '\n';
}

/// Local cubic (4-point Lagrange) interpolation onto a uniform grid from the first to the last
/// timestamp. Lines and constants come through exactly; two or three samples fall back to lower order.
inline ImuRecording resample(const ImuRecording& rec, double target_rate) {
    if (!(target_rate > 0.0)) throw ConfigError("target sample rate must be positive");
    if (rec.size() < 2) throw InsufficientDataError("resampling needs at least 2 samples");
    rec.validate();

    const double t0 = rec.timestamps.front();
    const double span = rec.timestamps.back() - t0;
    const auto n = static_cast<std::size_t>(std::floor(span * target_rate + 1e-9)) + 1;
    const std::size_t order = std::min<std::size_t>(4, rec.size());

    ImuRecording out;
    out.sample_rate = target_rate;
    out.device_id = rec.device_id;
    out.session_id = rec.session_id;
    out.timestamps.resize(n);
    out.accel.resize(n);
    out.gyro.resize(n);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = std::min(t0 + static_cast<double>(i) / target_rate, rec.timestamps.back());
        while (j + 2 < rec.size() && rec.timestamps[j + 1] <= t) ++j;
        // nodes j-1 .. j+2, shifted inward at the ends
        const std::size_t first = std::min(j > 0 ? j - 1 : 0, rec.size() - order);
        Vec3 a = Vec3::Zero(), g = Vec3::Zero();
        for (std::size_t k = first; k < first + order; ++k) {
            double w = 1.0;
            for (std::size_t m = first; m < first + order; ++m)
                if (m != k) w *= (t - rec.timestamps[m]) / (rec.timestamps[k] - rec.timestamps[m]);
            a += w * rec.accel[k];
            g += w * rec.gyro[k];
        }
        out.timestamps[i] = t0 + static_cast<double>(i) / target_rate;
        out.accel[i] = a;
        out.gyro[i] = g;
    }
    return out;
}

/// Rate implied by the median sampling interval, snapped to a whole Hz when within 1%.
inline double native_rate(const ImuRecording& rec) {
    if (rec.size() < 2) throw InsufficientDataError("cannot infer a sample rate from fewer than 2 samples");
    std::vector<double> dt(rec.size() - 1);
    for (std::size_t i = 1; i < rec.size(); ++i) dt[i - 1] = rec.timestamps[i] - rec.timestamps[i - 1];
    const double rate = 1.0 / median(dt);
    const double snapped = std::round(rate);
    return std::abs(snapped - rate) <= 0.01 * rate ? snapped : rate;
}

/// Puts a recording on a uniform grid at its own native rate.
inline ImuRecording regularize(const ImuRecording& rec) { return resample(rec, native_rate(rec)); }

/// Zero-phase second-order Butterworth low-pass on every accelerometer axis.
inline ImuRecording lowpass_accel(const ImuRecording& rec, double cutoff_hz = 17.0) {
    if (!rec.sample_rate) throw ContractError("low-pass filtering needs a uniformly sampled recording");
    const auto filter = butterworth_lowpass(cutoff_hz, *rec.sample_rate);
    ImuRecording out = rec;
    std::vector<double> axis(rec.size());
    for (int k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < rec.size(); ++i) axis[i] = rec.accel[i][k];
        const auto y = filtfilt(filter, axis);
        for (std::size_t i = 0; i < rec.size(); ++i) out.accel[i][k] = y[i];
    }
    return out;
}

}  // namespace gaitkit

#endif
