#ifndef GAITKIT_TYPES_HPP
#define GAITKIT_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gaitkit/error.hpp"

namespace gaitkit {

using Vec3 = Eigen::Vector3d;
using Quaternion = Eigen::Quaterniond;

inline constexpr double kGravity = 9.81;
inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Time-stamped triaxial accelerometer (m/s^2) and gyroscope (rad/s) samples.
struct ImuRecording {
    std::vector<double> timestamps;
    std::vector<Vec3> accel;
    std::vector<Vec3> gyro;
    /// Set once the recording sits on a uniform grid.
    std::optional<double> sample_rate;
    std::string device_id;
    std::string session_id;

    std::size_t size() const noexcept { return timestamps.size(); }
    bool empty() const noexcept { return timestamps.empty(); }

    /// Span covered by the samples, each sample owning one period when uniform.
    double duration() const {
        if (empty()) return 0.0;
        double span = timestamps.back() - timestamps.front();
        if (sample_rate) span += 1.0 / *sample_rate;
        return span;
    }

    /// Throws ContractError when the structural invariants do not hold.
    void validate() const {
        if (accel.size() != timestamps.size() || gyro.size() != timestamps.size())
            throw ContractError("accel/gyro sample counts differ from timestamp count");
        for (std::size_t i = 0; i < timestamps.size(); ++i) {
            if (!std::isfinite(timestamps[i]) || !accel[i].allFinite() || !gyro[i].allFinite())
                throw ContractError("non-finite value at sample " + std::to_string(i));
            if (i > 0 && !(timestamps[i] > timestamps[i - 1]))
                throw ContractError("timestamps not strictly increasing at sample " + std::to_string(i));
        }
        if (sample_rate && !(*sample_rate > 0.0)) throw ContractError("sample_rate must be positive");
    }
};

/// Recording rotated into the gravity frame. Axis 0 is vertical (up), axes 1 and 2 span
/// the horizontal plane.
struct GravityAlignedRecording {
    std::vector<double> timestamps;
    std::vector<Vec3> accel;
    std::vector<Vec3> gyro;
    std::vector<Quaternion> orientation;
    double sample_rate = 0.0;

    std::size_t size() const noexcept { return timestamps.size(); }
    double start() const { return timestamps.empty() ? 0.0 : timestamps.front(); }
    double duration() const { return static_cast<double>(size()) / sample_rate; }
    double end() const { return start() + duration(); }
};

enum class EventKind { InitialContact, FinalContact };
enum class Side { Left, Right, Unknown };

struct GaitEvent {
    double time_s = 0.0;
    EventKind kind = EventKind::InitialContact;
    Side side = Side::Unknown;
    /// Magnitude of the wavelet extremum that produced the event; not serialized.
    double strength = 0.0;
};

enum class SegmentKind { GaitBout, ShortRest, LongRest, Boundary, Unknown, SharpTurn };

struct Segment {
    double start_s = 0.0;
    double end_s = 0.0;
    SegmentKind kind = SegmentKind::Unknown;

    double duration() const { return end_s - start_s; }
};

inline std::string_view to_string(EventKind k) { return k == EventKind::InitialContact ? "IC" : "FC"; }

inline std::string_view to_string(Side s) {
    switch (s) {
        case Side::Left: return "L";
        case Side::Right: return "R";
        default: return "U";
    }
}

inline std::string_view to_string(SegmentKind k) {
    switch (k) {
        case SegmentKind::GaitBout: return "GaitBout";
        case SegmentKind::ShortRest: return "ShortRest";
        case SegmentKind::LongRest: return "LongRest";
        case SegmentKind::Boundary: return "Boundary";
        case SegmentKind::Unknown: return "Unknown";
        case SegmentKind::SharpTurn: return "SharpTurn";
    }
    return "Unknown";
}

inline EventKind parse_event_kind(std::string_view s) {
    if (s == "IC") return EventKind::InitialContact;
    if (s == "FC") return EventKind::FinalContact;
    throw ParseError("unknown event kind '" + std::string(s) + "' (expected IC or FC)");
}

inline Side parse_side(std::string_view s) {
    if (s == "L") return Side::Left;
    if (s == "R") return Side::Right;
    if (s == "U") return Side::Unknown;
    throw ParseError("unknown side '" + std::string(s) + "' (expected L, R or U)");
}

inline SegmentKind parse_segment_kind(std::string_view s) {
    for (auto k : {SegmentKind::GaitBout, SegmentKind::ShortRest, SegmentKind::LongRest, SegmentKind::Boundary,
                   SegmentKind::Unknown, SegmentKind::SharpTurn})
        if (to_string(k) == s) return k;
    throw ParseError("unknown segment kind '" + std::string(s) + "'");
}

}  // namespace gaitkit

#endif
