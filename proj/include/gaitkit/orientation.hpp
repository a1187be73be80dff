#ifndef GAITKIT_ORIENTATION_HPP
#define GAITKIT_ORIENTATION_HPP

#include <cmath>
#include <vector>

#include "gaitkit/error.hpp"
#include "gaitkit/types.hpp"

namespace gaitkit {

inline constexpr double kDefaultMadgwickBeta = 0.041;

/// Gradient-descent orientation filter for accelerometer + gyroscope (no magnetometer).
///
/// The quaternion maps sensor-frame vectors to the earth frame (z up): v_e = q v_s q*.
class MadgwickImu {
public:
    explicit MadgwickImu(double beta = kDefaultMadgwickBeta, Quaternion initial = Quaternion::Identity())
        : beta_(beta), q_(initial.normalized()) {}

    /// Tilt from a single accelerometer reading; yaw is left at the shortest-arc choice.
    static Quaternion from_gravity(const Vec3& accel) {
        if (!(accel.norm() > 0.0)) return Quaternion::Identity();
        return Quaternion::FromTwoVectors(accel, Vec3::UnitZ()).normalized();
    }

    void update(const Vec3& gyro, const Vec3& accel, double dt) {
        const double q0 = q_.w(), q1 = q_.x(), q2 = q_.y(), q3 = q_.z();

        // rate of change from the gyroscope: 0.5 q (x) (0, w)
        Eigen::Vector4d qdot(0.5 * (-q1 * gyro.x() - q2 * gyro.y() - q3 * gyro.z()),
                             0.5 * (q0 * gyro.x() + q2 * gyro.z() - q3 * gyro.y()),
                             0.5 * (q0 * gyro.y() - q1 * gyro.z() + q3 * gyro.x()),
                             0.5 * (q0 * gyro.z() + q1 * gyro.y() - q2 * gyro.x()));

        const double an = accel.norm();
        if (an > 0.0) {
            const Vec3 a = accel / an;
            // objective: predicted gravity direction in the sensor frame minus measurement
            const Eigen::Vector3d f(2.0 * (q1 * q3 - q0 * q2) - a.x(), 2.0 * (q0 * q1 + q2 * q3) - a.y(),
                                    2.0 * (0.5 - q1 * q1 - q2 * q2) - a.z());
            Eigen::Matrix<double, 3, 4> j;
            j << -2.0 * q2, 2.0 * q3, -2.0 * q0, 2.0 * q1,  //
                2.0 * q1, 2.0 * q0, 2.0 * q3, 2.0 * q2,      //
                0.0, -4.0 * q1, -4.0 * q2, 0.0;
            Eigen::Vector4d step = j.transpose() * f;
            // The closed-form z row assumes |q| = 1, which leaves a radial part that depends on the
            // sensor-frame reading. Dropping it keeps the step size independent of how the device is mounted.
            const Eigen::Vector4d qv(q0, q1, q2, q3);
            step -= qv.dot(step) * qv;
            const double sn = step.norm();
            if (sn > 0.0) qdot -= beta_ * step / sn;
        }

        Eigen::Vector4d q(q0, q1, q2, q3);
        q += qdot * dt;
        q.normalize();
        q_ = Quaternion(q[0], q[1], q[2], q[3]);
    }

    const Quaternion& orientation() const { return q_; }

private:
    double beta_;
    Quaternion q_;
};

/// One unit quaternion per sample. The first sample's accelerometer sets the initial tilt.
inline std::vector<Quaternion> estimate_orientation(const ImuRecording& rec, double beta = kDefaultMadgwickBeta) {
    if (rec.empty()) throw InsufficientDataError("orientation estimation needs at least one sample");
    if (!rec.sample_rate) throw ContractError("orientation estimation needs a uniformly sampled recording");
    if (!(beta >= 0.0)) throw ConfigError("Madgwick beta must be non-negative");
    const double dt = 1.0 / *rec.sample_rate;
    MadgwickImu filter(beta, MadgwickImu::from_gravity(rec.accel.front()));
    std::vector<Quaternion> out;
    out.reserve(rec.size());
    out.push_back(filter.orientation());
    for (std::size_t i = 1; i < rec.size(); ++i) {
        filter.update(rec.gyro[i], rec.accel[i], dt);
        out.push_back(filter.orientation());
    }
    return out;
}

/// Rotates every sample into the earth frame and reorders axes as (vertical, x, y).
inline GravityAlignedRecording align_with_gravity(const ImuRecording& rec, const std::vector<Quaternion>& orientation) {
    if (orientation.size() != rec.size())
        throw ContractError("orientation sequence length " + std::to_string(orientation.size()) +
                            " differs from recording length " + std::to_string(rec.size()));
    if (!rec.sample_rate) throw ContractError("gravity alignment needs a uniformly sampled recording");
    GravityAlignedRecording out;
    out.timestamps = rec.timestamps;
    out.orientation = orientation;
    out.sample_rate = *rec.sample_rate;
    out.accel.resize(rec.size());
    out.gyro.resize(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const Vec3 a = orientation[i] * rec.accel[i];
        const Vec3 g = orientation[i] * rec.gyro[i];
        out.accel[i] = Vec3(a.z(), a.x(), a.y());
        out.gyro[i] = Vec3(g.z(), g.x(), g.y());
    }
    return out;
}

/// Heading (rad) of the sensor x axis in the earth horizontal plane.
inline double heading(const Quaternion& q) {
    const Vec3 x = q * Vec3::UnitX();
    return std::atan2(x.y(), x.x());
}

}  // namespace gaitkit

#endif
