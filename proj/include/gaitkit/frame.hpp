#ifndef GAITKIT_FRAME_HPP
#define GAITKIT_FRAME_HPP

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gaitkit/error.hpp"
#include "gaitkit/segmentation.hpp"
#include "gaitkit/signal.hpp"
#include "gaitkit/types.hpp"

namespace gaitkit {

/// Orientation-agnostic body axes expressed in gravity-aligned (vertical, h1, h2) coordinates.
struct AnatomicalFrame {
    Vec3 vertical = Vec3::UnitX();
    Vec3 antero_posterior = Vec3::UnitY();
    Vec3 medio_lateral = Vec3::UnitZ();

    static AnatomicalFrame identity() { return {}; }

    Eigen::Matrix3d rotation() const {
        Eigen::Matrix3d m;
        m.row(0) = vertical.transpose();
        m.row(1) = antero_posterior.transpose();
        m.row(2) = medio_lateral.transpose();
        return m;
    }
};

/// Samples of one bout; after `to_anatomical` the axes are (vertical, AP, ML).
struct Bout {
    double start_s = 0.0;
    double sample_rate = 0.0;
    std::vector<Vec3> accel;
    std::vector<Vec3> gyro;

    std::size_t size() const noexcept { return accel.size(); }
    double duration() const { return static_cast<double>(size()) / sample_rate; }
    double time_at(std::size_t i) const { return start_s + static_cast<double>(i) / sample_rate; }

    std::vector<double> channel(int axis) const {
        std::vector<double> out(accel.size());
        for (std::size_t i = 0; i < accel.size(); ++i) out[i] = accel[i][axis];
        return out;
    }
    std::vector<double> gyro_channel(int axis) const {
        std::vector<double> out(gyro.size());
        for (std::size_t i = 0; i < gyro.size(); ++i) out[i] = gyro[i][axis];
        return out;
    }
};

inline Bout extract_bout(const GravityAlignedRecording& rec, double start_s, double end_s) {
    const auto [a, b] = sample_range(rec, start_s, end_s);
    Bout bout;
    bout.start_s = rec.start() + static_cast<double>(a) / rec.sample_rate;
    bout.sample_rate = rec.sample_rate;
    bout.accel.assign(rec.accel.begin() + static_cast<std::ptrdiff_t>(a), rec.accel.begin() + static_cast<std::ptrdiff_t>(b));
    bout.gyro.assign(rec.gyro.begin() + static_cast<std::ptrdiff_t>(a), rec.gyro.begin() + static_cast<std::ptrdiff_t>(b));
    return bout;
}

struct FrameConfig {
    double min_duration_s = 3.0;
    /// Smallest accepted ratio of the two horizontal eigenvalues.
    double min_eigen_ratio = 1.2;
};

/// Direction of travel as the first principal component of the horizontal acceleration.
inline AnatomicalFrame estimate_frame(const Bout& bout, const FrameConfig& cfg = {}) {
    if (bout.duration() < cfg.min_duration_s - 1e-9)
        throw InsufficientDataError("frame estimation needs at least " + std::to_string(cfg.min_duration_s) +
                                    " s of samples, bout has " + std::to_string(bout.duration()) + " s");
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    for (const auto& a : bout.accel) m += Eigen::Vector2d(a[1], a[2]);
    m /= static_cast<double>(bout.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& a : bout.accel) {
        const Eigen::Vector2d d = Eigen::Vector2d(a[1], a[2]) - m;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(bout.size() - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const double major = eig.eigenvalues()[1];
    const double minor = eig.eigenvalues()[0];
    if (!(major > 0.0) || major < cfg.min_eigen_ratio * std::max(minor, 0.0))
        throw AmbiguousDirectionError("horizontal acceleration has no dominant direction (eigenvalues " +
                                      std::to_string(major) + ", " + std::to_string(minor) + ")");
    const Eigen::Vector2d dir = eig.eigenvectors().col(1).normalized();

    AnatomicalFrame f;
    f.vertical = Vec3::UnitX();
    f.antero_posterior = Vec3(0.0, dir.x(), dir.y());
    f.medio_lateral = f.vertical.cross(f.antero_posterior).normalized();
    return f;
}

inline Bout to_anatomical(const Bout& bout, const AnatomicalFrame& frame) {
    const Eigen::Matrix3d r = frame.rotation();
    Bout out = bout;
    for (std::size_t i = 0; i < bout.size(); ++i) {
        out.accel[i] = r * bout.accel[i];
        out.gyro[i] = r * bout.gyro[i];
    }
    return out;
}

/// True when the antero-posterior channel shows stride periodicity.
inline bool verify_frame(const Bout& anatomical, const PeriodicityConfig& cfg = {}, const FrameConfig& fcfg = {}) {
    if (anatomical.duration() < fcfg.min_duration_s - 1e-9) return false;
    return find_stride_peak(anatomical.channel(1), anatomical.sample_rate, cfg).has_value();
}

}  // namespace gaitkit

#endif
