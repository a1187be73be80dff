#ifndef GAITKIT_TESTS_SUPPORT_HPP
#define GAITKIT_TESTS_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gaitkit/types.hpp"

namespace gaitkit::testing {

/// Uniform random rotation (normalized Gaussian 4-vector).
template <class Rng>
Quaternion random_rotation(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Vector4d v(n(rng), n(rng), n(rng), n(rng));
    v.normalize();
    return Quaternion(v[0], v[1], v[2], v[3]);
}

/// Uniform recording whose accel/gyro come from callbacks of time.
inline ImuRecording make_recording(double rate, double duration_s, const std::function<Vec3(double)>& accel,
                                   const std::function<Vec3(double)>& gyro = [](double) { return Vec3::Zero(); }) {
    ImuRecording rec;
    rec.sample_rate = rate;
    const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        rec.timestamps.push_back(t);
        rec.accel.push_back(accel(t));
        rec.gyro.push_back(gyro(t));
    }
    return rec;
}

inline ImuRecording static_recording(double rate, double duration_s, const Vec3& accel = Vec3(0, 0, kGravity)) {
    return make_recording(rate, duration_s, [accel](double) { return accel; });
}

inline double rms(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return a.empty() ? 0.0 : std::sqrt(s / static_cast<double>(a.size()));
}

inline double rms_diff(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return rms(d);
}

// magnitude of the double-pass filter from the analog prototype mapped through the prewarped bilinear transform
inline double analytic_double_pass_gain(double f, double fc, double fs) {
    const double r = std::tan(kPi * f / fs) / std::tan(kPi * fc / fs);
    return 1.0 / (1.0 + std::pow(r, 4));
}

inline std::vector<double> accel_axis(const ImuRecording& rec, int k) {
    std::vector<double> out;
    for (const auto& a : rec.accel) out.push_back(a[k]);
    return out;
}

inline ImuRecording sine_recording(double f, double fs, double seconds) {
    return make_recording(fs, seconds, [f](double t) { return Vec3(std::sin(2 * kPi * f * t), 0.0, 0.0); });
}

// steady-state amplitude over the central part, well away from edges
inline double central_amplitude(const std::vector<double>& y, std::size_t margin) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = margin; i + margin < y.size(); ++i, ++n) s += y[i] * y[i];
    return std::sqrt(2.0 * s / static_cast<double>(n));
}

}  // namespace gaitkit::testing

#endif
