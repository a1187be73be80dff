#ifndef GAITKIT_SIGNAL_HPP
#define GAITKIT_SIGNAL_HPP

// Numerical helpers shared by the pipeline stages: descriptive statistics,
// zero-phase IIR filtering, autocorrelation and wavelet differentiation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "gaitkit/error.hpp"
#include "gaitkit/types.hpp"

namespace gaitkit {

inline double mean(std::span<const double> x) {
    if (x.empty()) throw EmptySetError("mean of empty sequence");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double sample_sd(std::span<const double> x) {
    if (x.size() < 2) throw InsufficientDataError("sample standard deviation needs two values");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

/// Quantile by linear interpolation between order statistics, h = (n - 1) p.
inline double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw EmptySetError("quantile of empty sequence");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::span<const double> x, double p) {
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return quantile_sorted(s, p);
}

inline double median(std::span<const double> x) { return quantile(x, 0.5); }

// ---------------------------------------------------------------------------
// IIR filtering

/// Second-order section, normalized so a0 == 1.
struct Biquad {
    double b0, b1, b2, a1, a2;

    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

/// Second-order Butterworth low-pass via the bilinear transform with frequency prewarping.
inline Biquad butterworth_lowpass(double cutoff_hz, double sample_rate_hz) {
    if (!(cutoff_hz > 0.0)) throw ConfigError("filter cutoff must be positive");
    if (!(cutoff_hz < 0.5 * sample_rate_hz))
        throw ConfigError("filter cutoff " + std::to_string(cutoff_hz) + " Hz is not below Nyquist (" +
                          std::to_string(0.5 * sample_rate_hz) + " Hz)");
    const double k = std::tan(kPi * cutoff_hz / sample_rate_hz);
    const double k2 = k * k;
    const double norm = 1.0 / (1.0 + std::sqrt(2.0) * k + k2);
    Biquad f{};
    f.b0 = k2 * norm;
    f.b1 = 2.0 * f.b0;
    f.b2 = f.b0;
    f.a1 = 2.0 * (k2 - 1.0) * norm;
    f.a2 = (1.0 - std::sqrt(2.0) * k + k2) * norm;
    return f;
}

namespace detail {

// Direct form II transposed, state initialized to the steady state of a step at x[0].
inline void lfilter_steady(const Biquad& f, std::vector<double>& x) {
    if (x.empty()) return;
    const double y0 = f.dc_gain() * x.front();
    double z2 = f.b2 * x.front() - f.a2 * y0;
    double z1 = f.b1 * x.front() - f.a1 * y0 + z2;
    for (double& v : x) {
        const double in = v;
        const double out = f.b0 * in + z1;
        z1 = f.b1 * in - f.a1 * out + z2;
        z2 = f.b2 * in - f.a2 * out;
        v = out;
    }
}

}  // namespace detail

/// Forward-backward filtering with odd reflection padding of three filter lengths.
inline std::vector<double> filtfilt(const Biquad& f, std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    if (n == 1) return {x[0]};
    const std::size_t pad = std::min<std::size_t>(9, n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    detail::lfilter_steady(f, ext);
    std::reverse(ext.begin(), ext.end());
    detail::lfilter_steady(f, ext);
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline std::vector<double> lowpass_zero_phase(std::span<const double> x, double cutoff_hz, double sample_rate_hz) {
    return filtfilt(butterworth_lowpass(cutoff_hz, sample_rate_hz), x);
}

// ---------------------------------------------------------------------------
// Autocorrelation

/// Unbiased, mean-removed autocorrelation normalized by the lag-0 variance, lags 0..max_lag.
/// Returns an empty vector for a flat signal.
inline std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
    const std::size_t n = x.size();
    if (n < 2) return {};
    max_lag = std::min(max_lag, n - 1);
    const double m = mean(x);
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = x[i] - m;
    double var = 0.0;
    for (double v : c) var += v * v;
    var /= static_cast<double>(n);
    const double scale = std::max(1.0, std::abs(m));
    if (!(var > 1e-24 * scale * scale)) return {};
    std::vector<double> r(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) acc += c[i] * c[i + k];
        r[k] = acc / static_cast<double>(n - k) / var;
    }
    return r;
}

/// Periodicity found in an autocorrelation sequence.
struct StridePeak {
    double stride_s;     ///< lag of the stride peak
    double coefficient;  ///< autocorrelation at that lag
};

struct PeriodicityConfig {
    double min_stride_s = 0.4;
    double max_stride_s = 2.25;
    double min_coefficient = 0.3;
    /// A step peak is the first local maximum reaching this fraction of the best one.
    double step_peak_fraction = 0.6;
};

namespace detail {

inline std::vector<std::size_t> local_maxima(std::span<const double> r, std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> out;
    lo = std::max<std::size_t>(lo, 1);
    for (std::size_t k = lo; k <= hi && k + 1 < r.size(); ++k)
        if (r[k] > r[k - 1] && r[k] >= r[k + 1]) out.push_back(k);
    return out;
}

// Vertex of the parabola through three neighbours of a peak, in fractional lag units.
inline double refine_peak(std::span<const double> r, std::size_t k) {
    if (k == 0 || k + 1 >= r.size()) return static_cast<double>(k);
    const double denom = r[k - 1] - 2.0 * r[k] + r[k + 1];
    if (denom >= 0.0) return static_cast<double>(k);
    const double off = 0.5 * (r[k - 1] - r[k + 1]) / denom;
    return static_cast<double>(k) + std::clamp(off, -0.5, 0.5);
}

}  // namespace detail

/// Locates the stride period of a gait-like signal.
///
/// Trunk accelerations repeat once per step and, less strongly, once per stride. The first
/// prominent autocorrelation peak in the step band (half the stride band) is taken as the
/// step lag; the stride is the peak nearest twice that lag. Signals without a clear step
/// peak repeat once per stride and give the stride directly. Lags are limited to half the
/// signal length so every coefficient averages over at least half the samples.
inline std::optional<StridePeak> find_stride_peak(std::span<const double> x, double sample_rate,
                                                  const PeriodicityConfig& cfg = {}) {
    const std::size_t n = x.size();
    const auto max_lag = std::min<std::size_t>(static_cast<std::size_t>(std::ceil(cfg.max_stride_s * sample_rate)) + 1, n / 2);
    const auto r = autocorrelation(x, max_lag);
    if (r.size() < 3) return std::nullopt;
    const std::size_t hi = r.size() - 2;
    const auto step_lo = static_cast<std::size_t>(std::floor(0.5 * cfg.min_stride_s * sample_rate));
    const auto peaks = detail::local_maxima(r, step_lo, hi);
    if (peaks.empty()) return std::nullopt;

    double best = -1.0;
    for (auto k : peaks) best = std::max(best, r[k]);
    if (best < cfg.min_coefficient) return std::nullopt;

    const double step_hi_s = 0.5 * cfg.max_stride_s;
    std::optional<std::size_t> step;
    for (auto k : peaks) {
        if (static_cast<double>(k) / sample_rate > step_hi_s) break;
        if (r[k] >= cfg.step_peak_fraction * best) {
            step = k;
            break;
        }
    }
    if (!step) {
        // no convincing step peak: the signal repeats per stride, so read the stride directly
        for (auto k : peaks) {
            const double lag_s = static_cast<double>(k) / sample_rate;
            if (lag_s < cfg.min_stride_s || lag_s > cfg.max_stride_s || r[k] < 0.8 * best) continue;
            const StridePeak out{detail::refine_peak(r, k) / sample_rate, r[k]};
            if (out.coefficient < cfg.min_coefficient) return std::nullopt;
            return out;
        }
        return std::nullopt;
    }

    const double step_lag = detail::refine_peak(r, *step);
    StridePeak out{2.0 * step_lag / sample_rate, r[*step]};
    // Prefer the measured stride peak when it lies inside the searchable range.
    const double target = 2.0 * step_lag;
    std::optional<std::size_t> stride;
    for (auto k : peaks) {
        const double d = std::abs(static_cast<double>(k) - target);
        if (d <= 0.25 * target && (!stride || d < std::abs(static_cast<double>(*stride) - target))) stride = k;
    }
    if (stride) out = {detail::refine_peak(r, *stride) / sample_rate, r[*stride]};
    if (out.stride_s < cfg.min_stride_s || out.stride_s > cfg.max_stride_s || out.coefficient < cfg.min_coefficient)
        return std::nullopt;
    return out;
}

/// Autocorrelation value around a lag (seconds), taking the best within +-10%.
inline double autocorrelation_at(std::span<const double> x, double sample_rate, double lag_s) {
    const auto lag = static_cast<std::size_t>(std::lround(lag_s * sample_rate));
    const auto r = autocorrelation(x, lag + lag / 10 + 1);
    if (r.empty()) return 0.0;
    const std::size_t lo = lag - std::min(lag, lag / 10);
    double best = -1.0;
    for (std::size_t k = lo; k < r.size(); ++k) best = std::max(best, r[k]);
    return best;
}

// ---------------------------------------------------------------------------
// Wavelet differentiation

/// Centre frequency (cycles per unit scale) of the first derivative of a unit Gaussian.
inline constexpr double kGaussianDerivativeCenterFrequency = 1.0 / (2.0 * kPi);

/// Convolution with the first derivative of a Gaussian of width `scale` samples.
/// The kernel is normalized to differentiate a ramp exactly, so the output is a smoothed
/// derivative in units of x per second.
inline std::vector<double> cwt_differentiate(std::span<const double> x, double scale, double sample_rate) {
    if (!(scale > 0.0)) throw ContractError("wavelet scale must be positive");
    const auto half = static_cast<std::ptrdiff_t>(std::ceil(4.0 * scale));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double moment = 0.0;
    for (std::ptrdiff_t j = -half; j <= half; ++j) {
        const double t = static_cast<double>(j);
        const double v = -t * std::exp(-0.5 * t * t / (scale * scale));
        kernel[static_cast<std::size_t>(j + half)] = v;
        moment -= t * v;
    }
    for (double& v : kernel) v *= sample_rate / moment;

    const auto n = static_cast<std::ptrdiff_t>(x.size());
    if (n == 0) return {};
    // odd reflection keeps the local slope continuous across the edges
    auto ext = [&](std::ptrdiff_t i) {
        if (i < 0) return 2.0 * x.front() - x[static_cast<std::size_t>(std::min(-i, n - 1))];
        if (i >= n) return 2.0 * x.back() - x[static_cast<std::size_t>(std::max<std::ptrdiff_t>(2 * (n - 1) - i, 0))];
        return x[static_cast<std::size_t>(i)];
    };
    std::vector<double> out(x.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t j = -half; j <= half; ++j) acc += kernel[static_cast<std::size_t>(j + half)] * ext(i - j);
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

/// Number of samples the differentiating kernel spans at `scale`.
inline std::size_t wavelet_support(double scale) { return 2 * static_cast<std::size_t>(std::ceil(4.0 * scale)) + 1; }

/// Cumulative trapezoidal integral, starting at zero.
inline std::vector<double> cumulative_integral(std::span<const double> x, double sample_rate) {
    std::vector<double> out(x.size(), 0.0);
    const double dt = 1.0 / sample_rate;
    for (std::size_t i = 1; i < x.size(); ++i) out[i] = out[i - 1] + 0.5 * (x[i] + x[i - 1]) * dt;
    return out;
}

/// Strict interior local extrema. Plateaus report their first sample.
inline std::vector<std::size_t> local_maxima(std::span<const double> x) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (!(x[i] > x[i - 1])) continue;
        std::size_t j = i;
        while (j + 1 < x.size() && x[j + 1] == x[i]) ++j;
        if (j + 1 < x.size() && x[j + 1] < x[i]) out.push_back(i);
        i = j;
    }
    return out;
}

inline std::vector<std::size_t> local_minima(std::span<const double> x) {
    std::vector<double> neg(x.size());
    std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
    return local_maxima(neg);
}

}  // namespace gaitkit

#endif
