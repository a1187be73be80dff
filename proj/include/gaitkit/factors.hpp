#ifndef GAITKIT_FACTORS_HPP
#define GAITKIT_FACTORS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "gaitkit/error.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/signal.hpp"
#include "gaitkit/types.hpp"

namespace gaitkit {

inline constexpr int kDiseaseLevels = 4;  // healthy, mild, moderate, severe
inline constexpr int kDiseaseIncrements = kDiseaseLevels - 1;
inline constexpr double kF1Clamp = 1e-4;

enum class Sex { Female = 0, Male = 1 };
enum class Environment { Indoor = 0, Outdoor = 1 };
enum class Aid { WithAid = 0, WithoutAid = 1 };

struct FactorObservation {
    double f1 = 0.5;
    double age_z = 0.0;
    Sex sex = Sex::Female;
    int disease_idx = 0;
    int subject_idx = 0;
    Environment environment = Environment::Indoor;
    Aid aid = Aid::WithoutAid;
};

struct FactorData {
    std::vector<FactorObservation> observations;
    int n_subjects = 0;
    std::vector<std::string> subject_names;

    void validate() const {
        for (const auto& o : observations) {
            if (!(o.f1 > 0.0 && o.f1 < 1.0)) throw DomainError("f1 must lie in (0, 1) after clamping");
            if (o.disease_idx < 0 || o.disease_idx >= kDiseaseLevels) throw DomainError("disease index out of range");
            if (o.subject_idx < 0 || o.subject_idx >= n_subjects) throw DomainError("subject index out of range");
            if (!std::isfinite(o.age_z)) throw DomainError("age must be finite");
        }
    }
};

struct ModelParams {
    double kappa = 20.0;
    double a = 1.0;
    double b = 0.0;
    std::array<double, 2> s_sex{};
    double d = 0.0;
    std::array<double, kDiseaseIncrements> delta{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    double mu_sub = 0.0;
    double sigma_sub = 1.0;
    std::vector<double> u;
    std::array<double, 2> e_env{};
    std::array<double, 2> h_aid{};

    /// Cumulative disease effect for an ordinal level: d times the first `level` increments.
    double disease_term(int level) const {
        double c = 0.0;
        for (int j = 0; j < level; ++j) c += delta[static_cast<std::size_t>(j)];
        return d * c;
    }

    double linear_predictor(const FactorObservation& o) const {
        return a + b * o.age_z + s_sex[static_cast<std::size_t>(o.sex)] + disease_term(o.disease_idx) +
               u[static_cast<std::size_t>(o.subject_idx)] + e_env[static_cast<std::size_t>(o.environment)] +
               h_aid[static_cast<std::size_t>(o.aid)];
    }
};

inline double inv_logit(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

inline double beta_log_density(double x, double alpha, double beta) {
    return std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta) + (alpha - 1.0) * std::log(x) +
           (beta - 1.0) * std::log1p(-x);
}

namespace detail {

// evaluating in double rather than long double roughly halves the sampler's cost
using DigammaPolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

inline double digamma(double x) { return boost::math::digamma(x, DigammaPolicy{}); }

inline double normal_lpdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * kPi);
}

inline double half_cauchy_lpdf(double x, double scale) {
    const double r = x / scale;
    return std::log(2.0 / (kPi * scale)) - std::log1p(r * r);
}

}  // namespace detail

/// Beta regression of F1 scores with subject random intercepts and an ordinal disease effect.
class FactorModel {
public:
    /// Scale of the zero-centred effect priors.
    static constexpr double kDefaultPriorScale = 1.0 / 100.0;
    static constexpr double kKappaPriorScale = 20.0;

    explicit FactorModel(FactorData data, double prior_scale = kDefaultPriorScale)
        : data_(std::move(data)), scale_(prior_scale) {
        if (!(prior_scale > 0.0)) throw ConfigError("prior_scale must be positive");
        data_.validate();
        // observations sharing every covariate enter the likelihood through three sums
        std::map<std::tuple<int, int, int, int, int, double>, std::size_t> index;
        for (const auto& o : data_.observations) {
            const auto key = std::make_tuple(o.subject_idx, static_cast<int>(o.sex), o.disease_idx,
                                             static_cast<int>(o.environment), static_cast<int>(o.aid), o.age_z);
            auto [it, inserted] = index.emplace(key, cells_.size());
            if (inserted) cells_.push_back({o, 0.0, 0.0, 0.0});
            auto& c = cells_[it->second];
            c.count += 1.0;
            c.sum_log_f += std::log(o.f1);
            c.sum_log1m_f += std::log1p(-o.f1);
        }
    }

    const FactorData& data() const noexcept { return data_; }
    double prior_scale() const noexcept { return scale_; }
    int n_subjects() const noexcept { return data_.n_subjects; }

    void check(const ModelParams& p) const {
        if (!(p.kappa > 0.0) || !std::isfinite(p.kappa)) throw DomainError("kappa must be positive");
        if (!(p.sigma_sub > 0.0) || !std::isfinite(p.sigma_sub)) throw DomainError("sigma_sub must be positive");
        double sum = 0.0;
        for (double v : p.delta) {
            if (!(v >= 0.0)) throw DomainError("delta must be non-negative");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw DomainError("delta must sum to 1");
        if (p.u.size() != static_cast<std::size_t>(data_.n_subjects)) throw DomainError("one subject effect per subject required");
    }

    double log_likelihood(const ModelParams& p) const {
        check(p);
        double lp = 0.0;
        const double lg_kappa = std::lgamma(p.kappa);
        for (const auto& c : cells_) {
            const double mu = inv_logit(p.linear_predictor(c.covariates));
            const double alpha = mu * p.kappa, beta = (1.0 - mu) * p.kappa;
            lp += c.count * (lg_kappa - std::lgamma(alpha) - std::lgamma(beta)) + (alpha - 1.0) * c.sum_log_f +
                  (beta - 1.0) * c.sum_log1m_f;
        }
        return lp;
    }

    double log_prior(const ModelParams& p) const {
        check(p);
        using detail::normal_lpdf;
        double lp = detail::half_cauchy_lpdf(p.kappa, kKappaPriorScale);
        lp += normal_lpdf(p.a, 1.0, 1.0);
        lp += normal_lpdf(p.b, 0.0, scale_);
        for (double v : p.s_sex) lp += normal_lpdf(v, 0.0, scale_);
        lp += normal_lpdf(p.d, 0.0, scale_);
        lp += std::lgamma(static_cast<double>(kDiseaseIncrements));  // flat Dirichlet
        lp += normal_lpdf(p.mu_sub, 0.0, scale_);
        lp += detail::half_cauchy_lpdf(p.sigma_sub, scale_);
        for (double v : p.u) lp += normal_lpdf(v, p.mu_sub, p.sigma_sub);
        for (double v : p.e_env) lp += normal_lpdf(v, 0.0, scale_);
        for (double v : p.h_aid) lp += normal_lpdf(v, 0.0, scale_);
        return lp;
    }

    double log_posterior(const ModelParams& p) const { return log_likelihood(p) + log_prior(p); }

    // -----------------------------------------------------------------------
    // Unconstrained parameterization used by the sampler. Layout:
    // log kappa, a, b, s[2], d, y[K-1] (stick breaking), mu_sub, log sigma_sub, e[2], h[2], z[J]
    // with u = mu_sub + sigma_sub * z.

    static constexpr std::size_t kLogKappa = 0, kA = 1, kB = 2, kSex = 3, kD = 5, kStick = 6,
                                 kMuSub = kStick + kDiseaseIncrements - 1, kLogSigma = kMuSub + 1, kEnv = kLogSigma + 1,
                                 kAid = kEnv + 2, kZ = kAid + 2;

    std::size_t dim() const noexcept { return kZ + static_cast<std::size_t>(data_.n_subjects); }

    ModelParams to_params(std::span<const double> theta) const {
        if (theta.size() != dim()) throw ContractError("unconstrained vector has the wrong length");
        ModelParams p;
        p.kappa = std::exp(theta[kLogKappa]);
        p.a = theta[kA];
        p.b = theta[kB];
        p.s_sex = {theta[kSex], theta[kSex + 1]};
        p.d = theta[kD];
        p.delta = stick_forward(theta.subspan(kStick, kDiseaseIncrements - 1)).delta;
        p.mu_sub = theta[kMuSub];
        p.sigma_sub = std::exp(theta[kLogSigma]);
        p.e_env = {theta[kEnv], theta[kEnv + 1]};
        p.h_aid = {theta[kAid], theta[kAid + 1]};
        p.u.resize(static_cast<std::size_t>(data_.n_subjects));
        for (std::size_t j = 0; j < p.u.size(); ++j) p.u[j] = p.mu_sub + p.sigma_sub * theta[kZ + j];
        return p;
    }

    /// Log density on the unconstrained space (Jacobians included) and its gradient.
    double log_density(std::span<const double> theta, std::span<double> grad) const {
        if (theta.size() != dim() || grad.size() != dim()) throw ContractError("unconstrained vector has the wrong length");
        std::fill(grad.begin(), grad.end(), 0.0);
        const double s2 = scale_ * scale_;

        const double log_kappa = theta[kLogKappa];
        const double kappa = std::exp(log_kappa);
        const double a = theta[kA], b = theta[kB], d = theta[kD], mu_sub = theta[kMuSub];
        const double log_sigma = theta[kLogSigma];
        const double sigma = std::exp(log_sigma);
        if (!std::isfinite(kappa) || !(kappa > 1e-200) || !std::isfinite(sigma) || !(sigma > 0.0))
            return -std::numeric_limits<double>::infinity();
        const auto stick = stick_forward(theta.subspan(kStick, kDiseaseIncrements - 1));
        std::array<double, kDiseaseLevels> cum{};
        for (int k = 1; k < kDiseaseLevels; ++k) cum[static_cast<std::size_t>(k)] = cum[static_cast<std::size_t>(k - 1)] + stick.delta[static_cast<std::size_t>(k - 1)];

        double lp = 0.0;
        // kappa: half-Cauchy plus log Jacobian
        {
            const double r = kappa / kKappaPriorScale;
            lp += std::log(2.0 / (kPi * kKappaPriorScale)) - std::log1p(r * r) + log_kappa;
            grad[kLogKappa] += -2.0 * r * r / (1.0 + r * r) + 1.0;
        }
        lp += -0.5 * (a - 1.0) * (a - 1.0) - 0.5 * std::log(2.0 * kPi);
        grad[kA] += -(a - 1.0);
        auto gaussian0 = [&](std::size_t i) {
            lp += -0.5 * theta[i] * theta[i] / s2 - std::log(scale_) - 0.5 * std::log(2.0 * kPi);
            grad[i] += -theta[i] / s2;
        };
        gaussian0(kB);
        gaussian0(kSex);
        gaussian0(kSex + 1);
        gaussian0(kD);
        gaussian0(kMuSub);
        gaussian0(kEnv);
        gaussian0(kEnv + 1);
        gaussian0(kAid);
        gaussian0(kAid + 1);
        {
            const double r = sigma / scale_;
            lp += std::log(2.0 / (kPi * scale_)) - std::log1p(r * r) + log_sigma;
            grad[kLogSigma] += -2.0 * r * r / (1.0 + r * r) + 1.0;
        }
        lp += std::lgamma(static_cast<double>(kDiseaseIncrements)) + stick.log_jacobian;
        for (std::size_t j = 0; j < static_cast<std::size_t>(data_.n_subjects); ++j) {
            const double z = theta[kZ + j];
            lp += -0.5 * z * z - 0.5 * std::log(2.0 * kPi);
            grad[kZ + j] += -z;
        }

        // likelihood
        std::array<double, kDiseaseIncrements> g_delta{};
        if (!cells_.empty()) {
            const double lg_kappa = std::lgamma(kappa);
            const double dg_kappa = detail::digamma(kappa);
            double g_kappa = 0.0;
            for (const auto& c : cells_) {
                const auto& o = c.covariates;
                const auto subj = static_cast<std::size_t>(o.subject_idx);
                const auto sex = static_cast<std::size_t>(o.sex);
                const auto env = static_cast<std::size_t>(o.environment);
                const auto aid = static_cast<std::size_t>(o.aid);
                const double u = mu_sub + sigma * theta[kZ + subj];
                const double eta = a + b * o.age_z + theta[kSex + sex] + d * cum[static_cast<std::size_t>(o.disease_idx)] + u +
                                   theta[kEnv + env] + theta[kAid + aid];
                const double mu = inv_logit(eta);
                const double alpha = mu * kappa, beta = (1.0 - mu) * kappa;
                // trajectories far out in the tails can underflow a shape parameter
                if (!(alpha > 1e-200 && beta > 1e-200)) return -std::numeric_limits<double>::infinity();
                lp += c.count * (lg_kappa - std::lgamma(alpha) - std::lgamma(beta)) + (alpha - 1.0) * c.sum_log_f +
                      (beta - 1.0) * c.sum_log1m_f;
                const double dg_a = detail::digamma(alpha), dg_b = detail::digamma(beta);
                const double dl_dmu = kappa * (c.count * (dg_b - dg_a) + c.sum_log_f - c.sum_log1m_f);
                g_kappa += c.count * (dg_kappa - mu * dg_a - (1.0 - mu) * dg_b) + mu * c.sum_log_f + (1.0 - mu) * c.sum_log1m_f;
                const double g = dl_dmu * mu * (1.0 - mu);
                grad[kA] += g;
                grad[kB] += g * o.age_z;
                grad[kSex + sex] += g;
                grad[kD] += g * cum[static_cast<std::size_t>(o.disease_idx)];
                for (int j = 0; j < o.disease_idx; ++j) g_delta[static_cast<std::size_t>(j)] += g * d;
                grad[kMuSub] += g;
                grad[kLogSigma] += g * sigma * theta[kZ + subj];
                grad[kZ + subj] += g * sigma;
                grad[kEnv + env] += g;
                grad[kAid + aid] += g;
            }
            grad[kLogKappa] += g_kappa * kappa;
        }
        stick_backward(stick, g_delta, grad.subspan(kStick, kDiseaseIncrements - 1));
        return lp;
    }

    /// Over-dispersed starting point around the prior's bulk.
    template <class Rng>
    std::vector<double> initial_point(Rng& rng) const {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> theta(dim());
        theta[kLogKappa] = std::log(kKappaPriorScale) + u(rng);
        theta[kA] = 1.0 + u(rng);
        for (std::size_t i : {kB, kSex, kSex + 1, kD, kMuSub, kEnv, kEnv + 1, kAid, kAid + 1}) theta[i] = scale_ * u(rng);
        for (std::size_t k = 0; k + 1 < kDiseaseIncrements; ++k) theta[kStick + k] = u(rng);
        theta[kLogSigma] = std::log(scale_) + u(rng);
        for (std::size_t j = kZ; j < dim(); ++j) theta[j] = u(rng);
        return theta;
    }

    /// Prior variances as a starting diagonal metric.
    std::vector<double> initial_inverse_metric() const {
        std::vector<double> m(dim(), 1.0);
        for (std::size_t i : {kB, kSex, kSex + 1, kD, kMuSub, kEnv, kEnv + 1, kAid, kAid + 1}) m[i] = scale_ * scale_;
        return m;
    }

private:
    struct Stick {
        std::array<double, kDiseaseIncrements> delta{};
        std::array<double, kDiseaseIncrements> remaining{};  // mass left before each break
        std::array<double, kDiseaseIncrements> z{};
        double log_jacobian = 0.0;
    };

    static Stick stick_forward(std::span<const double> y) {
        Stick s;
        double rem = 1.0;
        for (std::size_t k = 0; k + 1 < kDiseaseIncrements; ++k) {
            // offset centres y = 0 on the uniform simplex point
            const double z = inv_logit(y[k] - std::log(static_cast<double>(kDiseaseIncrements - 1 - k)));
            s.z[k] = z;
            s.remaining[k] = rem;
            s.delta[k] = rem * z;
            s.log_jacobian += std::log(z) + std::log1p(-z) + std::log(rem);
            rem *= 1.0 - z;
        }
        s.remaining[kDiseaseIncrements - 1] = rem;
        s.delta[kDiseaseIncrements - 1] = rem;
        return s;
    }

    /// Adds d(loglik)/dy plus the Jacobian gradient, given the gradient with respect to delta.
    static void stick_backward(const Stick& s, const std::array<double, kDiseaseIncrements>& g_delta, std::span<double> g_y) {
        double g_rem = g_delta[kDiseaseIncrements - 1];
        for (std::size_t k = kDiseaseIncrements - 1; k-- > 0;) {
            const double z = s.z[k], rem = s.remaining[k];
            const double g_z = g_delta[k] * rem - g_rem * rem + 1.0 / z - 1.0 / (1.0 - z);
            g_rem = g_delta[k] * z + g_rem * (1.0 - z) + 1.0 / rem;
            g_y[k] += g_z * z * (1.0 - z);
        }
    }

    struct Cell {
        FactorObservation covariates;
        double count;
        double sum_log_f;
        double sum_log1m_f;
    };

    FactorData data_;
    double scale_;
    std::vector<Cell> cells_;
};

// ---------------------------------------------------------------------------
// Sampler: Hamiltonian Monte Carlo with a diagonal metric and dual-averaging step size,
// both adapted during warmup, and a jittered trajectory length.

struct HmcConfig {
    int chains = 4;
    int warmup = 1000;
    int draws = 1000;  ///< per chain
    std::uint64_t seed = 1;
    double target_accept = 0.9;
    double integration_time = 2.0;
    int max_steps = 256;

    void validate() const {
        if (chains < 2) throw ConfigError("at least two chains are needed for R-hat");
        if (warmup < 20) throw ConfigError("warmup must be at least 20 iterations");
        if (draws < 10) throw ConfigError("draws must be at least 10 per chain");
        if (!(target_accept > 0.0 && target_accept < 1.0)) throw ConfigError("target_accept must lie in (0, 1)");
        if (!(integration_time > 0.0)) throw ConfigError("integration_time must be positive");
        if (max_steps < 1) throw ConfigError("max_steps must be positive");
    }
};

struct ChainResult {
    std::vector<ModelParams> draws;
    double acceptance_rate = 0.0;
    double step_size = 0.0;
    int divergences = 0;
};

struct PosteriorSample {
    std::vector<ChainResult> chains;

    std::size_t total_draws() const {
        std::size_t n = 0;
        for (const auto& c : chains) n += c.draws.size();
        return n;
    }
    double acceptance_rate() const {
        double s = 0.0;
        for (const auto& c : chains) s += c.acceptance_rate;
        return chains.empty() ? 0.0 : s / static_cast<double>(chains.size());
    }
    int divergences() const {
        int n = 0;
        for (const auto& c : chains) n += c.divergences;
        return n;
    }
};

namespace detail {

class HmcChain {
public:
    HmcChain(const FactorModel& model, const HmcConfig& cfg, std::uint64_t seed)
        : model_(model), cfg_(cfg), rng_(seed), n_(model.dim()), theta_(n_), grad_(n_), inv_metric_(model.initial_inverse_metric()) {}

    ChainResult run() {
        theta_ = model_.initial_point(rng_);
        logp_ = model_.log_density(theta_, grad_);
        for (int attempt = 0; !std::isfinite(logp_) && attempt < 100; ++attempt) {
            theta_ = model_.initial_point(rng_);
            logp_ = model_.log_density(theta_, grad_);
        }
        if (!std::isfinite(logp_)) throw DiagnosticsError("could not find a finite starting point; check the input table");

        step_ = initial_step_size();
        restart_adaptation();

        // warmup windows: fast buffer, doubling slow windows for the metric, fast buffer
        const int w = cfg_.warmup;
        const int init_buffer = std::max(1, static_cast<int>(0.15 * w));
        const int term_buffer = std::max(1, static_cast<int>(0.1 * w));
        const int slow = std::max(3, w - init_buffer - term_buffer);
        std::vector<int> window_ends;
        {
            const int base = std::max(1, slow / 7);
            int end = init_buffer;
            for (int len : {base, 2 * base}) window_ends.push_back(end += len);
            window_ends.push_back(init_buffer + slow);
        }
        std::vector<double> sum(n_, 0.0), sum_sq(n_, 0.0);
        int in_window = 0;
        std::size_t next_window = 0;

        ChainResult out;
        int accepted_sum = 0;
        double accept_stat_sum = 0.0;
        for (int it = 0; it < w + cfg_.draws; ++it) {
            const bool warm = it < w;
            const auto [accept_prob, divergent] = transition();
            if (warm) {
                adapt_step(accept_prob);
                if (it >= init_buffer && next_window < window_ends.size()) {
                    for (std::size_t i = 0; i < n_; ++i) {
                        sum[i] += theta_[i];
                        sum_sq[i] += theta_[i] * theta_[i];
                    }
                    ++in_window;
                    if (it + 1 == window_ends[next_window]) {
                        const double k = in_window;
                        for (std::size_t i = 0; i < n_; ++i) {
                            const double m = sum[i] / k;
                            const double var = std::max(0.0, (sum_sq[i] - k * m * m) / std::max(1.0, k - 1.0));
                            inv_metric_[i] = (k / (k + 5.0)) * var + 1e-3 * (5.0 / (k + 5.0));
                        }
                        std::fill(sum.begin(), sum.end(), 0.0);
                        std::fill(sum_sq.begin(), sum_sq.end(), 0.0);
                        in_window = 0;
                        ++next_window;
                        restart_adaptation();
                    }
                }
                if (it + 1 == w) step_ = std::exp(log_step_bar_);
            } else {
                accept_stat_sum += accept_prob;
                if (divergent) ++out.divergences;
                ++accepted_sum;
                out.draws.push_back(model_.to_params(theta_));
            }
        }
        out.acceptance_rate = accepted_sum > 0 ? accept_stat_sum / accepted_sum : 0.0;
        out.step_size = step_;
        return out;
    }

private:
    struct Step {
        double accept_prob;
        bool divergent;
    };

    double kinetic(const std::vector<double>& p) const {
        double k = 0.0;
        for (std::size_t i = 0; i < n_; ++i) k += p[i] * p[i] * inv_metric_[i];
        return 0.5 * k;
    }

    std::vector<double> draw_momentum() {
        std::vector<double> p(n_);
        for (std::size_t i = 0; i < n_; ++i) p[i] = normal_(rng_) / std::sqrt(inv_metric_[i]);
        return p;
    }

    /// Leapfrog integration in place; returns the log density at the end point.
    double leapfrog(std::vector<double>& q, std::vector<double>& p, std::vector<double>& g, int steps, double eps) const {
        double lp = 0.0;
        for (int s = 0; s < steps; ++s) {
            for (std::size_t i = 0; i < n_; ++i) p[i] += 0.5 * eps * g[i];
            for (std::size_t i = 0; i < n_; ++i) q[i] += eps * inv_metric_[i] * p[i];
            lp = model_.log_density(q, g);
            if (!std::isfinite(lp)) return lp;
            for (std::size_t i = 0; i < n_; ++i) p[i] += 0.5 * eps * g[i];
        }
        return lp;
    }

    Step transition() {
        auto p = draw_momentum();
        const double h0 = -logp_ + kinetic(p);
        std::uniform_real_distribution<double> jitter(0.5, 1.5);
        const int steps = std::clamp(static_cast<int>(std::ceil(jitter(rng_) * cfg_.integration_time / step_)), 1, cfg_.max_steps);
        auto q = theta_;
        auto g = grad_;
        const double lp = leapfrog(q, p, g, steps, step_);
        const double h1 = std::isfinite(lp) ? -lp + kinetic(p) : std::numeric_limits<double>::infinity();
        const bool divergent = !(h1 - h0 < 1000.0);
        const double accept = divergent ? 0.0 : std::min(1.0, std::exp(h0 - h1));
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < accept) {
            theta_ = std::move(q);
            grad_ = std::move(g);
            logp_ = lp;
        }
        return {accept, divergent};
    }

    double initial_step_size() {
        double eps = 0.1;
        auto try_eps = [&](double e) {
            auto p = draw_momentum();
            const double h0 = -logp_ + kinetic(p);
            auto q = theta_;
            auto g = grad_;
            const double lp = leapfrog(q, p, g, 1, e);
            return std::isfinite(lp) ? h0 - (-lp + kinetic(p)) : -std::numeric_limits<double>::infinity();
        };
        const double first = try_eps(eps);
        const int direction = first > std::log(0.8) ? 1 : -1;
        for (int k = 0; k < 50; ++k) {
            const double d = try_eps(eps);
            if (direction == 1 ? !(d > std::log(0.8)) : d > std::log(0.8)) break;
            eps = direction == 1 ? eps * 2.0 : eps * 0.5;
        }
        return eps;
    }

    void restart_adaptation() {
        mu_ = std::log(10.0 * step_);
        h_bar_ = 0.0;
        log_step_bar_ = std::log(step_);
        adapt_count_ = 0;
    }

    void adapt_step(double accept_prob) {
        constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;
        ++adapt_count_;
        const double t = adapt_count_;
        h_bar_ = (1.0 - 1.0 / (t + t0)) * h_bar_ + (cfg_.target_accept - accept_prob) / (t + t0);
        const double log_step = mu_ - std::sqrt(t) / gamma * h_bar_;
        const double w = std::pow(t, -kappa);
        log_step_bar_ = w * log_step + (1.0 - w) * log_step_bar_;
        step_ = std::exp(log_step);
    }

    const FactorModel& model_;
    HmcConfig cfg_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::size_t n_;
    std::vector<double> theta_, grad_, inv_metric_;
    double logp_ = 0.0;
    double step_ = 0.1;
    double mu_ = 0.0, h_bar_ = 0.0, log_step_bar_ = 0.0;
    int adapt_count_ = 0;
};

}  // namespace detail

/// Runs `cfg.chains` chains sequentially; chain c is seeded with seed + c.
inline PosteriorSample sample_posterior(const FactorModel& model, const HmcConfig& cfg = {}) {
    cfg.validate();
    PosteriorSample out;
    for (int c = 0; c < cfg.chains; ++c)
        out.chains.push_back(detail::HmcChain(model, cfg, cfg.seed + static_cast<std::uint64_t>(c)).run());
    if (out.acceptance_rate() < 0.05)
        throw DiagnosticsError("sampler acceptance rate is " + std::to_string(out.acceptance_rate()) +
                               "; increase warmup or check the input table for degenerate F1 values");
    return out;
}

/// Split-chain potential scale reduction of one scalar quantity.
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<double>> halves;
    for (const auto& c : chains) {
        const std::size_t h = c.size() / 2;
        if (h < 2) throw EmptySetError("chains are too short for R-hat");
        halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(h));
        halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(h), c.end());
    }
    const auto n = static_cast<double>(halves.front().size());
    std::vector<double> means, vars;
    for (const auto& h : halves) {
        means.push_back(mean(h));
        vars.push_back(sample_sd(h) * sample_sd(h));
    }
    const double w = mean(vars);
    const double b = n * sample_sd(means) * sample_sd(means);
    if (w <= 0.0) return b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    const double var_plus = (n - 1.0) / n * w + b / n;
    return std::sqrt(var_plus / w);
}

struct PosteriorSummary {
    std::string parameter;
    double mean = 0.0;
    double median = 0.0;
    double std = 0.0;
    double q5 = 0.0;
    double q95 = 0.0;
    double iqr = 0.0;
    double z_score = 0.0;
    double p_gt_z = 1.0;  ///< two-sided normal tail probability of |z|
    double r_hat = 1.0;
};

inline PosteriorSummary summarize_draws(std::string name, std::span<const double> values) {
    if (values.size() < 2) throw EmptySetError("need at least two draws to summarize '" + name + "'");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    PosteriorSummary p;
    p.parameter = std::move(name);
    p.mean = mean(s);
    p.median = quantile_sorted(s, 0.5);
    p.std = sample_sd(s);
    p.q5 = quantile_sorted(s, 0.05);
    p.q95 = quantile_sorted(s, 0.95);
    p.iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    p.z_score = p.std > 0.0 ? p.mean / p.std : 0.0;
    p.p_gt_z = std::erfc(std::abs(p.z_score) / std::sqrt(2.0));
    return p;
}

struct ContrastDef {
    std::string_view name;
    double (*value)(const ModelParams&);
};

inline const std::array<ContrastDef, 4>& contrast_definitions() {
    static const std::array<ContrastDef, 4> defs{{
        {"Female - Male", [](const ModelParams& p) { return p.s_sex[0] - p.s_sex[1]; }},
        {"Indoors - Outdoors", [](const ModelParams& p) { return p.e_env[0] - p.e_env[1]; }},
        {"With aid - Without aid", [](const ModelParams& p) { return p.h_aid[0] - p.h_aid[1]; }},
        {"Disease", [](const ModelParams& p) { return p.d; }},
    }};
    return defs;
}

inline std::vector<PosteriorSummary> contrasts(const PosteriorSample& sample) {
    if (sample.total_draws() == 0) throw EmptySetError("no posterior draws");
    std::vector<PosteriorSummary> out;
    for (const auto& def : contrast_definitions()) {
        std::vector<std::vector<double>> per_chain;
        std::vector<double> pooled;
        for (const auto& c : sample.chains) {
            auto& v = per_chain.emplace_back();
            for (const auto& d : c.draws) v.push_back(def.value(d));
            pooled.insert(pooled.end(), v.begin(), v.end());
        }
        auto s = summarize_draws(std::string(def.name), pooled);
        s.r_hat = sample.chains.size() >= 2 ? split_rhat(per_chain) : 1.0;
        out.push_back(std::move(s));
    }
    return out;
}

/// Largest split R-hat over the contrasts and the main scalar parameters.
inline double max_rhat(const PosteriorSample& sample) {
    auto collect = [&](auto f) {
        std::vector<std::vector<double>> per_chain;
        for (const auto& c : sample.chains) {
            auto& v = per_chain.emplace_back();
            for (const auto& d : c.draws) v.push_back(f(d));
        }
        return split_rhat(per_chain);
    };
    double r = 1.0;
    for (const auto& def : contrast_definitions()) r = std::max(r, collect(def.value));
    r = std::max(r, collect([](const ModelParams& p) { return p.a; }));
    r = std::max(r, collect([](const ModelParams& p) { return p.b; }));
    r = std::max(r, collect([](const ModelParams& p) { return std::log(p.kappa); }));
    r = std::max(r, collect([](const ModelParams& p) { return p.mu_sub; }));
    r = std::max(r, collect([](const ModelParams& p) { return std::log(p.sigma_sub); }));
    return r;
}

// ---------------------------------------------------------------------------
// Table input

namespace detail {

inline Sex parse_sex(std::string_view s, std::size_t line) {
    if (s == "F" || s == "female" || s == "Female") return Sex::Female;
    if (s == "M" || s == "male" || s == "Male") return Sex::Male;
    throw ParseError("unknown sex '" + std::string(s) + "' (expected F or M)", line);
}

inline int parse_disease(std::string_view s, std::size_t line) {
    static const std::map<std::string, int, std::less<>> names{{"HC", 0}, {"mild", 1}, {"moderate", 2}, {"severe", 3},
                                                               {"0", 0},  {"1", 1},    {"2", 2},        {"3", 3}};
    const auto it = names.find(s);
    if (it == names.end()) throw ParseError("unknown disease level '" + std::string(s) + "' (expected 0-3 or HC/mild/moderate/severe)", line);
    return it->second;
}

inline Environment parse_environment(std::string_view s, std::size_t line) {
    if (s == "Indoor" || s == "indoor") return Environment::Indoor;
    if (s == "Outdoor" || s == "outdoor") return Environment::Outdoor;
    throw ParseError("unknown environment '" + std::string(s) + "' (expected Indoor or Outdoor)", line);
}

inline Aid parse_aid(std::string_view s, std::size_t line) {
    if (s == "WithAid" || s == "with") return Aid::WithAid;
    if (s == "WithoutAid" || s == "without") return Aid::WithoutAid;
    throw ParseError("unknown aid value '" + std::string(s) + "' (expected WithAid or WithoutAid)", line);
}

}  // namespace detail

/// Reads `f1,age,sex,disease,subject,environment,aid`. F1 is clamped away from 0 and 1 and
/// age is standardized over the table.
inline FactorData load_factor_table(std::istream& in) {
    csv::LineReader reader(in);
    std::string line;
    if (!reader.next(line)) throw ParseError("empty factor table", reader.line_number());
    const auto header = csv::split(line);
    static const std::vector<std::string> expected{"f1", "age", "sex", "disease", "subject", "environment", "aid"};
    if (header.size() != expected.size() || !std::equal(header.begin(), header.end(), expected.begin()))
        throw ParseError("factor table header must be f1,age,sex,disease,subject,environment,aid", reader.line_number());

    FactorData data;
    std::map<std::string, int> subjects;
    std::vector<double> ages;
    while (reader.next(line)) {
        const auto n = reader.line_number();
        const auto f = csv::split(line);
        if (f.size() != expected.size())
            throw ParseError("expected 7 fields, found " + std::to_string(f.size()), n);
        FactorObservation o;
        const double f1 = csv::parse_double(f[0], n);
        if (!(f1 >= 0.0 && f1 <= 1.0)) throw ParseError("f1 must lie in [0, 1]", n);
        o.f1 = std::clamp(f1, kF1Clamp, 1.0 - kF1Clamp);
        ages.push_back(csv::parse_double(f[1], n));
        o.sex = detail::parse_sex(f[2], n);
        o.disease_idx = detail::parse_disease(f[3], n);
        const std::string subject(f[4]);
        if (subject.empty()) throw ParseError("empty subject id", n);
        const auto [it, inserted] = subjects.emplace(subject, static_cast<int>(subjects.size()));
        if (inserted) data.subject_names.push_back(subject);
        o.subject_idx = it->second;
        o.environment = detail::parse_environment(f[5], n);
        o.aid = detail::parse_aid(f[6], n);
        data.observations.push_back(o);
    }
    if (data.observations.empty()) throw EmptySetError("factor table has no rows");
    const double m = mean(ages);
    const double sd = ages.size() > 1 ? sample_sd(ages) : 0.0;
    for (std::size_t i = 0; i < ages.size(); ++i) data.observations[i].age_z = sd > 0.0 ? (ages[i] - m) / sd : 0.0;
    data.n_subjects = static_cast<int>(subjects.size());
    return data;
}

inline FactorData load_factor_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open factor table '" + path + "'");
    return load_factor_table(in);
}

// ---------------------------------------------------------------------------
// Simulation for calibration studies

struct FactorDesign {
    int subjects = 60;
    int observations_per_subject = 10;
};

/// Parameters drawn from the prior. Kappa is truncated to [2, 500] so simulated F1 values stay
/// inside double precision.
template <class Rng>
ModelParams draw_prior(int n_subjects, double prior_scale, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    auto half_cauchy = [&](double scale) { return std::abs(scale * std::tan(kPi * (std::uniform_real_distribution<double>(0.0, 1.0)(rng) - 0.5))); };
    ModelParams p;
    do p.kappa = half_cauchy(FactorModel::kKappaPriorScale);
    while (p.kappa < 2.0 || p.kappa > 500.0);
    p.a = 1.0 + z(rng);
    p.b = prior_scale * z(rng);
    p.s_sex = {prior_scale * z(rng), prior_scale * z(rng)};
    p.d = prior_scale * z(rng);
    std::gamma_distribution<double> g(1.0, 1.0);
    double total = 0.0;
    for (auto& v : p.delta) total += (v = g(rng));
    for (auto& v : p.delta) v /= total;
    p.mu_sub = prior_scale * z(rng);
    p.sigma_sub = half_cauchy(prior_scale);
    p.u.resize(static_cast<std::size_t>(n_subjects));
    for (auto& v : p.u) v = p.mu_sub + p.sigma_sub * z(rng);
    p.e_env = {prior_scale * z(rng), prior_scale * z(rng)};
    p.h_aid = {prior_scale * z(rng), prior_scale * z(rng)};
    return p;
}

/// Observations from known parameters. Sex, disease level, age and aid use are per subject;
/// environment varies per observation.
template <class Rng>
FactorData simulate_factor_data(const ModelParams& truth, const FactorDesign& design, Rng& rng) {
    if (truth.u.size() != static_cast<std::size_t>(design.subjects)) throw ContractError("one subject effect per subject required");
    std::normal_distribution<double> z(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    FactorData data;
    data.n_subjects = design.subjects;
    for (int j = 0; j < design.subjects; ++j) {
        data.subject_names.push_back("S" + std::to_string(j + 1));
        FactorObservation base;
        base.subject_idx = j;
        base.sex = j % 2 == 0 ? Sex::Female : Sex::Male;
        base.disease_idx = (j / 2) % kDiseaseLevels;
        base.age_z = z(rng);
        base.aid = coin(rng) ? Aid::WithAid : Aid::WithoutAid;
        for (int k = 0; k < design.observations_per_subject; ++k) {
            FactorObservation o = base;
            o.environment = coin(rng) ? Environment::Indoor : Environment::Outdoor;
            const double mu = inv_logit(truth.linear_predictor(o));
            std::gamma_distribution<double> ga(mu * truth.kappa, 1.0), gb((1.0 - mu) * truth.kappa, 1.0);
            const double x = ga(rng), y = gb(rng);
            o.f1 = std::clamp(x / (x + y), kF1Clamp, 1.0 - kF1Clamp);
            data.observations.push_back(o);
        }
    }
    return data;
}

}  // namespace gaitkit

#endif
