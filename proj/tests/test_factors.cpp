#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gaitkit/factors.hpp"

using namespace gaitkit;

namespace {

FactorData single_observation(double f1) {
    FactorData d;
    d.n_subjects = 1;
    d.subject_names = {"s"};
    FactorObservation o;
    o.f1 = f1;
    d.observations = {o};
    return d;
}

ModelParams zero_params(int subjects) {
    ModelParams p;
    p.a = 0.0;
    p.u.assign(static_cast<std::size_t>(subjects), 0.0);
    return p;
}

FactorData simulated(std::uint64_t seed, double scale = FactorModel::kDefaultPriorScale) {
    std::mt19937_64 rng(seed);
    const auto truth = draw_prior(60, scale, rng);
    return simulate_factor_data(truth, {60, 10}, rng);
}

HmcConfig quick(std::uint64_t seed = 1) {
    HmcConfig c;
    c.warmup = 150;
    c.draws = 60;
    c.chains = 2;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(BetaModel, Reparameterization) {
    EXPECT_DOUBLE_EQ(inv_logit(0.0), 0.5);
    const double mu = inv_logit(0.0), kappa = 20.0;
    EXPECT_DOUBLE_EQ(mu * kappa, 10.0);
    EXPECT_DOUBLE_EQ((1.0 - mu) * kappa, 10.0);
    EXPECT_NEAR(inv_logit(-800.0), 0.0, 1e-300);
    EXPECT_NEAR(inv_logit(800.0), 1.0, 1e-15);
}

TEST(BetaModel, UniformDensityIsZero) {
    EXPECT_NEAR(beta_log_density(0.5, 1.0, 1.0), 0.0, 1e-15);
    const FactorModel m(single_observation(0.5));
    ModelParams p = zero_params(1);
    p.kappa = 2.0;
    EXPECT_NEAR(m.log_likelihood(p), 0.0, 1e-12);
}

TEST(BetaModel, DiseaseTermIsOrdinal) {
    ModelParams p;
    p.d = -1.5;
    p.delta = {0.2, 0.5, 0.3};
    EXPECT_EQ(p.disease_term(0), 0.0);
    EXPECT_NEAR(p.disease_term(1), -0.3, 1e-15);
    EXPECT_NEAR(p.disease_term(2), -1.05, 1e-15);
    EXPECT_NEAR(p.disease_term(3), -1.5, 1e-15);
}

TEST(BetaModel, InvalidParametersRejected) {
    const FactorModel m(single_observation(0.4));
    ModelParams p = zero_params(1);
    p.kappa = -1.0;
    EXPECT_THROW(m.log_posterior(p), DomainError);
    p = zero_params(1);
    p.delta = {0.5, 0.5, 0.5};
    EXPECT_THROW(m.log_posterior(p), DomainError);
    p = zero_params(1);
    p.sigma_sub = 0.0;
    EXPECT_THROW(m.log_posterior(p), DomainError);
    EXPECT_THROW(FactorModel(single_observation(0.4), 0.0), ConfigError);
}

TEST(BetaModel, LikelihoodIgnoresInterceptSubjectTradeoff) {
    const FactorModel m(simulated(3));
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 0.3);
    ModelParams p = zero_params(60);
    p.a = 1.1;
    p.kappa = 25.0;
    for (auto& u : p.u) u = n(rng);
    const double base = m.log_likelihood(p);
    for (double c : {-1.0, 0.25, 2.0}) {
        ModelParams q = p;
        q.a += c;
        for (auto& u : q.u) u -= c;
        EXPECT_NEAR(m.log_likelihood(q), base, 1e-9 * std::abs(base));
    }
}

TEST(BetaModel, LogDensityMatchesConstrainedPosterior) {
    // the unconstrained density differs from the constrained posterior only by the Jacobian terms
    const FactorModel m(simulated(8));
    std::mt19937_64 rng(9);
    auto theta = m.initial_point(rng);
    std::vector<double> g(m.dim());
    const double lp = m.log_density(theta, g);
    const auto p = m.to_params(theta);
    EXPECT_TRUE(std::isfinite(lp));
    EXPECT_TRUE(std::isfinite(m.log_posterior(p)));
    double sum = 0.0;
    for (double d : p.delta) {
        EXPECT_GE(d, 0.0);
        sum += d;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_GT(p.kappa, 0.0);
    EXPECT_GT(p.sigma_sub, 0.0);
}

TEST(BetaModel, GradientMatchesFiniteDifferences) {
    for (double scale : {FactorModel::kDefaultPriorScale, 1.0}) {
        const FactorModel m(simulated(5, scale), scale);
        std::mt19937_64 rng(6);
        std::vector<double> g(m.dim()), scratch(m.dim());
        double worst = 0.0;
        for (int point = 0; point < 100; ++point) {
            const auto theta = m.initial_point(rng);
            m.log_density(theta, g);
            for (std::size_t i = 0; i < m.dim(); ++i) {
                auto up = theta, down = theta;
                const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
                up[i] += h;
                down[i] -= h;
                const double fd = (m.log_density(up, scratch) - m.log_density(down, scratch)) / (2 * h);
                worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
            }
        }
        EXPECT_LT(worst, 1e-5) << "prior scale " << scale;
    }
}

TEST(Sampler, SameSeedSameDraws) {
    const FactorModel m(simulated(2));
    const auto a = sample_posterior(m, quick(11)), b = sample_posterior(m, quick(11));
    ASSERT_EQ(a.chains.size(), b.chains.size());
    for (std::size_t c = 0; c < a.chains.size(); ++c) {
        ASSERT_EQ(a.chains[c].draws.size(), b.chains[c].draws.size());
        for (std::size_t k = 0; k < a.chains[c].draws.size(); ++k) {
            EXPECT_EQ(a.chains[c].draws[k].a, b.chains[c].draws[k].a);
            EXPECT_EQ(a.chains[c].draws[k].kappa, b.chains[c].draws[k].kappa);
            EXPECT_EQ(a.chains[c].draws[k].u, b.chains[c].draws[k].u);
        }
    }
    const auto c = sample_posterior(m, quick(12));
    EXPECT_NE(c.chains[0].draws.back().a, a.chains[0].draws.back().a);
}

TEST(Sampler, DrawsRespectConstraints) {
    const FactorModel m(simulated(21));
    const auto s = sample_posterior(m, quick(3));
    for (const auto& chain : s.chains)
        for (const auto& d : chain.draws) {
            double sum = 0.0;
            for (double v : d.delta) {
                ASSERT_GE(v, 0.0);
                sum += v;
            }
            ASSERT_NEAR(sum, 1.0, 1e-9);
            ASSERT_GT(d.kappa, 0.0);
            ASSERT_GT(d.sigma_sub, 0.0);
            ASSERT_EQ(d.disease_term(0), 0.0);
            ASSERT_NEAR(d.disease_term(3), d.d, 1e-12);
            for (const auto& o : m.data().observations) {
                const double mu = inv_logit(d.linear_predictor(o));
                ASSERT_GT(mu, 0.0);
                ASSERT_LT(mu, 1.0);
            }
        }
}

TEST(Sampler, PriorOnlyInterceptMean) {
    const FactorModel m(FactorData{});
    const auto s = sample_posterior(m, HmcConfig{});
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : s.chains)
        for (const auto& d : c.draws) sum += d.a, ++n;
    EXPECT_NEAR(sum / static_cast<double>(n), 1.0, 0.1);
}

TEST(Sampler, RecoversLargeEnvironmentContrast) {
    // fixed moderate truth at prior scale 1 with Indoors - Outdoors = -2
    const double scale = 1.0;
    ModelParams truth;
    truth.kappa = 30.0;
    truth.a = 1.0;
    truth.b = 0.1;
    truth.s_sex = {0.1, -0.1};
    truth.d = -0.3;
    truth.delta = {0.3, 0.3, 0.4};
    truth.mu_sub = 0.0;
    truth.sigma_sub = 0.3;
    truth.e_env = {-1.0, 1.0};
    truth.h_aid = {0.05, -0.05};
    for (std::uint64_t seed : {1, 2, 3}) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> z(0.0, 1.0);
        truth.u.assign(60, 0.0);
        for (auto& u : truth.u) u = truth.sigma_sub * z(rng);
        const FactorModel m(simulate_factor_data(truth, {60, 10}, rng), scale);
        HmcConfig cfg;
        cfg.warmup = 500;
        cfg.draws = 500;
        cfg.seed = 100 + seed;
        const auto rows = contrasts(sample_posterior(m, cfg));
        const auto& env = rows[1];
        EXPECT_EQ(env.parameter, "Indoors - Outdoors");
        EXPECT_LE(env.q5, -2.0) << "seed " << seed;
        EXPECT_GE(env.q95, -2.0) << "seed " << seed;
        EXPECT_LT(env.r_hat, 1.05);
    }
}

TEST(Contrasts, EqualSexEffectsGiveZero) {
    PosteriorSample s;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int c = 0; c < 2; ++c) {
        ChainResult chain;
        for (int k = 0; k < 50; ++k) {
            ModelParams p;
            p.s_sex[0] = p.s_sex[1] = n(rng);
            p.e_env = {n(rng), n(rng)};
            chain.draws.push_back(p);
        }
        s.chains.push_back(chain);
    }
    const auto rows = contrasts(s);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].parameter, "Female - Male");
    EXPECT_EQ(rows[0].mean, 0.0);
    EXPECT_EQ(rows[0].q5, 0.0);
    EXPECT_EQ(rows[0].q95, 0.0);
    for (const auto& r : rows) {
        EXPECT_LE(r.q5, r.median);
        EXPECT_LE(r.median, r.q95);
    }
    EXPECT_THROW(contrasts(PosteriorSample{}), EmptySetError);
}

TEST(Contrasts, SummaryStatistics) {
    const auto s = summarize_draws("x", std::vector{1.0, 2.0, 3.0, 4.0, 5.0});
    EXPECT_DOUBLE_EQ(s.mean, 3.0);
    EXPECT_DOUBLE_EQ(s.median, 3.0);
    EXPECT_DOUBLE_EQ(s.std, std::sqrt(2.5));
    EXPECT_DOUBLE_EQ(s.iqr, 2.0);
    EXPECT_DOUBLE_EQ(s.z_score, 3.0 / std::sqrt(2.5));
    EXPECT_NEAR(s.p_gt_z, std::erfc(s.z_score / std::sqrt(2.0)), 1e-15);
}

TEST(Diagnostics, SplitRhat) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::vector<double>> mixed(4, std::vector<double>(500));
    for (auto& c : mixed)
        for (auto& v : c) v = n(rng);
    EXPECT_LT(split_rhat(mixed), 1.02);
    auto stuck = mixed;
    for (auto& v : stuck[0]) v += 5.0;
    EXPECT_GT(split_rhat(stuck), 1.5);
    // a drifting chain is caught by splitting it in half
    std::vector<std::vector<double>> drift(2, std::vector<double>(400));
    for (auto& c : drift)
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = n(rng) + (i < 200 ? -3.0 : 3.0);
    EXPECT_GT(split_rhat(drift), 1.5);
}

TEST(FactorTable, ParsesAndStandardizes) {
    std::istringstream in(
        "f1,age,sex,disease,subject,environment,aid\n"
        "0.95,30,F,0,a,Indoor,WithoutAid\n"
        "1.0,50,M,severe,b,Outdoor,WithAid\n"
        "0.0,70,M,2,b,Indoor,WithAid\n");
    const auto d = load_factor_table(in);
    ASSERT_EQ(d.observations.size(), 3u);
    EXPECT_EQ(d.n_subjects, 2);
    EXPECT_EQ(d.observations[1].subject_idx, 1);
    EXPECT_EQ(d.observations[1].disease_idx, 3);
    EXPECT_EQ(d.observations[1].f1, 1.0 - kF1Clamp);
    EXPECT_EQ(d.observations[2].f1, kF1Clamp);
    EXPECT_NEAR(d.observations[0].age_z, -1.0, 1e-12);
    EXPECT_NEAR(d.observations[1].age_z, 0.0, 1e-12);
    EXPECT_EQ(d.observations[0].sex, Sex::Female);
    EXPECT_EQ(d.observations[1].environment, Environment::Outdoor);
    EXPECT_EQ(d.observations[1].aid, Aid::WithAid);
}

TEST(FactorTable, MalformedInputReportsLine) {
    auto line_of = [](const std::string& text) -> std::size_t {
        std::istringstream in(text);
        try {
            load_factor_table(in);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    const std::string header = "f1,age,sex,disease,subject,environment,aid\n";
    EXPECT_EQ(line_of(header + "0.9,30,F,0,a,Indoor,WithoutAid\n0.9,30,X,0,a,Indoor,WithoutAid\n"), 3u);
    EXPECT_EQ(line_of(header + "1.5,30,F,0,a,Indoor,WithoutAid\n"), 2u);
    EXPECT_EQ(line_of(header + "0.9,30,F,7,a,Indoor,WithoutAid\n"), 2u);
    EXPECT_EQ(line_of(header + "0.9,30,F,0,a,Indoor\n"), 2u);
    EXPECT_EQ(line_of("f1,age\n"), 1u);
    std::istringstream empty_rows(header);
    EXPECT_THROW(load_factor_table(empty_rows), EmptySetError);
}

TEST(Simulation, DesignShape) {
    std::mt19937_64 rng(4);
    const auto truth = draw_prior(60, 0.01, rng);
    EXPECT_GE(truth.kappa, 2.0);
    EXPECT_LE(truth.kappa, 500.0);
    const auto d = simulate_factor_data(truth, {60, 10}, rng);
    EXPECT_EQ(d.observations.size(), 600u);
    EXPECT_NO_THROW(d.validate());
    // sex alternates by subject and disease level by subject pair, so 30 pairs spread over 4 levels
    int levels[kDiseaseLevels] = {}, female = 0;
    for (const auto& o : d.observations) {
        ++levels[o.disease_idx];
        female += o.sex == Sex::Female;
    }
    EXPECT_EQ(female, 300);
    for (int c : levels) {
        EXPECT_GE(c, 140);
        EXPECT_LE(c, 160);
    }
}
