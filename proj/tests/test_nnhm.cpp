#include <cmath>

#include "datasets.hpp"
#include "doctest.h"
#include "nnhm.hpp"
#include "oracles.hpp"

using namespace metatrace;

namespace {

Dataset two_studies() {
    Dataset d;
    d.labels = {"a", "b"};
    d.y = {0.0, 2.0};
    d.se = {1.0, 2.0};
    return d;
}

}  // namespace

TEST_CASE("gls matches the closed form for two studies") {
    Dataset d = two_studies();
    DesignMatrix X = DesignMatrix::intercept_only(2);
    const double tau = 0.5;
    ConditionalFit fit = gls_fit(d, X, tau);

    double w0 = 1.0 / (1.0 + tau * tau), w1 = 1.0 / (4.0 + tau * tau);
    double mu = (w0 * d.y[0] + w1 * d.y[1]) / (w0 + w1);
    CHECK(fit.beta_hat[0] == doctest::Approx(mu).epsilon(1e-14));
    CHECK(fit.beta_cov[0] == doctest::Approx(1.0 / (w0 + w1)).epsilon(1e-14));
    CHECK(fit.weights[0] == doctest::Approx(w0));
    CHECK(fit.weights[1] == doctest::Approx(w1));

    double q = w0 * (d.y[0] - mu) * (d.y[0] - mu) + w1 * (d.y[1] - mu) * (d.y[1] - mu);
    CHECK(fit.q_gls == doctest::Approx(q).epsilon(1e-12));

    double b0 = 1.0 / (1.0 + tau * tau);  // shrinkage of study a
    CHECK(fit.shrink_factor[0] == doctest::Approx(b0));
    CHECK(fit.theta_mean[0] ==
          doctest::Approx((1.0 - b0) * d.y[0] + b0 * mu).epsilon(1e-13));
}

TEST_CASE("pooling limits: tau=0 gives the common effect, large tau returns the data") {
    Dataset d = bundled_dataset("sat");
    DesignMatrix X = DesignMatrix::intercept_only(d.size());

    ConditionalFit pooled = gls_fit(d, X, 0.0);
    double wy = 0.0, w = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        wy += d.y[i] / (d.se[i] * d.se[i]);
        w += 1.0 / (d.se[i] * d.se[i]);
    }
    CHECK(pooled.beta_hat[0] == doctest::Approx(wy / w).epsilon(1e-13));
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(pooled.theta_mean[i] == doctest::Approx(pooled.beta_hat[0]).epsilon(1e-13));
        CHECK(pooled.theta_sd[i] == doctest::Approx(std::sqrt(pooled.beta_cov[0])).epsilon(1e-12));
    }

    ConditionalFit loose = gls_fit(d, X, 1e8);
    double mean = 0.0;
    for (double v : d.y) mean += v;
    mean /= static_cast<double>(d.size());
    CHECK(loose.beta_hat[0] == doctest::Approx(mean).epsilon(1e-6));
    for (std::size_t i = 0; i < d.size(); ++i)
        CHECK(loose.theta_mean[i] == doctest::Approx(d.y[i]).epsilon(1e-6));
}

TEST_CASE("conditional sd never exceeds the study standard error") {
    Dataset d = bundled_dataset("copd");
    DesignMatrix X = DesignMatrix::intercept_only(d.size());
    for (double tau : {0.0, 0.05, 0.2, 1.0, 10.0}) {
        ConditionalFit fit = gls_fit(d, X, tau);
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(fit.theta_sd[i] < d.se[i]);
    }
}

TEST_CASE("marginal likelihood agrees with direct integration over the mean") {
    Dataset d = bundled_dataset("sat");
    DesignMatrix X = DesignMatrix::intercept_only(d.size());
    for (double tau : {0.0, 2.0, 7.5, 20.0}) {
        double direct = oracle::log_marg_lik_mu_integral(d, tau);
        double closed = gls_fit(d, X, tau).log_marg_lik;
        CHECK(closed == doctest::Approx(direct).epsilon(1e-8));
    }
}

TEST_CASE("marginal likelihood agrees with 2-d integration for a regression") {
    Dataset d = bundled_dataset("no2");
    DesignMatrix X = DesignMatrix::from_covariates(d, {"gender"});
    for (double tau : {0.05, 0.15}) {
        double direct = oracle::log_marg_lik_2d_integral(d, X, tau);
        double closed = gls_fit(d, X, tau).log_marg_lik;
        CHECK(closed == doctest::Approx(direct).epsilon(1e-6));
    }
}

TEST_CASE("contrasts and predictions use the coefficient covariance") {
    Dataset d = bundled_dataset("copd");
    DesignMatrix X = DesignMatrix::from_covariates(d, {"fev1"});
    ConditionalFit fit = gls_fit(d, X, 0.12);

    Contrast slope{"slope", {0.0, 1.0}};
    Estimate e = conditional_contrast(fit, slope);
    CHECK(e.mean == doctest::Approx(fit.beta_hat[1]));
    CHECK(e.sd == doctest::Approx(std::sqrt(fit.beta_cov[3])));

    std::vector<double> x_new{1.0, 1.5};
    Estimate pred = predict_new_study(fit, x_new);
    Estimate at = conditional_contrast(fit, Contrast{"at", x_new});
    CHECK(pred.mean == doctest::Approx(at.mean));
    CHECK(pred.sd == doctest::Approx(std::sqrt(at.sd * at.sd + 0.12 * 0.12)).epsilon(1e-12));
}

TEST_CASE("rank-deficient designs are rejected with the offending column") {
    Dataset d = bundled_dataset("sat");
    d.covariate_names = {"ones"};
    d.covariate_columns = {std::vector<double>(d.size(), 1.0)};  // equals the intercept
    DesignMatrix X = DesignMatrix::from_covariates(d, {"ones"});
    CHECK_THROWS_AS(gls_fit(d, X, 1.0), model_error);
    try {
        gls_fit(d, X, 1.0);
    } catch (const model_error& e) {
        CHECK(std::string(e.what()).find("ones") != std::string::npos);
    }
}

TEST_CASE("dimension mismatches are input errors") {
    Dataset d = two_studies();
    DesignMatrix X = DesignMatrix::intercept_only(3);
    CHECK_THROWS_AS(gls_fit(d, X, 0.0), input_error);
}
