#pragma once

// Slow reference implementations used only by tests. They share as little
// machinery as possible with the library: integration over tau is plain
// trapezoid on a uniform dense grid, and the marginal likelihood can be
// cross-checked by brute-force integration over the coefficients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "nnhm.hpp"
#include "priors.hpp"

namespace oracle {

using metatrace::Dataset;
using metatrace::DesignMatrix;
using metatrace::Estimate;
using metatrace::HeterogeneityPrior;

// Dense uniform-grid trapezoid view of the tau posterior.
struct DensePosterior {
    std::vector<double> tau;
    std::vector<double> density;  // normalized so trapezoid integral is 1
    std::vector<double> cdf;      // cumulative trapezoid, cdf.back() == 1

    double quantile(double q) const {
        auto it = std::lower_bound(cdf.begin(), cdf.end(), q);
        if (it == cdf.begin()) return tau.front();
        if (it == cdf.end()) return tau.back();
        std::size_t i = static_cast<std::size_t>(it - cdf.begin());
        double c0 = cdf[i - 1], c1 = cdf[i];
        double t = c1 > c0 ? (q - c0) / (c1 - c0) : 0.5;
        return tau[i - 1] + t * (tau[i] - tau[i - 1]);
    }
};

inline DensePosterior dense_posterior(const Dataset& data, const DesignMatrix& X,
                                      const HeterogeneityPrior& prior, double tau_max,
                                      std::size_t n = 40001) {
    DensePosterior dp;
    dp.tau.resize(n);
    dp.density.resize(n);
    dp.cdf.resize(n);
    std::vector<double> logd(n);
    double mx = -1e308;
    for (std::size_t i = 0; i < n; ++i) {
        double tau = tau_max * static_cast<double>(i) / static_cast<double>(n - 1);
        dp.tau[i] = tau;
        logd[i] = prior.log_density(tau) + metatrace::gls_fit(data, X, tau).log_marg_lik;
        mx = std::max(mx, logd[i]);
    }
    for (std::size_t i = 0; i < n; ++i) dp.density[i] = std::exp(logd[i] - mx);
    dp.cdf[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        dp.cdf[i] = dp.cdf[i - 1] +
                    0.5 * (dp.density[i - 1] + dp.density[i]) * (dp.tau[i] - dp.tau[i - 1]);
    double total = dp.cdf.back();
    for (std::size_t i = 0; i < n; ++i) {
        dp.density[i] /= total;
        dp.cdf[i] /= total;
    }
    return dp;
}

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

// Marginal mean/sd of a conditional-normal target: f(tau) -> Estimate.
template <typename F>
MeanSd dense_marginal(const DensePosterior& dp, F f) {
    const std::size_t n = dp.tau.size();
    double m1 = 0.0, m2 = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double h = (i == 0 ? dp.tau[1] - dp.tau[0]
                  : i == n - 1 ? dp.tau[n - 1] - dp.tau[n - 2]
                               : dp.tau[i + 1] - dp.tau[i - 1]) / 2.0;
        double w = h * dp.density[i];
        Estimate e = f(dp.tau[i]);
        m1 += w * e.mean;
        m2 += w * (e.sd * e.sd + e.mean * e.mean);
        wsum += w;
    }
    m1 /= wsum;
    m2 /= wsum;
    return {m1, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

inline double normal_log_pdf(double x, double mean, double var) {
    double d = x - mean;
    return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
}

// Flat-prior marginal likelihood of the intercept-only model by direct
// numeric integration over the mean.
inline double log_marg_lik_mu_integral(const Dataset& data, double tau,
                                       std::size_t n = 200001) {
    double wy = 0.0, w = 0.0, smax = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double v = data.se[i] * data.se[i] + tau * tau;
        wy += data.y[i] / v;
        w += 1.0 / v;
        smax = std::max(smax, std::sqrt(v));
    }
    double center = wy / w;
    double half = 12.0 * smax;
    double lo = center - half, h = 2.0 * half / static_cast<double>(n - 1);

    double mx = -1e308;
    std::vector<double> ll(n);
    for (std::size_t j = 0; j < n; ++j) {
        double mu = lo + h * static_cast<double>(j);
        double s = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i)
            s += normal_log_pdf(data.y[i], mu, data.se[i] * data.se[i] + tau * tau);
        ll[j] = s;
        mx = std::max(mx, s);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double e = std::exp(ll[j] - mx);
        sum += (j == 0 || j == n - 1) ? 0.5 * e : e;
    }
    return mx + std::log(sum * h);
}

// Same idea for a two-column design: integrate over both coefficients on a
// dense rectangle centered at the GLS solution.
inline double log_marg_lik_2d_integral(const Dataset& data, const DesignMatrix& X, double tau,
                                       std::size_t n = 801) {
    metatrace::ConditionalFit fit = metatrace::gls_fit(data, X, tau);
    double c0 = fit.beta_hat[0], c1 = fit.beta_hat[1];
    double s0 = std::sqrt(fit.beta_cov[0]), s1 = std::sqrt(fit.beta_cov[3]);
    double h0 = 2.0 * 10.0 * s0 / static_cast<double>(n - 1);
    double h1 = 2.0 * 10.0 * s1 / static_cast<double>(n - 1);

    std::vector<double> var(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        var[i] = data.se[i] * data.se[i] + tau * tau;

    double mx = -1e308;
    std::vector<double> ll(n * n);
    for (std::size_t a = 0; a < n; ++a) {
        double b0 = c0 - 10.0 * s0 + h0 * static_cast<double>(a);
        for (std::size_t b = 0; b < n; ++b) {
            double b1 = c1 - 10.0 * s1 + h1 * static_cast<double>(b);
            double s = 0.0;
            for (std::size_t i = 0; i < data.size(); ++i)
                s += normal_log_pdf(data.y[i], b0 * X(i, 0) + b1 * X(i, 1), var[i]);
            ll[a * n + b] = s;
            mx = std::max(mx, s);
        }
    }
    double sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        double wa = (a == 0 || a == n - 1) ? 0.5 : 1.0;
        for (std::size_t b = 0; b < n; ++b) {
            double wb = (b == 0 || b == n - 1) ? 0.5 : 1.0;
            sum += wa * wb * std::exp(ll[a * n + b] - mx);
        }
    }
    return mx + std::log(sum * h0 * h1);
}

}  // namespace oracle
