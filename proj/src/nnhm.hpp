#pragma once

#include <span>

#include "types.hpp"

namespace metatrace {

// Everything knowable about the normal-normal hierarchical model once the
// heterogeneity tau is fixed: the GLS coefficient fit, per-study shrinkage,
// and the coefficient-integrated (flat prior) log marginal likelihood.
struct ConditionalFit {
    double tau = 0.0;
    std::vector<double> beta_hat;       // p
    std::vector<double> beta_cov;       // p x p, row-major
    std::vector<double> weights;        // k, w_i = 1/(se_i^2 + tau^2)
    std::vector<double> shrink_factor;  // k, B_i = se_i^2/(se_i^2 + tau^2)
    std::vector<double> theta_mean;     // k, E[theta_i | tau, y]
    std::vector<double> theta_sd;       // k, SD[theta_i | tau, y]
    double log_marg_lik = 0.0;
    double q_gls = 0.0;                 // Q(tau) = sum w_i (y_i - x_i'beta)^2

    std::size_t n_coef() const { return beta_hat.size(); }
    std::size_t n_study() const { return weights.size(); }
};

// GLS fit of the NNHM at fixed tau >= 0. Throws input_error on dimension
// mismatch and model_error when X is (numerically) rank deficient.
ConditionalFit gls_fit(const Dataset& data, const DesignMatrix& X, double tau);

// mean = c'beta_hat, sd = sqrt(c'V c).
Estimate conditional_contrast(const ConditionalFit& fit, const Contrast& c);

// Effect of a hypothetical new study with covariate row x_new:
// mean = x'beta_hat, sd = sqrt(x'V x + tau^2).
Estimate predict_new_study(const ConditionalFit& fit, std::span<const double> x_new);

// Log marginal likelihood under the profile (non-restricted) convention:
// -1/2 [k log 2pi + sum log(se^2+tau^2) + Q(tau)], used by the ML estimator.
double profile_log_lik(const ConditionalFit& fit, const Dataset& data);

}  // namespace metatrace
