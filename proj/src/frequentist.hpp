#pragma once

#include <string>

#include "nnhm.hpp"

namespace metatrace {

// Point estimators for the heterogeneity standard deviation tau.
enum class TauEstimator { REML, ML, DL };

TauEstimator parse_estimator(const std::string& text);
std::string describe(TauEstimator estimator);

// Likelihood-based analysis at the point estimate tau_hat: the conditional
// GLS fit there is the BLUP slice, and the interval is the Q-profile CI.
struct FreqResult {
    TauEstimator estimator = TauEstimator::REML;
    double tau_hat = 0.0;
    Interval tau_ci95{0.0, 0.0};
    bool ci_degenerate = false;  // Q(0) below the lower chi^2 target -> [0, 0]
    double q_at_zero = 0.0;
    ConditionalFit fit_at_hat;
};

// chi-squared distribution with integer degrees of freedom
double chi2_cdf(double x, int dof);
double chi2_quantile(double q, int dof);

// standard normal inverse CDF
double normal_quantile(double q);

// Cochran's generalized Q at a given tau (weighted residual sum of squares).
double q_statistic(const Dataset& data, const DesignMatrix& X, double tau);

double estimate_tau(const Dataset& data, const DesignMatrix& X, TauEstimator estimator);

// Q-profile confidence interval for tau; endpoints solve Q(tau) = chi^2
// targets with k - p degrees of freedom, truncated at 0 when no root exists.
Interval q_profile_ci(const Dataset& data, const DesignMatrix& X, double level = 0.95,
                      bool* degenerate = nullptr);

FreqResult blup(const Dataset& data, const DesignMatrix& X, TauEstimator estimator,
                double level = 0.95);

}  // namespace metatrace
