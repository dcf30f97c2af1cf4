#include "nnhm.hpp"

#include <cmath>
#include <numbers>

namespace metatrace {

namespace {

// In-place Cholesky (lower triangle) of the row-major n x n matrix a.
// Returns n on success, otherwise the index of the first failing pivot.
// A pivot fails when it drops below tol relative to the largest original
// diagonal entry, which is how rank deficiency is detected here.
std::size_t cholesky_lower(std::vector<double>& a, std::size_t n, double pivot_tol) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t t = 0; t < j; ++t) d -= a[j * n + t] * a[j * n + t];
        if (!(d > pivot_tol)) return j;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a[i * n + j];
            for (std::size_t t = 0; t < j; ++t) v -= a[i * n + t] * a[j * n + t];
            a[i * n + j] = v / l;
        }
    }
    return n;
}

// Solve L y = b, then L'x = y (L lower-triangular from cholesky_lower).
void cholesky_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) {
        double v = x[i];
        for (std::size_t t = 0; t < i; ++t) v -= l[i * n + t] * x[t];
        x[i] = v / l[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double v = x[ii];
        for (std::size_t t = ii + 1; t < n; ++t) v -= l[t * n + ii] * x[t];
        x[ii] = v / l[ii * n + ii];
    }
}

}  // namespace

ConditionalFit gls_fit(const Dataset& data, const DesignMatrix& X, double tau) {
    data.validate();
    const std::size_t k = data.size();
    const std::size_t p = X.cols;
    if (X.rows != k)
        throw input_error("design matrix has " + std::to_string(X.rows) +
                          " rows for " + std::to_string(k) + " studies");
    if (p == 0 || p > k)
        throw input_error("design matrix needs 1 <= p <= k columns (p=" +
                          std::to_string(p) + ", k=" + std::to_string(k) + ")");
    if (!std::isfinite(tau) || tau < 0.0)
        throw input_error("tau must be finite and nonnegative");

    ConditionalFit fit;
    fit.tau = tau;
    fit.weights.resize(k);
    fit.shrink_factor.resize(k);
    double sum_log_var = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double var = data.se[i] * data.se[i] + tau * tau;
        fit.weights[i] = 1.0 / var;
        fit.shrink_factor[i] = (data.se[i] * data.se[i]) / var;
        sum_log_var += std::log(var);
    }

    // Normal equations A = X'WX, b = X'Wy.
    std::vector<double> a(p * p, 0.0), b(p, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const double w = fit.weights[i];
        for (std::size_t r = 0; r < p; ++r) {
            const double xr = X(i, r);
            b[r] += w * xr * data.y[i];
            for (std::size_t c = 0; c <= r; ++c) a[r * p + c] += w * xr * X(i, c);
        }
    }
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = r + 1; c < p; ++c) a[r * p + c] = a[c * p + r];

    double max_diag = 0.0;
    for (std::size_t j = 0; j < p; ++j) max_diag = std::max(max_diag, a[j * p + j]);

    std::vector<double> l = a;
    const std::size_t bad = cholesky_lower(l, p, 1e-10 * max_diag);
    if (bad < p) {
        std::string cols = "'" + X.column_labels[bad] + "'";
        if (bad > 0) {
            cols += " (given";
            for (std::size_t t = 0; t < bad; ++t)
                cols += std::string(t ? "," : "") + " '" + X.column_labels[t] + "'";
            cols += ")";
        }
        throw model_error("design matrix is rank deficient: column " + cols +
                          " is collinear with the preceding columns");
    }

    double log_det = 0.0;
    for (std::size_t j = 0; j < p; ++j) log_det += 2.0 * std::log(l[j * p + j]);

    fit.beta_hat = b;
    cholesky_solve(l, p, fit.beta_hat);

    // V = (X'WX)^-1, column by column.
    fit.beta_cov.assign(p * p, 0.0);
    std::vector<double> col(p);
    for (std::size_t j = 0; j < p; ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        col[j] = 1.0;
        cholesky_solve(l, p, col);
        for (std::size_t r = 0; r < p; ++r) fit.beta_cov[r * p + j] = col[r];
    }

    fit.theta_mean.resize(k);
    fit.theta_sd.resize(k);
    fit.q_gls = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double fitted = 0.0;
        for (std::size_t j = 0; j < p; ++j) fitted += X(i, j) * fit.beta_hat[j];
        const double resid = data.y[i] - fitted;
        fit.q_gls += fit.weights[i] * resid * resid;

        double xvx = 0.0;
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t c = 0; c < p; ++c)
                xvx += X(i, r) * fit.beta_cov[r * p + c] * X(i, c);

        const double B = fit.shrink_factor[i];
        const double s2 = data.se[i] * data.se[i];
        fit.theta_mean[i] = (1.0 - B) * data.y[i] + B * fitted;
        fit.theta_sd[i] = std::sqrt(s2 * tau * tau / (s2 + tau * tau) + B * B * xvx);
    }

    fit.log_marg_lik = -0.5 * (static_cast<double>(k - p) * std::log(2.0 * std::numbers::pi) +
                               sum_log_var + log_det + fit.q_gls);
    return fit;
}

Estimate conditional_contrast(const ConditionalFit& fit, const Contrast& c) {
    const std::size_t p = fit.n_coef();
    if (c.coefficients.size() != p)
        throw input_error("contrast '" + c.label + "' has " +
                          std::to_string(c.coefficients.size()) + " coefficients for " +
                          std::to_string(p) + " model coefficients");
    double mean = 0.0, var = 0.0;
    for (std::size_t r = 0; r < p; ++r) {
        mean += c.coefficients[r] * fit.beta_hat[r];
        for (std::size_t s = 0; s < p; ++s)
            var += c.coefficients[r] * fit.beta_cov[r * p + s] * c.coefficients[s];
    }
    return {mean, std::sqrt(std::max(var, 0.0))};
}

Estimate predict_new_study(const ConditionalFit& fit, std::span<const double> x_new) {
    const std::size_t p = fit.n_coef();
    if (x_new.size() != p)
        throw input_error("prediction row has " + std::to_string(x_new.size()) +
                          " entries for " + std::to_string(p) + " model coefficients");
    double mean = 0.0, var = fit.tau * fit.tau;
    for (std::size_t r = 0; r < p; ++r) {
        mean += x_new[r] * fit.beta_hat[r];
        for (std::size_t s = 0; s < p; ++s)
            var += x_new[r] * fit.beta_cov[r * p + s] * x_new[s];
    }
    return {mean, std::sqrt(var)};
}

double profile_log_lik(const ConditionalFit& fit, const Dataset& data) {
    const std::size_t k = data.size();
    double sum_log_var = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum_log_var -= std::log(fit.weights[i]);
    return -0.5 * (static_cast<double>(k) * std::log(2.0 * std::numbers::pi) +
                   sum_log_var + fit.q_gls);
}

}  // namespace metatrace
