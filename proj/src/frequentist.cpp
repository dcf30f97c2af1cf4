#include "frequentist.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace metatrace {

namespace {

// Regularized lower incomplete gamma P(a, x): series expansion for
// x < a + 1, continued fraction (modified Lentz) otherwise.
double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

double chi2_log_pdf(double x, int dof) {
    const double a = dof / 2.0;
    return (a - 1.0) * std::log(x) - x / 2.0 - a * std::log(2.0) - std::lgamma(a);
}

// Acklam's rational approximation to the standard normal inverse CDF,
// polished with one Halley step on erfc.
double acklam(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    return x;
}

// Bracketed maximization of a 1-D objective over tau >= 0: coarse scan with a
// doubling upper limit, golden-section inside the bracketing cell, one
// parabolic refinement, explicit boundary candidate at 0.
double maximize_tau(const std::function<double(double)>& obj, double start_scale) {
    double upper = std::max(start_scale, 1e-6);
    const int n = 128;
    std::vector<double> vals(n + 1);
    int best = 0;
    for (int round = 0; round < 80; ++round) {
        best = 0;
        for (int i = 0; i <= n; ++i) {
            vals[i] = obj(upper * i / n);
            if (vals[i] > vals[best]) best = i;
        }
        if (best < n - 1) break;
        upper *= 2.0;
    }
    double a = upper * std::max(best - 1, 0) / n;
    double b = upper * std::min(best + 1, n) / n;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
    double f1 = obj(x1), f2 = obj(x2);
    while (b - a > 1e-8 * upper) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = obj(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = obj(x2);
        }
    }
    double tau = 0.5 * (a + b);
    double ftau = obj(tau);
    // parabolic refinement through (a, tau, b)
    const double fa = obj(a), fb = obj(b);
    const double denom = (tau - a) * (ftau - fb) - (tau - b) * (ftau - fa);
    if (std::fabs(denom) > 0.0) {
        const double num =
            (tau - a) * (tau - a) * (ftau - fb) - (tau - b) * (tau - b) * (ftau - fa);
        const double cand = tau - 0.5 * num / denom;
        if (cand >= 0.0 && std::isfinite(cand)) {
            const double fc = obj(cand);
            if (fc > ftau) {
                tau = cand;
                ftau = fc;
            }
        }
    }
    if (obj(0.0) >= ftau) return 0.0;
    return tau;
}

void check_design(const Dataset& data, const DesignMatrix& X) {
    data.validate();
    if (X.rows != data.size())
        throw input_error("design matrix row count does not match the dataset");
    if (data.size() < X.cols + 1)
        throw input_error("likelihood-based heterogeneity estimation needs k - p >= 1 (here k=" +
                          std::to_string(data.size()) + ", p=" + std::to_string(X.cols) + ")");
}

}  // namespace

TauEstimator parse_estimator(const std::string& text) {
    std::string t;
    for (char ch : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (t == "reml") return TauEstimator::REML;
    if (t == "ml") return TauEstimator::ML;
    if (t == "dl") return TauEstimator::DL;
    throw input_error("unknown estimator '" + text + "' (choose one of: reml, ml, dl)");
}

// Spelled the way parse_estimator and the CLI accept it.
std::string describe(TauEstimator estimator) {
    switch (estimator) {
        case TauEstimator::REML: return "reml";
        case TauEstimator::ML: return "ml";
        case TauEstimator::DL: return "dl";
    }
    return "?";
}

double chi2_cdf(double x, int dof) {
    if (dof < 1) throw input_error("chi-squared degrees of freedom must be >= 1");
    if (x <= 0.0) return 0.0;
    return gamma_p(dof / 2.0, x / 2.0);
}

double chi2_quantile(double q, int dof) {
    if (dof < 1) throw input_error("chi-squared degrees of freedom must be >= 1");
    if (!(q > 0.0 && q < 1.0))
        throw input_error("chi-squared quantile level must lie strictly inside (0, 1)");
    // Wilson-Hilferty starting point
    const double z = normal_quantile(q);
    const double d = static_cast<double>(dof);
    const double t = 1.0 - 2.0 / (9.0 * d) + z * std::sqrt(2.0 / (9.0 * d));
    double x = d * t * t * t;
    if (!(x > 0.0)) x = 1e-8;
    // safeguarded Newton on the CDF
    double lo = 0.0, hi = std::max(x, 1.0);
    while (chi2_cdf(hi, dof) < q) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double fx = chi2_cdf(x, dof) - q;
        if (fx > 0.0)
            hi = x;
        else
            lo = x;
        const double step = fx / std::exp(chi2_log_pdf(x, dof));
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - x) < 1e-10 * (1.0 + std::fabs(x))) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

double normal_quantile(double q) {
    if (!(q > 0.0 && q < 1.0))
        throw input_error("normal quantile level must lie strictly inside (0, 1)");
    double x = acklam(q);
    // Halley refinement
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - q;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x -= u / (1.0 + x * u / 2.0);
    return x;
}

double q_statistic(const Dataset& data, const DesignMatrix& X, double tau) {
    return gls_fit(data, X, tau).q_gls;
}

double estimate_tau(const Dataset& data, const DesignMatrix& X, TauEstimator estimator) {
    check_design(data, X);
    const std::size_t k = data.size();

    if (estimator == TauEstimator::DL) {
        bool intercept_only = (X.cols == 1);
        for (std::size_t i = 0; intercept_only && i < X.rows; ++i)
            if (X(i, 0) != 1.0) intercept_only = false;
        if (!intercept_only)
            throw input_error(
                "the DerSimonian-Laird estimator supports only the intercept-only model; "
                "use reml or ml for meta-regression");
        double sw = 0.0, sw2 = 0.0;
        for (double se : data.se) {
            const double w = 1.0 / (se * se);
            sw += w;
            sw2 += w * w;
        }
        const double q0 = q_statistic(data, X, 0.0);
        const double tau2 = std::max(0.0, (q0 - (static_cast<double>(k) - 1.0)) / (sw - sw2 / sw));
        return std::sqrt(tau2);
    }

    const double scale = *std::max_element(data.se.begin(), data.se.end());
    if (estimator == TauEstimator::REML) {
        auto obj = [&](double tau) { return gls_fit(data, X, tau).log_marg_lik; };
        return maximize_tau(obj, scale);
    }
    auto obj = [&](double tau) {
        const ConditionalFit fit = gls_fit(data, X, tau);
        double sum_log_var = 0.0;
        for (double w : fit.weights) sum_log_var -= std::log(w);
        return -0.5 * (static_cast<double>(k) * std::log(2.0 * M_PI) + sum_log_var + fit.q_gls);
    };
    return maximize_tau(obj, scale);
}

Interval q_profile_ci(const Dataset& data, const DesignMatrix& X, double level,
                      bool* degenerate) {
    check_design(data, X);
    if (!(level > 0.0 && level < 1.0))
        throw input_error("confidence level must lie strictly inside (0, 1)");
    const int dof = static_cast<int>(data.size() - X.cols);
    const double alpha = 1.0 - level;
    const double upper_target = chi2_quantile(1.0 - alpha / 2.0, dof);
    const double lower_target = chi2_quantile(alpha / 2.0, dof);

    auto q_of = [&](double tau) { return q_statistic(data, X, tau); };
    const double q0 = q_of(0.0);

    // Q is nonincreasing in tau, so each target has at most one root.
    auto solve = [&](double target) {
        if (q0 <= target) return 0.0;
        double hi = *std::max_element(data.se.begin(), data.se.end());
        for (int g = 0; g < 200 && q_of(hi) > target; ++g) hi *= 2.0;
        double lo = 0.0;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (q_of(mid) > target)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-10 * hi) break;
        }
        return 0.5 * (lo + hi);
    };

    const double lo = solve(upper_target);
    const double hi = solve(lower_target);
    if (degenerate) *degenerate = (hi <= 0.0);
    return {std::min(lo, hi), hi};
}

FreqResult blup(const Dataset& data, const DesignMatrix& X, TauEstimator estimator,
                double level) {
    FreqResult out;
    out.estimator = estimator;
    out.tau_hat = estimate_tau(data, X, estimator);
    out.tau_ci95 = q_profile_ci(data, X, level, &out.ci_degenerate);
    out.q_at_zero = q_statistic(data, X, 0.0);
    out.fit_at_hat = gls_fit(data, X, out.tau_hat);
    return out;
}

}  // namespace metatrace
