#include "posterior.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace metatrace {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Golden-section minimizer; f need not be smooth, only unimodal-ish.
double golden_min(const std::function<double(double)>& f, double a, double b, double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

struct RawPanel {
    double a, m, b;
    double fa, fm, fb;
};

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

void refine_panel(const std::function<double(double)>& f, double a, double m, double b,
                  double fa, double fm, double fb, double whole, double eps, int depth,
                  std::vector<RawPanel>& out) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    if (depth >= 40 || std::fabs(left + right - whole) <= 15.0 * eps) {
        out.push_back({a, m, b, fa, fm, fb});
        return;
    }
    refine_panel(f, a, lm, m, fa, flm, fm, left, eps / 2.0, depth + 1, out);
    refine_panel(f, m, rm, b, fm, frm, fb, right, eps / 2.0, depth + 1, out);
}

}  // namespace

std::size_t TauPosterior::panel_index(double tau) const {
    std::size_t lo = 0, hi = panels_.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        if (panels_[mid].a <= tau)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

double TauPosterior::density(double tau) const {
    if (tau < 0.0 || tau > tau_max_) return 0.0;
    const Panel& p = panels_[panel_index(tau)];
    const double h = 0.5 * (p.b - p.a);
    const double t = (tau - p.a) / h;  // in [0, 2]
    const double v = p.fa * (t - 1.0) * (t - 2.0) / 2.0 + p.fm * t * (2.0 - t) +
                     p.fb * t * (t - 1.0) / 2.0;
    return std::max(v, 0.0);
}

double TauPosterior::panel_cdf(const Panel& p, double tau) const {
    const double h = 0.5 * (p.b - p.a);
    const double t = (tau - p.a) / h;
    // Antiderivative of the quadratic through (0,fa), (1,fm), (2,fb).
    const double t2 = t * t, t3 = t2 * t;
    const double part = h * (p.fa * (t3 / 3.0 - 1.5 * t2 + 2.0 * t) / 2.0 +
                             p.fm * (t2 - t3 / 3.0) +
                             p.fb * (t3 / 3.0 - 0.5 * t2) / 2.0);
    return p.cum_a + std::clamp(part, 0.0, p.mass);
}

double TauPosterior::cdf(double tau) const {
    if (tau <= 0.0) return 0.0;
    if (tau >= tau_max_) return 1.0;
    return std::clamp(panel_cdf(panels_[panel_index(tau)], tau), 0.0, 1.0);
}

double TauPosterior::quantile(double q) const {
    if (!(q > 0.0 && q < 1.0))
        throw input_error("quantile level must lie strictly inside (0, 1)");
    // Panel holding mass level q, then bisection inside it.
    std::size_t lo = 0, hi = panels_.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        if (panels_[mid].cum_a <= q)
            lo = mid;
        else
            hi = mid - 1;
    }
    const Panel& p = panels_[lo];
    double a = p.a, b = p.b;
    for (int it = 0; it < 80 && (b - a) > 0.0; ++it) {
        const double mid = 0.5 * (a + b);
        if (panel_cdf(p, mid) < q)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

Interval TauPosterior::credible_interval(double level, IntervalMethod method) const {
    if (!(level > 0.0 && level < 1.0))
        throw input_error("credible level must lie strictly inside (0, 1)");
    if (method == IntervalMethod::Central)
        return {quantile((1.0 - level) / 2.0), quantile((1.0 + level) / 2.0)};

    // Shortest: search the left tail mass alpha; the support boundary at
    // tau = 0 is an explicit candidate (alpha = 0).
    auto q0 = [&](double a) {
        if (a <= 0.0) return 0.0;
        if (a >= 1.0) return tau_max_;
        return quantile(a);
    };
    auto width = [&](double alpha) { return q0(alpha + level) - q0(alpha); };
    const double amax = 1.0 - level;
    double best_alpha = golden_min(width, 0.0, amax, 1e-9);
    for (double cand : {0.0, amax})
        if (width(cand) < width(best_alpha)) best_alpha = cand;
    return {q0(best_alpha), q0(best_alpha + level)};
}

TauPosterior build_posterior(const Dataset& data, const DesignMatrix& X,
                             const HeterogeneityPrior& prior) {
    data.validate();
    const std::size_t k = data.size();
    const std::size_t p = X.cols;
    if (X.rows != k)
        throw input_error("design matrix row count does not match the dataset");
    if (k < 2)
        throw input_error("heterogeneity posterior needs at least two studies");
    if (!prior.proper() && k < p + 2)
        throw input_error(
            "the improper uniform heterogeneity prior needs k - p >= 2 (here k=" +
            std::to_string(k) + ", p=" + std::to_string(p) +
            "); use a proper prior such as halfnormal:<scale> or dumouchel");

    auto log_post = [&](double tau) {
        return prior.log_density(tau) + gls_fit(data, X, tau).log_marg_lik;
    };

    // --- support truncation: double tau_max until the integrand is
    // negligible at the end AND the estimated tail mass is < 1e-4. ---
    double scale = *std::max_element(data.se.begin(), data.se.end());
    if (prior.proper()) scale = std::max(scale, prior.support_scale());
    double tau_max = scale;
    double shift = 0.0;
    const int probe_n = 257;
    for (int round = 0; round < 100; ++round) {
        double max_lp = -kInf;
        for (int i = 0; i < probe_n; ++i)
            max_lp = std::max(max_lp, log_post(tau_max * i / (probe_n - 1)));
        shift = max_lp;
        const double f_end = std::exp(log_post(tau_max) - shift);
        // crude total on the probe grid (trapezoid), shifted units
        double total = 0.0, prev = std::exp(log_post(0.0) - shift);
        for (int i = 1; i < probe_n; ++i) {
            const double cur = std::exp(log_post(tau_max * i / (probe_n - 1)) - shift);
            total += 0.5 * (prev + cur) * tau_max / (probe_n - 1);
            prev = cur;
        }
        // power-law tail estimate f ~ tau^-c beyond tau_max
        const double c = (log_post(tau_max / 2.0) - log_post(tau_max)) / std::log(2.0);
        const double tail = (c > 1.0) ? f_end * tau_max / (c - 1.0) : kInf;
        if (f_end < 1e-12 && tail < 1e-4 * total) break;
        tau_max *= 2.0;
    }

    auto f = [&](double tau) { return std::exp(log_post(tau) - shift); };

    // --- adaptive Simpson over [0, tau_max], at least 200 base panels ---
    const int base = 200;
    std::vector<RawPanel> panels;
    panels.reserve(512);
    double rough = 0.0;
    std::vector<double> fv(2 * base + 1);
    for (int i = 0; i <= 2 * base; ++i) fv[i] = f(tau_max * i / (2.0 * base));
    for (int i = 0; i < base; ++i) {
        const double a = tau_max * (2 * i) / (2.0 * base);
        const double b = tau_max * (2 * i + 2) / (2.0 * base);
        rough += simpson(a, b, fv[2 * i], fv[2 * i + 1], fv[2 * i + 2]);
    }
    const double eps_panel = 1e-8 * std::max(rough, 1e-300) / base;
    for (int i = 0; i < base; ++i) {
        const double a = tau_max * (2 * i) / (2.0 * base);
        const double m = tau_max * (2 * i + 1) / (2.0 * base);
        const double b = tau_max * (2 * i + 2) / (2.0 * base);
        refine_panel(f, a, m, b, fv[2 * i], fv[2 * i + 1], fv[2 * i + 2],
                     simpson(a, b, fv[2 * i], fv[2 * i + 1], fv[2 * i + 2]), eps_panel, 0,
                     panels);
    }

    // --- accumulate Simpson node weights; consecutive panels share nodes ---
    TauPosterior post;
    post.prior_ = prior;
    post.tau_max_ = tau_max;
    std::vector<double> node_tau, node_coef, node_f;
    node_tau.reserve(2 * panels.size() + 1);
    auto add_node = [&](double tau, double coef, double val) {
        if (!node_tau.empty() && node_tau.back() == tau) {
            node_coef.back() += coef;
        } else {
            node_tau.push_back(tau);
            node_coef.push_back(coef);
            node_f.push_back(val);
        }
    };
    double total = 0.0;
    for (const RawPanel& rp : panels) {
        const double h6 = (rp.b - rp.a) / 6.0;
        add_node(rp.a, h6, rp.fa);
        add_node(rp.m, 4.0 * h6, rp.fm);
        add_node(rp.b, h6, rp.fb);
        total += simpson(rp.a, rp.b, rp.fa, rp.fm, rp.fb);
    }
    if (!(total > 0.0) || !std::isfinite(total))
        throw model_error("heterogeneity posterior could not be normalized");
    post.log_norm_const_ = shift + std::log(total);

    post.grid_.resize(node_tau.size());
    double wsum = 0.0;
    for (std::size_t i = 0; i < node_tau.size(); ++i) wsum += node_coef[i] * node_f[i];
    for (std::size_t i = 0; i < node_tau.size(); ++i)
        post.grid_[i] = {node_tau[i], node_coef[i] * node_f[i] / wsum};

    // --- normalized piecewise representation for density/cdf/quantile ---
    post.panels_.resize(panels.size());
    double cum = 0.0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
        const RawPanel& rp = panels[i];
        TauPosterior::Panel& q = post.panels_[i];
        q.a = rp.a;
        q.b = rp.b;
        q.fa = rp.fa / total;
        q.fm = rp.fm / total;
        q.fb = rp.fb / total;
        q.mass = simpson(rp.a, rp.b, q.fa, q.fm, q.fb);
        q.cum_a = cum;
        cum += q.mass;
    }
    // absorb floating-point drift so the last panel tops out at exactly 1
    for (TauPosterior::Panel& q : post.panels_) {
        q.fa /= cum;
        q.fm /= cum;
        q.fb /= cum;
        q.mass /= cum;
        q.cum_a /= cum;
    }

    post.median_ = post.quantile(0.5);
    post.ci95_ = post.credible_interval(0.95, IntervalMethod::Shortest);
    return post;
}

TauPosterior leave_one_out(const Dataset& data, const DesignMatrix& X,
                           const HeterogeneityPrior& prior, const std::string& excluded) {
    const std::size_t drop = data.index_of(excluded);
    const Dataset reduced = data.without(excluded);
    DesignMatrix Xr;
    Xr.rows = X.rows - 1;
    Xr.cols = X.cols;
    Xr.column_labels = X.column_labels;
    Xr.values.reserve(Xr.rows * Xr.cols);
    for (std::size_t i = 0; i < X.rows; ++i) {
        if (i == drop) continue;
        for (std::size_t j = 0; j < X.cols; ++j) Xr.values.push_back(X(i, j));
    }
    return build_posterior(reduced, Xr, prior);
}

MarginalSummary mixture_summary(std::span<const GridNode> grid,
                                std::span<const Estimate> conditional,
                                std::string target, IntervalMethod method) {
    if (grid.size() != conditional.size())
        throw input_error("mixture components misaligned with the posterior grid");

    MarginalSummary out;
    out.target = std::move(target);

    // Prune numerically weightless components up front.
    std::vector<double> w, m, s;
    w.reserve(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (grid[j].weight <= 1e-15) continue;
        w.push_back(grid[j].weight);
        m.push_back(conditional[j].mean);
        s.push_back(conditional[j].sd);
    }
    if (w.empty()) throw model_error("mixture posterior has no usable components");

    double mean = 0.0, second = 0.0, wtot = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        mean += w[j] * m[j];
        second += w[j] * (s[j] * s[j] + m[j] * m[j]);
        wtot += w[j];
    }
    mean /= wtot;
    second /= wtot;
    out.mean = mean;
    out.sd = std::sqrt(std::max(second - mean * mean, 0.0));

    auto cdf = [&](double x) {
        double acc = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j)
            acc += (s[j] > 0.0) ? w[j] * normal_cdf((x - m[j]) / s[j])
                                : (x >= m[j] ? w[j] : 0.0);
        return acc / wtot;
    };

    // Bisection on the mixture CDF; bracket mean +- 10 sd, widened if the
    // requested mass lies outside.
    auto quant = [&](double q) {
        double lo = mean - 10.0 * out.sd, hi = mean + 10.0 * out.sd;
        if (!(hi > lo)) {
            lo = mean - 1.0;
            hi = mean + 1.0;
        }
        for (int g = 0; g < 60 && cdf(lo) > q; ++g) lo -= (hi - lo);
        for (int g = 0; g < 60 && cdf(hi) < q; ++g) hi += (hi - lo);
        const double tol = 1e-8 * (hi - lo);
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            if (cdf(mid) < q)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    out.median = quant(0.5);
    const double level = 0.95;
    if (method == IntervalMethod::Central) {
        out.ci95 = {quant(0.025), quant(0.975)};
    } else {
        auto width = [&](double alpha) { return quant(alpha + level) - quant(alpha); };
        const double amax = 1.0 - level;
        const double eps = 1e-7;
        const double alpha = golden_min(width, eps, amax - eps, 1e-5 * amax);
        out.ci95 = {quant(alpha), quant(alpha + level)};
    }
    return out;
}

namespace {

template <class F>
MarginalSummary marginal_over_grid(const TauPosterior& post, F&& conditional_at,
                                   std::string target, IntervalMethod method) {
    const auto& grid = post.grid();
    std::vector<Estimate> cond(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) cond[j] = conditional_at(grid[j].tau);
    return mixture_summary(grid, cond, std::move(target), method);
}

}  // namespace

MarginalSummary marginal_study_effect(const Dataset& data, const DesignMatrix& X,
                                      const TauPosterior& post, std::size_t study,
                                      IntervalMethod method) {
    if (study >= data.size()) throw input_error("study index out of range");
    return marginal_over_grid(
        post,
        [&](double tau) {
            const ConditionalFit fit = gls_fit(data, X, tau);
            return Estimate{fit.theta_mean[study], fit.theta_sd[study]};
        },
        data.labels[study], method);
}

MarginalSummary marginal_contrast(const Dataset& data, const DesignMatrix& X,
                                  const TauPosterior& post, const Contrast& c,
                                  IntervalMethod method) {
    return marginal_over_grid(
        post, [&](double tau) { return conditional_contrast(gls_fit(data, X, tau), c); },
        c.label, method);
}

MarginalSummary marginal_prediction(const Dataset& data, const DesignMatrix& X,
                                    const TauPosterior& post, std::span<const double> x_new,
                                    IntervalMethod method) {
    return marginal_over_grid(
        post, [&](double tau) { return predict_new_study(gls_fit(data, X, tau), x_new); },
        "prediction", method);
}

}  // namespace metatrace
