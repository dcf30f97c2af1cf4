#include "plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "csv.hpp"

namespace metatrace {

namespace {

constexpr const char* kPalette[12] = {
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    "#e377c2", "#17becf", "#bcbd22", "#7f7f7f", "#aec7e8", "#ff9896",
};

const char* series_color(std::size_t index) { return kPalette[index % 12]; }

std::string f2(double v) {
    if (std::fabs(v) < 5e-3) v = 0.0;  // avoid "-0.00"
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// Tick positions at a round step covering roughly `target` intervals.
std::vector<double> nice_ticks(double lo, double hi, int target, double* step_out = nullptr) {
    if (!(hi > lo)) {
        if (step_out) *step_out = 1.0;
        return {lo};
    }
    double raw = (hi - lo) / target;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = 10.0 * mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw * 0.999) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> ticks;
    double first = std::ceil(lo / step - 1e-9) * step;
    for (double v = first; v <= hi + step * 1e-6; v += step)
        ticks.push_back(std::fabs(v) < step * 1e-9 ? 0.0 : v);
    if (step_out) *step_out = step;
    return ticks;
}

std::string tick_label(double v, double step) {
    int decimals = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
    if (decimals < 0) decimals = 0;
    if (decimals > 12) decimals = 12;
    if (std::fabs(v) < step * 1e-9) v = 0.0;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

void add_line(std::string& svg, double x1, double y1, double x2, double y2,
              const std::string& extra) {
    svg += "<line x1=\"" + f2(x1) + "\" y1=\"" + f2(y1) + "\" x2=\"" + f2(x2) + "\" y2=\"" +
           f2(y2) + "\" " + extra + "/>\n";
}

void add_text(std::string& svg, double x, double y, const std::string& text,
              const std::string& extra) {
    std::string escaped;
    for (char c : text) {
        switch (c) {
            case '&': escaped += "&amp;"; break;
            case '<': escaped += "&lt;"; break;
            case '>': escaped += "&gt;"; break;
            default: escaped += c;
        }
    }
    svg += "<text x=\"" + f2(x) + "\" y=\"" + f2(y) + "\" " + extra + ">" + escaped + "</text>\n";
}

std::string polyline_points(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) pts += ' ';
        pts += f2(xs[i]) + "," + f2(ys[i]);
    }
    return pts;
}

void add_polyline(std::string& svg, const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& extra) {
    svg += "<polyline fill=\"none\" points=\"" + polyline_points(xs, ys) + "\" " + extra + "/>\n";
}

struct TraceCore {
    std::vector<double> tau_grid;
    std::vector<SeriesTrace> studies;
    std::vector<SeriesTrace> contrasts;
    std::vector<double> q_values;
};

TraceCore trace_core(const Dataset& data, const DesignMatrix& X,
                     const std::vector<Contrast>& contrasts, std::size_t points,
                     double tau_max) {
    for (const auto& c : contrasts)
        if (c.coefficients.size() != X.cols)
            throw input_error("contrast '" + c.label + "' has " +
                              std::to_string(c.coefficients.size()) +
                              " coefficients but the model has " + std::to_string(X.cols));
    if (!(tau_max > 0.0) || !std::isfinite(tau_max))
        throw model_error("trace grid upper end must be positive and finite");

    const std::size_t n = std::max<std::size_t>(points, 21);
    const std::size_t k = data.size();

    TraceCore core;
    core.tau_grid.resize(n);
    core.studies.resize(k);
    core.contrasts.resize(contrasts.size());
    core.q_values.resize(n);
    for (std::size_t i = 0; i < k; ++i) {
        core.studies[i].label = data.labels[i];
        core.studies[i].points.resize(n);
    }
    for (std::size_t j = 0; j < contrasts.size(); ++j) {
        core.contrasts[j].label = contrasts[j].label;
        core.contrasts[j].points.resize(n);
    }

    for (std::size_t g = 0; g < n; ++g) {
        double tau = tau_max * static_cast<double>(g) / static_cast<double>(n - 1);
        core.tau_grid[g] = tau;
        ConditionalFit fit = gls_fit(data, X, tau);
        for (std::size_t i = 0; i < k; ++i)
            core.studies[i].points[g] = {fit.theta_mean[i], fit.theta_sd[i]};
        for (std::size_t j = 0; j < contrasts.size(); ++j)
            core.contrasts[j].points[g] = conditional_contrast(fit, contrasts[j]);
        core.q_values[g] = fit.q_gls;
    }
    return core;
}

void fill_common(TraceData& trace, const Dataset& data, TraceCore&& core) {
    trace.tau_grid = std::move(core.tau_grid);
    trace.study_traces = std::move(core.studies);
    trace.contrast_traces = std::move(core.contrasts);
    trace.infinity_refs = data.y;
    double sum = 0.0;
    for (double v : data.y) sum += v;
    trace.infinity_mean = sum / static_cast<double>(data.size());
}

}  // namespace

TraceData compute_trace(const Dataset& data, const DesignMatrix& X,
                        const std::vector<Contrast>& contrasts, const TauPosterior& post,
                        GridSpec grid) {
    double tau_max = grid.tau_max;
    if (!(tau_max > 0.0))
        tau_max = std::max(post.quantile(0.995), 1.5 * post.median());
    if (!(tau_max > 0.0)) tau_max = *std::max_element(data.se.begin(), data.se.end());

    TraceCore core = trace_core(data, X, contrasts, grid.points, tau_max);

    BayesPanel panel;
    panel.posterior_density.resize(core.tau_grid.size());
    for (std::size_t g = 0; g < core.tau_grid.size(); ++g)
        panel.posterior_density[g] = post.density(core.tau_grid[g]);
    if (post.prior().proper()) {
        panel.prior_density.resize(core.tau_grid.size());
        for (std::size_t g = 0; g < core.tau_grid.size(); ++g)
            panel.prior_density[g] = std::exp(post.prior().log_density(core.tau_grid[g]));
    }
    panel.median = post.median();
    panel.ci95 = post.ci95();

    TraceData trace;
    fill_common(trace, data, std::move(core));
    trace.bayes_panel = std::move(panel);
    return trace;
}

TraceData compute_trace(const Dataset& data, const DesignMatrix& X,
                        const std::vector<Contrast>& contrasts, const FreqResult& freq,
                        GridSpec grid) {
    double tau_max = grid.tau_max;
    if (!(tau_max > 0.0))
        tau_max = std::max(1.1 * freq.tau_ci95.hi, 1.5 * freq.tau_hat);
    if (!(tau_max > 0.0)) tau_max = *std::max_element(data.se.begin(), data.se.end());

    TraceCore core = trace_core(data, X, contrasts, grid.points, tau_max);

    FreqPanel panel;
    panel.q_values = std::move(core.q_values);
    const int dof = static_cast<int>(data.size()) - static_cast<int>(X.cols);
    if (dof >= 1)
        panel.chi2_band = {chi2_quantile(0.025, dof), chi2_quantile(0.975, dof)};
    panel.tau_hat = freq.tau_hat;
    panel.tau_ci95 = freq.tau_ci95;

    TraceData trace;
    fill_common(trace, data, std::move(core));
    trace.freq_panel = std::move(panel);
    return trace;
}

namespace {

// Canvas geometry shared by every trace rendering. Fixed numbers keep the
// output byte-stable.
struct Layout {
    static constexpr double W = 800, H = 600;
    static constexpr double x0 = 62, x1 = 690;        // trace/panel data area
    static constexpr double xInfA = 756, xInfB = 792; // infinity reference strip
    static constexpr double xInf = 774;               // "tau = inf" tick
    static constexpr double yT0 = 20, yT1 = 392;      // trace panel (70%)
    static constexpr double yP0 = 412, yP1 = 552;     // bottom panel (30%)
};

double lerp_at(const std::vector<double>& grid, const std::vector<double>& vals, double x) {
    if (x <= grid.front()) return vals.front();
    if (x >= grid.back()) return vals.back();
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t j = static_cast<std::size_t>(it - grid.begin());
    double t = (x - grid[j - 1]) / (grid[j] - grid[j - 1]);
    return vals[j - 1] + t * (vals[j] - vals[j - 1]);
}

}  // namespace

std::string render_trace_svg(const TraceData& trace, const TraceStyle& style) {
    using L = Layout;
    if (trace.tau_grid.size() < 2) throw input_error("trace grid needs at least 2 nodes");
    const double tau_hi = trace.tau_grid.back();

    // Vertical range over everything drawn in the trace panel.
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    auto eat = [&](double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    auto eat_series = [&](const SeriesTrace& s) {
        for (const auto& p : s.points) {
            eat(p.mean);
            if (style.conditional_bands) {
                eat(p.mean - 1.96 * p.sd);
                eat(p.mean + 1.96 * p.sd);
            }
        }
    };
    for (const auto& s : trace.study_traces) eat_series(s);
    for (const auto& s : trace.contrast_traces) eat_series(s);
    for (double v : trace.infinity_refs) eat(v);
    eat(trace.infinity_mean);
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    double pad = 0.06 * (hi - lo);
    lo -= pad;
    hi += pad;

    auto xs = [&](double tau) { return L::x0 + tau / tau_hi * (L::x1 - L::x0); };
    auto ys = [&](double v) { return L::yT1 - (v - lo) / (hi - lo) * (L::yT1 - L::yT0); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
           "viewBox=\"0 0 800 600\">\n";
    svg += "<rect width=\"800\" height=\"600\" fill=\"#ffffff\"/>\n";
    svg += "<defs>\n<clipPath id=\"trace-area\"><rect x=\"" + f2(L::x0) + "\" y=\"" + f2(L::yT0) +
           "\" width=\"" + f2(L::x1 - L::x0) + "\" height=\"" + f2(L::yT1 - L::yT0) +
           "\"/></clipPath>\n<clipPath id=\"panel-area\"><rect x=\"" + f2(L::x0) + "\" y=\"" +
           f2(L::yP0) + "\" width=\"" + f2(L::x1 - L::x0) + "\" height=\"" + f2(L::yP1 - L::yP0) +
           "\"/></clipPath>\n</defs>\n";
    svg += "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#333333\">\n";

    // Frames.
    const std::string frame = "fill=\"none\" stroke=\"#9a9a9a\" stroke-width=\"1\"";
    svg += "<rect x=\"" + f2(L::x0) + "\" y=\"" + f2(L::yT0) + "\" width=\"" + f2(L::x1 - L::x0) +
           "\" height=\"" + f2(L::yT1 - L::yT0) + "\" " + frame + "/>\n";
    svg += "<rect x=\"" + f2(L::x0) + "\" y=\"" + f2(L::yP0) + "\" width=\"" + f2(L::x1 - L::x0) +
           "\" height=\"" + f2(L::yP1 - L::yP0) + "\" " + frame + "/>\n";

    const std::string axis_stroke = "stroke=\"#333333\" stroke-width=\"1\"";

    // Effect axis (left of the trace panel).
    {
        double step = 1.0;
        auto ticks = nice_ticks(lo, hi, 6, &step);
        for (double v : ticks) {
            add_line(svg, L::x0 - 4, ys(v), L::x0, ys(v), axis_stroke);
            add_text(svg, L::x0 - 7, ys(v) + 3.5, tick_label(v, step), "text-anchor=\"end\"");
        }
        add_text(svg, 16, (L::yT0 + L::yT1) / 2, "effect",
                 "text-anchor=\"middle\" transform=\"rotate(-90 16 " +
                     f2((L::yT0 + L::yT1) / 2) + ")\"");
    }

    // Shared tau axis under the bottom panel, plus alignment ticks under the
    // trace panel and the infinity tick on the right.
    {
        double step = 1.0;
        auto ticks = nice_ticks(0.0, tau_hi, 6, &step);
        for (double v : ticks) {
            add_line(svg, xs(v), L::yP1, xs(v), L::yP1 + 4, axis_stroke);
            add_text(svg, xs(v), L::yP1 + 16, tick_label(v, step), "text-anchor=\"middle\"");
            add_line(svg, xs(v), L::yT1, xs(v), L::yT1 - 4, "stroke=\"#bbbbbb\" stroke-width=\"1\"");
        }
        add_line(svg, L::x1, L::yP1, L::xInfB, L::yP1,
                 "stroke=\"#333333\" stroke-width=\"1\" stroke-dasharray=\"2,3\"");
        add_line(svg, L::xInf, L::yP1, L::xInf, L::yP1 + 4, axis_stroke);
        add_text(svg, L::xInf, L::yP1 + 16, "τ=∞", "text-anchor=\"middle\"");
        add_text(svg, (L::x0 + L::x1) / 2, L::yP1 + 34, "heterogeneity τ",
                 "text-anchor=\"middle\" font-size=\"12\"");
    }

    // Series, studies first, then contrasts on top.
    auto draw_series = [&](const SeriesTrace& s, const char* color, double width, bool bold) {
        std::vector<double> px(trace.tau_grid.size()), py(trace.tau_grid.size());
        for (std::size_t g = 0; g < trace.tau_grid.size(); ++g) px[g] = xs(trace.tau_grid[g]);
        if (style.conditional_bands) {
            for (int sign : {-1, 1}) {
                for (std::size_t g = 0; g < trace.tau_grid.size(); ++g)
                    py[g] = ys(s.points[g].mean + sign * 1.96 * s.points[g].sd);
                add_polyline(svg, px, py,
                             "clip-path=\"url(#trace-area)\" stroke=\"" + std::string(color) +
                                 "\" stroke-width=\"0.9\" stroke-dasharray=\"3,3\"");
            }
        }
        for (std::size_t g = 0; g < trace.tau_grid.size(); ++g) py[g] = ys(s.points[g].mean);
        add_polyline(svg, px, py,
                     "clip-path=\"url(#trace-area)\" stroke=\"" + std::string(color) +
                         "\" stroke-width=\"" + f2(width) + "\"");
        add_text(svg, L::x1 + 3, py.back() + 3, s.label,
                 "font-size=\"8\" fill=\"" + std::string(color) + "\"" +
                     (bold ? " font-weight=\"bold\"" : ""));
    };
    for (std::size_t i = 0; i < trace.study_traces.size(); ++i)
        draw_series(trace.study_traces[i], series_color(i), 1.6, false);
    for (std::size_t j = 0; j < trace.contrast_traces.size(); ++j)
        draw_series(trace.contrast_traces[j], series_color(trace.study_traces.size() + j), 2.6,
                    true);

    // tau -> infinity limits: dotted ticks on the right strip.
    for (std::size_t i = 0; i < trace.infinity_refs.size(); ++i)
        add_line(svg, L::xInfA, ys(trace.infinity_refs[i]), L::xInfB, ys(trace.infinity_refs[i]),
                 "stroke=\"" + std::string(series_color(i)) +
                     "\" stroke-width=\"1.4\" stroke-dasharray=\"2,3\"");
    add_line(svg, L::xInfA, ys(trace.infinity_mean), L::xInfB, ys(trace.infinity_mean),
             "stroke=\"#000000\" stroke-width=\"2\" stroke-dasharray=\"2,3\"");

    // Bottom panel.
    if (trace.bayes_panel) {
        const BayesPanel& p = *trace.bayes_panel;
        double dmax = 0.0;
        for (double d : p.posterior_density) dmax = std::max(dmax, d);
        for (double d : p.prior_density) dmax = std::max(dmax, d);
        if (!(dmax > 0.0)) dmax = 1.0;
        auto yp = [&](double d) { return L::yP1 - d / dmax * (L::yP1 - L::yP0) * 0.94; };

        // Shaded 95% credible region under the posterior curve.
        {
            double a = std::max(p.ci95.lo, trace.tau_grid.front());
            double b = std::min(p.ci95.hi, trace.tau_grid.back());
            std::string pts = f2(xs(a)) + "," + f2(L::yP1);
            pts += " " + f2(xs(a)) + "," +
                   f2(yp(lerp_at(trace.tau_grid, p.posterior_density, a)));
            for (std::size_t g = 0; g < trace.tau_grid.size(); ++g)
                if (trace.tau_grid[g] > a && trace.tau_grid[g] < b)
                    pts += " " + f2(xs(trace.tau_grid[g])) + "," + f2(yp(p.posterior_density[g]));
            pts += " " + f2(xs(b)) + "," +
                   f2(yp(lerp_at(trace.tau_grid, p.posterior_density, b)));
            pts += " " + f2(xs(b)) + "," + f2(L::yP1);
            svg += "<polygon clip-path=\"url(#panel-area)\" fill=\"#dcdcdc\" stroke=\"none\" "
                   "points=\"" + pts + "\"/>\n";
        }

        std::vector<double> px(trace.tau_grid.size()), py(trace.tau_grid.size());
        for (std::size_t g = 0; g < trace.tau_grid.size(); ++g) px[g] = xs(trace.tau_grid[g]);
        if (!p.prior_density.empty()) {
            for (std::size_t g = 0; g < trace.tau_grid.size(); ++g)
                py[g] = yp(p.prior_density[g]);
            add_polyline(svg, px, py,
                         "clip-path=\"url(#panel-area)\" stroke=\"#666666\" stroke-width=\"1.4\" "
                         "stroke-dasharray=\"6,4\"");
        }
        for (std::size_t g = 0; g < trace.tau_grid.size(); ++g)
            py[g] = yp(p.posterior_density[g]);
        add_polyline(svg, px, py,
                     "clip-path=\"url(#panel-area)\" stroke=\"#1a1a1a\" stroke-width=\"1.7\"");
        add_line(svg, xs(p.median), L::yP1, xs(p.median), L::yP0 + 4,
                 "stroke=\"#000000\" stroke-width=\"1.1\"");
        add_text(svg, 16, (L::yP0 + L::yP1) / 2, "density",
                 "text-anchor=\"middle\" transform=\"rotate(-90 16 " +
                     f2((L::yP0 + L::yP1) / 2) + ")\"");
    } else if (trace.freq_panel) {
        const FreqPanel& p = *trace.freq_panel;
        double qmax = p.chi2_band.hi;
        for (double q : p.q_values) qmax = std::max(qmax, q);
        if (!(qmax > 0.0)) qmax = 1.0;
        qmax *= 1.06;
        auto yp = [&](double q) { return L::yP1 - q / qmax * (L::yP1 - L::yP0); };

        svg += "<rect clip-path=\"url(#panel-area)\" x=\"" + f2(L::x0) + "\" y=\"" +
               f2(yp(p.chi2_band.hi)) + "\" width=\"" + f2(L::x1 - L::x0) + "\" height=\"" +
               f2(yp(p.chi2_band.lo) - yp(p.chi2_band.hi)) + "\" fill=\"#e4e4e4\"/>\n";
        std::vector<double> px(trace.tau_grid.size()), py(trace.tau_grid.size());
        for (std::size_t g = 0; g < trace.tau_grid.size(); ++g) {
            px[g] = xs(trace.tau_grid[g]);
            py[g] = yp(p.q_values[g]);
        }
        add_polyline(svg, px, py,
                     "clip-path=\"url(#panel-area)\" stroke=\"#1a1a1a\" stroke-width=\"1.7\"");
        add_line(svg, xs(p.tau_hat), L::yP1, xs(p.tau_hat), L::yP0 + 4,
                 "stroke=\"#000000\" stroke-width=\"1.2\" stroke-dasharray=\"5,3\"");
        if (p.tau_ci95.hi > p.tau_ci95.lo)
            add_line(svg, xs(p.tau_ci95.lo), L::yP1 - 3, xs(std::min(p.tau_ci95.hi, tau_hi)),
                     L::yP1 - 3, "stroke=\"#555555\" stroke-width=\"5\"");
        add_text(svg, 16, (L::yP0 + L::yP1) / 2, "Q",
                 "text-anchor=\"middle\" transform=\"rotate(-90 16 " +
                     f2((L::yP0 + L::yP1) / 2) + ")\"");
        double step = 1.0;
        auto ticks = nice_ticks(0.0, qmax, 4, &step);
        for (double v : ticks) {
            add_line(svg, L::x0 - 4, yp(v), L::x0, yp(v), axis_stroke);
            add_text(svg, L::x0 - 7, yp(v) + 3.5, tick_label(v, step), "text-anchor=\"end\"");
        }
    }

    svg += "</g>\n</svg>\n";
    return svg;
}

std::string render_forest_svg(const Dataset& data,
                              const std::vector<MarginalSummary>& marginals,
                              const MarginalSummary& overall,
                              const MarginalSummary& prediction) {
    if (marginals.size() != data.size())
        throw input_error("forest plot needs one marginal summary per study");

    const double W = 800;
    const double x0 = 170, x1 = 620;
    const double rowH = 26;
    const std::size_t k = data.size();
    const double headerY = 24, firstRow = 40;
    const double sepY = firstRow + static_cast<double>(k) * rowH + 6;
    const double overallY = sepY + 8 + rowH / 2;
    const double predY = overallY + rowH;
    const double axisY = predY + rowH / 2 + 18;
    const double H = axisY + 42;

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    auto eat = [&](double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    for (std::size_t i = 0; i < k; ++i) {
        eat(data.y[i] - 1.96 * data.se[i]);
        eat(data.y[i] + 1.96 * data.se[i]);
        eat(marginals[i].ci95.lo);
        eat(marginals[i].ci95.hi);
    }
    eat(overall.ci95.lo);
    eat(overall.ci95.hi);
    eat(prediction.ci95.lo);
    eat(prediction.ci95.hi);
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto xsc = [&](double v) { return x0 + (v - lo) / (hi - lo) * (x1 - x0); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f2(W) + "\" height=\"" + f2(H) +
           "\" viewBox=\"0 0 " + f2(W) + " " + f2(H) + "\">\n";
    svg += "<rect width=\"" + f2(W) + "\" height=\"" + f2(H) + "\" fill=\"#ffffff\"/>\n";
    svg += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#222222\">\n";

    add_text(svg, 10, headerY, "study", "font-weight=\"bold\"");
    add_text(svg, W - 10, headerY, "estimate [95% CI]", "font-weight=\"bold\" text-anchor=\"end\"");

    if (lo < 0.0 && hi > 0.0)
        add_line(svg, xsc(0.0), firstRow - 6, xsc(0.0), axisY,
                 "stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"2,3\"");

    auto numbers = [&](const MarginalSummary& m) {
        return f2(m.median) + " [" + f2(m.ci95.lo) + ", " + f2(m.ci95.hi) + "]";
    };

    for (std::size_t i = 0; i < k; ++i) {
        double yc = firstRow + static_cast<double>(i) * rowH + rowH / 2;
        add_text(svg, 10, yc + 4, data.labels[i], "");
        // Raw interval y_i +- 1.96 se_i.
        double yraw = yc - 5;
        add_line(svg, xsc(data.y[i] - 1.96 * data.se[i]), yraw,
                 xsc(data.y[i] + 1.96 * data.se[i]), yraw,
                 "stroke=\"#444444\" stroke-width=\"1.3\"");
        svg += "<rect x=\"" + f2(xsc(data.y[i]) - 3) + "\" y=\"" + f2(yraw - 3) +
               "\" width=\"6\" height=\"6\" fill=\"#444444\"/>\n";
        // Shrinkage interval below it.
        double yshr = yc + 5;
        add_line(svg, xsc(marginals[i].ci95.lo), yshr, xsc(marginals[i].ci95.hi), yshr,
                 "stroke=\"#1f77b4\" stroke-width=\"2.2\"");
        svg += "<circle cx=\"" + f2(xsc(marginals[i].median)) + "\" cy=\"" + f2(yshr) +
               "\" r=\"2.8\" fill=\"#1f77b4\"/>\n";
        add_text(svg, W - 10, yc + 4, numbers(marginals[i]), "text-anchor=\"end\"");
    }

    add_line(svg, 10, sepY, W - 10, sepY, "stroke=\"#cccccc\" stroke-width=\"1\"");

    add_text(svg, 10, overallY + 4, overall.target, "font-weight=\"bold\"");
    svg += "<polygon fill=\"#1f77b4\" points=\"" + f2(xsc(overall.ci95.lo)) + "," + f2(overallY) +
           " " + f2(xsc(overall.median)) + "," + f2(overallY - 7) + " " + f2(xsc(overall.ci95.hi)) +
           "," + f2(overallY) + " " + f2(xsc(overall.median)) + "," + f2(overallY + 7) + "\"/>\n";
    add_text(svg, W - 10, overallY + 4, numbers(overall), "font-weight=\"bold\" text-anchor=\"end\"");

    add_text(svg, 10, predY + 4, prediction.target, "");
    add_line(svg, xsc(prediction.ci95.lo), predY, xsc(prediction.ci95.hi), predY,
             "stroke=\"#7f7f7f\" stroke-width=\"2.2\"");
    add_line(svg, xsc(prediction.ci95.lo), predY - 5, xsc(prediction.ci95.lo), predY + 5,
             "stroke=\"#7f7f7f\" stroke-width=\"2.2\"");
    add_line(svg, xsc(prediction.ci95.hi), predY - 5, xsc(prediction.ci95.hi), predY + 5,
             "stroke=\"#7f7f7f\" stroke-width=\"2.2\"");
    svg += "<circle cx=\"" + f2(xsc(prediction.median)) + "\" cy=\"" + f2(predY) +
           "\" r=\"3\" fill=\"#ffffff\" stroke=\"#7f7f7f\" stroke-width=\"1.6\"/>\n";
    add_text(svg, W - 10, predY + 4, numbers(prediction), "text-anchor=\"end\"");

    add_line(svg, x0, axisY, x1, axisY, "stroke=\"#333333\" stroke-width=\"1\"");
    double step = 1.0;
    auto ticks = nice_ticks(lo, hi, 7, &step);
    for (double v : ticks) {
        add_line(svg, xsc(v), axisY, xsc(v), axisY + 4, "stroke=\"#333333\" stroke-width=\"1\"");
        add_text(svg, xsc(v), axisY + 16, tick_label(v, step), "text-anchor=\"middle\"");
    }
    add_text(svg, (x0 + x1) / 2, axisY + 32, "effect", "text-anchor=\"middle\" font-size=\"12\"");

    svg += "</g>\n</svg>\n";
    return svg;
}

std::string export_trace_csv(const TraceData& trace) {
    std::string out = "tau,series,kind,mean,sd\n";
    auto node_row = [&](double tau, const std::string& series, const char* kind, double mean,
                        const double* sd) {
        out += num17(tau) + "," + csv_escape(series) + "," + kind + "," + num17(mean) + ",";
        if (sd) out += num17(*sd);
        out += '\n';
    };

    for (const auto& s : trace.study_traces)
        for (std::size_t g = 0; g < trace.tau_grid.size(); ++g)
            node_row(trace.tau_grid[g], s.label, "study", s.points[g].mean, &s.points[g].sd);
    for (const auto& s : trace.contrast_traces)
        for (std::size_t g = 0; g < trace.tau_grid.size(); ++g)
            node_row(trace.tau_grid[g], s.label, "contrast", s.points[g].mean, &s.points[g].sd);

    if (trace.bayes_panel) {
        const BayesPanel& p = *trace.bayes_panel;
        for (std::size_t g = 0; g < trace.tau_grid.size(); ++g)
            node_row(trace.tau_grid[g], "posterior-density", "panel", p.posterior_density[g],
                     nullptr);
        for (std::size_t g = 0; g < p.prior_density.size(); ++g)
            node_row(trace.tau_grid[g], "prior-density", "panel", p.prior_density[g], nullptr);
        node_row(p.median, "tau-median", "panel", p.median, nullptr);
        node_row(p.ci95.lo, "tau-ci95-lo", "panel", p.ci95.lo, nullptr);
        node_row(p.ci95.hi, "tau-ci95-hi", "panel", p.ci95.hi, nullptr);
    } else if (trace.freq_panel) {
        const FreqPanel& p = *trace.freq_panel;
        for (std::size_t g = 0; g < trace.tau_grid.size(); ++g)
            node_row(trace.tau_grid[g], "q-statistic", "panel", p.q_values[g], nullptr);
        node_row(p.tau_hat, "tau-hat", "panel", p.tau_hat, nullptr);
        node_row(p.tau_ci95.lo, "tau-ci95-lo", "panel", p.tau_ci95.lo, nullptr);
        node_row(p.tau_ci95.hi, "tau-ci95-hi", "panel", p.tau_ci95.hi, nullptr);
        node_row(0.0, "chi2-band-lo", "panel", p.chi2_band.lo, nullptr);
        node_row(0.0, "chi2-band-hi", "panel", p.chi2_band.hi, nullptr);
    }
    return out;
}

}  // namespace metatrace
