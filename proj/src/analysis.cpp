#include "analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "csv.hpp"

namespace metatrace {

namespace {

std::string lowered(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trimmed(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& what) {
    const std::string t = trimmed(text);
    const char* begin = t.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (t.empty() || end != begin + t.size())
        throw input_error(what + ": '" + text + "' is not a number");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

constexpr double kZ975 = 1.959963984540054;

}  // namespace

AnalysisMode parse_mode(const std::string& text) {
    std::string t = lowered(trimmed(text));
    if (t == "bayes" || t == "bayesian") return AnalysisMode::Bayes;
    if (t == "freq" || t == "frequentist") return AnalysisMode::Freq;
    throw input_error("unknown mode '" + text + "' (choose one of: bayes, freq)");
}

IntervalMethod parse_interval(const std::string& text) {
    std::string t = lowered(trimmed(text));
    if (t == "shortest") return IntervalMethod::Shortest;
    if (t == "central") return IntervalMethod::Central;
    throw input_error("unknown interval method '" + text +
                      "' (choose one of: shortest, central)");
}

std::string describe(AnalysisMode mode) {
    return mode == AnalysisMode::Bayes ? "bayes" : "freq";
}

std::string describe(IntervalMethod method) {
    return method == IntervalMethod::Shortest ? "shortest" : "central";
}

PredictionSpec PredictionSpec::parse(const std::string& text) {
    PredictionSpec spec;
    spec.label = trimmed(text);
    if (spec.label.empty()) throw input_error("empty prediction spec");
    for (const auto& part : split(spec.label, ',')) {
        std::size_t eq = part.find('=');
        if (eq == std::string::npos)
            throw input_error("prediction spec must look like name=value[,name=value...] (got '" +
                              text + "')");
        std::string name = trimmed(part.substr(0, eq));
        if (name.empty()) throw input_error("prediction spec has an empty covariate name");
        for (const auto& [seen, v] : spec.assignments)
            if (seen == name)
                throw input_error("prediction spec assigns covariate '" + name + "' twice");
        spec.assignments.emplace_back(name,
                                      parse_double(part.substr(eq + 1), "prediction value"));
    }
    return spec;
}

Contrast AnalysisConfig::parse_contrast(const std::string& text) {
    std::size_t colon = text.find(':');
    if (colon == std::string::npos)
        throw input_error("contrast must look like label:c1,c2,... (got '" + text + "')");
    Contrast c;
    c.label = trimmed(text.substr(0, colon));
    if (c.label.empty()) throw input_error("contrast label is empty in '" + text + "'");
    for (const auto& part : split(text.substr(colon + 1), ','))
        c.coefficients.push_back(parse_double(part, "contrast coefficient"));
    return c;
}

namespace {

// Resolves a prediction spec against the design: intercept 1 plus one value
// per regression column, all covariates assigned exactly once.
std::vector<double> prediction_row(const PredictionSpec& spec, const DesignMatrix& X) {
    std::vector<double> x(X.cols, 0.0);
    x[0] = 1.0;
    std::vector<bool> seen(X.cols, false);
    seen[0] = true;
    for (const auto& [name, value] : spec.assignments) {
        std::size_t j = 0;
        for (j = 1; j < X.cols; ++j)
            if (X.column_labels[j] == name) break;
        if (j >= X.cols)
            throw input_error("prediction '" + spec.label + "' assigns unknown covariate '" +
                              name + "'");
        if (seen[j])
            throw input_error("prediction '" + spec.label + "' assigns covariate '" + name +
                              "' twice");
        seen[j] = true;
        x[j] = value;
    }
    for (std::size_t j = 1; j < X.cols; ++j)
        if (!seen[j])
            throw input_error("prediction '" + spec.label + "' does not assign covariate '" +
                              X.column_labels[j] + "'");
    return x;
}

MarginalSummary normal_summary(std::string target, Estimate e) {
    MarginalSummary m;
    m.target = std::move(target);
    m.mean = e.mean;
    m.sd = e.sd;
    m.median = e.mean;
    m.ci95 = {e.mean - kZ975 * e.sd, e.mean + kZ975 * e.sd};
    return m;
}

}  // namespace

AnalysisResult run_analysis(const Dataset& input, const AnalysisConfig& config) {
    if (config.grid_points > 100000)
        throw input_error("grid-points too large (maximum 100000)");

    Dataset data = input;
    for (const auto& label : config.exclude) data = data.without(label);
    data.validate();
    if (data.size() < 2) throw input_error("need at least 2 studies after exclusions");

    DesignMatrix X = config.regression.empty()
                         ? DesignMatrix::intercept_only(data.size())
                         : DesignMatrix::from_covariates(data, config.regression);
    const std::size_t p = X.cols;

    std::vector<Contrast> coef_contrasts;
    if (p == 1) {
        coef_contrasts.push_back({"mean", {1.0}});
    } else {
        for (std::size_t j = 0; j < p; ++j) {
            std::vector<double> unit(p, 0.0);
            unit[j] = 1.0;
            coef_contrasts.push_back({X.column_labels[j], std::move(unit)});
        }
    }
    for (const auto& c : config.contrasts)
        if (c.coefficients.size() != p)
            throw input_error("contrast '" + c.label + "' has " +
                              std::to_string(c.coefficients.size()) +
                              " coefficients but the model has " + std::to_string(p));

    // Mean covariate profile: the forest plot's overall/prediction rows.
    Contrast profile;
    profile.label = p == 1 ? "mean" : "mean profile";
    profile.coefficients.assign(p, 0.0);
    profile.coefficients[0] = 1.0;
    for (std::size_t j = 1; j < p; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < X.rows; ++i) sum += X(i, j);
        profile.coefficients[j] = sum / static_cast<double>(X.rows);
    }

    std::vector<std::pair<std::string, std::vector<double>>> pred_rows;
    for (const auto& spec : config.predictions)
        pred_rows.emplace_back(spec.label, prediction_row(spec, X));

    std::vector<Contrast> trace_contrasts = coef_contrasts;
    trace_contrasts.insert(trace_contrasts.end(), config.contrasts.begin(),
                           config.contrasts.end());
    for (const auto& [label, x] : pred_rows) trace_contrasts.push_back({label, x});

    AnalysisResult r;
    r.mode = config.mode;
    r.data = data;
    r.X = X;
    r.interval = config.interval;

    GridSpec grid{config.grid_points, config.tau_grid_max};

    if (config.mode == AnalysisMode::Bayes) {
        HeterogeneityPrior prior = make_prior(config.prior, data);
        r.prior_text = prior.describe();
        TauPosterior post = build_posterior(data, X, prior);

        r.tau.point = post.median();
        double tau_mean = 0.0;
        for (const auto& node : post.grid()) tau_mean += node.weight * node.tau;
        r.tau.mean = tau_mean;
        r.tau.ci95 = post.credible_interval(0.95, config.interval);

        for (std::size_t i = 0; i < data.size(); ++i)
            r.studies.push_back(marginal_study_effect(data, X, post, i, config.interval));
        for (const auto& c : coef_contrasts)
            r.coefficients.push_back(marginal_contrast(data, X, post, c, config.interval));
        for (const auto& c : config.contrasts)
            r.contrasts.push_back(marginal_contrast(data, X, post, c, config.interval));
        for (const auto& [label, x] : pred_rows) {
            MarginalSummary m = marginal_prediction(data, X, post, x, config.interval);
            m.target = label;
            r.predictions.push_back(std::move(m));
        }
        r.overall = marginal_contrast(data, X, post, profile, config.interval);
        r.new_study = marginal_prediction(data, X, post, profile.coefficients, config.interval);

        r.trace = compute_trace(data, X, trace_contrasts, post, grid);
    } else {
        FreqResult fr = blup(data, X, config.estimator);
        r.estimator_text = describe(fr.estimator);
        r.tau.point = fr.tau_hat;
        r.tau.ci95 = fr.tau_ci95;
        r.tau.degenerate = fr.ci_degenerate;
        r.tau.q_at_zero = fr.q_at_zero;

        const ConditionalFit& fit = fr.fit_at_hat;
        for (std::size_t i = 0; i < data.size(); ++i)
            r.studies.push_back(
                normal_summary(data.labels[i], {fit.theta_mean[i], fit.theta_sd[i]}));
        for (const auto& c : coef_contrasts)
            r.coefficients.push_back(normal_summary(c.label, conditional_contrast(fit, c)));
        for (const auto& c : config.contrasts)
            r.contrasts.push_back(normal_summary(c.label, conditional_contrast(fit, c)));
        for (const auto& [label, x] : pred_rows)
            r.predictions.push_back(normal_summary(label, predict_new_study(fit, x)));
        r.overall = normal_summary(profile.label, conditional_contrast(fit, profile));
        r.new_study = normal_summary("prediction", predict_new_study(fit, profile.coefficients));

        r.trace = compute_trace(data, X, trace_contrasts, fr, grid);
    }
    return r;
}

namespace {

std::string f4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.resize(width, ' ');
    return s;
}

std::string interval_text(const Interval& iv) {
    return "[" + f4(iv.lo) + ", " + f4(iv.hi) + "]";
}

void summary_table(std::string& out, const std::vector<MarginalSummary>& rows,
                   std::size_t label_width) {
    out += "  " + pad("target", label_width) + pad("mean", 11) + pad("sd", 11) +
           pad("median", 11) + "95% CI\n";
    for (const auto& m : rows)
        out += "  " + pad(m.target, label_width) + pad(f4(m.mean), 11) + pad(f4(m.sd), 11) +
               pad(f4(m.median), 11) + interval_text(m.ci95) + "\n";
}

std::size_t label_width_of(const std::vector<MarginalSummary>& rows) {
    std::size_t w = 8;
    for (const auto& m : rows) w = std::max(w, m.target.size() + 2);
    return w;
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string jnum(double v) { return std::isfinite(v) ? num17(v) : std::string("null"); }

std::string jstr(const std::string& s) { return "\"" + json_escape(s) + "\""; }

std::string jinterval(const Interval& iv) { return "[" + jnum(iv.lo) + ", " + jnum(iv.hi) + "]"; }

std::string jsummary(const MarginalSummary& m, const char* key) {
    return std::string("{\"") + key + "\": " + jstr(m.target) + ", \"mean\": " + jnum(m.mean) +
           ", \"sd\": " + jnum(m.sd) + ", \"median\": " + jnum(m.median) +
           ", \"ci95\": " + jinterval(m.ci95) + "}";
}

}  // namespace

std::string report_text(const AnalysisResult& r) {
    std::string out;
    out += "random-effects meta-analysis (" +
           std::string(r.mode == AnalysisMode::Bayes ? "bayesian" : "frequentist") + ")\n";
    out += "studies: " + std::to_string(r.data.size()) + "\n";
    if (!r.data.source.empty()) out += "source: " + r.data.source + "\n";
    std::string model = "model: " + r.X.column_labels[0];
    for (std::size_t j = 1; j < r.X.cols; ++j) model += " + " + r.X.column_labels[j];
    out += model + "\n";
    if (r.mode == AnalysisMode::Bayes) {
        out += "prior on tau: " + r.prior_text + "\n";
        out += "interval style: " + describe(r.interval) + "\n";
    } else {
        out += "estimator: " + r.estimator_text + "\n";
    }
    out += "\nheterogeneity tau\n";
    if (r.mode == AnalysisMode::Bayes) {
        out += "  median   " + f4(r.tau.point) + "\n";
        out += "  mean     " + f4(r.tau.mean) + "\n";
        out += "  95% CI   " + interval_text(r.tau.ci95) + "\n";
    } else {
        out += "  estimate " + f4(r.tau.point) + "\n";
        out += "  95% CI   " + interval_text(r.tau.ci95) + " (Q-profile" +
               (r.tau.degenerate ? ", degenerate at 0" : "") + ")\n";
        out += "  Q(0)     " + f4(r.tau.q_at_zero) + "\n";
    }

    const char* effect_header = r.mode == AnalysisMode::Bayes
                                    ? "\neffect estimates (marginal posterior)\n"
                                    : "\neffect estimates (conditional on the tau estimate)\n";
    out += effect_header;
    {
        std::vector<MarginalSummary> rows = r.coefficients;
        if (r.X.cols > 1) rows.push_back(r.overall);  // for p == 1 overall == mean
        summary_table(out, rows, label_width_of(rows));
    }

    if (!r.contrasts.empty()) {
        out += "\ncontrasts\n";
        summary_table(out, r.contrasts, label_width_of(r.contrasts));
    }

    out += "\nprediction (new study)\n";
    {
        std::vector<MarginalSummary> rows;
        rows.push_back(r.new_study);
        rows.insert(rows.end(), r.predictions.begin(), r.predictions.end());
        summary_table(out, rows, label_width_of(rows));
    }

    out += "\nstudies (shrinkage estimates)\n";
    std::size_t lw = 7;
    for (const auto& l : r.data.labels) lw = std::max(lw, l.size() + 2);
    out += "  " + pad("label", lw) + pad("y", 11) + pad("se", 11) + pad("mean", 11) +
           pad("sd", 11) + pad("median", 11) + "95% CI\n";
    for (std::size_t i = 0; i < r.data.size(); ++i) {
        const auto& m = r.studies[i];
        out += "  " + pad(r.data.labels[i], lw) + pad(f4(r.data.y[i]), 11) +
               pad(f4(r.data.se[i]), 11) + pad(f4(m.mean), 11) + pad(f4(m.sd), 11) +
               pad(f4(m.median), 11) + interval_text(m.ci95) + "\n";
    }
    return out;
}

std::string report_json(const AnalysisResult& r) {
    std::string out = "{\n";
    out += "  \"schema\": \"metatrace-report-v1\",\n";
    out += "  \"mode\": " + jstr(describe(r.mode)) + ",\n";

    out += "  \"dataset\": {\"n_study\": " + std::to_string(r.data.size()) +
           ", \"source\": " + jstr(r.data.source) + ", \"labels\": [";
    for (std::size_t i = 0; i < r.data.size(); ++i) {
        if (i) out += ", ";
        out += jstr(r.data.labels[i]);
    }
    out += "]},\n";

    out += "  \"model\": {\"columns\": [";
    for (std::size_t j = 0; j < r.X.cols; ++j) {
        if (j) out += ", ";
        out += jstr(r.X.column_labels[j]);
    }
    out += "], ";
    if (r.mode == AnalysisMode::Bayes)
        out += "\"prior\": " + jstr(r.prior_text) + ", ";
    else
        out += "\"estimator\": " + jstr(r.estimator_text) + ", ";
    out += "\"interval\": " + jstr(describe(r.interval)) + "},\n";

    out += "  \"tau\": {";
    if (r.mode == AnalysisMode::Bayes) {
        out += "\"median\": " + jnum(r.tau.point) + ", \"mean\": " + jnum(r.tau.mean) +
               ", \"ci95\": " + jinterval(r.tau.ci95);
    } else {
        out += "\"estimate\": " + jnum(r.tau.point) + ", \"ci95\": " + jinterval(r.tau.ci95) +
               ", \"degenerate\": " + (r.tau.degenerate ? "true" : "false") +
               ", \"q_at_zero\": " + jnum(r.tau.q_at_zero);
    }
    out += "},\n";

    out += "  \"overall\": " + jsummary(r.overall, "target") + ",\n";
    out += "  \"new_study_prediction\": " + jsummary(r.new_study, "target") + ",\n";

    auto array_of = [&](const char* name, const std::vector<MarginalSummary>& rows,
                        bool trailing_comma) {
        out += std::string("  \"") + name + "\": [";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out += "\n    " + jsummary(rows[i], "target");
            if (i + 1 < rows.size()) out += ",";
        }
        if (!rows.empty()) out += "\n  ";
        out += trailing_comma ? "],\n" : "]\n";
    };
    array_of("coefficients", r.coefficients, true);
    array_of("contrasts", r.contrasts, true);
    array_of("predictions", r.predictions, true);

    out += "  \"studies\": [";
    for (std::size_t i = 0; i < r.data.size(); ++i) {
        const auto& m = r.studies[i];
        out += "\n    {\"label\": " + jstr(r.data.labels[i]) + ", \"y\": " + jnum(r.data.y[i]) +
               ", \"se\": " + jnum(r.data.se[i]) + ", \"mean\": " + jnum(m.mean) +
               ", \"sd\": " + jnum(m.sd) + ", \"median\": " + jnum(m.median) +
               ", \"ci95\": " + jinterval(m.ci95) + "}";
        if (i + 1 < r.data.size()) out += ",";
    }
    if (r.data.size()) out += "\n  ";
    out += "]\n}\n";
    return out;
}

}  // namespace metatrace
