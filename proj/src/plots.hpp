#pragma once

#include <optional>
#include <string>
#include <vector>

#include "frequentist.hpp"
#include "nnhm.hpp"
#include "posterior.hpp"

namespace metatrace {

struct SeriesTrace {
    std::string label;
    std::vector<Estimate> points;  // one per grid node
};

// Bottom-panel content for the Bayesian display: the heterogeneity
// posterior (and prior, when proper) sampled along the grid.
struct BayesPanel {
    std::vector<double> posterior_density;
    std::vector<double> prior_density;  // empty for improper priors
    double median = 0.0;
    Interval ci95{0.0, 0.0};
};

// Bottom-panel content for the frequentist display: Q statistic along the
// grid, the central chi-squared band, point estimate and Q-profile CI.
struct FreqPanel {
    std::vector<double> q_values;
    Interval chi2_band{0.0, 0.0};
    double tau_hat = 0.0;
    Interval tau_ci95{0.0, 0.0};
};

struct TraceData {
    std::vector<double> tau_grid;  // strictly increasing from 0
    std::vector<SeriesTrace> study_traces;
    std::vector<SeriesTrace> contrast_traces;
    std::optional<BayesPanel> bayes_panel;
    std::optional<FreqPanel> freq_panel;
    std::vector<double> infinity_refs;  // per-study y_i (tau -> inf limits)
    double infinity_mean = 0.0;         // arithmetic mean of the y_i
};

struct GridSpec {
    std::size_t points = 201;  // minimum 21 enforced
    double tau_max = 0.0;      // <= 0 selects the automatic rule
};

TraceData compute_trace(const Dataset& data, const DesignMatrix& X,
                        const std::vector<Contrast>& contrasts, const TauPosterior& post,
                        GridSpec grid = {});

TraceData compute_trace(const Dataset& data, const DesignMatrix& X,
                        const std::vector<Contrast>& contrasts, const FreqResult& freq,
                        GridSpec grid = {});

struct TraceStyle {
    bool conditional_bands = false;  // dotted +-1.96 sd bands around each trace
};

// Deterministic SVG renderings: same input, same bytes.
std::string render_trace_svg(const TraceData& trace, const TraceStyle& style = {});

std::string render_forest_svg(const Dataset& data,
                              const std::vector<MarginalSummary>& marginals,
                              const MarginalSummary& overall,
                              const MarginalSummary& prediction);

// Long-format CSV: header tau,series,kind,mean,sd with kind in
// {study, contrast, panel}; numbers at 17 significant digits.
std::string export_trace_csv(const TraceData& trace);

}  // namespace metatrace
