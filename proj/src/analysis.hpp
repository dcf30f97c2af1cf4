#pragma once

#include <string>
#include <utility>
#include <vector>

#include "frequentist.hpp"
#include "plots.hpp"
#include "posterior.hpp"
#include "priors.hpp"

namespace metatrace {

enum class AnalysisMode { Bayes, Freq };

AnalysisMode parse_mode(const std::string& text);          // "bayes" | "freq"
IntervalMethod parse_interval(const std::string& text);    // "shortest" | "central"
std::string describe(AnalysisMode mode);
std::string describe(IntervalMethod method);

// Covariate profile of a hypothetical new study, e.g. "fev1=1.5" or
// "gender=0,smoke=1,no2=1". Every regression covariate must be assigned.
struct PredictionSpec {
    std::string label;  // the spec text, reused as the row label
    std::vector<std::pair<std::string, double>> assignments;

    static PredictionSpec parse(const std::string& text);
};

struct AnalysisConfig {
    AnalysisMode mode = AnalysisMode::Bayes;
    PriorSpec prior;                               // bayes
    TauEstimator estimator = TauEstimator::REML;   // freq
    std::vector<std::string> regression;           // empty = intercept-only
    std::vector<Contrast> contrasts;               // user-supplied
    std::vector<PredictionSpec> predictions;
    std::vector<std::string> exclude;              // labels to drop
    IntervalMethod interval = IntervalMethod::Shortest;
    std::size_t grid_points = 201;
    double tau_grid_max = 0.0;                     // 0 = automatic rule

    // Grammar "label:c1,c2,...".
    static Contrast parse_contrast(const std::string& text);
};

struct TauSummaryOut {
    double point = 0.0;  // posterior median (bayes) or point estimate (freq)
    double mean = 0.0;   // posterior mean; only meaningful in bayes mode
    Interval ci95;
    bool degenerate = false;  // freq: Q-profile interval collapsed to [0,0]
    double q_at_zero = 0.0;   // freq: Cochran's Q
};

struct AnalysisResult {
    AnalysisMode mode = AnalysisMode::Bayes;
    Dataset data;  // after exclusions
    DesignMatrix X;
    std::string prior_text;      // resolved prior (bayes)
    std::string estimator_text;  // estimator name (freq)
    IntervalMethod interval = IntervalMethod::Shortest;

    TauSummaryOut tau;
    std::vector<MarginalSummary> studies;       // aligned with data rows
    std::vector<MarginalSummary> coefficients;  // one per design column
    std::vector<MarginalSummary> contrasts;     // user contrasts
    std::vector<MarginalSummary> predictions;   // labelled new-study effects
    MarginalSummary overall;     // effect at the mean covariate profile
    MarginalSummary new_study;   // prediction at the mean covariate profile
    TraceData trace;
};

AnalysisResult run_analysis(const Dataset& data, const AnalysisConfig& config);

std::string report_text(const AnalysisResult& r);
std::string report_json(const AnalysisResult& r);

}  // namespace metatrace
