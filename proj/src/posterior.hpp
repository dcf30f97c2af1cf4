#pragma once

#include <span>

#include "nnhm.hpp"
#include "priors.hpp"

namespace metatrace {

enum class IntervalMethod { Shortest, Central };

// One quadrature node of the heterogeneity posterior. The weights are the
// Simpson coefficients times the posterior density, normalized to sum to 1,
// so E[g(tau)|y] is approximated by sum w_j g(tau_j).
struct GridNode {
    double tau = 0.0;
    double weight = 0.0;
};

// Normalized posterior p(tau|y) on [0, tau_max], built by adaptive Simpson
// quadrature. Density, CDF and quantiles come from the same piecewise
// quadratic panels the integrator produced, so the object is self-consistent.
class TauPosterior {
public:
    const HeterogeneityPrior& prior() const { return prior_; }
    double log_norm_const() const { return log_norm_const_; }
    double tau_max() const { return tau_max_; }
    const std::vector<GridNode>& grid() const { return grid_; }
    double median() const { return median_; }
    Interval ci95() const { return ci95_; }  // shortest 95% interval

    double density(double tau) const;  // 0 outside [0, tau_max]
    double cdf(double tau) const;
    double quantile(double q) const;   // q in (0,1), else input_error

    // Interval of the given posterior mass. Shortest minimizes hi - lo over
    // the left tail mass and may start at 0; central uses equal tails.
    Interval credible_interval(double level, IntervalMethod method) const;

private:
    friend TauPosterior build_posterior(const Dataset&, const DesignMatrix&,
                                        const HeterogeneityPrior&);

    // Simpson panel [a, b] with midpoint density values and the cumulative
    // mass reached at a; together these give a closed-form piecewise CDF.
    struct Panel {
        double a, b;
        double fa, fm, fb;  // normalized density at a, (a+b)/2, b
        double cum_a;       // CDF(a)
        double mass;        // integral over [a, b]
    };

    std::size_t panel_index(double tau) const;
    double panel_cdf(const Panel& p, double tau) const;

    HeterogeneityPrior prior_;
    double log_norm_const_ = 0.0;
    double tau_max_ = 0.0;
    std::vector<GridNode> grid_;
    std::vector<Panel> panels_;
    double median_ = 0.0;
    Interval ci95_;
};

// Normalizes prior x marginal likelihood over tau. Preconditions: k >= 2, and
// k - p >= 2 for the improper uniform prior (otherwise the posterior does not
// integrate); violations raise input_error with advice.
TauPosterior build_posterior(const Dataset& data, const DesignMatrix& X,
                             const HeterogeneityPrior& prior);

// Posterior for the dataset with one study removed.
TauPosterior leave_one_out(const Dataset& data, const DesignMatrix& X,
                           const HeterogeneityPrior& prior, const std::string& excluded);

struct MarginalSummary {
    std::string target;
    double mean = 0.0;
    double sd = 0.0;
    double median = 0.0;
    Interval ci95;
};

// Collapses per-node normal conditionals (aligned with grid) into the mixture
// posterior summary: moment formulas for mean/sd, root-finding on the mixture
// CDF for median and interval.
MarginalSummary mixture_summary(std::span<const GridNode> grid,
                                std::span<const Estimate> conditional,
                                std::string target,
                                IntervalMethod method = IntervalMethod::Shortest);

MarginalSummary marginal_study_effect(const Dataset& data, const DesignMatrix& X,
                                      const TauPosterior& post, std::size_t study,
                                      IntervalMethod method = IntervalMethod::Shortest);
MarginalSummary marginal_contrast(const Dataset& data, const DesignMatrix& X,
                                  const TauPosterior& post, const Contrast& c,
                                  IntervalMethod method = IntervalMethod::Shortest);
MarginalSummary marginal_prediction(const Dataset& data, const DesignMatrix& X,
                                    const TauPosterior& post, std::span<const double> x_new,
                                    IntervalMethod method = IntervalMethod::Shortest);

}  // namespace metatrace
