#pragma once

#include <optional>
#include <string>

#include "types.hpp"

namespace metatrace {

enum class PriorKind { Uniform, HalfNormal, DuMouchel };

// Heterogeneity prior p(tau) on [0, inf). Uniform is improper (constant 1),
// half-normal has density 2/(s*sqrt(2pi)) exp(-tau^2/(2 s^2)), and the
// DuMouchel log-logistic has density s0/(s0+tau)^2.
struct HeterogeneityPrior {
    PriorKind kind = PriorKind::Uniform;
    double scale = 0.0;  // half-normal scale, or DuMouchel s0

    bool proper() const { return kind != PriorKind::Uniform; }

    // log p(tau); the uniform prior returns 0 for every tau >= 0.
    // Throws input_error for tau < 0.
    double log_density(double tau) const;

    // Rough scale of the prior's support, used as a hint when searching for
    // the posterior truncation point. Zero for the uniform prior.
    double support_scale() const;

    // Spelled the way the CLI accepts it: "uniform", "halfnormal:<scale>",
    // "dumouchel:<s0>".
    std::string describe() const;

    static HeterogeneityPrior uniform();
    static HeterogeneityPrior half_normal(double scale);
    static HeterogeneityPrior du_mouchel(double s0);
};

// Parsed but not yet resolved prior request; "dumouchel" without an explicit
// scale stays open until a dataset supplies the default.
struct PriorSpec {
    PriorKind kind = PriorKind::Uniform;
    std::optional<double> scale;

    // Grammar: uniform | halfnormal:<scale> | dumouchel | dumouchel:<s0>
    static PriorSpec parse(const std::string& text);
};

// DuMouchel's default scale: s0 = sqrt(k / sum(1/se_i^2)), the square root of
// the harmonic mean of the squared standard errors.
double dumouchel_default_scale(const Dataset& data);

HeterogeneityPrior make_prior(const PriorSpec& spec, const Dataset& data);

}  // namespace metatrace
