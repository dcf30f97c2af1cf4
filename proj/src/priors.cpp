#include "priors.hpp"

#include <cmath>
#include <numbers>

namespace metatrace {

double HeterogeneityPrior::log_density(double tau) const {
    if (!(tau >= 0.0))
        throw input_error("prior density requested at negative tau");
    switch (kind) {
        case PriorKind::Uniform:
            return 0.0;
        case PriorKind::HalfNormal:
            return std::log(2.0 / (scale * std::sqrt(2.0 * std::numbers::pi))) -
                   tau * tau / (2.0 * scale * scale);
        case PriorKind::DuMouchel:
            return std::log(scale) - 2.0 * std::log(scale + tau);
    }
    return 0.0;
}

double HeterogeneityPrior::support_scale() const {
    switch (kind) {
        case PriorKind::Uniform:
            return 0.0;
        case PriorKind::HalfNormal:
            return scale;
        case PriorKind::DuMouchel:
            // Heavy tailed; the median is at s0 but useful mass extends far.
            return 10.0 * scale;
    }
    return 0.0;
}

std::string HeterogeneityPrior::describe() const {
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return std::string(buf);
    };
    switch (kind) {
        case PriorKind::Uniform:
            return "uniform";
        case PriorKind::HalfNormal:
            return "halfnormal:" + fmt(scale);
        case PriorKind::DuMouchel:
            return "dumouchel:" + fmt(scale);
    }
    return "uniform";
}

HeterogeneityPrior HeterogeneityPrior::uniform() { return {PriorKind::Uniform, 0.0}; }

HeterogeneityPrior HeterogeneityPrior::half_normal(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw input_error("half-normal prior scale must be positive and finite");
    return {PriorKind::HalfNormal, scale};
}

HeterogeneityPrior HeterogeneityPrior::du_mouchel(double s0) {
    if (!(s0 > 0.0) || !std::isfinite(s0))
        throw input_error("DuMouchel prior scale must be positive and finite");
    return {PriorKind::DuMouchel, s0};
}

PriorSpec PriorSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    std::optional<double> scale;
    if (colon != std::string::npos) {
        const std::string rest = text.substr(colon + 1);
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (rest.empty() || end != rest.c_str() + rest.size() || !(v > 0.0) ||
            !std::isfinite(v))
            throw input_error("bad prior scale in '" + text + "'");
        scale = v;
    }
    if (name == "uniform") {
        if (scale) throw input_error("the uniform prior takes no scale");
        return {PriorKind::Uniform, std::nullopt};
    }
    if (name == "halfnormal") {
        if (!scale) throw input_error("halfnormal prior needs a scale, e.g. halfnormal:0.5");
        return {PriorKind::HalfNormal, scale};
    }
    if (name == "dumouchel") return {PriorKind::DuMouchel, scale};
    throw input_error("unknown prior '" + text +
                      "' (expected uniform, halfnormal:<scale> or dumouchel[:<s0>])");
}

double dumouchel_default_scale(const Dataset& data) {
    data.validate();
    double sum_inv = 0.0;
    for (double s : data.se) sum_inv += 1.0 / (s * s);
    return std::sqrt(static_cast<double>(data.size()) / sum_inv);
}

HeterogeneityPrior make_prior(const PriorSpec& spec, const Dataset& data) {
    switch (spec.kind) {
        case PriorKind::Uniform:
            return HeterogeneityPrior::uniform();
        case PriorKind::HalfNormal:
            return HeterogeneityPrior::half_normal(*spec.scale);
        case PriorKind::DuMouchel:
            return HeterogeneityPrior::du_mouchel(spec.scale ? *spec.scale
                                                             : dumouchel_default_scale(data));
    }
    return HeterogeneityPrior::uniform();
}

}  // namespace metatrace
