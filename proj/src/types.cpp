#include "types.hpp"

#include <cmath>
#include <set>

namespace metatrace {

void Dataset::validate() const {
    const std::size_t k = y.size();
    if (k == 0) throw input_error("dataset is empty");
    if (labels.size() != k || se.size() != k)
        throw input_error("dataset columns have inconsistent lengths");
    for (std::size_t i = 0; i < k; ++i) {
        if (!std::isfinite(y[i]))
            throw input_error("non-finite effect estimate for study '" + labels[i] + "'");
        if (!std::isfinite(se[i]) || se[i] <= 0.0)
            throw input_error("standard error for study '" + labels[i] +
                              "' must be positive and finite");
    }
    std::set<std::string> seen;
    for (const auto& label : labels) {
        if (!seen.insert(label).second)
            throw input_error("duplicate study label '" + label + "'");
    }
    if (covariate_names.size() != covariate_columns.size())
        throw input_error("covariate names and columns out of sync");
    for (std::size_t j = 0; j < covariate_columns.size(); ++j) {
        if (covariate_columns[j].size() != k)
            throw input_error("covariate '" + covariate_names[j] + "' has wrong length");
        for (double v : covariate_columns[j])
            if (!std::isfinite(v))
                throw input_error("non-finite value in covariate '" + covariate_names[j] + "'");
    }
}

bool Dataset::has_covariate(const std::string& name) const {
    for (const auto& n : covariate_names)
        if (n == name) return true;
    return false;
}

const std::vector<double>& Dataset::covariate(const std::string& name) const {
    for (std::size_t j = 0; j < covariate_names.size(); ++j)
        if (covariate_names[j] == name) return covariate_columns[j];
    throw input_error("unknown covariate '" + name + "'");
}

std::size_t Dataset::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return i;
    throw input_error("unknown study label '" + label + "'");
}

Dataset Dataset::without(const std::string& label) const {
    const std::size_t drop = index_of(label);
    Dataset out;
    out.covariate_names = covariate_names;
    out.covariate_columns.resize(covariate_columns.size());
    out.source = source;
    for (std::size_t i = 0; i < size(); ++i) {
        if (i == drop) continue;
        out.labels.push_back(labels[i]);
        out.y.push_back(y[i]);
        out.se.push_back(se[i]);
        for (std::size_t j = 0; j < covariate_columns.size(); ++j)
            out.covariate_columns[j].push_back(covariate_columns[j][i]);
    }
    return out;
}

DesignMatrix DesignMatrix::intercept_only(std::size_t k) {
    DesignMatrix X;
    X.rows = k;
    X.cols = 1;
    X.values.assign(k, 1.0);
    X.column_labels = {"intercept"};
    return X;
}

DesignMatrix DesignMatrix::from_covariates(const Dataset& data,
                                           const std::vector<std::string>& names) {
    if (names.empty()) return intercept_only(data.size());
    const std::size_t k = data.size();
    const std::size_t p = names.size() + 1;
    if (p > k)
        throw input_error("design has more columns than studies (p > k)");
    DesignMatrix X;
    X.rows = k;
    X.cols = p;
    X.values.assign(k * p, 0.0);
    X.column_labels.push_back("intercept");
    for (std::size_t i = 0; i < k; ++i) X.values[i * p] = 1.0;
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto& col = data.covariate(names[j]);
        X.column_labels.push_back(names[j]);
        for (std::size_t i = 0; i < k; ++i) X.values[i * p + j + 1] = col[i];
    }
    return X;
}

}  // namespace metatrace
