#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace metatrace {

// Error taxonomy, mirrored by the C API status codes and the CLI exit codes:
// input_error -> invalid data/config (exit 2), model_error -> numeric or model
// failure (exit 3), io_error -> filesystem trouble (exit 4).
class input_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class model_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct Estimate {
    double mean = 0.0;
    double sd = 0.0;
};

// One study per row: effect estimate y[i] with standard error se[i], plus any
// number of named covariate columns.
struct Dataset {
    std::vector<std::string> labels;
    std::vector<double> y;
    std::vector<double> se;
    std::vector<std::string> covariate_names;
    std::vector<std::vector<double>> covariate_columns;
    std::string source;  // data-origin note for bundled data, empty otherwise

    std::size_t size() const { return y.size(); }

    // Throws input_error unless: all columns share length k >= 1, every
    // se > 0, every value finite, labels unique.
    void validate() const;

    bool has_covariate(const std::string& name) const;
    const std::vector<double>& covariate(const std::string& name) const;
    std::size_t index_of(const std::string& label) const;

    // Copy with one study removed; covariates are carried along.
    Dataset without(const std::string& label) const;
};

struct DesignMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major, rows*cols
    std::vector<std::string> column_labels;

    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    static DesignMatrix intercept_only(std::size_t k);
    // Intercept column plus the named covariate columns, in the given order.
    static DesignMatrix from_covariates(const Dataset& data,
                                        const std::vector<std::string>& names);
};

// Linear combination c'beta of the regression coefficients.
struct Contrast {
    std::string label;
    std::vector<double> coefficients;
};

}  // namespace metatrace
