#pragma once

#include <string>
#include <vector>

#include "types.hpp"

namespace metatrace {

struct BundledInfo {
    std::string name;
    std::size_t n_study = 0;
    std::vector<std::string> covariates;
    std::string source;
};

std::vector<std::string> bundled_names();
bool is_bundled(const std::string& name);

// Raw CSV text of a bundled dataset (includes its '# source:' line); the
// canonical representation used by both export and parsing. Unknown names
// raise input_error listing the valid ones.
const std::string& bundled_csv(const std::string& name);

Dataset bundled_dataset(const std::string& name);

std::vector<BundledInfo> bundled_list();

// Aligned, ready-to-print table of the bundled datasets.
std::string bundled_listing();

}  // namespace metatrace
