#include "datasets.hpp"

#include <array>

#include "csv.hpp"

namespace metatrace {

namespace {

const std::string kSat = R"(# source: Rubin (1981), SAT coaching experiments in eight schools; published estimates and standard errors
label,y,se
A,28.39,14.9
B,7.94,10.2
C,-2.75,16.3
D,6.82,11.0
E,-0.64,9.4
F,0.63,11.4
G,18.01,10.4
H,12.16,17.6
)";

const std::string kAspirin = R"(# source: Fleiss (1993), aspirin after myocardial infarction; log odds ratios derived from the published 2x2 event counts
label,y,se
MRC-1,-0.328901,0.197220
CDP,-0.383144,0.202902
MRC-2,-0.219562,0.143149
GASP,-0.215762,0.274491
PARIS,-0.225467,0.187616
AMIS,0.124636,0.098065
)";

const std::string kNo2 = R"(# source: reconstructed; study list and covariate coding follow the nitrogen-dioxide/respiratory-illness meta-regression of Hasselblad (1992) as reanalysed by DuMouchel (1994), with values calibrated to the reported summary statistics. Not the original records.
label,y,se,gender,smoke,no2
Melia77,0.039,0.08,1,1,1
Melia79,-0.037,0.07,1,1,1
Keller79,0.229,0.38,1,1,1
Ware84,0.027,0.06,1,0,1
Ekwo83,0.063,0.15,0,1,1
Ogston85,-0.001,0.11,1,0,1
Dijkstra90,0.294,0.14,0,1,0
Berwick89,0.188,0.19,1,0,0
Neas91,0.316,0.10,0,0,0
)";

const std::string kCopd = R"(# source: reconstructed; study list and design follow the Karner, Chong and Poole (2014) tiotropium/COPD review, with values calibrated to the published reanalysis statistics. Not the original records.
label,y,se,fev1,long
Bateman 2010a,-0.098,0.12,1.12,0
Bateman 2010b,-0.432,0.12,1.11,0
Beeh 2006,-0.378,0.26,1.45,0
Brusasco 2003,-0.139,0.16,1.08,0
Casaburi 2000,0.285,0.36,1.02,0
Casaburi 2002,0.023,0.13,1.01,1
Chan 2007,-0.406,0.16,1.03,0
Cooper 2010,-0.757,0.38,1.85,0
Covelli 2005,0.161,0.31,1.03,0
Donohue 2010,-0.290,0.14,1.30,1
Dusser 2006,-0.431,0.13,1.39,1
Johansson 2008,-0.711,0.34,1.79,0
Magnussen 2008,-0.617,0.30,1.55,0
Moita 2008,0.224,0.33,1.10,0
Niewoehner 2005,-0.414,0.10,1.04,0
Powrie 2007,-0.516,0.20,1.36,1
Sun 2007,0.700,0.58,1.16,0
Tashkin 2008,-0.163,0.055,1.10,1
Tonnel 2008,0.100,0.19,1.12,0
Verkindre 2006,-1.172,0.62,1.37,0
Voshaar 2008,-0.484,0.21,1.26,0
Zhou 2006,0.075,0.28,1.20,0
)";

struct Entry {
    const char* name;
    const std::string* csv;
};

constexpr std::size_t kCount = 4;

const std::array<Entry, kCount>& entries() {
    static const std::array<Entry, kCount> table{{
        {"sat", &kSat},
        {"aspirin", &kAspirin},
        {"no2", &kNo2},
        {"copd", &kCopd},
    }};
    return table;
}

}  // namespace

std::vector<std::string> bundled_names() {
    std::vector<std::string> names;
    for (const auto& e : entries()) names.emplace_back(e.name);
    return names;
}

bool is_bundled(const std::string& name) {
    for (const auto& e : entries())
        if (name == e.name) return true;
    return false;
}

const std::string& bundled_csv(const std::string& name) {
    for (const auto& e : entries())
        if (name == e.name) return *e.csv;
    std::string known;
    for (const auto& e : entries()) {
        if (!known.empty()) known += ", ";
        known += e.name;
    }
    throw input_error("unknown bundled dataset '" + name + "' (available: " + known + ")");
}

Dataset bundled_dataset(const std::string& name) { return ingest_dataset(bundled_csv(name)); }

std::vector<BundledInfo> bundled_list() {
    std::vector<BundledInfo> list;
    for (const auto& e : entries()) {
        Dataset d = ingest_dataset(*e.csv);
        BundledInfo info;
        info.name = e.name;
        info.n_study = d.size();
        info.covariates = d.covariate_names;
        info.source = d.source;
        list.push_back(std::move(info));
    }
    return list;
}

std::string bundled_listing() {
    std::string out;
    for (const auto& info : bundled_list()) {
        std::string cov;
        for (const auto& c : info.covariates) {
            if (!cov.empty()) cov += ",";
            cov += c;
        }
        if (cov.empty()) cov = "-";
        std::string line = info.name;
        line.resize(10, ' ');
        std::string count = std::to_string(info.n_study) + " studies";
        count.resize(12, ' ');
        std::string covcol = cov;
        if (covcol.size() < 18) covcol.resize(18, ' ');
        out += line + count + covcol + "  " + info.source + "\n";
    }
    return out;
}

}  // namespace metatrace
