#include <cmath>

#include "analysis.hpp"
#include "datasets.hpp"
#include "doctest.h"

using namespace metatrace;

namespace {

// Asserts the needles appear in order, each after the previous one.
void check_ordered(const std::string& text, const std::vector<std::string>& needles) {
    std::size_t pos = 0;
    for (const auto& needle : needles) {
        std::size_t found = text.find(needle, pos);
        CAPTURE(needle);
        REQUIRE(found != std::string::npos);
        pos = found + needle.size();
    }
}

}  // namespace

TEST_CASE("default bayes analysis of the sat data reproduces frozen values") {
    AnalysisConfig cfg;
    AnalysisResult r = run_analysis(bundled_dataset("sat"), cfg);

    CHECK(r.mode == AnalysisMode::Bayes);
    CHECK(r.prior_text == "uniform");
    CHECK(r.tau.point == doctest::Approx(5.2277).epsilon(1e-3));
    CHECK(r.tau.ci95.lo == 0.0);
    CHECK(r.tau.ci95.hi == doctest::Approx(17.2658).epsilon(1e-3));

    REQUIRE(r.coefficients.size() == 1);
    CHECK(r.coefficients[0].target == "mean");
    CHECK(r.coefficients[0].mean == doctest::Approx(8.0924).epsilon(1e-3));
    CHECK(r.coefficients[0].sd == doctest::Approx(5.2497).epsilon(1e-3));

    REQUIRE(r.studies.size() == 8);
    CHECK(r.studies[0].median == doctest::Approx(10.4802).epsilon(1e-3));
    CHECK(r.studies[0].ci95.lo == doctest::Approx(-3.3504).epsilon(1e-2));
    CHECK(r.studies[0].ci95.hi == doctest::Approx(29.9036).epsilon(1e-2));

    CHECK(r.new_study.sd == doctest::Approx(10.1619).epsilon(1e-3));
    CHECK(r.trace.tau_grid.size() == 201);
    CHECK(r.overall.mean == r.coefficients[0].mean);  // intercept-only
}

TEST_CASE("text report carries every section in order") {
    AnalysisConfig cfg;
    cfg.predictions.push_back(PredictionSpec::parse("fev1=1.0"));
    cfg.regression = {"fev1"};
    cfg.prior = PriorSpec::parse("halfnormal:0.5");
    AnalysisResult r = run_analysis(bundled_dataset("copd"), cfg);

    std::string text = report_text(r);
    check_ordered(text, {
                            "meta-analysis",
                            "prior",
                            "heterogeneity tau",
                            "effect estimates",
                            "prediction (new study)",
                            "shrinkage estimates",
                        });
    CHECK(text.find("halfnormal:0.5") != std::string::npos);
    CHECK(text.find("fev1") != std::string::npos);
}

TEST_CASE("json report keys appear in schema order and parse as numbers") {
    AnalysisConfig cfg;
    AnalysisResult r = run_analysis(bundled_dataset("sat"), cfg);
    std::string json = report_json(r);

    check_ordered(json, {
                            "\"schema\": \"metatrace-report-v1\"",
                            "\"mode\": \"bayes\"",
                            "\"dataset\"",
                            "\"n_study\": 8",
                            "\"model\"",
                            "\"prior\": \"uniform\"",
                            "\"tau\"",
                            "\"median\"",
                            "\"overall\"",
                            "\"new_study_prediction\"",
                            "\"coefficients\"",
                            "\"studies\"",
                        });

    // byte determinism
    CHECK(report_json(r) == json);

    // freq flavour swaps the heterogeneity block
    AnalysisConfig fcfg;
    fcfg.mode = AnalysisMode::Freq;
    AnalysisResult fr = run_analysis(bundled_dataset("copd"), fcfg);
    std::string fjson = report_json(fr);
    check_ordered(fjson, {
                             "\"mode\": \"freq\"",
                             "\"estimator\": \"reml\"",
                             "\"estimate\"",
                             "\"degenerate\": false",
                             "\"q_at_zero\"",
                         });
}

TEST_CASE("empty regression list equals the intercept-only design") {
    Dataset d = bundled_dataset("copd");
    DesignMatrix a = DesignMatrix::intercept_only(d.size());
    DesignMatrix b = DesignMatrix::from_covariates(d, {});
    CHECK(a.cols == b.cols);
    CHECK(a.values == b.values);
    CHECK(a.column_labels == b.column_labels);

    AnalysisConfig plain;
    plain.prior = PriorSpec::parse("halfnormal:0.5");
    AnalysisConfig empty_reg = plain;
    empty_reg.regression = {};
    CHECK(report_json(run_analysis(d, plain)) == report_json(run_analysis(d, empty_reg)));
}

TEST_CASE("exclusions drop studies before fitting") {
    AnalysisConfig cfg;
    cfg.exclude = {"AMIS"};
    AnalysisResult r = run_analysis(bundled_dataset("aspirin"), cfg);
    CHECK(r.data.size() == 5);
    CHECK(r.tau.point == doctest::Approx(0.0942).epsilon(5e-3));

    cfg.exclude = {"NOTREAL"};
    CHECK_THROWS_AS(run_analysis(bundled_dataset("aspirin"), cfg), input_error);
}

TEST_CASE("prediction specs parse and validate against the design") {
    PredictionSpec p = PredictionSpec::parse("gender=1,smoke=0");
    CHECK(p.label == "gender=1,smoke=0");
    REQUIRE(p.assignments.size() == 2);
    CHECK(p.assignments[0].first == "gender");
    CHECK(p.assignments[0].second == 1.0);

    CHECK_THROWS_AS(PredictionSpec::parse(""), input_error);
    CHECK_THROWS_AS(PredictionSpec::parse("gender"), input_error);
    CHECK_THROWS_AS(PredictionSpec::parse("gender=x"), input_error);
    CHECK_THROWS_AS(PredictionSpec::parse("a=1,a=2"), input_error);

    AnalysisConfig cfg;
    cfg.regression = {"gender"};
    cfg.predictions.push_back(PredictionSpec::parse("smoke=1"));  // not in model
    CHECK_THROWS_AS(run_analysis(bundled_dataset("no2"), cfg), input_error);

    cfg.predictions = {PredictionSpec::parse("gender=1,smoke=1")};  // extra name
    CHECK_THROWS_AS(run_analysis(bundled_dataset("no2"), cfg), input_error);

    cfg.regression = {"gender", "smoke"};
    cfg.predictions = {PredictionSpec::parse("gender=1")};  // smoke missing
    CHECK_THROWS_AS(run_analysis(bundled_dataset("no2"), cfg), input_error);

    cfg.predictions = {PredictionSpec::parse("gender=1,smoke=0")};
    AnalysisResult ok = run_analysis(bundled_dataset("no2"), cfg);
    REQUIRE(ok.predictions.size() == 1);
    CHECK(ok.predictions[0].target == "gender=1,smoke=0");
}

TEST_CASE("contrast grammar and mode parsing") {
    Contrast c = AnalysisConfig::parse_contrast("diff:0,1");
    CHECK(c.label == "diff");
    CHECK(c.coefficients == std::vector<double>{0.0, 1.0});
    CHECK_THROWS_AS(AnalysisConfig::parse_contrast("nocolon"), input_error);
    CHECK_THROWS_AS(AnalysisConfig::parse_contrast(":1"), input_error);
    CHECK_THROWS_AS(AnalysisConfig::parse_contrast("d:1,x"), input_error);

    CHECK(parse_mode("bayes") == AnalysisMode::Bayes);
    CHECK(parse_mode("Bayesian") == AnalysisMode::Bayes);
    CHECK(parse_mode("freq") == AnalysisMode::Freq);
    CHECK(parse_mode("FREQUENTIST") == AnalysisMode::Freq);
    CHECK_THROWS_AS(parse_mode("wibble"), input_error);

    CHECK(parse_interval("shortest") == IntervalMethod::Shortest);
    CHECK(parse_interval("central") == IntervalMethod::Central);
    CHECK_THROWS_AS(parse_interval("hpd"), input_error);
}

TEST_CASE("frequentist summaries are symmetric normals") {
    AnalysisConfig cfg;
    cfg.mode = AnalysisMode::Freq;
    AnalysisResult r = run_analysis(bundled_dataset("copd"), cfg);
    CHECK(r.estimator_text == "reml");
    CHECK(r.tau.point == doctest::Approx(0.1418).epsilon(1e-2));
    for (const auto& s : r.studies) {
        CHECK(s.median == s.mean);
        CHECK(s.ci95.lo == doctest::Approx(s.mean - 1.959963984540054 * s.sd).epsilon(1e-12));
        CHECK(s.ci95.hi == doctest::Approx(s.mean + 1.959963984540054 * s.sd).epsilon(1e-12));
    }
    CHECK(r.trace.freq_panel.has_value());
}

TEST_CASE("config limits guard runaway grids") {
    AnalysisConfig cfg;
    cfg.grid_points = 100001;
    CHECK_THROWS_AS(run_analysis(bundled_dataset("sat"), cfg), input_error);

    cfg.grid_points = 51;
    cfg.tau_grid_max = 12.0;
    AnalysisResult r = run_analysis(bundled_dataset("sat"), cfg);
    CHECK(r.trace.tau_grid.size() == 51);
    CHECK(r.trace.tau_grid.back() == doctest::Approx(12.0));
}
