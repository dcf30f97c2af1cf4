// Exercises the shared library strictly through its C header, the way a
// foreign-language binding would.
#include <cmath>
#include <cstring>
#include <memory>
#include <string>

#include "doctest.h"
#include "metatrace.h"

namespace {

struct FreeString {
    void operator()(char* p) const { mt_free(p); }
};
using ApiString = std::unique_ptr<char, FreeString>;

struct FreeDataset {
    void operator()(mt_dataset* p) const { mt_dataset_free(p); }
};
struct FreeConfig {
    void operator()(mt_config* p) const { mt_config_free(p); }
};
struct FreeAnalysis {
    void operator()(mt_analysis* p) const { mt_analysis_free(p); }
};

}  // namespace

TEST_CASE("version and error state") {
    REQUIRE(mt_version() != nullptr);
    CHECK(std::strlen(mt_version()) > 0);
    CHECK(mt_last_status() == MT_OK);
    CHECK(std::string(mt_last_error()).empty());
}

TEST_CASE("full run through the C surface") {
    std::unique_ptr<mt_dataset, FreeDataset> data(mt_dataset_bundled("sat"));
    REQUIRE(data);
    CHECK(mt_dataset_size(data.get()) == 8);

    std::unique_ptr<mt_config, FreeConfig> cfg(mt_config_new());
    REQUIRE(cfg);
    CHECK(mt_config_set_mode(cfg.get(), "bayes") == MT_OK);
    CHECK(mt_config_set_prior(cfg.get(), "uniform") == MT_OK);
    CHECK(mt_config_set_interval(cfg.get(), "shortest") == MT_OK);
    CHECK(mt_config_set_grid(cfg.get(), 201, 0.0) == MT_OK);

    std::unique_ptr<mt_analysis, FreeAnalysis> run(mt_run(data.get(), cfg.get()));
    REQUIRE(run);
    CHECK(mt_last_status() == MT_OK);

    double tau[4] = {0, 0, 0, 0};
    REQUIRE(mt_tau_summary(run.get(), tau) == MT_OK);
    CHECK(tau[0] == doctest::Approx(5.2277).epsilon(1e-3));  // posterior median
    CHECK(tau[2] == 0.0);
    CHECK(tau[3] == doctest::Approx(17.2658).epsilon(1e-3));

    REQUIRE(mt_n_studies(run.get()) == 8);
    double study[7];
    REQUIRE(mt_study_summary(run.get(), 0, study) == MT_OK);
    CHECK(study[0] == 28.39);  // y
    CHECK(study[1] == 14.9);   // se
    CHECK(study[3] < study[1]);  // marginal sd shrinks below se

    REQUIRE(mt_n_coefficients(run.get()) == 1);
    double coef[5];
    REQUIRE(mt_coefficient_summary(run.get(), 0, coef) == MT_OK);
    CHECK(coef[0] == doctest::Approx(8.09).epsilon(1e-2));

    double overall[5], pred[5];
    REQUIRE(mt_overall_summary(run.get(), overall) == MT_OK);
    REQUIRE(mt_prediction_summary(run.get(), pred) == MT_OK);
    CHECK(overall[0] == coef[0]);     // intercept-only model
    CHECK(pred[1] > overall[1]);      // prediction sd adds tau

    ApiString text(mt_report_text(run.get()));
    REQUIRE(text);
    CHECK(std::string(text.get()).find("heterogeneity tau") != std::string::npos);

    ApiString json(mt_report_json(run.get()));
    REQUIRE(json);
    CHECK(std::string(json.get()).rfind("{", 0) == 0);
    CHECK(std::string(json.get()).find("metatrace-report-v1") != std::string::npos);

    ApiString svg(mt_trace_svg(run.get(), 0));
    REQUIRE(svg);
    CHECK(std::string(svg.get()).rfind("<svg", 0) == 0);

    ApiString forest(mt_forest_svg(run.get()));
    REQUIRE(forest);
    CHECK(std::string(forest.get()).rfind("<svg", 0) == 0);

    ApiString csv(mt_trace_csv(run.get()));
    REQUIRE(csv);
    CHECK(std::string(csv.get()).rfind("tau,series,kind,mean,sd", 0) == 0);
}

TEST_CASE("failures set status and message without crashing") {
    CHECK(mt_dataset_bundled("nope") == nullptr);
    CHECK(mt_last_status() == MT_ERROR_INPUT);
    CHECK(std::string(mt_last_error()).find("unknown bundled") != std::string::npos);

    std::unique_ptr<mt_config, FreeConfig> cfg(mt_config_new());
    REQUIRE(cfg);
    CHECK(mt_config_set_prior(cfg.get(), "gamma:1") == MT_ERROR_INPUT);
    CHECK(std::string(mt_last_error()).find("prior") != std::string::npos);
    CHECK(mt_config_set_mode(cfg.get(), "quantum") == MT_ERROR_INPUT);
    CHECK(mt_config_set_estimator(cfg.get(), "mom") == MT_ERROR_INPUT);
    CHECK(mt_config_set_interval(cfg.get(), "hpd") == MT_ERROR_INPUT);
    CHECK(mt_config_add_contrast(cfg.get(), "nocolon") == MT_ERROR_INPUT);
    CHECK(mt_config_add_prediction(cfg.get(), "x") == MT_ERROR_INPUT);

    // two studies cannot support the improper uniform prior
    std::unique_ptr<mt_dataset, FreeDataset> tiny(
        mt_dataset_from_csv("label,y,se\na,0,1\nb,1,1\n"));
    REQUIRE(tiny);
    std::unique_ptr<mt_config, FreeConfig> plain(mt_config_new());
    CHECK(mt_run(tiny.get(), plain.get()) == nullptr);
    CHECK(mt_last_status() == MT_ERROR_INPUT);

    CHECK(mt_dataset_from_file("/no/such/file.csv") == nullptr);
    CHECK(mt_last_status() == MT_ERROR_IO);

    CHECK(mt_dataset_from_csv("garbage") == nullptr);
    CHECK(mt_last_status() == MT_ERROR_INPUT);

    // null handles are input errors, not crashes
    CHECK(mt_run(nullptr, plain.get()) == nullptr);
    CHECK(mt_last_status() == MT_ERROR_INPUT);
    CHECK(mt_report_text(nullptr) == nullptr);
    CHECK(mt_dataset_size(nullptr) == 0);
    double out[4];
    CHECK(mt_tau_summary(nullptr, out) == MT_ERROR_INPUT);
    std::unique_ptr<mt_dataset, FreeDataset> sat(mt_dataset_bundled("sat"));
    std::unique_ptr<mt_analysis, FreeAnalysis> run(mt_run(sat.get(), plain.get()));
    REQUIRE(run);
    double seven[7];
    CHECK(mt_study_summary(run.get(), 99, seven) == MT_ERROR_INPUT);
    CHECK(mt_last_status() == MT_ERROR_INPUT);

    // success clears the sticky state
    CHECK(mt_tau_summary(run.get(), out) == MT_OK);
    CHECK(mt_last_status() == MT_OK);
    CHECK(std::string(mt_last_error()).empty());

    mt_free(nullptr);  // must be a no-op
    mt_dataset_free(nullptr);
    mt_config_free(nullptr);
    mt_analysis_free(nullptr);
}

TEST_CASE("dataset round trip through CSV export") {
    ApiString csv(mt_bundled_csv("aspirin"));
    REQUIRE(csv);
    std::unique_ptr<mt_dataset, FreeDataset> back(mt_dataset_from_csv(csv.get()));
    REQUIRE(back);
    CHECK(mt_dataset_size(back.get()) == 6);

    // export stabilizes after one normalization pass
    ApiString again(mt_dataset_to_csv(back.get()));
    REQUIRE(again);
    std::unique_ptr<mt_dataset, FreeDataset> twice(mt_dataset_from_csv(again.get()));
    REQUIRE(twice);
    ApiString stable(mt_dataset_to_csv(twice.get()));
    REQUIRE(stable);
    CHECK(std::string(stable.get()) == std::string(again.get()));

    ApiString listing(mt_bundled_listing());
    REQUIRE(listing);
    CHECK(std::string(listing.get()).find("sat") != std::string::npos);
}
