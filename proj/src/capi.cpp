#include "metatrace.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "analysis.hpp"
#include "csv.hpp"
#include "datasets.hpp"

using namespace metatrace;

struct mt_dataset {
    Dataset data;
};
struct mt_config {
    AnalysisConfig config;
};
struct mt_analysis {
    AnalysisResult result;
};

namespace {

thread_local std::string g_error;
thread_local mt_status g_status = MT_OK;

mt_status classify(const std::exception& e) {
    if (dynamic_cast<const input_error*>(&e)) return MT_ERROR_INPUT;
    if (dynamic_cast<const io_error*>(&e)) return MT_ERROR_IO;
    return MT_ERROR_MODEL;
}

// Runs f, translating exceptions into status codes + mt_last_error text.
template <typename F>
mt_status guarded(F&& f) {
    try {
        f();
        g_error.clear();
        g_status = MT_OK;
        return MT_OK;
    } catch (const std::exception& e) {
        g_error = e.what();
        g_status = classify(e);
        return g_status;
    } catch (...) {
        g_error = "unknown error";
        g_status = MT_ERROR_MODEL;
        return g_status;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) {
        g_error = "out of memory";
        g_status = MT_ERROR_MODEL;
        return nullptr;
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Produces a malloc'd string from a generator, or NULL with the error set.
template <typename F>
char* string_result(F&& f) {
    std::string text;
    mt_status s = guarded([&] { text = f(); });
    if (s != MT_OK) return nullptr;
    return dup_string(text);
}

bool require(const void* handle, const char* what) {
    if (handle) return true;
    g_error = std::string("null ") + what + " handle";
    g_status = MT_ERROR_INPUT;
    return false;
}

bool require_text(const char* text, const char* what) {
    if (text) return true;
    g_error = std::string("null ") + what;
    g_status = MT_ERROR_INPUT;
    return false;
}

void fill_summary(const MarginalSummary& m, double out[5]) {
    out[0] = m.mean;
    out[1] = m.sd;
    out[2] = m.median;
    out[3] = m.ci95.lo;
    out[4] = m.ci95.hi;
}

}  // namespace

extern "C" {

const char* mt_version(void) { return "0.1.0"; }

const char* mt_last_error(void) { return g_error.c_str(); }

mt_status mt_last_status(void) { return g_status; }

void mt_free(char* text) { std::free(text); }

mt_dataset* mt_dataset_from_csv(const char* text) {
    if (!require_text(text, "csv text")) return nullptr;
    mt_dataset* handle = nullptr;
    guarded([&] { handle = new mt_dataset{ingest_dataset(text)}; });
    return handle;
}

mt_dataset* mt_dataset_from_file(const char* path) {
    if (!require_text(path, "path")) return nullptr;
    mt_dataset* handle = nullptr;
    guarded([&] { handle = new mt_dataset{ingest_dataset(read_text_file(path))}; });
    return handle;
}

mt_dataset* mt_dataset_bundled(const char* name) {
    if (!require_text(name, "dataset name")) return nullptr;
    mt_dataset* handle = nullptr;
    guarded([&] { handle = new mt_dataset{bundled_dataset(name)}; });
    return handle;
}

void mt_dataset_free(mt_dataset* data) { delete data; }

size_t mt_dataset_size(const mt_dataset* data) { return data ? data->data.size() : 0; }

char* mt_dataset_to_csv(const mt_dataset* data) {
    if (!require(data, "dataset")) return nullptr;
    return string_result([&] { return write_dataset_csv(data->data); });
}

char* mt_bundled_listing(void) {
    return string_result([] { return bundled_listing(); });
}

char* mt_bundled_csv(const char* name) {
    if (!require_text(name, "dataset name")) return nullptr;
    return string_result([&] { return bundled_csv(name); });
}

mt_config* mt_config_new(void) {
    g_error.clear();
    g_status = MT_OK;
    return new mt_config{};
}

void mt_config_free(mt_config* config) { delete config; }

mt_status mt_config_set_mode(mt_config* config, const char* mode) {
    if (!require(config, "config") || !require_text(mode, "mode")) return MT_ERROR_INPUT;
    return guarded([&] { config->config.mode = parse_mode(mode); });
}

mt_status mt_config_set_prior(mt_config* config, const char* prior) {
    if (!require(config, "config") || !require_text(prior, "prior")) return MT_ERROR_INPUT;
    return guarded([&] { config->config.prior = PriorSpec::parse(prior); });
}

mt_status mt_config_set_estimator(mt_config* config, const char* name) {
    if (!require(config, "config") || !require_text(name, "estimator")) return MT_ERROR_INPUT;
    return guarded([&] { config->config.estimator = parse_estimator(name); });
}

mt_status mt_config_set_interval(mt_config* config, const char* method) {
    if (!require(config, "config") || !require_text(method, "interval method"))
        return MT_ERROR_INPUT;
    return guarded([&] { config->config.interval = parse_interval(method); });
}

mt_status mt_config_add_regressor(mt_config* config, const char* covariate) {
    if (!require(config, "config") || !require_text(covariate, "covariate name"))
        return MT_ERROR_INPUT;
    return guarded([&] { config->config.regression.emplace_back(covariate); });
}

mt_status mt_config_add_contrast(mt_config* config, const char* spec) {
    if (!require(config, "config") || !require_text(spec, "contrast spec")) return MT_ERROR_INPUT;
    return guarded(
        [&] { config->config.contrasts.push_back(AnalysisConfig::parse_contrast(spec)); });
}

mt_status mt_config_add_prediction(mt_config* config, const char* spec) {
    if (!require(config, "config") || !require_text(spec, "prediction spec"))
        return MT_ERROR_INPUT;
    return guarded(
        [&] { config->config.predictions.push_back(PredictionSpec::parse(spec)); });
}

mt_status mt_config_add_exclude(mt_config* config, const char* label) {
    if (!require(config, "config") || !require_text(label, "study label")) return MT_ERROR_INPUT;
    return guarded([&] { config->config.exclude.emplace_back(label); });
}

mt_status mt_config_set_grid(mt_config* config, size_t points, double tau_max) {
    if (!require(config, "config")) return MT_ERROR_INPUT;
    return guarded([&] {
        if (points < 2) throw input_error("grid needs at least 2 points");
        config->config.grid_points = points;
        config->config.tau_grid_max = tau_max;
    });
}

mt_analysis* mt_run(const mt_dataset* data, const mt_config* config) {
    if (!require(data, "dataset") || !require(config, "config")) return nullptr;
    mt_analysis* handle = nullptr;
    guarded([&] { handle = new mt_analysis{run_analysis(data->data, config->config)}; });
    return handle;
}

void mt_analysis_free(mt_analysis* analysis) { delete analysis; }

char* mt_report_text(const mt_analysis* analysis) {
    if (!require(analysis, "analysis")) return nullptr;
    return string_result([&] { return report_text(analysis->result); });
}

char* mt_report_json(const mt_analysis* analysis) {
    if (!require(analysis, "analysis")) return nullptr;
    return string_result([&] { return report_json(analysis->result); });
}

char* mt_trace_svg(const mt_analysis* analysis, int conditional_bands) {
    if (!require(analysis, "analysis")) return nullptr;
    return string_result([&] {
        TraceStyle style;
        style.conditional_bands = conditional_bands != 0;
        return render_trace_svg(analysis->result.trace, style);
    });
}

char* mt_forest_svg(const mt_analysis* analysis) {
    if (!require(analysis, "analysis")) return nullptr;
    return string_result([&] {
        const AnalysisResult& r = analysis->result;
        return render_forest_svg(r.data, r.studies, r.overall, r.new_study);
    });
}

char* mt_trace_csv(const mt_analysis* analysis) {
    if (!require(analysis, "analysis")) return nullptr;
    return string_result([&] { return export_trace_csv(analysis->result.trace); });
}

mt_status mt_tau_summary(const mt_analysis* analysis, double out[4]) {
    if (!require(analysis, "analysis") || !require(out, "output")) return MT_ERROR_INPUT;
    const TauSummaryOut& t = analysis->result.tau;
    out[0] = t.point;
    out[1] = t.mean;
    out[2] = t.ci95.lo;
    out[3] = t.ci95.hi;
    g_error.clear();
    g_status = MT_OK;
    return MT_OK;
}

size_t mt_n_studies(const mt_analysis* analysis) {
    return analysis ? analysis->result.data.size() : 0;
}

mt_status mt_study_summary(const mt_analysis* analysis, size_t index, double out[7]) {
    if (!require(analysis, "analysis") || !require(out, "output")) return MT_ERROR_INPUT;
    const AnalysisResult& r = analysis->result;
    if (index >= r.studies.size()) {
        g_error = "study index out of range";
        g_status = MT_ERROR_INPUT;
        return MT_ERROR_INPUT;
    }
    out[0] = r.data.y[index];
    out[1] = r.data.se[index];
    fill_summary(r.studies[index], out + 2);
    g_error.clear();
    g_status = MT_OK;
    return MT_OK;
}

size_t mt_n_coefficients(const mt_analysis* analysis) {
    return analysis ? analysis->result.coefficients.size() : 0;
}

mt_status mt_coefficient_summary(const mt_analysis* analysis, size_t index, double out[5]) {
    if (!require(analysis, "analysis") || !require(out, "output")) return MT_ERROR_INPUT;
    const AnalysisResult& r = analysis->result;
    if (index >= r.coefficients.size()) {
        g_error = "coefficient index out of range";
        g_status = MT_ERROR_INPUT;
        return MT_ERROR_INPUT;
    }
    fill_summary(r.coefficients[index], out);
    g_error.clear();
    g_status = MT_OK;
    return MT_OK;
}

mt_status mt_overall_summary(const mt_analysis* analysis, double out[5]) {
    if (!require(analysis, "analysis") || !require(out, "output")) return MT_ERROR_INPUT;
    fill_summary(analysis->result.overall, out);
    g_error.clear();
    g_status = MT_OK;
    return MT_OK;
}

mt_status mt_prediction_summary(const mt_analysis* analysis, double out[5]) {
    if (!require(analysis, "analysis") || !require(out, "output")) return MT_ERROR_INPUT;
    fill_summary(analysis->result.new_study, out);
    g_error.clear();
    g_status = MT_OK;
    return MT_OK;
}

}  // extern "C"
