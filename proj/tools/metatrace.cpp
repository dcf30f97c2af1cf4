// Command-line front end; talks to the library through the C API only.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "metatrace.h"

namespace fs = std::filesystem;

namespace {

int exit_code(mt_status status) {
    int code = static_cast<int>(status);
    return code == 0 ? 3 : code;  // a failure without a code is a model error
}

int fail_current() {
    std::fprintf(stderr, "metatrace: error: %s\n", mt_last_error());
    return exit_code(mt_last_status());
}

int fail_io(const std::string& message) {
    std::fprintf(stderr, "metatrace: error: %s\n", message.c_str());
    return 4;
}

struct FreeString {
    void operator()(char* p) const { mt_free(p); }
};
using ApiString = std::unique_ptr<char, FreeString>;

// Writes every file into a staging directory first and renames into place
// only after all writes succeeded, so a failing run never leaves partial
// outputs behind.
int write_staged(const std::vector<std::pair<std::string, std::string>>& files,
                 const fs::path& outdir) {
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec && !fs::is_directory(outdir))
        return fail_io("cannot create output directory '" + outdir.string() +
                       "': " + ec.message());

    fs::path stage = outdir / (".stage-" + std::to_string(::getpid()));
    fs::create_directories(stage, ec);
    if (ec && !fs::is_directory(stage))
        return fail_io("cannot create staging directory '" + stage.string() +
                       "': " + ec.message());

    auto cleanup = [&] { fs::remove_all(stage, ec); };
    for (const auto& [name, content] : files) {
        std::ofstream out(stage / name, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            cleanup();
            return fail_io("cannot write '" + (stage / name).string() + "'");
        }
    }
    for (const auto& [name, content] : files) {
        fs::rename(stage / name, outdir / name, ec);
        if (ec) {
            cleanup();
            return fail_io("cannot move '" + name + "' into '" + outdir.string() +
                           "': " + ec.message());
        }
    }
    cleanup();
    return 0;
}

struct RunOptions {
    std::string data_path;
    std::string dataset_name;
    std::string mode = "bayes";
    std::string prior = "uniform";
    std::string estimator = "reml";
    std::vector<std::string> regression;
    std::vector<std::string> contrasts;
    std::vector<std::string> predictions;
    std::vector<std::string> excludes;
    std::string interval = "shortest";
    std::size_t grid_points = 201;
    double tau_max = 0.0;
    bool conditional_bands = false;
    std::string outdir = ".";
    std::vector<std::string> outputs{"report", "trace", "forest", "csv"};
};

int run_command(const RunOptions& opt) {
    if (opt.data_path.empty() == opt.dataset_name.empty()) {
        std::fprintf(stderr,
                     "metatrace: error: pass exactly one of --data <file> or --dataset <name>\n");
        return 2;
    }
    for (const auto& o : opt.outputs)
        if (o != "report" && o != "trace" && o != "forest" && o != "csv") {
            std::fprintf(stderr,
                         "metatrace: error: unknown output '%s' (choose from: report, trace, "
                         "forest, csv)\n",
                         o.c_str());
            return 2;
        }

    std::unique_ptr<mt_dataset, decltype(&mt_dataset_free)> data(
        opt.data_path.empty() ? mt_dataset_bundled(opt.dataset_name.c_str())
                              : mt_dataset_from_file(opt.data_path.c_str()),
        mt_dataset_free);
    if (!data) return fail_current();

    std::unique_ptr<mt_config, decltype(&mt_config_free)> config(mt_config_new(),
                                                                 mt_config_free);
    if (!config) return fail_current();

    if (mt_config_set_mode(config.get(), opt.mode.c_str()) != MT_OK) return fail_current();
    if (mt_config_set_prior(config.get(), opt.prior.c_str()) != MT_OK) return fail_current();
    if (mt_config_set_estimator(config.get(), opt.estimator.c_str()) != MT_OK)
        return fail_current();
    if (mt_config_set_interval(config.get(), opt.interval.c_str()) != MT_OK)
        return fail_current();
    for (const auto& name : opt.regression)
        if (mt_config_add_regressor(config.get(), name.c_str()) != MT_OK) return fail_current();
    for (const auto& spec : opt.contrasts)
        if (mt_config_add_contrast(config.get(), spec.c_str()) != MT_OK) return fail_current();
    for (const auto& spec : opt.predictions)
        if (mt_config_add_prediction(config.get(), spec.c_str()) != MT_OK) return fail_current();
    for (const auto& label : opt.excludes)
        if (mt_config_add_exclude(config.get(), label.c_str()) != MT_OK) return fail_current();
    if (mt_config_set_grid(config.get(), opt.grid_points, opt.tau_max) != MT_OK)
        return fail_current();

    std::unique_ptr<mt_analysis, decltype(&mt_analysis_free)> analysis(
        mt_run(data.get(), config.get()), mt_analysis_free);
    if (!analysis) return fail_current();

    ApiString text(mt_report_text(analysis.get()));
    if (!text) return fail_current();

    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& o : opt.outputs) {
        if (o == "report") {
            ApiString json(mt_report_json(analysis.get()));
            if (!json) return fail_current();
            files.emplace_back("report.txt", text.get());
            files.emplace_back("report.json", json.get());
        } else if (o == "trace") {
            ApiString svg(mt_trace_svg(analysis.get(), opt.conditional_bands ? 1 : 0));
            if (!svg) return fail_current();
            files.emplace_back("trace.svg", svg.get());
        } else if (o == "forest") {
            ApiString svg(mt_forest_svg(analysis.get()));
            if (!svg) return fail_current();
            files.emplace_back("forest.svg", svg.get());
        } else if (o == "csv") {
            ApiString csv(mt_trace_csv(analysis.get()));
            if (!csv) return fail_current();
            files.emplace_back("trace.csv", csv.get());
        }
    }

    if (int rc = write_staged(files, opt.outdir); rc != 0) return rc;
    for (const auto& [name, content] : files)
        std::fprintf(stderr, "wrote %s\n", (fs::path(opt.outdir) / name).string().c_str());
    std::fputs(text.get(), stdout);
    return 0;
}

int list_command() {
    ApiString listing(mt_bundled_listing());
    if (!listing) return fail_current();
    std::fputs(listing.get(), stdout);
    return 0;
}

int export_command(const std::string& name, const std::string& path) {
    ApiString csv(mt_bundled_csv(name.c_str()));
    if (!csv) return fail_current();

    fs::path target(path);
    fs::path dir = target.parent_path();
    if (dir.empty()) dir = ".";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec && !fs::is_directory(dir))
        return fail_io("cannot create directory '" + dir.string() + "': " + ec.message());

    fs::path stage = target;
    stage += ".stage-" + std::to_string(::getpid());
    {
        std::ofstream out(stage, std::ios::binary | std::ios::trunc);
        out.write(csv.get(), static_cast<std::streamsize>(std::string(csv.get()).size()));
        out.flush();
        if (!out) {
            fs::remove(stage, ec);
            return fail_io("cannot write '" + stage.string() + "'");
        }
    }
    fs::rename(stage, target, ec);
    if (ec) {
        fs::remove(stage, ec);
        return fail_io("cannot move export into place at '" + target.string() + "'");
    }
    std::fprintf(stderr, "wrote %s\n", target.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"random-effects meta-analysis with trace plots"};
    app.set_version_flag("--version", mt_version());
    app.require_subcommand(1);

    RunOptions opt;
    CLI::App* run = app.add_subcommand("run", "analyse a dataset and write reports and plots");
    run->add_option("--data", opt.data_path, "CSV file with header label,y,se[,covariate...]");
    run->add_option("--dataset", opt.dataset_name, "bundled dataset name (see: datasets list)");
    run->add_option("--mode", opt.mode, "bayes or freq")->capture_default_str();
    run->add_option("--prior", opt.prior,
                    "heterogeneity prior: uniform, halfnormal:<scale>, dumouchel[:<s0>]")
        ->capture_default_str();
    run->add_option("--estimator", opt.estimator, "frequentist tau estimator: reml, ml, dl")
        ->capture_default_str();
    run->add_option("--regression", opt.regression,
                    "comma-separated covariate columns for meta-regression")
        ->delimiter(',');
    run->add_option("--contrast", opt.contrasts,
                    "extra coefficient contrast \"label:c1,c2,...\" (repeatable)");
    run->add_option("--predict-at", opt.predictions,
                    "new-study covariate profile \"name=value[,name=value]\" (repeatable)");
    run->add_option("--exclude", opt.excludes, "study label to leave out (repeatable)");
    run->add_option("--interval", opt.interval, "credible interval style: shortest or central")
        ->capture_default_str();
    run->add_option("--grid-points", opt.grid_points, "trace grid size (>= 21)")
        ->capture_default_str();
    run->add_option("--tau-max", opt.tau_max, "upper end of the tau grid (default: automatic)");
    run->add_flag("--conditional-bands", opt.conditional_bands,
                  "draw dotted +-1.96 sd bands around each trace");
    run->add_option("--out", opt.outdir, "output directory")->capture_default_str();
    run->add_option("--outputs", opt.outputs,
                    "subset of report,trace,forest,csv to write")
        ->delimiter(',');

    CLI::App* datasets = app.add_subcommand("datasets", "inspect the bundled datasets");
    datasets->require_subcommand(1);
    datasets->add_subcommand("list", "list bundled datasets");
    std::string export_name, export_path;
    CLI::App* exp = datasets->add_subcommand("export", "write a bundled dataset as CSV");
    exp->add_option("name", export_name, "bundled dataset name")->required();
    exp->add_option("path", export_path, "destination file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::fprintf(stderr, "metatrace: error: %s\n", e.what());
        return 2;
    }

    if (run->parsed()) return run_command(opt);
    if (datasets->parsed()) {
        if (datasets->get_subcommand("list")->parsed()) return list_command();
        return export_command(export_name, export_path);
    }
    return 2;
}
