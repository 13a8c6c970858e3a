#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "steinns/runner.hpp"

namespace {

int fail(const std::string& what, int code) {
    std::cerr << "error: " << what << "\n";
    return code;
}

void print_metrics(const steinns::evalsuite::RunMetrics& m) {
    std::printf("h1,h2,mmd,mode_coverage,accuracy\n");
    std::printf("%.17g,%.17g,%.17g,%d,%.17g\n", m.h1, m.h2, m.mmd, m.mode_coverage,
                m.accuracy);
}

void print_report(const steinns::evalsuite::MetricReport& r) {
    std::printf("runs,mse_h1,mse_h2,mean_mmd,se_mmd,mean_mode_coverage,mean_accuracy\n");
    std::printf("%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.runs, r.mse_h1, r.mse_h2,
                r.mean_mmd, r.se_mmd, r.mean_mode_coverage, r.mean_accuracy);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace steinns;

    CLI::App app{"Neural Stein sampler benchmark harness"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, samples_path, out_path;
    int count = 100;
    uint64_t seed = 0;
    double xmin = -20.0, xmax = 20.0, ymin = -20.0, ymax = 20.0;

    auto* run_cmd = app.add_subcommand("run", "Train and evaluate per the config file");
    run_cmd->add_option("config", config_path, "experiment config file")->required();

    auto* sample_cmd = app.add_subcommand("sample", "Draw samples from a trained checkpoint");
    sample_cmd->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
    sample_cmd->add_option("--count", count, "number of samples");
    sample_cmd->add_option("--seed", seed, "noise rng seed");
    sample_cmd->add_option("--out", out_path, "output samples file")->required();

    auto* eval_cmd = app.add_subcommand("eval", "Score a samples file against a config's target");
    eval_cmd->add_option("samples", samples_path, "samples file")->required();
    eval_cmd->add_option("config", config_path, "experiment config file")->required();

    auto* plot_cmd = app.add_subcommand("plot", "Render a 2-D samples file as an SVG scatter");
    plot_cmd->add_option("samples", samples_path, "samples file")->required();
    plot_cmd->add_option("--out", out_path, "output SVG file")->required();
    plot_cmd->add_option("--xmin", xmin, "viewport x minimum");
    plot_cmd->add_option("--xmax", xmax, "viewport x maximum");
    plot_cmd->add_option("--ymin", ymin, "viewport y minimum");
    plot_cmd->add_option("--ymax", ymax, "viewport y maximum");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed()) {
            config::ExperimentConfig cfg;
            try {
                cfg = config::parse_config_file(config_path);
            } catch (const std::exception& e) {
                return fail(e.what(), 2);
            }
            auto outcome = runner::run_experiment(cfg);
            print_report(outcome.aggregate);
            return 0;
        }
        if (sample_cmd->parsed()) {
            runner::sample_from_checkpoint(checkpoint_path, count, seed, out_path);
            return 0;
        }
        if (eval_cmd->parsed()) {
            config::ExperimentConfig cfg;
            try {
                cfg = config::parse_config_file(config_path);
            } catch (const std::exception& e) {
                return fail(e.what(), 2);
            }
            Matrix X = runner::read_samples_csv(samples_path);
            print_metrics(runner::eval_samples(X, cfg));
            return 0;
        }
        if (plot_cmd->parsed()) {
            runner::emit_scatter_svg(samples_path, out_path, xmin, xmax, ymin, ymax);
            return 0;
        }
    } catch (const std::exception& e) {
        return fail(e.what(), 1);
    }
    return 2;
}
