#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "steinns/config.hpp"
#include "steinns/evalsuite.hpp"
#include "steinns/targets.hpp"

namespace steinns::runner {

// Target construction for a parsed config; the logistic variant also loads
// (or synthesizes) its dataset, reachable through the returned object.
std::unique_ptr<targets::Target> build_target(const config::ExperimentConfig& cfg);

struct RunOutcome {
    std::vector<evalsuite::RunMetrics> per_seed;
    evalsuite::MetricReport aggregate;
};

// One training/evaluation run per seed. Per seed writes checkpoint.bin (for
// the neural methods), trace.csv, samples.csv and metrics.csv under
// <output_dir>/seed<k>/; an aggregate.csv and resolved.cfg go into
// <output_dir>. All writes are write-temp-then-rename.
RunOutcome run_experiment(const config::ExperimentConfig& cfg);

// Load a generator checkpoint, draw `count` noise vectors with a fresh rng
// seeded by `seed`, write the forward outputs. No training occurs.
void sample_from_checkpoint(const std::string& checkpoint_path, int count, uint64_t seed,
                            const std::string& out_path);

// Metrics of a given sample matrix against the config's target.
evalsuite::RunMetrics eval_samples(const Matrix& X, const config::ExperimentConfig& cfg);

// Fixed-viewport scatter plot of a 2-D samples file, one circle per sample.
void emit_scatter_svg(const std::string& samples_path, const std::string& out_path,
                      double xmin, double xmax, double ymin, double ymax);

Matrix read_samples_csv(const std::string& path);
void write_samples_csv(const Matrix& X, const std::string& path);
void write_metrics_csv(const evalsuite::RunMetrics& m, const config::ExperimentConfig& cfg,
                       const std::string& path);

std::vector<Vector> mode_probes(const config::ExperimentConfig& cfg,
                                const targets::Target& target);
// Analytic (h1, h2) of the target where available, else nullopt.
std::optional<std::pair<double, double>> target_truth(const config::ExperimentConfig& cfg);

}  // namespace steinns::runner
