#pragma once

#include <map>
#include <string>
#include <vector>

#include "steinns/networks.hpp"
#include "steinns/noise.hpp"

namespace steinns::config {

enum class Method { KsdNs, FisherNs, Svgd, Sgld };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct TargetSpec {
    std::string variant;  // isotropic-gaussian | gaussian | ring | correlated-mixture | logistic
    int dim = 1;
    std::vector<double> mean;
    double variance = 1.0;
    std::vector<double> covariance;  // row-major dim*dim
    double radius = 15.0;
    double component_sd = 1.0;
    int components = 8;
    double rho = 0.8;
    std::string dataset_path;  // logistic; empty selects the synthetic set
    int synthetic_n = 5000;
    int synthetic_p = 54;
    double synthetic_label_noise = 0.1;
    uint64_t dataset_seed = 0;
};

struct ExperimentConfig {
    Method method = Method::KsdNs;
    TargetSpec target;

    std::vector<int> gen_hidden{200, 200};
    std::vector<int> disc_hidden{200, 200};
    networks::Activation activation = networks::Activation::Tanh;

    std::string kernel_variant = "imq";  // imq | rbf
    double imq_c = 1.0;
    double imq_beta = -0.5;
    double rbf_bandwidth_sq = 0.0;  // 0 selects the per-batch median heuristic

    double learning_rate = 0.001;
    double rmsprop_decay = 0.9;
    double rmsprop_epsilon = 1e-8;

    int iterations = 10000;
    int batch_size = 100;

    double lambda = 0.5;
    int disc_steps = 5;
    double disc_learning_rate = 0.001;

    std::string clip_mode = "auto";  // auto | on | off
    double clip_c = 10.0;

    NoiseSpec noise;  // dim 0 resolves to the target dim

    double svgd_step_size = 0.3;
    double baseline_init_sd = 1.0;
    std::vector<double> baseline_init_mean;  // empty resolves to the origin
    int sgld_chains = 0;  // 0 resolves to batch_size

    int data_minibatch = 100;  // logistic targets

    std::vector<uint64_t> seeds{1};
    std::string output_dir = "out";
    int eval_reference_samples = 1000;
    double mode_radius = 0.0;  // 0 resolves per target variant

    // True when clipping applies after mode resolution (auto: rbf only).
    bool clip_enabled() const;
    double resolved_mode_radius() const;
    // Every effective setting, defaults materialized, in a fixed order.
    std::vector<std::pair<std::string, std::string>> resolved() const;
};

// Parses the sectioned key=value config file. Throws std::runtime_error with
// a field-level message on unknown keys, bad values, or missing requirements.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

}  // namespace steinns::config
