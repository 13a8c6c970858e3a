#include "steinns/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "steinns/baselines.hpp"
#include "steinns/checkpoint.hpp"
#include "steinns/dataset.hpp"
#include "steinns/fisher.hpp"
#include "steinns/stein.hpp"

namespace steinns::runner {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename into " + path);
}

kernels::SteinKernel kernel_from_config(const config::ExperimentConfig& cfg) {
    if (cfg.kernel_variant == "rbf")
        return kernels::SteinKernel::rbf(cfg.rbf_bandwidth_sq > 0.0 ? cfg.rbf_bandwidth_sq
                                                                    : 1.0);
    return kernels::SteinKernel::imq(cfg.imq_c, cfg.imq_beta);
}

NoiseSpec noise_from_config(const config::ExperimentConfig& cfg, int target_dim) {
    NoiseSpec n = cfg.noise;
    if (n.dim == 0) n.dim = target_dim;
    return n;
}

std::vector<int> net_dims(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> dims{in};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    return dims;
}

Matrix gaussian_init(int n, int d, const std::vector<double>& mean, double sd, Rng& rng) {
    require(mean.empty() || static_cast<int>(mean.size()) == d,
            "baselines.init_mean must match the target dimension");
    std::normal_distribution<double> dist(0.0, sd);
    Matrix X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            X(i, j) = (mean.empty() ? 0.0 : mean[j]) + dist(rng);
    return X;
}

// Wall-clock timings stay in the in-memory trace but out of the report so
// that identical configs byte-reproduce every written file.
std::string trace_csv(const stein::TrainTrace& trace) {
    std::string s = "iteration,loss,aux_loss,bandwidth_sq\n";
    for (const auto& r : trace.records)
        s += std::to_string(r.iteration) + "," + fmt(r.loss) + "," + fmt(r.aux_loss) + "," +
             fmt(r.bandwidth_sq) + "\n";
    return s;
}

}  // namespace

std::unique_ptr<targets::Target> build_target(const config::ExperimentConfig& cfg) {
    const auto& t = cfg.target;
    if (t.variant == "isotropic-gaussian") {
        Vector mean = Vector::Zero(t.dim);
        for (size_t i = 0; i < t.mean.size() && i < static_cast<size_t>(t.dim); ++i)
            mean(i) = t.mean[i];
        return std::make_unique<targets::IsotropicGaussian>(mean, t.variance);
    }
    if (t.variant == "gaussian") {
        require(static_cast<int>(t.mean.size()) == t.dim, "gaussian target: mean size mismatch");
        require(static_cast<int>(t.covariance.size()) == t.dim * t.dim,
                "gaussian target: covariance size mismatch");
        Vector mean(t.dim);
        for (int i = 0; i < t.dim; ++i) mean(i) = t.mean[i];
        Matrix cov(t.dim, t.dim);
        for (int i = 0; i < t.dim; ++i)
            for (int j = 0; j < t.dim; ++j) cov(i, j) = t.covariance[i * t.dim + j];
        return std::make_unique<targets::Gaussian>(mean, cov);
    }
    if (t.variant == "ring")
        return std::make_unique<targets::Mixture>(
            targets::ring_of_gaussians(t.radius, t.component_sd, t.components));
    if (t.variant == "correlated-mixture")
        return std::make_unique<targets::Mixture>(targets::correlated_pair_mixture(t.rho));
    if (t.variant == "logistic") {
        auto ds = std::make_shared<targets::LabeledDataset>(
            t.dataset_path.empty()
                ? dataset::make_synthetic_logistic(t.synthetic_n, t.synthetic_p,
                                                   t.dataset_seed == 0 ? 42 : t.dataset_seed,
                                                   t.synthetic_label_noise)
                : dataset::load_dataset(t.dataset_path,
                                        t.dataset_seed == 0 ? 42 : t.dataset_seed));
        return std::make_unique<targets::LogisticPosterior>(ds);
    }
    throw std::runtime_error("unknown target variant: " + t.variant);
}

std::optional<std::pair<double, double>> target_truth(const config::ExperimentConfig& cfg) {
    const auto& t = cfg.target;
    if (t.dim != 2) return std::nullopt;
    if (t.variant == "isotropic-gaussian") {
        double m0 = t.mean.size() > 0 ? t.mean[0] : 0.0;
        double m1 = t.mean.size() > 1 ? t.mean[1] : 0.0;
        return std::make_pair(m0 + m1, 2.0 * std::sqrt(t.variance));
    }
    if (t.variant == "gaussian")
        return std::make_pair(t.mean[0] + t.mean[1],
                              std::sqrt(t.covariance[0]) + std::sqrt(t.covariance[3]));
    if (t.variant == "correlated-mixture") return std::make_pair(0.0, 2.0);
    if (t.variant == "ring") {
        // Component means average to zero; per-axis variance is
        // sd^2 + mean of squared mean-coordinates.
        auto mix = targets::ring_of_gaussians(t.radius, t.component_sd, t.components);
        auto means = mix.component_means();
        double h1 = 0.0;
        Vector m2 = Vector::Zero(2), m1 = Vector::Zero(2);
        for (const auto& m : means) {
            m1 += m;
            m2 += m.cwiseProduct(m);
        }
        m1 /= means.size();
        m2 /= means.size();
        h1 = m1(0) + m1(1);
        double sd2 = t.component_sd * t.component_sd;
        double h2 = std::sqrt(sd2 + m2(0) - m1(0) * m1(0)) +
                    std::sqrt(sd2 + m2(1) - m1(1) * m1(1));
        return std::make_pair(h1, h2);
    }
    return std::nullopt;
}

std::vector<Vector> mode_probes(const config::ExperimentConfig& cfg,
                                const targets::Target& target) {
    if (cfg.target.variant == "correlated-mixture") {
        Vector a(2), b(2);
        a << 2.0, 2.0;    // ridge along +rho
        b << 2.0, -2.0;   // ridge along -rho
        return {a, b};
    }
    if (const auto* mix = dynamic_cast<const targets::Mixture*>(&target))
        return mix->component_means();
    return {};
}

namespace {

evalsuite::RunMetrics eval_against(const Matrix& X, const config::ExperimentConfig& cfg,
                                   const targets::Target& target, uint64_t seed) {
    evalsuite::RunMetrics m;
    if (const auto* lp = dynamic_cast<const targets::LogisticPosterior*>(&target)) {
        m.accuracy = evalsuite::posterior_accuracy(X, lp->data());
        return m;
    }
    if (target.dim() == 2) {
        auto [h1, h2] = evalsuite::moment_stats(X);
        m.h1 = h1;
        m.h2 = h2;
        auto probes = mode_probes(cfg, target);
        if (!probes.empty())
            m.mode_coverage = evalsuite::mode_coverage(X, probes, cfg.resolved_mode_radius());
    }
    if (target.can_sample()) {
        Rng ref_rng(seed * 2654435761u + 97);
        Matrix ref = target.sample(cfg.eval_reference_samples, ref_rng);
        m.mmd = evalsuite::mmd_u_pooled_rbf(X, ref);
    }
    return m;
}

}  // namespace

evalsuite::RunMetrics eval_samples(const Matrix& X, const config::ExperimentConfig& cfg) {
    auto target = build_target(cfg);
    return eval_against(X, cfg, *target, cfg.seeds.front());
}

void write_samples_csv(const Matrix& X, const std::string& path) {
    std::string s;
    for (long j = 0; j < X.cols(); ++j) s += (j ? ",x" : "x") + std::to_string(j);
    s += "\n";
    for (long i = 0; i < X.rows(); ++i) {
        for (long j = 0; j < X.cols(); ++j) s += (j ? "," : "") + fmt(X(i, j));
        s += "\n";
    }
    write_file_atomic(path, s);
}

Matrix read_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open samples file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty samples file: " + path);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        rows.push_back(std::move(row));
    }
    long cols = rows.empty() ? 0 : static_cast<long>(rows.front().size());
    Matrix X(static_cast<long>(rows.size()), cols);
    for (long i = 0; i < X.rows(); ++i) {
        require(static_cast<long>(rows[i].size()) == cols, "ragged samples file: " + path);
        for (long j = 0; j < cols; ++j) X(i, j) = rows[i][j];
    }
    return X;
}

void write_metrics_csv(const evalsuite::RunMetrics& m, const config::ExperimentConfig& cfg,
                       const std::string& path) {
    std::string s;
    for (const auto& [k, v] : cfg.resolved()) s += "# " + k + " = " + v + "\n";
    s += "h1,h2,mmd,mode_coverage,accuracy\n";
    s += fmt(m.h1) + "," + fmt(m.h2) + "," + fmt(m.mmd) + "," +
         std::to_string(m.mode_coverage) + "," + fmt(m.accuracy) + "\n";
    write_file_atomic(path, s);
}

RunOutcome run_experiment(const config::ExperimentConfig& cfg) {
    auto target = build_target(cfg);
    const int d = target->dim();
    fs::create_directories(cfg.output_dir);

    {
        std::string s;
        for (const auto& [k, v] : cfg.resolved()) s += k + " = " + v + "\n";
        write_file_atomic((fs::path(cfg.output_dir) / "resolved.cfg").string(), s);
    }

    const bool logistic = cfg.target.variant == "logistic";
    RunOutcome outcome;
    for (uint64_t seed : cfg.seeds) {
        fs::path seed_dir = fs::path(cfg.output_dir) / ("seed" + std::to_string(seed));
        fs::create_directories(seed_dir);

        NoiseSpec noise = noise_from_config(cfg, d);
        Matrix samples;
        stein::TrainTrace trace;

        if (cfg.method == config::Method::KsdNs || cfg.method == config::Method::FisherNs) {
            auto generator =
                networks::mlp_new(net_dims(noise.dim, cfg.gen_hidden, d), cfg.activation, seed);
            auto gen_state =
                networks::rmsprop_new(generator, cfg.rmsprop_decay, cfg.rmsprop_epsilon);
            Rng rng(seed);

            if (cfg.method == config::Method::KsdNs) {
                stein::KsdTrainConfig kc;
                kc.iterations = cfg.iterations;
                kc.batch_size = cfg.batch_size;
                kc.learning_rate = cfg.learning_rate;
                kc.rmsprop_decay = cfg.rmsprop_decay;
                kc.rmsprop_epsilon = cfg.rmsprop_epsilon;
                kc.kernel = kernel_from_config(cfg);
                kc.adaptive_bandwidth =
                    cfg.kernel_variant == "rbf" && cfg.rbf_bandwidth_sq <= 0.0;
                kc.noise = noise;
                if (cfg.clip_enabled()) kc.clip_c = cfg.clip_c;
                kc.seed = seed;
                kc.data_minibatch = logistic ? cfg.data_minibatch : 0;
                trace = stein::train_ksd_ns(kc, *target, generator, &gen_state, &rng, 0);
            } else {
                // Theorem 4 wants a smooth discriminator; tanh regardless of
                // the generator activation.
                auto discriminator = networks::mlp_new(net_dims(d, cfg.disc_hidden, d),
                                                       networks::Activation::Tanh,
                                                       seed * 31 + 1000003);
                fisher::FisherTrainConfig fc;
                fc.lambda = cfg.lambda;
                fc.disc_steps = cfg.disc_steps;
                fc.disc_learning_rate = cfg.disc_learning_rate;
                fc.gen_learning_rate = cfg.learning_rate;
                fc.batch_size = cfg.batch_size;
                fc.iterations = cfg.iterations;
                fc.rmsprop_decay = cfg.rmsprop_decay;
                fc.rmsprop_epsilon = cfg.rmsprop_epsilon;
                fc.noise = noise;
                if (cfg.clip_enabled()) fc.clip_c = cfg.clip_c;
                fc.seed = seed;
                fc.data_minibatch = logistic ? cfg.data_minibatch : 0;
                trace = fisher::train_fisher_ns(fc, *target, generator, discriminator,
                                                &gen_state, &rng);
            }

            checkpoint::Checkpoint ckpt;
            ckpt.network = generator;
            ckpt.optimizer = gen_state;
            ckpt.iteration = static_cast<uint64_t>(cfg.iterations);
            ckpt.noise = noise;
            ckpt.rng_state = checkpoint::serialize_rng(rng);
            checkpoint::save_checkpoint(ckpt, (seed_dir / "checkpoint.bin").string());

            Matrix Z = noise.draw(cfg.batch_size, rng);
            samples = networks::mlp_forward(generator, Z);
        } else if (cfg.method == config::Method::Svgd) {
            Rng rng(seed);
            baselines::ParticleSet particles{gaussian_init(
                cfg.batch_size, d, cfg.baseline_init_mean, cfg.baseline_init_sd, rng)};
            for (int it = 1; it <= cfg.iterations; ++it) {
                baselines::svgd_step_adaptive(*target, particles, cfg.svgd_step_size);
                trace.records.push_back({it, 0.0, 0.0, 0.0, 0.0});
            }
            samples = particles.positions;
        } else {
            Rng rng(seed);
            int chains = cfg.sgld_chains > 0 ? cfg.sgld_chains : cfg.batch_size;
            Matrix X = gaussian_init(chains, d, cfg.baseline_init_mean,
                                     cfg.baseline_init_sd, rng);
            const auto* lp = dynamic_cast<const targets::LogisticPosterior*>(target.get());
            for (int t = 0; t < cfg.iterations; ++t) {
                for (int i = 0; i < chains; ++i) {
                    Vector x = X.row(i).transpose();
                    if (lp != nullptr && cfg.data_minibatch > 0) {
                        std::uniform_int_distribution<int> pick(0, lp->num_train() - 1);
                        std::vector<int> batch(cfg.data_minibatch);
                        for (auto& b : batch) b = pick(rng);
                        X.row(i) = baselines::sgld_step_with_score(
                                       x, lp->minibatch_score(x, batch), t, rng)
                                       .transpose();
                    } else {
                        X.row(i) = baselines::sgld_step(*target, x, t, rng).transpose();
                    }
                }
                trace.records.push_back({t + 1, 0.0, 0.0, baselines::sgld_step_size(t), 0.0});
            }
            samples = X;
        }

        write_samples_csv(samples, (seed_dir / "samples.csv").string());
        write_file_atomic((seed_dir / "trace.csv").string(), trace_csv(trace));
        evalsuite::RunMetrics m = eval_against(samples, cfg, *target, seed);
        write_metrics_csv(m, cfg, (seed_dir / "metrics.csv").string());
        outcome.per_seed.push_back(m);
    }

    auto truth = target_truth(cfg);
    outcome.aggregate = evalsuite::aggregate_runs(outcome.per_seed,
                                                  truth ? truth->first : 0.0,
                                                  truth ? truth->second : 0.0);
    {
        std::string s;
        for (const auto& [k, v] : cfg.resolved()) s += "# " + k + " = " + v + "\n";
        s += "seed,h1,h2,mmd,mode_coverage,accuracy\n";
        for (size_t i = 0; i < cfg.seeds.size(); ++i) {
            const auto& m = outcome.per_seed[i];
            s += std::to_string(cfg.seeds[i]) + "," + fmt(m.h1) + "," + fmt(m.h2) + "," +
                 fmt(m.mmd) + "," + std::to_string(m.mode_coverage) + "," + fmt(m.accuracy) +
                 "\n";
        }
        const auto& a = outcome.aggregate;
        s += "# aggregate over " + std::to_string(a.runs) + " runs\n";
        s += "# mse_h1 = " + fmt(a.mse_h1) + "\n";
        s += "# mse_h2 = " + fmt(a.mse_h2) + "\n";
        s += "# mean_mmd = " + fmt(a.mean_mmd) + "\n";
        s += "# se_mmd = " + fmt(a.se_mmd) + "\n";
        s += "# mean_mode_coverage = " + fmt(a.mean_mode_coverage) + "\n";
        if (a.mean_accuracy >= 0.0) s += "# mean_accuracy = " + fmt(a.mean_accuracy) + "\n";
        write_file_atomic((fs::path(cfg.output_dir) / "aggregate.csv").string(), s);
    }
    return outcome;
}

void sample_from_checkpoint(const std::string& checkpoint_path, int count, uint64_t seed,
                            const std::string& out_path) {
    require(count >= 0, "sample: count must be nonnegative");
    auto ckpt = checkpoint::load_checkpoint(checkpoint_path);
    Rng rng(seed);
    Matrix Z = count > 0 ? ckpt.noise.draw(count, rng)
                         : Matrix(0, ckpt.noise.dim);
    Matrix X = count > 0 ? networks::mlp_forward(ckpt.network, Z)
                         : Matrix(0, ckpt.network.output_dim());
    write_samples_csv(X, out_path);
}

void emit_scatter_svg(const std::string& samples_path, const std::string& out_path,
                      double xmin, double xmax, double ymin, double ymax) {
    require(xmax > xmin && ymax > ymin, "plot: empty viewport");
    Matrix X = read_samples_csv(samples_path);
    if (X.rows() > 0) require(X.cols() == 2, "plot: samples must be 2-D");

    const double W = 600.0, H = 600.0;
    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
         "viewBox=\"0 0 600 600\">\n";
    s += "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
    for (long i = 0; i < X.rows(); ++i) {
        double px = (X(i, 0) - xmin) / (xmax - xmin) * W;
        double py = H - (X(i, 1) - ymin) / (ymax - ymin) * H;
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2\" fill=\"green\" "
                      "fill-opacity=\"0.5\"/>\n",
                      px, py);
        s += buf;
    }
    s += "</svg>\n";
    write_file_atomic(out_path, s);
}

}  // namespace steinns::runner
