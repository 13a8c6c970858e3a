#include "steinns/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace steinns::config {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct KeyValues {
    std::map<std::string, std::string> values;
    std::string origin;
    // Every key a parser accessor touches; anything left over is unknown.
    mutable std::set<std::string> seen;

    bool has(const std::string& key) const {
        seen.insert(key);
        return values.count(key) > 0;
    }

    std::string get(const std::string& key, const std::string& fallback) const {
        seen.insert(key);
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) {
        seen.insert(key);
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        try {
            size_t pos;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error(origin + ": field '" + key + "' is not a number: '" +
                                     it->second + "'");
        }
    }

    int get_int(const std::string& key, int fallback) {
        double v = get_double(key, fallback);
        int iv = static_cast<int>(v);
        if (v != iv)
            throw std::runtime_error(origin + ": field '" + key + "' must be an integer");
        return iv;
    }

    std::vector<double> get_doubles(const std::string& key) {
        seen.insert(key);
        std::vector<double> out;
        auto it = values.find(key);
        if (it == values.end()) return out;
        std::string s = it->second;
        for (char& ch : s)
            if (ch == ',') ch = ' ';
        std::istringstream ss(s);
        std::string tok;
        while (ss >> tok) {
            try {
                out.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw std::runtime_error(origin + ": field '" + key + "' has bad entry '" +
                                         tok + "'");
            }
        }
        return out;
    }

    std::vector<int> get_ints(const std::string& key, std::vector<int> fallback) {
        if (!has(key)) return fallback;
        std::vector<int> out;
        for (double v : get_doubles(key)) out.push_back(static_cast<int>(v));
        return out;
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::KsdNs: return "ksd-ns";
        case Method::FisherNs: return "fisher-ns";
        case Method::Svgd: return "svgd";
        case Method::Sgld: return "sgld";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "ksd-ns") return Method::KsdNs;
    if (s == "fisher-ns") return Method::FisherNs;
    if (s == "svgd") return Method::Svgd;
    if (s == "sgld") return Method::Sgld;
    throw std::runtime_error("unknown method: '" + s + "'");
}

bool ExperimentConfig::clip_enabled() const {
    if (clip_mode == "on") return true;
    if (clip_mode == "off") return false;
    return kernel_variant == "rbf" && (method == Method::KsdNs || method == Method::FisherNs);
}

double ExperimentConfig::resolved_mode_radius() const {
    if (mode_radius > 0.0) return mode_radius;
    // Ridge probes of the correlated mixture sit close together; everything
    // else uses the ring-scale default.
    return target.variant == "correlated-mixture" ? 1.5 : 3.0;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved() const {
    std::vector<std::pair<std::string, std::string>> out;
    auto put = [&](const std::string& k, const std::string& v) { out.emplace_back(k, v); };
    put("experiment.method", to_string(method));
    {
        std::string s;
        for (size_t i = 0; i < seeds.size(); ++i)
            s += (i ? "," : "") + std::to_string(seeds[i]);
        put("experiment.seeds", s);
    }
    put("experiment.iterations", std::to_string(iterations));
    put("experiment.batch_size", std::to_string(batch_size));
    // output_dir is deliberately omitted: reports describe the experiment,
    // and the same run written elsewhere must byte-reproduce them.
    put("target.variant", target.variant);
    put("target.dim", std::to_string(target.dim));
    if (target.variant == "ring") {
        put("target.radius", fmt(target.radius));
        put("target.component_sd", fmt(target.component_sd));
        put("target.components", std::to_string(target.components));
    }
    if (target.variant == "correlated-mixture") put("target.rho", fmt(target.rho));
    if (target.variant == "isotropic-gaussian") put("target.variance", fmt(target.variance));
    if (target.variant == "logistic") {
        put("target.dataset_path", target.dataset_path.empty() ? "(synthetic)"
                                                               : target.dataset_path);
        put("target.synthetic_n", std::to_string(target.synthetic_n));
        put("target.synthetic_p", std::to_string(target.synthetic_p));
        put("target.synthetic_label_noise", fmt(target.synthetic_label_noise));
        put("target.data_minibatch", std::to_string(data_minibatch));
    }
    put("generator.hidden", join_ints(gen_hidden));
    put("generator.activation", networks::to_string(activation));
    if (method == Method::FisherNs) {
        put("discriminator.hidden", join_ints(disc_hidden));
        put("fisher.lambda", fmt(lambda));
        put("fisher.disc_steps", std::to_string(disc_steps));
        put("fisher.disc_learning_rate", fmt(disc_learning_rate));
    }
    if (method == Method::KsdNs) {
        put("kernel.variant", kernel_variant);
        if (kernel_variant == "imq") {
            put("kernel.c", fmt(imq_c));
            put("kernel.beta", fmt(imq_beta));
        } else {
            put("kernel.bandwidth_sq",
                rbf_bandwidth_sq > 0.0 ? fmt(rbf_bandwidth_sq) : "median-heuristic");
        }
    }
    put("optimizer.learning_rate", fmt(learning_rate));
    put("optimizer.rmsprop_decay", fmt(rmsprop_decay));
    put("optimizer.rmsprop_epsilon", fmt(rmsprop_epsilon));
    put("clip.enabled", clip_enabled() ? "true" : "false");
    if (clip_enabled()) put("clip.c", fmt(clip_c));
    put("noise.kind", noise.kind == NoiseKind::Uniform ? "uniform" : "gaussian");
    if (noise.kind == NoiseKind::Uniform) {
        put("noise.low", fmt(noise.low));
        put("noise.high", fmt(noise.high));
    } else {
        put("noise.stddev", fmt(noise.stddev));
    }
    put("noise.dim", std::to_string(noise.dim == 0 ? target.dim : noise.dim));
    if (method == Method::Svgd) put("svgd.step_size", fmt(svgd_step_size));
    if (method == Method::Svgd || method == Method::Sgld) {
        put("baselines.init_sd", fmt(baseline_init_sd));
        std::string mean;
        if (baseline_init_mean.empty()) {
            mean = "(origin)";
        } else {
            for (size_t i = 0; i < baseline_init_mean.size(); ++i)
                mean += (i ? "," : "") + fmt(baseline_init_mean[i]);
        }
        put("baselines.init_mean", mean);
    }
    if (method == Method::Sgld)
        put("sgld.chains", std::to_string(sgld_chains == 0 ? batch_size : sgld_chains));
    put("eval.reference_samples", std::to_string(eval_reference_samples));
    put("eval.mode_radius", fmt(resolved_mode_radius()));
    return out;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    KeyValues kv;
    kv.origin = origin;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ": line " + std::to_string(line_no) +
                                     " is not 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(origin + ": empty key at line " + std::to_string(line_no));
        std::string full = section.empty() ? key : section + "." + key;
        kv.values[full] = value;
    }

    ExperimentConfig c;
    if (!kv.has("experiment.method"))
        throw std::runtime_error(origin + ": missing required field 'experiment.method'");
    c.method = method_from_string(kv.get("experiment.method", ""));
    c.iterations = kv.get_int("experiment.iterations", c.iterations);
    c.batch_size = kv.get_int("experiment.batch_size", c.batch_size);
    c.output_dir = kv.get("experiment.output_dir", c.output_dir);
    if (kv.has("experiment.seeds")) {
        c.seeds.clear();
        for (double v : kv.get_doubles("experiment.seeds"))
            c.seeds.push_back(static_cast<uint64_t>(v));
    }
    if (c.seeds.empty())
        throw std::runtime_error(origin + ": field 'experiment.seeds' must be nonempty");
    if (c.iterations < 0)
        throw std::runtime_error(origin + ": field 'experiment.iterations' must be >= 0");
    if (c.batch_size < 1)
        throw std::runtime_error(origin + ": field 'experiment.batch_size' must be >= 1");

    if (!kv.has("target.variant"))
        throw std::runtime_error(origin + ": missing required field 'target.variant'");
    c.target.variant = kv.get("target.variant", "");
    c.target.dim = kv.get_int("target.dim", 0);
    c.target.mean = kv.get_doubles("target.mean");
    c.target.variance = kv.get_double("target.variance", c.target.variance);
    c.target.covariance = kv.get_doubles("target.covariance");
    c.target.radius = kv.get_double("target.radius", c.target.radius);
    c.target.component_sd = kv.get_double("target.component_sd", c.target.component_sd);
    c.target.components = kv.get_int("target.components", c.target.components);
    c.target.rho = kv.get_double("target.rho", c.target.rho);
    c.target.dataset_path = kv.get("target.dataset_path", "");
    c.target.synthetic_n = kv.get_int("target.synthetic_n", c.target.synthetic_n);
    c.target.synthetic_p = kv.get_int("target.synthetic_p", c.target.synthetic_p);
    c.target.synthetic_label_noise =
        kv.get_double("target.synthetic_label_noise", c.target.synthetic_label_noise);
    c.target.dataset_seed = static_cast<uint64_t>(kv.get_int("target.dataset_seed", 0));

    const std::string& tv = c.target.variant;
    if (tv == "isotropic-gaussian" || tv == "gaussian") {
        if (c.target.dim == 0 && !c.target.mean.empty())
            c.target.dim = static_cast<int>(c.target.mean.size());
        if (c.target.dim <= 0)
            throw std::runtime_error(origin + ": field 'target.dim' required for " + tv);
    } else if (tv == "ring" || tv == "correlated-mixture") {
        c.target.dim = 2;
    } else if (tv == "logistic") {
        c.target.dim = 0;  // resolved from the dataset
    } else {
        throw std::runtime_error(origin + ": unknown target.variant '" + tv + "'");
    }

    c.gen_hidden = kv.get_ints("generator.hidden", c.gen_hidden);
    c.disc_hidden = kv.get_ints("discriminator.hidden", c.gen_hidden);
    if (kv.has("generator.activation"))
        c.activation = networks::activation_from_string(kv.get("generator.activation", ""));

    c.kernel_variant = kv.get("kernel.variant", c.kernel_variant);
    if (c.kernel_variant != "imq" && c.kernel_variant != "rbf")
        throw std::runtime_error(origin + ": unknown kernel.variant '" + c.kernel_variant + "'");
    c.imq_c = kv.get_double("kernel.c", c.imq_c);
    c.imq_beta = kv.get_double("kernel.beta", c.imq_beta);
    c.rbf_bandwidth_sq = kv.get_double("kernel.bandwidth_sq", c.rbf_bandwidth_sq);
    if (c.imq_c <= 0.0) throw std::runtime_error(origin + ": field 'kernel.c' must be > 0");
    if (c.imq_beta <= -1.0 || c.imq_beta >= 0.0)
        throw std::runtime_error(origin + ": field 'kernel.beta' must be in (-1,0)");

    c.learning_rate = kv.get_double("optimizer.learning_rate", c.learning_rate);
    c.rmsprop_decay = kv.get_double("optimizer.rmsprop_decay", c.rmsprop_decay);
    c.rmsprop_epsilon = kv.get_double("optimizer.rmsprop_epsilon", c.rmsprop_epsilon);
    if (c.learning_rate <= 0.0)
        throw std::runtime_error(origin + ": field 'optimizer.learning_rate' must be > 0");

    c.lambda = kv.get_double("fisher.lambda", c.lambda);
    c.disc_steps = kv.get_int("fisher.disc_steps", c.disc_steps);
    c.disc_learning_rate = kv.get_double("fisher.disc_learning_rate", c.learning_rate);
    if (c.method == Method::FisherNs) {
        if (c.lambda <= 0.0)
            throw std::runtime_error(origin + ": field 'fisher.lambda' must be > 0");
        if (c.disc_steps < 1)
            throw std::runtime_error(origin + ": field 'fisher.disc_steps' must be >= 1");
    }

    c.clip_mode = kv.get("clip.mode", c.clip_mode);
    if (c.clip_mode != "auto" && c.clip_mode != "on" && c.clip_mode != "off")
        throw std::runtime_error(origin + ": field 'clip.mode' must be auto|on|off");
    c.clip_c = kv.get_double("clip.c", c.clip_c);
    if (c.clip_c <= 0.0) throw std::runtime_error(origin + ": field 'clip.c' must be > 0");

    std::string nk = kv.get("noise.kind", "uniform");
    if (nk == "uniform")
        c.noise.kind = NoiseKind::Uniform;
    else if (nk == "gaussian")
        c.noise.kind = NoiseKind::Gaussian;
    else
        throw std::runtime_error(origin + ": field 'noise.kind' must be uniform|gaussian");
    c.noise.low = kv.get_double("noise.low", c.noise.low);
    c.noise.high = kv.get_double("noise.high", c.noise.high);
    c.noise.stddev = kv.get_double("noise.stddev", c.noise.stddev);
    c.noise.dim = kv.get_int("noise.dim", 0);

    c.svgd_step_size = kv.get_double("svgd.step_size", c.svgd_step_size);
    c.baseline_init_sd = kv.get_double("baselines.init_sd", c.baseline_init_sd);
    c.baseline_init_mean = kv.get_doubles("baselines.init_mean");
    c.sgld_chains = kv.get_int("sgld.chains", 0);
    c.data_minibatch = kv.get_int("target.data_minibatch", c.data_minibatch);

    c.eval_reference_samples = kv.get_int("eval.reference_samples", c.eval_reference_samples);
    c.mode_radius = kv.get_double("eval.mode_radius", c.mode_radius);

    for (const auto& [key, value] : kv.values)
        if (kv.seen.count(key) == 0)
            throw std::runtime_error(origin + ": unknown field '" + key + "'");
    return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config file not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

}  // namespace steinns::config
