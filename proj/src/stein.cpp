#include "steinns/stein.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace steinns::stein {

ScoreModel score_model(const targets::Target& target) {
    ScoreModel m;
    m.dim = target.dim();
    m.score = [&target](const Vector& x) { return target.score(x); };
    m.jacobian = [&target](const Vector& x) { return target.score_jacobian(x); };
    return m;
}

double u_q(const targets::Target& target, const kernels::SteinKernel& kernel,
           const Vector& x, const Vector& y) {
    require(x.size() == target.dim() && y.size() == target.dim(), "u_q: dim mismatch");
    Vector sx = target.score(x), sy = target.score(y);
    double k = kernel.eval(x, y);
    Vector gx = kernel.grad_x(x, y);
    // Swapping the arguments negates gx bitwise and exchanges the two cross
    // terms; grouping them keeps the result exactly symmetric in (x, y).
    return sx.dot(sy) * k + (sy.dot(gx) - sx.dot(gx)) + kernel.trace_xy(x, y);
}

Vector u_q_grad_x(const targets::Target& target, const kernels::SteinKernel& kernel,
                  const Vector& x, const Vector& y) {
    Vector sx = target.score(x), sy = target.score(y);
    Matrix Jx = target.score_jacobian(x);
    double k = kernel.eval(x, y);
    Vector gx = kernel.grad_x(x, y);
    Matrix M;
    Vector dtrace;
    kernel.grads_of_uq_terms(x, y, M, dtrace);
    return Jx * (k * sy - gx) + sx.dot(sy) * gx + M * (sx - sy) + dtrace;
}

KsdBatch ksd_batch(const Matrix& X, const Matrix& S, const std::vector<Matrix>* J,
                   const kernels::SteinKernel& kernel, bool want_grad) {
    const long n = X.rows();
    const long d = X.cols();
    require(S.rows() == n && S.cols() == d, "ksd_batch: score shape mismatch");
    if (want_grad) require(J != nullptr && static_cast<long>(J->size()) == n,
                           "ksd_batch: jacobians required for gradients");

    KsdBatch out;
    // Every per-pair quantity below is bitwise independent of the pair's
    // visiting orientation: flipping (i, j) negates diff, gx, and dtrace
    // exactly, and the expressions are grouped so those sign flips cancel.
    // Reductions then sum value-sorted term lists, so the estimates and the
    // gradient rows are exactly invariant under row permutations of X.
    std::vector<double> pair_terms;
    pair_terms.reserve(static_cast<size_t>(n) * (n - 1) / 2);
    std::vector<std::vector<double>> grad_terms;
    if (want_grad) {
        out.grad = Matrix::Zero(n, d);
        grad_terms.assign(static_cast<size_t>(n) * d, {});
        for (auto& t : grad_terms) t.reserve(n - 1);
    }

    Vector diff(d), gx(d), dtrace(d), gi(d), gj(d);
    for (long i = 0; i < n; ++i) {
        for (long j = i + 1; j < n; ++j) {
            diff = X.row(i) - X.row(j);
            double s = diff.squaredNorm();
            double k = kernel.phi(s);
            double p1 = kernel.phi1(s);
            double p2 = kernel.phi2(s);
            gx = 2.0 * p1 * diff;  // grad_x k(x_i, x_j)
            double trace = -2.0 * d * p1 - 4.0 * s * p2;
            Vector si = S.row(i), sj = S.row(j);
            pair_terms.push_back(si.dot(sj) * k + (sj.dot(gx) - si.dot(gx)) + trace);
            if (want_grad) {
                double p3 = kernel.phi3(s);
                double coef = -2.0 * d * p2 - 4.0 * p2 - 4.0 * s * p3;
                dtrace = 2.0 * coef * diff;  // grad_x of trace, first arg x_i
                Matrix M = -2.0 * p1 * Matrix::Identity(d, d) -
                           4.0 * p2 * (diff * diff.transpose());
                double ss = si.dot(sj);
                // grad in x_i of u(x_i, x_j); grad_y k = -gx
                gi = (*J)[i] * (k * sj - gx) + ss * gx + M * (si - sj) + dtrace;
                // grad in x_j of u(x_j, x_i); kernel terms flip sign with diff
                gj = (*J)[j] * (k * si + gx) - ss * gx + M * (sj - si) - dtrace;
                for (long c = 0; c < d; ++c) {
                    grad_terms[i * d + c].push_back(gi(c));
                    grad_terms[j * d + c].push_back(gj(c));
                }
            }
        }
    }
    std::sort(pair_terms.begin(), pair_terms.end());
    double off_sum = 0.0;
    for (double t : pair_terms) off_sum += t;
    off_sum *= 2.0;

    std::vector<double> diag_terms(n);
    double k0 = kernel.phi(0.0);
    double trace0 = -2.0 * d * kernel.phi1(0.0);
    for (long i = 0; i < n; ++i) diag_terms[i] = S.row(i).squaredNorm() * k0 + trace0;
    std::sort(diag_terms.begin(), diag_terms.end());
    double diag_sum = 0.0;
    for (double t : diag_terms) diag_sum += t;

    if (want_grad) {
        for (long i = 0; i < n; ++i)
            for (long c = 0; c < d; ++c) {
                auto& terms = grad_terms[i * d + c];
                std::sort(terms.begin(), terms.end());
                double acc = 0.0;
                for (double t : terms) acc += t;
                out.grad(i, c) = acc;
            }
    }

    if (n >= 2) out.u = off_sum / (static_cast<double>(n) * (n - 1));
    out.v = (off_sum + diag_sum) / (static_cast<double>(n) * n);
    if (want_grad) out.grad *= 2.0 / (static_cast<double>(n) * (n - 1));
    return out;
}

namespace {

Matrix scores_of(const ScoreModel& m, const Matrix& X) {
    Matrix S(X.rows(), X.cols());
    for (long i = 0; i < X.rows(); ++i) S.row(i) = m.score(X.row(i).transpose()).transpose();
    return S;
}

std::vector<Matrix> jacobians_of(const ScoreModel& m, const Matrix& X) {
    std::vector<Matrix> J;
    J.reserve(X.rows());
    for (long i = 0; i < X.rows(); ++i) J.push_back(m.jacobian(X.row(i).transpose()));
    return J;
}

}  // namespace

KsdEstimate ksd_u(const targets::Target& target, const kernels::SteinKernel& kernel,
                  const Matrix& X) {
    require(X.rows() >= 2, "ksd_u: need at least 2 samples");
    require(X.cols() == target.dim(), "ksd_u: dim mismatch");
    ScoreModel m = score_model(target);
    KsdBatch b = ksd_batch(X, scores_of(m, X), nullptr, kernel, false);
    return {b.u, static_cast<int>(X.rows()), EstimatorKind::UStatistic};
}

KsdEstimate ksd_v(const targets::Target& target, const kernels::SteinKernel& kernel,
                  const Matrix& X) {
    require(X.rows() >= 1, "ksd_v: need at least 1 sample");
    require(X.cols() == target.dim(), "ksd_v: dim mismatch");
    ScoreModel m = score_model(target);
    KsdBatch b = ksd_batch(X, scores_of(m, X), nullptr, kernel, false);
    return {b.v, static_cast<int>(X.rows()), EstimatorKind::VStatistic};
}

Matrix ksd_sample_grad(const targets::Target& target, const kernels::SteinKernel& kernel,
                       const Matrix& X) {
    require(X.rows() >= 2, "ksd_sample_grad: need at least 2 samples");
    require(X.cols() == target.dim(), "ksd_sample_grad: dim mismatch");
    ScoreModel m = score_model(target);
    auto J = jacobians_of(m, X);
    KsdBatch b = ksd_batch(X, scores_of(m, X), &J, kernel, true);
    return b.grad;
}

TrainTrace train_ksd_ns(const KsdTrainConfig& config, const targets::Target& target,
                        networks::Mlp& generator, networks::RmsPropState* state_ext,
                        Rng* rng_ext, int start_iteration) {
    require(generator.output_dim() == target.dim(),
            "train_ksd_ns: generator output dim must match target dim");
    require(config.batch_size >= 2, "train_ksd_ns: batch size must be >= 2");

    const auto* logistic = dynamic_cast<const targets::LogisticPosterior*>(&target);
    require(config.data_minibatch == 0 || logistic != nullptr,
            "train_ksd_ns: data_minibatch requires a logistic posterior target");

    NoiseSpec noise = config.noise;
    if (noise.dim == 0) noise.dim = target.dim();
    Rng local_rng(config.seed);
    Rng& rng = rng_ext ? *rng_ext : local_rng;
    kernels::SteinKernel kernel = config.kernel;
    auto local_state =
        networks::rmsprop_new(generator, config.rmsprop_decay, config.rmsprop_epsilon);
    networks::RmsPropState& state = state_ext ? *state_ext : local_state;

    TrainTrace trace;
    auto t0 = std::chrono::steady_clock::now();
    for (int iter = start_iteration + 1; iter <= config.iterations; ++iter) {
        Matrix Z = noise.draw(config.batch_size, rng);
        Matrix X = networks::mlp_forward(generator, Z);

        ScoreModel m;
        if (config.data_minibatch > 0) {
            auto batch = std::make_shared<std::vector<int>>();
            std::uniform_int_distribution<int> pick(0, logistic->num_train() - 1);
            for (int b = 0; b < config.data_minibatch; ++b) batch->push_back(pick(rng));
            m.dim = target.dim();
            m.score = [logistic, batch](const Vector& x) {
                return logistic->minibatch_score(x, *batch);
            };
            m.jacobian = [logistic, batch](const Vector& x) {
                return logistic->minibatch_score_jacobian(x, *batch);
            };
        } else {
            m = score_model(target);
        }

        if (config.adaptive_bandwidth &&
            kernel.family() == kernels::KernelFamily::Rbf)
            kernel.set_bandwidth_sq(kernels::median_heuristic(X));

        auto J = jacobians_of(m, X);
        KsdBatch b = ksd_batch(X, scores_of(m, X), &J, kernel, true);
        if (!std::isfinite(b.u)) {
            double wnorm = 0.0;
            for (const auto& w : generator.weights) wnorm += w.squaredNorm();
            throw std::runtime_error("train_ksd_ns: non-finite loss at iteration " +
                                     std::to_string(iter) +
                                     " (weight norm " + std::to_string(std::sqrt(wnorm)) + ")");
        }

        auto [pgrads, _] = networks::mlp_backward(generator, Z, b.grad);
        networks::rmsprop_step(state, generator, pgrads, config.learning_rate);
        if (config.clip_c) networks::clip_weights(generator, *config.clip_c);

        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        double bw = kernel.family() == kernels::KernelFamily::Rbf ? kernel.bandwidth_sq() : 0.0;
        trace.records.push_back({iter, b.u, b.v, bw, elapsed});
    }
    return trace;
}

}  // namespace steinns::stein
