#include "steinns/fisher.hpp"

#include <chrono>
#include <cmath>

namespace steinns::fisher {

namespace {

using networks::Activation;

Matrix jvp_basis(long n, long d) {
    // Block m of the (n*d) x d stack seeds input coordinate m for every
    // sample; the same matrix masks out the diagonal entries at the end.
    Matrix V = Matrix::Zero(n * d, d);
    for (long m = 0; m < d; ++m) V.block(m * n, m, n, 1).setOnes();
    return V;
}

}  // namespace

double stein_operator_mean(const targets::Target& target, const Mlp& discriminator,
                           const Matrix& X) {
    const long n = X.rows();
    const long d = X.cols();
    require(n >= 1, "stein_operator_mean: empty batch");
    require(discriminator.input_dim() == d && discriminator.output_dim() == d,
            "stein_operator_mean: discriminator dims must equal the sample dim");
    require(d == target.dim(), "stein_operator_mean: dim mismatch");

    Matrix F = networks::mlp_forward(discriminator, X);
    double total = 0.0;
    for (long i = 0; i < n; ++i)
        total += target.score(X.row(i).transpose()).dot(F.row(i).transpose());

    for (long j = 0; j < d; ++j) {
        Matrix seed = Matrix::Zero(n, d);
        seed.col(j).setOnes();
        auto [_, input_grads] = networks::mlp_backward(discriminator, X, seed);
        total += input_grads.col(j).sum();
    }
    return total / static_cast<double>(n);
}

double fisher_loss(const targets::Target& target, const Mlp& discriminator,
                   const Matrix& X, double lambda) {
    require(lambda > 0.0, "fisher_loss: lambda must be positive");
    Matrix F = networks::mlp_forward(discriminator, X);
    double penalty = F.array().square().sum() / static_cast<double>(X.rows());
    return stein_operator_mean(target, discriminator, X) - lambda * penalty;
}

FisherBackward fisher_backward(const Mlp& discriminator, const Matrix& X, const Matrix& S,
                               double lambda) {
    const long n = X.rows();
    const long d = X.cols();
    require(discriminator.input_dim() == d && discriminator.output_dim() == d,
            "fisher_backward: discriminator dims must equal the sample dim");
    require(S.rows() == n && S.cols() == d, "fisher_backward: score shape mismatch");
    require(lambda > 0.0, "fisher_backward: lambda must be positive");

    autodiff::Tape tape;
    auto ids = networks::mlp_build_tape(tape, discriminator, X);
    double inv_n = 1.0 / static_cast<double>(n);

    int s_node = tape.input(S);
    int score_term = tape.scale(tape.sum(tape.hadamard(s_node, ids.output)), inv_n);

    // tr grad_x f via a batched forward Jacobian accumulation: the JVP of all
    // d input directions is carried as one (n*d) x width stack, so the whole
    // trace costs one extra matrix chain instead of d backward passes.
    int v = tape.input(jvp_basis(n, d));
    int mask = v;
    for (int l = 0; l < discriminator.num_layers(); ++l) {
        int lin = tape.affine(v, ids.weights[l]);
        if (l + 1 < discriminator.num_layers()) {
            int prime = discriminator.activation == Activation::Tanh
                            ? tape.tanh_prime(ids.preacts[l])
                            : tape.relu_prime(ids.preacts[l]);
            v = tape.hadamard(tape.repeat_rows(prime, static_cast<int>(d)), lin);
        } else {
            v = lin;
        }
    }
    int trace_term = tape.scale(tape.sum(tape.hadamard(mask, v)), inv_n);

    int penalty_term = tape.scale(tape.sum(tape.square(ids.output)), -lambda * inv_n);
    int loss_node = tape.add(tape.add(score_term, trace_term), penalty_term);

    auto grads = tape.backward(loss_node, Matrix::Constant(1, 1, 1.0));

    FisherBackward out;
    out.operator_mean = tape.value(score_term)(0, 0) + tape.value(trace_term)(0, 0);
    out.penalty = -tape.value(penalty_term)(0, 0) / lambda;
    out.loss = tape.value(loss_node)(0, 0);
    out.f_values = tape.value(ids.output);
    out.disc_grads = networks::mlp_grads_from_tape(discriminator, ids, grads);
    out.x_grads = grads[ids.x].size() != 0 ? grads[ids.x] : Matrix::Zero(n, d);
    return out;
}

double optimal_discriminator_residual(const targets::Target& target_q,
                                      const targets::Target& known_p,
                                      const Mlp& discriminator, const Matrix& X,
                                      double lambda) {
    const long n = X.rows();
    require(n >= 1, "optimal_discriminator_residual: empty batch");
    require(target_q.dim() == known_p.dim() && X.cols() == target_q.dim(),
            "optimal_discriminator_residual: dim mismatch");
    Matrix F = networks::mlp_forward(discriminator, X);
    double num = 0.0, den = 0.0;
    for (long i = 0; i < n; ++i) {
        Vector x = X.row(i).transpose();
        Vector fstar = (target_q.score(x) - known_p.score(x)) / (2.0 * lambda);
        num += (F.row(i).transpose() - fstar).squaredNorm();
        den += fstar.squaredNorm();
    }
    num /= static_cast<double>(n);
    den /= static_cast<double>(n);
    return num / std::max(1.0, den);
}

TrainTrace train_fisher_ns(const FisherTrainConfig& config, const targets::Target& target,
                           Mlp& generator, Mlp& discriminator,
                           networks::RmsPropState* gen_state_ext, Rng* rng_ext) {
    require(generator.output_dim() == target.dim(),
            "train_fisher_ns: generator output dim must match target dim");
    require(discriminator.input_dim() == target.dim() &&
                discriminator.output_dim() == target.dim(),
            "train_fisher_ns: discriminator dims must match target dim");
    require(config.disc_steps >= 1, "train_fisher_ns: disc_steps must be >= 1");
    require(config.lambda > 0.0, "train_fisher_ns: lambda must be positive");

    const auto* logistic = dynamic_cast<const targets::LogisticPosterior*>(&target);
    require(config.data_minibatch == 0 || logistic != nullptr,
            "train_fisher_ns: data_minibatch requires a logistic posterior target");

    NoiseSpec noise = config.noise;
    if (noise.dim == 0) noise.dim = target.dim();
    Rng local_rng(config.seed);
    Rng& rng = rng_ext ? *rng_ext : local_rng;
    auto local_gen_state =
        networks::rmsprop_new(generator, config.rmsprop_decay, config.rmsprop_epsilon);
    networks::RmsPropState& gen_state = gen_state_ext ? *gen_state_ext : local_gen_state;
    auto disc_state =
        networks::rmsprop_new(discriminator, config.rmsprop_decay, config.rmsprop_epsilon);

    const int n = config.batch_size;
    TrainTrace trace;
    auto t0 = std::chrono::steady_clock::now();
    for (int iter = 1; iter <= config.iterations; ++iter) {
        Matrix Z = noise.draw(n, rng);
        Matrix X = networks::mlp_forward(generator, Z);

        stein::ScoreModel m;
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
            m = stein::score_model(target);
        }

        Matrix S(n, target.dim());
        for (int i = 0; i < n; ++i) S.row(i) = m.score(X.row(i).transpose()).transpose();

        for (int h = 0; h < config.disc_steps; ++h) {
            FisherBackward fb = fisher_backward(discriminator, X, S, config.lambda);
            if (!std::isfinite(fb.loss))
                throw std::runtime_error("train_fisher_ns: non-finite discriminator loss at "
                                         "iteration " + std::to_string(iter));
            fb.disc_grads.scale_in_place(-1.0);  // ascent
            networks::rmsprop_step(disc_state, discriminator, fb.disc_grads,
                                   config.disc_learning_rate);
        }

        FisherBackward fb = fisher_backward(discriminator, X, S, config.lambda);
        if (!std::isfinite(fb.loss)) {
            double wnorm = 0.0;
            for (const auto& w : generator.weights) wnorm += w.squaredNorm();
            throw std::runtime_error("train_fisher_ns: non-finite loss at iteration " +
                                     std::to_string(iter) + " (generator weight norm " +
                                     std::to_string(std::sqrt(wnorm)) + ")");
        }
        Matrix Gx = fb.x_grads;
        double inv_n = 1.0 / static_cast<double>(n);
        for (int i = 0; i < n; ++i) {
            // The score itself moves with the sample; the tape held S frozen.
            Matrix Ji = m.jacobian(X.row(i).transpose());
            Gx.row(i) += inv_n * (Ji * fb.f_values.row(i).transpose()).transpose();
        }
        auto [pgrads, _] = networks::mlp_backward(generator, Z, Gx);
        networks::rmsprop_step(gen_state, generator, pgrads, config.gen_learning_rate);
        if (config.clip_c) networks::clip_weights(generator, *config.clip_c);

        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        trace.records.push_back({iter, fb.loss, fb.operator_mean, 0.0, elapsed});
    }
    return trace;
}

}  // namespace steinns::fisher
