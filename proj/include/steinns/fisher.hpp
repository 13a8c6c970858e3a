#pragma once

#include <optional>

#include "steinns/stein.hpp"

namespace steinns::fisher {

using networks::Mlp;
using stein::ScoreModel;
using stein::TrainTrace;

// (1/n) sum_i [ S_q(x_i)' f(x_i) + tr grad_x f(x_i) ], the Jacobian trace
// computed exactly, one backward pass per output coordinate.
double stein_operator_mean(const targets::Target& target, const Mlp& discriminator,
                           const Matrix& X);

// L_{eta,lambda} = stein_operator_mean - lambda (1/n) sum_i ||f(x_i)||^2
double fisher_loss(const targets::Target& target, const Mlp& discriminator,
                   const Matrix& X, double lambda);

// One tape evaluation of the loss with gradients for both players.
// x_grads holds d L / d x_i with the score matrix frozen; the caller adds the
// score-Jacobian correction when differentiating through the samples.
struct FisherBackward {
    double loss = 0.0;
    double operator_mean = 0.0;
    double penalty = 0.0;  // (1/n) sum ||f||^2
    Matrix f_values;       // n x d
    networks::MlpGrads disc_grads;
    Matrix x_grads;
};
FisherBackward fisher_backward(const Mlp& discriminator, const Matrix& X, const Matrix& S,
                               double lambda);

// Relative L2(p) residual of the discriminator against the closed-form
// optimum (S_q - S_p) / (2 lambda), evaluated on X drawn from p.
double optimal_discriminator_residual(const targets::Target& target_q,
                                      const targets::Target& known_p,
                                      const Mlp& discriminator, const Matrix& X,
                                      double lambda);

struct FisherTrainConfig {
    double lambda = 0.5;
    int disc_steps = 5;
    double disc_learning_rate = 0.001;
    double gen_learning_rate = 0.001;
    int batch_size = 100;
    int iterations = 10000;
    double rmsprop_decay = 0.9;
    double rmsprop_epsilon = 1e-8;
    NoiseSpec noise;
    std::optional<double> clip_c;
    uint64_t seed = 0;
    int data_minibatch = 0;
};

// Alternating game: per outer iteration a fresh noise batch, disc_steps
// ascent steps on the discriminator, then one descent step on the generator
// through the sample gradient of the loss. Both networks updated in place.
// Trace records: loss = discriminator objective after its ascent steps,
// aux_loss = generator loss at its step.
TrainTrace train_fisher_ns(const FisherTrainConfig& config, const targets::Target& target,
                           Mlp& generator, Mlp& discriminator,
                           networks::RmsPropState* gen_state = nullptr, Rng* rng = nullptr);

}  // namespace steinns::fisher
