#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "steinns/kernels.hpp"
#include "steinns/networks.hpp"
#include "steinns/noise.hpp"
#include "steinns/targets.hpp"

namespace steinns::stein {

enum class EstimatorKind { UStatistic, VStatistic };

struct KsdEstimate {
    double value = 0.0;
    int n = 0;
    EstimatorKind estimator = EstimatorKind::UStatistic;
};

struct TrainRecord {
    int iteration = 0;
    double loss = 0.0;        // objective at this iteration
    double aux_loss = 0.0;    // v-statistic (ksd) or generator loss (fisher)
    double bandwidth_sq = 0.0;
    double wall_time_s = 0.0;
};

struct TrainTrace {
    std::vector<TrainRecord> records;
};

// Score access used by the training loops; lets the logistic posterior swap
// in minibatch scores without changing the estimator code.
struct ScoreModel {
    int dim = 0;
    std::function<Vector(const Vector&)> score;
    std::function<Matrix(const Vector&)> jacobian;
};

ScoreModel score_model(const targets::Target& target);

// The Steinalized kernel:
//   u_q(x,y) = S(x)'k S(y) + S(x)' grad_y k + S(y)' grad_x k + tr(grad_{x,y} k)
double u_q(const targets::Target& target, const kernels::SteinKernel& kernel,
           const Vector& x, const Vector& y);

// Gradient of u_q in its first argument.
Vector u_q_grad_x(const targets::Target& target, const kernels::SteinKernel& kernel,
                  const Vector& x, const Vector& y);

KsdEstimate ksd_u(const targets::Target& target, const kernels::SteinKernel& kernel,
                  const Matrix& X);
KsdEstimate ksd_v(const targets::Target& target, const kernels::SteinKernel& kernel,
                  const Matrix& X);

// d ksd_u / d x_i for each row. The kernel bandwidth is held constant.
Matrix ksd_sample_grad(const targets::Target& target, const kernels::SteinKernel& kernel,
                       const Matrix& X);

// Batched core shared by the public ops and the training loop. S holds the
// per-row scores; J the per-row score Jacobians (only needed with gradients).
struct KsdBatch {
    double u = 0.0;
    double v = 0.0;
    Matrix grad;  // empty unless requested
};
KsdBatch ksd_batch(const Matrix& X, const Matrix& S, const std::vector<Matrix>* J,
                   const kernels::SteinKernel& kernel, bool want_grad);

struct KsdTrainConfig {
    int iterations = 10000;
    int batch_size = 100;
    double learning_rate = 0.001;
    double rmsprop_decay = 0.9;
    double rmsprop_epsilon = 1e-8;
    kernels::SteinKernel kernel = kernels::SteinKernel::imq(1.0, -0.5);
    bool adaptive_bandwidth = false;  // rbf: median heuristic per batch
    NoiseSpec noise;
    std::optional<double> clip_c;     // weight clipping when set
    uint64_t seed = 0;
    int data_minibatch = 0;           // logistic targets: minibatch size (0 = full batch)
};

// Algorithm: per iteration draw noise, push it through the generator,
// evaluate the u-statistic KSD and its sample gradient, backpropagate into
// the generator parameters, RMSProp step. The generator is updated in place.
// Passing external optimizer state and rng (plus a start iteration) resumes
// a partially trained run; iterations is always the total count T.
TrainTrace train_ksd_ns(const KsdTrainConfig& config, const targets::Target& target,
                        networks::Mlp& generator,
                        networks::RmsPropState* state = nullptr, Rng* rng = nullptr,
                        int start_iteration = 0);

}  // namespace steinns::stein
