#pragma once

#include "steinns/kernels.hpp"
#include "steinns/targets.hpp"

namespace steinns::baselines {

struct ParticleSet {
    Matrix positions;  // n x d
    int iteration = 0;
};

// x_i <- x_i + (eps/n) sum_j [ k(x_j, x_i) S_q(x_j) + grad_{x_j} k(x_j, x_i) ]
void svgd_step(const targets::Target& target, const kernels::SteinKernel& kernel,
               ParticleSet& particles, double step_size);

// RBF kernel with per-step median-heuristic bandwidth.
void svgd_step_adaptive(const targets::Target& target, ParticleSet& particles,
                        double step_size);

// eps_t = 0.1 / (t+1)^0.55
double sgld_step_size(int t);

// x' = x + (eps_t/2) S_q(x) + sqrt(eps_t) xi,  xi ~ N(0, I)
Vector sgld_step(const targets::Target& target, const Vector& x, int t, Rng& rng);

// Same schedule with a caller-supplied stochastic score (minibatch use).
Vector sgld_step_with_score(const Vector& x, const Vector& score, int t, Rng& rng);

}  // namespace steinns::baselines
