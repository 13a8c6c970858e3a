#pragma once

#include <vector>

#include "steinns/autodiff.hpp"
#include "steinns/common.hpp"

namespace steinns::networks {

enum class Activation { Tanh, Relu };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

// Plain feed-forward net: hidden layers share one activation, output linear.
struct Mlp {
    std::vector<int> layer_dims;
    std::vector<Matrix> weights;  // weights[i]: layer_dims[i+1] x layer_dims[i]
    std::vector<Vector> biases;
    Activation activation = Activation::Tanh;

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    int num_layers() const { return static_cast<int>(weights.size()); }
    long parameter_count() const;
};

struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    void scale_in_place(double s);
    void add_scaled(const MlpGrads& other, double s);
    bool all_finite() const;
};

MlpGrads zero_grads_like(const Mlp& mlp);

// Xavier-uniform weights, zero biases, deterministic given seed.
Mlp mlp_new(const std::vector<int>& layer_dims, Activation activation, uint64_t rng_seed);

Matrix mlp_forward(const Mlp& mlp, const Matrix& X);

// Gradients of <output_seed, G(X)> with respect to parameters and inputs.
std::pair<MlpGrads, Matrix> mlp_backward(const Mlp& mlp, const Matrix& X, const Matrix& output_seed);

// Tape builder shared by the training losses: pushes parameter and input
// nodes, chains affine/activation layers, and reports the node ids so a
// caller can extend the graph before running backward.
struct MlpTapeIds {
    int x = -1;
    int output = -1;
    std::vector<int> weights;
    std::vector<int> biases;
    std::vector<int> preacts;  // affine nodes, one per layer
};
MlpTapeIds mlp_build_tape(autodiff::Tape& tape, const Mlp& mlp, const Matrix& X);

// Collects parameter gradients out of a finished backward sweep.
MlpGrads mlp_grads_from_tape(const Mlp& mlp, const MlpTapeIds& ids,
                             const std::vector<Matrix>& grads);

struct RmsPropState {
    double decay = 0.9;
    double epsilon = 1e-8;
    std::vector<Matrix> weight_acc;
    std::vector<Vector> bias_acc;
};

RmsPropState rmsprop_new(const Mlp& mlp, double decay = 0.9, double epsilon = 1e-8);

// v <- rho v + (1-rho) g^2;  theta <- theta - lr g / (sqrt(v) + eps).
// Throws on non-finite gradients without touching the parameters.
void rmsprop_step(RmsPropState& state, Mlp& mlp, const MlpGrads& grads, double learning_rate);

// Clamp every weight and bias entry into [-c, c].
void clip_weights(Mlp& mlp, double c);

}  // namespace steinns::networks
