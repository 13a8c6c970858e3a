#include "steinns/networks.hpp"

#include <cmath>

namespace steinns::networks {

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation a) {
    return a == Activation::Tanh ? "tanh" : "relu";
}

long Mlp::parameter_count() const {
    long n = 0;
    for (size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
    return n;
}

void MlpGrads::scale_in_place(double s) {
    for (auto& w : weights) w *= s;
    for (auto& b : biases) b *= s;
}

void MlpGrads::add_scaled(const MlpGrads& other, double s) {
    for (size_t i = 0; i < weights.size(); ++i) {
        weights[i] += s * other.weights[i];
        biases[i] += s * other.biases[i];
    }
}

bool MlpGrads::all_finite() const {
    for (const auto& w : weights)
        if (!w.allFinite()) return false;
    for (const auto& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

MlpGrads zero_grads_like(const Mlp& mlp) {
    MlpGrads g;
    for (size_t i = 0; i < mlp.weights.size(); ++i) {
        g.weights.push_back(Matrix::Zero(mlp.weights[i].rows(), mlp.weights[i].cols()));
        g.biases.push_back(Vector::Zero(mlp.biases[i].size()));
    }
    return g;
}

Mlp mlp_new(const std::vector<int>& layer_dims, Activation activation, uint64_t rng_seed) {
    require(layer_dims.size() >= 2, "mlp_new: need at least input and output dims");
    for (int d : layer_dims) require(d > 0, "mlp_new: layer dims must be positive");

    Mlp mlp;
    mlp.layer_dims = layer_dims;
    mlp.activation = activation;
    Rng rng(rng_seed);
    for (size_t i = 0; i + 1 < layer_dims.size(); ++i) {
        int fan_in = layer_dims[i], fan_out = layer_dims[i + 1];
        double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix W(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) W(r, c) = dist(rng);
        mlp.weights.push_back(std::move(W));
        mlp.biases.push_back(Vector::Zero(fan_out));
    }
    return mlp;
}

Matrix mlp_forward(const Mlp& mlp, const Matrix& X) {
    require(X.cols() == mlp.input_dim(),
            "mlp_forward: input " + shape_str(X) + " does not match input dim " +
                std::to_string(mlp.input_dim()));
    Matrix h = X;
    for (int l = 0; l < mlp.num_layers(); ++l) {
        h = (h * mlp.weights[l].transpose()).rowwise() + mlp.biases[l].transpose();
        if (l + 1 < mlp.num_layers()) {
            if (mlp.activation == Activation::Tanh)
                h = h.array().tanh();
            else
                h = h.array().max(0.0);
        }
    }
    return h;
}

MlpTapeIds mlp_build_tape(autodiff::Tape& tape, const Mlp& mlp, const Matrix& X) {
    MlpTapeIds ids;
    ids.x = tape.input(X);
    for (int l = 0; l < mlp.num_layers(); ++l) {
        ids.weights.push_back(tape.input(mlp.weights[l]));
        ids.biases.push_back(tape.input(mlp.biases[l].transpose()));
    }
    int h = ids.x;
    for (int l = 0; l < mlp.num_layers(); ++l) {
        int a = tape.affine(h, ids.weights[l], ids.biases[l]);
        ids.preacts.push_back(a);
        if (l + 1 < mlp.num_layers())
            h = (mlp.activation == Activation::Tanh) ? tape.tanh(a) : tape.relu(a);
        else
            h = a;
    }
    ids.output = h;
    return ids;
}

MlpGrads mlp_grads_from_tape(const Mlp& mlp, const MlpTapeIds& ids,
                             const std::vector<Matrix>& grads) {
    MlpGrads g = zero_grads_like(mlp);
    for (int l = 0; l < mlp.num_layers(); ++l) {
        if (grads[ids.weights[l]].size() != 0) g.weights[l] = grads[ids.weights[l]];
        if (grads[ids.biases[l]].size() != 0) g.biases[l] = grads[ids.biases[l]].transpose();
    }
    return g;
}

std::pair<MlpGrads, Matrix> mlp_backward(const Mlp& mlp, const Matrix& X,
                                         const Matrix& output_seed) {
    require(output_seed.rows() == X.rows() && output_seed.cols() == mlp.output_dim(),
            "mlp_backward: seed " + shape_str(output_seed) + " does not match output shape");
    autodiff::Tape tape;
    MlpTapeIds ids = mlp_build_tape(tape, mlp, X);
    auto grads = tape.backward(ids.output, output_seed);
    Matrix input_grads = grads[ids.x].size() != 0 ? grads[ids.x] : Matrix::Zero(X.rows(), X.cols());
    return {mlp_grads_from_tape(mlp, ids, grads), std::move(input_grads)};
}

RmsPropState rmsprop_new(const Mlp& mlp, double decay, double epsilon) {
    require(decay > 0.0 && decay < 1.0, "rmsprop: decay must be in (0,1)");
    require(epsilon > 0.0, "rmsprop: epsilon must be positive");
    RmsPropState s;
    s.decay = decay;
    s.epsilon = epsilon;
    for (size_t i = 0; i < mlp.weights.size(); ++i) {
        s.weight_acc.push_back(Matrix::Zero(mlp.weights[i].rows(), mlp.weights[i].cols()));
        s.bias_acc.push_back(Vector::Zero(mlp.biases[i].size()));
    }
    return s;
}

void rmsprop_step(RmsPropState& state, Mlp& mlp, const MlpGrads& grads, double learning_rate) {
    require(grads.weights.size() == mlp.weights.size(), "rmsprop_step: gradient layer mismatch");
    if (!grads.all_finite()) throw std::runtime_error("rmsprop_step: non-finite gradients");
    for (int l = 0; l < mlp.num_layers(); ++l) {
        auto& vw = state.weight_acc[l];
        vw = state.decay * vw.array() + (1.0 - state.decay) * grads.weights[l].array().square();
        mlp.weights[l].array() -=
            learning_rate * grads.weights[l].array() / (vw.array().sqrt() + state.epsilon);
        auto& vb = state.bias_acc[l];
        vb = state.decay * vb.array() + (1.0 - state.decay) * grads.biases[l].array().square();
        mlp.biases[l].array() -=
            learning_rate * grads.biases[l].array() / (vb.array().sqrt() + state.epsilon);
    }
}

void clip_weights(Mlp& mlp, double c) {
    require(c > 0.0, "clip_weights: c must be positive");
    for (auto& w : mlp.weights) w = w.array().min(c).max(-c);
    for (auto& b : mlp.biases) b = b.array().min(c).max(-c);
}

}  // namespace steinns::networks
