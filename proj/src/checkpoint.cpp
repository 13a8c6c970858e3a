#include "steinns/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace steinns::checkpoint {

namespace {

constexpr char kMagic[8] = {'S', 'N', 'S', 'C', 'K', 'P', 'T', '\0'};

void write_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); }
void write_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<char*>(&v), 8); }
void write_f64(std::ostream& out, double v) { out.write(reinterpret_cast<char*>(&v), 8); }

uint32_t read_u32(std::istream& in) {
    uint32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}
uint64_t read_u64(std::istream& in) {
    uint64_t v;
    in.read(reinterpret_cast<char*>(&v), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}
double read_f64(std::istream& in) {
    double v;
    in.read(reinterpret_cast<char*>(&v), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c) write_f64(out, m(r, c));
}

void read_matrix(std::istream& in, Matrix& m) {
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c) m(r, c) = read_f64(in);
}

}  // namespace

std::string serialize_rng(const Rng& rng) {
    std::ostringstream ss;
    ss << rng;
    return ss.str();
}

Rng deserialize_rng(const std::string& state) {
    Rng rng;
    std::istringstream ss(state);
    ss >> rng;
    if (ss.fail()) throw std::runtime_error("checkpoint: bad rng state");
    return rng;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp);
        out.write(kMagic, 8);
        write_u32(out, ckpt.version);
        write_u32(out, ckpt.network.activation == networks::Activation::Tanh ? 0u : 1u);
        write_u32(out, static_cast<uint32_t>(ckpt.network.layer_dims.size()));
        for (int d : ckpt.network.layer_dims) write_u32(out, static_cast<uint32_t>(d));
        for (int l = 0; l < ckpt.network.num_layers(); ++l) {
            write_matrix(out, ckpt.network.weights[l]);
            write_matrix(out, ckpt.network.biases[l]);
        }
        for (int l = 0; l < ckpt.network.num_layers(); ++l) {
            write_matrix(out, ckpt.optimizer.weight_acc[l]);
            write_matrix(out, ckpt.optimizer.bias_acc[l]);
        }
        write_f64(out, ckpt.optimizer.decay);
        write_f64(out, ckpt.optimizer.epsilon);
        write_u64(out, ckpt.iteration);
        write_u32(out, ckpt.noise.kind == NoiseKind::Uniform ? 0u : 1u);
        write_f64(out, ckpt.noise.low);
        write_f64(out, ckpt.noise.high);
        write_f64(out, ckpt.noise.stddev);
        write_u32(out, static_cast<uint32_t>(ckpt.noise.dim));
        write_u64(out, ckpt.rng_state.size());
        out.write(ckpt.rng_state.data(), static_cast<long>(ckpt.rng_state.size()));
        if (!out) throw std::runtime_error("checkpoint: write failure on " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("checkpoint: cannot rename into " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);

    Checkpoint ckpt;
    ckpt.version = read_u32(in);
    if (ckpt.version != 1)
        throw std::runtime_error("checkpoint: unsupported version " +
                                 std::to_string(ckpt.version));
    uint32_t act = read_u32(in);
    ckpt.network.activation =
        act == 0 ? networks::Activation::Tanh : networks::Activation::Relu;
    uint32_t ndims = read_u32(in);
    if (ndims < 2 || ndims > 64) throw std::runtime_error("checkpoint: corrupt layer count");
    for (uint32_t i = 0; i < ndims; ++i)
        ckpt.network.layer_dims.push_back(static_cast<int>(read_u32(in)));
    for (size_t l = 0; l + 1 < ckpt.network.layer_dims.size(); ++l) {
        Matrix W(ckpt.network.layer_dims[l + 1], ckpt.network.layer_dims[l]);
        read_matrix(in, W);
        ckpt.network.weights.push_back(std::move(W));
        Matrix b(ckpt.network.layer_dims[l + 1], 1);
        read_matrix(in, b);
        ckpt.network.biases.push_back(b.col(0));
    }
    ckpt.optimizer = networks::rmsprop_new(ckpt.network);
    for (int l = 0; l < ckpt.network.num_layers(); ++l) {
        read_matrix(in, ckpt.optimizer.weight_acc[l]);
        Matrix b(ckpt.network.layer_dims[l + 1], 1);
        read_matrix(in, b);
        ckpt.optimizer.bias_acc[l] = b.col(0);
    }
    ckpt.optimizer.decay = read_f64(in);
    ckpt.optimizer.epsilon = read_f64(in);
    ckpt.iteration = read_u64(in);
    ckpt.noise.kind = read_u32(in) == 0 ? NoiseKind::Uniform : NoiseKind::Gaussian;
    ckpt.noise.low = read_f64(in);
    ckpt.noise.high = read_f64(in);
    ckpt.noise.stddev = read_f64(in);
    ckpt.noise.dim = static_cast<int>(read_u32(in));
    uint64_t rng_len = read_u64(in);
    if (rng_len > (1u << 20)) throw std::runtime_error("checkpoint: corrupt rng state length");
    ckpt.rng_state.resize(rng_len);
    in.read(ckpt.rng_state.data(), static_cast<long>(rng_len));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return ckpt;
}

}  // namespace steinns::checkpoint
