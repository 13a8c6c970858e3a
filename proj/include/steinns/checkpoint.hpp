#pragma once

#include <string>

#include "steinns/networks.hpp"
#include "steinns/noise.hpp"

namespace steinns::checkpoint {

// Sized binary layout: magic, version, network description, flat parameter
// array in layer order (weights row-major then bias, per layer), optimizer
// accumulators in the same order, iteration counter, noise spec, and the
// serialized RNG state. All floats are 64-bit little-endian.
struct Checkpoint {
    uint32_t version = 1;
    networks::Mlp network;
    networks::RmsPropState optimizer;
    uint64_t iteration = 0;
    NoiseSpec noise;
    std::string rng_state;  // stream-serialized engine state
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& state);

}  // namespace steinns::checkpoint
