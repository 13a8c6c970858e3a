#pragma once

#include "steinns/common.hpp"

namespace steinns {

enum class NoiseKind { Uniform, Gaussian };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::Uniform;
    double low = -10.0;   // uniform bounds
    double high = 10.0;
    double stddev = 1.0;  // gaussian scale
    int dim = 0;

    Matrix draw(int n, Rng& rng) const {
        require(dim > 0, "noise: dim must be positive");
        Matrix Z(n, dim);
        if (kind == NoiseKind::Uniform) {
            require(high > low, "noise: uniform bounds invalid");
            std::uniform_real_distribution<double> dist(low, high);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < dim; ++j) Z(i, j) = dist(rng);
        } else {
            std::normal_distribution<double> dist(0.0, stddev);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < dim; ++j) Z(i, j) = dist(rng);
        }
        return Z;
    }
};

}  // namespace steinns
