#pragma once

#include <string>

#include "steinns/targets.hpp"

namespace steinns::dataset {

// Delimited text, one row per observation, label first then features.
// Labels in {0,1} or {-1,+1} are normalized to {-1,+1}; features are
// standardized per column (constant columns become all-zero); rows are
// split 4:1 train/test by a seeded permutation.
targets::LabeledDataset load_dataset(const std::string& path, uint64_t split_seed);

// Seeded synthetic binary classification set: standard normal features, a
// random unit separating direction, labels flipped with probability
// label_noise. Same standardization and split as load_dataset.
targets::LabeledDataset make_synthetic_logistic(int n, int p, uint64_t seed,
                                                double label_noise = 0.1);

}  // namespace steinns::dataset
