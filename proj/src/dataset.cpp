#include "steinns/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace steinns::dataset {

namespace {

void standardize_and_split(targets::LabeledDataset& ds, uint64_t seed) {
    const long n = ds.features.rows();
    const long p = ds.features.cols();
    for (long j = 0; j < p; ++j) {
        double mean = ds.features.col(j).mean();
        double sd = std::sqrt((ds.features.col(j).array() - mean).square().mean());
        if (sd > 0.0)
            ds.features.col(j) = (ds.features.col(j).array() - mean) / sd;
        else
            ds.features.col(j).setZero();
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    long test_size = n / 5;
    ds.test_index.assign(perm.begin(), perm.begin() + test_size);
    ds.train_index.assign(perm.begin() + test_size, perm.end());
}

}  // namespace

targets::LabeledDataset load_dataset(const std::string& path, uint64_t split_seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    long width = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        for (char& ch : line)
            if (ch == ',' || ch == '\t' || ch == ';') ch = ' ';
        std::istringstream ss(line);
        std::vector<double> fields;
        std::string tok;
        while (ss >> tok) {
            size_t pos = 0;
            double v;
            try {
                v = std::stod(tok, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != tok.size())
                throw std::runtime_error("load_dataset: non-numeric field '" + tok +
                                         "' at line " + std::to_string(line_no));
            fields.push_back(v);
        }
        if (width < 0) width = static_cast<long>(fields.size());
        if (static_cast<long>(fields.size()) != width)
            throw std::runtime_error("load_dataset: ragged row at line " +
                                     std::to_string(line_no));
        rows.push_back(std::move(fields));
    }
    if (rows.empty() || width < 2)
        throw std::runtime_error("load_dataset: no usable rows in " + path);

    targets::LabeledDataset ds;
    const long n = static_cast<long>(rows.size());
    const long p = width - 1;
    ds.features.resize(n, p);
    ds.labels.resize(n);
    for (long i = 0; i < n; ++i) {
        double raw = rows[i][0];
        if (raw == 0.0 || raw == -1.0)
            ds.labels(i) = -1.0;
        else if (raw == 1.0)
            ds.labels(i) = 1.0;
        else
            throw std::runtime_error("load_dataset: unseen label value at line " +
                                     std::to_string(i + 1));
        for (long j = 0; j < p; ++j) ds.features(i, j) = rows[i][j + 1];
    }
    standardize_and_split(ds, split_seed);
    return ds;
}

targets::LabeledDataset make_synthetic_logistic(int n, int p, uint64_t seed,
                                                double label_noise) {
    require(n >= 5 && p >= 1, "make_synthetic_logistic: need n >= 5 and p >= 1");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Vector w(p);
    for (int j = 0; j < p; ++j) w(j) = normal(rng);
    w.normalize();

    targets::LabeledDataset ds;
    ds.features.resize(n, p);
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) ds.features(i, j) = normal(rng);
        double margin = ds.features.row(i).dot(w);
        double y = margin >= 0.0 ? 1.0 : -1.0;
        if (unif(rng) < label_noise) y = -y;
        ds.labels(i) = y;
    }
    standardize_and_split(ds, seed + 1);
    return ds;
}

}  // namespace steinns::dataset
