#include "steinns/evalsuite.hpp"

#include <cmath>

namespace steinns::evalsuite {

double mmd_u(const Matrix& X, const Matrix& Y, const kernels::SteinKernel& kernel) {
    // Canonical argument order keeps the accumulation sequence, and hence the
    // result, exactly symmetric in (X, Y).
    if (X.rows() > Y.rows()) return mmd_u(Y, X, kernel);
    const long n = X.rows();
    const long m = Y.rows();
    require(n >= 2 && m >= 2, "mmd_u: need at least 2 samples per set");
    require(X.cols() == Y.cols(), "mmd_u: dim mismatch");

    double xx = 0.0, yy = 0.0, xy = 0.0;
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j)
            xx += 2.0 * kernel.phi((X.row(i) - X.row(j)).squaredNorm());
    for (long i = 0; i < m; ++i)
        for (long j = i + 1; j < m; ++j)
            yy += 2.0 * kernel.phi((Y.row(i) - Y.row(j)).squaredNorm());

    double cross_pairs;
    if (n == m) {
        // Diagonal-excluded cross term, accumulated per unordered index pair
        // so the sum mirrors the within-sample sums term for term and the
        // estimator is exactly zero on identical sets.
        for (long i = 0; i < n; ++i)
            for (long j = i + 1; j < n; ++j)
                xy += kernel.phi((X.row(i) - Y.row(j)).squaredNorm()) +
                      kernel.phi((Y.row(i) - X.row(j)).squaredNorm());
        cross_pairs = static_cast<double>(n) * (n - 1);
    } else {
        for (long i = 0; i < n; ++i)
            for (long j = 0; j < m; ++j)
                xy += kernel.phi((X.row(i) - Y.row(j)).squaredNorm());
        cross_pairs = static_cast<double>(n) * m;
    }
    return xx / (static_cast<double>(n) * (n - 1)) + yy / (static_cast<double>(m) * (m - 1)) -
           2.0 * xy / cross_pairs;
}

double mmd_u_pooled_rbf(const Matrix& X, const Matrix& Y) {
    Matrix pooled(X.rows() + Y.rows(), X.cols());
    pooled << X, Y;
    return mmd_u(X, Y, kernels::SteinKernel::rbf(kernels::median_heuristic(pooled)));
}

std::pair<double, double> moment_stats(const Matrix& X) {
    require(X.cols() == 2, "moment_stats: samples must be 2-D");
    require(X.rows() >= 2, "moment_stats: need at least 2 samples");
    double h1 = X.col(0).mean() + X.col(1).mean();
    double sd0 = std::sqrt((X.col(0).array() - X.col(0).mean()).square().mean());
    double sd1 = std::sqrt((X.col(1).array() - X.col(1).mean()).square().mean());
    return {h1, sd0 + sd1};
}

int mode_coverage(const Matrix& X, const std::vector<Vector>& modes, double radius) {
    require(!modes.empty(), "mode_coverage: empty mode list");
    require(radius > 0.0, "mode_coverage: radius must be positive");
    const long n = X.rows();
    long threshold = std::max<long>(2, static_cast<long>(0.02 * n));
    int covered = 0;
    for (const Vector& mode : modes) {
        long count = 0;
        for (long i = 0; i < n; ++i)
            if ((X.row(i).transpose() - mode).norm() <= radius) ++count;
        if (count >= threshold) ++covered;
    }
    return covered;
}

double posterior_accuracy(const Matrix& weight_samples, const targets::LabeledDataset& data) {
    require(weight_samples.rows() >= 1, "posterior_accuracy: no weight samples");
    require(!data.test_index.empty(), "posterior_accuracy: empty test set");
    const long p = data.features.cols();
    require(weight_samples.cols() == p + 1, "posterior_accuracy: weight dim mismatch");

    long correct = 0;
    for (int idx : data.test_index) {
        double prob = 0.0;
        for (long k = 0; k < weight_samples.rows(); ++k) {
            double z = data.features.row(idx).dot(weight_samples.row(k).head(p));
            prob += z > 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        }
        prob /= static_cast<double>(weight_samples.rows());
        double pred = prob > 0.5 ? 1.0 : -1.0;
        if (pred == data.labels(idx)) ++correct;
    }
    return static_cast<double>(correct) / data.test_index.size();
}

MetricReport aggregate_runs(const std::vector<RunMetrics>& runs, double truth_h1,
                            double truth_h2) {
    require(!runs.empty(), "aggregate_runs: no runs");
    MetricReport r;
    r.runs = static_cast<int>(runs.size());
    double mmd_sum = 0.0, mmd_sq = 0.0;
    for (const auto& run : runs) {
        r.mse_h1 += (run.h1 - truth_h1) * (run.h1 - truth_h1);
        r.mse_h2 += (run.h2 - truth_h2) * (run.h2 - truth_h2);
        mmd_sum += run.mmd;
        mmd_sq += run.mmd * run.mmd;
        r.mean_mode_coverage += run.mode_coverage;
    }
    double n = static_cast<double>(r.runs);
    r.mse_h1 /= n;
    r.mse_h2 /= n;
    r.mean_mmd = mmd_sum / n;
    r.mean_mode_coverage /= n;
    if (runs.front().accuracy >= 0.0) {
        r.mean_accuracy = 0.0;
        for (const auto& run : runs) r.mean_accuracy += run.accuracy;
        r.mean_accuracy /= n;
    }
    if (r.runs >= 2) {
        double var = (mmd_sq - n * r.mean_mmd * r.mean_mmd) / (n - 1.0);
        r.se_mmd = std::sqrt(std::max(0.0, var) / n);
    }
    return r;
}

}  // namespace steinns::evalsuite
