#pragma once

#include <vector>

#include "steinns/kernels.hpp"
#include "steinns/targets.hpp"

namespace steinns::evalsuite {

// Unbiased two-sample MMD U-statistic. Within-sample terms exclude the
// diagonal; when n == m the cross term also excludes paired indices, so
// mmd_u(X, X) is exactly zero.
double mmd_u(const Matrix& X, const Matrix& Y, const kernels::SteinKernel& kernel);

// RBF kernel with the median heuristic on the pooled sample.
double mmd_u_pooled_rbf(const Matrix& X, const Matrix& Y);

// h1 = mean(X1) + mean(X2);  h2 = sd(X1) + sd(X2)  (population divisor n).
// 2-D samples only.
std::pair<double, double> moment_stats(const Matrix& X);

// Modes with at least max(2, 0.02 n) samples within `radius`.
int mode_coverage(const Matrix& X, const std::vector<Vector>& modes, double radius);

// Predictive accuracy of averaged-sigmoid Bayesian model averaging over
// weight samples (last column, log alpha, is ignored for prediction).
double posterior_accuracy(const Matrix& weight_samples, const targets::LabeledDataset& data);

struct RunMetrics {
    double h1 = 0.0;
    double h2 = 0.0;
    double mmd = 0.0;
    int mode_coverage = 0;
    double accuracy = -1.0;  // logistic runs only
};

struct MetricReport {
    int runs = 0;
    double mse_h1 = 0.0;
    double mse_h2 = 0.0;
    double mean_mmd = 0.0;
    double se_mmd = 0.0;
    double mean_mode_coverage = 0.0;
    double mean_accuracy = -1.0;
};

MetricReport aggregate_runs(const std::vector<RunMetrics>& runs, double truth_h1,
                            double truth_h2);

}  // namespace steinns::evalsuite
