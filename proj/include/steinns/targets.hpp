#pragma once

#include <memory>
#include <vector>

#include "steinns/common.hpp"

namespace steinns::targets {

// Un-normalized density q with analytic score and score Jacobian. The
// normalizing constant never enters; log_density_unnorm is defined up to an
// additive constant.
class Target {
public:
    virtual ~Target() = default;
    virtual int dim() const = 0;
    virtual double log_density_unnorm(const Vector& x) const = 0;
    virtual Vector score(const Vector& x) const = 0;
    virtual Matrix score_jacobian(const Vector& x) const = 0;

    virtual bool can_sample() const { return false; }
    virtual Matrix sample(int n, Rng& rng) const;
};

class IsotropicGaussian : public Target {
public:
    IsotropicGaussian(Vector mean, double variance);
    int dim() const override { return static_cast<int>(mean_.size()); }
    double log_density_unnorm(const Vector& x) const override;
    Vector score(const Vector& x) const override;
    Matrix score_jacobian(const Vector& x) const override;
    bool can_sample() const override { return true; }
    Matrix sample(int n, Rng& rng) const override;
    const Vector& mean() const { return mean_; }
    double variance() const { return variance_; }

private:
    Vector mean_;
    double variance_;
};

class Gaussian : public Target {
public:
    Gaussian(Vector mean, Matrix covariance);
    int dim() const override { return static_cast<int>(mean_.size()); }
    double log_density_unnorm(const Vector& x) const override;
    Vector score(const Vector& x) const override;
    Matrix score_jacobian(const Vector& x) const override;
    bool can_sample() const override { return true; }
    Matrix sample(int n, Rng& rng) const override;
    const Vector& mean() const { return mean_; }
    // Normalized log density, needed for mixture responsibilities.
    double log_density_normalized(const Vector& x) const;

private:
    Vector mean_;
    Matrix precision_;
    Matrix chol_lower_;
    double log_norm_const_;
};

class Mixture : public Target {
public:
    Mixture(std::vector<double> weights, std::vector<Gaussian> components);
    int dim() const override;
    double log_density_unnorm(const Vector& x) const override;
    Vector score(const Vector& x) const override;
    Matrix score_jacobian(const Vector& x) const override;
    bool can_sample() const override { return true; }
    Matrix sample(int n, Rng& rng) const override;
    std::vector<Vector> component_means() const;
    // Posterior component weights at x (log-sum-exp stabilized).
    Vector responsibilities(const Vector& x) const;

private:
    std::vector<double> weights_;
    std::vector<Gaussian> components_;
};

// Equal-weight isotropic Gaussians equally spaced on a circle, component k
// at angle 2*pi*k/count from the positive first axis.
Mixture ring_of_gaussians(double radius, double component_sd, int count = 8);

// Two zero-mean 2-D Gaussians with off-diagonal correlation +rho and -rho,
// equal weights. rho in (0,1).
Mixture correlated_pair_mixture(double rho);

struct LabeledDataset {
    Matrix features;               // N x p
    Vector labels;                 // entries in {-1, +1}
    std::vector<int> train_index;
    std::vector<int> test_index;
};

// Bayesian logistic regression posterior over (w, log alpha):
//   y_i | w     ~ Bernoulli(sigmoid(y_i w.x_i))        (labels +-1)
//   w | alpha   ~ N(0, alpha^{-1} I)
//   alpha       ~ Gamma(1, 0.01)
// parameterized by t = log alpha with the change-of-variables term included.
// State dimension is p + 1.
class LogisticPosterior : public Target {
public:
    LogisticPosterior(std::shared_ptr<const LabeledDataset> data,
                      double prior_rate = 0.01);
    int dim() const override;
    double log_density_unnorm(const Vector& w_aug) const override;
    Vector score(const Vector& w_aug) const override;
    Matrix score_jacobian(const Vector& w_aug) const override;

    // Stochastic score with N/|batch| likelihood rescaling; the caller owns
    // the minibatch index selection. Indices address rows of the train split.
    Vector minibatch_score(const Vector& w_aug, const std::vector<int>& batch) const;
    Matrix minibatch_score_jacobian(const Vector& w_aug, const std::vector<int>& batch) const;

    const LabeledDataset& data() const { return *data_; }
    int num_train() const { return static_cast<int>(data_->train_index.size()); }

private:
    Vector score_impl(const Vector& w_aug, const std::vector<int>& batch, double scale) const;
    Matrix jacobian_impl(const Vector& w_aug, const std::vector<int>& batch, double scale) const;
    std::shared_ptr<const LabeledDataset> data_;
    double prior_rate_;
};

}  // namespace steinns::targets
