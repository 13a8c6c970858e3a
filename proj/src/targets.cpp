#include "steinns/targets.hpp"

#include <cmath>
#include <numbers>

namespace steinns::targets {

namespace {

double log_sigmoid(double z) {
    return z > 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

double sigmoid(double z) {
    return z > 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

Matrix standard_normal_matrix(int n, int d, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix Z(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) Z(i, j) = dist(rng);
    return Z;
}

}  // namespace

Matrix Target::sample(int, Rng&) const {
    throw std::runtime_error("target does not support exact sampling");
}

IsotropicGaussian::IsotropicGaussian(Vector mean, double variance)
    : mean_(std::move(mean)), variance_(variance) {
    require(variance_ > 0.0, "isotropic gaussian: variance must be positive");
    require(mean_.size() > 0, "isotropic gaussian: empty mean");
}

double IsotropicGaussian::log_density_unnorm(const Vector& x) const {
    require(x.size() == mean_.size(), "log_density: dim mismatch");
    return -(x - mean_).squaredNorm() / (2.0 * variance_);
}

Vector IsotropicGaussian::score(const Vector& x) const {
    require(x.size() == mean_.size(), "score: dim mismatch");
    return (mean_ - x) / variance_;
}

Matrix IsotropicGaussian::score_jacobian(const Vector& x) const {
    require(x.size() == mean_.size(), "score_jacobian: dim mismatch");
    return -Matrix::Identity(dim(), dim()) / variance_;
}

Matrix IsotropicGaussian::sample(int n, Rng& rng) const {
    Matrix Z = standard_normal_matrix(n, dim(), rng);
    return (std::sqrt(variance_) * Z).rowwise() + mean_.transpose();
}

Gaussian::Gaussian(Vector mean, Matrix covariance) : mean_(std::move(mean)) {
    require(mean_.size() > 0, "gaussian: empty mean");
    require(covariance.rows() == mean_.size() && covariance.cols() == mean_.size(),
            "gaussian: covariance shape mismatch");
    require(covariance.isApprox(covariance.transpose(), 1e-12),
            "gaussian: covariance must be symmetric");
    Eigen::LLT<Matrix> llt(covariance);
    require(llt.info() == Eigen::Success, "gaussian: covariance not positive definite");
    chol_lower_ = llt.matrixL();
    precision_ = llt.solve(Matrix::Identity(mean_.size(), mean_.size()));
    double log_det = 2.0 * chol_lower_.diagonal().array().log().sum();
    log_norm_const_ =
        -0.5 * (mean_.size() * std::log(2.0 * std::numbers::pi) + log_det);
}

double Gaussian::log_density_unnorm(const Vector& x) const {
    require(x.size() == mean_.size(), "log_density: dim mismatch");
    Vector d = x - mean_;
    return -0.5 * d.dot(precision_ * d);
}

double Gaussian::log_density_normalized(const Vector& x) const {
    return log_density_unnorm(x) + log_norm_const_;
}

Vector Gaussian::score(const Vector& x) const {
    require(x.size() == mean_.size(), "score: dim mismatch");
    return -precision_ * (x - mean_);
}

Matrix Gaussian::score_jacobian(const Vector& x) const {
    require(x.size() == mean_.size(), "score_jacobian: dim mismatch");
    return -precision_;
}

Matrix Gaussian::sample(int n, Rng& rng) const {
    Matrix Z = standard_normal_matrix(n, dim(), rng);
    return (Z * chol_lower_.transpose()).rowwise() + mean_.transpose();
}

Mixture::Mixture(std::vector<double> weights, std::vector<Gaussian> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
    require(!components_.empty(), "mixture: no components");
    require(weights_.size() == components_.size(), "mixture: weight/component count mismatch");
    double total = 0.0;
    for (double w : weights_) {
        require(w > 0.0, "mixture: weights must be positive");
        total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, "mixture: weights must sum to 1");
    for (const auto& c : components_)
        require(c.dim() == components_.front().dim(), "mixture: component dim mismatch");
}

int Mixture::dim() const { return components_.front().dim(); }

Vector Mixture::responsibilities(const Vector& x) const {
    const int K = static_cast<int>(components_.size());
    Vector logp(K);
    for (int k = 0; k < K; ++k)
        logp(k) = std::log(weights_[k]) + components_[k].log_density_normalized(x);
    double m = logp.maxCoeff();
    Vector r = (logp.array() - m).exp();
    return r / r.sum();
}

double Mixture::log_density_unnorm(const Vector& x) const {
    require(x.size() == dim(), "log_density: dim mismatch");
    const int K = static_cast<int>(components_.size());
    Vector logp(K);
    for (int k = 0; k < K; ++k)
        logp(k) = std::log(weights_[k]) + components_[k].log_density_normalized(x);
    double m = logp.maxCoeff();
    return m + std::log((logp.array() - m).exp().sum());
}

Vector Mixture::score(const Vector& x) const {
    require(x.size() == dim(), "score: dim mismatch");
    Vector r = responsibilities(x);
    Vector s = Vector::Zero(dim());
    for (size_t k = 0; k < components_.size(); ++k) s += r(k) * components_[k].score(x);
    return s;
}

Matrix Mixture::score_jacobian(const Vector& x) const {
    require(x.size() == dim(), "score_jacobian: dim mismatch");
    Vector r = responsibilities(x);
    Vector mix_score = Vector::Zero(dim());
    std::vector<Vector> comp_scores(components_.size());
    for (size_t k = 0; k < components_.size(); ++k) {
        comp_scores[k] = components_[k].score(x);
        mix_score += r(k) * comp_scores[k];
    }
    Matrix J = Matrix::Zero(dim(), dim());
    for (size_t k = 0; k < components_.size(); ++k) {
        Vector dev = comp_scores[k] - mix_score;
        J += r(k) * (components_[k].score_jacobian(x) + dev * dev.transpose());
    }
    return J;
}

Matrix Mixture::sample(int n, Rng& rng) const {
    std::discrete_distribution<int> pick(weights_.begin(), weights_.end());
    Matrix X(n, dim());
    for (int i = 0; i < n; ++i) {
        int k = pick(rng);
        X.row(i) = components_[k].sample(1, rng).row(0);
    }
    return X;
}

std::vector<Vector> Mixture::component_means() const {
    std::vector<Vector> means;
    for (const auto& c : components_) means.push_back(c.mean());
    return means;
}

Mixture ring_of_gaussians(double radius, double component_sd, int count) {
    require(radius > 0.0, "ring_of_gaussians: radius must be positive");
    require(component_sd > 0.0, "ring_of_gaussians: component sd must be positive");
    require(count >= 1, "ring_of_gaussians: count must be positive");
    std::vector<double> weights(count, 1.0 / count);
    std::vector<Gaussian> comps;
    Matrix cov = component_sd * component_sd * Matrix::Identity(2, 2);
    for (int k = 0; k < count; ++k) {
        double angle = 2.0 * std::numbers::pi * k / count;
        Vector mu(2);
        mu << radius * std::cos(angle), radius * std::sin(angle);
        comps.emplace_back(mu, cov);
    }
    return Mixture(std::move(weights), std::move(comps));
}

Mixture correlated_pair_mixture(double rho) {
    require(rho > 0.0 && rho < 1.0, "correlated_pair_mixture: rho must be in (0,1)");
    Matrix cp(2, 2), cm(2, 2);
    cp << 1.0, rho, rho, 1.0;
    cm << 1.0, -rho, -rho, 1.0;
    Vector zero = Vector::Zero(2);
    std::vector<Gaussian> comps;
    comps.emplace_back(zero, cp);
    comps.emplace_back(zero, cm);
    return Mixture({0.5, 0.5}, std::move(comps));
}

LogisticPosterior::LogisticPosterior(std::shared_ptr<const LabeledDataset> data,
                                     double prior_rate)
    : data_(std::move(data)), prior_rate_(prior_rate) {
    require(data_ != nullptr, "logistic posterior: null dataset");
    require(!data_->train_index.empty(), "logistic posterior: empty train split");
    require(prior_rate_ > 0.0, "logistic posterior: prior rate must be positive");
}

int LogisticPosterior::dim() const { return static_cast<int>(data_->features.cols()) + 1; }

double LogisticPosterior::log_density_unnorm(const Vector& w_aug) const {
    require(w_aug.size() == dim(), "log_density: dim mismatch");
    const int p = dim() - 1;
    Vector w = w_aug.head(p);
    double t = w_aug(p);
    double alpha = std::exp(t);
    double ll = 0.0;
    for (int idx : data_->train_index) {
        double z = data_->labels(idx) * data_->features.row(idx).dot(w);
        ll += log_sigmoid(z);
    }
    // N(0, alpha^{-1} I) prior on w, Gamma(1, rate) on alpha, log-Jacobian t.
    double lp = 0.5 * p * t - 0.5 * alpha * w.squaredNorm() - prior_rate_ * alpha + t;
    return ll + lp;
}

Vector LogisticPosterior::score_impl(const Vector& w_aug, const std::vector<int>& batch,
                                     double scale) const {
    require(w_aug.size() == dim(), "score: dim mismatch");
    const int p = dim() - 1;
    Vector w = w_aug.head(p);
    double t = w_aug(p);
    double alpha = std::exp(t);
    Vector g = Vector::Zero(dim());
    for (int idx : batch) {
        double y = data_->labels(idx);
        double z = y * data_->features.row(idx).dot(w);
        g.head(p) += y * sigmoid(-z) * data_->features.row(idx).transpose();
    }
    g.head(p) *= scale;
    g.head(p) -= alpha * w;
    g(p) = 0.5 * p - 0.5 * alpha * w.squaredNorm() - prior_rate_ * alpha + 1.0;
    return g;
}

Matrix LogisticPosterior::jacobian_impl(const Vector& w_aug, const std::vector<int>& batch,
                                        double scale) const {
    require(w_aug.size() == dim(), "score_jacobian: dim mismatch");
    const int p = dim() - 1;
    Vector w = w_aug.head(p);
    double t = w_aug(p);
    double alpha = std::exp(t);
    Matrix J = Matrix::Zero(dim(), dim());
    for (int idx : batch) {
        double y = data_->labels(idx);
        Vector xi = data_->features.row(idx).transpose();
        double z = y * xi.dot(w);
        double sp = sigmoid(z) * sigmoid(-z);
        J.topLeftCorner(p, p) -= scale * sp * (xi * xi.transpose());
    }
    J.topLeftCorner(p, p) -= alpha * Matrix::Identity(p, p);
    J.block(0, p, p, 1) = -alpha * w;
    J.block(p, 0, 1, p) = -alpha * w.transpose();
    J(p, p) = -0.5 * alpha * w.squaredNorm() - prior_rate_ * alpha;
    return J;
}

Vector LogisticPosterior::score(const Vector& w_aug) const {
    return score_impl(w_aug, data_->train_index, 1.0);
}

Matrix LogisticPosterior::score_jacobian(const Vector& w_aug) const {
    return jacobian_impl(w_aug, data_->train_index, 1.0);
}

Vector LogisticPosterior::minibatch_score(const Vector& w_aug,
                                          const std::vector<int>& batch) const {
    require(!batch.empty(), "minibatch_score: empty batch");
    double scale = static_cast<double>(num_train()) / batch.size();
    std::vector<int> rows;
    rows.reserve(batch.size());
    for (int b : batch) rows.push_back(data_->train_index.at(b));
    return score_impl(w_aug, rows, scale);
}

Matrix LogisticPosterior::minibatch_score_jacobian(const Vector& w_aug,
                                                   const std::vector<int>& batch) const {
    require(!batch.empty(), "minibatch_score_jacobian: empty batch");
    double scale = static_cast<double>(num_train()) / batch.size();
    std::vector<int> rows;
    rows.reserve(batch.size());
    for (int b : batch) rows.push_back(data_->train_index.at(b));
    return jacobian_impl(w_aug, rows, scale);
}

}  // namespace steinns::targets
