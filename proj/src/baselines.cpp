#include "steinns/baselines.hpp"

#include <cmath>

namespace steinns::baselines {

void svgd_step(const targets::Target& target, const kernels::SteinKernel& kernel,
               ParticleSet& particles, double step_size) {
    require(step_size >= 0.0, "svgd_step: step size must be nonnegative");
    Matrix& X = particles.positions;
    const long n = X.rows();
    const long d = X.cols();
    require(n >= 1, "svgd_step: empty particle set");
    require(d == target.dim(), "svgd_step: dim mismatch");

    Matrix S(n, d);
    for (long i = 0; i < n; ++i) S.row(i) = target.score(X.row(i).transpose()).transpose();

    Matrix phi = Matrix::Zero(n, d);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < n; ++j) {
            Vector diff = X.row(j) - X.row(i);  // grad in x_j of k(x_j, x_i)
            double s = diff.squaredNorm();
            double k = kernel.phi(s);
            phi.row(i) += k * S.row(j) + 2.0 * kernel.phi1(s) * diff.transpose();
        }
    }
    phi *= step_size / static_cast<double>(n);
    require(phi.allFinite(), "svgd_step: non-finite update");
    X += phi;
    particles.iteration += 1;
}

void svgd_step_adaptive(const targets::Target& target, ParticleSet& particles,
                        double step_size) {
    double h = particles.positions.rows() >= 2
                   ? kernels::median_heuristic(particles.positions)
                   : 1.0;
    svgd_step(target, kernels::SteinKernel::rbf(h), particles, step_size);
}

double sgld_step_size(int t) {
    require(t >= 0, "sgld: t must be nonnegative");
    return 0.1 / std::pow(t + 1.0, 0.55);
}

Vector sgld_step_with_score(const Vector& x, const Vector& score, int t, Rng& rng) {
    double eps = sgld_step_size(t);
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector xi(x.size());
    for (long i = 0; i < x.size(); ++i) xi(i) = dist(rng);
    Vector next = x + 0.5 * eps * score + std::sqrt(eps) * xi;
    require(next.allFinite(), "sgld_step: non-finite update");
    return next;
}

Vector sgld_step(const targets::Target& target, const Vector& x, int t, Rng& rng) {
    require(x.size() == target.dim(), "sgld_step: dim mismatch");
    return sgld_step_with_score(x, target.score(x), t, rng);
}

}  // namespace steinns::baselines
