#include "steinns/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace steinns::kernels {

SteinKernel SteinKernel::rbf(double bandwidth_sq) {
    require(bandwidth_sq > 0.0, "rbf: bandwidth_sq must be positive");
    SteinKernel k;
    k.family_ = KernelFamily::Rbf;
    k.h_ = bandwidth_sq;
    return k;
}

SteinKernel SteinKernel::imq(double c, double beta) {
    require(c > 0.0, "imq: c must be positive");
    require(beta > -1.0 && beta < 0.0, "imq: beta must be in (-1, 0)");
    SteinKernel k;
    k.family_ = KernelFamily::Imq;
    k.c2_ = c * c;
    k.beta_ = beta;
    return k;
}

void SteinKernel::set_bandwidth_sq(double h) {
    require(family_ == KernelFamily::Rbf, "set_bandwidth_sq: only rbf has a bandwidth");
    require(h > 0.0, "set_bandwidth_sq: bandwidth must be positive");
    h_ = h;
}

double SteinKernel::phi(double s) const {
    if (family_ == KernelFamily::Rbf) return std::exp(-s / h_);
    return std::pow(c2_ + s, beta_);
}

double SteinKernel::phi1(double s) const {
    if (family_ == KernelFamily::Rbf) return -std::exp(-s / h_) / h_;
    return beta_ * std::pow(c2_ + s, beta_ - 1.0);
}

double SteinKernel::phi2(double s) const {
    if (family_ == KernelFamily::Rbf) return std::exp(-s / h_) / (h_ * h_);
    return beta_ * (beta_ - 1.0) * std::pow(c2_ + s, beta_ - 2.0);
}

double SteinKernel::phi3(double s) const {
    if (family_ == KernelFamily::Rbf) return -std::exp(-s / h_) / (h_ * h_ * h_);
    return beta_ * (beta_ - 1.0) * (beta_ - 2.0) * std::pow(c2_ + s, beta_ - 3.0);
}

double SteinKernel::eval(const Vector& x, const Vector& y) const {
    require(x.size() == y.size(), "kernel eval: dim mismatch");
    return phi((x - y).squaredNorm());
}

Vector SteinKernel::grad_x(const Vector& x, const Vector& y) const {
    require(x.size() == y.size(), "kernel grad: dim mismatch");
    Vector d = x - y;
    return 2.0 * phi1(d.squaredNorm()) * d;
}

Vector SteinKernel::grad_y(const Vector& x, const Vector& y) const {
    return -grad_x(x, y);
}

double SteinKernel::trace_xy(const Vector& x, const Vector& y) const {
    require(x.size() == y.size(), "kernel trace: dim mismatch");
    double s = (x - y).squaredNorm();
    double d = static_cast<double>(x.size());
    return -2.0 * d * phi1(s) - 4.0 * s * phi2(s);
}

void SteinKernel::grads_of_uq_terms(const Vector& x, const Vector& y, Matrix& dgrad_y,
                                    Vector& dtrace) const {
    require(x.size() == y.size(), "kernel third-order terms: dim mismatch");
    Vector diff = x - y;
    double s = diff.squaredNorm();
    double d = static_cast<double>(x.size());
    // grad_y k = -2 phi'(s) (x - y)
    dgrad_y = -2.0 * phi1(s) * Matrix::Identity(x.size(), x.size()) -
              4.0 * phi2(s) * (diff * diff.transpose());
    // trace_xy = -2 d phi'(s) - 4 s phi''(s)
    double coef = -2.0 * d * phi2(s) - 4.0 * phi2(s) - 4.0 * s * phi3(s);
    dtrace = 2.0 * coef * diff;
}

double median_heuristic(const Matrix& X) {
    const long n = X.rows();
    require(n >= 2, "median_heuristic: need at least 2 points");
    std::vector<double> dists;
    dists.reserve(static_cast<size_t>(n) * (n - 1) / 2);
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j)
            dists.push_back((X.row(i) - X.row(j)).norm());
    size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    double med = dists[mid];
    require(med > 0.0, "median_heuristic: zero median distance (all points identical)");
    return med * med / std::log(static_cast<double>(n) + 1.0);
}

}  // namespace steinns::kernels
