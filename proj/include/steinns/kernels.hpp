#pragma once

#include "steinns/common.hpp"

namespace steinns::kernels {

enum class KernelFamily { Rbf, Imq };

// Radial kernels k(x,y) = phi(s), s = ||x-y||^2, with scalar radial
// derivatives phi', phi'', phi''' shared by both families. All spatial
// derivatives up to third order reduce to these.
class SteinKernel {
public:
    // rbf: exp(-s/h) with h = bandwidth_sq
    static SteinKernel rbf(double bandwidth_sq);
    // imq: (c^2 + s)^beta, c > 0, beta in (-1, 0)
    static SteinKernel imq(double c, double beta);

    KernelFamily family() const { return family_; }
    double bandwidth_sq() const { return h_; }
    void set_bandwidth_sq(double h);

    double phi(double s) const;
    double phi1(double s) const;
    double phi2(double s) const;
    double phi3(double s) const;

    double eval(const Vector& x, const Vector& y) const;
    Vector grad_x(const Vector& x, const Vector& y) const;
    Vector grad_y(const Vector& x, const Vector& y) const;
    // tr(d^2 k / dx dy)
    double trace_xy(const Vector& x, const Vector& y) const;
    // Third-order terms needed by the sample-gradient of the Stein kernel:
    //   dgrad_y: d x d matrix M, M(i,j) = d/dx_i [d k / dy_j]
    //   dtrace:  d-vector, gradient in x of trace_xy
    void grads_of_uq_terms(const Vector& x, const Vector& y, Matrix& dgrad_y,
                           Vector& dtrace) const;

private:
    SteinKernel() = default;
    KernelFamily family_ = KernelFamily::Rbf;
    double h_ = 1.0;     // rbf bandwidth_sq
    double c2_ = 1.0;    // imq c^2
    double beta_ = -0.5;
};

// h = med^2 / log(n+1), med = median pairwise Euclidean distance.
double median_heuristic(const Matrix& X);

}  // namespace steinns::kernels
