#include "steinns/autodiff.hpp"

#include <cmath>

namespace steinns::autodiff {

int Tape::push(Node n) {
    n.id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(n));
    return nodes_.back().id;
}

int Tape::input(Matrix value) {
    Node n;
    n.op = Op::Input;
    n.value = std::move(value);
    return push(std::move(n));
}

int Tape::affine(int x, int w) {
    const Matrix& X = value(x);
    const Matrix& W = value(w);
    require(X.cols() == W.cols(),
            "affine: input " + shape_str(X) + " incompatible with weight " + shape_str(W));
    Node n;
    n.op = Op::Affine;
    n.parents = {x, w};
    n.value = X * W.transpose();
    return push(std::move(n));
}

int Tape::affine(int x, int w, int b) {
    const Matrix& X = value(x);
    const Matrix& W = value(w);
    const Matrix& B = value(b);
    require(X.cols() == W.cols(),
            "affine: input " + shape_str(X) + " incompatible with weight " + shape_str(W));
    require(B.rows() == 1 && B.cols() == W.rows(),
            "affine: bias " + shape_str(B) + " incompatible with weight " + shape_str(W));
    Node n;
    n.op = Op::Affine;
    n.parents = {x, w, b};
    n.value = (X * W.transpose()).rowwise() + B.row(0);
    return push(std::move(n));
}

int Tape::tanh(int x) {
    Node n;
    n.op = Op::Tanh;
    n.parents = {x};
    n.value = value(x).array().tanh();
    return push(std::move(n));
}

int Tape::tanh_prime(int x) {
    Node n;
    n.op = Op::TanhPrime;
    n.parents = {x};
    n.value = 1.0 - value(x).array().tanh().square();
    return push(std::move(n));
}

int Tape::relu(int x) {
    Node n;
    n.op = Op::Relu;
    n.parents = {x};
    n.value = value(x).array().max(0.0);
    return push(std::move(n));
}

int Tape::relu_prime(int x) {
    Node n;
    n.op = Op::ReluPrime;
    n.parents = {x};
    n.value = (value(x).array() > 0.0).cast<double>();
    return push(std::move(n));
}

int Tape::square(int x) {
    Node n;
    n.op = Op::Square;
    n.parents = {x};
    n.value = value(x).array().square();
    return push(std::move(n));
}

int Tape::hadamard(int a, int b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require(A.rows() == B.rows() && A.cols() == B.cols(),
            "hadamard: shape mismatch " + shape_str(A) + " vs " + shape_str(B));
    Node n;
    n.op = Op::Hadamard;
    n.parents = {a, b};
    n.value = A.array() * B.array();
    return push(std::move(n));
}

int Tape::sum(int x) {
    Node n;
    n.op = Op::Sum;
    n.parents = {x};
    n.value = Matrix::Constant(1, 1, value(x).sum());
    return push(std::move(n));
}

int Tape::scale(int x, double s) {
    Node n;
    n.op = Op::Scale;
    n.parents = {x};
    n.scalar = s;
    n.value = s * value(x);
    return push(std::move(n));
}

int Tape::add(int a, int b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require(A.rows() == B.rows() && A.cols() == B.cols(),
            "add: shape mismatch " + shape_str(A) + " vs " + shape_str(B));
    Node n;
    n.op = Op::Add;
    n.parents = {a, b};
    n.value = A + B;
    return push(std::move(n));
}

int Tape::repeat_rows(int x, int times) {
    require(times >= 1, "repeat_rows: times must be >= 1");
    const Matrix& X = value(x);
    Node n;
    n.op = Op::RepeatRows;
    n.parents = {x};
    n.repeat = times;
    n.value.resize(X.rows() * times, X.cols());
    for (int t = 0; t < times; ++t) n.value.middleRows(t * X.rows(), X.rows()) = X;
    return push(std::move(n));
}

std::vector<Matrix> Tape::backward(int seed_node, const Matrix& seed) const {
    require(seed_node >= 0 && seed_node < size(), "backward: seed node out of range");
    const Matrix& sv = nodes_[seed_node].value;
    require(seed.rows() == sv.rows() && seed.cols() == sv.cols(),
            "backward: seed shape " + shape_str(seed) + " does not match node " + shape_str(sv));

    std::vector<Matrix> grad(nodes_.size());
    auto accum = [&](int id, const Matrix& g) {
        if (grad[id].size() == 0)
            grad[id] = g;
        else
            grad[id] += g;
    };
    grad[seed_node] = seed;

    for (int id = seed_node; id >= 0; --id) {
        const Node& n = nodes_[id];
        if (grad[id].size() == 0) continue;
        const Matrix& g = grad[id];
        switch (n.op) {
            case Op::Input:
                break;
            case Op::Affine: {
                const Matrix& X = nodes_[n.parents[0]].value;
                const Matrix& W = nodes_[n.parents[1]].value;
                accum(n.parents[0], g * W);
                accum(n.parents[1], g.transpose() * X);
                if (n.parents.size() == 3) accum(n.parents[2], g.colwise().sum());
                break;
            }
            case Op::Tanh:
                accum(n.parents[0], (g.array() * (1.0 - n.value.array().square())).matrix());
                break;
            case Op::TanhPrime: {
                Eigen::ArrayXXd t = nodes_[n.parents[0]].value.array().tanh();
                accum(n.parents[0], (g.array() * (-2.0 * t * (1.0 - t.square()))).matrix());
                break;
            }
            case Op::Relu: {
                const Matrix& X = nodes_[n.parents[0]].value;
                accum(n.parents[0], (g.array() * (X.array() > 0.0).cast<double>()).matrix());
                break;
            }
            case Op::ReluPrime:
                break;  // zero derivative a.e.
            case Op::Square:
                accum(n.parents[0], (g.array() * 2.0 * nodes_[n.parents[0]].value.array()).matrix());
                break;
            case Op::Hadamard:
                accum(n.parents[0], (g.array() * nodes_[n.parents[1]].value.array()).matrix());
                accum(n.parents[1], (g.array() * nodes_[n.parents[0]].value.array()).matrix());
                break;
            case Op::Sum: {
                const Matrix& X = nodes_[n.parents[0]].value;
                accum(n.parents[0], Matrix::Constant(X.rows(), X.cols(), g(0, 0)));
                break;
            }
            case Op::Scale:
                accum(n.parents[0], n.scalar * g);
                break;
            case Op::Add:
                accum(n.parents[0], g);
                accum(n.parents[1], g);
                break;
            case Op::RepeatRows: {
                const Matrix& X = nodes_[n.parents[0]].value;
                Matrix acc = Matrix::Zero(X.rows(), X.cols());
                for (int t = 0; t < n.repeat; ++t) acc += g.middleRows(t * X.rows(), X.rows());
                accum(n.parents[0], acc);
                break;
            }
        }
    }
    return grad;
}

double finite_difference_check(const std::function<double(const Vector&)>& f,
                               const Vector& x, double step, const Vector& analytic_grad) {
    require(step > 0.0, "finite_difference_check: step must be positive");
    require(x.size() == analytic_grad.size(), "finite_difference_check: gradient size mismatch");
    double worst = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp(i) += step;
        xm(i) -= step;
        double fp = f(xp), fm = f(xm);
        require(std::isfinite(fp) && std::isfinite(fm),
                "finite_difference_check: non-finite function value");
        double fd = (fp - fm) / (2.0 * step);
        double err = std::abs(fd - analytic_grad(i)) / (std::abs(analytic_grad(i)) + 1e-8);
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace steinns::autodiff
