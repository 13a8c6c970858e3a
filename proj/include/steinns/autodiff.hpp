#pragma once

#include <functional>
#include <vector>

#include "steinns/common.hpp"

namespace steinns::autodiff {

// Operation set is deliberately small: exactly what MLP forward/backward and
// the training losses need. No broadcasting beyond the row-repeat used for
// batched Jacobian-vector products.
enum class Op {
    Input,
    Affine,       // X * W^T + 1 b   (parents: X, W, optional b)
    Tanh,
    TanhPrime,    // 1 - tanh(x)^2, as a primitive with its own derivative
    Relu,
    ReluPrime,    // indicator(x > 0); derivative zero a.e.
    Square,
    Hadamard,
    Sum,          // reduce all entries to a 1x1 scalar
    Scale,        // multiply by a fixed constant
    Add,
    RepeatRows,   // vertical tiling; backward sums the blocks
};

struct Node {
    int id = -1;
    Op op = Op::Input;
    std::vector<int> parents;
    Matrix value;
    double scalar = 1.0;  // Scale factor
    int repeat = 1;       // RepeatRows count
};

// Single-owner computation graph. Nodes are appended in topological order;
// parents always have smaller ids.
class Tape {
public:
    int input(Matrix value);
    int affine(int x, int w);          // no bias
    int affine(int x, int w, int b);   // b is a 1 x out row
    int tanh(int x);
    int tanh_prime(int x);
    int relu(int x);
    int relu_prime(int x);
    int square(int x);
    int hadamard(int a, int b);
    int sum(int x);
    int scale(int x, double s);
    int add(int a, int b);
    int repeat_rows(int x, int times);

    const Matrix& value(int id) const { return nodes_.at(id).value; }
    int size() const { return static_cast<int>(nodes_.size()); }

    // Reverse sweep from seed_node. seed must match the node's value shape
    // (a 1x1 seed for scalar nodes). Returns one gradient slot per node;
    // nodes unreachable from the seed hold an empty matrix.
    std::vector<Matrix> backward(int seed_node, const Matrix& seed) const;

private:
    int push(Node n);
    std::vector<Node> nodes_;
};

// Max over coordinates of |central difference - g_i| / (|g_i| + 1e-8).
// Test oracle; throws on non-finite f evaluations.
double finite_difference_check(const std::function<double(const Vector&)>& f,
                               const Vector& x, double step, const Vector& analytic_grad);

}  // namespace steinns::autodiff
