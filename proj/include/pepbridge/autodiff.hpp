// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pepbridge::ad {

/// Dense row-major matrix of doubles.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
    double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
    std::size_t size() const { return data.size(); }

    static Matrix from_rows(int rows, int cols, std::span<const double> values);
    bool operator==(const Matrix&) const = default;
};

/// Named trainable tensors in declaration order.
class ParamSet {
public:
    int add(std::string name, Matrix value);
    int size() const { return static_cast<int>(values_.size()); }
    const std::string& name(int i) const { return names_[static_cast<std::size_t>(i)]; }
    Matrix& value(int i) { return values_[static_cast<std::size_t>(i)]; }
    const Matrix& value(int i) const { return values_[static_cast<std::size_t>(i)]; }
    std::size_t scalar_count() const;

    /// Flat copy of every value in declaration order.
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> flat);

private:
    std::vector<std::string> names_;
    std::vector<Matrix> values_;
};

/// Per-parameter gradient buffers aligned with a ParamSet.
class Gradients {
public:
    explicit Gradients(const ParamSet& params);
    Matrix& operator[](int i) { return grads_[static_cast<std::size_t>(i)]; }
    const Matrix& operator[](int i) const { return grads_[static_cast<std::size_t>(i)]; }
    int size() const { return static_cast<int>(grads_.size()); }
    void zero();
    /// this += s * other
    void add_scaled(const Gradients& other, double s);
    void scale(double s);
    double squared_norm() const;

private:
    std::vector<Matrix> grads_;
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Matrix& value() const;
    int rows() const { return value().rows; }
    int cols() const { return value().cols; }
    double scalar() const { return value().data.at(0); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order and
/// differentiated in reverse. When `record` is false no backward closures are
/// kept (inference only).
class Tape {
public:
    explicit Tape(const ParamSet* params = nullptr, bool record = true) : params_(params), record_(record) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    /// Leaf that reads parameter `index` of the bound ParamSet without copying.
    Var param(int index);
    /// Leaf treated as an input whose gradient is wanted (for checks).
    Var input(Matrix value);

    const Matrix& value(Var v) const;
    /// Gradient buffer of a node after backward(); zeros if it received none.
    const Matrix& grad(Var v);

    /// Seeds d(out)/d(out) = 1 for a 1x1 node and runs all backward closures.
    void backward(Var out);
    /// Adds gradients of parameter leaves into `grads`.
    void add_param_grads(Gradients& grads) const;

    bool recording() const { return record_; }

    // Used by op implementations.
    using Backward = std::function<void(Tape&, const Matrix& out_grad)>;
    Var push(Matrix value, bool needs_grad, Backward backward);
    bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }
    /// Gradient accumulator for v, allocated on first use.
    Matrix& grad_buffer(Var v);
    const Matrix& grad_of(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

private:
    struct Node {
        Matrix value;
        const Matrix* external = nullptr;
        Matrix grad;
        bool needs_grad = false;
        int param_index = -1;
        Backward backward;
    };
    const ParamSet* params_;
    bool record_;
    std::vector<Node> nodes_;
};

// ---- operations ----

Var matmul(Var a, Var b);
/// a [m x n] + bias [1 x n] broadcast over rows.
Var add_bias(Var a, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var silu(Var a);
Var square(Var a);
/// Elementwise wrap to [-pi, pi); derivative taken as 1.
Var wrap(Var a);
Var sum(Var a);
Var mean(Var a);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, int start, int count);
/// out[e] = a[index[e]]
Var gather_rows(Var a, std::vector<int> index);
/// out[index[e]] += a[e], out has `rows` rows.
Var scatter_sum_rows(Var a, std::vector<int> index, int rows);
/// Row-wise dot products split into `heads` equal column groups: [E x heads].
Var rowdot_heads(Var a, Var b, int heads);
/// Euclidean norm of each row: [E x 1]. Gradient is zero at a zero row.
Var row_norm(Var a);
/// Gaussian radial basis exp(-((x - c_k) / width)^2) of a column vector: [E x K].
Var rbf(Var x, std::vector<double> centers, double width);
/// Rows of axis-angle vectors [n x 3] -> rows of row-major rotation matrices [n x 9].
Var so3_exp_rows(Var u);
/// Per-row R v: R [n x 9], v [n x 3] -> [n x 3].
Var rot_apply_rows(Var r, Var v);
/// Per-row A B: [n x 9] each.
Var rot_mul_rows(Var a, Var b);
/// IGSO(3) conditional score of each rt given predicted r0 = rows of r0_hat
/// (rotation matrices), in the body frame of rt: kappa(w) log(r0^T rt).
Var igso3_score_rows(Var r0_hat, const Matrix& rt, double t);

}  // namespace pepbridge::ad
