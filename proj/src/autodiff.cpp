// SPDX-License-Identifier: Apache-2.0
#include "pepbridge/autodiff.hpp"

#include <cmath>
#include <string>

#include "pepbridge/error.hpp"
#include "pepbridge/geom3.hpp"
#include "pepbridge/igso3.hpp"
#include "pepbridge/simd.hpp"
#include "pepbridge/torus.hpp"

namespace pepbridge::ad {

namespace {

void require(bool ok, const char* what) {
    if (!ok) fail(Errc::DimensionMismatch, what);
}

void same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows != b.rows || a.cols != b.cols)
        fail(Errc::DimensionMismatch, std::string(op) + ": shape " + std::to_string(a.rows) + "x" +
                                          std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                                          std::to_string(b.cols));
}

bool any_grad(Tape& t, std::initializer_list<Var> vs) {
    if (!t.recording()) return false;
    for (Var v : vs)
        if (t.needs_grad(v)) return true;
    return false;
}

Mat3 mat3_of(const double* p) {
    Mat3 m;
    for (int i = 0; i < 9; ++i) m.a[static_cast<std::size_t>(i)] = p[i];
    return m;
}

void store(const Mat3& m, double* p) {
    for (int i = 0; i < 9; ++i) p[i] = m.a[static_cast<std::size_t>(i)];
}

}  // namespace

Matrix Matrix::from_rows(int rows, int cols, std::span<const double> values) {
    if (values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        fail(Errc::DimensionMismatch, "matrix literal size mismatch");
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data.begin());
    return m;
}

// ---- ParamSet / Gradients ----

int ParamSet::add(std::string name, Matrix value) {
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return static_cast<int>(values_.size()) - 1;
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const Matrix& m : values_) n += m.size();
    return n;
}

std::vector<double> ParamSet::flatten() const {
    std::vector<double> flat;
    flat.reserve(scalar_count());
    for (const Matrix& m : values_) flat.insert(flat.end(), m.data.begin(), m.data.end());
    return flat;
}

void ParamSet::unflatten(std::span<const double> flat) {
    if (flat.size() != scalar_count()) fail(Errc::CountMismatch, "parameter count mismatch");
    std::size_t off = 0;
    for (Matrix& m : values_) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + m.size()), m.data.begin());
        off += m.size();
    }
}

Gradients::Gradients(const ParamSet& params) {
    grads_.reserve(static_cast<std::size_t>(params.size()));
    for (int i = 0; i < params.size(); ++i) grads_.emplace_back(params.value(i).rows, params.value(i).cols);
}

void Gradients::zero() {
    for (Matrix& g : grads_) std::fill(g.data.begin(), g.data.end(), 0.0);
}

void Gradients::add_scaled(const Gradients& other, double s) {
    for (std::size_t i = 0; i < grads_.size(); ++i)
        for (std::size_t k = 0; k < grads_[i].size(); ++k) grads_[i].data[k] += s * other.grads_[i].data[k];
}

void Gradients::scale(double s) {
    for (Matrix& g : grads_)
        for (double& x : g.data) x *= s;
}

double Gradients::squared_norm() const {
    double acc = 0.0;
    for (const Matrix& g : grads_)
        for (double x : g.data) acc += x * x;
    return acc;
}

// ---- Tape ----

const Matrix& Var::value() const { return tape->value(*this); }

Var Tape::push(Matrix value, bool needs_grad, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad && record_;
    if (n.needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::input(Matrix value) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = record_;
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(int index) {
    if (!params_ || index < 0 || index >= params_->size()) fail(Errc::InvalidArgument, "unknown parameter index");
    Node n;
    n.external = &params_->value(index);
    n.needs_grad = record_;
    n.param_index = index;
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::value(Var v) const {
    const Node& n = nodes_[static_cast<std::size_t>(v.id)];
    return n.external ? *n.external : n.value;
}

Matrix& Tape::grad_buffer(Var v) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (n.grad.size() == 0 && n.grad.rows == 0) {
        const Matrix& val = n.external ? *n.external : n.value;
        n.grad = Matrix(val.rows, val.cols);
    }
    return n.grad;
}

const Matrix& Tape::grad(Var v) { return grad_buffer(v); }

void Tape::backward(Var out) {
    if (!record_) fail(Errc::InvalidArgument, "backward on a non-recording tape");
    const Matrix& v = value(out);
    if (v.rows != 1 || v.cols != 1) fail(Errc::DimensionMismatch, "backward needs a scalar output");
    grad_buffer(out).data[0] += 1.0;
    for (int i = out.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.backward || n.grad.rows == 0) continue;
        // Copy: the closure may allocate buffers of other nodes.
        const Matrix g = n.grad;
        n.backward(*this, g);
    }
}

void Tape::add_param_grads(Gradients& grads) const {
    for (const Node& n : nodes_) {
        if (n.param_index < 0 || n.grad.rows == 0) continue;
        Matrix& dst = grads[n.param_index];
        for (std::size_t k = 0; k < dst.size(); ++k) dst.data[k] += n.grad.data[k];
    }
}

// ---- ops ----

Var matmul(Var a, Var b) {
    Tape& t = *a.tape;
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    require(av.cols == bv.rows, "matmul: inner dimensions differ");
    Matrix out(av.rows, bv.cols);
    simd::gemm_nn(av.data.data(), bv.data.data(), out.data.data(), av.rows, av.cols, bv.cols, false);
    return t.push(std::move(out), any_grad(t, {a, b}), [a, b](Tape& tp, const Matrix& g) {
        const Matrix& av = tp.value(a);
        const Matrix& bv = tp.value(b);
        if (tp.needs_grad(a))
            simd::gemm_nt(g.data.data(), bv.data.data(), tp.grad_buffer(a).data.data(), g.rows, g.cols, av.cols, true);
        if (tp.needs_grad(b))
            simd::gemm_tn(av.data.data(), g.data.data(), tp.grad_buffer(b).data.data(), av.rows, av.cols, g.cols, true);
    });
}

Var add_bias(Var a, Var bias) {
    Tape& t = *a.tape;
    const Matrix& av = a.value();
    const Matrix& bv = bias.value();
    require(bv.rows == 1 && bv.cols == av.cols, "add_bias: bias must be 1 x cols");
    Matrix out = av;
    for (int i = 0; i < out.rows; ++i) {
        double* r = out.row(i);
        for (int j = 0; j < out.cols; ++j) r[j] += bv.data[static_cast<std::size_t>(j)];
    }
    return t.push(std::move(out), any_grad(t, {a, bias}), [a, bias](Tape& tp, const Matrix& g) {
        if (tp.needs_grad(a)) {
            Matrix& ga = tp.grad_buffer(a);
            for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
        }
        if (tp.needs_grad(bias)) {
            Matrix& gb = tp.grad_buffer(bias);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) gb.data[static_cast<std::size_t>(j)] += g(i, j);
        }
    });
}

namespace {

template <typename F, typename DA, typename DB>
Var binary(Var a, Var b, const char* name, F f, DA da, DB db) {
    Tape& t = *a.tape;
    same_shape(a.value(), b.value(), name);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    Matrix out(av.rows, av.cols);
    for (std::size_t k = 0; k < out.size(); ++k) out.data[k] = f(av.data[k], bv.data[k]);
    return t.push(std::move(out), any_grad(t, {a, b}), [a, b, da, db](Tape& tp, const Matrix& g) {
        const Matrix& av = tp.value(a);
        const Matrix& bv = tp.value(b);
        if (tp.needs_grad(a)) {
            Matrix& ga = tp.grad_buffer(a);
            for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * da(av.data[k], bv.data[k]);
        }
        if (tp.needs_grad(b)) {
            Matrix& gb = tp.grad_buffer(b);
            for (std::size_t k = 0; k < g.size(); ++k) gb.data[k] += g.data[k] * db(av.data[k], bv.data[k]);
        }
    });
}

template <typename F, typename D>
Var unary(Var a, F f, D d) {
    Tape& t = *a.tape;
    const Matrix& av = a.value();
    Matrix out(av.rows, av.cols);
    for (std::size_t k = 0; k < out.size(); ++k) out.data[k] = f(av.data[k]);
    return t.push(std::move(out), any_grad(t, {a}), [a, d](Tape& tp, const Matrix& g) {
        const Matrix& av = tp.value(a);
        Matrix& ga = tp.grad_buffer(a);
        for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * d(av.data[k]);
    });
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Var add(Var a, Var b) {
    return binary(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
    return binary(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
    return binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Var scale(Var a, double s) {
    return unary(a, [s](double x) { return s * x; }, [s](double) { return s; });
}

Var silu(Var a) {
    return unary(
        a, [](double x) { return x * sigmoid(x); },
        [](double x) {
            const double s = sigmoid(x);
            return s * (1.0 + x * (1.0 - s));
        });
}

Var square(Var a) {
    return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var wrap(Var a) {
    return unary(a, [](double x) { return wrap_angle(x); }, [](double) { return 1.0; });
}

Var sum(Var a) {
    Tape& t = *a.tape;
    double s = 0.0;
    for (double x : a.value().data) s += x;
    Matrix out(1, 1, s);
    return t.push(std::move(out), any_grad(t, {a}), [a](Tape& tp, const Matrix& g) {
        Matrix& ga = tp.grad_buffer(a);
        for (double& x : ga.data) x += g.data[0];
    });
}

Var mean(Var a) {
    const std::size_t n = a.value().size();
    if (n == 0) fail(Errc::EmptyInput, "mean of an empty matrix");
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) fail(Errc::EmptyInput, "concat_cols of nothing");
    Tape& t = *parts[0].tape;
    const int rows = parts[0].rows();
    int cols = 0;
    bool grad = false;
    for (Var p : parts) {
        require(p.rows() == rows, "concat_cols: row counts differ");
        cols += p.cols();
        grad = grad || (t.recording() && t.needs_grad(p));
    }
    Matrix out(rows, cols);
    int off = 0;
    for (Var p : parts) {
        const Matrix& pv = p.value();
        for (int i = 0; i < rows; ++i) std::copy(pv.row(i), pv.row(i) + pv.cols, out.row(i) + off);
        off += pv.cols;
    }
    return t.push(std::move(out), grad, [parts](Tape& tp, const Matrix& g) {
        int off = 0;
        for (Var p : parts) {
            const int c = tp.value(p).cols;
            if (tp.needs_grad(p)) {
                Matrix& gp = tp.grad_buffer(p);
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < c; ++j) gp(i, j) += g(i, off + j);
            }
            off += c;
        }
    });
}

Var slice_cols(Var a, int start, int count) {
    Tape& t = *a.tape;
    const Matrix& av = a.value();
    require(start >= 0 && count >= 0 && start + count <= av.cols, "slice_cols: out of range");
    Matrix out(av.rows, count);
    for (int i = 0; i < av.rows; ++i) std::copy(av.row(i) + start, av.row(i) + start + count, out.row(i));
    return t.push(std::move(out), any_grad(t, {a}), [a, start, count](Tape& tp, const Matrix& g) {
        Matrix& ga = tp.grad_buffer(a);
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < count; ++j) ga(i, start + j) += g(i, j);
    });
}

Var gather_rows(Var a, std::vector<int> index) {
    Tape& t = *a.tape;
    const Matrix& av = a.value();
    Matrix out(static_cast<int>(index.size()), av.cols);
    for (std::size_t e = 0; e < index.size(); ++e) {
        require(index[e] >= 0 && index[e] < av.rows, "gather_rows: index out of range");
        std::copy(av.row(index[e]), av.row(index[e]) + av.cols, out.row(static_cast<int>(e)));
    }
    return t.push(std::move(out), any_grad(t, {a}), [a, index = std::move(index)](Tape& tp, const Matrix& g) {
        Matrix& ga = tp.grad_buffer(a);
        for (std::size_t e = 0; e < index.size(); ++e) {
            double* dst = ga.row(index[e]);
            const double* src = g.row(static_cast<int>(e));
            for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
        }
    });
}

Var scatter_sum_rows(Var a, std::vector<int> index, int rows) {
    Tape& t = *a.tape;
    const Matrix& av = a.value();
    require(static_cast<int>(index.size()) == av.rows, "scatter_sum_rows: one index per row");
    Matrix out(rows, av.cols);
    for (std::size_t e = 0; e < index.size(); ++e) {
        require(index[e] >= 0 && index[e] < rows, "scatter_sum_rows: index out of range");
        double* dst = out.row(index[e]);
        const double* src = av.row(static_cast<int>(e));
        for (int j = 0; j < av.cols; ++j) dst[j] += src[j];
    }
    return t.push(std::move(out), any_grad(t, {a}), [a, index = std::move(index)](Tape& tp, const Matrix& g) {
        Matrix& ga = tp.grad_buffer(a);
        for (std::size_t e = 0; e < index.size(); ++e) {
            const double* src = g.row(index[e]);
            double* dst = ga.row(static_cast<int>(e));
            for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
        }
    });
}

Var rowdot_heads(Var a, Var b, int heads) {
    Tape& t = *a.tape;
    same_shape(a.value(), b.value(), "rowdot_heads");
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    require(heads > 0 && av.cols % heads == 0, "rowdot_heads: columns not divisible by heads");
    const int w = av.cols / heads;
    Matrix out(av.rows, heads);
    for (int i = 0; i < av.rows; ++i)
        for (int h = 0; h < heads; ++h) {
            double s = 0.0;
            for (int j = h * w; j < (h + 1) * w; ++j) s += av(i, j) * bv(i, j);
            out(i, h) = s;
        }
    return t.push(std::move(out), any_grad(t, {a, b}), [a, b, w](Tape& tp, const Matrix& g) {
        const Matrix& av = tp.value(a);
        const Matrix& bv = tp.value(b);
        const bool ga_on = tp.needs_grad(a), gb_on = tp.needs_grad(b);
        Matrix* ga = ga_on ? &tp.grad_buffer(a) : nullptr;
        Matrix* gb = gb_on ? &tp.grad_buffer(b) : nullptr;
        for (int i = 0; i < av.rows; ++i)
            for (int j = 0; j < av.cols; ++j) {
                const double gh = g(i, j / w);
                if (ga) (*ga)(i, j) += gh * bv(i, j);
                if (gb) (*gb)(i, j) += gh * av(i, j);
            }
    });
}

Var row_norm(Var a) {
    Tape& t = *a.tape;
    const Matrix& av = a.value();
    Matrix out(av.rows, 1);
    for (int i = 0; i < av.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < av.cols; ++j) s += av(i, j) * av(i, j);
        out(i, 0) = std::sqrt(s);
    }
    Matrix norms = out;
    return t.push(std::move(out), any_grad(t, {a}), [a, norms = std::move(norms)](Tape& tp, const Matrix& g) {
        const Matrix& av = tp.value(a);
        Matrix& ga = tp.grad_buffer(a);
        for (int i = 0; i < av.rows; ++i) {
            const double n = norms(i, 0);
            if (n == 0.0) continue;
            for (int j = 0; j < av.cols; ++j) ga(i, j) += g(i, 0) * av(i, j) / n;
        }
    });
}

Var rbf(Var x, std::vector<double> centers, double width) {
    Tape& t = *x.tape;
    const Matrix& xv = x.value();
    require(xv.cols == 1, "rbf: input must be a column");
    const int k = static_cast<int>(centers.size());
    Matrix out(xv.rows, k);
    for (int i = 0; i < xv.rows; ++i)
        for (int c = 0; c < k; ++c) {
            const double z = (xv(i, 0) - centers[static_cast<std::size_t>(c)]) / width;
            out(i, c) = std::exp(-z * z);
        }
    Matrix vals = out;
    return t.push(std::move(out), any_grad(t, {x}),
                  [x, centers = std::move(centers), width, vals = std::move(vals)](Tape& tp, const Matrix& g) {
                      const Matrix& xv = tp.value(x);
                      Matrix& gx = tp.grad_buffer(x);
                      for (int i = 0; i < xv.rows; ++i)
                          for (std::size_t c = 0; c < centers.size(); ++c) {
                              const double z = (xv(i, 0) - centers[c]) / width;
                              gx(i, 0) += g(i, static_cast<int>(c)) * vals(i, static_cast<int>(c)) * (-2.0 * z / width);
                          }
                  });
}

namespace {

// R = I + A hat(u) + B hat(u)^2 and the radial derivatives A'/theta, B'/theta.
struct ExpCoefficients {
    double a, b, da, db;
};

ExpCoefficients exp_coefficients(double theta) {
    const double t2 = theta * theta;
    if (theta < 1e-3) {
        return {1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0, -1.0 / 3.0 + t2 / 30.0,
                -1.0 / 12.0 + t2 / 180.0};
    }
    const double s = std::sin(theta), c = std::cos(theta);
    return {s / theta, (1.0 - c) / t2, (theta * c - s) / (t2 * theta), (theta * s - 2.0 * (1.0 - c)) / (t2 * t2)};
}

}  // namespace

Var so3_exp_rows(Var u) {
    Tape& t = *u.tape;
    const Matrix& uv = u.value();
    require(uv.cols == 3, "so3_exp_rows: rows must be 3-vectors");
    Matrix out(uv.rows, 9);
    for (int i = 0; i < uv.rows; ++i) store(so3_exp({{uv(i, 0), uv(i, 1), uv(i, 2)}}).matrix(), out.row(i));
    return t.push(std::move(out), any_grad(t, {u}), [u](Tape& tp, const Matrix& g) {
        const Matrix& uv = tp.value(u);
        Matrix& gu = tp.grad_buffer(u);
        for (int i = 0; i < uv.rows; ++i) {
            const Vec3 v{uv(i, 0), uv(i, 1), uv(i, 2)};
            const double theta = norm(v);
            const ExpCoefficients c = exp_coefficients(theta);
            const Mat3 h = hat(v);
            const Mat3 h2 = h * h;
            const Mat3 gm = mat3_of(g.row(i));
            for (int k = 0; k < 3; ++k) {
                Vec3 e;
                e[k] = 1.0;
                const Mat3 hk = hat(e);
                const Mat3 d = (c.da * v[k]) * h + c.a * hk + (c.db * v[k]) * h2 + c.b * (hk * h + h * hk);
                double s = 0.0;
                for (int q = 0; q < 9; ++q) s += gm.a[static_cast<std::size_t>(q)] * d.a[static_cast<std::size_t>(q)];
                gu(i, k) += s;
            }
        }
    });
}

Var rot_apply_rows(Var r, Var v) {
    Tape& t = *r.tape;
    const Matrix& rv = r.value();
    const Matrix& vv = v.value();
    require(rv.cols == 9 && vv.cols == 3 && rv.rows == vv.rows, "rot_apply_rows: shapes");
    Matrix out(vv.rows, 3);
    for (int i = 0; i < vv.rows; ++i)
        for (int a = 0; a < 3; ++a) out(i, a) = rv(i, 3 * a) * vv(i, 0) + rv(i, 3 * a + 1) * vv(i, 1) + rv(i, 3 * a + 2) * vv(i, 2);
    return t.push(std::move(out), any_grad(t, {r, v}), [r, v](Tape& tp, const Matrix& g) {
        const Matrix& rv = tp.value(r);
        const Matrix& vv = tp.value(v);
        Matrix* gr = tp.needs_grad(r) ? &tp.grad_buffer(r) : nullptr;
        Matrix* gv = tp.needs_grad(v) ? &tp.grad_buffer(v) : nullptr;
        for (int i = 0; i < vv.rows; ++i)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    if (gr) (*gr)(i, 3 * a + b) += g(i, a) * vv(i, b);
                    if (gv) (*gv)(i, b) += rv(i, 3 * a + b) * g(i, a);
                }
    });
}

Var rot_mul_rows(Var a, Var b) {
    Tape& t = *a.tape;
    same_shape(a.value(), b.value(), "rot_mul_rows");
    require(a.value().cols == 9, "rot_mul_rows: rows must be 3x3 matrices");
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    Matrix out(av.rows, 9);
    for (int i = 0; i < av.rows; ++i) store(mat3_of(av.row(i)) * mat3_of(bv.row(i)), out.row(i));
    return t.push(std::move(out), any_grad(t, {a, b}), [a, b](Tape& tp, const Matrix& g) {
        const Matrix& av = tp.value(a);
        const Matrix& bv = tp.value(b);
        Matrix* ga = tp.needs_grad(a) ? &tp.grad_buffer(a) : nullptr;
        Matrix* gb = tp.needs_grad(b) ? &tp.grad_buffer(b) : nullptr;
        for (int i = 0; i < av.rows; ++i) {
            const Mat3 gm = mat3_of(g.row(i));
            if (ga) {
                const Mat3 d = gm * transpose(mat3_of(bv.row(i)));
                for (int q = 0; q < 9; ++q) (*ga)(i, q) += d.a[static_cast<std::size_t>(q)];
            }
            if (gb) {
                const Mat3 d = transpose(mat3_of(av.row(i))) * gm;
                for (int q = 0; q < 9; ++q) (*gb)(i, q) += d.a[static_cast<std::size_t>(q)];
            }
        }
    });
}

Var igso3_score_rows(Var r0_hat, const Matrix& rt, double t) {
    Tape& tp = *r0_hat.tape;
    const Matrix& rv = r0_hat.value();
    require(rv.cols == 9 && rt.cols == 9 && rt.rows == rv.rows, "igso3_score_rows: shapes");
    Matrix out(rv.rows, 3);
    for (int i = 0; i < rv.rows; ++i) {
        const Mat3 q = transpose(mat3_of(rv.row(i))) * mat3_of(rt.row(i));
        const Vec3 v = so3_log(Rotation(q)).v;
        const double kappa = igso3_score_coefficients(norm(v), t).kappa;
        for (int k = 0; k < 3; ++k) out(i, k) = kappa * v[k];
    }
    return tp.push(std::move(out), any_grad(tp, {r0_hat}), [r0_hat, rt, t](Tape& tape, const Matrix& g) {
        const Matrix& rv = tape.value(r0_hat);
        Matrix& gr = tape.grad_buffer(r0_hat);
        for (int i = 0; i < rv.rows; ++i) {
            const Mat3 rti = mat3_of(rt.row(i));
            const Mat3 q = transpose(mat3_of(rv.row(i))) * rti;
            const Vec3 v = so3_log(Rotation(q)).v;
            const double w = norm(v);
            const Igso3ScoreCoefficients c = igso3_score_coefficients(w, t);
            const Vec3 gi{g(i, 0), g(i, 1), g(i, 2)};
            // d score = (kappa I + kappa' v v^T / w) dv, dv = Jr^{-1}(v) delta for q -> q exp(delta).
            Vec3 m = gi * c.kappa;
            if (w > 0.0) m += v * (c.dkappa * dot(v, gi) / w);
            double jc;
            if (w < 1e-4) {
                jc = 1.0 / 12.0 + w * w / 720.0;
            } else {
                jc = 1.0 / (w * w) - std::cos(0.5 * w) / std::sin(0.5 * w) / (2.0 * w);
            }
            const Mat3 h = hat(v);
            // Jr^{-T} = I - hat(v)/2 + jc hat(v)^2.
            const Vec3 wv = m - 0.5 * (h * m) + jc * (h * (h * m));
            const Mat3 d = -0.5 * (rti * hat(wv) * transpose(q));
            for (int k = 0; k < 9; ++k) gr(i, k) += d.a[static_cast<std::size_t>(k)];
        }
    });
}

}  // namespace pepbridge::ad
