#include "vdt/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace vdt {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapC = Eigen::Map<const MatRM>;

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<double> values) {
    auto n = std::make_shared<TensorNode>();
    if (shape_numel(shape) != static_cast<int64_t>(values.size()))
        throw DimensionError("tensor: shape " + shape_str(shape) + " does not match " +
                             std::to_string(values.size()) + " values");
    n->shape = std::move(shape);
    n->values = std::move(values);
    return n;
}

// Wires a fresh output node to its parents; the backward closure is only
// attached when some parent actually requires grad.
Tensor make_result(Shape shape, std::vector<double> values,
                   std::vector<Tensor> parents,
                   std::function<void(TensorNode&)> backward_fn) {
    auto n = make_node(std::move(shape), std::move(values));
    bool rg = false;
    for (const auto& p : parents) rg = rg || p.requires_grad();
    n->requires_grad = rg;
    if (rg) {
        n->parents.reserve(parents.size());
        for (const auto& p : parents) n->parents.push_back(p.node());
        n->backward_fn = std::move(backward_fn);
    }
    return Tensor::wrap(n);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
}

struct AxisView {
    int64_t outer, len, inner;
};

AxisView axis_view(const Shape& s, int axis) {
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw DimensionError("axis " + std::to_string(axis) + " invalid for shape " + shape_str(s));
    AxisView v{1, s[axis], 1};
    for (int i = 0; i < axis; ++i) v.outer *= s[i];
    for (size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
    return v;
}

// Splits a shape into [rows x last] for the *_vec_last / slice ops.
std::pair<int64_t, int64_t> rows_last(const Shape& s) {
    if (s.empty()) throw DimensionError("expected rank >= 1 tensor");
    int64_t last = s.back();
    int64_t rows = 1;
    for (size_t i = 0; i + 1 < s.size(); ++i) rows *= s[i];
    return {rows, last};
}

}  // namespace

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) {
        if (d <= 0) throw DimensionError("non-positive extent in shape " + shape_str(s));
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? " x " : "") << s[i];
    os << "]";
    return os.str();
}

Tensor Tensor::zeros(Shape shape) {
    auto n = shape_numel(shape);
    return wrap(make_node(std::move(shape), std::vector<double>(n, 0.0)));
}

Tensor Tensor::full(Shape shape, double v) {
    auto n = shape_numel(shape);
    return wrap(make_node(std::move(shape), std::vector<double>(n, v)));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
    return wrap(make_node(std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor Tensor::wrap(std::shared_ptr<TensorNode> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
}

double Tensor::value() const {
    if (numel() != 1) throw ContractError("value(): tensor is not scalar, shape " + shape_str(shape()));
    return node_->values[0];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
    if (idx.size() != rank()) throw DimensionError("at(): index rank mismatch");
    int64_t flat = 0;
    size_t i = 0;
    for (int64_t v : idx) {
        flat = flat * node_->shape[i] + v;
        ++i;
    }
    return node_->values[flat];
}

Tensor& Tensor::set_requires_grad(bool rg) {
    node_->requires_grad = rg;
    return *this;
}

const std::vector<double>& Tensor::grad() const {
    if (node_->grad.empty()) throw ContractError("grad(): no gradient populated");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

OpGraph OpGraph::build(const Tensor& root) {
    OpGraph g;
    std::unordered_set<TensorNode*> visited;
    // iterative post-order DFS over grad-requiring nodes; order ends up
    // leaves-first, root last
    std::vector<std::pair<TensorNode*, size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    visited.insert(root.node().get());
    std::vector<TensorNode*> post;
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorNode* p = node->parents[next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            post.push_back(node);
            stack.pop_back();
        }
    }
    // backward wants root first
    g.order.assign(post.rbegin(), post.rend());
    return g;
}

void backward(const Tensor& loss) {
    if (loss.numel() != 1)
        throw ContractError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    if (!loss.requires_grad())
        throw ContractError("backward: loss is not connected to any requires_grad leaf");
    OpGraph g = OpGraph::build(loss);
    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;
    for (TensorNode* n : g.order) {
        if (n->backward_fn) n->backward_fn(*n);
    }
    for (TensorNode* n : g.order) {
        if (!n->is_leaf() || !n->requires_grad) continue;
        double acc = 0.0;
        for (double v : n->grad) acc += v;
        if (!std::isfinite(acc))
            throw ContractError("backward: non-finite gradient on a leaf of shape " +
                                shape_str(n->shape));
    }
}

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a.values().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    auto an = a.node(), bn = b.node();
    return make_result(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a.values().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
    auto an = a.node(), bn = b.node();
    return make_result(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a.values().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    auto an = a.node(), bn = b.node();
    return make_result(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += bn->values[i] * self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += an->values[i] * self.grad[i];
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.values().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = c * a.values()[i];
    auto an = a.node();
    return make_result(a.shape(), std::move(out), {a}, [an, c](TensorNode& self) {
        an->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += c * self.grad[i];
    });
}

Tensor add_scalar(const Tensor& a, double c) {
    std::vector<double> out(a.values().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + c;
    auto an = a.node();
    return make_result(a.shape(), std::move(out), {a}, [an](TensorNode& self) {
        an->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    });
}

Tensor scale_by(const Tensor& x, const Tensor& s) {
    if (s.numel() != 1) throw DimensionError("scale_by: scale must be scalar, got " + shape_str(s.shape()));
    double sv = s.values()[0];
    std::vector<double> out(x.values().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = sv * x.values()[i];
    auto xn = x.node(), sn = s.node();
    return make_result(x.shape(), std::move(out), {x, s}, [xn, sn, sv](TensorNode& self) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += sv * self.grad[i];
        }
        if (sn->requires_grad) {
            sn->ensure_grad();
            double acc = 0.0;
            for (size_t i = 0; i < self.grad.size(); ++i) acc += xn->values[i] * self.grad[i];
            sn->grad[0] += acc;
        }
    });
}

// ---- unary nonlinearities --------------------------------------------------

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Tensor gelu(const Tensor& x) {
    std::vector<double> out(x.values().size());
    for (size_t i = 0; i < out.size(); ++i) {
        double v = x.values()[i];
        out[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    }
    auto xn = x.node();
    return make_result(x.shape(), std::move(out), {x}, [xn](TensorNode& self) {
        xn->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            double v = xn->values[i];
            double d = 0.5 * (1.0 + std::erf(v * kInvSqrt2)) +
                       v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
            xn->grad[i] += d * self.grad[i];
        }
    });
}

Tensor sigmoid(const Tensor& x) {
    std::vector<double> out(x.values().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x.values()[i]));
    auto xn = x.node();
    return make_result(x.shape(), std::move(out), {x}, [xn](TensorNode& self) {
        xn->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            double s = self.values[i];
            xn->grad[i] += s * (1.0 - s) * self.grad[i];
        }
    });
}

Tensor silu(const Tensor& x) {
    std::vector<double> out(x.values().size());
    for (size_t i = 0; i < out.size(); ++i) {
        double v = x.values()[i];
        out[i] = v / (1.0 + std::exp(-v));
    }
    auto xn = x.node();
    return make_result(x.shape(), std::move(out), {x}, [xn](TensorNode& self) {
        xn->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            double v = xn->values[i];
            double s = 1.0 / (1.0 + std::exp(-v));
            xn->grad[i] += s * (1.0 + v * (1.0 - s)) * self.grad[i];
        }
    });
}

// ---- matmul & layout ops ----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> out(static_cast<size_t>(m * n));
    {
        MapC A(a.values().data(), m, k);
        MapC B(b.values().data(), k, n);
        MapM C(out.data(), m, n);
        C.noalias() = A * B;
    }
    auto an = a.node(), bn = b.node();
    return make_result({m, n}, std::move(out), {a, b}, [an, bn, m, k, n](TensorNode& self) {
        MapC dC(self.grad.data(), m, n);
        if (an->requires_grad) {
            an->ensure_grad();
            MapC B(bn->values.data(), k, n);
            MapM dA(an->grad.data(), m, k);
            dA.noalias() += dC * B.transpose();
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            MapC A(an->values.data(), m, k);
            MapM dB(bn->grad.data(), k, n);
            dB.noalias() += A.transpose() * dC;
        }
    });
}

Tensor transpose2d(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("transpose2d: rank-2 expected, got " + shape_str(a.shape()));
    int64_t m = a.dim(0), n = a.dim(1);
    std::vector<double> out(a.values().size());
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out[j * m + i] = a.values()[i * n + j];
    auto an = a.node();
    return make_result({n, m}, std::move(out), {a}, [an, m, n](TensorNode& self) {
        an->ensure_grad();
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j) an->grad[i * n + j] += self.grad[j * m + i];
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel())
        throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    std::vector<double> out = a.values();  // value semantics: fresh storage
    auto an = a.node();
    return make_result(std::move(shape), std::move(out), {a}, [an](TensorNode& self) {
        an->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    });
}

Tensor slice_last(const Tensor& a, int64_t start, int64_t len) {
    auto [rows, last] = rows_last(a.shape());
    if (start < 0 || len <= 0 || start + len > last)
        throw DimensionError("slice_last: [" + std::to_string(start) + ", " +
                             std::to_string(start + len) + ") out of range for " + shape_str(a.shape()));
    Shape out_shape = a.shape();
    out_shape.back() = len;
    std::vector<double> out(static_cast<size_t>(rows * len));
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < len; ++j) out[r * len + j] = a.values()[r * last + start + j];
    auto an = a.node();
    return make_result(std::move(out_shape), std::move(out), {a},
                       [an, rows, last, start, len](TensorNode& self) {
                           an->ensure_grad();
                           for (int64_t r = 0; r < rows; ++r)
                               for (int64_t j = 0; j < len; ++j)
                                   an->grad[r * last + start + j] += self.grad[r * len + j];
                       });
}

Tensor concat_last(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_last: no inputs");
    Shape lead = parts[0].shape();
    lead.pop_back();
    int64_t total = 0;
    for (const auto& p : parts) {
        Shape l = p.shape();
        int64_t last = l.back();
        l.pop_back();
        if (l != lead) throw DimensionError("concat_last: leading dims differ");
        total += last;
    }
    auto [rows, unused] = rows_last(parts[0].shape());
    (void)unused;
    Shape out_shape = parts[0].shape();
    out_shape.back() = total;
    std::vector<double> out(static_cast<size_t>(rows * total));
    std::vector<int64_t> offsets(parts.size()), lens(parts.size());
    int64_t off = 0;
    for (size_t p = 0; p < parts.size(); ++p) {
        int64_t len = parts[p].shape().back();
        offsets[p] = off;
        lens[p] = len;
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t j = 0; j < len; ++j)
                out[r * total + off + j] = parts[p].values()[r * len + j];
        off += len;
    }
    std::vector<std::shared_ptr<TensorNode>> pnodes;
    for (const auto& p : parts) pnodes.push_back(p.node());
    return make_result(std::move(out_shape), std::move(out), parts,
                       [pnodes, offsets, lens, rows, total](TensorNode& self) {
                           for (size_t p = 0; p < pnodes.size(); ++p) {
                               if (!pnodes[p]->requires_grad) continue;
                               pnodes[p]->ensure_grad();
                               for (int64_t r = 0; r < rows; ++r)
                                   for (int64_t j = 0; j < lens[p]; ++j)
                                       pnodes[p]->grad[r * lens[p] + j] +=
                                           self.grad[r * total + offsets[p] + j];
                           }
                       });
}

// ---- broadcast-by-vector ops ------------------------------------------------

Tensor add_vec_last(const Tensor& x, const Tensor& v) {
    auto [rows, last] = rows_last(x.shape());
    if (v.rank() != 1 || v.dim(0) != last)
        throw DimensionError("add_vec_last: " + shape_str(x.shape()) + " vs " + shape_str(v.shape()));
    std::vector<double> out(x.values().size());
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < last; ++j) out[r * last + j] = x.values()[r * last + j] + v.values()[j];
    auto xn = x.node(), vn = v.node();
    return make_result(x.shape(), std::move(out), {x, v}, [xn, vn, rows, last](TensorNode& self) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < last; ++j) vn->grad[j] += self.grad[r * last + j];
        }
    });
}

Tensor mul_vec_last(const Tensor& x, const Tensor& v) {
    auto [rows, last] = rows_last(x.shape());
    if (v.rank() != 1 || v.dim(0) != last)
        throw DimensionError("mul_vec_last: " + shape_str(x.shape()) + " vs " + shape_str(v.shape()));
    std::vector<double> out(x.values().size());
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < last; ++j) out[r * last + j] = x.values()[r * last + j] * v.values()[j];
    auto xn = x.node(), vn = v.node();
    return make_result(x.shape(), std::move(out), {x, v}, [xn, vn, rows, last](TensorNode& self) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < last; ++j)
                    xn->grad[r * last + j] += vn->values[j] * self.grad[r * last + j];
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < last; ++j)
                    vn->grad[j] += xn->values[r * last + j] * self.grad[r * last + j];
        }
    });
}

Tensor add_vec_first(const Tensor& x, const Tensor& v) {
    if (x.rank() < 1 || v.rank() != 1 || v.dim(0) != x.dim(0))
        throw DimensionError("add_vec_first: " + shape_str(x.shape()) + " vs " + shape_str(v.shape()));
    int64_t c = x.dim(0);
    int64_t inner = x.numel() / c;
    std::vector<double> out(x.values().size());
    for (int64_t i = 0; i < c; ++i)
        for (int64_t j = 0; j < inner; ++j) out[i * inner + j] = x.values()[i * inner + j] + v.values()[i];
    auto xn = x.node(), vn = v.node();
    return make_result(x.shape(), std::move(out), {x, v}, [xn, vn, c, inner](TensorNode& self) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (int64_t i = 0; i < c; ++i) {
                double acc = 0.0;
                for (int64_t j = 0; j < inner; ++j) acc += self.grad[i * inner + j];
                vn->grad[i] += acc;
            }
        }
    });
}

// ---- normalizations ----------------------------------------------------------

Tensor softmax(const Tensor& x, int axis) {
    AxisView v = axis_view(x.shape(), axis);
    std::vector<double> out(x.values().size());
    const auto& xv = x.values();
    for (int64_t o = 0; o < v.outer; ++o) {
        for (int64_t j = 0; j < v.inner; ++j) {
            int64_t base = o * v.len * v.inner + j;
            double mx = -HUGE_VAL;
            for (int64_t i = 0; i < v.len; ++i) mx = std::max(mx, xv[base + i * v.inner]);
            double z = 0.0;
            for (int64_t i = 0; i < v.len; ++i) {
                double e = std::exp(xv[base + i * v.inner] - mx);
                out[base + i * v.inner] = e;
                z += e;
            }
            for (int64_t i = 0; i < v.len; ++i) out[base + i * v.inner] /= z;
        }
    }
    auto xn = x.node();
    return make_result(x.shape(), std::move(out), {x}, [xn, v](TensorNode& self) {
        xn->ensure_grad();
        for (int64_t o = 0; o < v.outer; ++o) {
            for (int64_t j = 0; j < v.inner; ++j) {
                int64_t base = o * v.len * v.inner + j;
                double dot = 0.0;
                for (int64_t i = 0; i < v.len; ++i)
                    dot += self.grad[base + i * v.inner] * self.values[base + i * v.inner];
                for (int64_t i = 0; i < v.len; ++i) {
                    int64_t p = base + i * v.inner;
                    xn->grad[p] += self.values[p] * (self.grad[p] - dot);
                }
            }
        }
    });
}

Tensor layer_norm(const Tensor& x, int axis, double eps) {
    if (eps <= 0) throw ContractError("layer_norm: eps must be > 0");
    AxisView v = axis_view(x.shape(), axis);
    std::vector<double> out(x.values().size());
    std::vector<double> inv_sd(static_cast<size_t>(v.outer * v.inner));
    const auto& xv = x.values();
    for (int64_t o = 0; o < v.outer; ++o) {
        for (int64_t j = 0; j < v.inner; ++j) {
            int64_t base = o * v.len * v.inner + j;
            double mu = 0.0;
            for (int64_t i = 0; i < v.len; ++i) mu += xv[base + i * v.inner];
            mu /= v.len;
            double var = 0.0;
            for (int64_t i = 0; i < v.len; ++i) {
                double d = xv[base + i * v.inner] - mu;
                var += d * d;
            }
            var /= v.len;
            double isd = 1.0 / std::sqrt(var + eps);
            inv_sd[o * v.inner + j] = isd;
            for (int64_t i = 0; i < v.len; ++i)
                out[base + i * v.inner] = (xv[base + i * v.inner] - mu) * isd;
        }
    }
    auto xn = x.node();
    return make_result(x.shape(), std::move(out), {x}, [xn, v, inv_sd](TensorNode& self) {
        xn->ensure_grad();
        for (int64_t o = 0; o < v.outer; ++o) {
            for (int64_t j = 0; j < v.inner; ++j) {
                int64_t base = o * v.len * v.inner + j;
                double isd = inv_sd[o * v.inner + j];
                double mean_dy = 0.0, mean_dyx = 0.0;
                for (int64_t i = 0; i < v.len; ++i) {
                    int64_t p = base + i * v.inner;
                    mean_dy += self.grad[p];
                    mean_dyx += self.grad[p] * self.values[p];
                }
                mean_dy /= v.len;
                mean_dyx /= v.len;
                for (int64_t i = 0; i < v.len; ++i) {
                    int64_t p = base + i * v.inner;
                    xn->grad[p] += isd * (self.grad[p] - mean_dy - self.values[p] * mean_dyx);
                }
            }
        }
    });
}

// ---- reductions & losses -------------------------------------------------------

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    auto xn = x.node();
    return make_result({1}, {acc}, {x}, [xn](TensorNode& self) {
        xn->ensure_grad();
        for (auto& g : xn->grad) g += self.grad[0];
    });
}

Tensor mean(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    double inv_n = 1.0 / static_cast<double>(x.numel());
    auto xn = x.node();
    return make_result({1}, {acc * inv_n}, {x}, [xn, inv_n](TensorNode& self) {
        xn->ensure_grad();
        for (auto& g : xn->grad) g += inv_n * self.grad[0];
    });
}

Tensor huber_loss(const Tensor& pred, const Tensor& target, double delta) {
    check_same_shape(pred, target, "huber_loss");
    if (delta <= 0) throw ContractError("huber_loss: delta must be > 0");
    double acc = 0.0;
    for (size_t i = 0; i < pred.values().size(); ++i) {
        double r = pred.values()[i] - target.values()[i];
        double a = std::abs(r);
        acc += a < delta ? 0.5 * r * r / delta : a - 0.5 * delta;
    }
    double inv_n = 1.0 / static_cast<double>(pred.numel());
    auto pn = pred.node(), tn = target.node();
    return make_result({1}, {acc * inv_n}, {pred, target}, [pn, tn, delta, inv_n](TensorNode& self) {
        for (size_t i = 0; i < pn->values.size(); ++i) {
            double r = pn->values[i] - tn->values[i];
            double g = (std::abs(r) < delta ? r / delta : (r > 0 ? 1.0 : -1.0)) * inv_n * self.grad[0];
            if (pn->requires_grad) {
                pn->ensure_grad();
                pn->grad[i] += g;
            }
            if (tn->requires_grad) {
                tn->ensure_grad();
                tn->grad[i] -= g;
            }
        }
    });
}

// ---- im2col / conv -----------------------------------------------------------

Tensor im2col(const Tensor& x, int64_t kernel, int64_t stride) {
    if (x.rank() != 4) throw DimensionError("im2col: expected [C,D,H,W], got " + shape_str(x.shape()));
    if (kernel <= 0 || stride <= 0) throw ContractError("im2col: kernel and stride must be positive");
    int64_t C = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
    for (int64_t e : {D, H, W}) {
        if (e < kernel || (e - kernel) % stride != 0)
            throw DimensionError("im2col: extent " + std::to_string(e) + " incompatible with kernel " +
                                 std::to_string(kernel) + " stride " + std::to_string(stride));
    }
    int64_t od = (D - kernel) / stride + 1, oh = (H - kernel) / stride + 1, ow = (W - kernel) / stride + 1;
    int64_t P = od * oh * ow;
    int64_t K = C * kernel * kernel * kernel;
    std::vector<double> out(static_cast<size_t>(P * K));
    // index map reused by the backward scatter
    auto map = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(P * K));
    int64_t pos = 0;
    for (int64_t zd = 0; zd < od; ++zd)
        for (int64_t zh = 0; zh < oh; ++zh)
            for (int64_t zw = 0; zw < ow; ++zw) {
                for (int64_t c = 0; c < C; ++c)
                    for (int64_t kd = 0; kd < kernel; ++kd)
                        for (int64_t kh = 0; kh < kernel; ++kh)
                            for (int64_t kw = 0; kw < kernel; ++kw) {
                                int64_t src = ((c * D + zd * stride + kd) * H + zh * stride + kh) * W +
                                              zw * stride + kw;
                                (*map)[pos] = src;
                                out[pos] = x.values()[src];
                                ++pos;
                            }
            }
    auto xn = x.node();
    return make_result({P, K}, std::move(out), {x}, [xn, map](TensorNode& self) {
        xn->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) xn->grad[(*map)[i]] += self.grad[i];
    });
}

Tensor conv3d(const Tensor& x, const Tensor& w, int64_t stride) {
    if (x.rank() != 4 || w.rank() != 5)
        throw DimensionError("conv3d: expected x [C,D,H,W] and w [F,C,k,k,k], got " +
                             shape_str(x.shape()) + " and " + shape_str(w.shape()));
    if (w.dim(1) != x.dim(0) || w.dim(2) != w.dim(3) || w.dim(3) != w.dim(4))
        throw DimensionError("conv3d: weight " + shape_str(w.shape()) + " incompatible with input " +
                             shape_str(x.shape()));
    int64_t F = w.dim(0), k = w.dim(2);
    int64_t od = (x.dim(1) - k) / stride + 1;
    int64_t oh = (x.dim(2) - k) / stride + 1;
    int64_t ow = (x.dim(3) - k) / stride + 1;
    Tensor cols = im2col(x, k, stride);                              // [P, C k^3]
    Tensor wt = transpose2d(reshape(w, {F, w.numel() / F}));         // [C k^3, F]
    Tensor y = transpose2d(matmul(cols, wt));                        // [F, P]
    return reshape(y, {F, od, oh, ow});
}

// ---- oracles -------------------------------------------------------------------

Tensor finite_difference_grad(const ScalarFn& f, const Tensor& x, double h) {
    if (h <= 0) throw ContractError("finite_difference_grad: h must be > 0");
    std::vector<int64_t> coords(x.numel());
    for (int64_t i = 0; i < x.numel(); ++i) coords[i] = i;
    auto g = finite_difference_grad_at(f, x, h, coords);
    return Tensor::from(x.shape(), std::move(g));
}

std::vector<double> finite_difference_grad_at(const ScalarFn& f, const Tensor& x, double h,
                                              const std::vector<int64_t>& coords) {
    std::vector<double> g(coords.size());
    std::vector<double> work = x.values();
    for (size_t i = 0; i < coords.size(); ++i) {
        int64_t c = coords[i];
        double orig = work[c];
        work[c] = orig + h;
        double fp = f(Tensor::from(x.shape(), work));
        work[c] = orig - h;
        double fm = f(Tensor::from(x.shape(), work));
        work[c] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b, double floor) {
    if (a.size() != b.size()) throw DimensionError("max_rel_error: length mismatch");
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({floor, std::abs(a[i]), std::abs(b[i])});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

Tensor randn(Rng& rng, Shape shape, double mean, double sd) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.normal(mean, sd);
    return Tensor::from(std::move(shape), std::move(v));
}

Tensor rand_uniform(Rng& rng, Shape shape, double lo, double hi) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::from(std::move(shape), std::move(v));
}

void snap_to_f32(Tensor& t) {
    for (auto& v : t.mutable_values()) v = static_cast<double>(static_cast<float>(v));
}

Tensor detach(const Tensor& t) { return Tensor::from(t.shape(), t.values()); }

NoGradGuard::NoGradGuard(std::vector<Tensor> params) : params_(std::move(params)) {
    saved_.reserve(params_.size());
    for (auto& p : params_) {
        saved_.push_back(p.requires_grad());
        p.set_requires_grad(false);
    }
}

NoGradGuard::~NoGradGuard() {
    for (size_t i = 0; i < params_.size(); ++i) params_[i].set_requires_grad(saved_[i]);
}

}  // namespace vdt
