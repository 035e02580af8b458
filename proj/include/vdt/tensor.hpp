#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vdt/errors.hpp"
#include "vdt/rng.hpp"

namespace vdt {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// One node of the dynamically built op graph. Leaves (parameters, inputs,
// constants) have no backward_fn; interior nodes carry the closure that
// scatters their grad into their parents.
struct TensorNode {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // allocated lazily, same length as values
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
    bool is_leaf() const { return !backward_fn; }
};

// Dense row-major N-d tensor handle. Operations are value-semantic: outputs
// never alias input storage. A tensor produced by an op on a requires_grad
// input stays connected to the tape until backward() or until dropped.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);
    static Tensor from(Shape shape, std::vector<double> values);
    static Tensor scalar(double v);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int64_t numel() const { return static_cast<int64_t>(node_->values.size()); }
    int64_t dim(size_t i) const { return node_->shape.at(i); }
    size_t rank() const { return node_->shape.size(); }

    const std::vector<double>& values() const { return node_->values; }
    // Direct write access, for leaf updates (optimizer steps, loading). Does
    // not invalidate an existing tape; only use on leaves between passes.
    std::vector<double>& mutable_values() { return node_->values; }

    double value() const;                              // scalar tensors only
    double at(std::initializer_list<int64_t>) const;   // row-major index

    bool requires_grad() const { return node_->requires_grad; }
    Tensor& set_requires_grad(bool rg);
    const std::vector<double>& grad() const;
    bool has_grad() const { return node_ && !node_->grad.empty(); }
    void zero_grad();

    std::shared_ptr<TensorNode> node() const { return node_; }
    static Tensor wrap(std::shared_ptr<TensorNode> n);

  private:
    std::shared_ptr<TensorNode> node_;
};

// Topologically ordered record of the executed ops reachable from a root;
// order[i] appears before everything it depends on is processed in backward
// (root first). Confined to one thread.
struct OpGraph {
    std::vector<TensorNode*> order;
    static OpGraph build(const Tensor& root);
};

// ---- differentiable primitives ------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose2d(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor slice_last(const Tensor& a, int64_t start, int64_t len);
Tensor concat_last(const std::vector<Tensor>& parts);
Tensor add_vec_last(const Tensor& x, const Tensor& v);   // v indexed by last axis
Tensor mul_vec_last(const Tensor& x, const Tensor& v);
Tensor add_vec_first(const Tensor& x, const Tensor& v);  // v indexed by first axis
Tensor scale_by(const Tensor& x, const Tensor& s);       // s scalar tensor
Tensor softmax(const Tensor& x, int axis);
Tensor layer_norm(const Tensor& x, int axis, double eps);
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor huber_loss(const Tensor& pred, const Tensor& target, double delta);

// Unfold into [P x C*k^3] patch rows (P = output voxel count, row-major over
// the output grid, columns in (c, kd, kh, kw) order). kernel==stride is the
// non-overlapping patchify case.
Tensor im2col(const Tensor& x, int64_t kernel, int64_t stride);

// Cross-correlation, no padding, cubic kernel. x: [C,D,H,W], w: [F,C,k,k,k].
// Requires (extent - k) divisible by stride.
Tensor conv3d(const Tensor& x, const Tensor& w, int64_t stride);

// Reverse-mode pass from a scalar loss. Populates grad on every reachable
// requires_grad leaf; throws ContractError on a non-scalar loss or if a
// non-finite gradient is produced.
void backward(const Tensor& loss);

// ---- oracles & test support ----------------------------------------------

using ScalarFn = std::function<double(const Tensor&)>;

// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h, every coordinate.
Tensor finite_difference_grad(const ScalarFn& f, const Tensor& x, double h);
// Same, restricted to the given flat coordinates.
std::vector<double> finite_difference_grad_at(const ScalarFn& f, const Tensor& x, double h,
                                              const std::vector<int64_t>& coords);

// max_i |a_i - b_i| / max(floor, |a_i|, |b_i|)
double max_rel_error(const std::vector<double>& a, const std::vector<double>& b,
                     double floor = 1e-6);

Tensor randn(Rng& rng, Shape shape, double mean = 0.0, double sd = 1.0);
Tensor rand_uniform(Rng& rng, Shape shape, double lo, double hi);

// Copy of the values with no tape connection.
Tensor detach(const Tensor& t);

// RAII: turns requires_grad off for the given tensors (e.g. while sampling),
// restoring the previous flags on destruction.
class NoGradGuard {
  public:
    explicit NoGradGuard(std::vector<Tensor> params);
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    std::vector<Tensor> params_;
    std::vector<bool> saved_;
};

// Round every value to its nearest f32, in place (checkpoint precision).
void snap_to_f32(Tensor& t);

}  // namespace vdt
