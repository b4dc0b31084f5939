#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deskstage::autodiff {

class AutodiffError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Up to four dimensions, NCHW for images.
using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until a backward pass reaches the node
    bool requires_grad = false;
    std::string op = "leaf";
    std::vector<std::shared_ptr<Node>> inputs;
    /// Reads this node's grad and accumulates into the inputs' grads.
    std::function<void(Node&)> backward_fn;

    bool is_leaf() const { return inputs.empty(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
};

/// Shared handle to a node of the define-by-run graph. Copies alias the same
/// storage; use clone() for an independent copy.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, T value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false);
    static Tensor scalar(T value);

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    int dim(std::size_t i) const { return node_->shape.at(i); }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->value.size(); }

    std::span<const T> data() const { return node_->value; }
    /// Direct write access, for optimizers and initializers only.
    std::span<T> mutable_data() { return node_->value; }
    std::span<const T> grad() const { return node_->grad; }
    std::span<T> mutable_grad() {
        node_->ensure_grad();
        return node_->grad;
    }
    bool has_grad() const { return node_->grad.size() == node_->value.size(); }
    void zero_grad() { node_->grad.clear(); }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on) { node_->requires_grad = on; }
    const std::string& op() const { return node_->op; }

    T item() const;
    /// Same values, cut from the graph.
    Tensor detach() const;
    /// Deep copy of the values into a fresh leaf.
    Tensor clone() const;

    const std::shared_ptr<Node<T>>& node() const { return node_; }

private:
    std::shared_ptr<Node<T>> node_;
};

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

    static bool recording();

private:
    bool previous_;
};

/// Nodes reachable from a root that participate in differentiation, in
/// topological order (inputs before outputs), each exactly once.
template <typename T>
struct Tape {
    std::vector<Node<T>*> order;

    static Tape record(const Tensor<T>& root);
};

/// Reverse-mode pass from a scalar loss. Leaf gradients accumulate across
/// calls; intermediate gradients are recomputed each time.
template <typename T>
void backward(const Tensor<T>& loss);

/// Builds an op node; the backward closure is only kept when recording is on
/// and some input needs a gradient.
template <typename T>
Tensor<T> make_result(std::string op, Shape shape, std::vector<T> value,
                      std::vector<Tensor<T>> inputs, std::function<void(Node<T>&)> backward_fn);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template struct Tape<float>;
extern template struct Tape<double>;

}  // namespace deskstage::autodiff
