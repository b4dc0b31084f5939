#include "deskstage/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace deskstage::autodiff {

namespace {
thread_local bool g_recording = true;
}  // namespace

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw AutodiffError("negative dimension in shape " + shape_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

NoGradGuard::NoGradGuard() : previous_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = previous_; }
bool NoGradGuard::recording() { return g_recording; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
    if (shape.size() > 4) throw AutodiffError("tensors have at most 4 dimensions");
    auto node = std::make_shared<Node<T>>();
    node->value.assign(numel(shape), value);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from_data(Shape shape, std::vector<T> data, bool requires_grad) {
    if (shape.size() > 4) throw AutodiffError("tensors have at most 4 dimensions");
    if (data.size() != numel(shape)) {
        throw AutodiffError("data length " + std::to_string(data.size()) +
                            " does not match shape " + shape_string(shape));
    }
    for (T v : data) {
        if (!std::isfinite(v)) throw AutodiffError("tensor data contains non-finite values");
    }
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value) {
    return from_data({1}, {value});
}

template <typename T>
T Tensor<T>::item() const {
    if (size() != 1) throw AutodiffError("item() on a tensor of shape " + shape_string(shape()));
    return node_->value[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
    auto node = std::make_shared<Node<T>>();
    node->shape = node_->shape;
    node->value = node_->value;
    return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
    Tensor out = detach();
    out.set_requires_grad(requires_grad());
    return out;
}

template <typename T>
Tape<T> Tape<T>::record(const Tensor<T>& root) {
    Tape tape;
    if (!root.defined()) return tape;
    std::unordered_set<Node<T>*> visited;
    // Iterative post-order DFS.
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    visited.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node<T>* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            tape.order.push_back(node);
            stack.pop_back();
        }
    }
    return tape;
}

template <typename T>
void backward(const Tensor<T>& loss) {
    if (!loss.defined()) throw AutodiffError("backward on an undefined tensor");
    if (loss.size() != 1) {
        throw AutodiffError("backward needs a scalar loss, got shape " + shape_string(loss.shape()));
    }
    if (!loss.requires_grad()) throw AutodiffError("loss is not connected to any parameter");

    Tape<T> tape = Tape<T>::record(loss);
    for (Node<T>* node : tape.order) {
        if (!node->is_leaf()) node->grad.assign(node->value.size(), T(0));
    }
    Node<T>* root = loss.node().get();
    root->ensure_grad();
    root->grad[0] += T(1);
    for (auto it = tape.order.rbegin(); it != tape.order.rend(); ++it) {
        Node<T>* node = *it;
        if (node->backward_fn) node->backward_fn(*node);
    }
    for (Node<T>* node : tape.order) {
        if (!node->is_leaf()) node->grad.clear();
    }
}

template <typename T>
Tensor<T> make_result(std::string op, Shape shape, std::vector<T> value,
                      std::vector<Tensor<T>> inputs, std::function<void(Node<T>&)> backward_fn) {
    auto node = std::make_shared<Node<T>>();
    node->op = std::move(op);
    node->shape = std::move(shape);
    node->value = std::move(value);
    const bool needs_grad =
        NoGradGuard::recording() &&
        std::any_of(inputs.begin(), inputs.end(),
                    [](const Tensor<T>& t) { return t.defined() && t.requires_grad(); });
    if (needs_grad) {
        node->requires_grad = true;
        for (auto& in : inputs) {
            if (in.defined()) node->inputs.push_back(in.node());
        }
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor<T>(std::move(node));
}

template class Tensor<float>;
template class Tensor<double>;
template struct Tape<float>;
template struct Tape<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);
template Tensor<float> make_result<float>(std::string, Shape, std::vector<float>,
                                          std::vector<Tensor<float>>,
                                          std::function<void(Node<float>&)>);
template Tensor<double> make_result<double>(std::string, Shape, std::vector<double>,
                                            std::vector<Tensor<double>>,
                                            std::function<void(Node<double>&)>);

}  // namespace deskstage::autodiff
