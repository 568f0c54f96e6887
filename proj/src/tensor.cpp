#include "ddn/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace ddn {

int64_t shape_size(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t e : shape) {
        if (e < 0) throw ConfigError("negative tensor extent");
        n *= e;
    }
    return n;
}

std::string shape_str(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
    return full(std::move(shape), 0.0f, requires_grad);
}

Tensor Tensor::full(std::vector<int64_t> shape, float value, bool requires_grad) {
    auto node = std::make_shared<detail::TensorNode>();
    node->values.assign(static_cast<size_t>(shape_size(shape)), value);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::from_values(std::vector<int64_t> shape, std::vector<float> values,
                           bool requires_grad) {
    if (shape_size(shape) != static_cast<int64_t>(values.size()))
        throw ConfigError("value buffer length does not match shape " + shape_str(shape));
    auto node = std::make_shared<detail::TensorNode>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(float value, bool requires_grad) {
    return from_values({1}, {value}, requires_grad);
}

float Tensor::item() const {
    if (size() != 1) throw ConfigError("item() on non-scalar tensor " + shape_str(shape()));
    return node().values[0];
}

std::span<const float> Tensor::grad() const {
    if (!has_grad()) throw ConfigError("gradient not populated; call backward() first");
    return node().grad;
}

std::span<float> Tensor::grad_mut() {
    auto& n = node();
    if (n.grad.empty()) n.grad.assign(n.values.size(), 0.0f);
    return n.grad;
}

void Tensor::zero_grad() {
    auto& n = node();
    n.grad.assign(n.values.size(), 0.0f);
}

bool Tensor::all_finite() const {
    for (float v : node().values)
        if (!std::isfinite(v)) return false;
    return true;
}

void check_finite(const Tensor& t, const char* label) {
    if (!t.all_finite()) throw NumericError(std::string("non-finite values in ") + label);
}

void Tensor::backward() {
    if (!defined()) throw ConfigError("backward() on undefined tensor");
    if (size() != 1) throw ConfigError("backward() requires a scalar, got " + shape_str(shape()));

    // Iterative post-order topological sort over parents.
    std::vector<detail::TensorNode*> topo;
    std::unordered_set<detail::TensorNode*> visited;
    struct Frame {
        detail::TensorNode* node;
        size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({node_.get(), 0});
    visited.insert(node_.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            detail::TensorNode* p = f.node->parents[f.next_parent++].get();
            if (visited.insert(p).second) stack.push_back({p, 0});
        } else {
            topo.push_back(f.node);
            stack.pop_back();
        }
    }

    for (auto* n : topo) n->scratch.assign(n->values.size(), 0.0f);
    node_->scratch[0] = 1.0f;

    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop(**it);
    }

    for (auto* n : topo) {
        if (n->requires_grad) {
            if (n->grad.empty()) n->grad.assign(n->values.size(), 0.0f);
            for (size_t i = 0; i < n->scratch.size(); ++i) n->grad[i] += n->scratch[i];
        }
        n->scratch.clear();
        n->scratch.shrink_to_fit();
    }
}

Tensor make_op_result(std::vector<int64_t> shape, std::vector<float> values,
                      std::vector<Tensor> parents,
                      std::function<void(detail::TensorNode&)> backprop) {
    Tensor out = Tensor::from_values(std::move(shape), std::move(values));
    bool needs_grad = false;
    for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();
    if (needs_grad) {
        auto& n = out.node();
        n.requires_grad = true;
        n.parents.reserve(parents.size());
        for (auto& p : parents) n.parents.push_back(p.node_ptr());
        n.backprop = std::move(backprop);
    }
    return out;
}

}  // namespace ddn
