#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ddn/errors.hpp"

namespace ddn {

namespace detail {

struct TensorNode {
    std::vector<int64_t> shape;
    std::vector<float> values;
    std::vector<float> grad;     // accumulated dLoss/dThis, populated by backward()
    std::vector<float> scratch;  // per-backward-pass working gradient
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    // Propagates this node's scratch gradient into the parents' scratch buffers.
    std::function<void(TensorNode&)> backprop;

    int64_t size() const {
        int64_t n = 1;
        for (int64_t e : shape) n *= e;
        return n;
    }
};

}  // namespace detail

/// Dense row-major float32 array with an optional autodiff graph edge.
///
/// Tensor is a cheap shared handle: copies alias the same storage and graph
/// node. Forward ops record a backward closure when any input requires
/// gradients; backward() then fills `grad` on every reachable tensor that
/// requires them. A graph, once built, is confined to one thread.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<int64_t> shape, float value, bool requires_grad = false);
    static Tensor from_values(std::vector<int64_t> shape, std::vector<float> values,
                              bool requires_grad = false);
    static Tensor scalar(float value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int64_t>& shape() const { return node().shape; }
    int64_t dim(int i) const { return node().shape.at(static_cast<size_t>(i)); }
    int rank() const { return static_cast<int>(node().shape.size()); }
    int64_t size() const { return node().size(); }

    std::span<const float> values() const { return node().values; }
    std::span<float> values_mut() { return node().values; }
    float item() const;

    bool requires_grad() const { return node().requires_grad; }
    void set_requires_grad(bool rg) { node().requires_grad = rg; }

    bool has_grad() const { return defined() && !node().grad.empty(); }
    std::span<const float> grad() const;
    std::span<float> grad_mut();
    void zero_grad();

    /// Reverse-mode sweep from a scalar loss. Gradients accumulate into
    /// `grad` of every requires_grad tensor reachable through the graph;
    /// calling backward twice without zero_grad doubles them.
    void backward();

    /// True when every value is finite.
    bool all_finite() const;

    const std::shared_ptr<detail::TensorNode>& node_ptr() const { return node_; }
    detail::TensorNode& node() { return *node_; }
    const detail::TensorNode& node() const { return *node_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

    std::shared_ptr<detail::TensorNode> node_;

    friend Tensor make_op_result(std::vector<int64_t> shape, std::vector<float> values,
                                 std::vector<Tensor> parents,
                                 std::function<void(detail::TensorNode&)> backprop);
};

/// Builds a forward-op output node, wiring parents and the backward closure
/// only when some parent needs gradients.
Tensor make_op_result(std::vector<int64_t> shape, std::vector<float> values,
                      std::vector<Tensor> parents,
                      std::function<void(detail::TensorNode&)> backprop);

int64_t shape_size(const std::vector<int64_t>& shape);
std::string shape_str(const std::vector<int64_t>& shape);
void check_finite(const Tensor& t, const char* label);

}  // namespace ddn
