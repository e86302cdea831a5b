#ifndef FAN_AUTODIFF_HPP
#define FAN_AUTODIFF_HPP

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fan/tensor.hpp"

namespace fan {

/// One node of the dynamic computation graph: cached forward output plus a
/// gradient accumulator of the same shape. The graph is built per forward
/// pass and torn down when the last Var handle drops.
class Node {
public:
    Tensor value;
    Tensor grad; // lazily allocated by the backward pass
    bool requires_grad = false;
    std::string op; // op-kind tag or parameter name
    std::vector<std::shared_ptr<Node>> inputs;
    // Reads this node's grad and accumulates into the inputs' grads.
    std::function<void(Node&)> backward_op;

    void ensure_grad() {
        if (grad.empty()) grad = Tensor(value.shape());
    }

    void accumulate(const Tensor& g) {
        ensure_grad();
        if (!grad.same_shape(g))
            throw DimensionError("gradient shape " + shape_str(g.shape()) +
                                 " does not match value shape " + shape_str(value.shape()) +
                                 " at op " + op);
        float* dst = grad.data();
        const float* src = g.data();
        for (int64_t i = 0, n = g.size(); i < n; ++i) dst[i] += src[i];
    }
};

using Var = std::shared_ptr<Node>;

inline Var make_leaf(Tensor value, bool requires_grad = false, std::string name = "leaf") {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->op = std::move(name);
    return n;
}

inline Var constant(Tensor value) { return make_leaf(std::move(value), false, "const"); }

/// Build an op node. If no input requires gradients the inputs and backward
/// closure are dropped, so frozen-model forwards carry no graph.
inline Var make_op(Tensor value, std::vector<Var> inputs, std::string op,
                   std::function<void(Node&)> backward_op) {
    check_finite(value, op.c_str());
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->op = std::move(op);
    for (const Var& in : inputs)
        if (in && in->requires_grad) {
            n->requires_grad = true;
            break;
        }
    if (n->requires_grad) {
        n->inputs = std::move(inputs);
        n->backward_op = std::move(backward_op);
    }
    return n;
}

/// Cut the graph: same value, no history.
inline Var detach(const Var& v) { return make_leaf(v->value, false, "detach"); }

namespace detail {

inline void topo_sort(const Var& root, std::vector<Node*>& order) {
    // Iterative post-order DFS; each node appears once, inputs before users.
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && !visited.count(child)) {
                visited.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}

} // namespace detail

/// Reverse-mode sweep from a scalar root. Leaf gradients (parameters)
/// accumulate across calls until zeroed; interior-node gradients are scratch
/// and are released once consumed, so overlapping graphs can be swept more
/// than once without double counting.
inline void backward(const Var& root) {
    if (root->value.size() != 1)
        throw DimensionError("backward requires a scalar root, got " +
                             shape_str(root->value.shape()));
    if (!root->requires_grad) return;
    std::vector<Node*> order;
    detail::topo_sort(root, order);
    root->accumulate(Tensor::ones({1}));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_op) {
            n->ensure_grad();
            n->backward_op(*n);
            n->grad = Tensor();
        }
    }
}

} // namespace fan

#endif
