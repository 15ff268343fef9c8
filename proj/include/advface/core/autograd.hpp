#ifndef ADVFACE_CORE_AUTOGRAD_HPP
#define ADVFACE_CORE_AUTOGRAD_HPP

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "advface/core/tensor.hpp"

namespace advface::nn {

// Reverse-mode autodiff over a dynamic graph. Each forward op allocates a
// Node whose backward_op reads this->grad and accumulates into the parents'
// grads. Graphs are rebuilt every step; parameters are long-lived leaves.
template <typename S>
struct Node {
    Tensor<S> value;
    Tensor<S> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node<S>>> parents;
    std::function<void(Node<S>&)> backward_op;

    void ensure_grad() {
        if (grad.numel() != value.numel()) grad = Tensor<S>(value.shape());
    }
    void zero_grad() {
        if (grad.numel() == value.numel())
            grad.fill(S(0));
        else
            grad = Tensor<S>(value.shape());
    }
};

template <typename S>
using Var = std::shared_ptr<Node<S>>;

template <typename S>
Var<S> constant(Tensor<S> value) {
    auto n = std::make_shared<Node<S>>();
    n->value = std::move(value);
    n->requires_grad = false;
    return n;
}

template <typename S>
Var<S> leaf(Tensor<S> value, bool requires_grad = true) {
    auto n = std::make_shared<Node<S>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    if (requires_grad) n->zero_grad();
    return n;
}

template <typename S>
Var<S> make_op(Tensor<S> value, std::vector<Var<S>> parents,
               std::function<void(Node<S>&)> backward_op) {
    auto n = std::make_shared<Node<S>>();
    n->value = std::move(value);
    for (const auto& p : parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward_op = std::move(backward_op);
    }
    return n;
}

namespace detail {
template <typename S>
void topo_order(const Var<S>& root, std::vector<Node<S>*>& order) {
    // Iterative post-order DFS; graphs for deep nets exceed safe recursion.
    std::unordered_set<Node<S>*> seen;
    std::vector<std::pair<Node<S>*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node<S>* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}
}  // namespace detail

// Backpropagate from a scalar root (grad seeded with 1).
template <typename S>
void backward(const Var<S>& root) {
    require(root->value.numel() == 1, "backward expects a scalar root");
    if (!root->requires_grad) return;
    std::vector<Node<S>*> order;
    detail::topo_order(root, order);
    for (Node<S>* n : order) n->ensure_grad();
    root->grad.fill(S(0));
    root->grad[0] = S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<S>* n = *it;
        if (n->backward_op) n->backward_op(*n);
    }
}

}  // namespace advface::nn

#endif
