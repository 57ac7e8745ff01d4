// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mcta/errors.hpp"
#include "mcta/rng.hpp"

namespace mcta {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::int64_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ']';
    return os.str();
}

template <class T>
class Tensor;

template <class T>
using TensorPtr = std::shared_ptr<Tensor<T>>;

// Dense row-major tensor participating in a reverse-mode tape. Ops connect
// outputs to their inputs via parent edges plus a backward closure; calling
// backward() on a scalar loss runs the closures in reverse topological order.
template <class T>
class Tensor : public std::enable_shared_from_this<Tensor<T>> {
public:
    Tensor(Shape shape, bool requires_grad)
        : shape_(std::move(shape)),
          data_(static_cast<std::size_t>(shape_numel(shape_)), T{0}),
          requires_grad_(requires_grad) {}

    Tensor(Shape shape, std::vector<T> data, bool requires_grad)
        : shape_(std::move(shape)), data_(std::move(data)), requires_grad_(requires_grad) {
        if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_)) {
            throw ShapeError("tensor: data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
        }
    }

    static TensorPtr<T> zeros(Shape shape, bool requires_grad = false) {
        return std::make_shared<Tensor<T>>(std::move(shape), requires_grad);
    }

    static TensorPtr<T> full(Shape shape, T value, bool requires_grad = false) {
        auto t = zeros(std::move(shape), requires_grad);
        std::fill(t->data_.begin(), t->data_.end(), value);
        return t;
    }

    static TensorPtr<T> from(Shape shape, std::vector<T> data, bool requires_grad = false) {
        return std::make_shared<Tensor<T>>(std::move(shape), std::move(data), requires_grad);
    }

    static TensorPtr<T> scalar(T value, bool requires_grad = false) {
        return from({1}, {value}, requires_grad);
    }

    static TensorPtr<T> randn(Shape shape, Rng& rng, T stddev = T{1}, bool requires_grad = false) {
        auto t = zeros(std::move(shape), requires_grad);
        for (auto& v : t->data_) v = static_cast<T>(rng.normal()) * stddev;
        return t;
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::int64_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool requires_grad() const { return requires_grad_; }
    void set_requires_grad(bool v) { requires_grad_ = v; }

    bool has_grad() const { return !grad_.empty(); }

    // Lazily allocated, zero-filled, same shape as data.
    std::vector<T>& grad() {
        if (grad_.empty()) grad_.assign(data_.size(), T{0});
        return grad_;
    }

    void zero_grad() {
        std::fill(grad_.begin(), grad_.end(), T{0});
    }

    void clear_grad() { grad_.clear(); }

    T item() const {
        if (data_.size() != 1) {
            throw StateError("item(): tensor has " + std::to_string(data_.size()) + " elements, expected 1");
        }
        return data_[0];
    }

    // Tape wiring, used by ops only.
    void attach(std::vector<TensorPtr<T>> parents, std::function<void(Tensor<T>&)> backward_fn) {
        parents_ = std::move(parents);
        backward_fn_ = std::move(backward_fn);
    }

    const std::vector<TensorPtr<T>>& parents() const { return parents_; }

    // Reverse-mode sweep from a scalar loss. Populates grad for every
    // reachable requires_grad tensor exactly once. A second sweep from the
    // same loss without rebuilding the graph is refused.
    void backward() {
        if (data_.size() != 1) {
            throw StateError("backward(): loss must be a scalar, got shape " + shape_str(shape_));
        }
        if (!requires_grad_) {
            throw StateError("backward(): loss does not require grad");
        }
        if (backward_ran_) {
            throw StateError("backward(): already ran for this loss; rebuild the graph or reset grads");
        }
        backward_ran_ = true;

        std::vector<Tensor<T>*> order = topo_order();
        grad().assign(1, T{1});
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Tensor<T>* node = *it;
            if (node->backward_fn_ && node->requires_grad_) {
                node->backward_fn_(*node);
            }
        }
    }

    // Drops the graph below this tensor so intermediate buffers can be freed.
    void detach_graph() {
        parents_.clear();
        backward_fn_ = nullptr;
    }

private:
    std::vector<Tensor<T>*> topo_order() {
        std::vector<Tensor<T>*> order;
        std::unordered_set<Tensor<T>*> seen;
        // Iterative DFS; post-order push yields a valid topological order.
        std::vector<std::pair<Tensor<T>*, std::size_t>> stack;
        stack.emplace_back(this, 0);
        seen.insert(this);
        while (!stack.empty()) {
            auto& [node, next_child] = stack.back();
            if (next_child < node->parents_.size()) {
                Tensor<T>* child = node->parents_[next_child].get();
                ++next_child;
                if (seen.insert(child).second) {
                    stack.emplace_back(child, 0);
                }
            } else {
                order.push_back(node);
                stack.pop_back();
            }
        }
        return order;
    }

    Shape shape_;
    std::vector<T> data_;
    std::vector<T> grad_;
    bool requires_grad_ = false;
    bool backward_ran_ = false;
    std::vector<TensorPtr<T>> parents_;
    std::function<void(Tensor<T>&)> backward_fn_;
};

}  // namespace mcta
