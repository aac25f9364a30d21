#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "eden/core/rng.hpp"
#include "eden/core/tensor.hpp"

namespace eden {

template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
};

// Owns the named parameters of one model. Parameter addresses are stable for
// the store's lifetime; layers keep raw pointers into it.
template <typename T>
class ParamStore {
public:
    ParamStore() = default;
    ParamStore(const ParamStore&) = delete;
    ParamStore& operator=(const ParamStore&) = delete;

    Parameter<T>& add(const std::string& name, std::size_t rows, std::size_t cols) {
        require(!index_.count(name), "config", "duplicate parameter name: " + name);
        auto p = std::make_unique<Parameter<T>>();
        p->name = name;
        p->value = Tensor<T>(rows, cols);
        p->grad = Tensor<T>(rows, cols);
        index_[name] = items_.size();
        items_.push_back(std::move(p));
        return *items_.back();
    }

    Parameter<T>* find(const std::string& name) {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : items_[it->second].get();
    }
    const Parameter<T>* find(const std::string& name) const {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : items_[it->second].get();
    }
    Parameter<T>& at(const std::string& name) {
        auto* p = find(name);
        require(p != nullptr, "checkpoint", "unknown parameter: " + name);
        return *p;
    }

    std::size_t size() const { return items_.size(); }
    Parameter<T>& operator[](std::size_t i) { return *items_[i]; }
    const Parameter<T>& operator[](std::size_t i) const { return *items_[i]; }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& p : items_) n += p->value.size();
        return n;
    }

    void zero_grad() {
        for (auto& p : items_) p->grad.fill(T(0));
    }

private:
    std::vector<std::unique_ptr<Parameter<T>>> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

template <typename T>
void init_normal(Parameter<T>& p, Rng& rng, double stddev) {
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = static_cast<T>(rng.normal() * stddev);
}

// Glorot-uniform for a (fan_in, fan_out) weight.
template <typename T>
void init_xavier(Parameter<T>& p, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
void init_constant(Parameter<T>& p, double v) {
    p.value.fill(static_cast<T>(v));
}

}  // namespace eden
