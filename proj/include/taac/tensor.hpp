#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "taac/errors.hpp"

namespace taac {

// Dense row-major tensor. Shapes are dynamic; scalar type is float for
// training state and double for gradient checking and encryption math.
template <class T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(count(shape), T(0));
    }

    Tensor(std::vector<std::size_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != count(shape)) {
            throw DimensionError("tensor data size " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str());
        }
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }

    std::size_t size() const { return data.size(); }

    std::size_t dim(std::size_t i) const { return shape.at(i); }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    // 2-d accessors; callers guarantee the rank.
    T& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    T at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out(shape);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <class T>
inline void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (a.shape != b.shape) {
        throw DimensionError(std::string(what) + ": shape " + a.shape_str() + " vs " + b.shape_str());
    }
}

}  // namespace taac
