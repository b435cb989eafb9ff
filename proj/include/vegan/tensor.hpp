#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace vegan {

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major array of doubles. Rank 0 (scalar), 1 or 2 in practice.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != data.size())
            throw DimensionError("tensor: shape/data size mismatch");
        check_finite("construction");
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<std::size_t> s) {
        std::size_t n = numel_of(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    static Tensor full(std::vector<std::size_t> s, double v) {
        std::size_t n = numel_of(s);
        return Tensor(std::move(s), std::vector<double>(n, v));
    }

    static Tensor scalar(double v) { return Tensor({}, {v}); }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    bool is_scalar() const { return numel() == 1; }

    std::size_t rows() const { return rank() == 2 ? shape[0] : (rank() == 1 ? 1 : 1); }
    std::size_t cols() const {
        if (rank() == 2) return shape[1];
        if (rank() == 1) return shape[0];
        return 1;
    }

    double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

    double scalar_value() const {
        if (!is_scalar()) throw DimensionError("tensor: scalar_value on non-scalar");
        return data[0];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void check_finite(const std::string& where) const {
        for (double v : data)
            if (!std::isfinite(v))
                throw NumericDomainError("tensor: non-finite value after " + where);
    }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

}  // namespace vegan
