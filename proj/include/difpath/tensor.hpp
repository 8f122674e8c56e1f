#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "difpath/error.hpp"

namespace difpath {

std::size_t shape_numel(const std::vector<std::size_t>& shape);

// Dense row-major tensor of 64-bit floats. Shape [0] and rank 0 are legal
// (empty / scalar); checkpoints may down-convert storage to 32-bit, compute
// never does.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}
    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<std::size_t> s, double v);
    static Tensor scalar(double v) { return Tensor({}, {v}); }

    std::size_t size() const noexcept { return data.size(); }
    std::size_t rank() const noexcept { return shape.size(); }
    std::size_t extent(std::size_t axis) const { return shape.at(axis); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // rank-2 access (rows, cols)
    double& operator()(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    // rank-3 access (channels, rows, cols)
    double& operator()(std::size_t ch, std::size_t y, std::size_t x) {
        return data[(ch * shape[1] + y) * shape[2] + x];
    }
    double operator()(std::size_t ch, std::size_t y, std::size_t x) const {
        return data[(ch * shape[1] + y) * shape[2] + x];
    }

    bool same_shape(const Tensor& o) const noexcept { return shape == o.shape; }

    bool all_finite() const noexcept;
    void require_finite(const char* who) const;
    void fill(double v);
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* who);

// Elementwise helpers; shapes must match where two tensors are involved.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
void axpy(double alpha, const Tensor& x, Tensor& y);  // y += alpha * x
double dot(const Tensor& a, const Tensor& b);
double sum(const Tensor& a);
double mean(const Tensor& a);
double variance(const Tensor& a);  // population variance
double max_abs(const Tensor& a);
double frobenius_norm(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

}  // namespace difpath
