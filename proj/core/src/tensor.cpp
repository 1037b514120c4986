// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "faprompt/errors.hpp"

namespace faprompt {

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 3) {
        throw ValidationError("Tensor rank must be 1, 2 or 3");
    }
    std::size_t n = 1;
    for (std::size_t d : shape_) {
        if (d == 0) throw ValidationError("Tensor dimensions must be positive");
        n *= d;
    }
    data_.assign(n, fill);
}

Tensor Tensor::scalar(double value) {
    Tensor t({1});
    t.data_[0] = value;
    return t;
}

Tensor Tensor::from(std::initializer_list<double> values) {
    return from_vector(std::vector<double>(values));
}

Tensor Tensor::from_vector(std::vector<double> values) {
    if (values.empty()) throw ValidationError("Tensor cannot be empty");
    Tensor t;
    t.shape_ = {values.size()};
    t.data_ = std::move(values);
    return t;
}

Tensor Tensor::from(std::initializer_list<std::initializer_list<double>> rows) {
    if (rows.size() == 0) throw ValidationError("Tensor cannot be empty");
    const std::size_t cols = rows.begin()->size();
    Tensor t({rows.size(), cols});
    std::size_t flat = 0;
    for (const auto& row : rows) {
        if (row.size() != cols) throw ValidationError("ragged initializer for rank-2 Tensor");
        for (double v : row) t.data_[flat++] = v;
    }
    return t;
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::min() const {
    return *std::min_element(data_.begin(), data_.end());
}

double Tensor::max() const {
    return *std::max_element(data_.begin(), data_.end());
}

double Tensor::sum() const {
    double acc = 0.0;
    for (double v : data_) acc += v;
    return acc;
}

double Tensor::squared_norm() const {
    double acc = 0.0;
    for (double v : data_) acc += v * v;
    return acc;
}

double Tensor::norm() const { return std::sqrt(squared_norm()); }

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

}  // namespace faprompt
