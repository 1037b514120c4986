// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace faprompt {

/// Dense row-major tensor of doubles, rank 1 to 3. Scalars are represented
/// as rank-1 tensors of size 1 throughout the library.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

    static Tensor scalar(double value);
    static Tensor from(std::initializer_list<double> values);
    static Tensor from_vector(std::vector<double> values);
    /// Rank-2 tensor from nested braces: {{1, 2}, {3, 4}}.
    static Tensor from(std::initializer_list<std::initializer_list<double>> rows);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t dim(std::size_t axis) const { return shape_[axis]; }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    double min() const;
    double max() const;
    double sum() const;

    /// Squared L2 norm of all entries.
    double squared_norm() const;
    double norm() const;

    void fill(double value);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace faprompt
