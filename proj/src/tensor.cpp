// SPDX-License-Identifier: Apache-2.0
#include "hmtl/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "hmtl/error.hpp"

namespace hmtl {

namespace {
std::size_t extent_product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(extent_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != extent_product(shape_))
        throw DataError("tensor data length does not match its shape");
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace hmtl
