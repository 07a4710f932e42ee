// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hmtl {

/// Pairwise summation, used by every reduction over samples in the loss code.
double pairwise_sum(std::span<const double> xs);

double mean(std::span<const double> xs);

std::vector<double> softmax(std::span<const double> logits);
double sigmoid(double x);

inline double clamp_probability(double p, double eps) {
    return p < eps ? eps : (p > 1.0 - eps ? 1.0 - eps : p);
}

/// Vector-Jacobian product of softmax: returns J^T g for p = softmax(z).
std::vector<double> softmax_backward(std::span<const double> p, std::span<const double> g);

}  // namespace hmtl
