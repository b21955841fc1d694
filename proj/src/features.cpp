/*
 * Copyright 2026 The iwkrr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "iwkrr/features.hpp"

#include <cmath>

#include "iwkrr/error.hpp"

namespace iwkrr {

namespace {

double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

// All exponent vectors of length `slots` summing to `total`, in lexicographic order.
void compositions(int total, std::size_t slots, std::vector<int>& current, std::vector<std::vector<int>>& out) {
    if (current.size() + 1 == slots) {
        current.push_back(total);
        out.push_back(current);
        current.pop_back();
        return;
    }
    for (int k = total; k >= 0; --k) {
        current.push_back(k);
        compositions(total - k, slots, current, out);
        current.pop_back();
    }
}

}  // namespace

FeatureMap::FeatureMap(const KernelSpec& spec, Eigen::Index input_dim) : spec_(spec), input_dim_(input_dim) {
    spec.validate();
    if (input_dim < 1) throw ValidationError("feature map needs input dimension >= 1");
    const auto d = static_cast<std::size_t>(input_dim);
    if (spec.family == KernelFamily::linear) {
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<int> e(d, 0);
            e[j] = 1;
            exponents_.push_back(e);
            coef_.push_back(std::sqrt(spec.scale));
        }
        return;
    }
    if (spec.family != KernelFamily::polynomial)
        throw ValidationError("explicit features exist only for polynomial and linear kernels");

    // Slot 0 holds the power of the offset c, slots 1..d the input coordinates.
    std::vector<std::vector<int>> all;
    std::vector<int> current;
    compositions(spec.degree, d + 1, current, all);
    for (const auto& k : all) {
        if (k[0] > 0 && spec.offset == 0.0) continue;
        double log_multinomial = log_factorial(spec.degree);
        for (int kj : k) log_multinomial -= log_factorial(kj);
        const double c_power = k[0] > 0 ? std::pow(spec.offset, k[0]) : 1.0;
        coef_.push_back(std::sqrt(spec.scale * std::exp(log_multinomial) * c_power));
        exponents_.emplace_back(k.begin() + 1, k.end());
    }
}

Eigen::VectorXd FeatureMap::operator()(std::span<const double> x) const {
    if (static_cast<Eigen::Index>(x.size()) != input_dim_) throw ValidationError("feature map: wrong input dimension");
    Eigen::VectorXd phi(dim());
    for (std::size_t f = 0; f < coef_.size(); ++f) {
        double v = coef_[f];
        for (std::size_t j = 0; j < x.size(); ++j)
            if (exponents_[f][j] > 0) v *= std::pow(x[j], exponents_[f][j]);
        phi(static_cast<Eigen::Index>(f)) = v;
    }
    return phi;
}

Eigen::MatrixXd FeatureMap::design(const Points& xs) const {
    Eigen::MatrixXd phi(xs.rows(), dim());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) phi.row(i) = (*this)(row_span(xs, i)).transpose();
    return phi;
}

Eigen::VectorXd FeatureMap::evaluate(const Eigen::VectorXd& theta, const Points& xs) const {
    if (theta.size() != dim()) throw ValidationError("feature coefficients have wrong length");
    return design(xs) * theta;
}

}  // namespace iwkrr
