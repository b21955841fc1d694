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

#ifndef IWKRR_FEATURES_HPP
#define IWKRR_FEATURES_HPP

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "iwkrr/kernel.hpp"

namespace iwkrr {

/// Explicit finite feature map phi with phi(x) . phi(y) == K(x, y) for
/// polynomial and linear kernels. Polynomial features are scaled monomials
/// from the multinomial expansion of (x . y + c)^m.
class FeatureMap {
public:
    FeatureMap(const KernelSpec& spec, Eigen::Index input_dim);

    [[nodiscard]] Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(coef_.size()); }
    [[nodiscard]] Eigen::Index input_dim() const noexcept { return input_dim_; }
    [[nodiscard]] const KernelSpec& kernel() const noexcept { return spec_; }

    [[nodiscard]] Eigen::VectorXd operator()(std::span<const double> x) const;

    /// n x p design matrix, one feature row per input row.
    [[nodiscard]] Eigen::MatrixXd design(const Points& xs) const;

    /// f(x) = theta . phi(x) for every row of xs.
    [[nodiscard]] Eigen::VectorXd evaluate(const Eigen::VectorXd& theta, const Points& xs) const;

private:
    KernelSpec spec_;
    Eigen::Index input_dim_;
    std::vector<std::vector<int>> exponents_;  // per feature, power of each input coordinate
    std::vector<double> coef_;
};

}  // namespace iwkrr

#endif
