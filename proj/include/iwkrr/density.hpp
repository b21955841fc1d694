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

#ifndef IWKRR_DENSITY_HPP
#define IWKRR_DENSITY_HPP

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iwkrr/kernel.hpp"
#include "iwkrr/random.hpp"

namespace iwkrr {

enum class DensityFamily { gaussian1d, gaussian_nd, uniform_interval };

/// Analytic input distribution. Gaussian parameters are (mean, variance).
class DensityModel {
public:
    static DensityModel gaussian1d(double mean, double variance);
    static DensityModel gaussian_nd(Eigen::VectorXd mean, Eigen::VectorXd variances);
    static DensityModel uniform_interval(double lo, double hi);

    [[nodiscard]] DensityFamily family() const noexcept { return family_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return mean_.size(); }

    /// Gaussian: means and variances. Interval: mean_ = {lo}, var_ = {hi}.
    [[nodiscard]] const Eigen::VectorXd& mean() const noexcept { return mean_; }
    [[nodiscard]] const Eigen::VectorXd& variances() const noexcept { return var_; }
    [[nodiscard]] double lo() const;
    [[nodiscard]] double hi() const;

    [[nodiscard]] double pdf(std::span<const double> x) const;
    [[nodiscard]] double log_pdf(std::span<const double> x) const;

    /// 1-d families only.
    [[nodiscard]] double cdf(double x) const;

    /// Exact second moment E[x^2] for 1-d families.
    [[nodiscard]] double second_moment() const;

    [[nodiscard]] Points sample(Rng& rng, Eigen::Index n) const;

    [[nodiscard]] std::string describe() const;

    bool operator==(const DensityModel&) const = default;

private:
    DensityModel(DensityFamily family, Eigen::VectorXd mean, Eigen::VectorXd var);

    DensityFamily family_;
    Eigen::VectorXd mean_;
    Eigen::VectorXd var_;
};

/// Smallest r with P(||x|| <= r) >= p under the equal-weight mixture of
/// `models`. Uses the exact CDF in one dimension and `mc_size` draws
/// otherwise.
double mixture_quantile_radius(const std::vector<DensityModel>& models, double p, std::uint64_t seed,
                               Eigen::Index mc_size = 200000);

}  // namespace iwkrr

#endif
