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

#ifndef IWKRR_WEIGHTS_HPP
#define IWKRR_WEIGHTS_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iwkrr/density.hpp"

namespace iwkrr {

enum class WeightKind { uniform, constant, true_iw, custom, clipped };

/// How each training point is weighted. Immutable; copies share the inner
/// strategy of a clipped weight.
class WeightStrategy {
public:
    static WeightStrategy uniform();
    static WeightStrategy constant(double value);
    /// w = p_test / p_train.
    static WeightStrategy true_iw(DensityModel test, DensityModel train);
    /// v = p_target / p_train for an arbitrary target measure.
    static WeightStrategy custom(DensityModel target, DensityModel train);
    /// min(inner, threshold); threshold may be +infinity.
    static WeightStrategy clipped(WeightStrategy inner, double threshold);

    [[nodiscard]] WeightKind kind() const noexcept { return kind_; }
    [[nodiscard]] double eval(std::span<const double> x) const;
    [[nodiscard]] Eigen::VectorXd eval(const Points& xs) const;

    [[nodiscard]] const DensityModel& target() const;
    [[nodiscard]] const DensityModel& train() const;
    [[nodiscard]] const WeightStrategy& inner() const;
    [[nodiscard]] double threshold() const noexcept { return value_; }
    [[nodiscard]] double constant_value() const noexcept { return value_; }

    /// Short label used in result tables: iw, uniform, clipped, custom, constant.
    [[nodiscard]] std::string label() const;

private:
    WeightStrategy() = default;

    WeightKind kind_ = WeightKind::uniform;
    double value_ = 1.0;
    std::optional<DensityModel> target_;
    std::optional<DensityModel> train_;
    std::shared_ptr<const WeightStrategy> inner_;
};

/// Free-function form of WeightStrategy::eval.
double weight_eval(const WeightStrategy& strategy, std::span<const double> x);

/// sup_x p_test(x) / p_train(x) when it has a closed form (1-d or diagonal
/// Gaussians, nested intervals); +infinity when unbounded; nullopt otherwise.
std::optional<double> weight_sup(const DensityModel& test, const DensityModel& train);

/// Monte-Carlo estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    bool unstable = false;  // overflow: value reported as +infinity
};

/// H_alpha = alpha^-1 log E_test[w^alpha] from `sample_size` test draws.
Estimate renyi_divergence(const DensityModel& test, const DensityModel& train, double alpha,
                          Eigen::Index sample_size, std::uint64_t seed);

/// H_alpha for every alpha on one shared sample, so the curve is monotone.
std::vector<Estimate> renyi_curve(const DensityModel& test, const DensityModel& train,
                                  const std::vector<double>& alphas, Eigen::Index sample_size, std::uint64_t seed);

/// Closed-form Renyi divergence D_a(p || q) of order a > 0, a != 1, between
/// two 1-d Gaussians. Returns +infinity where the integral diverges.
double gaussian_renyi_divergence(double mean_p, double var_p, double mean_q, double var_q, double a);

struct MomentResult {
    int m = 2;
    double q = 1.0;
    double lhs = 0.0;
    double std_error = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
    bool underestimate = false;  // q == 0: sample max stands in for the essential supremum
    bool unstable = false;
};

/// (E_test[w^{(m-1)/q}])^q against (1/2) m! W^{m-2} sigma^2. At q == 0 the left
/// side is the sample maximum of w^{m-1}.
MomentResult moment_check(const DensityModel& test, const DensityModel& train, int m, double q, double W,
                          double sigma, Eigen::Index sample_size, std::uint64_t seed);

struct TailPoint {
    double t = 0.0;
    double empirical = 0.0;  // 2 * fraction of test draws with w >= t
    double std_error = 0.0;
    double bound = 0.0;      // sigma^2 exp(-t^{1/q} / W)
    bool satisfied = false;
};

std::vector<TailPoint> tail_check(const DensityModel& test, const DensityModel& train, double q, double W,
                                  double sigma, const std::vector<double>& t_grid, Eigen::Index sample_size,
                                  std::uint64_t seed);

struct WeightDiagnostics {
    double sup_estimate = 0.0;
    std::optional<double> sup_analytic;
    std::vector<double> alphas;
    std::vector<Estimate> renyi_curve;
    std::vector<MomentResult> moment_table;
    std::vector<TailPoint> tail_curve;
};

struct DiagnosticsOptions {
    std::vector<double> alphas{0.5, 1.0, 2.0, 3.0};
    std::vector<int> moments{2, 3, 4, 5};
    double q = 1.0;
    double W = 1.0;
    double sigma = 1.0;
    std::vector<double> t_grid{1.0, 2.0, 5.0, 10.0, 20.0, 50.0};
    Eigen::Index sample_size = 100000;
};

/// All diagnostics; each component uses its own seeded sub-stream.
WeightDiagnostics diagnose_weights(const DensityModel& test, const DensityModel& train,
                                   const DiagnosticsOptions& options, std::uint64_t seed);

}  // namespace iwkrr

#endif
