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

#ifndef IWKRR_SOLVER_HPP
#define IWKRR_SOLVER_HPP

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "iwkrr/kernel.hpp"
#include "iwkrr/weights.hpp"

namespace iwkrr {

struct TrainingSet {
    Points xs;
    Eigen::VectorXd ys;

    [[nodiscard]] Eigen::Index size() const noexcept { return xs.rows(); }
    /// Throws ValidationError unless n >= 1, lengths match and ys are finite.
    void validate() const;
};

enum class SolveMethod { automatic, dual, primal };

struct FitOptions {
    /// automatic picks the primal system when the kernel has an explicit
    /// feature map of dimension smaller than the number of kept points.
    SolveMethod method = SolveMethod::automatic;
};

/// Fitted predictor f(x) = sum_i alpha_i K(x, support_i).
struct FitModel {
    KernelSpec kernel;
    Points support;
    Eigen::VectorXd alpha;
    double lambda = 0.0;
    Eigen::VectorXd weights_used;  // weights of the support points, all > 0
    Eigen::Index dropped_zero_weight_count = 0;
    Eigen::Index n_original = 0;
    double jitter = 0.0;           // diagonal jitter added by the factorization
    /// Feature-space coefficients when the primal system was solved; predict
    /// then evaluates theta . phi(x), which equals the representer expansion.
    std::optional<Eigen::VectorXd> primal;
};

/// Solves A x = b for symmetric A by Cholesky, adding diagonal jitter
/// 1e-10 * trace / size, escalated by 10x up to 1e-6 * trace / size, when the
/// factorization fails. Throws IllConditionedError after the last rung.
Eigen::VectorXd spd_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double* jitter_used = nullptr);

/// Dual solution over the positive-weight points of a precomputed Gram matrix.
struct DualSolution {
    std::vector<Eigen::Index> kept;  // indices with weight > 0, ascending
    Eigen::VectorXd alpha;           // coefficients for `kept`
    double jitter = 0.0;
};

/// alpha = (K_kk + n lambda M_{1/w})^{-1} y_k with n = y.size().
DualSolution solve_dual(const Eigen::MatrixXd& gram_full, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                        double lambda);

/// K_cross(:, kept) * alpha for a cross Gram matrix against all training points.
Eigen::VectorXd predict_dual(const Eigen::MatrixXd& gram_cross, const DualSolution& solution);

struct PrimalSolution {
    std::vector<Eigen::Index> kept;
    Eigen::VectorXd theta;  // feature coefficients
    Eigen::VectorXd alpha;  // equivalent dual coefficients for `kept`
    double jitter = 0.0;
};

/// theta = (Phi' M_w Phi + n lambda I)^{-1} Phi' M_w y; alpha_i = w_i (y_i - f(x_i)) / (n lambda).
PrimalSolution solve_primal(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                            double lambda);

FitModel fit_iwkrr(const KernelSpec& kernel, const TrainingSet& data, const WeightStrategy& strategy, double lambda,
                   const FitOptions& options = {});

/// Same fit with per-point weights supplied directly.
FitModel fit_iwkrr(const KernelSpec& kernel, const TrainingSet& data, const Eigen::VectorXd& weights, double lambda,
                   const FitOptions& options = {});

Eigen::VectorXd predict(const FitModel& model, const Points& xs);

/// (1/n) sum_i w_i (f_i - y_i)^2 for precomputed predictions f.
double weighted_empirical_risk(const Eigen::VectorXd& predictions, const TrainingSet& data,
                               const Eigen::VectorXd& weights);
double weighted_empirical_risk(const FitModel& model, const TrainingSet& data, const WeightStrategy& strategy);
double weighted_empirical_risk(const std::function<double(std::span<const double>)>& f, const TrainingSet& data,
                               const WeightStrategy& strategy);

/// Weighted risk plus lambda * alpha' K alpha, with n = data.size().
double objective(const FitModel& model, const TrainingSet& data, const Eigen::VectorXd& weights);

double test_mse(const FitModel& model, const Points& test_xs, const Eigen::VectorXd& test_ys);

}  // namespace iwkrr

#endif
