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

#ifndef IWKRR_SPECTRUM_HPP
#define IWKRR_SPECTRUM_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "iwkrr/density.hpp"
#include "iwkrr/features.hpp"
#include "iwkrr/kernel.hpp"

namespace iwkrr {

/// `count` log-spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

/// Eigenvalues of gram(kernel, xs) / n in descending order. Values in
/// [-1e-10, 0) are clamped to 0; anything more negative raises NumericalError.
Eigen::VectorXd empirical_eigs(const KernelSpec& kernel, const Points& xs);

/// N(lambda) = sum_i mu_i / (mu_i + lambda).
double effective_dimension(const Eigen::VectorXd& eigenvalues, double lambda);

struct DecayFit {
    double s_hat = 1.0;
    double slope = 0.0;
    double r_squared = 0.0;
    Eigen::Index used = 0;     // eigenvalues entering the regression
    bool finite_rank = false;  // some eigenvalue sits at or below the tail floor
};

/// Least-squares slope b of log mu_i on log i over i > head_skip with
/// mu_i > tail_floor; s_hat = clamp(-1/b, 0, 1). Needs 5 usable values.
DecayFit estimate_decay(const Eigen::VectorXd& eigenvalues, Eigen::Index head_skip, double tail_floor);

/// Default rule: head_skip = 2, tail_floor = 1e-10 * mu_1.
DecayFit estimate_decay(const Eigen::VectorXd& eigenvalues);

/// max(1, max over the grid of sqrt(N(lambda) lambda^s)). A grid maximum
/// can only underestimate the supremum over (0, 1].
double estimate_Es(const Eigen::VectorXd& eigenvalues, double s, const std::vector<double>& lambda_grid);

struct SpectrumReport {
    Eigen::VectorXd eigenvalues;
    Eigen::Index sample_size = 0;
    std::vector<std::pair<double, double>> eff_dim_curve;
    std::vector<double> es_grid;
    double s_hat = 1.0;
    double E_s_hat = 1.0;
    DecayFit fit;
    bool decay_fit_failed = false;  // too few usable eigenvalues; s_hat falls back to 1
};

struct SpectrumOptions {
    std::vector<double> curve_grid = log_grid(1e-6, 1.0, 25);
    std::vector<double> es_grid = log_grid(1e-6, 1.0, 61);
    Eigen::Index head_skip = 2;
    double tail_floor_rel = 1e-10;
};

SpectrumReport spectrum_report(const KernelSpec& kernel, const Points& xs, const SpectrumOptions& options = {});

/// Weighted second-moment operators in an explicit feature basis, built from
/// one training-distribution sample: T = mean w phi phi', T_D = mean min(w, D) phi phi'.
struct OperatorSample {
    Eigen::MatrixXd design;  // N x p features of the training draws
    Eigen::VectorXd weights; // true importance weights at the draws
};

OperatorSample operator_sample(const FeatureMap& features, const DensityModel& test, const DensityModel& train,
                               Eigen::Index mc_size, std::uint64_t seed);

struct OperatorCheck {
    double lambda = 0.0;
    double D = 0.0;
    double norm1 = 0.0;  // ||(T - T_D)(T + lambda)^{-1}||
    double norm2 = 0.0;  // ||T (T_D + lambda)^{-1}||
    double tr_T = 0.0;   // Tr T (T + lambda)^{-1}
    double tr_TD = 0.0;  // Tr T_D (T_D + lambda)^{-1}
    double norm1_se = 0.0;
    double norm2_se = 0.0;
    Eigen::MatrixXd T;
    Eigen::MatrixXd T_D;
};

/// Norms and traces on a fixed sample; bootstrap standard errors from
/// `bootstrap` resamples (0 disables them).
OperatorCheck clipped_operator_check(const OperatorSample& sample, double D, double lambda, int bootstrap,
                                     std::uint64_t seed);

OperatorCheck clipped_operator_check(const FeatureMap& features, const DensityModel& test, const DensityModel& train,
                                     double D, double lambda, Eigen::Index mc_size, std::uint64_t seed,
                                     int bootstrap = 30);

}  // namespace iwkrr

#endif
