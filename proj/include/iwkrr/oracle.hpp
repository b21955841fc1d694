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

#ifndef IWKRR_ORACLE_HPP
#define IWKRR_ORACLE_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iwkrr/density.hpp"
#include "iwkrr/features.hpp"
#include "iwkrr/solver.hpp"
#include "iwkrr/weights.hpp"

namespace iwkrr {

using TargetFn = std::function<double(std::span<const double>)>;

/// Reference minimizer of the weighted objective over all n points.
struct DirectSolution {
    Eigen::VectorXd alpha;  // minimum-norm coefficients, one per training point
    double objective = 0.0;
    Eigen::Index rank = 0;  // numerical rank of K
};

/// Minimizes (1/n)||M_w^{1/2}(K alpha - y)||^2 + lambda alpha' K alpha by solving the
/// normal equations (K M K/n + lambda K) alpha = K M y/n in the eigenbasis of K.
/// Components along exactly zero eigenvalues of K are zero (minimum norm).
DirectSolution direct_solve(const KernelSpec& kernel, const TrainingSet& data, const Eigen::VectorXd& weights,
                            double lambda);

/// sum_i alpha_i K(x, x_i) over all training points.
Eigen::VectorXd predict_direct(const KernelSpec& kernel, const Points& train_xs, const Eigen::VectorXd& alpha,
                               const Points& xs);

/// Unweighted noiseless KRR on `mc_size` draws from `test`: a Monte-Carlo
/// approximation of f_lambda = (T + lambda)^{-1} L f_rho.
FitModel data_free_limit(const KernelSpec& kernel, const TargetFn& f_rho, const DensityModel& test, double lambda,
                         Eigen::Index mc_size, std::uint64_t seed);

struct ProjectionResult {
    Eigen::VectorXd theta;  // coefficients on the feature map
    bool rank_deficient = false;
};

/// L2(measure) projection of f_rho onto span(phi): least squares on `mc_size`
/// draws, minimum-norm when the moment matrix is singular.
ProjectionResult projection(const FeatureMap& features, const TargetFn& f_rho, const DensityModel& measure,
                            Eigen::Index mc_size, std::uint64_t seed);

/// Least-squares projection on a given sample.
ProjectionResult projection_on_sample(const FeatureMap& features, const Eigen::VectorXd& targets, const Points& xs);

/// ||f'_H - f_H||_{L2(rho_te)}. Both projections draw from the same seeded
/// stream; the distance is evaluated on an independent test sample. The
/// standard error comes from 10 batch means.
Estimate bias_term(const FeatureMap& features, const TargetFn& f_rho, const DensityModel& rho_prime,
                   const DensityModel& rho_te, Eigen::Index mc_size, std::uint64_t seed);

/// One randomized solver-versus-oracle instance.
struct RandomInstance {
    KernelSpec kernel;
    TrainingSet data;
    Eigen::VectorXd weights;
    double lambda = 1.0;
    Points grid;  // evaluation points
};

/// n <= 50, d <= 3, random kernel family, positive weights, lambda in [1e-3, 1].
RandomInstance random_instance(std::uint64_t seed, std::uint64_t index);

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;      // worst observed discrepancy
    double tolerance = 0.0;
};

/// max |a - b| / max(max |b|, tiny).
double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Solver-versus-oracle battery: mutual optimality on random instances plus
/// the reduction identities of the solver.
std::vector<CheckResult> oracle_suite(std::uint64_t seed, int instances = 100);

}  // namespace iwkrr

#endif
