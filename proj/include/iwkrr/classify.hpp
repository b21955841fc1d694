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

#ifndef IWKRR_CLASSIFY_HPP
#define IWKRR_CLASSIFY_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "iwkrr/density.hpp"
#include "iwkrr/solver.hpp"

namespace iwkrr {

struct LabeledSet {
    Points xs;
    Eigen::VectorXi labels;  // entries in {-1, +1}

    void validate() const;
};

/// +1 where value >= 0, -1 otherwise.
Eigen::VectorXi sign_classify(const Eigen::VectorXd& values);
Eigen::VectorXi sign_classify(const FitModel& model, const Points& xs);

/// Fraction of positions where predicted and true labels differ.
double empirical_risk(const Eigen::VectorXi& predicted, const LabeledSet& data);

/// rho(y = +1 | x).
using ConditionalProb = std::function<double(std::span<const double>)>;

/// Mean of min(rho(1|x), rho(-1|x)) over the test sample, with standard error.
Estimate bayes_risk_estimate(const ConditionalProb& p_plus, const Points& test_sample);

/// 4 c_alpha d^{2/(2-alpha)}.
double excess_risk_bound(double l2_dist, double alpha, double c_alpha);

struct MarginReport {
    std::vector<double> deltas;
    std::vector<double> masses;  // fraction of test draws with |f_rho| <= delta
    double B_l = 0.0;
    double l = 0.0;
    double alpha = 0.0;     // l / (l + 1)
    double c_alpha = 1.0;   // B_l + 1
    double r_squared = 0.0;
    bool degenerate = false;  // every mass is zero: no fit
};

/// Tsybakov-margin masses on one shared test sample and a least-squares fit
/// of log mass on log delta over the nonzero masses. With a single nonzero
/// mass the fit falls back to l = 0, B_l = largest mass.
MarginReport margin_report(const std::function<double(std::span<const double>)>& f_rho, const DensityModel& test,
                           const std::vector<double>& delta_grid, Eigen::Index mc_size, std::uint64_t seed);

/// rho(1|x) = 1 / (1 + exp(-a (x_0 - b))), so f_rho(x) = tanh(a (x_0 - b) / 2).
struct LogisticLabelModel {
    double a = 4.0;
    double b = 1.2;

    [[nodiscard]] double p_plus(std::span<const double> x) const;
    [[nodiscard]] double f_rho(std::span<const double> x) const;
    [[nodiscard]] LabeledSet sample(const DensityModel& inputs, Eigen::Index n, Rng& rng) const;
};

}  // namespace iwkrr

#endif
