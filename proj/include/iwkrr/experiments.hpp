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

#ifndef IWKRR_EXPERIMENTS_HPP
#define IWKRR_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iwkrr/classify.hpp"
#include "iwkrr/density.hpp"
#include "iwkrr/kernel.hpp"
#include "iwkrr/oracle.hpp"
#include "iwkrr/schedule.hpp"
#include "iwkrr/spectrum.hpp"
#include "iwkrr/weights.hpp"

namespace iwkrr {

/// exp(-x^{-2k}), continuously extended by 0 at x = 0.
double regression_fn(int k, double x);

/// A weighting strategy with the name used in result tables. With
/// scheduled_clipping the strategy's weights are clipped at the clipped
/// schedule's D(n) in rate studies.
struct NamedStrategy {
    std::string name;
    WeightStrategy strategy = WeightStrategy::uniform();
    bool scheduled_clipping = false;
};

std::vector<NamedStrategy> default_strategies(const DensityModel& test, const DensityModel& train);

struct SimConfig {
    int k = 1;
    Eigen::Index n_train = 200;
    Eigen::Index n_test = 2000;
    double noise_sd = 0.05;
    DensityModel train_dist = DensityModel::gaussian1d(0.0, 0.5);
    DensityModel test_dist = DensityModel::gaussian1d(1.5, 0.3);
    KernelSpec kernel = KernelSpec::gaussian(1.0);
    bool normalize_kernel = true;
    std::vector<double> lambda_grid = log_grid(1e-6, 10.0, 15);
    std::vector<NamedStrategy> strategies = default_strategies(test_dist, train_dist);
    int reps = 100;
    std::uint64_t master_seed = 0;
    bool noisy_targets = false;  // true: MSE against noisy test labels
    unsigned threads = 1;
};

struct ResultRow {
    std::string experiment;
    std::string strategy;
    int k_or_degree = 0;
    double lambda = 0.0;
    long long n = 0;
    int rep = 0;
    double mse = 0.0;
    bool failed = false;
};

struct Aggregate {
    std::string strategy;
    int k_or_degree = 0;
    double lambda = 0.0;
    long long n = 0;
    double mean = 0.0;
    double std_error = 0.0;
    int count = 0;
};

struct ExperimentResult {
    std::string experiment;
    std::vector<ResultRow> rows;        // canonical order: rep, k_or_degree, strategy, lambda
    std::vector<Aggregate> aggregates;  // sorted by strategy, k_or_degree, n, lambda
    std::vector<std::uint64_t> rep_seeds;
    double domain_bound = 0.0;
};

/// Mean and standard error over the non-failed rows of each cell.
std::vector<Aggregate> aggregate(const std::vector<ResultRow>& rows);

/// Training and test draws of one simulation repetition.
struct SimData {
    Points train_xs;
    Eigen::VectorXd train_ys;
    Points test_xs;
    Eigen::VectorXd test_targets;
};

/// Draws a repetition from `rng`: train inputs, noise, then test inputs.
SimData draw_sim_data(const SimConfig& config, const TargetFn& f_rho, Rng& rng);

/// Kernel normalized over the 0.999 quantile radius of the train/test mixture.
KernelSpec sim_kernel(const SimConfig& config, const KernelSpec& kernel, double* domain_bound = nullptr);

/// Each repetition draws data from stream (master_seed, rep) and fits every
/// (lambda, strategy) cell; solver failures are recorded, not thrown.
ExperimentResult run_gaussian_sim(const SimConfig& config);

/// Polynomial kernels (x x' + 1)^m for every degree at one fixed lambda.
ExperimentResult run_polynomial_sim(const SimConfig& config, const std::vector<int>& degrees = {1, 2, 3, 4, 5, 6, 7},
                                    double lambda = 1.0);

struct BestLambda {
    std::string strategy;
    int k_or_degree = 0;
    long long n = 0;
    double lambda = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
};

/// Per (strategy, k_or_degree, n), the lambda with smallest mean MSE.
std::vector<BestLambda> min_over_lambda(const ExperimentResult& result);

struct PairedComparison {
    std::string a, b;
    int k_or_degree = 0;
    double lambda_a = 0.0, lambda_b = 0.0;
    double mean_a = 0.0, mean_b = 0.0;
    int pairs = 0;
    int wins_a = 0;  // reps with mse_a < mse_b
    int ties = 0;
    double fraction_a = 0.0;
    double sign_test_p = 1.0;  // one-sided, H1: a beats b
};

/// How each rep's MSE is selected from the lambda grid before pairing.
/// best_mean_lambda: every rep at the strategy's min-over-lambda of the mean.
/// per_rep_min: every rep at its own min over lambda.
enum class Pairing { best_mean_lambda, per_rep_min };

/// Compares strategies a and b rep by rep. With per_rep_min, lambda_a and
/// lambda_b still report the best-mean lambdas.
PairedComparison paired_comparison(const ExperimentResult& result, const std::string& a, const std::string& b,
                                   int k_or_degree, Pairing pairing = Pairing::best_mean_lambda);

/// P(X >= wins) for X ~ Binomial(trials, 1/2).
double sign_test_p_value(int wins, int trials);

/// Least-squares line through (log x, log y).
struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};
LogLogFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y);

enum class ScheduleSource { theorem, fixed, grid };

struct RateStudyConfig {
    std::vector<long long> n_grid{100, 200, 400, 800, 1600, 3200, 6400};
    int reps = 50;
    std::uint64_t seed = 0;
    KernelSpec kernel = KernelSpec::linear();
    bool normalize_kernel = true;
    TargetFn f_rho;
    std::optional<TargetFn> target;  // MSE reference; defaults to f_rho
    DensityModel train_dist = DensityModel::uniform_interval(0.0, 2.0);
    DensityModel test_dist = DensityModel::uniform_interval(1.0, 2.0);
    double noise_sd = 1.0;
    std::vector<NamedStrategy> strategies;
    ScheduleSource source = ScheduleSource::theorem;
    RateParams params;
    std::optional<double> c;  // theorem schedule constant (c1 for clipped); default: lower bound (c1 = 1)
    int clip_m = 10;
    double clip_epsilon = 0.01;
    double fixed_lambda = 1e-3;
    std::vector<double> lambda_grid = log_grid(1e-6, 10.0, 15);
    Eigen::Index n_test = 2000;
    unsigned threads = 1;
};

struct RateCurve {
    std::string strategy;
    std::vector<long long> n;
    std::vector<double> lambda;  // schedule value, or the grid argmin
    std::vector<double> D;       // clipping threshold, +inf when unclipped
    std::vector<double> mean_mse;
    std::vector<double> std_error;
    std::vector<bool> excluded;  // every rep failed at this n
    std::vector<bool> schedule_feasible;
    LogLogFit fit;
    double theoretical_slope = 0.0;  // -2 r beta
};

struct RateStudyResult {
    std::vector<RateCurve> curves;
    std::vector<ResultRow> rows;
    double domain_bound = 0.0;
};

RateStudyResult run_rate_study(const RateStudyConfig& config);

struct ClassificationConfig {
    LogisticLabelModel labels;
    DensityModel train_dist = DensityModel::gaussian1d(0.0, 0.5);
    DensityModel test_dist = DensityModel::gaussian1d(1.5, 0.3);
    KernelSpec kernel = KernelSpec::gaussian(1.0);
    double lambda = 1e-3;
    std::vector<long long> n_grid{200, 400, 800};
    Eigen::Index n_test = 5000;
    int runs = 20;
    std::uint64_t seed = 0;
    std::vector<double> delta_grid = log_grid(0.01, 1.0, 12);
    Eigen::Index margin_mc = 200000;
    std::vector<NamedStrategy> strategies = default_strategies(test_dist, train_dist);
    unsigned threads = 1;
};

struct ClassificationRow {
    std::string strategy;
    long long n = 0;
    int run = 0;
    double risk = 0.0;        // empirical risk of sign(f_hat)
    double bayes_risk = 0.0;  // empirical risk of sign(f_rho) on the same test labels
    double excess = 0.0;
    double excess_se = 0.0;   // paired standard error
    double l2_dist = 0.0;     // MC ||f_hat - f_rho||_{rho_te}
    double bound = 0.0;       // excess_risk_bound(l2_dist, alpha, c_alpha)
    bool within = false;      // excess <= bound + 3 se
};

struct ClassificationResult {
    MarginReport margin;
    std::vector<ClassificationRow> rows;
};

ClassificationResult run_classification_study(const ClassificationConfig& config);

}  // namespace iwkrr

#endif
