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

#include "iwkrr/solver.hpp"

#include <cmath>
#include <limits>

#include "iwkrr/error.hpp"
#include "iwkrr/features.hpp"

namespace iwkrr {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterStop = 1e-6;

double condition_estimate(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
    const double lo = ev.minCoeff();
    return lo > 0.0 ? ev.maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

void check_lambda(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidRegularizerError("lambda must be positive and finite");
}

std::vector<Eigen::Index> positive_indices(const Eigen::VectorXd& w) {
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w(i)) || w(i) < 0.0) throw ValidationError("weights must be finite and nonnegative");
        if (w(i) > 0.0) kept.push_back(i);
    }
    if (kept.empty()) throw EmptyEffectiveSampleError("every training weight is zero");
    return kept;
}

}  // namespace

void TrainingSet::validate() const {
    if (xs.rows() < 1 || xs.cols() < 1) throw ValidationError("training set must contain at least one point");
    if (ys.size() != xs.rows()) throw ValidationError("training inputs and outputs differ in length");
    if (!ys.allFinite()) throw ValidationError("training outputs must be finite");
    if (!xs.allFinite()) throw ValidationError("training inputs must be finite");
}

Eigen::VectorXd spd_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double* jitter_used) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
        if (jitter_used) *jitter_used = 0.0;
        return llt.solve(b);
    }
    const double base = a.trace() / static_cast<double>(a.rows());
    for (double rel = kJitterStart; rel <= kJitterStop * (1.0 + 1e-9); rel *= 10.0) {
        Eigen::MatrixXd aj = a;
        aj.diagonal().array() += rel * base;
        llt.compute(aj);
        if (llt.info() == Eigen::Success) {
            if (jitter_used) *jitter_used = rel * base;
            return llt.solve(b);
        }
    }
    const double cond = condition_estimate(a);
    throw IllConditionedError("cholesky failed after jitter escalation (condition estimate " + std::to_string(cond) + ")",
                              cond);
}

DualSolution solve_dual(const Eigen::MatrixXd& gram_full, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                        double lambda) {
    check_lambda(lambda);
    const Eigen::Index n = y.size();
    if (n < 1 || gram_full.rows() != n || gram_full.cols() != n || w.size() != n)
        throw ValidationError("solve_dual: inconsistent sizes");
    DualSolution sol;
    sol.kept = positive_indices(w);
    const auto k = static_cast<Eigen::Index>(sol.kept.size());
    Eigen::MatrixXd a(k, k);
    Eigen::VectorXd rhs(k);
    const double nl = static_cast<double>(n) * lambda;
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) a(i, j) = gram_full(sol.kept[i], sol.kept[j]);
        a(i, i) += nl / w(sol.kept[i]);
        rhs(i) = y(sol.kept[i]);
    }
    sol.alpha = spd_solve(a, rhs, &sol.jitter);
    return sol;
}

Eigen::VectorXd predict_dual(const Eigen::MatrixXd& gram_cross, const DualSolution& solution) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(gram_cross.rows());
    for (std::size_t j = 0; j < solution.kept.size(); ++j)
        out += solution.alpha(static_cast<Eigen::Index>(j)) * gram_cross.col(solution.kept[j]);
    return out;
}

PrimalSolution solve_primal(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                            double lambda) {
    check_lambda(lambda);
    const Eigen::Index n = y.size();
    if (n < 1 || design.rows() != n || w.size() != n) throw ValidationError("solve_primal: inconsistent sizes");
    PrimalSolution sol;
    sol.kept = positive_indices(w);
    const double nl = static_cast<double>(n) * lambda;
    const Eigen::MatrixXd weighted = design.array().colwise() * w.array();
    Eigen::MatrixXd a = design.transpose() * weighted;
    a = 0.5 * (a + a.transpose()).eval();
    a.diagonal().array() += nl;
    const Eigen::VectorXd rhs = weighted.transpose() * y;
    sol.theta = spd_solve(a, rhs, &sol.jitter);
    sol.alpha.resize(static_cast<Eigen::Index>(sol.kept.size()));
    for (std::size_t j = 0; j < sol.kept.size(); ++j) {
        const Eigen::Index i = sol.kept[j];
        sol.alpha(static_cast<Eigen::Index>(j)) = w(i) * (y(i) - design.row(i).dot(sol.theta)) / nl;
    }
    return sol;
}

FitModel fit_iwkrr(const KernelSpec& kernel, const TrainingSet& data, const WeightStrategy& strategy, double lambda,
                   const FitOptions& options) {
    data.validate();
    return fit_iwkrr(kernel, data, strategy.eval(data.xs), lambda, options);
}

FitModel fit_iwkrr(const KernelSpec& kernel, const TrainingSet& data, const Eigen::VectorXd& weights, double lambda,
                   const FitOptions& options) {
    kernel.validate();
    data.validate();
    check_lambda(lambda);
    if (weights.size() != data.size()) throw ValidationError("one weight per training point is required");

    FitModel model;
    model.kernel = kernel;
    model.lambda = lambda;
    model.n_original = data.size();

    bool use_primal = options.method == SolveMethod::primal;
    std::optional<FeatureMap> features;
    if (options.method != SolveMethod::dual && kernel.finite_rank()) {
        features.emplace(kernel, data.xs.cols());
        if (options.method == SolveMethod::automatic) {
            const auto positive = (weights.array() > 0.0).count();
            use_primal = features->dim() < positive;
        }
    } else if (use_primal) {
        throw ValidationError("primal solve requires a kernel with explicit features");
    }

    std::vector<Eigen::Index> kept;
    if (use_primal) {
        PrimalSolution sol = solve_primal(features->design(data.xs), data.ys, weights, lambda);
        kept = std::move(sol.kept);
        model.alpha = std::move(sol.alpha);
        model.primal = std::move(sol.theta);
        model.jitter = sol.jitter;
    } else {
        DualSolution sol = solve_dual(gram(kernel, data.xs), data.ys, weights, lambda);
        kept = std::move(sol.kept);
        model.alpha = std::move(sol.alpha);
        model.jitter = sol.jitter;
    }
    const auto k = static_cast<Eigen::Index>(kept.size());
    model.support.resize(k, data.xs.cols());
    model.weights_used.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        model.support.row(j) = data.xs.row(kept[j]);
        model.weights_used(j) = weights(kept[j]);
    }
    model.dropped_zero_weight_count = data.size() - k;
    return model;
}

Eigen::VectorXd predict(const FitModel& model, const Points& xs) {
    if (xs.rows() == 0) return Eigen::VectorXd(0);
    if (xs.cols() != model.support.cols()) throw ValidationError("query points have the wrong dimension");
    if (model.primal) return FeatureMap(model.kernel, xs.cols()).evaluate(*model.primal, xs);
    return gram(model.kernel, xs, model.support) * model.alpha;
}

double weighted_empirical_risk(const Eigen::VectorXd& predictions, const TrainingSet& data,
                               const Eigen::VectorXd& weights) {
    if (predictions.size() != data.size() || weights.size() != data.size())
        throw ValidationError("risk: inconsistent sizes");
    if (data.size() == 0) throw ValidationError("risk of an empty training set");
    return (weights.array() * (predictions - data.ys).array().square()).sum() / static_cast<double>(data.size());
}

double weighted_empirical_risk(const FitModel& model, const TrainingSet& data, const WeightStrategy& strategy) {
    return weighted_empirical_risk(predict(model, data.xs), data, strategy.eval(data.xs));
}

double weighted_empirical_risk(const std::function<double(std::span<const double>)>& f, const TrainingSet& data,
                               const WeightStrategy& strategy) {
    Eigen::VectorXd pred(data.size());
    for (Eigen::Index i = 0; i < data.size(); ++i) pred(i) = f(row_span(data.xs, i));
    return weighted_empirical_risk(pred, data, strategy.eval(data.xs));
}

double objective(const FitModel& model, const TrainingSet& data, const Eigen::VectorXd& weights) {
    const Eigen::MatrixXd k = gram(model.kernel, model.support);
    return weighted_empirical_risk(predict(model, data.xs), data, weights) +
           model.lambda * model.alpha.dot(k * model.alpha);
}

double test_mse(const FitModel& model, const Points& test_xs, const Eigen::VectorXd& test_ys) {
    if (test_xs.rows() == 0) throw ValidationError("test set is empty");
    if (test_ys.size() != test_xs.rows()) throw ValidationError("test inputs and outputs differ in length");
    return (predict(model, test_xs) - test_ys).squaredNorm() / static_cast<double>(test_ys.size());
}

}  // namespace iwkrr
