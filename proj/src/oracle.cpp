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

#include "iwkrr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iwkrr/error.hpp"
#include "iwkrr/random.hpp"

namespace iwkrr {

DirectSolution direct_solve(const KernelSpec& kernel, const TrainingSet& data, const Eigen::VectorXd& weights,
                            double lambda) {
    data.validate();
    if (!(lambda > 0.0)) throw InvalidRegularizerError("lambda must be positive");
    if (weights.size() != data.size()) throw ValidationError("one weight per training point is required");
    const Eigen::Index n = data.size();
    const double nd = static_cast<double>(n);

    const Eigen::MatrixXd k = gram(kernel, data.xs);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    if (es.info() != Eigen::Success) throw NumericalError("oracle eigendecomposition failed");
    const Eigen::MatrixXd& u = es.eigenvectors();
    const Eigen::VectorXd mu = es.eigenvalues().cwiseMax(0.0);
    const double tol = nd * std::numeric_limits<double>::epsilon() * std::max(mu.maxCoeff(), 1e-300);

    // With alpha = U b the normal equations (K M K/n + lambda K) alpha = K M y/n
    // reduce, on every direction with mu_i > 0, to (U'MU diag(mu)/n + lambda) b = U'My/n.
    // Directions in the numerical null space of K are set to zero.
    const Eigen::MatrixXd b_mat = u.transpose() * (u.array().colwise() * weights.array()).matrix();
    Eigen::MatrixXd system = b_mat * mu.asDiagonal() / nd;
    system.diagonal().array() += lambda;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    Eigen::VectorXd b = lu.solve(u.transpose() * weights.cwiseProduct(data.ys) / nd);

    // Refinement against the assembled Gram matrix: the residual of the normal
    // equations is K h with h = M (K alpha - y)/n + lambda alpha.
    for (int it = 0; it < 2; ++it) {
        const Eigen::VectorXd alpha = u * b;
        const Eigen::VectorXd h = weights.cwiseProduct(k * alpha - data.ys) / nd + lambda * alpha;
        b -= lu.solve(u.transpose() * h);
    }

    DirectSolution out;
    out.rank = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (mu(i) > tol) ++out.rank;
        if (mu(i) == 0.0) b(i) = 0.0;
    }
    out.alpha = u * b;
    const Eigen::VectorXd fitted = u * mu.cwiseProduct(b);
    out.objective = (weights.array() * (fitted - data.ys).array().square()).sum() / nd +
                    lambda * b.dot(mu.cwiseProduct(b));
    return out;
}

Eigen::VectorXd predict_direct(const KernelSpec& kernel, const Points& train_xs, const Eigen::VectorXd& alpha,
                               const Points& xs) {
    return gram(kernel, xs, train_xs) * alpha;
}

FitModel data_free_limit(const KernelSpec& kernel, const TargetFn& f_rho, const DensityModel& test, double lambda,
                         Eigen::Index mc_size, std::uint64_t seed) {
    if (mc_size < 1000) throw ValidationError("data-free limit needs at least 1000 samples");
    Rng rng = make_stream(seed, 0);
    TrainingSet data{test.sample(rng, mc_size), Eigen::VectorXd(mc_size)};
    for (Eigen::Index i = 0; i < mc_size; ++i) data.ys(i) = f_rho(row_span(data.xs, i));
    return fit_iwkrr(kernel, data, WeightStrategy::uniform(), lambda);
}

ProjectionResult projection_on_sample(const FeatureMap& features, const Eigen::VectorXd& targets, const Points& xs) {
    const Eigen::MatrixXd phi = features.design(xs);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(phi);
    ProjectionResult out;
    out.theta = cod.solve(targets);
    out.rank_deficient = cod.rank() < phi.cols();
    return out;
}

ProjectionResult projection(const FeatureMap& features, const TargetFn& f_rho, const DensityModel& measure,
                            Eigen::Index mc_size, std::uint64_t seed) {
    if (mc_size < 10000) throw ValidationError("projection needs at least 10000 samples");
    Rng rng = make_stream(seed, 0);
    const Points xs = measure.sample(rng, mc_size);
    Eigen::VectorXd targets(mc_size);
    for (Eigen::Index i = 0; i < mc_size; ++i) targets(i) = f_rho(row_span(xs, i));
    return projection_on_sample(features, targets, xs);
}

namespace {

double projection_distance(const FeatureMap& features, const TargetFn& f_rho, const DensityModel& rho_prime,
                           const DensityModel& rho_te, Eigen::Index size, std::uint64_t proj_seed,
                           std::uint64_t eval_seed) {
    const Eigen::VectorXd a = projection(features, f_rho, rho_prime, size, proj_seed).theta;
    const Eigen::VectorXd b = projection(features, f_rho, rho_te, size, proj_seed).theta;
    Rng rng = make_stream(eval_seed, 0);
    const Points xs = rho_te.sample(rng, size);
    return std::sqrt(features.evaluate(a - b, xs).squaredNorm() / static_cast<double>(size));
}

}  // namespace

Estimate bias_term(const FeatureMap& features, const TargetFn& f_rho, const DensityModel& rho_prime,
                   const DensityModel& rho_te, Eigen::Index mc_size, std::uint64_t seed) {
    constexpr int kBatches = 10;
    if (mc_size < 10000 * kBatches) throw ValidationError("bias term needs at least 100000 samples");
    Estimate e;
    e.value = projection_distance(features, f_rho, rho_prime, rho_te, mc_size, mix_seed(seed, 0), mix_seed(seed, 1));
    const Eigen::Index batch = mc_size / kBatches;
    Eigen::ArrayXd values(kBatches);
    for (int b = 0; b < kBatches; ++b)
        values(b) = projection_distance(features, f_rho, rho_prime, rho_te, batch, mix_seed(seed, 2 + 2 * b),
                                        mix_seed(seed, 3 + 2 * b));
    const double sd = std::sqrt((values - values.mean()).square().sum() / (kBatches - 1));
    e.std_error = sd / std::sqrt(static_cast<double>(kBatches));
    return e;
}

RandomInstance random_instance(std::uint64_t seed, std::uint64_t index) {
    Rng rng = make_stream(seed, index);
    std::uniform_int_distribution<int> n_dist(5, 50), d_dist(1, 3), family(0, 3), degree(1, 3), smooth(0, 2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    const auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, unit(rng)); };

    RandomInstance inst;
    const int n = n_dist(rng);
    const int d = d_dist(rng);
    inst.data.xs.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) inst.data.xs(i, j) = z(rng);
    inst.data.ys.resize(n);
    for (int i = 0; i < n; ++i) inst.data.ys(i) = std::sin(inst.data.xs.row(i).sum()) + 0.1 * z(rng);
    inst.grid.resize(50, d);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < d; ++j) inst.grid(i, j) = 1.2 * z(rng);

    const double bound = std::max(inst.data.xs.rowwise().norm().maxCoeff(), inst.grid.rowwise().norm().maxCoeff());
    switch (family(rng)) {
        case 0: inst.kernel = KernelSpec::gaussian(log_uniform(0.5, 2.0)); break;
        case 1: inst.kernel = KernelSpec::matern(0.5 + smooth(rng), log_uniform(0.5, 2.0)); break;
        case 2: inst.kernel = normalize(KernelSpec::polynomial(degree(rng), 0.5 + unit(rng)), bound); break;
        default: inst.kernel = normalize(KernelSpec::linear(), bound); break;
    }
    inst.weights.resize(n);
    for (int i = 0; i < n; ++i) inst.weights(i) = log_uniform(0.2, 5.0);
    inst.lambda = log_uniform(1e-3, 1.0);
    return inst;
}

double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw ValidationError("relative error of vectors with different lengths");
    if (a.size() == 0) return 0.0;
    const double scale = std::max(b.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

std::vector<CheckResult> oracle_suite(std::uint64_t seed, int instances) {
    CheckResult pred{"solver_oracle_prediction", true, 0.0, 1e-8};
    CheckResult obj{"solver_oracle_objective", true, 0.0, 1e-10};
    CheckResult uniform{"uniform_reduction", true, 0.0, 1e-10};
    CheckResult clip{"clipping_identity", true, 0.0, 1e-10};
    CheckResult scaling{"joint_scaling_invariance", true, 0.0, 1e-10};
    CheckResult zero{"zero_weight_neutrality", true, 0.0, 1e-10};
    CheckResult per_point{"per_point_regularizer_view", true, 0.0, 1e-10};

    const auto record = [](CheckResult& c, double v) {
        c.value = std::max(c.value, v);
        c.passed = c.passed && v <= c.tolerance;
    };

    for (int t = 0; t < instances; ++t) {
        const RandomInstance inst = random_instance(seed, static_cast<std::uint64_t>(t));
        const Eigen::Index n = inst.data.size();
        const double nd = static_cast<double>(n);

        const FitModel fit = fit_iwkrr(inst.kernel, inst.data, inst.weights, inst.lambda);
        const DirectSolution ref = direct_solve(inst.kernel, inst.data, inst.weights, inst.lambda);
        record(pred, max_relative_error(predict(fit, inst.grid),
                                        predict_direct(inst.kernel, inst.data.xs, ref.alpha, inst.grid)));
        const double f_obj = objective(fit, inst.data, inst.weights);
        record(obj, std::abs(f_obj - ref.objective) / std::max(std::abs(ref.objective), 1e-300));

        const FitOptions dual{SolveMethod::dual};
        const Eigen::MatrixXd k = gram(inst.kernel, inst.data.xs);

        const FitModel unif = fit_iwkrr(inst.kernel, inst.data, WeightStrategy::uniform(), inst.lambda, dual);
        Eigen::MatrixXd a = k;
        a.diagonal().array() += nd * inst.lambda;
        record(uniform, max_relative_error(unif.alpha, spd_solve(a, inst.data.ys)));

        const FitModel base = fit_iwkrr(inst.kernel, inst.data, inst.weights, inst.lambda, dual);
        const Eigen::VectorXd base_grid = predict(base, inst.grid);
        const double wmax = inst.weights.maxCoeff();
        Eigen::VectorXd clipped = inst.weights.cwiseMin(wmax * 1.5);
        record(clip, max_relative_error(predict(fit_iwkrr(inst.kernel, inst.data, clipped, inst.lambda, dual), inst.grid),
                                        base_grid));

        const double c = 0.1 + 10.0 * static_cast<double>(t % 7) / 7.0;
        const FitModel scaled = fit_iwkrr(inst.kernel, inst.data, c * inst.weights, c * inst.lambda, dual);
        record(scaling, max_relative_error(predict(scaled, inst.grid), base_grid));

        TrainingSet extended = inst.data;
        extended.xs.conservativeResize(n + 1, Eigen::NoChange);
        extended.xs.row(n) = inst.grid.row(0);
        extended.ys.conservativeResize(n + 1);
        extended.ys(n) = 3.0;
        Eigen::VectorXd wext(n + 1);
        wext << inst.weights, 0.0;
        const FitModel with_zero = fit_iwkrr(inst.kernel, extended, wext, inst.lambda, dual);
        const FitModel matched =
            fit_iwkrr(inst.kernel, inst.data, inst.weights, inst.lambda * (nd + 1.0) / nd, dual);
        record(zero, max_relative_error(predict(with_zero, inst.grid), predict(matched, inst.grid)));

        Eigen::VectorXd doubled = inst.weights;
        doubled(0) *= 2.0;
        Eigen::MatrixXd manual = k;
        for (Eigen::Index i = 0; i < n; ++i) manual(i, i) += nd * inst.lambda / inst.weights(i) * (i == 0 ? 0.5 : 1.0);
        record(per_point, max_relative_error(fit_iwkrr(inst.kernel, inst.data, doubled, inst.lambda, dual).alpha,
                                             spd_solve(manual, inst.data.ys)));
    }
    return {pred, obj, uniform, clip, scaling, zero, per_point};
}

}  // namespace iwkrr
