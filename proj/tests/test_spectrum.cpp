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

#include <doctest.h>

#include <cmath>

#include "iwkrr/error.hpp"
#include "iwkrr/random.hpp"
#include "iwkrr/spectrum.hpp"

using namespace iwkrr;

namespace {

Points normal_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    Rng rng = make_stream(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Points xs(n, d);
    for (auto& v : xs.reshaped()) v = g(rng);
    return xs;
}

Eigen::VectorXd power_law(Eigen::Index count, double exponent) {
    Eigen::VectorXd mu(count);
    for (Eigen::Index i = 0; i < count; ++i) mu(i) = std::pow(static_cast<double>(i + 1), -exponent);
    return mu;
}

double spectral_norm(const Eigen::MatrixXd& a) { return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0); }

}  // namespace

TEST_CASE("log grid") {
    const auto g = log_grid(1e-6, 10.0, 15);
    REQUIRE(g.size() == 15);
    CHECK(g.front() == 1e-6);
    CHECK(g.back() == 10.0);
    for (std::size_t i = 1; i < g.size(); ++i)
        CHECK(std::log10(g[i] / g[i - 1]) == doctest::Approx(7.0 / 14.0).epsilon(1e-12));
    CHECK(log_grid(2.0, 2.0, 1) == std::vector<double>{2.0});
    CHECK_THROWS_AS(log_grid(0.0, 1.0, 5), ValidationError);
    CHECK_THROWS_AS(log_grid(2.0, 1.0, 5), ValidationError);
}

TEST_CASE("empirical eigenvalues match an SVD of the scaled Gram matrix") {
    const Points xs = normal_points(40, 2, 1);
    const auto k = KernelSpec::gaussian(0.7);
    const Eigen::VectorXd mu = empirical_eigs(k, xs);
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(gram(k, xs) / 40.0).singularValues();
    REQUIRE(mu.size() == 40);
    for (Eigen::Index i = 0; i < 40; ++i) CHECK(std::abs(mu(i) - sv(i)) <= 1e-12);
    for (Eigen::Index i = 1; i < 40; ++i) CHECK(mu(i) <= mu(i - 1));
    CHECK(mu.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linear kernel has a single eigenvalue") {
    const Points xs = normal_points(25, 1, 2);
    const Eigen::VectorXd mu = empirical_eigs(KernelSpec::linear(), xs);
    CHECK(mu(0) == doctest::Approx(xs.col(0).squaredNorm() / 25.0).epsilon(1e-12));
    CHECK(mu.tail(24).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("polynomial kernels in one dimension have rank at most degree + 1") {
    const Points xs = normal_points(60, 1, 3);
    for (int m = 1; m <= 5; ++m) {
        const auto k = normalize(KernelSpec::polynomial(m, 1.0), 4.0);
        const Eigen::VectorXd mu = empirical_eigs(k, xs);
        int rank = 0;
        for (const double v : mu) rank += v > 1e-10 * mu(0);
        CHECK(rank <= m + 1);
        CHECK_THROWS_AS(estimate_decay(mu), InsufficientSpectrumError);
        CHECK(spectrum_report(k, xs).fit.finite_rank);
    }
}

TEST_CASE("normalized kernels have trace at most one") {
    const Points xs = normal_points(80, 2, 4);
    const double bound = xs.rowwise().norm().maxCoeff();
    for (const auto& k : {KernelSpec::polynomial(3, 1.0), KernelSpec::linear(), KernelSpec::matern(2.5, 0.5)}) {
        CHECK(empirical_eigs(normalize(k, bound), xs).sum() <= 1.0 + 1e-8);
    }
}

TEST_CASE("effective dimension") {
    const Eigen::VectorXd mu = Eigen::Vector3d(1.0, 0.5, 0.0);
    CHECK(effective_dimension(mu, 1.0) == doctest::Approx(0.5 + 1.0 / 3.0));
    CHECK(effective_dimension(mu, 1e-12) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(effective_dimension(Eigen::VectorXd::Constant(4, 0.25), 0.25) == doctest::Approx(2.0));
    CHECK_THROWS_AS(effective_dimension(mu, 0.0), InvalidRegularizerError);

    const Eigen::VectorXd p = power_law(500, 2.0);
    double prev = 1e300;
    for (const double lambda : log_grid(1e-6, 1.0, 30)) {
        const double n = effective_dimension(p, lambda);
        CHECK(n <= prev);
        CHECK(n * lambda <= p.sum() * (1 + 1e-12));
        prev = n;
    }
}

TEST_CASE("decay fit on power laws") {
    CHECK(estimate_decay(power_law(300, 2.0)).s_hat == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(estimate_decay(power_law(300, 4.0)).s_hat == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(estimate_decay(power_law(300, 0.5)).s_hat == 1.0);  // clamped
    const auto f = estimate_decay(power_law(300, 2.0));
    CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(!f.finite_rank);
    CHECK(f.used == 298);
    CHECK_THROWS_AS(estimate_decay(power_law(6, 2.0)), InsufficientSpectrumError);
}

TEST_CASE("E_s estimate") {
    const Eigen::VectorXd mu = power_law(2000, 2.0);
    const auto grid = log_grid(1e-6, 1.0, 61);
    double best = 0.0;
    for (const double lambda : grid) {
        double n = 0.0;
        for (const double m : mu) n += m / (m + lambda);
        best = std::max(best, std::sqrt(n * std::pow(lambda, 0.5)));
    }
    CHECK(estimate_Es(mu, 0.5, grid) == doctest::Approx(std::max(1.0, best)).epsilon(1e-12));
    CHECK(estimate_Es(Eigen::VectorXd::Constant(1, 1e-3), 1.0, grid) == 1.0);
}

TEST_CASE("spectrum report") {
    const Points xs = normal_points(200, 1, 5);
    const auto k = normalize(KernelSpec::gaussian(1.0), 4.0);
    const auto r = spectrum_report(k, xs);
    CHECK(r.sample_size == 200);
    CHECK(r.eff_dim_curve.size() == 25);
    CHECK(r.es_grid.size() == 61);
    CHECK(r.s_hat >= 0.0);
    CHECK(r.s_hat <= 1.0);
    CHECK(r.E_s_hat >= 1.0);
    const auto tiny = spectrum_report(KernelSpec::linear(), normal_points(4, 1, 6));
    CHECK(tiny.decay_fit_failed);
    CHECK(tiny.s_hat == 1.0);
}

TEST_CASE("clipped operator check against direct matrix algebra") {
    const FeatureMap fm(KernelSpec::polynomial(2, 1.0), 1);
    const auto te = DensityModel::gaussian1d(1.5, 0.3), tr = DensityModel::gaussian1d(0.0, 0.5);
    const auto sample = operator_sample(fm, te, tr, 20000, 3);
    const double lambda = 0.05, D = 4.0;
    const auto c = clipped_operator_check(sample, D, lambda, 0, 1);

    const Eigen::Index n = sample.design.rows();
    const Eigen::VectorXd wd = sample.weights.cwiseMin(D);
    const Eigen::MatrixXd t = sample.design.transpose() * sample.weights.asDiagonal() * sample.design / double(n);
    const Eigen::MatrixXd td = sample.design.transpose() * wd.asDiagonal() * sample.design / double(n);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(t.rows(), t.cols());
    const Eigen::MatrixXd inv_t = (t + lambda * id).inverse(), inv_td = (td + lambda * id).inverse();
    CHECK(c.norm1 == doctest::Approx(spectral_norm((t - td) * inv_t)).epsilon(1e-8));
    CHECK(c.norm2 == doctest::Approx(spectral_norm(t * inv_td)).epsilon(1e-8));
    CHECK(c.tr_T == doctest::Approx((t * inv_t).trace()).epsilon(1e-10));
    CHECK(c.tr_TD == doctest::Approx((td * inv_td).trace()).epsilon(1e-10));
    CHECK(c.norm1_se == 0.0);
    CHECK(c.tr_TD <= c.tr_T + 1e-10);
}

TEST_CASE("clipping operator limits") {
    const FeatureMap fm(KernelSpec::polynomial(1, 1.0), 1);
    const auto sample = operator_sample(fm, DensityModel::gaussian1d(1.0, 0.3), DensityModel::gaussian1d(0.0, 1.0),
                                        10000, 8);
    const auto huge = clipped_operator_check(sample, 1e12, 0.1, 10, 2);
    CHECK(huge.norm1 == doctest::Approx(0.0));
    CHECK(huge.norm2 < 1.0);
    CHECK(huge.tr_TD == doctest::Approx(huge.tr_T).epsilon(1e-12));
    const auto small = clipped_operator_check(sample, 0.5, 0.1, 10, 2);
    CHECK(small.norm1 > huge.norm1);
    CHECK(small.norm1_se > 0.0);
    CHECK(small.T_D.trace() < small.T.trace());
}

TEST_CASE("small eigenvalue examples") {
    Points one(1, 1);
    one(0, 0) = 0.3;
    const Eigen::VectorXd single = empirical_eigs(KernelSpec::gaussian(1.0), one);
    REQUIRE(single.size() == 1);
    CHECK(single(0) == doctest::Approx(1.0));
    Points twin(2, 1);
    twin << 0.7, 0.7;
    const Eigen::VectorXd pair = empirical_eigs(KernelSpec::gaussian(1.0), twin);
    CHECK(pair(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(pair(1)) <= 1e-14);
}

TEST_CASE("effective dimension examples") {
    CHECK(effective_dimension(Eigen::VectorXd::Ones(1), 1.0) == 0.5);
    CHECK(effective_dimension(Eigen::Vector3d(0.5, 0.25, 0.125), 0.25) == doctest::Approx(1.5).epsilon(1e-15));
    const Eigen::VectorXd p = power_law(100, 2.0);
    CHECK(effective_dimension(p, 1e12) <= p.sum() * 1e-12 * 1.01);
}

TEST_CASE("E_s examples") {
    const Points xs = normal_points(50, 1, 9);
    const Eigen::VectorXd mu = empirical_eigs(KernelSpec::gaussian(1.0), xs);
    CHECK(estimate_Es(mu, 1.0, log_grid(1e-6, 1.0, 61)) == 1.0);
    CHECK(estimate_Es(Eigen::VectorXd::Ones(1), 0.0, log_grid(1e-8, 1.0, 30)) == doctest::Approx(1.0).epsilon(1e-7));
    const Eigen::VectorXd p = power_law(1000, 2.0);
    const auto grid = log_grid(1e-4, 1.0, 40);
    double best = 1.0;
    for (const double lambda : grid) {
        double n = 0.0;
        for (const double m : p) n += m / (m + lambda);
        best = std::max(best, std::sqrt(n * std::sqrt(lambda)));
    }
    CHECK(estimate_Es(p, 0.5, grid) == doctest::Approx(best).epsilon(1e-13));
}

TEST_CASE("vanishing clipping threshold") {
    const FeatureMap fm(KernelSpec::polynomial(1, 1.0), 1);
    const auto sample = operator_sample(fm, DensityModel::gaussian1d(1.0, 0.3), DensityModel::gaussian1d(0.0, 1.0),
                                        10000, 8);
    const double lambda = 0.2;
    const auto c = clipped_operator_check(sample, 1e-12, lambda, 0, 1);
    CHECK(c.T_D.norm() <= 1e-10);
    CHECK(c.norm2 == doctest::Approx(spectral_norm(c.T) / lambda).epsilon(1e-8));
}
