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
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "iwkrr/density.hpp"
#include "iwkrr/error.hpp"
#include "iwkrr/weights.hpp"

using namespace iwkrr;

namespace {

const DensityModel kTrain = DensityModel::gaussian1d(0.0, 0.5);
const DensityModel kTest = DensityModel::gaussian1d(1.5, 0.3);
constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_pdf(double x, double mean, double var) {
    return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

template <typename F>
double integrate(F f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

// Independent Renyi order-(alpha + 1) divergence of the Gaussian test/train pair by quadrature.
double renyi_quadrature(double alpha) {
    const double integral = integrate(
        [alpha](double x) {
            const double pt = normal_pdf(x, 1.5, 0.3), pr = normal_pdf(x, 0.0, 0.5);
            return pt * std::pow(pt / pr, alpha);
        },
        -12.0, 14.0);
    return std::log(integral) / alpha;
}

}  // namespace

TEST_CASE("density pdfs integrate to one") {
    for (const auto& d : {kTrain, kTest, DensityModel::uniform_interval(-1.0, 2.5)}) {
        const double total = integrate([&d](double x) { return d.pdf(std::span<const double>(&x, 1)); }, -15.0, 15.0);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK(kTest.pdf(std::span<const double>(std::array<double, 1>{0.7})) ==
          doctest::Approx(normal_pdf(0.7, 1.5, 0.3)).epsilon(1e-14));
}

TEST_CASE("density cdf and second moment") {
    const double x = 0.4;
    const double cdf = integrate([](double t) { return normal_pdf(t, 1.5, 0.3); }, -15.0, x);
    CHECK(kTest.cdf(x) == doctest::Approx(cdf).epsilon(1e-10));
    CHECK(kTest.second_moment() == doctest::Approx(0.3 + 2.25).epsilon(1e-15));
    CHECK(DensityModel::uniform_interval(1.0, 2.0).second_moment() == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(DensityModel::gaussian1d(0.0, 0.0), ValidationError);
    CHECK_THROWS_AS(DensityModel::uniform_interval(1.0, 1.0), ValidationError);
}

TEST_CASE("sampling matches moments") {
    Rng rng = make_stream(5);
    const Points xs = kTest.sample(rng, 200000);
    const double mean = xs.col(0).mean();
    const double var = (xs.col(0).array() - mean).square().mean();
    CHECK(std::abs(mean - 1.5) < 5 * std::sqrt(0.3 / 200000.0));
    CHECK(var == doctest::Approx(0.3).epsilon(0.01));
    Rng a = make_stream(5), b = make_stream(5);
    CHECK(kTrain.sample(a, 10) == kTrain.sample(b, 10));
}

TEST_CASE("mixture quantile radius") {
    // Single standard normal: P(|x| <= r) = 0.999 at r = 3.2905.
    const double r = mixture_quantile_radius({DensityModel::gaussian1d(0.0, 1.0)}, 0.999, 1);
    CHECK(r == doctest::Approx(3.2905267).epsilon(1e-6));
    const double rm = mixture_quantile_radius({kTrain, kTest}, 0.999, 1);
    const double mass = 0.5 * (kTrain.cdf(rm) - kTrain.cdf(-rm)) + 0.5 * (kTest.cdf(rm) - kTest.cdf(-rm));
    CHECK(mass == doctest::Approx(0.999).epsilon(1e-9));
}

TEST_CASE("uniform and constant weights") {
    const double x[] = {3.7};
    CHECK(WeightStrategy::uniform().eval(x) == 1.0);
    CHECK(weight_eval(WeightStrategy::constant(2.5), x) == 2.5);
    CHECK(WeightStrategy::uniform().label() == "uniform");
}

TEST_CASE("true IW weights") {
    const auto same = WeightStrategy::true_iw(kTrain, kTrain);
    for (const double v : {-2.0, 0.0, 0.3, 4.0}) CHECK(same.eval(std::span<const double>(&v, 1)) == 1.0);
    const auto w = WeightStrategy::true_iw(kTest, kTrain);
    const double zero[] = {0.0};
    CHECK(w.eval(zero) == doctest::Approx(normal_pdf(0.0, 1.5, 0.3) / normal_pdf(0.0, 0.0, 0.5)).epsilon(1e-13));
    for (double x = -3.0; x <= 4.0; x += 0.25) {
        const std::span<const double> s(&x, 1);
        CHECK(w.eval(s) * kTrain.pdf(s) == doctest::Approx(kTest.pdf(s)).epsilon(1e-12));
    }
}

TEST_CASE("support violations") {
    const auto w = WeightStrategy::true_iw(DensityModel::uniform_interval(1.0, 2.0), DensityModel::uniform_interval(0.0, 2.0));
    const double inside[] = {1.5}, outside[] = {3.0}, low[] = {0.5};
    CHECK(w.eval(inside) == 2.0);
    CHECK(w.eval(low) == 0.0);
    CHECK_THROWS_AS((void)w.eval(outside), SupportViolationError);
    const auto far = WeightStrategy::true_iw(kTest, DensityModel::gaussian1d(0.0, 1e-4));
    const double x[] = {1.5};
    CHECK_THROWS_AS((void)far.eval(x), SupportViolationError);
}

TEST_CASE("clipped weights") {
    const double x[] = {0.0};
    CHECK(WeightStrategy::clipped(WeightStrategy::constant(3.0), 2.0).eval(x) == 2.0);
    const auto w = WeightStrategy::true_iw(kTest, kTrain);
    const auto c1 = WeightStrategy::clipped(w, 1.0), c5 = WeightStrategy::clipped(w, 5.0);
    const auto cinf = WeightStrategy::clipped(w, kInf);
    for (double v = -2.0; v <= 4.0; v += 0.1) {
        const std::span<const double> s(&v, 1);
        CHECK(c1.eval(s) <= c5.eval(s));
        CHECK(c5.eval(s) == std::min(w.eval(s), 5.0));
        CHECK(cinf.eval(s) == w.eval(s));
    }
    CHECK(c1.label() == "clipped");
    CHECK_THROWS_AS(WeightStrategy::clipped(w, 0.0), ValidationError);
}

TEST_CASE("analytic weight supremum") {
    const auto sup = weight_sup(kTest, kTrain);
    REQUIRE(sup.has_value());
    double grid = 0.0;
    for (int i = 0; i <= 200000; ++i) {
        const double x = -2.0 + 8.0 * i / 200000.0;
        grid = std::max(grid, normal_pdf(x, 1.5, 0.3) / normal_pdf(x, 0.0, 0.5));
    }
    CHECK(*sup == doctest::Approx(grid).epsilon(1e-8));
    CHECK(std::isinf(*weight_sup(kTrain, kTest)));
    CHECK(*weight_sup(DensityModel::uniform_interval(1.0, 2.0), DensityModel::uniform_interval(0.0, 2.0)) == 2.0);
    CHECK(std::isinf(*weight_sup(DensityModel::uniform_interval(0.0, 3.0), DensityModel::uniform_interval(0.0, 2.0))));
}

TEST_CASE("Renyi divergence") {
    const auto self = renyi_divergence(kTest, kTest, 1.0, 100000, 3);
    CHECK(std::abs(self.value) <= 0.02);
    CHECK(std::abs(self.value) <= 3 * self.std_error + 1e-15);
    for (const double a : {0.5, 1.0, 2.0}) {
        const double quad = renyi_quadrature(a);
        CHECK(gaussian_renyi_divergence(1.5, 0.3, 0.0, 0.5, a + 1.0) == doctest::Approx(quad).epsilon(1e-9));
    }
    const auto e = renyi_divergence(kTest, kTrain, 1.0, 100000, 4);
    CHECK(std::abs(e.value - renyi_quadrature(1.0)) <= 3 * e.std_error);
    CHECK_THROWS_AS(renyi_divergence(kTest, kTrain, 1.0, 999, 4), ValidationError);
    CHECK_THROWS_AS(renyi_divergence(kTest, kTrain, 0.0, 1000, 4), ValidationError);
}

TEST_CASE("Renyi curve is monotone") {
    const std::vector<double> alphas{0.25, 0.5, 1.0, 2.0, 3.0};
    const auto curve = renyi_curve(kTest, kTrain, alphas, 100000, 7);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const double se = std::hypot(curve[i].std_error, curve[i - 1].std_error);
        CHECK(curve[i - 1].value <= curve[i].value + 3 * se);
    }
}

TEST_CASE("Renyi overflow is flagged") {
    const auto wide = DensityModel::gaussian1d(0.0, 1.0), narrow = DensityModel::gaussian1d(0.0, 0.05);
    const auto e = renyi_divergence(wide, narrow, 500.0, 1000, 1);
    CHECK(e.unstable);
    CHECK(std::isinf(e.value));
    CHECK(std::isinf(gaussian_renyi_divergence(0.0, 1.0, 0.0, 0.5, 3.0)));
}

TEST_CASE("moment check") {
    const auto same = moment_check(kTrain, kTrain, 3, 0.5, 1.0, 1.0, 10000, 1);
    CHECK(same.lhs == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same.rhs == 3.0);
    CHECK(same.satisfied);
    const auto tight = moment_check(kTrain, kTrain, 2, 1.0, 1.0, 0.5, 10000, 1);
    CHECK(!tight.satisfied);  // (1/2) 2! sigma^2 = 0.25 < 1

    const double quad = integrate([](double x) {
        const double pt = normal_pdf(x, 1.5, 0.3);
        return pt * pt / normal_pdf(x, 0.0, 0.5);
    }, -12.0, 14.0);
    const auto r = moment_check(kTest, kTrain, 2, 1.0, 1.0, 1.0, 200000, 9);
    CHECK(std::abs(r.lhs - quad) <= 3 * r.std_error);

    const auto te = DensityModel::uniform_interval(1.0, 2.0), tr = DensityModel::uniform_interval(0.0, 2.0);
    for (const int m : {2, 3, 5}) {
        const auto b = moment_check(te, tr, m, 0.7, 1.0, 1.0, 5000, 2);
        CHECK(b.lhs <= std::pow(2.0, m - 1) * (1 + 1e-12));
    }
    const auto q0 = moment_check(te, tr, 3, 0.0, 1.0, 1.0, 5000, 2);
    CHECK(q0.underestimate);
    CHECK(q0.lhs == doctest::Approx(4.0));
    CHECK_THROWS_AS(moment_check(kTest, kTrain, 1, 1.0, 1.0, 1.0, 100, 1), ValidationError);
    CHECK_THROWS_AS(moment_check(kTest, kTrain, 2, 1.5, 1.0, 1.0, 100, 1), ValidationError);
}

TEST_CASE("tail check") {
    const std::vector<double> grid{1.5, 2.0, 4.0};
    for (const auto& p : tail_check(kTest, kTest, 1.0, 1.0, 1.0, grid, 10000, 1)) CHECK(p.empirical == 0.0);
    const auto low = tail_check(kTest, kTrain, 1.0, 1.0, 1.0, {1e-30}, 10000, 1);
    CHECK(low.front().empirical == 2.0);

    // Quadrature of 2 * P_te(w >= t) on a fine grid of the indicator.
    for (const double t : {1.0, 5.0, 20.0}) {
        double mass = 0.0;
        const int steps = 400000;
        const double a = -4.0, b = 7.0, h = (b - a) / steps;
        for (int i = 0; i < steps; ++i) {
            const double x = a + (i + 0.5) * h;
            const double pt = normal_pdf(x, 1.5, 0.3);
            if (pt / normal_pdf(x, 0.0, 0.5) >= t) mass += pt * h;
        }
        const auto p = tail_check(kTest, kTrain, 1.0, 1.0, 1.0, {t}, 200000, 11).front();
        CHECK(std::abs(p.empirical - 2.0 * mass) <= 3 * p.std_error + 1e-4);
        CHECK(p.bound == doctest::Approx(std::exp(-t)).epsilon(1e-14));
        CHECK(p.satisfied == (p.empirical <= p.bound));
    }
    CHECK_THROWS_AS(tail_check(kTest, kTrain, 0.0, 1.0, 1.0, grid, 100, 1), ValidationError);
    CHECK_THROWS_AS(tail_check(kTest, kTrain, 1.0, 1.0, 1.0, {2.0, 1.0}, 100, 1), ValidationError);
}

TEST_CASE("weight diagnostics bundle") {
    DiagnosticsOptions o;
    o.sample_size = 20000;
    const auto d = diagnose_weights(kTest, kTrain, o, 3);
    CHECK(d.sup_analytic.has_value());
    CHECK(d.sup_estimate <= *d.sup_analytic);
    CHECK(d.renyi_curve.size() == o.alphas.size());
    CHECK(d.moment_table.size() == o.moments.size());
    CHECK(d.tail_curve.size() == o.t_grid.size());
    for (std::size_t i = 1; i < d.renyi_curve.size(); ++i) CHECK(d.renyi_curve[i - 1].value <= d.renyi_curve[i].value);
    const auto again = diagnose_weights(kTest, kTrain, o, 3);
    CHECK(again.renyi_curve.back().value == d.renyi_curve.back().value);
}
