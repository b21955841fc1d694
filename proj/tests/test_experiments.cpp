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
#include "iwkrr/experiments.hpp"
#include "iwkrr/random.hpp"
#include "iwkrr/solver.hpp"

using namespace iwkrr;

namespace {

SimConfig small_sim() {
    SimConfig c;
    c.k = 1;
    c.n_train = 40;
    c.n_test = 100;
    c.reps = 4;
    c.lambda_grid = {1e-4, 1e-2, 1.0};
    c.master_seed = 77;
    return c;
}

ResultRow row(const std::string& strategy, double lambda, int rep, double mse, bool failed = false) {
    return ResultRow{"test", strategy, 1, lambda, 10, rep, mse, failed};
}

double binomial_tail(int wins, int trials) {
    double total = 0.0;
    for (int k = wins; k <= trials; ++k) total += std::exp(std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) -
                                                           std::lgamma(trials - k + 1.0) - trials * std::log(2.0));
    return total;
}

}  // namespace

TEST_CASE("regression function") {
    CHECK(regression_fn(1, 0.0) == 0.0);
    CHECK(regression_fn(1, 1.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(regression_fn(1, 0.5) == doctest::Approx(std::exp(-4.0)));
    CHECK(regression_fn(1, -0.5) == doctest::Approx(std::exp(-4.0)));
    CHECK(regression_fn(2, 2.0) == doctest::Approx(std::exp(-1.0 / 16.0)));
    CHECK(regression_fn(25, 0.9) < 1e-10);
    CHECK(regression_fn(3, 1e-3) == 0.0);
    CHECK_THROWS_AS(regression_fn(0, 1.0), ValidationError);
}

TEST_CASE("simulation is deterministic and thread independent") {
    SimConfig c = small_sim();
    const auto a = run_gaussian_sim(c);
    c.threads = 3;
    const auto b = run_gaussian_sim(c);
    REQUIRE(a.rows.size() == 4 * 2 * 3);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].strategy == b.rows[i].strategy);
        CHECK(a.rows[i].rep == b.rows[i].rep);
        CHECK(a.rows[i].mse == b.rows[i].mse);
    }
    CHECK(a.rep_seeds == b.rep_seeds);
    CHECK(a.rep_seeds[1] == mix_seed(77, 1));
}

TEST_CASE("one repetition equals the hand-built pipeline") {
    const SimConfig c = small_sim();
    const auto result = run_gaussian_sim(c);
    const int rep = 2;
    Rng rng = make_stream(c.master_seed, rep);
    const SimData d = draw_sim_data(c, [](std::span<const double> x) { return regression_fn(1, x[0]); }, rng);
    const KernelSpec k = sim_kernel(c, c.kernel);
    CHECK(k.scale == 1.0);  // the Gaussian diagonal is already 1
    for (const auto& s : c.strategies) {
        for (const double lambda : c.lambda_grid) {
            const auto m = fit_iwkrr(k, TrainingSet{d.train_xs, d.train_ys}, s.strategy, lambda);
            const double expected = test_mse(m, d.test_xs, d.test_targets);
            bool found = false;
            for (const auto& r : result.rows) {
                if (r.rep != rep || r.strategy != s.name || r.lambda != lambda) continue;
                found = true;
                CHECK(r.mse == doctest::Approx(expected).epsilon(1e-10));
            }
            CHECK(found);
        }
    }
}

TEST_CASE("repetitions do not depend on the number of repetitions") {
    SimConfig c = small_sim();
    c.reps = 2;
    const auto two = run_gaussian_sim(c);
    c.reps = 5;
    const auto five = run_gaussian_sim(c);
    for (std::size_t i = 0; i < two.rows.size(); ++i) CHECK(two.rows[i].mse == five.rows[i].mse);
}

TEST_CASE("noiseless fit of the smooth target") {
    SimConfig c;
    c.k = 1;
    c.n_train = 2000;
    c.n_test = 500;
    c.noise_sd = 0.0;
    c.reps = 1;
    c.lambda_grid = {1e-6};
    c.strategies = {{"uniform", WeightStrategy::uniform(), false}};
    const auto r = run_gaussian_sim(c);
    REQUIRE(r.rows.size() == 1);
    CHECK(!r.rows[0].failed);
    CHECK(r.rows[0].mse < 1e-3);
}

TEST_CASE("polynomial simulation layout") {
    SimConfig c = small_sim();
    c.reps = 2;
    const auto r = run_polynomial_sim(c, {1, 2, 3}, 0.5);
    CHECK(r.experiment == "poly");
    CHECK(r.rows.size() == 2 * 3 * 2);
    for (const auto& row : r.rows) {
        CHECK(row.lambda == 0.5);
        CHECK(std::isfinite(row.mse));
    }
    CHECK_THROWS_AS(run_polynomial_sim(c, {}, 0.5), ValidationError);
    CHECK_THROWS_AS(run_polynomial_sim(c, {1}, 0.0), InvalidRegularizerError);
}

TEST_CASE("failed cells are recorded") {
    SimConfig c = small_sim();
    c.train_dist = DensityModel::uniform_interval(0.0, 1.0);
    c.test_dist = DensityModel::uniform_interval(2.0, 3.0);
    c.strategies = default_strategies(c.test_dist, c.train_dist);  // iw weights vanish on the training sample
    const auto r = run_gaussian_sim(c);
    for (const auto& row : r.rows) {
        CHECK(row.failed == (row.strategy == "iw"));
        if (row.failed) CHECK(std::isnan(row.mse));
    }
    for (const auto& a : r.aggregates)
        if (a.strategy == "iw") CHECK(a.count == 0);
}

TEST_CASE("simulation validation") {
    SimConfig c = small_sim();
    c.reps = 0;
    CHECK_THROWS_AS(run_gaussian_sim(c), ValidationError);
    c = small_sim();
    c.lambda_grid = {1.0, -1.0};
    CHECK_THROWS_AS(run_gaussian_sim(c), InvalidRegularizerError);
    c = small_sim();
    c.strategies.clear();
    CHECK_THROWS_AS(run_gaussian_sim(c), ValidationError);
}

TEST_CASE("aggregation") {
    const std::vector<ResultRow> rows{row("a", 1.0, 0, 1.0), row("a", 1.0, 1, 3.0), row("a", 1.0, 2, 0.0, true),
                                      row("b", 1.0, 0, 2.0), row("b", 2.0, 0, 0.0, true)};
    const auto agg = aggregate(rows);
    REQUIRE(agg.size() == 3);
    CHECK(agg[0].strategy == "a");
    CHECK(agg[0].mean == 2.0);
    CHECK(agg[0].count == 2);
    CHECK(agg[0].std_error == doctest::Approx(1.0));  // sd sqrt(2), n = 2
    CHECK(agg[1].std_error == 0.0);
    CHECK(agg[2].count == 0);
    CHECK(std::isnan(agg[2].mean));
}

TEST_CASE("min over lambda and paired comparisons") {
    ExperimentResult r;
    // a: lambda 1 means (1, 5, 3) -> 3; lambda 2 means (2, 2, 2) -> 2.
    // b: lambda 1 means (4, 1, 4) -> 3; lambda 2 (3, 3, 3) -> 3.
    const double a1[] = {1, 5, 3}, a2[] = {2, 2, 2}, b1[] = {4, 1, 4}, b2[] = {3, 3, 3};
    for (int rep = 0; rep < 3; ++rep) {
        r.rows.push_back(row("a", 1.0, rep, a1[rep]));
        r.rows.push_back(row("a", 2.0, rep, a2[rep]));
        r.rows.push_back(row("b", 1.0, rep, b1[rep]));
        r.rows.push_back(row("b", 2.0, rep, b2[rep]));
    }
    r.aggregates = aggregate(r.rows);
    const auto best = min_over_lambda(r);
    REQUIRE(best.size() == 2);
    CHECK(best[0].lambda == 2.0);
    CHECK(best[0].mean == 2.0);
    CHECK(best[1].lambda == 1.0);  // tie at 3 keeps the first lambda

    const auto pm = paired_comparison(r, "a", "b", 1);
    // a at lambda 2 (2, 2, 2) against b at lambda 1 (4, 1, 4).
    CHECK(pm.pairs == 3);
    CHECK(pm.wins_a == 2);
    CHECK(pm.fraction_a == doctest::Approx(2.0 / 3.0));
    CHECK(pm.sign_test_p == doctest::Approx(binomial_tail(2, 3)));

    const auto pr = paired_comparison(r, "a", "b", 1, Pairing::per_rep_min);
    // per rep: a = (1, 2, 2), b = (3, 1, 3).
    CHECK(pr.wins_a == 2);
    CHECK(pr.lambda_a == 2.0);
    CHECK(pr.ties == 0);
    CHECK_THROWS_AS(paired_comparison(r, "a", "c", 1), ValidationError);
}

TEST_CASE("sign test") {
    CHECK(sign_test_p_value(10, 10) == doctest::Approx(std::pow(2.0, -10)).epsilon(1e-12));
    CHECK(sign_test_p_value(0, 10) == 1.0);
    CHECK(sign_test_p_value(0, 0) == 1.0);
    for (const int w : {5, 7, 60, 80})
        CHECK(sign_test_p_value(w, 100) == doctest::Approx(binomial_tail(w, 100)).epsilon(1e-10));
    CHECK_THROWS_AS(sign_test_p_value(11, 10), ValidationError);
}

TEST_CASE("log-log fit") {
    const std::vector<double> x{1.0, 10.0, 100.0, 1000.0};
    std::vector<double> y;
    for (const double v : x) y.push_back(3.0 * std::pow(v, -0.5));
    const auto f = fit_log_log(x, y);
    CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(fit_log_log({1.0}, {1.0}), ValidationError);
    CHECK_THROWS_AS(fit_log_log({1.0, 2.0}, {1.0, 0.0}), ValidationError);
}

TEST_CASE("noiseless rate study reaches a plateau") {
    RateStudyConfig c;
    c.n_grid = {50, 100, 200, 400};
    c.reps = 3;
    c.noise_sd = 0.0;
    c.f_rho = [](std::span<const double> x) { return 0.8 * x[0]; };
    c.strategies = {{"iw", WeightStrategy::true_iw(c.test_dist, c.train_dist), false},
                    {"uniform", WeightStrategy::uniform(), false}};
    c.source = ScheduleSource::fixed;
    c.fixed_lambda = 1e-8;
    c.n_test = 200;
    const auto r = run_rate_study(c);
    REQUIRE(r.curves.size() == 2);
    for (const auto& curve : r.curves) {
        CHECK(curve.n.size() == 4);
        for (const double m : curve.mean_mse) CHECK(m < 1e-6);
        for (const double l : curve.lambda) CHECK(l == 1e-8);
    }
    CHECK(r.rows.size() == 2 * 4 * 3);
}

TEST_CASE("rate study schedules") {
    RateStudyConfig c;
    c.n_grid = {100, 200, 400, 800};
    c.reps = 2;
    c.n_test = 100;
    c.f_rho = [](std::span<const double> x) { return 0.8 * x[0]; };
    c.params.q = 0.5;
    c.params.s = 0.5;
    c.c = 1.0;
    c.strategies = {{"iw", WeightStrategy::true_iw(c.test_dist, c.train_dist), false},
                    {"clipped", WeightStrategy::true_iw(c.test_dist, c.train_dist), true}};
    const auto r = run_rate_study(c);
    const auto& iw = r.curves[0];
    const auto& clipped = r.curves[1];
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(iw.lambda[i] == doctest::Approx(iw_schedule(c.params, c.n_grid[i], 1.0).lambda));
        CHECK(std::isinf(iw.D[i]));
        const auto s = clipped_schedule(c.params, c.clip_m, c.clip_epsilon, c.n_grid[i], 1.0);
        CHECK(clipped.lambda[i] == doctest::Approx(s.lambda));
        CHECK(clipped.D[i] == doctest::Approx(s.clipping->D));
    }
    CHECK(iw.theoretical_slope == doctest::Approx(-2.0 * rate_exponent(c.params)));
    CHECK(clipped.theoretical_slope == doctest::Approx(-2.0 * clipped_rate_exponent(c.params, 10, 0.01)));

    RateStudyConfig bad = c;
    bad.n_grid = {100, 200, 400};
    CHECK_THROWS_AS(run_rate_study(bad), ValidationError);
    bad.n_grid = {100, 200, 200, 400};
    CHECK_THROWS_AS(run_rate_study(bad), ValidationError);
    bad = c;
    bad.f_rho = nullptr;
    CHECK_THROWS_AS(run_rate_study(bad), ValidationError);
}

TEST_CASE("classification study rows are consistent") {
    ClassificationConfig c;
    c.n_grid = {100, 200};
    c.runs = 2;
    c.n_test = 500;
    c.margin_mc = 20000;
    c.seed = 3;
    const auto r = run_classification_study(c);
    CHECK(r.rows.size() == 2 * 2 * 2);
    CHECK(!r.margin.degenerate);
    for (const auto& row : r.rows) {
        CHECK(row.excess == doctest::Approx(row.risk - row.bayes_risk));
        CHECK(row.bound == doctest::Approx(excess_risk_bound(row.l2_dist, r.margin.alpha, r.margin.c_alpha)));
        CHECK(row.within == (row.excess <= row.bound + 3.0 * row.excess_se));
        CHECK(row.risk >= 0.0);
        CHECK(row.risk <= 1.0);
    }
    c.runs = 0;
    CHECK_THROWS_AS(run_classification_study(c), ValidationError);
}

TEST_CASE("steep regression function is nearly constant away from zero") {
    // exp(-1.2^-50) = 1 - 1.2^-50 + O(1.2^-100).
    const double eps = std::pow(1.2, -50.0);
    CHECK(std::abs(regression_fn(25, 1.2) - (1.0 - eps)) <= eps * eps);
    CHECK(regression_fn(25, 1.2) == doctest::Approx(std::exp(-eps)).epsilon(1e-15));
}

TEST_CASE("polynomial repetition equals the hand-built pipeline") {
    SimConfig c = small_sim();
    c.reps = 1;
    const auto result = run_polynomial_sim(c, {7}, 1.0);
    Rng rng = make_stream(c.master_seed, 0);
    const SimData d = draw_sim_data(c, [](std::span<const double> x) { return regression_fn(1, x[0]); }, rng);
    double bound = 0.0;
    const KernelSpec k = sim_kernel(c, KernelSpec::polynomial(7, 1.0), &bound);
    CHECK(k.scale == doctest::Approx(std::pow(bound * bound + 1.0, -7.0)));
    for (const auto& s : c.strategies) {
        const auto m = fit_iwkrr(k, TrainingSet{d.train_xs, d.train_ys}, s.strategy, 1.0, {SolveMethod::dual});
        const double expected = test_mse(m, d.test_xs, d.test_targets);
        for (const auto& r : result.rows)
            if (r.strategy == s.name) CHECK(r.mse == doctest::Approx(expected).epsilon(1e-8));
    }
}
