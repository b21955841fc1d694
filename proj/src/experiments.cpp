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

#include "iwkrr/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include <boost/math/distributions/binomial.hpp>

#include "iwkrr/error.hpp"
#include "iwkrr/features.hpp"
#include "iwkrr/parallel.hpp"
#include "iwkrr/solver.hpp"

namespace iwkrr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Train/test kernel matrices (or feature designs) shared by every cell of a repetition.
class PreparedProblem {
public:
    PreparedProblem(const KernelSpec& kernel, const Points& train, const Points& test) {
        if (kernel.finite_rank()) {
            const FeatureMap features(kernel, train.cols());
            if (features.dim() < train.rows()) {
                primal_ = true;
                train_mat_ = features.design(train);
                test_mat_ = features.design(test);
                return;
            }
        }
        train_mat_ = gram(kernel, train);
        test_mat_ = gram(kernel, test, train);
    }

    [[nodiscard]] Eigen::VectorXd fit_predict(const Eigen::VectorXd& y, const Eigen::VectorXd& w, double lambda) const {
        if (primal_) return test_mat_ * solve_primal(train_mat_, y, w, lambda).theta;
        return predict_dual(test_mat_, solve_dual(train_mat_, y, w, lambda));
    }

private:
    bool primal_ = false;
    Eigen::MatrixXd train_mat_;
    Eigen::MatrixXd test_mat_;
};

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
    return (pred - target).squaredNorm() / static_cast<double>(target.size());
}

// Weights of one strategy at the training inputs; nullopt on a support violation.
std::optional<Eigen::VectorXd> strategy_weights(const WeightStrategy& s, const Points& xs) {
    try {
        return s.eval(xs);
    } catch (const SupportViolationError&) {
        return std::nullopt;
    }
}

double cell_mse(const PreparedProblem& prob, const Eigen::VectorXd& y, const std::optional<Eigen::VectorXd>& w,
                double lambda, const Eigen::VectorXd& target, bool& failed) {
    failed = false;
    if (!w) {
        failed = true;
        return kNaN;
    }
    try {
        const double v = mse(prob.fit_predict(y, *w, lambda), target);
        if (!std::isfinite(v)) {
            failed = true;
            return kNaN;
        }
        return v;
    } catch (const Error&) {
        failed = true;
        return kNaN;
    }
}

void validate_sim(const SimConfig& c) {
    if (c.k < 1) throw ValidationError("k must be at least 1");
    if (c.n_train < 1 || c.n_test < 1) throw ValidationError("sample sizes must be positive");
    if (!(c.noise_sd >= 0.0)) throw ValidationError("noise_sd must be nonnegative");
    if (c.reps < 1) throw ValidationError("reps must be at least 1");
    if (c.lambda_grid.empty()) throw ValidationError("lambda grid is empty");
    for (double l : c.lambda_grid)
        if (!(l > 0.0)) throw InvalidRegularizerError("lambda grid must be positive");
    if (c.strategies.empty()) throw ValidationError("no weighting strategies given");
    if (c.train_dist.dim() != c.test_dist.dim()) throw ValidationError("train and test dimensions differ");
}

}  // namespace

double regression_fn(int k, double x) {
    if (k < 1) throw ValidationError("k must be at least 1");
    if (x == 0.0) return 0.0;
    return std::exp(-std::pow(x, -2.0 * k));
}

std::vector<NamedStrategy> default_strategies(const DensityModel& test, const DensityModel& train) {
    return {{"iw", WeightStrategy::true_iw(test, train), false}, {"uniform", WeightStrategy::uniform(), false}};
}

std::vector<Aggregate> aggregate(const std::vector<ResultRow>& rows) {
    using Key = std::tuple<std::string, int, long long, double>;
    std::map<Key, std::vector<double>> cells;
    for (const auto& r : rows) {
        auto& v = cells[{r.strategy, r.k_or_degree, r.n, r.lambda}];
        if (!r.failed) v.push_back(r.mse);
    }
    std::vector<Aggregate> out;
    for (const auto& [key, values] : cells) {
        Aggregate a;
        std::tie(a.strategy, a.k_or_degree, a.n, a.lambda) = key;
        a.count = static_cast<int>(values.size());
        if (values.empty()) {
            a.mean = kNaN;
            a.std_error = kNaN;
        } else {
            const Eigen::Map<const Eigen::ArrayXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
            a.mean = v.mean();
            a.std_error = values.size() > 1
                              ? std::sqrt((v - a.mean).square().sum() / static_cast<double>(values.size() - 1) /
                                          static_cast<double>(values.size()))
                              : 0.0;
        }
        out.push_back(a);
    }
    return out;
}

KernelSpec sim_kernel(const SimConfig& config, const KernelSpec& kernel, double* domain_bound) {
    const double bound = mixture_quantile_radius({config.train_dist, config.test_dist}, 0.999,
                                                 mix_seed(config.master_seed, 0xB0));
    if (domain_bound) *domain_bound = bound;
    return config.normalize_kernel ? normalize(kernel, bound) : kernel;
}

SimData draw_sim_data(const SimConfig& config, const TargetFn& f_rho, Rng& rng) {
    SimData d;
    d.train_xs = config.train_dist.sample(rng, config.n_train);
    std::normal_distribution<double> noise(0.0, 1.0);
    d.train_ys.resize(config.n_train);
    for (Eigen::Index i = 0; i < config.n_train; ++i)
        d.train_ys(i) = f_rho(row_span(d.train_xs, i)) + config.noise_sd * noise(rng);
    d.test_xs = config.test_dist.sample(rng, config.n_test);
    d.test_targets.resize(config.n_test);
    for (Eigen::Index i = 0; i < config.n_test; ++i) d.test_targets(i) = f_rho(row_span(d.test_xs, i));
    if (config.noisy_targets)
        for (Eigen::Index i = 0; i < config.n_test; ++i) d.test_targets(i) += config.noise_sd * noise(rng);
    return d;
}

namespace {

// Rows of one repetition for every (kernel, strategy, lambda) cell.
struct KernelCase {
    int k_or_degree;
    KernelSpec kernel;
    std::vector<double> lambdas;
};

ExperimentResult run_sim(const SimConfig& config, const std::string& experiment, const std::vector<KernelCase>& cases,
                         double domain_bound) {
    const int k = config.k;
    const TargetFn f_rho = [k](std::span<const double> x) { return regression_fn(k, x[0]); };
    ExperimentResult result;
    result.experiment = experiment;
    result.domain_bound = domain_bound;
    std::vector<std::vector<ResultRow>> per_rep(static_cast<std::size_t>(config.reps));
    result.rep_seeds.resize(static_cast<std::size_t>(config.reps));
    for (int rep = 0; rep < config.reps; ++rep)
        result.rep_seeds[static_cast<std::size_t>(rep)] = mix_seed(config.master_seed, static_cast<std::uint64_t>(rep));

    parallel_for(static_cast<std::size_t>(config.reps), config.threads, [&](std::size_t rep) {
        Rng rng = make_stream(config.master_seed, rep);
        const SimData data = draw_sim_data(config, f_rho, rng);
        std::vector<std::optional<Eigen::VectorXd>> weights;
        for (const auto& s : config.strategies) weights.push_back(strategy_weights(s.strategy, data.train_xs));
        auto& rows = per_rep[rep];
        for (const auto& kc : cases) {
            const PreparedProblem prob(kc.kernel, data.train_xs, data.test_xs);
            for (std::size_t si = 0; si < config.strategies.size(); ++si) {
                for (double lambda : kc.lambdas) {
                    ResultRow row;
                    row.experiment = experiment;
                    row.strategy = config.strategies[si].name;
                    row.k_or_degree = kc.k_or_degree;
                    row.lambda = lambda;
                    row.n = config.n_train;
                    row.rep = static_cast<int>(rep);
                    row.mse = cell_mse(prob, data.train_ys, weights[si], lambda, data.test_targets, row.failed);
                    rows.push_back(std::move(row));
                }
            }
        }
    });
    for (auto& rows : per_rep)
        for (auto& r : rows) result.rows.push_back(std::move(r));
    result.aggregates = aggregate(result.rows);
    return result;
}

}  // namespace

ExperimentResult run_gaussian_sim(const SimConfig& config) {
    validate_sim(config);
    config.kernel.validate();
    double bound = 0.0;
    const KernelSpec kernel = sim_kernel(config, config.kernel, &bound);
    return run_sim(config, "gaussian", {{config.k, kernel, config.lambda_grid}}, bound);
}

ExperimentResult run_polynomial_sim(const SimConfig& config, const std::vector<int>& degrees, double lambda) {
    validate_sim(config);
    if (degrees.empty()) throw ValidationError("no polynomial degrees given");
    if (!(lambda > 0.0)) throw InvalidRegularizerError("lambda must be positive");
    double bound = 0.0;
    std::vector<KernelCase> cases;
    for (int m : degrees) cases.push_back({m, sim_kernel(config, KernelSpec::polynomial(m, 1.0), &bound), {lambda}});
    return run_sim(config, "poly", cases, bound);
}

std::vector<BestLambda> min_over_lambda(const ExperimentResult& result) {
    std::map<std::tuple<std::string, int, long long>, BestLambda> best;
    for (const auto& a : result.aggregates) {
        if (!std::isfinite(a.mean)) continue;
        const auto key = std::make_tuple(a.strategy, a.k_or_degree, a.n);
        auto it = best.find(key);
        if (it == best.end() || a.mean < it->second.mean)
            best[key] = BestLambda{a.strategy, a.k_or_degree, a.n, a.lambda, a.mean, a.std_error};
    }
    std::vector<BestLambda> out;
    for (auto& [key, b] : best) out.push_back(b);
    return out;
}

double sign_test_p_value(int wins, int trials) {
    if (trials < 0 || wins < 0 || wins > trials) throw ValidationError("invalid sign test counts");
    if (trials == 0 || wins == 0) return 1.0;
    const boost::math::binomial_distribution<double> dist(trials, 0.5);
    return boost::math::cdf(boost::math::complement(dist, wins - 1));
}

PairedComparison paired_comparison(const ExperimentResult& result, const std::string& a, const std::string& b,
                                   int k_or_degree, Pairing pairing) {
    PairedComparison pc;
    pc.a = a;
    pc.b = b;
    pc.k_or_degree = k_or_degree;
    bool found_a = false, found_b = false;
    for (const auto& best : min_over_lambda(result)) {
        if (best.k_or_degree != k_or_degree) continue;
        if (best.strategy == a) {
            pc.lambda_a = best.lambda;
            pc.mean_a = best.mean;
            found_a = true;
        } else if (best.strategy == b) {
            pc.lambda_b = best.lambda;
            pc.mean_b = best.mean;
            found_b = true;
        }
    }
    if (!found_a || !found_b) throw ValidationError("paired comparison: strategy not present in the result");
    std::map<int, double> ma, mb;
    const auto keep = [](std::map<int, double>& m, int rep, double mse) {
        const auto [it, inserted] = m.emplace(rep, mse);
        if (!inserted) it->second = std::min(it->second, mse);
    };
    for (const auto& r : result.rows) {
        if (r.failed || r.k_or_degree != k_or_degree) continue;
        if (pairing == Pairing::per_rep_min) {
            if (r.strategy == a) keep(ma, r.rep, r.mse);
            if (r.strategy == b) keep(mb, r.rep, r.mse);
            continue;
        }
        if (r.strategy == a && r.lambda == pc.lambda_a) ma[r.rep] = r.mse;
        if (r.strategy == b && r.lambda == pc.lambda_b) mb[r.rep] = r.mse;
    }
    for (const auto& [rep, va] : ma) {
        const auto it = mb.find(rep);
        if (it == mb.end()) continue;
        ++pc.pairs;
        if (va < it->second) ++pc.wins_a;
        else if (va == it->second) ++pc.ties;
    }
    pc.fraction_a = pc.pairs > 0 ? static_cast<double>(pc.wins_a) / pc.pairs : 0.0;
    pc.sign_test_p = sign_test_p_value(pc.wins_a, pc.pairs - pc.ties);
    return pc;
}

LogLogFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("log-log fit needs at least two points");
    Eigen::ArrayXd lx(static_cast<Eigen::Index>(x.size())), ly(lx.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ValidationError("log-log fit needs positive values");
        lx(static_cast<Eigen::Index>(i)) = std::log(x[i]);
        ly(static_cast<Eigen::Index>(i)) = std::log(y[i]);
    }
    const double mx = lx.mean(), my = ly.mean();
    const double sxx = (lx - mx).square().sum();
    const double sxy = ((lx - mx) * (ly - my)).sum();
    const double syy = (ly - my).square().sum();
    LogLogFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

RateStudyResult run_rate_study(const RateStudyConfig& config) {
    if (config.n_grid.size() < 4) throw ValidationError("rate study needs at least 4 sample sizes");
    for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
        if (config.n_grid[i] < 1) throw ValidationError("sample sizes must be positive");
        if (i > 0 && config.n_grid[i] <= config.n_grid[i - 1]) throw ValidationError("n grid must be increasing");
    }
    if (config.reps < 1) throw ValidationError("reps must be at least 1");
    if (!config.f_rho) throw ValidationError("rate study needs a regression function");
    if (config.strategies.empty()) throw ValidationError("no weighting strategies given");
    if (config.source == ScheduleSource::grid && config.lambda_grid.empty()) throw ValidationError("empty lambda grid");
    if (config.source == ScheduleSource::fixed && !(config.fixed_lambda > 0.0))
        throw InvalidRegularizerError("fixed lambda must be positive");
    config.params.validate();

    const TargetFn target = config.target ? *config.target : config.f_rho;
    RateStudyResult result;
    result.domain_bound = mixture_quantile_radius({config.train_dist, config.test_dist}, 0.999, mix_seed(config.seed, 0xB0));
    const KernelSpec kernel = config.normalize_kernel ? normalize(config.kernel, result.domain_bound) : config.kernel;

    const std::size_t n_count = config.n_grid.size();
    const std::size_t n_strat = config.strategies.size();
    const auto reps = static_cast<std::size_t>(config.reps);

    // Per strategy and n: the lambdas, thresholds and schedule flags.
    struct Plan {
        std::vector<double> lambdas;
        double D = kInf;
        bool feasible = true;
    };
    std::vector<std::vector<Plan>> plans(n_strat, std::vector<Plan>(n_count));
    std::vector<double> theory(n_strat);
    for (std::size_t si = 0; si < n_strat; ++si) {
        const bool clip = config.strategies[si].scheduled_clipping;
        theory[si] = clip ? -2.0 * clipped_rate_exponent(config.params, config.clip_m, config.clip_epsilon)
                          : -2.0 * rate_exponent(config.params);
        for (std::size_t ni = 0; ni < n_count; ++ni) {
            Plan& p = plans[si][ni];
            const long long n = config.n_grid[ni];
            if (clip) {
                const Schedule s = clipped_schedule(config.params, config.clip_m, config.clip_epsilon, n,
                                                    config.c.value_or(1.0));
                p.D = s.clipping->D;
                p.feasible = s.feasible();
                if (config.source == ScheduleSource::theorem) p.lambdas = {s.lambda};
            } else if (config.source == ScheduleSource::theorem) {
                const Schedule s = iw_schedule(config.params, n, config.c);
                p.lambdas = {s.lambda};
                p.feasible = s.feasible();
            }
            if (config.source == ScheduleSource::fixed) p.lambdas = {config.fixed_lambda};
            if (config.source == ScheduleSource::grid) p.lambdas = config.lambda_grid;
        }
    }

    // mse[(ni * reps + rep)][si][li]
    std::vector<std::vector<std::vector<double>>> mse_cells(n_count * reps);
    parallel_for(n_count * reps, config.threads, [&](std::size_t slot) {
        const std::size_t ni = slot / reps, rep = slot % reps;
        Rng rng = make_stream(mix_seed(config.seed, ni), rep);
        SimConfig draw;
        draw.n_train = config.n_grid[ni];
        draw.n_test = config.n_test;
        draw.noise_sd = config.noise_sd;
        draw.train_dist = config.train_dist;
        draw.test_dist = config.test_dist;
        SimData data = draw_sim_data(draw, config.f_rho, rng);
        for (Eigen::Index i = 0; i < data.test_xs.rows(); ++i) data.test_targets(i) = target(row_span(data.test_xs, i));
        const PreparedProblem prob(kernel, data.train_xs, data.test_xs);
        auto& cell = mse_cells[slot];
        cell.resize(n_strat);
        for (std::size_t si = 0; si < n_strat; ++si) {
            auto w = strategy_weights(config.strategies[si].strategy, data.train_xs);
            if (w && std::isfinite(plans[si][ni].D)) *w = w->cwiseMin(plans[si][ni].D);
            for (double lambda : plans[si][ni].lambdas) {
                bool failed = false;
                cell[si].push_back(cell_mse(prob, data.train_ys, w, lambda, data.test_targets, failed));
            }
        }
    });

    for (std::size_t si = 0; si < n_strat; ++si) {
        RateCurve curve;
        curve.strategy = config.strategies[si].name;
        curve.theoretical_slope = theory[si];
        std::vector<double> fit_n, fit_mse;
        for (std::size_t ni = 0; ni < n_count; ++ni) {
            const Plan& p = plans[si][ni];
            double best_mean = kNaN, best_se = kNaN, best_lambda = kNaN;
            for (std::size_t li = 0; li < p.lambdas.size(); ++li) {
                std::vector<double> vals;
                for (std::size_t rep = 0; rep < reps; ++rep) {
                    const double v = mse_cells[ni * reps + rep][si][li];
                    ResultRow row{"rates", curve.strategy, 0, p.lambdas[li], config.n_grid[ni], static_cast<int>(rep), v,
                                  !std::isfinite(v)};
                    result.rows.push_back(row);
                    if (std::isfinite(v)) vals.push_back(v);
                }
                if (vals.empty()) continue;
                const Eigen::Map<const Eigen::ArrayXd> a(vals.data(), static_cast<Eigen::Index>(vals.size()));
                const double mean = a.mean();
                const double se = vals.size() > 1 ? std::sqrt((a - mean).square().sum() / (vals.size() - 1.0) /
                                                              static_cast<double>(vals.size()))
                                                  : 0.0;
                if (!(mean >= best_mean)) {
                    best_mean = mean;
                    best_se = se;
                    best_lambda = p.lambdas[li];
                }
            }
            const bool excluded = !std::isfinite(best_mean);
            curve.n.push_back(config.n_grid[ni]);
            curve.lambda.push_back(best_lambda);
            curve.D.push_back(p.D);
            curve.mean_mse.push_back(best_mean);
            curve.std_error.push_back(best_se);
            curve.excluded.push_back(excluded);
            curve.schedule_feasible.push_back(p.feasible);
            if (!excluded && best_mean > 0.0) {
                fit_n.push_back(static_cast<double>(config.n_grid[ni]));
                fit_mse.push_back(best_mean);
            }
        }
        if (fit_n.size() >= 2) curve.fit = fit_log_log(fit_n, fit_mse);
        else curve.fit = {kNaN, kNaN, kNaN};
        result.curves.push_back(std::move(curve));
    }
    return result;
}

ClassificationResult run_classification_study(const ClassificationConfig& config) {
    if (config.runs < 1) throw ValidationError("runs must be at least 1");
    if (config.n_grid.empty()) throw ValidationError("n grid is empty");
    if (!(config.lambda > 0.0)) throw InvalidRegularizerError("lambda must be positive");
    if (config.n_test < 2) throw ValidationError("test sample too small");
    config.kernel.validate();

    const LogisticLabelModel labels = config.labels;
    const auto f_rho = [labels](std::span<const double> x) { return labels.f_rho(x); };
    ClassificationResult result;
    result.margin = margin_report(f_rho, config.test_dist, config.delta_grid, config.margin_mc, mix_seed(config.seed, 0xA0));
    const double alpha = result.margin.degenerate ? 0.0 : result.margin.alpha;
    const double c_alpha = result.margin.degenerate ? 1.0 : result.margin.c_alpha;

    const std::size_t n_count = config.n_grid.size();
    const auto runs = static_cast<std::size_t>(config.runs);
    std::vector<std::vector<ClassificationRow>> slots(n_count * runs);
    parallel_for(n_count * runs, config.threads, [&](std::size_t slot) {
        const std::size_t ni = slot / runs, run = slot % runs;
        Rng rng = make_stream(mix_seed(config.seed, ni), run);
        const LabeledSet train = labels.sample(config.train_dist, config.n_grid[ni], rng);
        const LabeledSet test = labels.sample(config.test_dist, config.n_test, rng);
        Eigen::VectorXd f_true(test.xs.rows());
        for (Eigen::Index i = 0; i < f_true.size(); ++i) f_true(i) = f_rho(row_span(test.xs, i));
        const Eigen::VectorXi bayes = sign_classify(f_true);
        const TrainingSet data{train.xs, train.labels.cast<double>()};
        for (const auto& s : config.strategies) {
            ClassificationRow row;
            row.strategy = s.name;
            row.n = config.n_grid[ni];
            row.run = static_cast<int>(run);
            const FitModel model = fit_iwkrr(config.kernel, data, s.strategy, config.lambda);
            const Eigen::VectorXd f_hat = predict(model, test.xs);
            const Eigen::VectorXi pred = sign_classify(f_hat);
            row.risk = empirical_risk(pred, test);
            row.bayes_risk = empirical_risk(bayes, test);
            row.excess = row.risk - row.bayes_risk;
            const Eigen::ArrayXd diff = (pred.array() != test.labels.array()).cast<double>() -
                                        (bayes.array() != test.labels.array()).cast<double>();
            const double nd = static_cast<double>(diff.size());
            row.excess_se = std::sqrt((diff - diff.mean()).square().sum() / (nd - 1.0) / nd);
            row.l2_dist = std::sqrt((f_hat - f_true).squaredNorm() / nd);
            row.bound = excess_risk_bound(row.l2_dist, alpha, c_alpha);
            row.within = row.excess <= row.bound + 3.0 * row.excess_se;
            slots[slot].push_back(row);
        }
    });
    for (auto& v : slots)
        for (auto& r : v) result.rows.push_back(std::move(r));
    return result;
}

}  // namespace iwkrr
