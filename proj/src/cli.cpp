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

#include "iwkrr/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "iwkrr/classify.hpp"
#include "iwkrr/error.hpp"
#include "iwkrr/experiments.hpp"
#include "iwkrr/oracle.hpp"
#include "iwkrr/random.hpp"
#include "iwkrr/schedule.hpp"
#include "iwkrr/solver.hpp"
#include "iwkrr/spectrum.hpp"
#include "iwkrr/weights.hpp"

namespace iwkrr {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kLeafObjects{"kernel", "train", "test", "target", "distribution", "f_rho", "mse_target"};

struct Context {
    fs::path out_dir;
    unsigned threads = 1;
    std::ostream* out = nullptr;
    std::vector<std::string> outputs;

    void write(const std::string& name, const std::string& text) {
        write_text_file(out_dir / name, text);
        outputs.push_back(name);
    }
};

using Runner = std::function<int(const Json&, Context&)>;

std::string fmt(double v) { return format_double(v); }
std::string fmt(long long v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::vector<double> grid_from_json(const Json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.is_object()) return log_grid(j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("count").get<int>());
    throw ValidationError("a grid is an array or {\"lo\", \"hi\", \"count\"}");
}

/// {"type": "polynomial", "coefficients": [c0, c1, ...]} in the first input,
/// {"type": "exp_power", "k": k} or {"type": "tanh", "a": a, "b": b}.
TargetFn target_from_json(const Json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "polynomial") {
        const auto c = j.at("coefficients").get<std::vector<double>>();
        if (c.empty()) throw ValidationError("polynomial target needs coefficients");
        return [c](std::span<const double> x) {
            double v = 0.0;
            for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x[0] + *it;
            return v;
        };
    }
    if (type == "exp_power") {
        const int k = j.at("k").get<int>();
        if (k < 1) throw ValidationError("exp_power target needs k >= 1");
        return [k](std::span<const double> x) { return regression_fn(k, x[0]); };
    }
    if (type == "tanh") {
        const LogisticLabelModel m{j.at("a").get<double>(), j.at("b").get<double>()};
        return [m](std::span<const double> x) { return m.f_rho(x); };
    }
    throw ValidationError("unknown target type '" + type + "'");
}

std::vector<NamedStrategy> strategies_from_json(const Json& names, const DensityModel& test,
                                                const DensityModel& train, const Json& clip_d) {
    std::vector<NamedStrategy> out;
    for (const auto& name_json : names) {
        const std::string name = name_json.get<std::string>();
        if (name == "iw") {
            out.push_back({name, WeightStrategy::true_iw(test, train), false});
        } else if (name == "uniform") {
            out.push_back({name, WeightStrategy::uniform(), false});
        } else if (name == "clipped") {
            if (clip_d.is_null()) {
                out.push_back({name, WeightStrategy::true_iw(test, train), true});
            } else {
                out.push_back({name, WeightStrategy::clipped(WeightStrategy::true_iw(test, train), clip_d.get<double>()),
                               false});
            }
        } else {
            throw ValidationError("unknown strategy '" + name + "' (iw, uniform, clipped)");
        }
    }
    if (out.empty()) throw ValidationError("at least one strategy is required");
    return out;
}

Json default_train() { return to_json(DensityModel::gaussian1d(0.0, 0.5)); }
Json default_test() { return to_json(DensityModel::gaussian1d(1.5, 0.3)); }
Json grid_json(double lo, double hi, int count) { return Json{{"lo", lo}, {"hi", hi}, {"count", count}}; }

RateParams rates_default_params() {
    RateParams p = finite_rank_preset(1);
    p.W = 2.0;
    p.sigma = std::sqrt(2.0);
    p.E_s = 1.0;
    return p;
}

Json csv_rows_json(const std::vector<Aggregate>& aggs) {
    Json a = Json::array();
    for (const auto& g : aggs)
        a.push_back(Json{{"strategy", g.strategy}, {"k_or_degree", g.k_or_degree}, {"lambda", g.lambda},
                         {"n", g.n}, {"mean", g.mean}, {"std_error", g.std_error}, {"count", g.count}});
    return a;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
    CsvTable t({"experiment", "strategy", "k_or_degree", "lambda", "n", "rep", "mse"});
    for (const auto& r : rows)
        t.add({r.experiment, r.strategy, std::to_string(r.k_or_degree), fmt(r.lambda), fmt(r.n),
               std::to_string(r.rep), fmt(r.failed ? std::numeric_limits<double>::quiet_NaN() : r.mse)});
    return t.str();
}

Json paired_json(const PairedComparison& p) {
    return Json{{"lambda_a", p.lambda_a}, {"lambda_b", p.lambda_b}, {"mean_a", p.mean_a},
                {"mean_b", p.mean_b},     {"pairs", p.pairs},       {"wins_a", p.wins_a},
                {"ties", p.ties},         {"fraction_a", p.fraction_a}, {"sign_test_p", p.sign_test_p}};
}

// ---------------------------------------------------------------- fit

int run_fit(const Json& cfg, Context& ctx) {
    if (cfg.at("data").is_null()) throw ValidationError("fit needs --data");
    const TrainingSet data = read_dataset_csv(cfg.at("data").get<std::string>());
    KernelSpec kernel = kernel_from_json(cfg.at("kernel"));
    if (cfg.at("normalize").get<bool>()) {
        double bound = 0.0;
        if (cfg.at("domain_bound").is_null()) {
            for (Eigen::Index i = 0; i < data.xs.rows(); ++i) bound = std::max(bound, data.xs.row(i).norm());
        } else {
            bound = cfg.at("domain_bound").get<double>();
        }
        kernel = normalize(kernel, bound);
    }
    const DensityModel train = density_from_json(cfg.at("train"));
    const DensityModel test = density_from_json(cfg.at("test"));
    const std::string kind = cfg.at("weights").get<std::string>();
    WeightStrategy strategy = WeightStrategy::uniform();
    if (kind == "iw") {
        strategy = WeightStrategy::true_iw(test, train);
    } else if (kind == "clipped") {
        if (cfg.at("clip_D").is_null()) throw ValidationError("clipped weights need --D");
        strategy = WeightStrategy::clipped(WeightStrategy::true_iw(test, train), cfg.at("clip_D").get<double>());
    } else if (kind == "custom") {
        strategy = WeightStrategy::custom(density_from_json(cfg.at("target")), train);
    } else if (kind != "uniform") {
        throw ValidationError("unknown weights '" + kind + "'");
    }
    FitOptions options;
    const std::string method = cfg.at("method").get<std::string>();
    if (method == "dual") options.method = SolveMethod::dual;
    else if (method == "primal") options.method = SolveMethod::primal;
    else if (method != "automatic") throw ValidationError("unknown method '" + method + "'");

    const FitModel model = fit_iwkrr(kernel, data, strategy, cfg.at("lambda").get<double>(), options);
    Json j = to_json(model);
    j["weights"] = to_json(strategy);
    ctx.write("model.json", dump_json(j));

    const Eigen::VectorXd fitted = predict(model, data.xs);
    const Eigen::VectorXd w = strategy.eval(data.xs);
    *ctx.out << "n=" << data.size() << " support=" << model.support.rows() << " train_mse="
             << fmt((fitted - data.ys).squaredNorm() / static_cast<double>(data.size()))
             << " objective=" << fmt(objective(model, data, w)) << "\n";

    if (!cfg.at("predict").is_null()) {
        const Points query = read_points_csv(cfg.at("predict").get<std::string>());
        if (query.cols() != data.xs.cols()) throw ValidationError("prediction inputs have the wrong dimension");
        const Eigen::VectorXd pred = predict(model, query);
        std::vector<std::string> header;
        for (Eigen::Index c = 0; c < query.cols(); ++c) header.push_back("x" + std::to_string(c + 1));
        header.emplace_back("prediction");
        CsvTable t(header);
        for (Eigen::Index i = 0; i < query.rows(); ++i) {
            std::vector<std::string> row;
            for (Eigen::Index c = 0; c < query.cols(); ++c) row.push_back(fmt(query(i, c)));
            row.push_back(fmt(pred(i)));
            t.add(row);
        }
        ctx.write("predictions.csv", t.str());
    }
    return exit_ok;
}

// ---------------------------------------------------------------- sim

int run_sim(const Json& cfg, Context& ctx) {
    SimConfig c;
    c.k = cfg.at("k").get<int>();
    c.n_train = cfg.at("n_train").get<Eigen::Index>();
    c.n_test = cfg.at("n_test").get<Eigen::Index>();
    c.noise_sd = cfg.at("noise_sd").get<double>();
    c.train_dist = density_from_json(cfg.at("train"));
    c.test_dist = density_from_json(cfg.at("test"));
    c.kernel = kernel_from_json(cfg.at("kernel"));
    c.normalize_kernel = cfg.at("normalize").get<bool>();
    c.lambda_grid = grid_from_json(cfg.at("lambda_grid"));
    c.strategies = strategies_from_json(cfg.at("strategies"), c.test_dist, c.train_dist, cfg.at("clip_D"));
    c.reps = cfg.at("reps").get<int>();
    c.master_seed = cfg.at("seed").get<std::uint64_t>();
    c.noisy_targets = cfg.at("noisy_targets").get<bool>();
    c.threads = ctx.threads;

    const std::string experiment = cfg.at("experiment").get<std::string>();
    ExperimentResult r;
    if (experiment == "gaussian") {
        r = run_gaussian_sim(c);
    } else if (experiment == "poly") {
        r = run_polynomial_sim(c, cfg.at("degrees").get<std::vector<int>>(), cfg.at("lambda").get<double>());
    } else {
        throw ValidationError("unknown experiment '" + experiment + "' (gaussian, poly)");
    }
    ctx.write("results.csv", results_csv(r.rows));

    Json best = Json::array();
    const auto best_list = min_over_lambda(r);
    for (const auto& b : best_list)
        best.push_back(Json{{"strategy", b.strategy}, {"k_or_degree", b.k_or_degree}, {"lambda", b.lambda},
                            {"mean", b.mean}, {"std_error", b.std_error}});
    Json paired = Json::array();
    std::set<int> keys;
    std::set<std::string> names;
    for (const auto& b : best_list) {
        keys.insert(b.k_or_degree);
        names.insert(b.strategy);
    }
    if (names.count("iw") && names.count("uniform")) {
        for (const int key : keys) {
            paired.push_back(Json{{"a", "iw"},
                                  {"b", "uniform"},
                                  {"k_or_degree", key},
                                  {"best_mean_lambda", paired_json(paired_comparison(r, "iw", "uniform", key))},
                                  {"per_rep_min", paired_json(paired_comparison(r, "iw", "uniform", key,
                                                                                Pairing::per_rep_min))}});
        }
    }
    long long failed = 0;
    for (const auto& row : r.rows) failed += row.failed ? 1 : 0;
    const Json summary{{"experiment", r.experiment}, {"domain_bound", r.domain_bound},
                       {"aggregates", csv_rows_json(r.aggregates)}, {"best_lambda", best},
                       {"paired", paired}, {"failed_cells", failed}, {"rep_seeds", r.rep_seeds}};
    ctx.write("summary.json", dump_json(summary));

    if (cfg.at("plotdata").get<bool>()) {
        const bool gaussian = experiment == "gaussian";
        CsvTable t({"strategy", gaussian ? "k" : "degree", "lambda", "mean_mse", "stderr", "count"});
        for (const auto& g : r.aggregates)
            t.add({g.strategy, std::to_string(g.k_or_degree), fmt(g.lambda), fmt(g.mean), fmt(g.std_error),
                   std::to_string(g.count)});
        ctx.write(gaussian ? "fig2_mse_vs_lambda.csv" : "fig3_mse_vs_degree.csv", t.str());
    }
    for (const auto& b : best_list)
        *ctx.out << b.strategy << " k_or_degree=" << b.k_or_degree << " best_lambda=" << fmt(b.lambda)
                 << " mean_mse=" << fmt(b.mean) << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------- rates

int run_rates(const Json& cfg, Context& ctx) {
    RateStudyConfig c;
    c.n_grid = cfg.at("n_grid").get<std::vector<long long>>();
    c.reps = cfg.at("reps").get<int>();
    c.seed = cfg.at("seed").get<std::uint64_t>();
    c.kernel = kernel_from_json(cfg.at("kernel"));
    c.normalize_kernel = cfg.at("normalize").get<bool>();
    c.f_rho = target_from_json(cfg.at("f_rho"));
    if (!cfg.at("mse_target").is_null()) c.target = target_from_json(cfg.at("mse_target"));
    c.train_dist = density_from_json(cfg.at("train"));
    c.test_dist = density_from_json(cfg.at("test"));
    c.noise_sd = cfg.at("noise_sd").get<double>();
    c.strategies = strategies_from_json(cfg.at("strategies"), c.test_dist, c.train_dist, Json());
    const std::string source = cfg.at("schedule").get<std::string>();
    if (source == "theorem") c.source = ScheduleSource::theorem;
    else if (source == "fixed") c.source = ScheduleSource::fixed;
    else if (source == "grid") c.source = ScheduleSource::grid;
    else throw ValidationError("unknown schedule '" + source + "' (theorem, fixed, grid)");
    c.params = rate_params_from_json(cfg.at("params"));
    if (!cfg.at("c").is_null()) c.c = cfg.at("c").get<double>();
    c.clip_m = cfg.at("clip_m").get<int>();
    c.clip_epsilon = cfg.at("clip_epsilon").get<double>();
    c.fixed_lambda = cfg.at("fixed_lambda").get<double>();
    c.lambda_grid = grid_from_json(cfg.at("lambda_grid"));
    c.n_test = cfg.at("n_test").get<Eigen::Index>();
    c.threads = ctx.threads;

    const RateStudyResult r = run_rate_study(c);
    CsvTable t({"strategy", "n", "lambda", "D", "mean_mse", "stderr", "excluded", "schedule_feasible"});
    Json curves = Json::array();
    for (const auto& cu : r.curves) {
        for (std::size_t i = 0; i < cu.n.size(); ++i)
            t.add({cu.strategy, fmt(cu.n[i]), fmt(cu.lambda[i]), fmt(cu.D[i]), fmt(cu.mean_mse[i]),
                   fmt(cu.std_error[i]), fmt(static_cast<bool>(cu.excluded[i])),
                   fmt(static_cast<bool>(cu.schedule_feasible[i]))});
        curves.push_back(Json{{"strategy", cu.strategy}, {"slope", cu.fit.slope}, {"intercept", cu.fit.intercept},
                              {"r_squared", cu.fit.r_squared}, {"theoretical_slope", cu.theoretical_slope}});
        *ctx.out << cu.strategy << " slope=" << fmt(cu.fit.slope) << " theory=" << fmt(cu.theoretical_slope) << "\n";
    }
    ctx.write("rates.csv", t.str());
    ctx.write("results.csv", results_csv(r.rows));
    ctx.write("summary.json", dump_json(Json{{"curves", curves}, {"domain_bound", r.domain_bound}}));
    return exit_ok;
}

// ---------------------------------------------------------------- spectrum

int run_spectrum(const Json& cfg, Context& ctx) {
    const DensityModel dist = density_from_json(cfg.at("distribution"));
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    const auto n = cfg.at("n").get<Eigen::Index>();
    if (n < 1) throw ValidationError("spectrum needs n >= 1");
    KernelSpec kernel = kernel_from_json(cfg.at("kernel"));
    Points xs;
    if (cfg.at("sample").is_null()) {
        Rng rng = make_stream(seed, 0);
        xs = dist.sample(rng, n);
    } else {
        xs = read_points_csv(cfg.at("sample").get<std::string>());
    }
    double bound = 0.0;
    if (cfg.at("normalize").get<bool>()) {
        if (cfg.at("sample").is_null()) {
            bound = mixture_quantile_radius({dist}, 0.999, mix_seed(seed, 0xB0));
        } else {
            for (Eigen::Index i = 0; i < xs.rows(); ++i) bound = std::max(bound, xs.row(i).norm());
        }
        kernel = normalize(kernel, bound);
    }
    SpectrumOptions options;
    options.curve_grid = grid_from_json(cfg.at("curve_grid"));
    options.es_grid = grid_from_json(cfg.at("es_grid"));
    options.head_skip = cfg.at("head_skip").get<Eigen::Index>();
    options.tail_floor_rel = cfg.at("tail_floor_rel").get<double>();
    const SpectrumReport rep = spectrum_report(kernel, xs, options);

    CsvTable eig({"index", "eigenvalue"});
    for (Eigen::Index i = 0; i < rep.eigenvalues.size(); ++i) eig.add({std::to_string(i + 1), fmt(rep.eigenvalues(i))});
    ctx.write("spectrum.csv", eig.str());
    CsvTable curve({"lambda", "effective_dimension"});
    Json curve_json = Json::array();
    for (const auto& [lambda, value] : rep.eff_dim_curve) {
        curve.add({fmt(lambda), fmt(value)});
        curve_json.push_back(Json{{"lambda", lambda}, {"effective_dimension", value}});
    }
    ctx.write("eff_dim.csv", curve.str());
    const Json j{{"kernel", to_json(kernel)},
                 {"domain_bound", bound},
                 {"sample_size", rep.sample_size},
                 {"trace", rep.eigenvalues.sum()},
                 {"s_hat", rep.s_hat},
                 {"E_s_hat", rep.E_s_hat},
                 {"decay_fit_failed", rep.decay_fit_failed},
                 {"fit", Json{{"s_hat", rep.fit.s_hat}, {"slope", rep.fit.slope}, {"r_squared", rep.fit.r_squared},
                              {"used", rep.fit.used}, {"finite_rank", rep.fit.finite_rank}}},
                 {"eff_dim_curve", curve_json}};
    ctx.write("spectrum.json", dump_json(j));
    *ctx.out << "s_hat=" << fmt(rep.s_hat) << " E_s_hat=" << fmt(rep.E_s_hat) << " trace="
             << fmt(rep.eigenvalues.sum()) << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------- schedule

int run_schedule(const Json& cfg, Context& ctx) {
    const RateParams params = rate_params_from_json(cfg.at("params"));
    params.validate();
    const std::string kind = cfg.at("kind").get<std::string>();
    std::optional<double> c;
    if (!cfg.at("c").is_null()) c = cfg.at("c").get<double>();
    std::optional<double> c2;
    if (!cfg.at("c2").is_null()) c2 = cfg.at("c2").get<double>();
    const double c1 = cfg.at("c1").get<double>();
    const int m = cfg.at("m").get<int>();
    const double eps = cfg.at("epsilon").get<double>();

    CsvTable t({"kind", "n", "beta", "c", "lambda", "lambda_feasible", "tau", "c2", "D", "side_condition_ok",
                "feasible", "bound"});
    for (const long long n : cfg.at("n").get<std::vector<long long>>()) {
        Schedule s;
        BoundOptions bo;
        BoundKind which = BoundKind::thm1;
        if (kind == "iw") {
            s = iw_schedule(params, n, c);
            bo.c = c;
        } else if (kind == "generic") {
            s = generic_schedule(params, n, c);
            bo.c = c;
            bo.bias = cfg.at("bias").get<double>();
            which = BoundKind::thm2;
        } else if (kind == "clipped") {
            s = clipped_schedule(params, m, eps, n, c1, c2);
            bo.c1 = c1;
            bo.c2 = c2;
            bo.m = m;
            bo.epsilon = eps;
            which = BoundKind::thm4;
        } else {
            throw ValidationError("unknown schedule kind '" + kind + "' (iw, generic, clipped)");
        }
        const double bound = bound_value(params, n, which, bo);
        if (s.clipping) {
            const auto& cl = *s.clipping;
            t.add({kind, fmt(n), fmt(s.beta), fmt(s.c), fmt(s.lambda), fmt(s.lambda_feasible), fmt(cl.tau),
                   fmt(cl.c2), fmt(cl.D), fmt(cl.side_condition_ok), fmt(s.feasible()), fmt(bound)});
        } else {
            t.add({kind, fmt(n), fmt(s.beta), fmt(s.c), fmt(s.lambda), fmt(s.lambda_feasible), "", "",
                   fmt(std::numeric_limits<double>::infinity()), "", fmt(s.feasible()), fmt(bound)});
        }
    }
    const std::string text = t.str();
    ctx.write("schedule.csv", text);
    *ctx.out << text;
    return exit_ok;
}

// ---------------------------------------------------------------- diagnose-weights

int run_diagnose(const Json& cfg, Context& ctx) {
    const DensityModel test = density_from_json(cfg.at("test"));
    const DensityModel train = density_from_json(cfg.at("train"));
    DiagnosticsOptions o;
    o.alphas = cfg.at("alphas").get<std::vector<double>>();
    o.moments = cfg.at("moments").get<std::vector<int>>();
    o.q = cfg.at("q").get<double>();
    o.W = cfg.at("W").get<double>();
    o.sigma = cfg.at("sigma").get<double>();
    o.t_grid = cfg.at("t_grid").get<std::vector<double>>();
    o.sample_size = cfg.at("sample_size").get<Eigen::Index>();
    const WeightDiagnostics d = diagnose_weights(test, train, o, cfg.at("seed").get<std::uint64_t>());

    CsvTable t({"quantity", "parameter", "estimate", "stderr", "bound", "satisfied"});
    Json j{{"sup_estimate", d.sup_estimate}};
    j["sup_analytic"] = d.sup_analytic ? Json(fmt(*d.sup_analytic)) : Json();
    t.add({"sup_sample", "", fmt(d.sup_estimate), "", "", ""});
    if (d.sup_analytic) t.add({"sup_analytic", "", fmt(*d.sup_analytic), "", "", ""});
    Json renyi = Json::array();
    for (std::size_t i = 0; i < d.alphas.size(); ++i) {
        const Estimate& e = d.renyi_curve[i];
        t.add({"renyi", fmt(d.alphas[i]), fmt(e.value), fmt(e.std_error), "", ""});
        renyi.push_back(Json{{"alpha", d.alphas[i]}, {"value", fmt(e.value)}, {"std_error", e.std_error},
                             {"unstable", e.unstable}});
    }
    Json moments = Json::array();
    for (const auto& mr : d.moment_table) {
        t.add({"moment", std::to_string(mr.m), fmt(mr.lhs), fmt(mr.std_error), fmt(mr.rhs), fmt(mr.satisfied)});
        moments.push_back(Json{{"m", mr.m}, {"q", mr.q}, {"lhs", fmt(mr.lhs)}, {"std_error", mr.std_error},
                               {"rhs", mr.rhs}, {"satisfied", mr.satisfied}, {"underestimate", mr.underestimate},
                               {"unstable", mr.unstable}});
    }
    Json tail = Json::array();
    for (const auto& tp : d.tail_curve) {
        t.add({"tail", fmt(tp.t), fmt(tp.empirical), fmt(tp.std_error), fmt(tp.bound), fmt(tp.satisfied)});
        tail.push_back(Json{{"t", tp.t}, {"empirical", tp.empirical}, {"std_error", tp.std_error},
                            {"bound", tp.bound}, {"satisfied", tp.satisfied}});
    }
    j["renyi"] = renyi;
    j["moments"] = moments;
    j["tail"] = tail;
    ctx.write("weights.csv", t.str());
    ctx.write("weights.json", dump_json(j));
    *ctx.out << "sup_sample=" << fmt(d.sup_estimate);
    if (d.sup_analytic) *ctx.out << " sup_analytic=" << fmt(*d.sup_analytic);
    *ctx.out << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------- classify-sim

int run_classify(const Json& cfg, Context& ctx) {
    ClassificationConfig c;
    c.labels = LogisticLabelModel{cfg.at("a").get<double>(), cfg.at("b").get<double>()};
    c.train_dist = density_from_json(cfg.at("train"));
    c.test_dist = density_from_json(cfg.at("test"));
    c.kernel = kernel_from_json(cfg.at("kernel"));
    c.lambda = cfg.at("lambda").get<double>();
    c.n_grid = cfg.at("n_grid").get<std::vector<long long>>();
    c.n_test = cfg.at("n_test").get<Eigen::Index>();
    c.runs = cfg.at("runs").get<int>();
    c.seed = cfg.at("seed").get<std::uint64_t>();
    c.delta_grid = grid_from_json(cfg.at("delta_grid"));
    c.margin_mc = cfg.at("margin_mc").get<Eigen::Index>();
    c.strategies = strategies_from_json(cfg.at("strategies"), c.test_dist, c.train_dist, cfg.at("clip_D"));
    c.threads = ctx.threads;
    const ClassificationResult r = run_classification_study(c);

    CsvTable t({"strategy", "n", "run", "risk", "bayes_risk", "excess", "excess_se", "l2_dist", "bound", "within"});
    int within = 0;
    for (const auto& row : r.rows) {
        t.add({row.strategy, fmt(row.n), std::to_string(row.run), fmt(row.risk), fmt(row.bayes_risk), fmt(row.excess),
               fmt(row.excess_se), fmt(row.l2_dist), fmt(row.bound), fmt(row.within)});
        within += row.within ? 1 : 0;
    }
    ctx.write("classify.csv", t.str());
    const MarginReport& m = r.margin;
    const Json j{{"margin", Json{{"deltas", m.deltas}, {"masses", m.masses}, {"B_l", m.B_l}, {"l", m.l},
                                {"alpha", m.alpha}, {"c_alpha", m.c_alpha}, {"r_squared", m.r_squared},
                                {"degenerate", m.degenerate}}},
                 {"rows", r.rows.size()},
                 {"within_bound", within}};
    ctx.write("summary.json", dump_json(j));
    *ctx.out << "alpha=" << fmt(m.alpha) << " c_alpha=" << fmt(m.c_alpha) << " within_bound=" << within << "/"
             << r.rows.size() << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------- check

int run_check(const Json& cfg, Context& ctx) {
    const std::string suite = cfg.at("suite").get<std::string>();
    if (suite != "oracle") throw ValidationError("unknown suite '" + suite + "' (oracle)");
    const auto results = oracle_suite(cfg.at("seed").get<std::uint64_t>(), cfg.at("instances").get<int>());
    CsvTable t({"name", "passed", "value", "tolerance"});
    bool ok = true;
    for (const auto& r : results) {
        t.add({r.name, fmt(r.passed), fmt(r.value), fmt(r.tolerance)});
        *ctx.out << (r.passed ? "PASS " : "FAIL ") << r.name << " value=" << fmt(r.value)
                 << " tolerance=" << fmt(r.tolerance) << "\n";
        ok = ok && r.passed;
    }
    ctx.write("check.csv", t.str());
    return ok ? exit_ok : exit_check_failed;
}

// ---------------------------------------------------------------- table

struct Command {
    std::string description;
    Runner run;
};

const std::map<std::string, Command>& commands() {
    static const std::map<std::string, Command> table{
        {"fit", {"Fit IW-KRR to a CSV dataset (columns x1..xd, y)", run_fit}},
        {"sim", {"Simulation study: gaussian or poly", run_sim}},
        {"rates", {"Convergence-rate study over a grid of sample sizes", run_rates}},
        {"spectrum", {"Empirical kernel spectrum and effective dimension", run_spectrum}},
        {"schedule", {"Regularization and clipping schedules", run_schedule}},
        {"diagnose-weights", {"Importance-weight diagnostics", run_diagnose}},
        {"classify-sim", {"Classification by the sign of IW-KRR", run_classify}},
        {"check", {"Solver-versus-oracle check suite", run_check}},
    };
    return table;
}

std::string timestamp_utc() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

template <typename T>
CLI::Option* bind_option(CLI::App* app, const std::string& flag, const std::string& pointer, Json& patch,
                  const std::string& help) {
    return app->add_option_function<T>(
        flag, [&patch, pointer](const T& v) { patch[Json::json_pointer(pointer)] = v; }, help);
}

void add_kernel_flags(CLI::App* app, Json& patch) {
    bind_option<std::string>(app, "--kernel", "/kernel/family", patch, "gaussian, polynomial, linear or matern");
    bind_option<double>(app, "--lengthscale", "/kernel/params/lengthscale", patch, "Gaussian/Matern length scale");
    bind_option<int>(app, "--degree", "/kernel/params/degree", patch, "polynomial degree");
    bind_option<double>(app, "--offset", "/kernel/params/offset", patch, "polynomial offset c");
    bind_option<double>(app, "--smoothness", "/kernel/params/smoothness", patch, "Matern smoothness");
}

void add_rate_param_flags(CLI::App* app, Json& patch) {
    for (const char* name : {"r", "s", "q", "W", "sigma", "delta", "M", "R"})
        bind_option<double>(app, std::string("--") + name, std::string("/params/") + name, patch, std::string("rate constant ") + name);
    bind_option<double>(app, "--E-s", "/params/E_s", patch, "effective-dimension constant E_s");
}

void configure(const std::string& name, CLI::App* app, Json& patch) {
    if (name == "fit") {
        bind_option<std::string>(app, "--data", "/data", patch, "training CSV with columns x1..xd, y");
        bind_option<std::string>(app, "--predict", "/predict", patch, "CSV of inputs to predict (x1..xd, y ignored)");
        bind_option<double>(app, "--lambda", "/lambda", patch, "regularization");
        bind_option<std::string>(app, "--weights", "/weights", patch, "uniform, iw, clipped or custom");
        bind_option<double>(app, "--D", "/clip_D", patch, "clipping threshold");
        bind_option<std::string>(app, "--method", "/method", patch, "automatic, dual or primal");
        add_kernel_flags(app, patch);
    } else if (name == "sim") {
        bind_option<std::string>(app, "experiment", "/experiment", patch, "gaussian or poly");
        bind_option<int>(app, "--k", "/k", patch, "regression function exponent k");
        bind_option<int>(app, "--reps", "/reps", patch, "repetitions");
        bind_option<long long>(app, "--n-train", "/n_train", patch, "training size");
        bind_option<long long>(app, "--n-test", "/n_test", patch, "test size");
        bind_option<double>(app, "--noise-sd", "/noise_sd", patch, "label noise standard deviation");
        bind_option<double>(app, "--lambda", "/lambda", patch, "regularization of the poly experiment");
        bind_option<std::vector<int>>(app, "--degrees", "/degrees", patch, "polynomial degrees");
        bind_option<std::vector<std::string>>(app, "--strategy", "/strategies", patch, "iw, uniform, clipped");
        app->add_flag_callback("--noisy-targets", [&patch] { patch["noisy_targets"] = true; },
                               "score against noisy test labels");
        app->add_flag_callback("--plotdata", [&patch] { patch["plotdata"] = true; }, "write per-figure CSVs");
    } else if (name == "rates") {
        bind_option<std::vector<std::string>>(app, "--strategy", "/strategies", patch, "iw, uniform, clipped");
        bind_option<std::string>(app, "--schedule", "/schedule", patch, "theorem, fixed or grid");
        bind_option<int>(app, "--reps", "/reps", patch, "repetitions");
        bind_option<std::vector<long long>>(app, "--n", "/n_grid", patch, "sample sizes");
        bind_option<double>(app, "--lambda", "/fixed_lambda", patch, "lambda of the fixed schedule");
        bind_option<double>(app, "--c", "/c", patch, "schedule constant");
        bind_option<double>(app, "--noise-sd", "/noise_sd", patch, "label noise standard deviation");
        add_kernel_flags(app, patch);
        add_rate_param_flags(app, patch);
    } else if (name == "spectrum") {
        bind_option<long long>(app, "--n", "/n", patch, "sample size");
        bind_option<std::string>(app, "--sample", "/sample", patch, "CSV of inputs (x1..xd) instead of sampling");
        add_kernel_flags(app, patch);
    } else if (name == "schedule") {
        bind_option<std::string>(app, "--kind", "/kind", patch, "iw, generic or clipped");
        bind_option<std::vector<long long>>(app, "--n", "/n", patch, "sample sizes");
        bind_option<double>(app, "--c", "/c", patch, "lambda constant");
        bind_option<double>(app, "--c1", "/c1", patch, "clipped lambda constant");
        bind_option<double>(app, "--c2", "/c2", patch, "clipping constant");
        bind_option<int>(app, "--m", "/m", patch, "moment order of the clipped schedule");
        bind_option<double>(app, "--epsilon", "/epsilon", patch, "clipped schedule slack");
        bind_option<double>(app, "--bias", "/bias", patch, "bias term of the generic bound");
        add_rate_param_flags(app, patch);
    } else if (name == "diagnose-weights") {
        bind_option<double>(app, "--q", "/q", patch, "moment degree q");
        bind_option<double>(app, "--W", "/W", patch, "moment constant W");
        bind_option<double>(app, "--sigma", "/sigma", patch, "moment constant sigma");
        bind_option<long long>(app, "--samples", "/sample_size", patch, "Monte-Carlo sample size");
    } else if (name == "classify-sim") {
        bind_option<int>(app, "--runs", "/runs", patch, "seeded runs");
        bind_option<double>(app, "--lambda", "/lambda", patch, "regularization");
        bind_option<std::vector<long long>>(app, "--n", "/n_grid", patch, "training sizes");
    } else if (name == "check") {
        bind_option<std::string>(app, "--suite", "/suite", patch, "check suite (oracle)");
        bind_option<int>(app, "--instances", "/instances", patch, "random instances");
    }
}

struct Run {
    std::string subcommand;
    Json config;
    std::vector<std::string> argv;
    fs::path out_dir;
    unsigned threads = 1;
};

int execute(const Run& run, std::ostream& out) {
    Context ctx;
    ctx.out_dir = run.out_dir;
    ctx.threads = run.threads;
    ctx.out = &out;
    fs::create_directories(run.out_dir);
    const int code = commands().at(run.subcommand).run(run.config, ctx);
    const Json manifest{{"subcommand", run.subcommand},
                        {"argv", run.argv},
                        {"config", run.config},
                        {"seed", run.config.at("seed")},
                        {"version", kVersion},
                        {"timestamp", timestamp_utc()},
                        {"outputs", ctx.outputs}};
    write_text_file(run.out_dir / "manifest.json", dump_json(manifest));
    return code;
}

Json load_config_file(const std::string& path, const std::string& subcommand) {
    Json j;
    try {
        j = Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ValidationError("config '" + path + "' must be a JSON object");
    if (j.contains("config") && j.contains("subcommand")) {
        if (j["subcommand"] != subcommand)
            throw ValidationError("manifest '" + path + "' belongs to subcommand " + j["subcommand"].dump());
        return j["config"];
    }
    return j;
}

int dispatch_rerun(const std::vector<std::string>& args, std::ostream& out) {
    CLI::App app{"Re-execute a run recorded in a manifest", "iwkrr rerun"};
    std::string manifest_path, out_dir;
    unsigned threads = 1;
    app.add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        std::ostringstream err;
        if (app.exit(e, out, err) == 0) return exit_ok;
        throw ValidationError(e.what());
    }
    const Json manifest = Json::parse(read_text_file(manifest_path));
    Run run;
    run.subcommand = manifest.at("subcommand").get<std::string>();
    if (!commands().count(run.subcommand)) throw ValidationError("manifest names an unknown subcommand");
    run.config = merge_config(default_config(run.subcommand), manifest.at("config"));
    run.argv = manifest.at("argv").get<std::vector<std::string>>();
    run.out_dir = out_dir;
    run.threads = threads;
    return execute(run, out);
}

int dispatch_impl(const std::vector<std::string>& args, std::ostream& out) {
    if (!args.empty() && args.front() == "rerun") return dispatch_rerun(args, out);

    CLI::App app{"Importance-weighted kernel ridge regression under covariate shift", "iwkrr"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::map<std::string, Json> patches;
    std::string config_path, out_dir = "out";
    unsigned threads = 1;
    std::uint64_t seed = 0;
    bool seed_given = false;
    for (const auto& [name, cmd] : commands()) {
        CLI::App* sub = app.add_subcommand(name, cmd.description);
        Json& patch = patches[name];
        patch = Json::object();
        sub->add_option("--config", config_path, "JSON config or manifest overriding the defaults");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option_function<std::uint64_t>(
            "--seed", [&seed, &seed_given](const std::uint64_t& v) { seed = v; seed_given = true; }, "master seed");
        configure(name, sub, patch);
    }
    app.add_subcommand("rerun", "Re-execute a run recorded in a manifest: rerun <manifest.json> --out DIR")
        ->allow_extras();
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        std::ostringstream err;
        const int code = app.exit(e, out, err);
        if (code == 0) return exit_ok;
        throw ValidationError(e.what());
    }

    const std::string name = app.get_subcommands().front()->get_name();
    Json config = default_config(name);
    if (!config_path.empty()) config = merge_config(config, load_config_file(config_path, name));
    Json patch = patches[name];
    if (seed_given) patch["seed"] = seed;
    config.merge_patch(patch);

    Run run;
    run.subcommand = name;
    run.config = config;
    run.argv = args;
    run.out_dir = out_dir;
    run.threads = threads;
    return execute(run, out);
}

}  // namespace

Json default_config(const std::string& subcommand) {
    const Json gaussian_kernel = to_json(KernelSpec::gaussian(1.0));
    if (subcommand == "fit")
        return Json{{"data", nullptr},      {"predict", nullptr},   {"kernel", gaussian_kernel},
                    {"normalize", true},    {"domain_bound", nullptr}, {"lambda", 1e-3},
                    {"weights", "uniform"}, {"clip_D", nullptr},    {"train", default_train()},
                    {"test", default_test()}, {"target", nullptr},  {"method", "automatic"},
                    {"seed", 0}};
    if (subcommand == "sim")
        return Json{{"experiment", "gaussian"}, {"k", 1}, {"n_train", 200}, {"n_test", 2000}, {"noise_sd", 0.05},
                    {"train", default_train()}, {"test", default_test()}, {"kernel", gaussian_kernel},
                    {"normalize", true}, {"lambda_grid", grid_json(1e-6, 10.0, 15)},
                    {"strategies", {"iw", "uniform"}}, {"clip_D", nullptr}, {"reps", 100}, {"seed", 0},
                    {"noisy_targets", false}, {"degrees", {1, 2, 3, 4, 5, 6, 7}}, {"lambda", 1.0},
                    {"plotdata", false}};
    if (subcommand == "rates")
        return Json{{"strategies", {"iw"}}, {"schedule", "theorem"},
                    {"n_grid", {100, 200, 400, 800, 1600, 3200, 6400}}, {"reps", 50}, {"seed", 0},
                    {"kernel", to_json(KernelSpec::linear())}, {"normalize", true},
                    {"f_rho", Json{{"type", "polynomial"}, {"coefficients", {0.0, 0.8}}}}, {"mse_target", nullptr},
                    {"train", to_json(DensityModel::uniform_interval(0.0, 2.0))},
                    {"test", to_json(DensityModel::uniform_interval(1.0, 2.0))}, {"noise_sd", 1.0},
                    {"params", to_json(rates_default_params())}, {"c", 1.0}, {"clip_m", 10},
                    {"clip_epsilon", 0.01}, {"fixed_lambda", 1e-3}, {"lambda_grid", grid_json(1e-6, 10.0, 15)},
                    {"n_test", 2000}};
    if (subcommand == "spectrum")
        return Json{{"kernel", gaussian_kernel}, {"normalize", true}, {"distribution", default_train()},
                    {"sample", nullptr}, {"n", 500}, {"seed", 0}, {"curve_grid", grid_json(1e-6, 1.0, 25)},
                    {"es_grid", grid_json(1e-6, 1.0, 61)}, {"head_skip", 2}, {"tail_floor_rel", 1e-10}};
    if (subcommand == "schedule")
        return Json{{"kind", "iw"}, {"params", to_json(RateParams{})}, {"n", {1000}}, {"c", nullptr},
                    {"c1", 1.0}, {"c2", nullptr}, {"m", 10}, {"epsilon", 0.01}, {"bias", 0.0}, {"seed", 0}};
    if (subcommand == "diagnose-weights")
        return Json{{"test", default_test()}, {"train", default_train()}, {"alphas", {0.5, 1.0, 2.0, 3.0}},
                    {"moments", {2, 3, 4, 5}}, {"q", 1.0}, {"W", 1.0}, {"sigma", 1.0},
                    {"t_grid", {1.0, 2.0, 5.0, 10.0, 20.0, 50.0}}, {"sample_size", 100000}, {"seed", 0}};
    if (subcommand == "classify-sim")
        return Json{{"a", 4.0}, {"b", 1.2}, {"train", default_train()}, {"test", default_test()},
                    {"kernel", gaussian_kernel}, {"lambda", 1e-3}, {"n_grid", {200, 400, 800}}, {"n_test", 5000},
                    {"runs", 20}, {"seed", 0}, {"delta_grid", grid_json(0.01, 1.0, 12)}, {"margin_mc", 200000},
                    {"strategies", {"iw", "uniform"}}, {"clip_D", nullptr}};
    if (subcommand == "check") return Json{{"suite", "oracle"}, {"instances", 100}, {"seed", 42}};
    throw ValidationError("unknown subcommand '" + subcommand + "'");
}

Json merge_config(const Json& base, const Json& overlay) {
    if (!overlay.is_object()) throw ValidationError("config overlay must be a JSON object");
    Json out = base;
    for (const auto& [key, value] : overlay.items()) {
        if (!out.contains(key)) throw ValidationError("unknown config key '" + key + "'");
        Json& slot = out[key];
        if (slot.is_object() && value.is_object() && !kLeafObjects.count(key)) {
            for (const auto& [k2, v2] : value.items()) slot[k2] = v2;
        } else {
            slot = value;
        }
    }
    return out;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch_impl(args, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const Json::exception& e) {
        err << "error: bad config value: " << e.what() << "\n";
        return exit_validation;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    }
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace iwkrr
