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

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "iwkrr/classify.hpp"
#include "iwkrr/experiments.hpp"
#include "iwkrr/features.hpp"
#include "iwkrr/io.hpp"
#include "iwkrr/oracle.hpp"
#include "iwkrr/random.hpp"
#include "iwkrr/schedule.hpp"
#include "iwkrr/spectrum.hpp"

using namespace iwkrr;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 2026;

struct Outcome {
    bool passed = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            passed = false;
            detail << " [failed: " << what << "]";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const CheckResult& find_check(const std::vector<CheckResult>& checks, const std::string& name) {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw std::runtime_error("missing check " + name);
}

RateParams params(double r, double s, double q) {
    RateParams p;
    p.r = r;
    p.s = s;
    p.q = q;
    return p;
}

void c1(Outcome& o) {
    const auto t0 = Clock::now();
    const auto checks = oracle_suite(42, 100);
    const double secs = seconds_since(t0);
    const auto& pred = find_check(checks, "solver_oracle_prediction");
    const auto& obj = find_check(checks, "solver_oracle_objective");
    o.detail << "prediction " << pred.value << " objective " << obj.value << " over 100 instances";
    o.require(pred.value <= 1e-8, "prediction relative error <= 1e-8");
    o.require(obj.value <= 1e-10, "objective relative error <= 1e-10");
    o.require(secs < 30.0, "runtime < 30 s");
}

void c2(Outcome& o) {
    const auto checks = oracle_suite(7, 100);
    for (const char* name :
         {"uniform_reduction", "clipping_identity", "joint_scaling_invariance", "zero_weight_neutrality"}) {
        const auto& c = find_check(checks, name);
        o.detail << name << " " << c.value << " ";
        o.require(c.value <= 1e-10, std::string(name) + " <= 1e-10");
    }
}

void c3(Outcome& o) {
    double worst = 0.0;
    const auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
    for (const double r : {0.5, 0.75, 1.0})
        for (const double s : {0.0, 0.3, 0.7, 1.0}) {
            track(iw_schedule(params(r, s, 0.0), 100).beta * r, r / (2 * r + s));
            track(iw_schedule(params(r, s, 1.0), 100).beta * r, r / (2 * r + 1));
        }
    for (const int rank : {1, 3, 10}) track(rate_exponent(finite_rank_preset(rank)), 0.5);
    for (const int d : {1, 2, 3})
        for (const double eta : {2.0, 3.5, 8.0}) track(rate_exponent(sobolev_preset(eta, d)), eta / (2 * eta + d));

    int points = 0;
    for (const double r : {0.5, 1.0})
        for (const double s : {0.0, 0.5})
            for (const double q : {0.25, 0.5, 1.0})
                for (const int m : {2, 10}) {
                    if (points == 20) break;
                    const double eps = 0.01 * (1 + points % 3);
                    const auto sch = clipped_schedule(params(r, s, q), m, eps, 100);
                    const double den = (s + 2 * r) * (m - 1) + 4 * q * r + eps;
                    track(sch.beta, (m - 1) / den);
                    track(sch.clipping->tau, 4 * q * r / den);
                    ++points;
                }
    o.detail << "worst deviation " << worst << " with " << points << " clipped grid points";
    o.require(points == 20, "20 clipped grid points");
    o.require(worst <= 1e-12, "deviation <= 1e-12");
}

void c4(Outcome& o) {
    const auto t0 = Clock::now();
    RateStudyConfig c;
    c.seed = kSeed;
    c.f_rho = [](std::span<const double> x) { return 0.8 * x[0]; };
    c.params = finite_rank_preset(1);
    c.params.W = 2.0;
    c.params.sigma = std::sqrt(2.0);
    c.params.E_s = 1.0;
    c.strategies = {{"iw", WeightStrategy::true_iw(c.test_dist, c.train_dist), false}};
    c.c = 1.0;
    const auto r = run_rate_study(c);
    const double secs = seconds_since(t0);
    const double slope = r.curves.at(0).fit.slope;
    o.detail << "slope " << slope << " (theory " << r.curves.at(0).theoretical_slope << ") in " << secs << " s";
    o.require(slope >= -1.3 && slope <= -0.7, "slope in [-1.3, -0.7]");
    o.require(secs < 300.0, "runtime < 5 min");
}

double best_mean(const ExperimentResult& r, const std::string& strategy, int k) {
    for (const auto& b : min_over_lambda(r))
        if (b.strategy == strategy && b.k_or_degree == k) return b.mean;
    throw std::runtime_error("missing strategy " + strategy);
}

void c5(Outcome& o) {
    const auto t0 = Clock::now();
    SimConfig c;
    c.master_seed = kSeed;
    c.k = 25;
    const auto r25 = run_gaussian_sim(c);
    const double iw25 = best_mean(r25, "iw", 25), un25 = best_mean(r25, "uniform", 25);
    const auto per_rep = paired_comparison(r25, "iw", "uniform", 25, Pairing::per_rep_min);
    const auto best = paired_comparison(r25, "iw", "uniform", 25, Pairing::best_mean_lambda);
    c.k = 1;
    const auto r1 = run_gaussian_sim(c);
    const double iw1 = best_mean(r1, "iw", 1), un1 = best_mean(r1, "uniform", 1);
    const double secs = seconds_since(t0);
    o.detail << "k=25 iw " << iw25 << " uniform " << un25 << " wins " << per_rep.wins_a << "/" << per_rep.pairs
             << " (at best-mean lambdas " << best.wins_a << "/" << best.pairs << "); k=1 iw " << iw1 << " uniform "
             << un1 << "; " << secs << " s";
    o.require(iw25 < un25, "k=25 IW mean below uniform");
    o.require(per_rep.fraction_a >= 0.8, "k=25 IW wins >= 80% of reps");
    o.require(un1 <= 1.2 * iw1, "k=1 uniform <= 1.2 x IW");
    o.require(secs < 600.0, "runtime < 10 min");
}

void c6(Outcome& o) {
    const auto t0 = Clock::now();
    SimConfig c;
    c.master_seed = kSeed;
    const auto r = run_polynomial_sim(c, {1, 2, 3, 4, 5, 6, 7}, 1.0);
    const auto p = paired_comparison(r, "iw", "uniform", 1);
    const double secs = seconds_since(t0);
    o.detail << "degree 1 iw " << p.mean_a << " uniform " << p.mean_b << " wins " << p.wins_a << "/" << p.pairs
             << " p " << p.sign_test_p << "; " << secs << " s";
    o.require(p.mean_a < p.mean_b, "IW mean below uniform");
    o.require(p.sign_test_p < 0.01, "sign test p < 0.01");
    o.require(secs < 300.0, "runtime < 5 min");
}

void c7(Outcome& o) {
    const auto tr = DensityModel::gaussian1d(0.0, 0.5), te = DensityModel::gaussian1d(1.5, 0.3);
    const KernelSpec k = KernelSpec::polynomial(1, 1.0);
    const FeatureMap fm(k, 1);
    const TargetFn square = [](std::span<const double> x) { return x[0] * x[0]; };

    const Estimate bias = bias_term(fm, square, tr, te, 100000, 11);
    o.detail << "misspecified bias " << bias.value << " se " << bias.std_error;
    o.require(bias.value > 10.0 * bias.std_error, "misspecified bias > 10 SE");

    const ProjectionResult proj = projection(fm, square, te, 100000, 12);
    RateStudyConfig c;
    c.seed = 5;
    c.kernel = k;
    c.normalize_kernel = false;
    c.f_rho = square;
    c.train_dist = tr;
    c.test_dist = te;
    c.noise_sd = 0.05;
    const Eigen::VectorXd theta = proj.theta;
    c.target = [fm, theta](std::span<const double> x) { return fm(x).dot(theta); };
    c.strategies = default_strategies(te, tr);
    c.source = ScheduleSource::fixed;
    c.fixed_lambda = 1e-4;
    c.params = finite_rank_preset(2);
    const auto r = run_rate_study(c);
    const long long n_max = c.n_grid.back();
    std::map<int, std::pair<double, double>> by_rep;
    for (const auto& row : r.rows) {
        if (row.n != n_max) continue;
        auto& p = by_rep[row.rep];
        (row.strategy == "iw" ? p.first : p.second) = row.mse;
    }
    int wins = 0;
    for (const auto& [rep, p] : by_rep) wins += p.first < p.second;
    const double frac = static_cast<double>(wins) / static_cast<double>(by_rep.size());
    o.detail << "; IW closer to the test projection in " << wins << "/" << by_rep.size() << " reps at n=" << n_max;
    o.require(by_rep.size() == 50 && frac >= 0.9, "IW closer in >= 90% of 50 reps");

    const TargetFn linear = [](std::span<const double> x) { return 2.0 * x[0] - 1.0; };
    std::uint64_t seed = 13;
    for (const auto& rho : {tr, DensityModel::gaussian1d(0.5, 1.0), DensityModel::uniform_interval(-1.0, 3.0)}) {
        const Estimate ws = bias_term(fm, linear, rho, te, 100000, seed++);
        o.detail << "; well-specified bias " << ws.value << " se " << ws.std_error;
        o.require(ws.value <= 3.0 * ws.std_error + 1e-12, "well-specified bias within 3 SE of 0");
    }
}

Points normal_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    Rng rng = make_stream(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Points xs(n, d);
    for (auto& v : xs.reshaped()) v = g(rng);
    return xs;
}

void c8(Outcome& o) {
    const Points xs = normal_points(100, 2, 4);
    const double bound = xs.rowwise().norm().maxCoeff();
    double worst_trace = 0.0;
    for (const auto& k : {KernelSpec::gaussian(0.7), KernelSpec::matern(1.5, 1.0), KernelSpec::polynomial(3, 1.0),
                          KernelSpec::linear()})
        worst_trace = std::max(worst_trace, empirical_eigs(normalize(k, bound), xs).sum());
    o.detail << "max trace " << worst_trace;
    o.require(worst_trace <= 1.0 + 1e-8, "trace <= 1 + 1e-8");

    const Eigen::VectorXd mu = empirical_eigs(normalize(KernelSpec::gaussian(0.7), bound), xs);
    bool monotone = true;
    double prev = effective_dimension(mu, 1e-9);
    for (const double lambda : log_grid(1e-8, 10.0, 60)) {
        const double n = effective_dimension(mu, lambda);
        monotone = monotone && n <= prev;
        prev = n;
    }
    o.require(monotone, "effective dimension nonincreasing");

    double worst_s = 0.0;
    for (const double s : {0.1, 0.25, 0.5, 0.75, 1.0}) {
        Eigen::VectorXd p(400);
        for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = std::pow(static_cast<double>(i + 1), -1.0 / s);
        worst_s = std::max(worst_s, std::abs(estimate_decay(p).s_hat - s));
    }
    o.detail << " decay error " << worst_s;
    o.require(worst_s <= 0.02, "decay recovers s to 0.02");

    const Points line = normal_points(80, 1, 5);
    int worst_excess = -100;
    for (int m = 1; m <= 6; ++m) {
        const Eigen::VectorXd ev = empirical_eigs(normalize(KernelSpec::polynomial(m, 1.0), 4.5), line);
        int rank = 0;
        for (const double v : ev) rank += v > 1e-10 * ev(0);
        worst_excess = std::max(worst_excess, rank - (m + 1));
    }
    o.detail << " rank excess " << worst_excess;
    o.require(worst_excess <= 0, "polynomial rank <= degree + 1");
}

void c9(Outcome& o) {
    const auto tr = DensityModel::gaussian1d(0.0, 0.5), te = DensityModel::gaussian1d(1.5, 0.3);
    const double B = mixture_quantile_radius({tr, te}, 0.999, mix_seed(1, 0xB0));
    const FeatureMap fm(normalize(KernelSpec::polynomial(2, 1.0), B), 1);
    const OperatorSample sample = operator_sample(fm, te, tr, 100000, 3);
    const double sigma2 = sample.weights.array().square().mean();
    int points = 0, bad = 0;
    double worst1 = 0.0, worst2 = 0.0;
    for (const double lambda : log_grid(0.6, 1.0, 5))
        for (const double factor : {1.0, 1.5}) {
            const double D = factor * 4.0 * sigma2 / (lambda * lambda);
            const OperatorCheck c = clipped_operator_check(sample, D, lambda, 30, 7);
            const bool ok = c.norm1 <= 0.5 * 1.1 + 3.0 * c.norm1_se && c.norm2 <= 2.0 * 1.1 + 3.0 * c.norm2_se &&
                            c.tr_TD <= c.tr_T + 1e-6;
            worst1 = std::max(worst1, c.norm1);
            worst2 = std::max(worst2, c.norm2);
            bad += !ok;
            ++points;
        }
    o.detail << points << " grid points, max norm1 " << worst1 << " max norm2 " << worst2 << ", " << bad
             << " violations";
    o.require(points == 10 && bad == 0, "operator bounds on the 10-point grid");
}

void c10(Outcome& o) {
    ClassificationConfig c;
    c.seed = kSeed;
    const auto r = run_classification_study(c);
    int outside = 0;
    std::map<long long, int> runs;
    for (const auto& row : r.rows) {
        outside += !row.within;
        ++runs[row.n];
    }
    o.detail << r.rows.size() << " rows, " << outside << " above the bound, alpha " << r.margin.alpha << " c_alpha "
             << r.margin.c_alpha;
    o.require(outside == 0, "excess risk within the bound");
    o.require(!r.rows.empty() && r.rows.size() == c.n_grid.size() * c.strategies.size() * 20,
              "20 runs per strategy and n");

    Rng rng = make_stream(kSeed, 99);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd v(1000);
    for (auto& x : v) x = g(rng);
    v(0) = 0.0;
    bool invariant = true;
    for (const double scale : {1e-300, 1e-8, 0.5, 3.0, 1e8, 1e300})
        invariant = invariant && (sign_classify(scale * v).array() == sign_classify(v).array()).all();
    o.require(invariant, "sign scale invariance");
}

int system_status(const std::string& cmd) {
    const int raw = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Json manifest_without_timestamp(const fs::path& dir) {
    Json j = Json::parse(read_text_file(dir / "manifest.json"));
    j.erase("timestamp");
    return j;
}

void c11(Outcome& o) {
    const std::string cli = IWKRR_CLI_PATH;
    const fs::path root = fs::temp_directory_path() / ("iwkrr_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path data = root / "train.csv";
    {
        Rng rng = make_stream(kSeed, 11);
        std::normal_distribution<double> g(0.0, 1.0);
        std::ostringstream csv;
        csv << "x1,y\n";
        for (int i = 0; i < 40; ++i) {
            const double x = g(rng);
            csv << format_double(x) << "," << format_double(std::sin(x) + 0.1 * g(rng)) << "\n";
        }
        write_text_file(data, csv.str());
    }
    const std::vector<std::string> commands{
        "fit --data " + data.string() + " --predict " + data.string() + " --lambda 0.1",
        "sim gaussian --k 2 --reps 3 --n-train 40 --n-test 100 --plotdata",
        "sim poly --reps 3 --n-train 40 --n-test 100 --degrees 1 2 3 --plotdata",
        "rates --reps 3 --n 50 100 200 400",
        "spectrum --n 60",
        "schedule --kind clipped --r 0.5 --s 0.5 --q 1 --n 100 1000",
        "diagnose-weights --samples 5000",
        "classify-sim --runs 2 --n 100 200",
        "check --instances 10",
    };
    int index = 0, identical = 0;
    for (const auto& cmd : commands) {
        const fs::path a = root / ("run" + std::to_string(index)), b = root / ("rerun" + std::to_string(index));
        ++index;
        if (system_status(cli + " " + cmd + " --seed 17 --out " + a.string()) != 0 ||
            system_status(cli + " rerun " + (a / "manifest.json").string() + " --out " + b.string()) != 0) {
            o.require(false, "run and rerun of '" + cmd + "'");
            continue;
        }
        const Json ma = manifest_without_timestamp(a), mb = manifest_without_timestamp(b);
        bool same = ma == mb && !ma.at("outputs").empty();
        for (const auto& f : ma.at("outputs")) {
            const std::string file = f.get<std::string>();
            same = same && fs::exists(b / file) && read_text_file(a / file) == read_text_file(b / file);
        }
        o.require(same, "byte-identical rerun of '" + cmd + "'");
        identical += same;
    }
    o.detail << identical << "/" << commands.size() << " subcommand reruns byte-identical";
    fs::remove_all(root);
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"C1 solver-oracle equivalence", c1},     {"C2 reduction identities", c2},
        {"C3 schedule formulas", c3},             {"C4 finite-rank rate slope", c4},
        {"C5 Gaussian-kernel simulation", c5},    {"C6 polynomial simulation", c6},
        {"C7 projection and bias", c7},           {"C8 spectral properties", c8},
        {"C9 clipped operator bounds", c9},       {"C10 classification excess risk", c10},
        {"C11 manifest rerun determinism", c11},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            run(o);
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failures += !o.passed;
        std::cout << (o.passed ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << " (" << seconds_since(t0)
                  << " s)" << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
