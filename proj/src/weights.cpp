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

#include "iwkrr/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iwkrr/error.hpp"

namespace iwkrr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinTrainPdf = 1e-300;
const double kLogMax = std::log(std::numeric_limits<double>::max());

void require_same_dim(const DensityModel& a, const DensityModel& b) {
    if (a.dim() != b.dim()) throw ValidationError("weight densities differ in dimension");
}

// log w over a sample from the test density. Throws on train-support violations.
Eigen::VectorXd log_weights(const DensityModel& test, const DensityModel& train, const Points& xs) {
    Eigen::VectorXd lw(xs.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
        const auto x = row_span(xs, i);
        const double ltr = train.log_pdf(x);
        if (!(std::exp(ltr) >= kMinTrainPdf))
            throw SupportViolationError("training density vanishes at a test sample");
        lw(i) = test.log_pdf(x) - ltr;
    }
    return lw;
}

// log mean exp(v) and the standard error of mean exp(v) relative to that mean.
std::pair<double, double> log_mean_exp(const Eigen::VectorXd& v) {
    const double c = v.maxCoeff();
    if (!std::isfinite(c)) return {c, 0.0};
    const Eigen::ArrayXd u = (v.array() - c).exp();
    const double mean = u.mean();
    const auto n = static_cast<double>(v.size());
    const double var = n > 1 ? (u - mean).square().sum() / (n - 1.0) : 0.0;
    return {c + std::log(mean), std::sqrt(var / n) / mean};
}

Estimate renyi_from_log_weights(const Eigen::VectorXd& lw, double alpha) {
    if (!(alpha > 0.0)) throw ValidationError("renyi order must be positive");
    Estimate e;
    const Eigen::VectorXd scaled = alpha * lw;
    if (scaled.maxCoeff() > kLogMax) {
        e.value = kInf;
        e.std_error = kInf;
        e.unstable = true;
        return e;
    }
    const auto [log_mean, rel_se] = log_mean_exp(scaled);
    e.value = log_mean / alpha;
    e.std_error = rel_se / alpha;
    return e;
}

Points test_sample(const DensityModel& test, Eigen::Index n, std::uint64_t seed, std::uint64_t stream) {
    Rng rng = make_stream(seed, stream);
    return test.sample(rng, n);
}

double log_gaussian_ratio_sup(double mean_te, double var_te, double mean_tr, double var_tr) {
    if (var_te > var_tr) return kInf;
    if (var_te == var_tr) return mean_te == mean_tr ? 0.0 : kInf;
    const double x = (mean_te / var_te - mean_tr / var_tr) / (1.0 / var_te - 1.0 / var_tr);
    const double a = x - mean_te, b = x - mean_tr;
    return 0.5 * std::log(var_tr / var_te) - a * a / (2.0 * var_te) + b * b / (2.0 * var_tr);
}

}  // namespace

WeightStrategy WeightStrategy::uniform() { return WeightStrategy{}; }

WeightStrategy WeightStrategy::constant(double value) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw ValidationError("constant weight must be finite and nonnegative");
    WeightStrategy s;
    s.kind_ = WeightKind::constant;
    s.value_ = value;
    return s;
}

WeightStrategy WeightStrategy::true_iw(DensityModel test, DensityModel train) {
    require_same_dim(test, train);
    WeightStrategy s;
    s.kind_ = WeightKind::true_iw;
    s.target_ = std::move(test);
    s.train_ = std::move(train);
    return s;
}

WeightStrategy WeightStrategy::custom(DensityModel target, DensityModel train) {
    WeightStrategy s = true_iw(std::move(target), std::move(train));
    s.kind_ = WeightKind::custom;
    return s;
}

WeightStrategy WeightStrategy::clipped(WeightStrategy inner, double threshold) {
    if (!(threshold > 0.0)) throw ValidationError("clipping threshold must be positive");
    WeightStrategy s;
    s.kind_ = WeightKind::clipped;
    s.value_ = threshold;
    s.inner_ = std::make_shared<const WeightStrategy>(std::move(inner));
    return s;
}

double WeightStrategy::eval(std::span<const double> x) const {
    switch (kind_) {
        case WeightKind::uniform:
            return 1.0;
        case WeightKind::constant:
            return value_;
        case WeightKind::true_iw:
        case WeightKind::custom: {
            const double ptr = train_->pdf(x);
            if (!(ptr >= kMinTrainPdf)) throw SupportViolationError("training density vanishes at an evaluated point");
            return target_->pdf(x) / ptr;
        }
        case WeightKind::clipped:
            return std::min(inner_->eval(x), value_);
    }
    return 1.0;
}

Eigen::VectorXd WeightStrategy::eval(const Points& xs) const {
    Eigen::VectorXd w(xs.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) w(i) = eval(row_span(xs, i));
    return w;
}

const DensityModel& WeightStrategy::target() const {
    if (!target_) throw ValidationError("weight strategy has no target density");
    return *target_;
}

const DensityModel& WeightStrategy::train() const {
    if (!train_) throw ValidationError("weight strategy has no training density");
    return *train_;
}

const WeightStrategy& WeightStrategy::inner() const {
    if (!inner_) throw ValidationError("weight strategy is not clipped");
    return *inner_;
}

std::string WeightStrategy::label() const {
    switch (kind_) {
        case WeightKind::uniform: return "uniform";
        case WeightKind::constant: return "constant";
        case WeightKind::true_iw: return "iw";
        case WeightKind::custom: return "custom";
        case WeightKind::clipped: return "clipped";
    }
    return "unknown";
}

double weight_eval(const WeightStrategy& strategy, std::span<const double> x) { return strategy.eval(x); }

std::optional<double> weight_sup(const DensityModel& test, const DensityModel& train) {
    require_same_dim(test, train);
    const auto gaussian = [](const DensityModel& d) { return d.family() != DensityFamily::uniform_interval; };
    if (gaussian(test) && gaussian(train)) {
        double log_sup = 0.0;
        for (Eigen::Index j = 0; j < test.dim(); ++j)
            log_sup += log_gaussian_ratio_sup(test.mean()(j), test.variances()(j), train.mean()(j), train.variances()(j));
        return log_sup > kLogMax ? kInf : std::exp(log_sup);
    }
    if (!gaussian(test) && !gaussian(train)) {
        if (test.lo() < train.lo() || test.hi() > train.hi()) return kInf;
        return (train.hi() - train.lo()) / (test.hi() - test.lo());
    }
    if (!gaussian(test) && gaussian(train)) {
        const double mu = train.mean()(0);
        const double far = std::abs(test.lo() - mu) > std::abs(test.hi() - mu) ? test.lo() : test.hi();
        const double x[1] = {far};
        return 1.0 / ((test.hi() - test.lo()) * train.pdf(x));
    }
    return kInf;
}

double gaussian_renyi_divergence(double mean_p, double var_p, double mean_q, double var_q, double a) {
    if (!(a > 0.0) || a == 1.0) throw ValidationError("closed-form renyi order must be positive and != 1");
    const double var_a = a * var_q + (1.0 - a) * var_p;
    if (!(var_a > 0.0)) return kInf;
    const double dm = mean_p - mean_q;
    return 0.5 * std::log(var_q / var_p) + std::log(var_q / var_a) / (2.0 * (a - 1.0)) + a * dm * dm / (2.0 * var_a);
}

Estimate renyi_divergence(const DensityModel& test, const DensityModel& train, double alpha,
                          Eigen::Index sample_size, std::uint64_t seed) {
    return renyi_curve(test, train, {alpha}, sample_size, seed).front();
}

std::vector<Estimate> renyi_curve(const DensityModel& test, const DensityModel& train,
                                  const std::vector<double>& alphas, Eigen::Index sample_size, std::uint64_t seed) {
    require_same_dim(test, train);
    if (sample_size < 1000) throw ValidationError("renyi estimate needs at least 1000 samples");
    const Eigen::VectorXd lw = log_weights(test, train, test_sample(test, sample_size, seed, 0));
    std::vector<Estimate> out;
    out.reserve(alphas.size());
    for (double a : alphas) out.push_back(renyi_from_log_weights(lw, a));
    return out;
}

MomentResult moment_check(const DensityModel& test, const DensityModel& train, int m, double q, double W,
                          double sigma, Eigen::Index sample_size, std::uint64_t seed) {
    require_same_dim(test, train);
    if (m < 2) throw ValidationError("moment order m must be at least 2");
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("moment degree q must lie in [0, 1]");
    if (!(W > 0.0) || !(sigma > 0.0)) throw ValidationError("W and sigma must be positive");
    if (sample_size < 1) throw ValidationError("sample size must be positive");

    MomentResult r;
    r.m = m;
    r.q = q;
    r.rhs = 0.5 * std::tgamma(m + 1.0) * std::pow(W, m - 2) * sigma * sigma;
    const Eigen::VectorXd lw = log_weights(test, train, test_sample(test, sample_size, seed, 0));
    if (q == 0.0) {
        r.underestimate = true;
        const double log_lhs = (m - 1) * lw.maxCoeff();
        r.unstable = log_lhs > kLogMax;
        r.lhs = r.unstable ? kInf : std::exp(log_lhs);
    } else {
        const Eigen::VectorXd scaled = ((m - 1) / q) * lw;
        if (scaled.maxCoeff() > kLogMax) {
            r.unstable = true;
            r.lhs = kInf;
            r.std_error = kInf;
        } else {
            const auto [log_mean, rel_se] = log_mean_exp(scaled);
            const double log_lhs = q * log_mean;
            r.unstable = log_lhs > kLogMax;
            r.lhs = r.unstable ? kInf : std::exp(log_lhs);
            r.std_error = r.lhs * q * rel_se;
        }
    }
    r.satisfied = r.lhs <= r.rhs;
    return r;
}

std::vector<TailPoint> tail_check(const DensityModel& test, const DensityModel& train, double q, double W,
                                  double sigma, const std::vector<double>& t_grid, Eigen::Index sample_size,
                                  std::uint64_t seed) {
    require_same_dim(test, train);
    if (!(q > 0.0 && q <= 1.0)) throw ValidationError("tail degree q must lie in (0, 1]");
    if (!(W > 0.0) || !(sigma > 0.0)) throw ValidationError("W and sigma must be positive");
    if (sample_size < 1) throw ValidationError("sample size must be positive");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > 0.0)) throw ValidationError("tail grid must be positive");
        if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw ValidationError("tail grid must be increasing");
    }
    const Eigen::VectorXd lw = log_weights(test, train, test_sample(test, sample_size, seed, 0));
    const auto n = static_cast<double>(sample_size);
    std::vector<TailPoint> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) {
        const double log_t = std::log(t);
        const auto hits = (lw.array() >= log_t).count();
        const double p = static_cast<double>(hits) / n;
        TailPoint tp;
        tp.t = t;
        tp.empirical = 2.0 * p;
        tp.std_error = 2.0 * std::sqrt(p * (1.0 - p) / n);
        tp.bound = sigma * sigma * std::exp(-std::pow(t, 1.0 / q) / W);
        tp.satisfied = tp.empirical <= tp.bound;
        out.push_back(tp);
    }
    return out;
}

WeightDiagnostics diagnose_weights(const DensityModel& test, const DensityModel& train,
                                   const DiagnosticsOptions& options, std::uint64_t seed) {
    WeightDiagnostics d;
    const Eigen::VectorXd lw = log_weights(test, train, test_sample(test, options.sample_size, seed, 0));
    d.sup_estimate = std::exp(lw.maxCoeff());
    d.sup_analytic = weight_sup(test, train);
    d.alphas = options.alphas;
    d.renyi_curve = renyi_curve(test, train, options.alphas, options.sample_size, mix_seed(seed, 1));
    for (int m : options.moments)
        d.moment_table.push_back(moment_check(test, train, m, options.q, options.W, options.sigma,
                                              options.sample_size, mix_seed(seed, 2)));
    if (options.q > 0.0)
        d.tail_curve = tail_check(test, train, options.q, options.W, options.sigma, options.t_grid,
                                  options.sample_size, mix_seed(seed, 3));
    return d;
}

}  // namespace iwkrr
