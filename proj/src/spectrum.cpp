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

#include "iwkrr/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iwkrr/error.hpp"
#include "iwkrr/random.hpp"
#include "iwkrr/weights.hpp"

namespace iwkrr {

namespace {

constexpr double kNegativeTolerance = 1e-10;

Eigen::MatrixXd weighted_moment(const Eigen::MatrixXd& design, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd wd = design.array().colwise() * w.array();
    Eigen::MatrixXd t = design.transpose() * wd / static_cast<double>(design.rows());
    return 0.5 * (t + t.transpose());
}

void check_psd(const Eigen::MatrixXd& t, const char* name) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-8)
        throw NumericalError(std::string(name) + " is not positive semidefinite");
}

double spectral_norm(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues()(0);
}

double trace_ratio(const Eigen::MatrixXd& t, double lambda) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (double e : es.eigenvalues()) s += std::max(e, 0.0) / (std::max(e, 0.0) + lambda);
    return s;
}

struct Norms {
    double norm1, norm2;
};

Norms norms(const Eigen::MatrixXd& t, const Eigen::MatrixXd& td, double lambda) {
    const Eigen::Index p = t.rows();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(p, p);
    // (T - T_D)(T + l)^{-1} = ((T + l)^{-1} (T - T_D))' since both factors are symmetric.
    const Eigen::MatrixXd left = (t + lambda * id).ldlt().solve(t - td).transpose();
    const Eigen::MatrixXd right = (td + lambda * id).ldlt().solve(t).transpose();
    return {spectral_norm(left), spectral_norm(right)};
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ValidationError("log grid needs 0 < lo <= hi and count >= 1");
    std::vector<double> g(static_cast<std::size_t>(count));
    if (count == 1) {
        g[0] = lo;
        return g;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

Eigen::VectorXd empirical_eigs(const KernelSpec& kernel, const Points& xs) {
    if (xs.rows() < 1) throw ValidationError("spectrum needs at least one point");
    const Eigen::MatrixXd k = gram(kernel, xs) / static_cast<double>(xs.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of the Gram matrix failed");
    Eigen::VectorXd ev = es.eigenvalues().reverse();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -kNegativeTolerance)
            throw NumericalError("Gram matrix has eigenvalue " + std::to_string(ev(i)) + " below tolerance");
        ev(i) = std::max(ev(i), 0.0);
    }
    return ev;
}

double effective_dimension(const Eigen::VectorXd& eigenvalues, double lambda) {
    if (!(lambda > 0.0)) throw InvalidRegularizerError("effective dimension needs lambda > 0");
    double s = 0.0;
    for (double mu : eigenvalues) {
        if (mu < 0.0) throw ValidationError("eigenvalues must be nonnegative");
        s += mu / (mu + lambda);
    }
    return s;
}

DecayFit estimate_decay(const Eigen::VectorXd& eigenvalues, Eigen::Index head_skip, double tail_floor) {
    if (head_skip < 0) throw ValidationError("head_skip must be nonnegative");
    std::vector<double> lx, ly;
    DecayFit fit;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        if (eigenvalues(i) <= tail_floor) {
            fit.finite_rank = true;
            continue;
        }
        if (i < head_skip) continue;
        lx.push_back(std::log(static_cast<double>(i + 1)));
        ly.push_back(std::log(eigenvalues(i)));
    }
    if (lx.size() < 5) throw InsufficientSpectrumError("fewer than 5 usable eigenvalues for the decay fit");
    const auto n = static_cast<double>(lx.size());
    const Eigen::Map<const Eigen::ArrayXd> x(lx.data(), static_cast<Eigen::Index>(lx.size()));
    const Eigen::Map<const Eigen::ArrayXd> y(ly.data(), static_cast<Eigen::Index>(ly.size()));
    const double mx = x.sum() / n, my = y.sum() / n;
    const double sxx = (x - mx).square().sum();
    const double sxy = ((x - mx) * (y - my)).sum();
    const double syy = (y - my).square().sum();
    fit.used = static_cast<Eigen::Index>(lx.size());
    fit.slope = sxy / sxx;
    fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    fit.s_hat = fit.slope < 0.0 ? std::clamp(-1.0 / fit.slope, 0.0, 1.0) : 1.0;
    return fit;
}

DecayFit estimate_decay(const Eigen::VectorXd& eigenvalues) {
    const double top = eigenvalues.size() > 0 ? eigenvalues(0) : 0.0;
    return estimate_decay(eigenvalues, 2, 1e-10 * top);
}

double estimate_Es(const Eigen::VectorXd& eigenvalues, double s, const std::vector<double>& lambda_grid) {
    if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("s must lie in [0, 1]");
    double best = 1.0;
    for (double lambda : lambda_grid) {
        if (!(lambda > 0.0 && lambda <= 1.0)) throw ValidationError("E_s grid must lie in (0, 1]");
        best = std::max(best, std::sqrt(effective_dimension(eigenvalues, lambda) * std::pow(lambda, s)));
    }
    return best;
}

SpectrumReport spectrum_report(const KernelSpec& kernel, const Points& xs, const SpectrumOptions& options) {
    SpectrumReport r;
    r.eigenvalues = empirical_eigs(kernel, xs);
    r.sample_size = xs.rows();
    for (double lambda : options.curve_grid) r.eff_dim_curve.emplace_back(lambda, effective_dimension(r.eigenvalues, lambda));
    r.es_grid = options.es_grid;
    try {
        r.fit = estimate_decay(r.eigenvalues, options.head_skip, options.tail_floor_rel * r.eigenvalues(0));
        r.s_hat = r.fit.s_hat;
    } catch (const InsufficientSpectrumError&) {
        r.decay_fit_failed = true;
        r.fit.finite_rank = true;
        r.s_hat = 1.0;
    }
    r.E_s_hat = estimate_Es(r.eigenvalues, r.s_hat, r.es_grid);
    return r;
}

OperatorSample operator_sample(const FeatureMap& features, const DensityModel& test, const DensityModel& train,
                               Eigen::Index mc_size, std::uint64_t seed) {
    if (mc_size < 10000) throw ValidationError("operator checks need at least 10000 samples");
    Rng rng = make_stream(seed, 0);
    const Points xs = train.sample(rng, mc_size);
    return {features.design(xs), WeightStrategy::true_iw(test, train).eval(xs)};
}

OperatorCheck clipped_operator_check(const OperatorSample& sample, double D, double lambda, int bootstrap,
                                     std::uint64_t seed) {
    if (!(lambda > 0.0)) throw InvalidRegularizerError("operator check needs lambda > 0");
    if (!(D > 0.0)) throw ValidationError("clipping threshold must be positive");
    OperatorCheck c;
    c.lambda = lambda;
    c.D = D;
    const Eigen::VectorXd wd = sample.weights.cwiseMin(D);
    c.T = weighted_moment(sample.design, sample.weights);
    c.T_D = weighted_moment(sample.design, wd);
    check_psd(c.T, "T");
    check_psd(c.T_D, "T_D");
    const Norms base = norms(c.T, c.T_D, lambda);
    c.norm1 = base.norm1;
    c.norm2 = base.norm2;
    c.tr_T = trace_ratio(c.T, lambda);
    c.tr_TD = trace_ratio(c.T_D, lambda);

    if (bootstrap > 1) {
        Rng rng = make_stream(seed, 1);
        const Eigen::Index n = sample.design.rows();
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        Eigen::ArrayXd n1(bootstrap), n2(bootstrap);
        Eigen::VectorXd counts(n);
        for (int b = 0; b < bootstrap; ++b) {
            counts.setZero();
            for (Eigen::Index i = 0; i < n; ++i) counts(pick(rng)) += 1.0;
            const Norms nb = norms(weighted_moment(sample.design, counts.cwiseProduct(sample.weights)),
                                   weighted_moment(sample.design, counts.cwiseProduct(wd)), lambda);
            n1(b) = nb.norm1;
            n2(b) = nb.norm2;
        }
        const auto sd = [&](const Eigen::ArrayXd& v) {
            return std::sqrt((v - v.mean()).square().sum() / static_cast<double>(bootstrap - 1));
        };
        c.norm1_se = sd(n1);
        c.norm2_se = sd(n2);
    }
    return c;
}

OperatorCheck clipped_operator_check(const FeatureMap& features, const DensityModel& test, const DensityModel& train,
                                     double D, double lambda, Eigen::Index mc_size, std::uint64_t seed,
                                     int bootstrap) {
    return clipped_operator_check(operator_sample(features, test, train, mc_size, seed), D, lambda, bootstrap,
                                  mix_seed(seed, 1));
}

}  // namespace iwkrr
