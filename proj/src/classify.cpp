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

#include "iwkrr/classify.hpp"

#include <algorithm>
#include <cmath>

#include "iwkrr/error.hpp"

namespace iwkrr {

void LabeledSet::validate() const {
    if (xs.rows() != labels.size()) throw ValidationError("inputs and labels differ in length");
    for (Eigen::Index i = 0; i < labels.size(); ++i)
        if (labels(i) != 1 && labels(i) != -1) throw ValidationError("labels must be -1 or +1");
}

Eigen::VectorXi sign_classify(const Eigen::VectorXd& values) {
    Eigen::VectorXi out(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) out(i) = values(i) >= 0.0 ? 1 : -1;
    return out;
}

Eigen::VectorXi sign_classify(const FitModel& model, const Points& xs) { return sign_classify(predict(model, xs)); }

double empirical_risk(const Eigen::VectorXi& predicted, const LabeledSet& data) {
    data.validate();
    if (data.labels.size() == 0) throw ValidationError("risk of an empty labeled set");
    if (predicted.size() != data.labels.size()) throw ValidationError("prediction and label counts differ");
    return static_cast<double>((predicted.array() != data.labels.array()).count()) /
           static_cast<double>(data.labels.size());
}

Estimate bayes_risk_estimate(const ConditionalProb& p_plus, const Points& test_sample) {
    if (test_sample.rows() == 0) throw ValidationError("bayes risk needs a nonempty sample");
    Eigen::ArrayXd v(test_sample.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double p = p_plus(row_span(test_sample, i));
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("conditional probability outside [0, 1]");
        v(i) = std::min(p, 1.0 - p);
    }
    Estimate e;
    const auto n = static_cast<double>(v.size());
    e.value = v.mean();
    e.std_error = n > 1 ? std::sqrt((v - e.value).square().sum() / (n - 1.0) / n) : 0.0;
    return e;
}

double excess_risk_bound(double l2_dist, double alpha, double c_alpha) {
    if (!(l2_dist >= 0.0)) throw ValidationError("distance must be nonnegative");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in [0, 1)");
    if (!(c_alpha > 0.0)) throw ValidationError("c_alpha must be positive");
    return 4.0 * c_alpha * std::pow(l2_dist, 2.0 / (2.0 - alpha));
}

MarginReport margin_report(const std::function<double(std::span<const double>)>& f_rho, const DensityModel& test,
                           const std::vector<double>& delta_grid, Eigen::Index mc_size, std::uint64_t seed) {
    if (mc_size < 1) throw ValidationError("margin report needs samples");
    for (double d : delta_grid)
        if (!(d > 0.0 && d <= 1.0)) throw ValidationError("margin grid must lie in (0, 1]");
    Rng rng = make_stream(seed, 0);
    const Points xs = test.sample(rng, mc_size);
    Eigen::ArrayXd abs_f(mc_size);
    for (Eigen::Index i = 0; i < mc_size; ++i) abs_f(i) = std::abs(f_rho(row_span(xs, i)));

    MarginReport r;
    r.deltas = delta_grid;
    std::vector<double> lx, ly;
    for (double d : delta_grid) {
        const double mass = static_cast<double>((abs_f <= d).count()) / static_cast<double>(mc_size);
        r.masses.push_back(mass);
        if (mass > 0.0) {
            lx.push_back(std::log(d));
            ly.push_back(std::log(mass));
        }
    }
    if (lx.empty()) {
        r.degenerate = true;
        return r;
    }
    bool fitted = false;
    if (lx.size() >= 2) {
        const Eigen::Map<const Eigen::ArrayXd> x(lx.data(), static_cast<Eigen::Index>(lx.size()));
        const Eigen::Map<const Eigen::ArrayXd> y(ly.data(), static_cast<Eigen::Index>(ly.size()));
        const double mx = x.mean(), my = y.mean();
        const double sxx = (x - mx).square().sum();
        if (sxx > 0.0) {
            const double sxy = ((x - mx) * (y - my)).sum();
            const double syy = (y - my).square().sum();
            r.l = std::max(0.0, sxy / sxx);
            r.B_l = std::exp(my - r.l * mx);
            r.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
            fitted = true;
        }
    }
    if (!fitted) {
        r.l = 0.0;
        r.B_l = *std::max_element(r.masses.begin(), r.masses.end());
    }
    r.alpha = r.l / (r.l + 1.0);
    r.c_alpha = r.B_l + 1.0;
    return r;
}

double LogisticLabelModel::p_plus(std::span<const double> x) const { return 1.0 / (1.0 + std::exp(-a * (x[0] - b))); }

double LogisticLabelModel::f_rho(std::span<const double> x) const { return std::tanh(a * (x[0] - b) / 2.0); }

LabeledSet LogisticLabelModel::sample(const DensityModel& inputs, Eigen::Index n, Rng& rng) const {
    LabeledSet s;
    s.xs = inputs.sample(rng, n);
    s.labels.resize(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) s.labels(i) = u(rng) < p_plus(row_span(s.xs, i)) ? 1 : -1;
    return s;
}

}  // namespace iwkrr
