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

#include "iwkrr/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "iwkrr/error.hpp"

namespace iwkrr {

DensityModel::DensityModel(DensityFamily family, Eigen::VectorXd mean, Eigen::VectorXd var)
    : family_(family), mean_(std::move(mean)), var_(std::move(var)) {}

DensityModel DensityModel::gaussian1d(double mean, double variance) {
    if (!std::isfinite(mean)) throw ValidationError("gaussian mean must be finite");
    if (!(variance > 0.0) || !std::isfinite(variance)) throw ValidationError("gaussian variance must be positive");
    return {DensityFamily::gaussian1d, Eigen::VectorXd::Constant(1, mean), Eigen::VectorXd::Constant(1, variance)};
}

DensityModel DensityModel::gaussian_nd(Eigen::VectorXd mean, Eigen::VectorXd variances) {
    if (mean.size() < 1 || mean.size() != variances.size())
        throw ValidationError("gaussian_nd needs matching nonempty mean and variance vectors");
    if (!mean.allFinite() || !variances.allFinite() || (variances.array() <= 0.0).any())
        throw ValidationError("gaussian_nd variances must be positive and finite");
    return {DensityFamily::gaussian_nd, std::move(mean), std::move(variances)};
}

DensityModel DensityModel::uniform_interval(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) throw ValidationError("uniform interval needs lo < hi");
    return {DensityFamily::uniform_interval, Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi)};
}

double DensityModel::lo() const {
    if (family_ != DensityFamily::uniform_interval) throw ValidationError("lo() is defined for intervals only");
    return mean_(0);
}

double DensityModel::hi() const {
    if (family_ != DensityFamily::uniform_interval) throw ValidationError("hi() is defined for intervals only");
    return var_(0);
}

double DensityModel::log_pdf(std::span<const double> x) const {
    if (static_cast<Eigen::Index>(x.size()) != dim()) throw ValidationError("density: wrong input dimension");
    if (family_ == DensityFamily::uniform_interval) {
        if (x[0] < mean_(0) || x[0] > var_(0)) return -std::numeric_limits<double>::infinity();
        return -std::log(var_(0) - mean_(0));
    }
    double lp = 0.0;
    for (Eigen::Index j = 0; j < dim(); ++j) {
        const double d = x[static_cast<std::size_t>(j)] - mean_(j);
        lp += -0.5 * std::log(2.0 * std::numbers::pi * var_(j)) - 0.5 * d * d / var_(j);
    }
    return lp;
}

double DensityModel::pdf(std::span<const double> x) const { return std::exp(log_pdf(x)); }

double DensityModel::cdf(double x) const {
    if (dim() != 1) throw ValidationError("cdf is defined for 1-d densities only");
    if (family_ == DensityFamily::uniform_interval) return std::clamp((x - mean_(0)) / (var_(0) - mean_(0)), 0.0, 1.0);
    return 0.5 * std::erfc(-(x - mean_(0)) / std::sqrt(2.0 * var_(0)));
}

double DensityModel::second_moment() const {
    if (dim() != 1) throw ValidationError("second_moment is defined for 1-d densities only");
    if (family_ == DensityFamily::uniform_interval) {
        const double a = mean_(0), b = var_(0);
        return (a * a + a * b + b * b) / 3.0;
    }
    return var_(0) + mean_(0) * mean_(0);
}

Points DensityModel::sample(Rng& rng, Eigen::Index n) const {
    Points xs(n, dim());
    if (family_ == DensityFamily::uniform_interval) {
        std::uniform_real_distribution<double> u(mean_(0), var_(0));
        for (Eigen::Index i = 0; i < n; ++i) xs(i, 0) = u(rng);
        return xs;
    }
    std::normal_distribution<double> z(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < dim(); ++j) xs(i, j) = mean_(j) + std::sqrt(var_(j)) * z(rng);
    return xs;
}

std::string DensityModel::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (family_) {
        case DensityFamily::gaussian1d: os << "N(" << mean_(0) << "," << var_(0) << ")"; break;
        case DensityFamily::gaussian_nd: os << "N_" << dim() << "d"; break;
        case DensityFamily::uniform_interval: os << "U[" << mean_(0) << "," << var_(0) << "]"; break;
    }
    return os.str();
}

double mixture_quantile_radius(const std::vector<DensityModel>& models, double p, std::uint64_t seed,
                               Eigen::Index mc_size) {
    if (models.empty()) throw ValidationError("quantile radius needs at least one density");
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile level must lie in (0, 1)");
    const Eigen::Index d = models.front().dim();
    for (const auto& m : models)
        if (m.dim() != d) throw ValidationError("mixture components differ in dimension");

    if (d == 1) {
        const auto mass = [&](double r) {
            double s = 0.0;
            for (const auto& m : models) s += m.cdf(r) - m.cdf(-r);
            return s / static_cast<double>(models.size());
        };
        double hi = 1.0;
        while (mass(hi) < p) hi *= 2.0;
        double lo = 0.0;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (mass(mid) < p ? lo : hi) = mid;
        }
        return hi;
    }

    Rng rng = make_stream(seed, 0);
    std::vector<double> radii;
    radii.reserve(static_cast<std::size_t>(mc_size) * models.size());
    for (const auto& m : models) {
        const Points xs = m.sample(rng, mc_size);
        for (Eigen::Index i = 0; i < xs.rows(); ++i) radii.push_back(xs.row(i).norm());
    }
    std::sort(radii.begin(), radii.end());
    const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(radii.size()))) - 1;
    return radii[std::min(idx, radii.size() - 1)];
}

}  // namespace iwkrr
