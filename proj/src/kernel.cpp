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

#include "iwkrr/kernel.hpp"

#include <cmath>

#include "iwkrr/error.hpp"

namespace iwkrr {

namespace {

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

// Accumulated in index order, so the result is independent of argument order.
double squared_distance(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

double matern(double nu, double r, double ell) {
    if (nu == 0.5) return std::exp(-r / ell);
    if (nu == 1.5) {
        const double a = std::sqrt(3.0) * r / ell;
        return (1.0 + a) * std::exp(-a);
    }
    const double a = std::sqrt(5.0) * r / ell;
    return (1.0 + a + a * a / 3.0) * std::exp(-a);
}

}  // namespace

KernelSpec KernelSpec::gaussian(double lengthscale) {
    KernelSpec s;
    s.family = KernelFamily::gaussian;
    s.lengthscale = lengthscale;
    s.validate();
    return s;
}

KernelSpec KernelSpec::polynomial(int degree, double offset) {
    KernelSpec s;
    s.family = KernelFamily::polynomial;
    s.degree = degree;
    s.offset = offset;
    s.validate();
    return s;
}

KernelSpec KernelSpec::linear() {
    KernelSpec s;
    s.family = KernelFamily::linear;
    return s;
}

KernelSpec KernelSpec::matern(double smoothness, double lengthscale) {
    KernelSpec s;
    s.family = KernelFamily::matern;
    s.smoothness = smoothness;
    s.lengthscale = lengthscale;
    s.validate();
    return s;
}

void KernelSpec::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ValidationError("kernel scale must be positive and finite");
    switch (family) {
        case KernelFamily::gaussian:
            if (!(lengthscale > 0.0)) throw ValidationError("gaussian lengthscale must be positive");
            break;
        case KernelFamily::polynomial:
            if (degree < 1) throw ValidationError("polynomial degree must be at least 1");
            if (!(offset >= 0.0)) throw ValidationError("polynomial offset must be nonnegative");
            break;
        case KernelFamily::linear:
            break;
        case KernelFamily::matern:
            if (!(lengthscale > 0.0)) throw ValidationError("matern lengthscale must be positive");
            if (smoothness != 0.5 && smoothness != 1.5 && smoothness != 2.5)
                throw ValidationError("matern smoothness must be one of 0.5, 1.5, 2.5");
            break;
    }
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::gaussian: return "gaussian";
        case KernelFamily::polynomial: return "polynomial";
        case KernelFamily::linear: return "linear";
        case KernelFamily::matern: return "matern";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "gaussian") return KernelFamily::gaussian;
    if (name == "polynomial") return KernelFamily::polynomial;
    if (name == "linear") return KernelFamily::linear;
    if (name == "matern") return KernelFamily::matern;
    throw ValidationError("unknown kernel family '" + name + "'");
}

double eval_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("kernel arguments differ in dimension");
    double k = 0.0;
    switch (spec.family) {
        case KernelFamily::gaussian:
            k = std::exp(-squared_distance(x, y) / (spec.lengthscale * spec.lengthscale));
            break;
        case KernelFamily::polynomial:
            k = std::pow(dot(x, y) + spec.offset, spec.degree);
            break;
        case KernelFamily::linear:
            k = dot(x, y);
            break;
        case KernelFamily::matern:
            k = matern(spec.smoothness, std::sqrt(squared_distance(x, y)), spec.lengthscale);
            break;
    }
    return spec.scale * k;
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Points& xs, const Points& ys) {
    if (xs.cols() != ys.cols()) throw ValidationError("gram: point sets differ in dimension");
    Eigen::MatrixXd k(xs.rows(), ys.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
        for (Eigen::Index j = 0; j < ys.rows(); ++j) k(i, j) = eval_kernel(spec, row_span(xs, i), row_span(ys, j));
    return k;
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Points& xs) {
    const Eigen::Index n = xs.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            k(i, j) = eval_kernel(spec, row_span(xs, i), row_span(xs, j));
            k(j, i) = k(i, j);
        }
    }
    return k;
}

double kernel_diagonal_sup(const KernelSpec& spec, double domain_bound) {
    if (!(domain_bound > 0.0)) throw DegenerateDomainError("domain bound must be positive");
    switch (spec.family) {
        case KernelFamily::gaussian:
        case KernelFamily::matern:
            return 1.0;
        case KernelFamily::polynomial:
            return std::pow(domain_bound * domain_bound + spec.offset, spec.degree);
        case KernelFamily::linear:
            return domain_bound * domain_bound;
    }
    return 1.0;
}

KernelSpec normalize(const KernelSpec& spec, double domain_bound) {
    spec.validate();
    const double sup = kernel_diagonal_sup(spec, domain_bound);
    if (!(sup > 0.0) || !std::isfinite(sup))
        throw DegenerateDomainError("kernel diagonal supremum is degenerate on the domain");
    KernelSpec out = spec;
    out.scale = 1.0 / sup;
    return out;
}

}  // namespace iwkrr
