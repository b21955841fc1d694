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

#ifndef IWKRR_KERNEL_HPP
#define IWKRR_KERNEL_HPP

#include <span>
#include <string>

#include <Eigen/Dense>

namespace iwkrr {

/// Input points, one per row. Row-major so that a row is a contiguous span.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const Points& xs, Eigen::Index i) {
    return {xs.data() + i * xs.cols(), static_cast<std::size_t>(xs.cols())};
}

enum class KernelFamily { gaussian, polynomial, linear, matern };

/// A positive-semidefinite kernel. Only the fields relevant to `family` are
/// read; `scale` multiplies every evaluation and carries the bound kappa.
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double lengthscale = 1.0;  // gaussian, matern
    int degree = 1;            // polynomial
    double offset = 0.0;       // polynomial
    double smoothness = 0.5;   // matern: 0.5, 1.5 or 2.5
    double scale = 1.0;

    static KernelSpec gaussian(double lengthscale);
    static KernelSpec polynomial(int degree, double offset);
    static KernelSpec linear();
    static KernelSpec matern(double smoothness, double lengthscale);

    /// Throws ValidationError on out-of-range parameters.
    void validate() const;

    /// True for kernels with an explicit finite feature map.
    [[nodiscard]] bool finite_rank() const noexcept {
        return family == KernelFamily::polynomial || family == KernelFamily::linear;
    }

    bool operator==(const KernelSpec&) const = default;
};

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// scale * k_family(x, y). Exactly symmetric in its arguments.
double eval_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// entries(i, j) = eval_kernel(spec, xs.row(i), ys.row(j)).
Eigen::MatrixXd gram(const KernelSpec& spec, const Points& xs, const Points& ys);

/// Square Gram matrix; the lower triangle is copied from the upper one so the
/// result is exactly symmetric.
Eigen::MatrixXd gram(const KernelSpec& spec, const Points& xs);

/// sup of k_family(x, x) over the ball ||x|| <= domain_bound, ignoring scale.
double kernel_diagonal_sup(const KernelSpec& spec, double domain_bound);

/// Copy of spec with scale = 1 / sup_{||x|| <= domain_bound} k(x, x).
/// Throws DegenerateDomainError when the supremum is zero.
KernelSpec normalize(const KernelSpec& spec, double domain_bound);

}  // namespace iwkrr

#endif
