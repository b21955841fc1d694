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

#ifndef IWKRR_SCHEDULE_HPP
#define IWKRR_SCHEDULE_HPP

#include <optional>

namespace iwkrr {

/// Theory constants. Unprimed fields describe the importance-weighted
/// problem; primed fields (suffix _p, plus V, gamma, G) describe a generic
/// weighting function v = d rho' / d rho_tr.
struct RateParams {
    double r = 0.5;          // source condition, [1/2, 1]
    double s = 1.0;          // capacity, [0, 1]
    double q = 1.0;          // weight moment degree, [0, 1]
    double W = 1.0;
    double sigma = 1.0;
    double E_s = 1.0;        // >= 1
    double delta = 0.1;      // confidence, (0, 1)
    double M = 1.0;          // output bound
    double R = 1.0;          // source-condition norm
    double fH_norm = 1.0;    // ||f_H||_H
    double f_rho_te = 1.0;   // ||f_rho||_{rho_te}
    double fH_te = 1.0;      // ||f_H||_{rho_te}

    double r_p = 0.5;
    double s_p = 1.0;
    double q_p = 1.0;
    double V = 1.0;
    double gamma = 1.0;
    double E_p = 1.0;
    double R_p = 1.0;
    double fHp_norm = 1.0;   // ||f'_H||_H
    double G = 1.0;

    /// Throws ValidationError when a constant leaves its range.
    void validate() const;
    /// A = s(1 - q) + q.
    [[nodiscard]] double A() const noexcept { return s * (1.0 - q) + q; }
    [[nodiscard]] double A_p() const noexcept { return s_p * (1.0 - q_p) + q_p; }
};

/// Sobolev-type RKHS of smoothness eta on d-dimensional inputs: s = d/(2 eta), q = 0, r = 1/2.
RateParams sobolev_preset(double eta, int d);
/// Rank-N kernel: s = 0, q = 0, r = 1/2, E_s = sqrt(N).
RateParams finite_rank_preset(int rank);
/// Primed constants copied from the unprimed ones with G = 1 (rho' = rho_te).
RateParams primed_as_test(RateParams params);
/// Uniform weighting: q' = 0, V = gamma = 1; r', s', E' copied from the unprimed values.
RateParams uniform_weight_preset(RateParams params);

struct ClippingSchedule {
    double tau = 0.0;
    double c1 = 1.0;
    double c2 = 0.0;
    int m = 10;
    double epsilon = 0.01;
    double D = 0.0;
    bool c2_constraint_ok = true;
    double side_lhs = 0.0;
    double side_rhs = 0.0;
    bool side_condition_ok = false;
};

struct Schedule {
    double beta = 0.0;
    double c = 0.0;
    long long n = 1;
    double lambda = 0.0;
    bool lambda_feasible = false;  // lambda <= 1
    std::optional<ClippingSchedule> clipping;

    [[nodiscard]] double lambda_at(double n_value) const;
    [[nodiscard]] double D_at(double n_value) const;
    /// lambda <= 1 and, for clipped schedules, the side condition.
    [[nodiscard]] bool feasible() const;
};

/// r / (2r + s(1 - q) + q).
double rate_exponent(const RateParams& params);
/// beta r for the clipped schedule: r (m - 1) / ((s + 2r)(m - 1) + 4qr + epsilon).
double clipped_rate_exponent(const RateParams& params, int m, double epsilon);
/// Classification excess-risk exponent 2 r beta / (2 - alpha).
double classification_rate_exponent(const RateParams& params, double alpha);

/// (64 (W + sigma^2) E_s^{2(1-q)} log^2(6/delta))^{1/(1+A)}.
double iw_c_lower_bound(const RateParams& params);
double generic_c_lower_bound(const RateParams& params);
/// (2^{2q-1} E_s^{2q} m! W^{m-2} sigma^2)^{1/(m-1)} c1^{-(1+s)q/(m-1)}.
double clipped_c2_lower_bound(const RateParams& params, int m, double c1);

/// Importance-weighted schedule lambda = c n^{-1/(2r + A)}; c defaults to its lower bound.
Schedule iw_schedule(const RateParams& params, long long n, std::optional<double> c = std::nullopt);
/// Primed-constant schedule for a generic weighting function.
Schedule generic_schedule(const RateParams& params, long long n, std::optional<double> c = std::nullopt);
/// Clipped-weight schedule lambda = c1 n^{-beta}, D = c2 n^{tau}. Requires q > 0.
Schedule clipped_schedule(const RateParams& params, int m, double epsilon, long long n, double c1 = 1.0,
                          std::optional<double> c2 = std::nullopt);

enum class BoundKind { thm1, thm2, thm4 };

struct BoundOptions {
    std::optional<double> c;   // thm1, thm2
    double c1 = 1.0;           // thm4
    std::optional<double> c2;  // thm4
    int m = 10;
    double epsilon = 0.01;
    double bias = 0.0;         // ||f'_H - f_H||_{rho_te}, thm2
};

struct ClippedConstants {
    double A1 = 0.0, A2 = 0.0, A3 = 0.0;
};

ClippedConstants clipped_constants(const RateParams& params, int m);

/// Right-hand side of the selected high-probability bound at sample size n.
double bound_value(const RateParams& params, long long n, BoundKind which, const BoundOptions& options = {});

}  // namespace iwkrr

#endif
