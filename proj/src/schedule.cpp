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

#include "iwkrr/schedule.hpp"

#include <cmath>
#include <limits>

#include "iwkrr/error.hpp"

namespace iwkrr {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ValidationError(what);
}

double log6(double delta) { return std::log(6.0 / delta); }

double factorial(int m) { return std::tgamma(m + 1.0); }

}  // namespace

void RateParams::validate() const {
    require(r >= 0.5 && r <= 1.0, "r must lie in [1/2, 1]");
    require(s >= 0.0 && s <= 1.0, "s must lie in [0, 1]");
    require(q >= 0.0 && q <= 1.0, "q must lie in [0, 1]");
    require(W > 0.0 && sigma > 0.0, "W and sigma must be positive");
    require(E_s >= 1.0, "E_s must be at least 1");
    require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    require(M > 0.0 && R > 0.0, "M and R must be positive");
    require(fH_norm >= 0.0 && f_rho_te >= 0.0 && fH_te >= 0.0, "norms must be nonnegative");
    require(r_p >= 0.5 && r_p <= 1.0, "r' must lie in [1/2, 1]");
    require(s_p >= 0.0 && s_p <= 1.0, "s' must lie in [0, 1]");
    require(q_p >= 0.0 && q_p <= 1.0, "q' must lie in [0, 1]");
    require(V > 0.0 && gamma > 0.0, "V and gamma must be positive");
    require(E_p >= 1.0, "E' must be at least 1");
    require(R_p > 0.0 && fHp_norm >= 0.0, "R' must be positive");
    require(G >= 1.0, "G must be at least 1");
}

RateParams sobolev_preset(double eta, int d) {
    require(d >= 1, "dimension must be positive");
    require(eta >= d / 2.0, "Sobolev smoothness must satisfy eta >= d/2 so that s <= 1");
    RateParams p;
    p.s = d / (2.0 * eta);
    p.q = 0.0;
    p.r = 0.5;
    return p;
}

RateParams finite_rank_preset(int rank) {
    require(rank >= 1, "rank must be positive");
    RateParams p;
    p.s = 0.0;
    p.q = 0.0;
    p.r = 0.5;
    p.E_s = std::sqrt(static_cast<double>(rank));
    return p;
}

RateParams primed_as_test(RateParams p) {
    p.r_p = p.r;
    p.s_p = p.s;
    p.q_p = p.q;
    p.V = p.W;
    p.gamma = p.sigma;
    p.E_p = p.E_s;
    p.R_p = p.R;
    p.fHp_norm = p.fH_norm;
    p.G = 1.0;
    return p;
}

RateParams uniform_weight_preset(RateParams p) {
    p.r_p = p.r;
    p.s_p = p.s;
    p.E_p = p.E_s;
    p.R_p = p.R;
    p.q_p = 0.0;
    p.V = 1.0;
    p.gamma = 1.0;
    return p;
}

double Schedule::lambda_at(double n_value) const { return c * std::pow(n_value, -beta); }

double Schedule::D_at(double n_value) const {
    if (!clipping) return std::numeric_limits<double>::infinity();
    return clipping->c2 * std::pow(n_value, clipping->tau);
}

bool Schedule::feasible() const { return lambda_feasible && (!clipping || clipping->side_condition_ok); }

double rate_exponent(const RateParams& params) {
    params.validate();
    return params.r / (2.0 * params.r + params.A());
}

double clipped_rate_exponent(const RateParams& params, int m, double epsilon) {
    params.validate();
    require(m >= 2, "m must be at least 2");
    require(epsilon > 0.0, "epsilon must be positive");
    const double denom = (params.s + 2.0 * params.r) * (m - 1) + 4.0 * params.q * params.r + epsilon;
    return params.r * (m - 1) / denom;
}

double classification_rate_exponent(const RateParams& params, double alpha) {
    require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0, 1)");
    return 2.0 * rate_exponent(params) / (2.0 - alpha);
}

double iw_c_lower_bound(const RateParams& p) {
    p.validate();
    const double l = log6(p.delta);
    return std::pow(64.0 * (p.W + p.sigma * p.sigma) * std::pow(p.E_s, 2.0 * (1.0 - p.q)) * l * l, 1.0 / (1.0 + p.A()));
}

double generic_c_lower_bound(const RateParams& p) {
    p.validate();
    const double l = log6(p.delta);
    return std::pow(64.0 * (p.V + p.gamma * p.gamma) * std::pow(p.E_p, 2.0 * (1.0 - p.q_p)) * l * l,
                    1.0 / (1.0 + p.A_p()));
}

double clipped_c2_lower_bound(const RateParams& p, int m, double c1) {
    p.validate();
    require(m >= 2, "m must be at least 2");
    require(c1 > 0.0, "c1 must be positive");
    const double inner = std::pow(2.0, 2.0 * p.q - 1.0) * std::pow(p.E_s, 2.0 * p.q) * factorial(m) *
                         std::pow(p.W, m - 2) * p.sigma * p.sigma;
    return std::pow(inner, 1.0 / (m - 1)) * std::pow(c1, -(1.0 + p.s) * p.q / (m - 1));
}

namespace {

Schedule make_schedule(double beta, double c, long long n) {
    require(n >= 1, "n must be at least 1");
    require(c > 0.0, "schedule constant must be positive");
    Schedule s;
    s.beta = beta;
    s.c = c;
    s.n = n;
    s.lambda = s.lambda_at(static_cast<double>(n));
    s.lambda_feasible = s.lambda <= 1.0;
    return s;
}

}  // namespace

Schedule iw_schedule(const RateParams& params, long long n, std::optional<double> c) {
    params.validate();
    return make_schedule(1.0 / (2.0 * params.r + params.A()), c.value_or(iw_c_lower_bound(params)), n);
}

Schedule generic_schedule(const RateParams& params, long long n, std::optional<double> c) {
    params.validate();
    return make_schedule(1.0 / (2.0 * params.r_p + params.A_p()), c.value_or(generic_c_lower_bound(params)), n);
}

Schedule clipped_schedule(const RateParams& params, int m, double epsilon, long long n, double c1,
                          std::optional<double> c2) {
    params.validate();
    if (!(params.q > 0.0)) throw ValidationError("clipped schedule needs q > 0; use the importance-weighted schedule");
    require(m >= 2, "m must be at least 2");
    require(epsilon > 0.0, "epsilon must be positive");
    const double denom = (params.s + 2.0 * params.r) * (m - 1) + 4.0 * params.q * params.r + epsilon;
    Schedule s = make_schedule((m - 1) / denom, c1, n);
    ClippingSchedule cl;
    cl.tau = 4.0 * params.q * params.r / denom;
    cl.c1 = c1;
    cl.m = m;
    cl.epsilon = epsilon;
    const double c2_min = clipped_c2_lower_bound(params, m, c1);
    cl.c2 = c2.value_or(c2_min);
    require(cl.c2 > 0.0, "c2 must be positive");
    cl.c2_constraint_ok = cl.c2 >= c2_min * (1.0 - 1e-12);
    cl.D = cl.c2 * std::pow(static_cast<double>(n), cl.tau);
    const double expo = ((m - 1) * (2.0 * params.r - 1.0) + epsilon) / (2.0 * denom);
    cl.side_lhs = params.E_s * std::pow(c1, -(1.0 + params.s) / 2.0) * std::sqrt(cl.c2) *
                  std::pow(static_cast<double>(n), -expo);
    cl.side_rhs = 3.0 / (32.0 * log6(params.delta));
    cl.side_condition_ok = cl.side_lhs <= cl.side_rhs;
    s.clipping = cl;
    return s;
}

ClippedConstants clipped_constants(const RateParams& p, int m) {
    p.validate();
    require(p.q > 0.0, "clipped constants need q > 0");
    ClippedConstants k;
    const double l = log6(p.delta);
    k.A1 = (p.f_rho_te + p.fH_te) *
           std::pow(std::pow(2.0, 6.0 * p.q - 1.0) * factorial(m) * std::pow(p.W, m - 2) * p.sigma * p.sigma,
                    1.0 / (2.0 * p.q));
    k.A2 = std::sqrt(2.0) * 16.0 * (p.M + p.fH_norm) * l;
    k.A3 = k.A2 * p.E_s;
    return k;
}

double bound_value(const RateParams& p, long long n, BoundKind which, const BoundOptions& o) {
    p.validate();
    require(n >= 1, "n must be at least 1");
    const double nd = static_cast<double>(n);
    const double l = log6(p.delta);
    switch (which) {
        case BoundKind::thm1: {
            const Schedule s = iw_schedule(p, n, o.c);
            const double a = p.A();
            return std::pow(nd, -p.r * s.beta) *
                   (16.0 * (p.M + p.fH_norm) * (p.W + p.sigma * std::pow(p.E_s, 1.0 - p.q)) * std::pow(s.c, -a / 2.0) * l +
                    std::pow(s.c, p.r) * p.R);
        }
        case BoundKind::thm2: {
            require(o.bias >= 0.0, "bias must be nonnegative");
            const Schedule s = generic_schedule(p, n, o.c);
            const double a = p.A_p();
            return std::pow(nd, -p.r_p * s.beta) * std::sqrt(p.G) *
                       (16.0 * (p.M + p.fHp_norm) * (p.V + p.gamma * std::pow(p.E_p, 1.0 - p.q_p)) *
                            std::pow(s.c, -a / 2.0) * l +
                        std::pow(s.c, p.r_p) * p.R_p) +
                   o.bias;
        }
        case BoundKind::thm4: {
            const Schedule s = clipped_schedule(p, o.m, o.epsilon, n, o.c1, o.c2);
            const ClippedConstants k = clipped_constants(p, o.m);
            const double c1 = s.clipping->c1, c2 = s.clipping->c2;
            return std::pow(nd, -s.beta * p.r) *
                   (k.A1 * std::pow(c2, -(o.m - 1) / (2.0 * p.q)) + k.A2 * std::pow(c1, -0.5) * c2 +
                    k.A3 * std::pow(c1, -p.s / 2.0) * std::sqrt(c2) + std::pow(2.0, p.r) * p.R * std::pow(c1, p.r));
        }
    }
    return 0.0;
}

}  // namespace iwkrr
