#pragma once

#include <fwa/data.hpp>
#include <fwa/errors.hpp>
#include <fwa/model.hpp>
#include <fwa/rng.hpp>
#include <fwa/schedules.hpp>
#include <fwa/stability.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fwa {

enum class ConstantsSource { ClosedForm, Empirical };

/// L (Lipschitz), beta (smoothness), G (gradient second-moment bound),
/// D (domain diameter) and the dataset size n.
struct ProblemConstants {
    double L = 1.0;
    double beta = 1.0;
    double G = 1.0;
    double D = 1.0;
    std::size_t n = 1;
    ConstantsSource source = ConstantsSource::Empirical;
};

// ---------------------------------------------------------------------------
// Constant estimation
// ---------------------------------------------------------------------------

/// 2 * max_i |(x_i, 1)|^2: the per-sample smoothness of the squared error.
[[nodiscard]] inline double closed_form_beta_mse(const Dataset& data) {
    double worst = 0.0;
    for (const Sample& z : data.samples()) {
        worst = std::max(worst, z.features.squaredNorm() + 1.0);
    }
    return 2.0 * worst;
}

/// Largest per-sample gradient-difference ratio over random pairs in a ball.
/// Half of the pairs are close together to catch local curvature.
template <LossOracle M>
[[nodiscard]] double empirical_beta(const M& model, const Dataset& data, double radius, std::size_t num_pairs,
                                    std::uint64_t seed) {
    Rng rng = make_rng(seed ^ 0x5bd1e995ULL, Stream::Probe);
    const std::size_t dim = model.param_dim();
    double worst = 0.0;
    for (std::size_t p = 0; p < num_pairs; ++p) {
        const ParameterVector u = random_point_in_ball(rng, dim, radius);
        ParameterVector v = random_point_in_ball(rng, dim, radius);
        if (p % 2 == 1) {
            v = u + 1e-3 * (v - u);
        }
        const double gap = (u - v).norm();
        if (gap == 0.0) {
            continue;
        }
        for (const Sample& z : data.samples()) {
            const double ratio = (model.gradient(u, z) - model.gradient(v, z)).norm() / gap;
            worst = std::max(worst, ratio);
        }
    }
    return worst;
}

/// Largest per-sample gradient norm over probe points in a ball. Half of the
/// probes sit on the boundary sphere, where affine models attain their maximum.
template <LossOracle M>
[[nodiscard]] double max_gradient_norm(const M& model, const Dataset& data, double radius, std::size_t num_probes,
                                       std::uint64_t seed) {
    Rng rng = make_rng(seed, Stream::Probe);
    const std::size_t dim = model.param_dim();
    double worst = 0.0;
    for (std::size_t p = 0; p < num_probes; ++p) {
        ParameterVector w = random_point_in_ball(rng, dim, radius);
        if (p % 2 == 0 && w.norm() > 0.0) {
            w *= radius / w.norm();
        }
        for (const Sample& z : data.samples()) {
            worst = std::max(worst, model.gradient(w, z).norm());
        }
    }
    return worst;
}

/// Largest pairwise distance among a set of iterates.
[[nodiscard]] inline double max_pairwise_distance(std::span<const ParameterVector> iterates) {
    double worst = 0.0;
    for (std::size_t i = 0; i < iterates.size(); ++i) {
        for (std::size_t j = i + 1; j < iterates.size(); ++j) {
            worst = std::max(worst, (iterates[i] - iterates[j]).norm());
        }
    }
    return worst;
}

struct ConstantsOptions {
    /// When set, D = 2 * projection_radius.
    std::optional<double> projection_radius;
    /// Otherwise D is the diameter of these iterates (a reference run), or
    /// the probe ball's diameter when none are given.
    std::span<const ParameterVector> reference_iterates;
};

/// Estimates L, beta, G, D for a model and dataset.
template <LossOracle M>
[[nodiscard]] ProblemConstants estimate_constants(const M& model, const Dataset& data, double probe_region_radius,
                                                  std::size_t num_probes, std::uint64_t seed,
                                                  const ConstantsOptions& options = {}) {
    detail::require(num_probes >= 100, "estimate_constants: need at least 100 probes");
    detail::require(probe_region_radius > 0.0, "estimate_constants: probe radius must be positive");
    detail::require(!data.empty(), "estimate_constants: empty dataset");
    const bool degenerate = std::all_of(data.samples().begin(), data.samples().end(),
                                        [](const Sample& z) { return z.features.isZero(0.0); });
    if (degenerate) {
        throw ConfigError("estimate_constants: every feature vector is zero");
    }

    ProblemConstants out;
    out.n = data.size();
    out.L = max_gradient_norm(model, data, probe_region_radius, num_probes, seed);
    out.G = out.L;

    bool closed = false;
    if constexpr (std::is_same_v<M, LinearRegressionMSE>) {
        closed = true;
    } else if constexpr (std::is_same_v<M, LossModel>) {
        closed = std::holds_alternative<LinearRegressionMSE>(model.variant());
    }
    if (closed) {
        out.beta = closed_form_beta_mse(data);
        out.source = ConstantsSource::ClosedForm;
    } else {
        out.beta = empirical_beta(model, data, probe_region_radius, num_probes, seed);
        out.source = ConstantsSource::Empirical;
    }

    if (options.projection_radius) {
        out.D = 2.0 * *options.projection_radius;
    } else if (!options.reference_iterates.empty()) {
        out.D = max_pairwise_distance(options.reference_iterates);
    } else {
        out.D = 2.0 * probe_region_radius;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reference minimizers
// ---------------------------------------------------------------------------

/// Least-squares solution of the affine model (bias last).
[[nodiscard]] inline ParameterVector least_squares_minimizer(const Dataset& data) {
    detail::require(!data.empty(), "least_squares_minimizer: empty dataset");
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto d = static_cast<Eigen::Index>(data.feature_dim());
    Eigen::MatrixXd X(n, d + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Sample& z = data[static_cast<std::size_t>(i)];
        X.row(i).head(d) = z.features.transpose();
        X(i, d) = 1.0;
        y[i] = z.target;
    }
    return X.colPivHouseholderQr().solve(y);
}

/// Full-batch gradient descent until the gradient norm drops below `tolerance`.
template <LossOracle M>
[[nodiscard]] ParameterVector full_batch_minimizer(const M& model, const Dataset& data, ParameterVector start,
                                                   double step, std::size_t max_iterations,
                                                   double tolerance = 1e-10) {
    for (std::size_t it = 0; it < max_iterations; ++it) {
        const ParameterVector g = grad_batch(model, start, data.samples());
        if (g.norm() <= tolerance) {
            break;
        }
        start -= step * g;
    }
    return start;
}

// ---------------------------------------------------------------------------
// Closed-form bounds
// ---------------------------------------------------------------------------

enum class BoundName {
    ConvexGeneral,      // weighted double sum, any schedule
    ConvexConstant,     // constant step, uniform weights
    NonconvexConstant,  // alpha <= c / T
    NonconvexDecay,     // alpha_t <= c / t
    ConvergenceFWA,     // alpha_t = c / sqrt(t)
    ConvergenceSGD,
    ConvergenceLAWA,
    ConvergenceGeneral, // weighted, any non-increasing schedule
};

[[nodiscard]] inline std::string to_string(BoundName name) {
    switch (name) {
    case BoundName::ConvexGeneral: return "stability_convex_general";
    case BoundName::ConvexConstant: return "stability_convex_constant";
    case BoundName::NonconvexConstant: return "stability_nonconvex_constant";
    case BoundName::NonconvexDecay: return "stability_nonconvex_decay";
    case BoundName::ConvergenceFWA: return "convergence_fwa";
    case BoundName::ConvergenceSGD: return "convergence_sgd";
    case BoundName::ConvergenceLAWA: return "convergence_lawa";
    case BoundName::ConvergenceGeneral: return "convergence_general";
    }
    return "?";
}

struct BoundParams {
    std::size_t T = 0;
    double k = 0.0;
    std::size_t d = 1;
    double c = 0.0;
    double alpha = 0.0;
};

struct BoundResult {
    BoundName name{};
    double value = 0.0;
    BoundParams params;
    /// Exponent of T for order-form bounds, 0 otherwise.
    double exponent = 0.0;
    /// Prefactor unknown; compare exponents, not values.
    bool order_only = false;
    /// The step-size condition the bound assumes is not met.
    bool assumption_violated = false;
    /// Non-convex decaying case: whether k^2 - k > c beta / (1 - c beta).
    std::optional<bool> beats_sgd;
};

namespace detail {

inline void require_domain(bool condition, const std::string& message) {
    if (!condition) {
        throw DomainError(message);
    }
}

inline double step_condition(const ProblemConstants& consts) { return 2.0 / consts.beta; }

/// Neumaier summation, so long double sums stay within a few ulps.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        compensation_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

} // namespace detail

/// (2L^2/(nk)) * (sum_{t=1}^{k} sum_{i=1}^{t} rho_i a_i
///             + sum_{t=k+1}^{T} sum_{i=t-k+1}^{t} rho_{i-(t-k)} a_i)
[[nodiscard]] inline BoundResult bound_convex_general(const ProblemConstants& consts, std::size_t T, std::size_t k,
                                                      std::span<const double> rho, const LearningRateSchedule& lr) {
    detail::require(k >= 1 && k <= T, "bound_convex_general: need 1 <= k <= T");
    detail::require(rho.size() == k, "bound_convex_general: rho must have k entries");

    std::vector<double> alpha(T + 1, 0.0);
    bool violated = false;
    for (std::size_t i = 1; i <= T; ++i) {
        alpha[i] = lr.rate_at(i);
        violated = violated || alpha[i] > detail::step_condition(consts);
    }
    detail::CompensatedSum sum;
    for (std::size_t t = 1; t <= k; ++t) {
        for (std::size_t i = 1; i <= t; ++i) {
            sum.add(rho[i - 1] * alpha[i]);
        }
    }
    for (std::size_t t = k + 1; t <= T; ++t) {
        for (std::size_t i = t - k + 1; i <= t; ++i) {
            sum.add(rho[i - (t - k) - 1] * alpha[i]);
        }
    }
    const double n = static_cast<double>(consts.n);
    BoundResult out;
    out.name = BoundName::ConvexGeneral;
    out.value = 2.0 * consts.L * consts.L / (n * static_cast<double>(k)) * sum.value();
    out.params = {T, static_cast<double>(k), 1, 0.0, alpha[1]};
    out.assumption_violated = violated;
    return out;
}

/// (2 alpha L^2 / n) * (T - k/2)
[[nodiscard]] inline BoundResult bound_convex_constant(const ProblemConstants& consts, std::size_t T, std::size_t k,
                                                       double alpha) {
    detail::require(k >= 1 && k <= T, "bound_convex_constant: need 1 <= k <= T");
    detail::require(alpha > 0.0, "bound_convex_constant: alpha must be positive");
    BoundResult out;
    out.name = BoundName::ConvexConstant;
    out.value = 2.0 * alpha * consts.L * consts.L / static_cast<double>(consts.n) *
                (static_cast<double>(T) - static_cast<double>(k) / 2.0);
    out.params = {T, static_cast<double>(k), 1, 0.0, alpha};
    out.assumption_violated = alpha > detail::step_condition(consts);
    return out;
}

/// T^(c beta / (c beta + k)).
[[nodiscard]] inline double nonconvex_constant_exponent(double c_beta, double k) { return c_beta / (c_beta + k); }

/// (1 + 1/(c beta)) / (n - 1) * (2 c L^2 (1 + k e^{c beta}) / k)^(k / (c beta + k)) * T^(c beta / (c beta + k))
[[nodiscard]] inline BoundResult bound_nonconvex_constant(const ProblemConstants& consts, std::size_t T, double k,
                                                          double c) {
    const double cb = c * consts.beta;
    detail::require(cb > 0.0, "bound_nonconvex_constant: c * beta must be positive");
    detail::require(k >= 1.0, "bound_nonconvex_constant: k must be >= 1");
    detail::require(consts.n >= 2, "bound_nonconvex_constant: needs n >= 2");
    detail::require(T >= 1, "bound_nonconvex_constant: T must be >= 1");

    BoundResult out;
    out.name = BoundName::NonconvexConstant;
    out.exponent = nonconvex_constant_exponent(cb, k);
    const double base = 2.0 * c * consts.L * consts.L * (1.0 + k * std::exp(cb)) / k;
    out.value = (1.0 + 1.0 / cb) / static_cast<double>(consts.n - 1) * std::pow(base, k / (cb + k)) *
                std::pow(static_cast<double>(T), out.exponent);
    out.params = {T, k, 1, c, c / static_cast<double>(T)};
    return out;
}

/// (k c beta + c^2 beta^2) / (2 k c beta + c^2 beta^2 + k^2 (1 - c beta)).
[[nodiscard]] inline double nonconvex_decay_exponent(double c_beta, double k) {
    return (k * c_beta + c_beta * c_beta) / (2.0 * k * c_beta + c_beta * c_beta + k * k * (1.0 - c_beta));
}

/// Upper end of the open interval of k where the decaying-step analysis applies.
[[nodiscard]] inline double nonconvex_decay_k_limit(double c_beta) {
    return (1.0 + std::sqrt(1.0 + 4.0 * c_beta)) / 2.0;
}

/// Order form T^exponent / n; valid for c beta in (0, 1) and k in (1, (1 + sqrt(1 + 4 c beta)) / 2).
[[nodiscard]] inline BoundResult bound_nonconvex_decay(const ProblemConstants& consts, std::size_t T, double k,
                                                       double c) {
    const double cb = c * consts.beta;
    detail::require_domain(cb > 0.0 && cb < 1.0,
                           "bound_nonconvex_decay: requires c * beta in (0, 1), got " + std::to_string(cb));
    const double limit = nonconvex_decay_k_limit(cb);
    detail::require_domain(k > 1.0 && k < limit, "bound_nonconvex_decay: requires k in (1, " + std::to_string(limit) +
                                                     "), got k = " + std::to_string(k));
    detail::require(T >= 1, "bound_nonconvex_decay: T must be >= 1");

    BoundResult out;
    out.name = BoundName::NonconvexDecay;
    out.exponent = nonconvex_decay_exponent(cb, k);
    out.value = std::pow(static_cast<double>(T), out.exponent) / static_cast<double>(consts.n);
    out.order_only = true;
    out.beats_sgd = k * k - k > cb / (1.0 - cb);
    out.params = {T, k, 1, c, c};
    return out;
}

namespace detail {

inline double convergence_scale(const ProblemConstants& consts, double c) {
    return consts.D * consts.D / c + 2.0 * c * consts.G * consts.G;
}

} // namespace detail

/// ((2 + log(T / (2k))) / sqrt(T)) * (D^2 / c + 2 c G^2), for 1 <= k <= T/2.
[[nodiscard]] inline BoundResult bound_convergence_fwa(const ProblemConstants& consts, std::size_t T, double k,
                                                       double c) {
    detail::require(c > 0.0, "bound_convergence_fwa: c must be positive");
    detail::require(T > 1, "bound_convergence_fwa: T must exceed 1");
    const double Td = static_cast<double>(T);
    detail::require_domain(k >= 1.0 && 2.0 * k <= Td,
                           "bound_convergence_fwa: requires 1 <= k <= T/2, got k = " + std::to_string(k));
    BoundResult out;
    out.name = BoundName::ConvergenceFWA;
    out.value = (2.0 + std::log(Td / (2.0 * k))) / std::sqrt(Td) * detail::convergence_scale(consts, c);
    out.params = {T, k, 1, c, c};
    return out;
}

/// ((2 + log T) / sqrt(T)) * (D^2 / c + 2 c G^2)
[[nodiscard]] inline BoundResult bound_convergence_sgd(const ProblemConstants& consts, std::size_t T, double c) {
    detail::require(c > 0.0, "bound_convergence_sgd: c must be positive");
    detail::require(T > 1, "bound_convergence_sgd: T must exceed 1");
    const double Td = static_cast<double>(T);
    BoundResult out;
    out.name = BoundName::ConvergenceSGD;
    out.value = (2.0 + std::log(Td)) / std::sqrt(Td) * detail::convergence_scale(consts, c);
    out.params = {T, 1.0, 1, c, c};
    return out;
}

/// ((2d + d log(T / (2kd))) / sqrt(T)) * (D^2 / c + 2 c G^2), for T = E d with E > 1 and 1 <= kd <= T/2.
[[nodiscard]] inline BoundResult bound_convergence_lawa(const ProblemConstants& consts, std::size_t T, double k,
                                                        std::size_t d, double c) {
    detail::require(c > 0.0, "bound_convergence_lawa: c must be positive");
    detail::require(d >= 1, "bound_convergence_lawa: d must be >= 1");
    if (T % d != 0 || T / d <= 1) {
        throw ConfigError("bound_convergence_lawa: T = " + std::to_string(T) +
                          " must be a multiple E * d of d = " + std::to_string(d) + " with E > 1");
    }
    const double Td = static_cast<double>(T);
    const double dd = static_cast<double>(d);
    detail::require_domain(k >= 1.0 && 2.0 * k * dd <= Td,
                           "bound_convergence_lawa: requires 1 <= k d <= T/2, got k d = " + std::to_string(k * dd));
    BoundResult out;
    out.name = BoundName::ConvergenceLAWA;
    out.value = (2.0 * dd + dd * std::log(Td / (2.0 * k * dd))) / std::sqrt(Td) * detail::convergence_scale(consts, c);
    out.params = {T, k, d, c, c};
    return out;
}

/// Right-hand side of the weighted last-k convergence inequality with every
/// |w_t - w|^2 replaced by D^2:
///   sum_{t=T-k+2}^{T} D^2 (rho_{t-(T-k)} / (2k a_t) - rho_{t-(T-k+1)} / (2k a_{t-1}))
///   + rho_1 D^2 / (2k a_{T-k+1}) + (G^2 / 2k) sum_{t=T-k+1}^{T} rho_{t-(T-k)} a_t
[[nodiscard]] inline BoundResult bound_convergence_general(const ProblemConstants& consts, std::size_t T,
                                                           std::size_t k, std::span<const double> rho,
                                                           const LearningRateSchedule& lr) {
    detail::require(T > 1, "bound_convergence_general: T must exceed 1");
    detail::require_domain(k >= 1 && 2 * k <= T, "bound_convergence_general: requires 1 <= k <= T/2");
    detail::require(rho.size() == k, "bound_convergence_general: rho must have k entries");
    for (std::size_t t = 2; t <= T; ++t) {
        detail::require_domain(lr.rate_at(t) <= lr.rate_at(t - 1),
                               "bound_convergence_general: step sizes must be non-increasing (increase at t = " +
                                   std::to_string(t) + ")");
    }
    const double kk = static_cast<double>(k);
    const double D2 = consts.D * consts.D;
    const std::size_t start = T - k; // rho index of step t is t - start

    double telescoping = 0.0;
    for (std::size_t t = T - k + 2; t <= T; ++t) {
        telescoping += D2 * (rho[t - start - 1] / (2.0 * kk * lr.rate_at(t)) -
                             rho[t - start - 2] / (2.0 * kk * lr.rate_at(t - 1)));
    }
    const double first = rho[0] * D2 / (2.0 * kk * lr.rate_at(T - k + 1));
    double noise = 0.0;
    for (std::size_t t = T - k + 1; t <= T; ++t) {
        noise += rho[t - start - 1] * lr.rate_at(t);
    }
    noise *= consts.G * consts.G / (2.0 * kk);

    BoundResult out;
    out.name = BoundName::ConvergenceGeneral;
    out.value = telescoping + first + noise;
    out.params = {T, kk, 1, 0.0, lr.rate_at(T)};
    return out;
}

// ---------------------------------------------------------------------------
// Invariant audit
// ---------------------------------------------------------------------------

/// Outcome of one reduction or monotonicity check over a parameter grid.
struct InvariantCheck {
    std::string name;
    std::size_t points = 0;
    /// Largest discrepancy seen, relative to the reference value (reductions),
    /// or the count of grid steps that broke the ordering (monotonicity).
    double worst = 0.0;
    double tolerance = 0.0;
    bool passed = true;
};

namespace detail {

inline constexpr double kUlpTolerance = 8.0 * std::numeric_limits<double>::epsilon();

inline void record_relative(InvariantCheck& check, double value, double reference, double scale) {
    const double err = std::abs(value - reference) / scale;
    check.worst = std::max(check.worst, err);
    check.passed = check.passed && err <= check.tolerance;
    ++check.points;
}

inline void record_order(InvariantCheck& check, bool ordered) {
    check.worst += ordered ? 0.0 : 1.0;
    check.passed = check.passed && ordered;
    ++check.points;
}

} // namespace detail

/// Checks every closed-form reduction and monotonicity property of the bounds
/// for the given constants. Reductions and the double-sum gap use a 20-point
/// grid and a tolerance of 8 ulps; monotonicity grids have at least 50 points.
[[nodiscard]] inline std::vector<InvariantCheck> audit_bound_invariants(const ProblemConstants& consts) {
    using detail::kUlpTolerance;
    std::vector<InvariantCheck> checks;
    const double L2_over_n = consts.L * consts.L / static_cast<double>(consts.n);

    const std::size_t horizons[] = {2, 3, 5, 10, 17, 50, 99, 100, 256, 1000};
    const double alphas[] = {1e-3, 0.05};

    {
        InvariantCheck c{"convex_constant_k_eq_T_is_swa", 0, 0.0, kUlpTolerance};
        for (std::size_t T : horizons) {
            for (double a : alphas) {
                const double ref = a * L2_over_n * static_cast<double>(T);
                detail::record_relative(c, bound_convex_constant(consts, T, T, a).value, ref, ref);
            }
        }
        checks.push_back(c);
    }
    {
        InvariantCheck c{"lawa_d1_equals_fwa", 0, 0.0, kUlpTolerance};
        for (std::size_t T : horizons) {
            for (double cc : {0.1, 1.0}) {
                const double k = std::max(1.0, std::floor(static_cast<double>(T) / 4.0));
                const double fwa = bound_convergence_fwa(consts, T, k, cc).value;
                detail::record_relative(c, bound_convergence_lawa(consts, T, k, 1, cc).value, fwa, fwa);
            }
        }
        checks.push_back(c);
    }
    {
        InvariantCheck c{"nonconvex_constant_k1_is_sgd_exponent", 0, 0.0, kUlpTolerance};
        for (int i = 1; i <= 20; ++i) {
            const double cb = 0.15 * i;
            const double ref = cb / (1.0 + cb);
            const double c_val = cb / consts.beta;
            detail::record_relative(c, bound_nonconvex_constant(consts, 1000, 1.0, c_val).exponent, ref, ref);
        }
        checks.push_back(c);
    }
    {
        InvariantCheck c{"convex_double_sum_gap_is_alpha_L2_over_n", 0, 0.0, kUlpTolerance};
        for (std::size_t T : horizons) {
            for (double a : alphas) {
                const std::size_t k = std::max<std::size_t>(1, T / 3);
                const std::vector<double> rho(k, 1.0);
                const double general = bound_convex_general(consts, T, k, rho, LearningRateSchedule::constant(a)).value;
                const double gap = general - bound_convex_constant(consts, T, k, a).value;
                detail::record_relative(c, gap, a * L2_over_n, general);
            }
        }
        checks.push_back(c);
    }
    {
        InvariantCheck c{"convex_constant_decreasing_in_k"};
        const std::size_t T = 200;
        for (std::size_t k = 1; k < T; ++k) {
            detail::record_order(c, bound_convex_constant(consts, T, k + 1, 0.01).value <
                                        bound_convex_constant(consts, T, k, 0.01).value);
        }
        checks.push_back(c);
    }
    {
        InvariantCheck c{"convergence_fwa_decreasing_in_k"};
        const std::size_t T = 200;
        for (std::size_t k = 1; 2 * (k + 1) <= T; ++k) {
            detail::record_order(c, bound_convergence_fwa(consts, T, static_cast<double>(k + 1), 1.0).value <
                                        bound_convergence_fwa(consts, T, static_cast<double>(k), 1.0).value);
        }
        checks.push_back(c);
    }
    {
        // 720720 has 240 divisors, so the stride grid is dense
        InvariantCheck c{"convergence_lawa_increasing_in_d"};
        const std::size_t T = 720720;
        const double k = 5.0;
        std::optional<double> previous;
        for (std::size_t d = 1; 2 * static_cast<std::size_t>(k) * d <= T; ++d) {
            if (T % d != 0) {
                continue;
            }
            const double value = bound_convergence_lawa(consts, T, k, d, 1.0).value;
            if (previous) {
                detail::record_order(c, value > *previous);
            }
            previous = value;
        }
        checks.push_back(c);
    }
    {
        InvariantCheck c{"nonconvex_constant_exponent_decreasing_in_k"};
        for (int i = 1; i <= 60; ++i) {
            const double k = static_cast<double>(i);
            detail::record_order(c, nonconvex_constant_exponent(0.8, k + 1.0) < nonconvex_constant_exponent(0.8, k));
        }
        checks.push_back(c);
    }
    return checks;
}

} // namespace fwa
