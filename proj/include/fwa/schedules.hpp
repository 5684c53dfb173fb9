#pragma once

#include <fwa/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

namespace fwa {

// ---------------------------------------------------------------------------
// Learning-rate schedules
// ---------------------------------------------------------------------------

struct ConstantRate {
    double alpha = 0.1;
};

/// alpha_t = c / t
struct InverseTRate {
    double c = 1.0;
};

/// alpha_t = c / sqrt(t)
struct InverseSqrtTRate {
    double c = 1.0;
};

/// Piecewise-constant decay over `stages` equal slices of a `horizon`-step run.
///
/// Stage j (0-based) uses start * (j + 1)^(-gamma), with gamma chosen so the
/// last stage lands on `end`. For end = start / sqrt(stages) this is the
/// start / sqrt(j + 1) staircase (0.4 -> 0.2 over four stages).
struct StepDecayRate {
    double start = 0.4;
    double end = 0.2;
    std::size_t stages = 4;
    std::size_t horizon = 1;

    [[nodiscard]] double exponent() const {
        return stages > 1 ? std::log(start / end) / std::log(static_cast<double>(stages)) : 0.0;
    }
    [[nodiscard]] std::size_t stage_of(std::size_t t) const {
        return std::min(stages - 1, (t - 1) * stages / std::max<std::size_t>(horizon, 1));
    }
};

class LearningRateSchedule {
public:
    using Variant = std::variant<ConstantRate, InverseTRate, InverseSqrtTRate, StepDecayRate>;

    LearningRateSchedule(ConstantRate r) : impl_(r) { validate(); }
    LearningRateSchedule(InverseTRate r) : impl_(r) { validate(); }
    LearningRateSchedule(InverseSqrtTRate r) : impl_(r) { validate(); }
    LearningRateSchedule(StepDecayRate r) : impl_(r) { validate(); }

    [[nodiscard]] static LearningRateSchedule constant(double alpha) { return ConstantRate{alpha}; }
    [[nodiscard]] static LearningRateSchedule inverse_t(double c) { return InverseTRate{c}; }
    [[nodiscard]] static LearningRateSchedule inverse_sqrt_t(double c) { return InverseSqrtTRate{c}; }
    [[nodiscard]] static LearningRateSchedule step_decay(double start, double end, std::size_t stages,
                                                         std::size_t horizon) {
        return StepDecayRate{start, end, stages, horizon};
    }

    [[nodiscard]] const Variant& variant() const { return impl_; }

    /// Step size alpha_t for t >= 1.
    [[nodiscard]] double rate_at(std::size_t t) const {
        detail::require(t >= 1, "rate_at: steps are numbered from 1");
        const double td = static_cast<double>(t);
        return std::visit(
            [&](const auto& r) -> double {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, ConstantRate>) {
                    return r.alpha;
                } else if constexpr (std::is_same_v<R, InverseTRate>) {
                    return r.c / td;
                } else if constexpr (std::is_same_v<R, InverseSqrtTRate>) {
                    return r.c / std::sqrt(td);
                } else {
                    const auto j = static_cast<double>(r.stage_of(t));
                    return r.start * std::pow(j + 1.0, -r.exponent());
                }
            },
            impl_);
    }

    [[nodiscard]] std::string describe() const {
        return std::visit(
            [](const auto& r) -> std::string {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, ConstantRate>) {
                    return "constant(" + std::to_string(r.alpha) + ")";
                } else if constexpr (std::is_same_v<R, InverseTRate>) {
                    return "inverse_t(" + std::to_string(r.c) + ")";
                } else if constexpr (std::is_same_v<R, InverseSqrtTRate>) {
                    return "inverse_sqrt_t(" + std::to_string(r.c) + ")";
                } else {
                    return "step_decay(" + std::to_string(r.start) + "->" + std::to_string(r.end) + ", " +
                           std::to_string(r.stages) + ")";
                }
            },
            impl_);
    }

private:
    void validate() const {
        std::visit(
            [](const auto& r) {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, ConstantRate>) {
                    detail::require(r.alpha > 0.0, "constant learning rate must be positive");
                } else if constexpr (std::is_same_v<R, StepDecayRate>) {
                    detail::require(r.start > 0.0 && r.end > 0.0 && r.end <= r.start,
                                    "step decay needs 0 < end <= start");
                    detail::require(r.stages >= 1 && r.horizon >= 1, "step decay needs stages >= 1 and horizon >= 1");
                    detail::require(r.stages > 1 || r.end == r.start, "a single-stage decay must have end == start");
                } else {
                    detail::require(r.c > 0.0, "schedule constant c must be positive");
                }
            },
            impl_);
    }

    Variant impl_;
};

// ---------------------------------------------------------------------------
// Averaging schemes
// ---------------------------------------------------------------------------

enum class AveragingKind { SGD, FWA, LAWA, SWA };

[[nodiscard]] inline std::string to_string(AveragingKind kind) {
    switch (kind) {
    case AveragingKind::SGD: return "SGD";
    case AveragingKind::FWA: return "FWA";
    case AveragingKind::LAWA: return "LAWA";
    case AveragingKind::SWA: return "SWA";
    }
    return "?";
}

/// Which iterates get averaged and with what weights.
///
/// k counts checkpoints and d is the stride between them in steps. SWA leaves
/// k unset (0) because its window is the whole run.
struct AveragingScheme {
    AveragingKind kind = AveragingKind::SGD;
    std::size_t k = 1;
    std::size_t d = 1;
    std::vector<double> rho{1.0};

    [[nodiscard]] static AveragingScheme sgd() { return {AveragingKind::SGD, 1, 1, {1.0}}; }
    [[nodiscard]] static AveragingScheme fwa(std::size_t k) {
        detail::require(k >= 1, "FWA window k must be >= 1");
        return {AveragingKind::FWA, k, 1, std::vector<double>(k, 1.0)};
    }
    /// FWA with an arbitrary non-negative weight sequence rho_1..rho_k.
    [[nodiscard]] static AveragingScheme weighted(std::vector<double> rho) {
        detail::require(!rho.empty(), "weight sequence must be non-empty");
        detail::require(std::all_of(rho.begin(), rho.end(), [](double r) { return r >= 0.0 && std::isfinite(r); }),
                        "weights must be finite and non-negative");
        detail::require(std::any_of(rho.begin(), rho.end(), [](double r) { return r > 0.0; }),
                        "at least one weight must be positive");
        const std::size_t k = rho.size();
        return {AveragingKind::FWA, k, 1, std::move(rho)};
    }
    [[nodiscard]] static AveragingScheme lawa(std::size_t k, std::size_t d) {
        detail::require(k >= 1 && d >= 1, "LAWA needs k >= 1 and d >= 1");
        return {AveragingKind::LAWA, k, d, std::vector<double>(k, 1.0)};
    }
    [[nodiscard]] static AveragingScheme swa() { return {AveragingKind::SWA, 0, 1, {}}; }

    [[nodiscard]] bool uniform() const {
        return std::all_of(rho.begin(), rho.end(), [](double r) { return r == 1.0; });
    }

    /// Short comma-free label used in CSV output, e.g. "FWA-k100".
    [[nodiscard]] std::string label() const {
        switch (kind) {
        case AveragingKind::SGD: return "SGD";
        case AveragingKind::SWA: return "SWA";
        case AveragingKind::FWA: return (uniform() ? "FWA-k" : "WFWA-k") + std::to_string(k);
        case AveragingKind::LAWA: return "LAWA-k" + std::to_string(k) + "-d" + std::to_string(d);
        }
        return "?";
    }

    /// Smallest run length the full window fits into.
    [[nodiscard]] std::size_t min_steps() const {
        switch (kind) {
        case AveragingKind::SGD: return 1;
        case AveragingKind::SWA: return 1;
        case AveragingKind::FWA: return k;
        case AveragingKind::LAWA: return k * d;
        }
        return 1;
    }
};

struct Checkpoint {
    std::size_t step = 0;
    double weight = 0.0;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// The iterate indices and weights the average at step T combines, oldest first.
[[nodiscard]] inline std::vector<Checkpoint> checkpoint_mask(const AveragingScheme& scheme, std::size_t T) {
    detail::require(T >= 1, "checkpoint_mask: T must be >= 1");
    if (T < scheme.min_steps()) {
        throw ConfigError(scheme.label() + " needs at least " + std::to_string(scheme.min_steps()) +
                          " steps, run has " + std::to_string(T));
    }
    std::vector<Checkpoint> mask;
    switch (scheme.kind) {
    case AveragingKind::SGD:
        mask.push_back({T, 1.0});
        break;
    case AveragingKind::SWA:
        for (std::size_t t = 1; t <= T; ++t) {
            mask.push_back({t, 1.0});
        }
        break;
    case AveragingKind::FWA:
        for (std::size_t j = 1; j <= scheme.k; ++j) {
            mask.push_back({T - scheme.k + j, scheme.rho[j - 1]});
        }
        break;
    case AveragingKind::LAWA:
        for (std::size_t j = scheme.k; j-- > 0;) {
            mask.push_back({T - j * scheme.d, scheme.rho[scheme.k - 1 - j]});
        }
        break;
    }
    return mask;
}

/// Positional form of a scheme over a sliding window of `length` iterates.
/// `weights` is stored oldest first; the weighted sum is divided by `divisor`.
struct WindowSpec {
    std::size_t length = 1;
    std::vector<double> weights{1.0};
    double divisor = 1.0;
};

/// Sliding-window form of a finite scheme. SWA has no finite window.
[[nodiscard]] inline WindowSpec window_spec(const AveragingScheme& scheme) {
    switch (scheme.kind) {
    case AveragingKind::SGD:
        return {1, {1.0}, 1.0};
    case AveragingKind::FWA:
        return {scheme.k, scheme.rho, static_cast<double>(scheme.k)};
    case AveragingKind::LAWA: {
        const std::size_t length = (scheme.k - 1) * scheme.d + 1;
        std::vector<double> weights(length, 0.0);
        for (std::size_t j = 0; j < scheme.k; ++j) {
            weights[j * scheme.d] = scheme.rho[j];
        }
        return {length, std::move(weights), static_cast<double>(scheme.k)};
    }
    case AveragingKind::SWA:
        break;
    }
    throw ContractViolation("SWA has no finite averaging window");
}

} // namespace fwa
