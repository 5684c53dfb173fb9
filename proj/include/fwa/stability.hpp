#pragma once

#include <fwa/data.hpp>
#include <fwa/errors.hpp>
#include <fwa/model.hpp>
#include <fwa/optimizer.hpp>
#include <fwa/rng.hpp>
#include <fwa/schedules.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

namespace fwa {

/// sqrt(|w - w'|^2 / (|w|^2 + |w'|^2)); two zero vectors are at distance 0.
[[nodiscard]] inline double parameter_distance(const ParameterVector& w, const ParameterVector& w_prime) {
    detail::require(w.size() == w_prime.size(), "parameter_distance: dimension mismatch");
    const double denom = w.squaredNorm() + w_prime.squaredNorm();
    if (denom == 0.0) {
        return 0.0;
    }
    return std::sqrt((w - w_prime).squaredNorm() / denom);
}

/// Mean loss for regression models, misclassification rate for classifiers.
template <LossOracle M>
[[nodiscard]] double error_measure(const M& model, const ParameterVector& w, const Dataset& data) {
    detail::require(!data.empty(), "error_measure: empty dataset");
    if constexpr (std::is_same_v<M, LossModel>) {
        if (model.is_classifier()) {
            std::size_t wrong = 0;
            for (const Sample& z : data.samples()) {
                const double label = model.predict(w, z.features) >= 0.5 ? 1.0 : 0.0;
                wrong += label != z.target ? 1 : 0;
            }
            return static_cast<double>(wrong) / static_cast<double>(data.size());
        }
    }
    return mean_loss(model, w, data.samples());
}

/// |training error - test error|.
template <LossOracle M>
[[nodiscard]] double generalization_error(const M& model, const ParameterVector& w, const Dataset& train,
                                          const Dataset& test) {
    detail::require(!train.empty() && !test.empty(), "generalization_error: empty split");
    return std::abs(error_measure(model, w, train) - error_measure(model, w, test));
}

struct StabilityReport {
    AveragingScheme scheme;
    std::uint64_t seed = 0;
    std::vector<double> parameter_distance;   // averaged models, per epoch
    std::vector<double> generalization_error; // model trained on S, per epoch
    std::vector<double> train_loss;
    std::vector<double> test_loss;
    std::vector<double> last_iterate_distance; // raw w_t vs w'_t, for reference
    std::size_t differing_index = 0;
    std::size_t first_touch_step = 0; // first step whose batch contained differing_index (0: never)
};

/// Coupled runs of every scheme on both halves of a twin pair.
///
/// Both runs share cfg (seed, w_0, index stream); distances are between the
/// two runs' averaged models at the end of every epoch.
template <LossOracle M>
[[nodiscard]] std::vector<StabilityReport> run_stability_experiment(const M& model, const TwinPair& twin,
                                                                    const Dataset& test,
                                                                    const LearningRateSchedule& lr,
                                                                    const RunConfig& cfg,
                                                                    const std::vector<AveragingScheme>& schemes) {
    detail::require(!schemes.empty(), "run_stability_experiment: no schemes");
    detail::require(twin.s.size() == twin.s_prime.size(), "twin datasets must have equal size");

    struct EpochState {
        ParameterVector average;
        ParameterVector iterate;
    };

    std::vector<StabilityReport> reports;
    for (const AveragingScheme& scheme : schemes) {
        StabilityReport report;
        report.scheme = scheme;
        report.seed = cfg.seed;
        report.differing_index = twin.differing_index;

        const std::size_t T = total_steps(cfg, twin.s.size());
        auto record = [&](std::vector<EpochState>& into, bool track_touch) {
            return [&into, &report, track_touch, T, &twin](const StepRecord& r) {
                if (track_touch && report.first_touch_step == 0 &&
                    std::find(r.indices.begin(), r.indices.end(), twin.differing_index) != r.indices.end()) {
                    report.first_touch_step = r.step;
                }
                if (r.epoch_end() || r.step == T) {
                    into.push_back({r.averager->average(), *r.iterate});
                }
            };
        };

        std::vector<EpochState> first;
        std::vector<EpochState> second;
        (void)train(model, twin.s, lr, cfg, scheme, record(first, true));
        (void)train(model, twin.s_prime, lr, cfg, scheme, record(second, false));

        for (std::size_t e = 0; e < first.size(); ++e) {
            report.parameter_distance.push_back(parameter_distance(first[e].average, second[e].average));
            report.last_iterate_distance.push_back(parameter_distance(first[e].iterate, second[e].iterate));
            const double train_err = error_measure(model, first[e].average, twin.s);
            const double test_err = error_measure(model, first[e].average, test);
            report.train_loss.push_back(train_err);
            report.test_loss.push_back(test_err);
            report.generalization_error.push_back(std::abs(train_err - test_err));
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

/// Builds the twin pair from `base` with cfg.seed and runs the coupled experiment.
template <LossOracle M>
[[nodiscard]] std::vector<StabilityReport> run_stability_experiment(const M& model, const Dataset& base,
                                                                    const Dataset& test,
                                                                    const LearningRateSchedule& lr,
                                                                    const RunConfig& cfg,
                                                                    const std::vector<AveragingScheme>& schemes) {
    return run_stability_experiment(model, make_twin(base, cfg.seed), test, lr, cfg, schemes);
}

// ---------------------------------------------------------------------------
// Expansivity probes
// ---------------------------------------------------------------------------

struct ExpansivityProbe {
    double alpha = 0.0;
    double beta_hat = 0.0;
    std::size_t num_pairs = 0;
    double max_ratio = 0.0;
    bool convex = false;

    /// Lipschitz constant the update map is allowed: 1 when convex and
    /// alpha <= 2 / beta, 1 + alpha * beta otherwise.
    [[nodiscard]] double allowed_ratio() const {
        if (convex && alpha * beta_hat <= 2.0) {
            return 1.0;
        }
        return 1.0 + alpha * beta_hat;
    }
    [[nodiscard]] bool holds(double slack = 1e-8) const { return max_ratio <= allowed_ratio() + slack; }
};

/// Random point with standard-normal direction and norm uniform in [0, radius].
[[nodiscard]] inline ParameterVector random_point_in_ball(Rng& rng, std::size_t dim, double radius) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ParameterVector v(static_cast<Eigen::Index>(dim));
    for (auto& x : v) {
        x = normal(rng);
    }
    const double norm = v.norm();
    if (norm == 0.0) {
        return v;
    }
    return v * (radius * unit(rng) / norm);
}

/// Largest observed |G(u) - G(v)| / |u - v| for the full-batch gradient step
/// G(w) = w - alpha * grad R_S(w), over random pairs in the unit ball.
template <LossOracle M>
[[nodiscard]] ExpansivityProbe probe_expansivity(const M& model, const Dataset& data, double alpha,
                                                 double beta_hat, std::size_t num_pairs, std::uint64_t seed,
                                                 double radius = 1.0) {
    detail::require(num_pairs >= 1, "probe_expansivity: num_pairs must be >= 1");
    detail::require(alpha > 0.0, "probe_expansivity: alpha must be positive");
    Rng rng = make_rng(seed, Stream::Probe);
    const std::size_t dim = model.param_dim();
    const auto samples = data.samples();

    ExpansivityProbe probe{alpha, beta_hat, num_pairs, 0.0, is_convex(model)};
    for (std::size_t p = 0; p < num_pairs; ++p) {
        const ParameterVector u = random_point_in_ball(rng, dim, radius);
        const ParameterVector v = random_point_in_ball(rng, dim, radius);
        const double gap = (u - v).norm();
        if (gap == 0.0) {
            continue;
        }
        const ParameterVector gu = u - alpha * grad_batch(model, u, samples);
        const ParameterVector gv = v - alpha * grad_batch(model, v, samples);
        probe.max_ratio = std::max(probe.max_ratio, (gu - gv).norm() / gap);
    }
    return probe;
}

// ---------------------------------------------------------------------------
// Last-iterate vs window-mean distance along twin trajectories
// ---------------------------------------------------------------------------

struct WindowDistanceCheck {
    double last_distance = 0.0; // |w_T - w'_T|
    double mean_distance = 0.0; // (1/k) sum_{i=T-k+1..T} |w_i - w'_i|
    double factor = 0.0;        // exp(c * beta * k / T)
    [[nodiscard]] double bound() const { return factor * mean_distance; }
    [[nodiscard]] bool holds(double slack = 1e-8) const { return last_distance <= bound() + slack; }
};

/// Compares |w_T - w'_T| with exp(c beta k / T) times the mean distance over
/// the last k iterates. Needs both full trajectories for the same T.
[[nodiscard]] inline WindowDistanceCheck check_window_distance(const Trajectory& a, const Trajectory& b, double c,
                                                               double beta, std::size_t k) {
    detail::require(a.step_count == b.step_count && a.step_count >= k && k >= 1,
                    "check_window_distance: trajectories must share T >= k");
    const std::size_t T = a.step_count;
    WindowDistanceCheck out;
    out.last_distance = (a.iterate(T) - b.iterate(T)).norm();
    for (std::size_t i = T - k + 1; i <= T; ++i) {
        out.mean_distance += (a.iterate(i) - b.iterate(i)).norm();
    }
    out.mean_distance /= static_cast<double>(k);
    out.factor = std::exp(c * beta * static_cast<double>(k) / static_cast<double>(T));
    return out;
}

} // namespace fwa
