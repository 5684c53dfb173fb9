#pragma once

#include <fwa/data.hpp>
#include <fwa/errors.hpp>
#include <fwa/model.hpp>
#include <fwa/rng.hpp>
#include <fwa/schedules.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace fwa {

enum class Sampling { WithReplacement, Permutation };

struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t epochs = 1;
    std::size_t batch_size = 1;
    /// Explicit step budget; when unset T = epochs * ceil(n / batch_size).
    std::optional<std::size_t> steps;
    Sampling sampling = Sampling::WithReplacement;
    std::optional<double> projection_radius;
    /// w_0; when unset initial_parameters(model, seed) is used.
    std::optional<ParameterVector> initial;
    /// Full trajectories are kept only while (T + 1) * dim stays within this many scalars.
    std::size_t history_budget = 200'000;
};

[[nodiscard]] inline std::size_t steps_per_epoch(std::size_t n, std::size_t batch_size) {
    return (n + batch_size - 1) / batch_size;
}

[[nodiscard]] inline std::size_t total_steps(const RunConfig& cfg, std::size_t n) {
    detail::require(cfg.batch_size >= 1, "batch_size must be >= 1");
    const std::size_t T = cfg.steps ? *cfg.steps : cfg.epochs * steps_per_epoch(n, cfg.batch_size);
    detail::require(T >= 1, "a run needs at least one step");
    return T;
}

/// Draws mini-batch index sets. The stream depends only on (seed, n, batch,
/// scheme), never on sample values, so runs on twin datasets see identical draws.
class IndexSampler {
public:
    IndexSampler(std::size_t n, std::size_t batch_size, Sampling sampling, std::uint64_t seed)
        : n_(n), batch_(batch_size), sampling_(sampling), rng_(make_rng(seed, Stream::Sampling)) {
        detail::require(n >= 1 && batch_size >= 1, "IndexSampler: need n >= 1 and batch_size >= 1");
        order_.resize(n);
    }

    [[nodiscard]] std::vector<std::size_t> next() {
        std::vector<std::size_t> batch;
        if (sampling_ == Sampling::WithReplacement) {
            std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
            batch.resize(batch_);
            for (auto& i : batch) {
                i = pick(rng_);
            }
            return batch;
        }
        if (cursor_ == 0 || cursor_ >= n_) {
            std::iota(order_.begin(), order_.end(), std::size_t{0});
            std::shuffle(order_.begin(), order_.end(), rng_);
            cursor_ = 0;
        }
        const std::size_t end = std::min(n_, cursor_ + batch_);
        batch.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                     order_.begin() + static_cast<std::ptrdiff_t>(end));
        cursor_ = end;
        return batch;
    }

private:
    std::size_t n_;
    std::size_t batch_;
    Sampling sampling_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

/// Rescales w onto the l2 ball of the given radius when it lies outside.
inline void project_onto_ball(ParameterVector& w, double radius) {
    const double norm = w.norm();
    if (norm > radius) {
        w *= radius / norm;
    }
}

/// One step w - alpha * mean gradient over `indices`, then the optional projection.
template <LossOracle M>
[[nodiscard]] ParameterVector sgd_step(const M& model, const ParameterVector& w, std::span<const Sample> samples,
                                       std::span<const std::size_t> indices, double alpha,
                                       std::optional<double> projection_radius, std::size_t step = 0) {
    detail::require(alpha > 0.0, "sgd_step: alpha must be positive");
    const ParameterVector g = grad_batch(model, w, samples, indices);
    if (!all_finite(g)) {
        throw NumericError("non-finite gradient", step);
    }
    ParameterVector next = w - alpha * g;
    if (projection_radius) {
        project_onto_ball(next, *projection_radius);
    }
    return next;
}

template <LossOracle M>
[[nodiscard]] ParameterVector sgd_step(const M& model, const ParameterVector& w, std::span<const Sample> batch,
                                       double alpha, std::optional<double> projection_radius = std::nullopt) {
    std::vector<std::size_t> all(batch.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return sgd_step(model, w, batch, all, alpha, projection_radius);
}

// ---------------------------------------------------------------------------
// Averagers
// ---------------------------------------------------------------------------

/// Direct evaluation of the windowed average from the stored iterates.
///
/// Before the window fills, the available iterates are averaged with the
/// divisor scaled by the share of weight they carry (a plain mean for uniform
/// schemes). SWA keeps a running sum instead of a window.
class DirectAverager {
public:
    explicit DirectAverager(const AveragingScheme& scheme) : swa_(scheme.kind == AveragingKind::SWA) {
        if (!swa_) {
            spec_ = window_spec(scheme);
            total_weight_ = std::accumulate(spec_.weights.begin(), spec_.weights.end(), 0.0);
        }
    }

    void push(const ParameterVector& w) {
        ++count_;
        if (swa_) {
            if (sum_.size() == 0) {
                sum_ = w;
            } else {
                sum_ += w;
            }
            return;
        }
        window_.push_back(w);
        if (window_.size() > spec_.length) {
            window_.pop_front();
        }
    }

    [[nodiscard]] std::size_t count() const noexcept { return count_; }

    [[nodiscard]] ParameterVector average() const {
        detail::require(count_ > 0, "average requested before any iterate was pushed");
        if (swa_) {
            return sum_ / static_cast<double>(count_);
        }
        // window_ holds the newest min(count, length) iterates; align weights at the newest end
        const std::size_t held = window_.size();
        const std::size_t offset = spec_.length - held;
        ParameterVector sum = ParameterVector::Zero(window_.back().size());
        double held_weight = 0.0;
        for (std::size_t j = 0; j < held; ++j) {
            const double weight = spec_.weights[offset + j];
            if (weight != 0.0) {
                sum += weight * window_[j];
                held_weight += weight;
            }
        }
        if (held == spec_.length) {
            return sum / spec_.divisor;
        }
        if (held_weight == 0.0) {
            return window_.back();
        }
        return sum / (spec_.divisor * held_weight / total_weight_);
    }

private:
    bool swa_;
    WindowSpec spec_;
    double total_weight_ = 0.0;
    std::deque<ParameterVector> window_;
    ParameterVector sum_;
    std::size_t count_ = 0;
};

/// Incremental form of the windowed average:
///   avg_T = avg_{T-1} - (1/divisor) * sum_j weight_j * u_{T-length+j},
/// where u_i = w_{i-1} - w_i is the step taken at i (alpha_i * grad without
/// projection). Holds the last `length` steps in a ring buffer.
class AveragerState {
public:
    explicit AveragerState(WindowSpec spec) : spec_(std::move(spec)) {
        detail::require(spec_.length >= 1 && spec_.weights.size() == spec_.length && spec_.divisor > 0.0,
                        "AveragerState: malformed window");
    }

    /// Seeds the state from the first full window: iterates w_1..w_length and
    /// the steps u_1..u_length that produced them.
    void warm_start(std::span<const ParameterVector> iterates, std::span<const ParameterVector> updates) {
        detail::require(iterates.size() == spec_.length && updates.size() == spec_.length,
                        "warm_start needs exactly one window of iterates and updates");
        average_ = ParameterVector::Zero(iterates.front().size());
        for (std::size_t j = 0; j < spec_.length; ++j) {
            average_ += spec_.weights[j] * iterates[j];
        }
        average_ /= spec_.divisor;
        ring_.assign(updates.begin(), updates.end());
        head_ = 0;
        steps_seen_ = spec_.length;
    }

    /// Feeds consecutive iterates during warmup; switches to incremental
    /// updates by itself once a full window has been observed.
    void observe(const ParameterVector& previous, const ParameterVector& current) {
        if (warmed()) {
            update(previous - current);
            return;
        }
        pending_iterates_.push_back(current);
        pending_updates_.push_back(previous - current);
        if (pending_iterates_.size() == spec_.length) {
            warm_start(pending_iterates_, pending_updates_);
            pending_iterates_.clear();
            pending_updates_.clear();
        }
    }

    /// One incremental step with the newest update term u_T.
    void update(const ParameterVector& step_term) {
        detail::require(warmed(), "incremental update before the averaging window is full");
        ring_[head_] = step_term;
        head_ = (head_ + 1) % spec_.length;
        // after the write, head_ points at the oldest entry of the window
        ParameterVector delta = ParameterVector::Zero(step_term.size());
        for (std::size_t j = 0; j < spec_.length; ++j) {
            const double weight = spec_.weights[j];
            if (weight != 0.0) {
                delta += weight * ring_[(head_ + j) % spec_.length];
            }
        }
        average_ -= delta / spec_.divisor;
        ++steps_seen_;
    }

    [[nodiscard]] bool warmed() const noexcept { return steps_seen_ >= spec_.length && !ring_.empty(); }
    [[nodiscard]] std::size_t steps_seen() const noexcept { return steps_seen_ + pending_iterates_.size(); }
    [[nodiscard]] const ParameterVector& current_average() const {
        detail::require(warmed(), "average not available before the window is full");
        return average_;
    }
    [[nodiscard]] const WindowSpec& spec() const noexcept { return spec_; }

private:
    WindowSpec spec_;
    ParameterVector average_;
    std::vector<ParameterVector> ring_;
    std::size_t head_ = 0;
    std::size_t steps_seen_ = 0;
    std::vector<ParameterVector> pending_iterates_;
    std::vector<ParameterVector> pending_updates_;
};

/// Value-style wrapper over AveragerState::update.
[[nodiscard]] inline AveragerState incremental_average_update(AveragerState state, const ParameterVector& step_term) {
    state.update(step_term);
    return state;
}

/// Direct weighted average of stored iterates over an explicit checkpoint mask.
/// `iterates[i]` must hold w_{first_step + i}.
[[nodiscard]] inline ParameterVector average_over_mask(std::span<const Checkpoint> mask, double divisor,
                                                       std::span<const ParameterVector> iterates,
                                                       std::size_t first_step) {
    detail::require(!mask.empty() && divisor > 0.0, "average_over_mask: empty mask");
    ParameterVector sum = ParameterVector::Zero(iterates.front().size());
    for (const Checkpoint& c : mask) {
        detail::require(c.step >= first_step && c.step - first_step < iterates.size(),
                        "average_over_mask: checkpoint outside the stored iterates");
        sum += c.weight * iterates[c.step - first_step];
    }
    return sum / divisor;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// Iterates (all of them, or a trailing window) plus per-step scalar logs.
struct Trajectory {
    std::vector<ParameterVector> iterates;
    std::size_t first_iterate_step = 0; // iterates[i] is w_{first_iterate_step + i}
    std::vector<double> losses;         // mini-batch loss at w_{t-1}, t = 1..T
    std::vector<double> rates;
    std::vector<double> grad_norms;
    std::size_t step_count = 0;
    std::size_t retained_window = 0; // 0 when the full history is kept

    [[nodiscard]] bool full_history() const noexcept { return retained_window == 0; }
    [[nodiscard]] const ParameterVector& iterate(std::size_t step) const {
        detail::require(step >= first_iterate_step && step - first_iterate_step < iterates.size(),
                        "iterate not retained");
        return iterates[step - first_iterate_step];
    }
    [[nodiscard]] const ParameterVector& last() const { return iterates.back(); }
};

struct StepRecord {
    std::size_t step = 0;
    const ParameterVector* iterate = nullptr;
    const ParameterVector* previous = nullptr;
    const DirectAverager* averager = nullptr;
    std::span<const std::size_t> indices;
    double rate = 0.0;
    double batch_loss = 0.0;
    double grad_norm = 0.0;
    std::size_t steps_per_epoch = 1;

    [[nodiscard]] bool epoch_end() const { return step % steps_per_epoch == 0; }
    [[nodiscard]] std::size_t epoch() const { return step / steps_per_epoch; }
};

using StepObserver = std::function<void(const StepRecord&)>;

struct TrainResult {
    Trajectory trajectory;
    ParameterVector final_average;
    std::size_t steps = 0;
};

/// Runs T seeded SGD steps and returns the trajectory together with the
/// scheme's average at step T. Bitwise deterministic given the config.
template <LossOracle M>
[[nodiscard]] TrainResult train(const M& model, const Dataset& data, const LearningRateSchedule& lr,
                                const RunConfig& cfg, const AveragingScheme& scheme,
                                const StepObserver& observer = {}) {
    detail::require(!data.empty(), "train: dataset is empty");
    const std::size_t T = total_steps(cfg, data.size());
    if (T < scheme.min_steps()) {
        throw ConfigError(scheme.label() + " needs at least " + std::to_string(scheme.min_steps()) +
                          " steps, run has " + std::to_string(T));
    }
    const std::size_t dim = model.param_dim();

    ParameterVector w;
    if (cfg.initial) {
        w = *cfg.initial;
    } else if constexpr (std::is_same_v<M, LossModel>) {
        w = initial_parameters(model, cfg.seed);
    } else {
        w = ParameterVector::Zero(static_cast<Eigen::Index>(dim));
    }
    detail::require(static_cast<std::size_t>(w.size()) == dim, "train: initial point has the wrong dimension");
    if (cfg.projection_radius) {
        detail::require(*cfg.projection_radius > 0.0, "projection radius must be positive");
        project_onto_ball(w, *cfg.projection_radius);
    }

    TrainResult result;
    result.steps = T;
    Trajectory& traj = result.trajectory;
    const bool keep_all = (T + 1) * dim <= cfg.history_budget;
    const std::size_t window =
        scheme.kind == AveragingKind::SWA ? 1 : window_spec(scheme).length;
    traj.retained_window = keep_all ? 0 : window + 1;
    traj.iterates.push_back(w);
    traj.losses.reserve(T);
    traj.rates.reserve(T);
    traj.grad_norms.reserve(T);

    DirectAverager averager(scheme);
    IndexSampler sampler(data.size(), cfg.batch_size, cfg.sampling, cfg.seed);
    const std::size_t per_epoch = steps_per_epoch(data.size(), cfg.batch_size);
    const auto samples = data.samples();

    ParameterVector previous;
    for (std::size_t t = 1; t <= T; ++t) {
        const std::vector<std::size_t> indices = sampler.next();
        const double alpha = lr.rate_at(t);

        double batch_loss = 0.0;
        ParameterVector g;
        try {
            for (const std::size_t i : indices) {
                batch_loss += loss(model, w, samples[i]);
            }
            g = grad_batch(model, w, samples, indices);
        } catch (const NumericError& e) {
            throw NumericError(e.what(), t);
        }
        batch_loss /= static_cast<double>(indices.size());
        if (!all_finite(g)) {
            throw NumericError("non-finite gradient", t);
        }
        previous = w;
        w -= alpha * g;
        if (cfg.projection_radius) {
            project_onto_ball(w, *cfg.projection_radius);
        }
        if (!all_finite(w)) {
            throw NumericError("iterate diverged", t);
        }

        traj.losses.push_back(batch_loss);
        traj.rates.push_back(alpha);
        traj.grad_norms.push_back(g.norm());
        traj.iterates.push_back(w);
        if (!keep_all && traj.iterates.size() > traj.retained_window) {
            traj.iterates.erase(traj.iterates.begin());
            ++traj.first_iterate_step;
        }
        averager.push(w);

        if (observer) {
            observer(StepRecord{t, &w, &previous, &averager, indices, alpha, batch_loss, g.norm(), per_epoch});
        }
    }
    traj.step_count = T;
    result.final_average = averager.average();
    return result;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// Columns: step, train_loss, lr, grad_norm.
inline void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "step,train_loss,lr,grad_norm\n";
    for (std::size_t t = 0; t < traj.step_count; ++t) {
        out << (t + 1) << ',' << detail::format_double(traj.losses[t]) << ','
            << detail::format_double(traj.rates[t]) << ',' << detail::format_double(traj.grad_norms[t]) << '\n';
    }
}

/// One row per retained iterate: step, then the weights.
inline void write_snapshots_csv(const Trajectory& traj, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    const auto dim = traj.iterates.empty() ? Eigen::Index{0} : traj.iterates.front().size();
    out << "step";
    for (Eigen::Index j = 0; j < dim; ++j) {
        out << ",w" << j;
    }
    out << '\n';
    for (std::size_t i = 0; i < traj.iterates.size(); ++i) {
        out << traj.first_iterate_step + i;
        for (Eigen::Index j = 0; j < dim; ++j) {
            out << ',' << detail::format_double(traj.iterates[i][j]);
        }
        out << '\n';
    }
}

} // namespace fwa
