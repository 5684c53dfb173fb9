#pragma once

#include <fwa/bounds.hpp>
#include <fwa/config.hpp>
#include <fwa/data.hpp>
#include <fwa/optimizer.hpp>
#include <fwa/stability.hpp>

#include <algorithm>
#include <atomic>
#include <concepts>
#include <deque>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fwa {

/// What a subcommand produced. `exit_code` is non-zero only when an enabled
/// ordering assertion failed.
struct ExperimentOutcome {
    int exit_code = 0;
    std::vector<std::string> messages;
    std::vector<std::filesystem::path> files;
};

// ---------------------------------------------------------------------------
// Plumbing
// ---------------------------------------------------------------------------

/// Runs body(0..count-1) on up to `workers` threads. The first exception is
/// rethrown after every worker has stopped.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        const std::lock_guard lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                        next = count;
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

namespace detail {

/// Small CSV builder with shortest round-trip number formatting.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    /// Wraps a text cell in double quotes when it holds a comma, quote or newline.
    [[nodiscard]] static std::string quoted(const std::string& text) {
        if (text.find_first_of(",\"\n") == std::string::npos) {
            return text;
        }
        std::string out = "\"";
        for (char ch : text) {
            out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        }
        return out + "\"";
    }

    class Row {
    public:
        Row& operator<<(double v) { return cell(format_double(v)); }
        template <std::unsigned_integral U>
        Row& operator<<(U v) {
            return cell(std::to_string(v));
        }
        Row& operator<<(int v) { return cell(std::to_string(v)); }
        Row& operator<<(bool v) { return cell(v ? "true" : "false"); }
        Row& operator<<(const std::string& v) { return cell(quoted(v)); }
        Row& operator<<(const char* v) { return cell(quoted(v)); }

    private:
        friend class CsvTable;
        explicit Row(std::string& line) : line_(line) {}
        Row& cell(const std::string& text) {
            line_ += (first_ ? "" : ",") + text;
            first_ = false;
            return *this;
        }
        std::string& line_;
        bool first_ = true;
    };

    Row row() {
        lines_.emplace_back();
        return Row(lines_.back());
    }
    void append(const CsvTable& other) { lines_.insert(lines_.end(), other.lines_.begin(), other.lines_.end()); }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw IoError("cannot write " + path.string());
        }
        for (std::size_t i = 0; i < header_.size(); ++i) {
            out << (i ? "," : "") << header_[i];
        }
        out << '\n';
        for (const auto& line : lines_) {
            out << line << '\n';
        }
        if (!out) {
            throw IoError("write failed for " + path.string());
        }
    }

private:
    std::vector<std::string> header_;
    std::deque<std::string> lines_; // stable references while a Row is alive
};

inline std::filesystem::path prepare_output_dir(const ExperimentConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec || !std::filesystem::is_directory(cfg.output_dir)) {
        throw IoError("cannot create output directory " + cfg.output_dir.string());
    }
    return cfg.output_dir;
}

/// Effective window length reported in CSVs: SWA averages all T iterates.
inline std::size_t reported_k(const AveragingScheme& scheme, std::size_t T) {
    return scheme.kind == AveragingKind::SWA ? T : scheme.k;
}

inline Json constants_json(const ProblemConstants& c) {
    Json j;
    j["L"] = c.L;
    j["beta"] = c.beta;
    j["G"] = c.G;
    j["D"] = c.D;
    j["n"] = c.n;
    j["source"] = c.source == ConstantsSource::ClosedForm ? "closed_form" : "empirical";
    return j;
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& cfg,
                           Json extra, ExperimentOutcome& outcome) {
    Json manifest;
    manifest["command"] = command;
    manifest["config"] = cfg.resolved;
    for (auto& [key, value] : extra.items()) {
        manifest[key] = value;
    }
    Json files = Json::array();
    for (const auto& f : outcome.files) {
        files.push_back(f.filename().string());
    }
    manifest["outputs"] = files;
    const auto path = dir / "run.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << manifest.dump(2) << '\n';
    outcome.files.push_back(path);
}

/// Train/test split of the configured dataset.
inline TrainTestSplit prepare_data(const ExperimentConfig& cfg) {
    const Dataset full = make_dataset(cfg.data);
    if (full.size() < 4) {
        throw ConfigError("dataset needs at least 4 samples, has " + std::to_string(full.size()));
    }
    return train_test_split(full, cfg.test_fraction, cfg.data.seed);
}

/// Scheme labels ordered by a per-scheme metric, largest first, joined by spaces.
inline std::string order_string(const std::vector<AveragingScheme>& schemes, const std::vector<double>& metric) {
    std::vector<std::size_t> idx(schemes.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return metric[a] > metric[b]; });
    std::string out;
    for (std::size_t i : idx) {
        out += (out.empty() ? "" : " ") + schemes[i].label();
    }
    return out;
}

/// True when every configured chain is non-increasing in `metric`.
inline bool chains_hold(const ExperimentConfig& cfg, const std::vector<double>& metric) {
    auto index_of = [&](const std::string& label) {
        for (std::size_t i = 0; i < cfg.averaging.size(); ++i) {
            if (cfg.averaging[i].label() == label) {
                return i;
            }
        }
        throw ConfigError("assert chain names unknown scheme '" + label + "'");
    };
    std::vector<std::vector<std::size_t>> chains;
    if (cfg.assertion.chains.empty()) {
        std::vector<std::size_t> all(cfg.averaging.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        chains.push_back(all);
    }
    for (const auto& chain : cfg.assertion.chains) {
        std::vector<std::size_t> ids;
        for (const auto& label : chain) {
            ids.push_back(index_of(label));
        }
        chains.push_back(ids);
    }
    for (const auto& chain : chains) {
        for (std::size_t i = 1; i < chain.size(); ++i) {
            if (metric[chain[i - 1]] < metric[chain[i]]) {
                return false;
            }
        }
    }
    return true;
}

inline void apply_assertion(const ExperimentConfig& cfg, const std::vector<bool>& per_seed, const std::string& what,
                            ExperimentOutcome& outcome) {
    if (!cfg.assertion.enabled) {
        return;
    }
    const auto passed = static_cast<std::size_t>(std::count(per_seed.begin(), per_seed.end(), true));
    const bool ok = static_cast<double>(passed) >= cfg.assertion.majority * static_cast<double>(per_seed.size()) - 1e-12;
    outcome.messages.push_back(std::string(ok ? "PASS" : "FAIL") + " " + what + " ordering held in " +
                               std::to_string(passed) + "/" + std::to_string(per_seed.size()) + " seeds");
    if (!ok) {
        outcome.exit_code = 1;
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

[[nodiscard]] inline ExperimentOutcome run_gen_data(const ExperimentConfig& cfg) {
    ExperimentOutcome outcome;
    const auto dir = detail::prepare_output_dir(cfg);
    const Dataset full = make_dataset(cfg.data);
    const auto split = train_test_split(full, cfg.test_fraction, cfg.data.seed);
    save_csv(full, dir / "data.csv", cfg.data.target);
    save_csv(split.train, dir / "train.csv", cfg.data.target);
    save_csv(split.test, dir / "test.csv", cfg.data.target);
    outcome.files = {dir / "data.csv", dir / "train.csv", dir / "test.csv"};
    Json extra;
    extra["samples"] = full.size();
    extra["feature_dim"] = full.feature_dim();
    detail::write_manifest(dir, "gen-data", cfg, extra, outcome);
    outcome.messages.push_back("wrote " + std::to_string(full.size()) + " samples to " + dir.string());
    return outcome;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

[[nodiscard]] inline ExperimentOutcome run_train(const ExperimentConfig& cfg) {
    ExperimentOutcome outcome;
    const auto dir = detail::prepare_output_dir(cfg);
    const auto split = detail::prepare_data(cfg);
    const LossModel model = make_model(cfg.model, split.train.feature_dim());
    const std::size_t T = total_steps(make_run_config(cfg, cfg.seeds.front()), split.train.size());
    const LearningRateSchedule lr = make_schedule(cfg.lr, T);

    const std::size_t schemes = cfg.averaging.size();
    const std::size_t cells = cfg.seeds.size() * schemes;
    std::vector<TrainResult> results(cells);
    std::vector<std::vector<std::pair<std::size_t, ParameterVector>>> snapshots(cells);
    parallel_for(cells, cfg.workers, [&](std::size_t cell) {
        const auto seed = cfg.seeds[cell / schemes];
        const auto& scheme = cfg.averaging[cell % schemes];
        auto& snaps = snapshots[cell];
        StepObserver observer;
        if (cfg.snapshot_every > 0) {
            observer = [&snaps, every = cfg.snapshot_every, T](const StepRecord& r) {
                if (r.step % every == 0 || r.step == T) {
                    snaps.emplace_back(r.step, r.averager->average());
                }
            };
        }
        results[cell] =
            train(model, split.train, lr, make_run_config(cfg, seed, model.param_dim()), scheme, observer);
    });

    detail::CsvTable summary({"scheme", "k", "d", "seed", "steps", "train_loss", "test_loss", "gen_error"});
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const auto seed = cfg.seeds[cell / schemes];
        const auto& scheme = cfg.averaging[cell % schemes];
        const auto& result = results[cell];
        const std::string stem = scheme.label() + "_seed" + std::to_string(seed);
        write_trajectory_csv(result.trajectory, dir / ("trajectory_" + stem + ".csv"));
        outcome.files.push_back(dir / ("trajectory_" + stem + ".csv"));
        if (cfg.snapshot_every > 0) {
            detail::CsvTable snap_table([&] {
                std::vector<std::string> h{"step"};
                for (std::size_t j = 0; j < model.param_dim(); ++j) {
                    h.push_back("w" + std::to_string(j));
                }
                return h;
            }());
            for (const auto& [step, w] : snapshots[cell]) {
                auto row = snap_table.row();
                row << step;
                for (double v : w) {
                    row << v;
                }
            }
            snap_table.write(dir / ("snapshots_" + stem + ".csv"));
            outcome.files.push_back(dir / ("snapshots_" + stem + ".csv"));
        }
        const double train_err = error_measure(model, result.final_average, split.train);
        const double test_err = error_measure(model, result.final_average, split.test);
        summary.row() << scheme.label() << detail::reported_k(scheme, result.steps) << scheme.d << seed
                      << result.steps << train_err << test_err << std::abs(train_err - test_err);
    }
    summary.write(dir / "train_summary.csv");
    outcome.files.push_back(dir / "train_summary.csv");
    Json extra;
    extra["steps"] = T;
    extra["train_size"] = split.train.size();
    extra["test_size"] = split.test.size();
    extra["lr"] = lr.describe();
    detail::write_manifest(dir, "train", cfg, extra, outcome);
    outcome.messages.push_back("trained " + std::to_string(cells) + " runs of " + std::to_string(T) + " steps");
    return outcome;
}

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

[[nodiscard]] inline ExperimentOutcome run_stability(const ExperimentConfig& cfg) {
    ExperimentOutcome outcome;
    const auto dir = detail::prepare_output_dir(cfg);
    const auto split = detail::prepare_data(cfg);
    const LossModel model = make_model(cfg.model, split.train.feature_dim());
    const std::size_t n = split.train.size() - 1; // the twin sets drop one sample
    const std::size_t T = total_steps(make_run_config(cfg, cfg.seeds.front()), n);
    const LearningRateSchedule lr = make_schedule(cfg.lr, T);

    const std::size_t schemes = cfg.averaging.size();
    const std::size_t cells = cfg.seeds.size() * schemes;
    std::vector<StabilityReport> reports(cells);
    parallel_for(cells, cfg.workers, [&](std::size_t cell) {
        const auto seed = cfg.seeds[cell / schemes];
        const auto& scheme = cfg.averaging[cell % schemes];
        const RunConfig run = make_run_config(cfg, seed, model.param_dim());
        reports[cell] = run_stability_experiment(model, split.train, split.test, lr, run, {scheme}).front();
    });

    detail::CsvTable table(
        {"epoch", "scheme", "k", "d", "param_distance", "gen_error", "train_loss", "test_loss", "seed"});
    detail::CsvTable twins({"seed", "scheme", "differing_index", "first_touch_step", "last_iterate_distance"});
    detail::CsvTable summary({"seed", "distance_order", "gen_error_order", "ordering_holds"});
    std::vector<bool> per_seed;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        std::vector<double> final_distance;
        std::vector<double> final_gen;
        for (std::size_t j = 0; j < schemes; ++j) {
            const auto& r = reports[s * schemes + j];
            for (std::size_t e = 0; e < r.parameter_distance.size(); ++e) {
                table.row() << (e + 1) << r.scheme.label() << detail::reported_k(r.scheme, T) << r.scheme.d
                            << r.parameter_distance[e] << r.generalization_error[e] << r.train_loss[e]
                            << r.test_loss[e] << r.seed;
            }
            twins.row() << r.seed << r.scheme.label() << r.differing_index << r.first_touch_step
                        << r.last_iterate_distance.back();
            final_distance.push_back(r.parameter_distance.back());
            final_gen.push_back(r.generalization_error.back());
        }
        const bool by_gen = cfg.assertion.metric == "gen_error";
        const bool holds = detail::chains_hold(cfg, by_gen ? final_gen : final_distance);
        per_seed.push_back(holds);
        summary.row() << cfg.seeds[s] << detail::order_string(cfg.averaging, final_distance)
                      << detail::order_string(cfg.averaging, final_gen) << holds;
    }
    table.write(dir / "stability.csv");
    twins.write(dir / "stability_twins.csv");
    summary.write(dir / "stability_summary.csv");
    outcome.files = {dir / "stability.csv", dir / "stability_twins.csv", dir / "stability_summary.csv"};
    detail::apply_assertion(cfg, per_seed,
                            cfg.assertion.metric == "gen_error" ? "final generalization error"
                                                                : "final parameter distance",
                            outcome);

    Json extra;
    extra["steps"] = T;
    extra["train_size"] = split.train.size();
    extra["test_size"] = split.test.size();
    extra["lr"] = lr.describe();
    if (model.is_convex()) {
        const double beta = model.name() == "linear" ? closed_form_beta_mse(split.train)
                                                     : empirical_beta(model, split.train, 1.0, 1000, cfg.seeds.front());
        extra["beta_hat"] = beta;
        extra["step_condition_met"] = lr.rate_at(1) <= 2.0 / beta;
    }
    detail::write_manifest(dir, "stability", cfg, extra, outcome);
    return outcome;
}

// ---------------------------------------------------------------------------
// convergence
// ---------------------------------------------------------------------------

/// F(w) - F(w*) on a fixed training set. Linear models use the exact quadratic
/// form (w - w*)' A (w - w*), which avoids cancellation near the optimum.
class SuboptimalityOracle {
public:
    SuboptimalityOracle(const LossModel& model, const Dataset& train, ParameterVector w_star)
        : model_(model), train_(train), w_star_(std::move(w_star)) {
        f_star_ = mean_loss(model_, w_star_, train_.samples());
        if (model_.name() == "linear") {
            const auto n = static_cast<Eigen::Index>(train_.size());
            const auto d = static_cast<Eigen::Index>(train_.feature_dim());
            Eigen::MatrixXd X(n, d + 1);
            for (Eigen::Index i = 0; i < n; ++i) {
                X.row(i).head(d) = train_[static_cast<std::size_t>(i)].features.transpose();
                X(i, d) = 1.0;
            }
            gram_ = X.transpose() * X / static_cast<double>(n);
        }
    }

    [[nodiscard]] double operator()(const ParameterVector& w) const {
        if (gram_) {
            const ParameterVector diff = w - w_star_;
            return diff.dot(*gram_ * diff);
        }
        return mean_loss(model_, w, train_.samples()) - f_star_;
    }
    [[nodiscard]] double optimal_loss() const { return f_star_; }
    [[nodiscard]] const ParameterVector& minimizer() const { return w_star_; }

private:
    LossModel model_;
    const Dataset& train_;
    ParameterVector w_star_;
    double f_star_ = 0.0;
    std::optional<Eigen::MatrixXd> gram_;
};

/// Reference minimizer: least squares for linear models, otherwise long
/// full-batch descent (10x the run budget, gradient tolerance 1e-10).
[[nodiscard]] inline ParameterVector reference_minimizer(const LossModel& model, const Dataset& train,
                                                         std::size_t run_steps, std::uint64_t seed) {
    if (model.name() == "linear") {
        return least_squares_minimizer(train);
    }
    const double beta = std::max(empirical_beta(model, train, 2.0, 1000, seed), 1e-12);
    return full_batch_minimizer(model, train, initial_parameters(model, seed), 1.0 / beta, 10 * run_steps, 1e-10);
}

[[nodiscard]] inline ExperimentOutcome run_convergence(const ExperimentConfig& cfg) {
    ExperimentOutcome outcome;
    const auto dir = detail::prepare_output_dir(cfg);
    const auto split = detail::prepare_data(cfg);
    const LossModel model = make_model(cfg.model, split.train.feature_dim());
    const std::size_t T = total_steps(make_run_config(cfg, cfg.seeds.front()), split.train.size());
    const LearningRateSchedule lr = make_schedule(cfg.lr, T);
    const SuboptimalityOracle oracle(model, split.train, reference_minimizer(model, split.train, T, cfg.seeds.front()));

    ExperimentConfig run_cfg = cfg;
    if (cfg.projection_auto) {
        run_cfg.projection_radius = 2.0 * oracle.minimizer().norm() + 1.0;
    }

    const std::size_t schemes = cfg.averaging.size();
    const std::size_t cells = cfg.seeds.size() * schemes;
    std::vector<detail::CsvTable> rows(cells, detail::CsvTable({}));
    std::vector<double> final_sub(cells, 0.0);
    parallel_for(cells, cfg.workers, [&](std::size_t cell) {
        const auto seed = cfg.seeds[cell / schemes];
        const auto& scheme = cfg.averaging[cell % schemes];
        auto& table = rows[cell];
        const std::size_t k = detail::reported_k(scheme, T);
        const RunConfig run = make_run_config(run_cfg, seed, model.param_dim());
        (void)train(model, split.train, lr, run, scheme, [&](const StepRecord& r) {
            if (r.step % cfg.log_every != 0 && r.step != T) {
                return;
            }
            const double sub = oracle(r.averager->average());
            table.row() << r.step << scheme.label() << k << scheme.d << seed << sub << oracle.optimal_loss() + sub;
            if (r.step == T) {
                final_sub[cell] = sub;
            }
        });
    });

    detail::CsvTable table({"step", "scheme", "k", "d", "seed", "suboptimality", "train_loss"});
    for (const auto& part : rows) {
        table.append(part);
    }
    table.write(dir / "convergence.csv");

    ProblemConstants consts;
    bool have_bound = run_cfg.projection_radius.has_value() && model.is_convex();
    if (have_bound) {
        ConstantsOptions options;
        options.projection_radius = run_cfg.projection_radius;
        consts = estimate_constants(model, split.train, *run_cfg.projection_radius, 1000, cfg.seeds.front(), options);
    }
    const auto* sqrt_rate = std::get_if<InverseSqrtTRate>(&lr.variant());
    have_bound = have_bound && sqrt_rate != nullptr;

    detail::CsvTable summary({"seed", "scheme", "k", "d", "final_suboptimality", "rank", "bound"});
    std::vector<bool> per_seed;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        std::vector<double> metric(final_sub.begin() + static_cast<std::ptrdiff_t>(s * schemes),
                                   final_sub.begin() + static_cast<std::ptrdiff_t>((s + 1) * schemes));
        for (std::size_t j = 0; j < schemes; ++j) {
            const auto& scheme = cfg.averaging[j];
            const auto rank = 1 + static_cast<std::size_t>(
                                      std::count_if(metric.begin(), metric.end(), [&](double m) { return m < metric[j]; }));
            std::string bound;
            if (have_bound) {
                try {
                    if (scheme.kind == AveragingKind::SGD) {
                        bound = detail::format_double(bound_convergence_sgd(consts, T, sqrt_rate->c).value);
                    } else if (scheme.kind == AveragingKind::FWA && scheme.uniform()) {
                        bound = detail::format_double(
                            bound_convergence_fwa(consts, T, static_cast<double>(scheme.k), sqrt_rate->c).value);
                    } else if (scheme.kind == AveragingKind::LAWA) {
                        bound = detail::format_double(bound_convergence_lawa(consts, T, static_cast<double>(scheme.k),
                                                                             scheme.d, sqrt_rate->c)
                                                          .value);
                    }
                } catch (const Error& e) {
                    bound = "n/a";
                }
            }
            summary.row() << cfg.seeds[s] << scheme.label() << detail::reported_k(scheme, T) << scheme.d << metric[j]
                          << rank << bound;
        }
        per_seed.push_back(detail::chains_hold(cfg, metric));
    }
    summary.write(dir / "convergence_summary.csv");
    outcome.files = {dir / "convergence.csv", dir / "convergence_summary.csv"};
    detail::apply_assertion(cfg, per_seed, "final suboptimality", outcome);

    Json extra;
    extra["steps"] = T;
    extra["train_size"] = split.train.size();
    extra["lr"] = lr.describe();
    extra["optimal_loss"] = oracle.optimal_loss();
    if (run_cfg.projection_radius) {
        extra["projection_radius"] = *run_cfg.projection_radius;
    }
    if (have_bound) {
        extra["constants"] = detail::constants_json(consts);
    }
    detail::write_manifest(dir, "convergence", cfg, extra, outcome);
    return outcome;
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

/// Constants for the audit: estimated from the configured problem, with any
/// explicitly given value taking precedence.
[[nodiscard]] inline ProblemConstants resolve_constants(const ExperimentConfig& cfg) {
    const auto& b = cfg.bounds;
    ProblemConstants c;
    if (b.estimate) {
        const auto split = detail::prepare_data(cfg);
        const LossModel model = make_model(cfg.model, split.train.feature_dim());
        ConstantsOptions options;
        options.projection_radius = cfg.projection_radius;
        c = estimate_constants(model, split.train, b.probe_radius, b.probes, cfg.seeds.front(), options);
    } else if (!(b.L && b.beta && b.G && b.D && b.n)) {
        throw ConfigError("bounds.constants needs L, beta, G, D and n when bounds.estimate is false");
    }
    c.L = b.L.value_or(c.L);
    c.beta = b.beta.value_or(c.beta);
    c.G = b.G.value_or(c.G);
    c.D = b.D.value_or(c.D);
    c.n = b.n.value_or(c.n);
    if (!(c.L > 0 && c.beta > 0 && c.G > 0 && c.D > 0 && c.n >= 2)) {
        throw ConfigError("bounds constants must be positive with n >= 2");
    }
    return c;
}

[[nodiscard]] inline ExperimentOutcome run_bounds(const ExperimentConfig& cfg) {
    ExperimentOutcome outcome;
    const auto dir = detail::prepare_output_dir(cfg);
    const auto& b = cfg.bounds;
    const ProblemConstants consts = resolve_constants(cfg);

    detail::CsvTable table({"bound", "T", "k", "d", "c", "alpha", "value", "exponent", "order_only",
                            "assumption_violated", "beats_sgd", "label", "status"});
    auto add = [&](BoundName name, double k, std::size_t d, const std::function<BoundResult()>& evaluate) {
        std::string label;
        if (k == 1.0 && d == 1) {
            label = "SGD-equivalent";
        } else if (k == static_cast<double>(b.T) && d == 1) {
            label = "SWA-equivalent";
        }
        auto row = table.row();
        try {
            const BoundResult r = evaluate();
            row << to_string(name) << b.T << r.params.k << d << r.params.c << r.params.alpha << r.value << r.exponent
                << r.order_only << r.assumption_violated
                << (r.beats_sgd ? std::string(*r.beats_sgd ? "true" : "false") : std::string()) << label << "ok";
        } catch (const DomainError& e) {
            row << to_string(name) << b.T << k << d << "" << "" << "" << "" << "" << "" << "" << label
                << std::string("domain_error: ") + e.what();
        } catch (const ConfigError& e) {
            row << to_string(name) << b.T << k << d << "" << "" << "" << "" << "" << "" << "" << label
                << std::string("config_error: ") + e.what();
        }
    };

    for (std::size_t k : b.k) {
        if (k == 0 || k > b.T) {
            throw ConfigError("bounds.k entries must be in [1, T]");
        }
        const double kd = static_cast<double>(k);
        add(BoundName::ConvexConstant, kd, 1, [&] { return bound_convex_constant(consts, b.T, k, b.alpha); });
        add(BoundName::ConvexGeneral, kd, 1, [&] {
            const std::vector<double> rho(k, 1.0);
            return bound_convex_general(consts, b.T, k, rho, LearningRateSchedule::constant(b.alpha));
        });
        add(BoundName::NonconvexConstant, kd, 1, [&] { return bound_nonconvex_constant(consts, b.T, kd, b.c); });
        add(BoundName::NonconvexDecay, kd, 1, [&] { return bound_nonconvex_decay(consts, b.T, kd, b.c); });
        add(BoundName::ConvergenceFWA, kd, 1, [&] { return bound_convergence_fwa(consts, b.T, kd, b.c); });
        add(BoundName::ConvergenceGeneral, kd, 1, [&] {
            const std::vector<double> rho(k, 1.0);
            return bound_convergence_general(consts, b.T, k, rho, LearningRateSchedule::inverse_sqrt_t(b.c));
        });
        for (std::size_t d : b.d) {
            if (d == 0) {
                throw ConfigError("bounds.d entries must be >= 1");
            }
            add(BoundName::ConvergenceLAWA, kd, d, [&] { return bound_convergence_lawa(consts, b.T, kd, d, b.c); });
        }
    }
    for (double k : b.k_real) {
        add(BoundName::NonconvexDecay, k, 1, [&] { return bound_nonconvex_decay(consts, b.T, k, b.c); });
    }
    add(BoundName::ConvergenceSGD, 1.0, 1, [&] { return bound_convergence_sgd(consts, b.T, b.c); });
    table.write(dir / "bounds.csv");

    detail::CsvTable invariants({"invariant", "points", "worst", "tolerance", "passed"});
    bool all_passed = true;
    for (const auto& check : audit_bound_invariants(consts)) {
        invariants.row() << check.name << check.points << check.worst << check.tolerance << check.passed;
        all_passed = all_passed && check.passed;
        outcome.messages.push_back(std::string(check.passed ? "PASS " : "FAIL ") + check.name + " (" +
                                   std::to_string(check.points) + " points)");
    }
    invariants.write(dir / "invariants.csv");
    outcome.files = {dir / "bounds.csv", dir / "invariants.csv"};
    if (cfg.assertion.enabled && !all_passed) {
        outcome.exit_code = 1;
    }
    Json extra;
    extra["constants"] = detail::constants_json(consts);
    detail::write_manifest(dir, "bounds", cfg, extra, outcome);
    return outcome;
}

/// Dispatches a subcommand by name.
[[nodiscard]] inline ExperimentOutcome run_command(const std::string& command, const ExperimentConfig& cfg) {
    if (command == "gen-data") {
        return run_gen_data(cfg);
    }
    if (command == "train") {
        return run_train(cfg);
    }
    if (command == "stability") {
        return run_stability(cfg);
    }
    if (command == "convergence") {
        return run_convergence(cfg);
    }
    if (command == "bounds") {
        return run_bounds(cfg);
    }
    throw ConfigError("unknown command '" + command + "'");
}

} // namespace fwa
