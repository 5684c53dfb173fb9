#pragma once

#include <fwa/data.hpp>
#include <fwa/errors.hpp>
#include <fwa/model.hpp>
#include <fwa/optimizer.hpp>
#include <fwa/schedules.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace fwa {

using Json = nlohmann::ordered_json;

struct ModelSpec {
    std::string kind = "linear"; // linear | logistic | mlp
    std::size_t hidden = 16;
};

struct DataSpec {
    std::string source = "synthetic"; // synthetic | csv
    std::string path;
    std::string target = "y";
    bool l1_normalize = false;
    std::string features = "uniform"; // uniform | sign (synthetic regression only)
    std::string task = "regression"; // regression | classification (synthetic only)
    std::size_t dim = 8;
    std::size_t n = 500;
    double noise = 0.1;
    std::uint64_t seed = 1;
};

struct LrSpec {
    std::string kind = "constant"; // constant | inverse_t | inverse_sqrt_t | step_decay
    double alpha = 0.01;
    double c = 1.0;
    double start = 0.4;
    double end = 0.2;
    std::size_t stages = 4;
};

/// Grid and constants for the `bounds` subcommand.
struct BoundsSpec {
    std::size_t T = 10000;
    std::vector<std::size_t> k{1, 10, 100};
    std::vector<std::size_t> d{1, 5, 10};
    std::vector<double> k_real{1.2}; // for the decaying non-convex exponent
    double c = 0.5;
    double alpha = 0.01;
    bool estimate = true;
    std::size_t probes = 1000;
    double probe_radius = 1.0;
    std::optional<double> L, beta, G, D;
    std::optional<std::size_t> n;
};

/// Ordering checks evaluated by the sweep commands. Each chain lists scheme
/// labels whose final metric must be non-increasing from left to right; a
/// seed passes when every chain holds, and the assertion passes when at
/// least `majority` of the seeds pass.
struct AssertSpec {
    bool enabled = false;
    double majority = 0.8;
    std::vector<std::vector<std::string>> chains; // empty: the listed scheme order
    /// Stability only: which final metric the chains compare.
    std::string metric = "param_distance"; // param_distance | gen_error
};

/// Everything one CLI invocation needs, after file values and overrides are merged.
struct ExperimentConfig {
    ModelSpec model;
    DataSpec data;
    double test_fraction = 0.2;
    LrSpec lr;
    std::vector<AveragingScheme> averaging{AveragingScheme::sgd()};
    std::vector<std::uint64_t> seeds{1};
    std::size_t epochs = 1;
    std::size_t batch_size = 1;
    std::optional<std::size_t> steps;
    Sampling sampling = Sampling::WithReplacement;
    /// A number, or "auto" (2 |w*| + 1 around the reference minimizer).
    std::optional<double> projection_radius;
    bool projection_auto = false;
    /// w_0 filled with this value; unset uses the seeded default initializer.
    std::optional<double> init;
    std::filesystem::path output_dir = "out";
    std::size_t workers = 1;
    std::size_t log_every = 1;
    std::size_t snapshot_every = 0;
    AssertSpec assertion;
    BoundsSpec bounds;
    /// The merged document, echoed into run.json.
    Json resolved;
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

/// Turns a byte offset into a 1-based (line, column) pair and the line's text.
inline std::tuple<std::size_t, std::size_t, std::string> locate(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    std::size_t line = 1;
    std::size_t line_start = 0;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            line_start = i + 1;
        }
    }
    const std::size_t line_end = text.find('\n', line_start);
    std::string content = text.substr(line_start, line_end == std::string::npos ? std::string::npos : line_end - line_start);
    return {line, byte - line_start + 1, content};
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // e.byte points one past the offending character
        const auto [line, column, content] = locate(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ParseError(origin + ": invalid JSON near '" + content + "'", line, column);
    }
}

template <class T>
T field(const Json& obj, const std::string& key, const std::string& path, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + path + key + "' has the wrong type: " + obj.at(key).dump());
    }
}

inline void reject_unknown(const Json& obj, const std::set<std::string>& known, const std::string& path) {
    if (!obj.is_object()) {
        throw ConfigError("config section '" + path + "' must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown config key '" + path + key + "'");
        }
    }
}

inline void require_one_of(const std::string& value, const std::set<std::string>& allowed, const std::string& key) {
    if (!allowed.contains(value)) {
        std::string list;
        for (const auto& a : allowed) {
            list += (list.empty() ? "" : ", ") + a;
        }
        throw ConfigError("config key '" + key + "' must be one of {" + list + "}, got '" + value + "'");
    }
}

inline AveragingScheme parse_scheme(const Json& j, std::size_t index) {
    const std::string path = "averaging[" + std::to_string(index) + "].";
    if (j.is_string()) {
        const auto kind = j.get<std::string>();
        if (kind == "sgd") {
            return AveragingScheme::sgd();
        }
        if (kind == "swa") {
            return AveragingScheme::swa();
        }
        throw ConfigError("config key '" + path + "kind' needs an object form for '" + kind + "'");
    }
    reject_unknown(j, {"kind", "k", "d", "rho"}, path);
    const auto kind = field<std::string>(j, "kind", path, "");
    require_one_of(kind, {"sgd", "fwa", "lawa", "swa", "weighted"}, path + "kind");
    try {
        if (kind == "sgd") {
            return AveragingScheme::sgd();
        }
        if (kind == "swa") {
            return AveragingScheme::swa();
        }
        if (kind == "fwa") {
            return AveragingScheme::fwa(field<std::size_t>(j, "k", path, 0));
        }
        if (kind == "lawa") {
            return AveragingScheme::lawa(field<std::size_t>(j, "k", path, 0), field<std::size_t>(j, "d", path, 1));
        }
        return AveragingScheme::weighted(field<std::vector<double>>(j, "rho", path, {}));
    } catch (const ContractViolation& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// Sets `root` at a dotted path, creating objects along the way. The value is
/// read as JSON when it parses, otherwise as a plain string.
inline void apply_override(Json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' must look like key.path=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
        value = raw;
    }
    Json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) {
            throw ConfigError("override '" + assignment + "' has an empty key segment");
        }
        if (!node->is_object()) {
            *node = Json::object();
        }
        node = &(*node)[part];
        if (dot == std::string::npos) {
            break;
        }
        start = dot + 1;
    }
    *node = std::move(value);
}

} // namespace detail

/// The fully resolved config, defaults included, in the same layout the parser reads.
[[nodiscard]] inline Json config_to_json(const ExperimentConfig& cfg) {
    Json j;
    j["model"] = {{"kind", cfg.model.kind}, {"hidden", cfg.model.hidden}};
    const auto& d = cfg.data;
    j["data"] = {{"source", d.source}, {"path", d.path},   {"target", d.target}, {"l1_normalize", d.l1_normalize},
                 {"features", d.features}, {"task", d.task},     {"dim", d.dim},     {"n", d.n},           {"noise", d.noise},
                 {"seed", d.seed}};
    j["test_fraction"] = cfg.test_fraction;
    const auto& l = cfg.lr;
    j["lr"] = {{"kind", l.kind}, {"alpha", l.alpha}, {"c", l.c},
               {"start", l.start}, {"end", l.end}, {"stages", l.stages}};
    Json schemes = Json::array();
    for (const auto& s : cfg.averaging) {
        Json e;
        switch (s.kind) {
        case AveragingKind::SGD: e["kind"] = "sgd"; break;
        case AveragingKind::SWA: e["kind"] = "swa"; break;
        case AveragingKind::LAWA:
            e["kind"] = "lawa";
            e["k"] = s.k;
            e["d"] = s.d;
            break;
        case AveragingKind::FWA:
            if (s.uniform()) {
                e["kind"] = "fwa";
                e["k"] = s.k;
            } else {
                e["kind"] = "weighted";
                e["rho"] = s.rho;
            }
            break;
        }
        schemes.push_back(e);
    }
    j["averaging"] = schemes;
    j["seeds"] = cfg.seeds;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["steps"] = cfg.steps ? Json(*cfg.steps) : Json(nullptr);
    j["sampling"] = cfg.sampling == Sampling::Permutation ? "permutation" : "with_replacement";
    j["projection_radius"] = cfg.projection_auto     ? Json("auto")
                             : cfg.projection_radius ? Json(*cfg.projection_radius)
                                                     : Json(nullptr);
    j["init"] = cfg.init ? Json(*cfg.init) : Json("default");
    j["output_dir"] = cfg.output_dir.string();
    j["workers"] = cfg.workers;
    j["log_every"] = cfg.log_every;
    j["snapshot_every"] = cfg.snapshot_every;
    j["assert"] = {{"enabled", cfg.assertion.enabled},
                   {"majority", cfg.assertion.majority},
                   {"chains", cfg.assertion.chains},
                   {"metric", cfg.assertion.metric}};
    const auto& b = cfg.bounds;
    Json bounds = {{"T", b.T}, {"k", b.k}, {"d", b.d}, {"k_real", b.k_real}, {"c", b.c}, {"alpha", b.alpha},
                   {"estimate", b.estimate}, {"probes", b.probes}, {"probe_radius", b.probe_radius}};
    Json constants = Json::object();
    if (b.L) constants["L"] = *b.L;
    if (b.beta) constants["beta"] = *b.beta;
    if (b.G) constants["G"] = *b.G;
    if (b.D) constants["D"] = *b.D;
    if (b.n) constants["n"] = *b.n;
    bounds["constants"] = constants;
    j["bounds"] = bounds;
    return j;
}

/// Builds a config from a JSON document. Unknown keys are rejected so typos
/// surface instead of silently falling back to defaults.
[[nodiscard]] inline ExperimentConfig config_from_json(const Json& root) {
    using detail::field;
    detail::reject_unknown(root,
                           {"model", "data", "test_fraction", "lr", "averaging", "seeds", "epochs", "batch_size",
                            "steps", "sampling", "projection_radius", "init", "output_dir", "workers", "log_every",
                            "snapshot_every", "assert", "bounds"},
                           "");
    ExperimentConfig cfg;

    if (root.contains("model")) {
        const Json& m = root.at("model");
        detail::reject_unknown(m, {"kind", "hidden"}, "model.");
        cfg.model.kind = field<std::string>(m, "kind", "model.", cfg.model.kind);
        cfg.model.hidden = field<std::size_t>(m, "hidden", "model.", cfg.model.hidden);
        detail::require_one_of(cfg.model.kind, {"linear", "logistic", "mlp"}, "model.kind");
    }
    if (root.contains("data")) {
        const Json& d = root.at("data");
        detail::reject_unknown(d, {"source", "path", "target", "l1_normalize", "features", "task", "dim", "n", "noise", "seed"},
                               "data.");
        auto& s = cfg.data;
        s.source = field<std::string>(d, "source", "data.", s.source);
        s.path = field<std::string>(d, "path", "data.", s.path);
        s.target = field<std::string>(d, "target", "data.", s.target);
        s.l1_normalize = field<bool>(d, "l1_normalize", "data.", s.l1_normalize);
        s.features = field<std::string>(d, "features", "data.", s.features);
        s.task = field<std::string>(d, "task", "data.", s.task);
        s.dim = field<std::size_t>(d, "dim", "data.", s.dim);
        s.n = field<std::size_t>(d, "n", "data.", s.n);
        s.noise = field<double>(d, "noise", "data.", s.noise);
        s.seed = field<std::uint64_t>(d, "seed", "data.", s.seed);
        detail::require_one_of(s.source, {"synthetic", "csv"}, "data.source");
        detail::require_one_of(s.features, {"uniform", "sign"}, "data.features");
        detail::require_one_of(s.task, {"regression", "classification"}, "data.task");
        if (s.source == "csv" && s.path.empty()) {
            throw ConfigError("config key 'data.path' is required when data.source is csv");
        }
    }
    cfg.test_fraction = field<double>(root, "test_fraction", "", cfg.test_fraction);
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
        throw ConfigError("config key 'test_fraction' must be in (0, 1)");
    }
    if (root.contains("lr")) {
        const Json& l = root.at("lr");
        detail::reject_unknown(l, {"kind", "alpha", "c", "start", "end", "stages"}, "lr.");
        auto& s = cfg.lr;
        s.kind = field<std::string>(l, "kind", "lr.", s.kind);
        s.alpha = field<double>(l, "alpha", "lr.", s.alpha);
        s.c = field<double>(l, "c", "lr.", s.c);
        s.start = field<double>(l, "start", "lr.", s.start);
        s.end = field<double>(l, "end", "lr.", s.end);
        s.stages = field<std::size_t>(l, "stages", "lr.", s.stages);
        detail::require_one_of(s.kind, {"constant", "inverse_t", "inverse_sqrt_t", "step_decay"}, "lr.kind");
    }
    if (root.contains("averaging")) {
        const Json& a = root.at("averaging");
        if (!a.is_array() || a.empty()) {
            throw ConfigError("config key 'averaging' must be a non-empty list");
        }
        cfg.averaging.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            cfg.averaging.push_back(detail::parse_scheme(a[i], i));
        }
    }
    cfg.seeds = field<std::vector<std::uint64_t>>(root, "seeds", "", cfg.seeds);
    if (cfg.seeds.empty()) {
        throw ConfigError("config key 'seeds' must list at least one seed");
    }
    cfg.epochs = field<std::size_t>(root, "epochs", "", cfg.epochs);
    cfg.batch_size = field<std::size_t>(root, "batch_size", "", cfg.batch_size);
    if (root.contains("steps") && !root.at("steps").is_null()) {
        cfg.steps = field<std::size_t>(root, "steps", "", 0);
    }
    const auto sampling = field<std::string>(root, "sampling", "", "with_replacement");
    detail::require_one_of(sampling, {"with_replacement", "permutation"}, "sampling");
    cfg.sampling = sampling == "permutation" ? Sampling::Permutation : Sampling::WithReplacement;
    if (root.contains("projection_radius") && !root.at("projection_radius").is_null()) {
        const Json& r = root.at("projection_radius");
        if (r.is_string() && r.get<std::string>() == "auto") {
            cfg.projection_auto = true;
        } else if (r.is_number() && r.get<double>() > 0.0) {
            cfg.projection_radius = r.get<double>();
        } else {
            throw ConfigError("config key 'projection_radius' must be a positive number or \"auto\"");
        }
    }
    if (root.contains("init") && !root.at("init").is_null()) {
        const Json& w0 = root.at("init");
        if (w0.is_number()) {
            cfg.init = w0.get<double>();
        } else if (!(w0.is_string() && w0.get<std::string>() == "default")) {
            throw ConfigError("config key 'init' must be a number or \"default\"");
        }
    }
    cfg.output_dir = field<std::string>(root, "output_dir", "", cfg.output_dir.string());
    cfg.workers = std::max<std::size_t>(1, field<std::size_t>(root, "workers", "", cfg.workers));
    cfg.log_every = std::max<std::size_t>(1, field<std::size_t>(root, "log_every", "", cfg.log_every));
    cfg.snapshot_every = field<std::size_t>(root, "snapshot_every", "", cfg.snapshot_every);
    if (root.contains("assert")) {
        const Json& a = root.at("assert");
        if (a.is_boolean()) {
            cfg.assertion.enabled = a.get<bool>();
        } else {
            detail::reject_unknown(a, {"enabled", "majority", "chains", "metric"}, "assert.");
            cfg.assertion.enabled = field<bool>(a, "enabled", "assert.", true);
            cfg.assertion.majority = field<double>(a, "majority", "assert.", cfg.assertion.majority);
            cfg.assertion.chains =
                field<std::vector<std::vector<std::string>>>(a, "chains", "assert.", cfg.assertion.chains);
            cfg.assertion.metric = field<std::string>(a, "metric", "assert.", cfg.assertion.metric);
            detail::require_one_of(cfg.assertion.metric, {"param_distance", "gen_error"}, "assert.metric");
        }
        if (!(cfg.assertion.majority > 0.0 && cfg.assertion.majority <= 1.0)) {
            throw ConfigError("config key 'assert.majority' must be in (0, 1]");
        }
    }

    if (root.contains("bounds")) {
        const Json& b = root.at("bounds");
        detail::reject_unknown(
            b, {"T", "k", "d", "k_real", "c", "alpha", "estimate", "probes", "probe_radius", "constants"}, "bounds.");
        auto& s = cfg.bounds;
        s.T = field<std::size_t>(b, "T", "bounds.", s.T);
        s.k = field<std::vector<std::size_t>>(b, "k", "bounds.", s.k);
        s.d = field<std::vector<std::size_t>>(b, "d", "bounds.", s.d);
        s.k_real = field<std::vector<double>>(b, "k_real", "bounds.", s.k_real);
        s.c = field<double>(b, "c", "bounds.", s.c);
        s.alpha = field<double>(b, "alpha", "bounds.", s.alpha);
        s.estimate = field<bool>(b, "estimate", "bounds.", s.estimate);
        s.probes = field<std::size_t>(b, "probes", "bounds.", s.probes);
        s.probe_radius = field<double>(b, "probe_radius", "bounds.", s.probe_radius);
        if (b.contains("constants")) {
            const Json& c = b.at("constants");
            detail::reject_unknown(c, {"L", "beta", "G", "D", "n"}, "bounds.constants.");
            auto opt = [&](const char* key) -> std::optional<double> {
                if (!c.contains(key)) {
                    return std::nullopt;
                }
                return field<double>(c, key, "bounds.constants.", 0.0);
            };
            s.L = opt("L");
            s.beta = opt("beta");
            s.G = opt("G");
            s.D = opt("D");
            if (c.contains("n")) {
                s.n = field<std::size_t>(c, "n", "bounds.constants.", 0);
            }
        }
    }
    cfg.resolved = config_to_json(cfg);
    return cfg;
}

/// Reads a JSON config file, applies `key.path=value` overrides, then parses.
[[nodiscard]] inline ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                                                  const std::vector<std::string>& overrides = {}) {
    Json root = Json::object();
    if (path) {
        std::ifstream in(*path);
        if (!in) {
            throw IoError("cannot open config " + path->string());
        }
        std::stringstream buffer;
        buffer << in.rdbuf();
        root = detail::parse_json_text(buffer.str(), path->string());
    }
    for (const auto& o : overrides) {
        detail::apply_override(root, o);
    }
    return config_from_json(root);
}

// ---------------------------------------------------------------------------
// Config to library objects
// ---------------------------------------------------------------------------

[[nodiscard]] inline LossModel make_model(const ModelSpec& spec, std::size_t input_dim) {
    if (spec.kind == "logistic") {
        return LossModel::logistic(input_dim);
    }
    if (spec.kind == "mlp") {
        return LossModel::mlp(input_dim, spec.hidden);
    }
    return LossModel::linear(input_dim);
}

/// `horizon` is the run length in steps; only the staircase decay uses it.
[[nodiscard]] inline LearningRateSchedule make_schedule(const LrSpec& spec, std::size_t horizon) {
    try {
        if (spec.kind == "inverse_t") {
            return LearningRateSchedule::inverse_t(spec.c);
        }
        if (spec.kind == "inverse_sqrt_t") {
            return LearningRateSchedule::inverse_sqrt_t(spec.c);
        }
        if (spec.kind == "step_decay") {
            return LearningRateSchedule::step_decay(spec.start, spec.end, spec.stages, horizon);
        }
        return LearningRateSchedule::constant(spec.alpha);
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("lr: ") + e.what());
    }
}

/// Loads or generates the full dataset described by `spec`.
[[nodiscard]] inline Dataset make_dataset(const DataSpec& spec) {
    if (spec.source == "csv") {
        return load_csv(spec.path, spec.target, spec.l1_normalize);
    }
    try {
        if (spec.task == "classification") {
            const Dataset raw = gen_synthetic_classification(spec.dim, spec.n, spec.seed);
            return spec.l1_normalize ? l1_normalize(raw) : raw;
        }
        return gen_synthetic_regression(spec.dim, spec.n, spec.noise, spec.seed, spec.l1_normalize,
                                        spec.features == "sign" ? FeatureDistribution::Sign
                                                                : FeatureDistribution::Uniform)
            .data;
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("data: ") + e.what());
    }
}

/// Run settings shared by every cell of a sweep, for one seed.
[[nodiscard]] inline RunConfig make_run_config(const ExperimentConfig& cfg, std::uint64_t seed,
                                               std::size_t param_dim = 0) {
    RunConfig run;
    run.seed = seed;
    run.epochs = cfg.epochs;
    run.batch_size = cfg.batch_size;
    run.steps = cfg.steps;
    run.sampling = cfg.sampling;
    run.projection_radius = cfg.projection_radius;
    if (cfg.init && param_dim > 0) {
        run.initial = ParameterVector::Constant(static_cast<Eigen::Index>(param_dim), *cfg.init);
    }
    return run;
}

} // namespace fwa
