#pragma once

#include <fwa/errors.hpp>
#include <fwa/model.hpp>
#include <fwa/rng.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace fwa {

class Dataset {
public:
    Dataset() = default;

    Dataset(std::vector<Sample> samples, std::size_t feature_dim)
        : samples_(std::move(samples)), feature_dim_(feature_dim) {
        for (const Sample& z : samples_) {
            detail::require(static_cast<std::size_t>(z.features.size()) == feature_dim_,
                            "dataset: samples must share one feature dimension");
        }
    }

    /// Feature dimension taken from the first sample.
    explicit Dataset(std::vector<Sample> samples) {
        const std::size_t dim = samples.empty() ? 0 : static_cast<std::size_t>(samples.front().features.size());
        *this = Dataset(std::move(samples), dim);
    }

    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
    [[nodiscard]] std::size_t feature_dim() const noexcept { return feature_dim_; }
    [[nodiscard]] std::span<const Sample> samples() const noexcept { return samples_; }
    [[nodiscard]] const Sample& operator[](std::size_t i) const { return samples_.at(i); }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<Sample> samples_;
    std::size_t feature_dim_ = 0;
};

/// Two datasets of equal size that differ in exactly one position.
struct TwinPair {
    Dataset s;
    Dataset s_prime;
    std::size_t differing_index = 0;
    Sample removed; // the sample dropped from the base set and planted into s_prime
};

struct SyntheticRegression {
    Dataset data;
    Eigen::VectorXd true_weights;
    double true_bias = 0.0;
};

struct TrainTestSplit {
    Dataset train;
    Dataset test;
};

/// Divides x by its l1 norm; zero rows stay zero.
[[nodiscard]] inline Eigen::VectorXd l1_normalized(const Eigen::VectorXd& x) {
    const double norm = x.lpNorm<1>();
    return norm > 0.0 ? Eigen::VectorXd(x / norm) : x;
}

[[nodiscard]] inline Dataset l1_normalize(const Dataset& data) {
    std::vector<Sample> out(data.samples().begin(), data.samples().end());
    for (Sample& z : out) {
        z.features = l1_normalized(z.features);
    }
    return Dataset(std::move(out), data.feature_dim());
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, result.ptr);
}

} // namespace detail

/// Reads a numeric CSV with a header row. Every column except `target_column`
/// becomes a feature, in file order.
[[nodiscard]] inline Dataset load_csv(const std::filesystem::path& path, const std::string& target_column,
                                      bool l1_normalize_rows) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("missing header in " + path.string(), 1, 0);
    }
    const auto header = detail::split_commas(line);
    const auto target_it = std::find(header.begin(), header.end(), target_column);
    if (target_it == header.end()) {
        throw ConfigError("target column '" + target_column + "' not found in " + path.string());
    }
    const auto target_pos = static_cast<std::size_t>(target_it - header.begin());
    const std::size_t feature_dim = header.size() - 1;

    std::vector<Sample> samples;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto cells = detail::split_commas(line);
        if (cells.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()),
                             row, 0);
        }
        Sample z{Eigen::VectorXd(static_cast<Eigen::Index>(feature_dim)), 0.0};
        Eigen::Index next = 0;
        for (std::size_t col = 0; col < cells.size(); ++col) {
            double value = 0.0;
            const auto cell = cells[col];
            const auto result = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (cell.empty() || result.ec != std::errc{} || result.ptr != cell.data() + cell.size() ||
                !std::isfinite(value)) {
                throw ParseError("non-numeric cell '" + std::string(cell) + "'", row, col + 1);
            }
            if (col == target_pos) {
                z.target = value;
            } else {
                z.features[next++] = value;
            }
        }
        if (l1_normalize_rows) {
            z.features = l1_normalized(z.features);
        }
        samples.push_back(std::move(z));
    }
    return Dataset(std::move(samples), feature_dim);
}

/// Writes columns x0..x{d-1} followed by the target column.
inline void save_csv(const Dataset& data, const std::filesystem::path& path,
                     const std::string& target_column = "y") {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    for (std::size_t j = 0; j < data.feature_dim(); ++j) {
        out << 'x' << j << ',';
    }
    out << target_column << '\n';
    for (const Sample& z : data.samples()) {
        for (Eigen::Index j = 0; j < z.features.size(); ++j) {
            out << detail::format_double(z.features[j]) << ',';
        }
        out << detail::format_double(z.target) << '\n';
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

/// Features uniform on [-1, 1]^dim, target <w*, x> + b* + N(0, noise_std^2).
///
/// With `l1_normalize_rows` the features are normalized before the target is
/// computed, so the linear ground truth still holds exactly.
/// Uniform draws features from [-1, 1]; Sign keeps only the sign of that draw.
enum class FeatureDistribution { Uniform, Sign };

[[nodiscard]] inline SyntheticRegression gen_synthetic_regression(
    std::size_t dim, std::size_t n, double noise_std, std::uint64_t seed, bool l1_normalize_rows = false,
    FeatureDistribution features = FeatureDistribution::Uniform) {
    detail::require(dim >= 1, "gen_synthetic_regression: dim must be >= 1");
    detail::require(n >= 2, "gen_synthetic_regression: n must be >= 2");
    detail::require(noise_std >= 0.0, "gen_synthetic_regression: noise_std must be >= 0");

    Rng rng = make_rng(seed, Stream::Data);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    SyntheticRegression out;
    out.true_weights.resize(static_cast<Eigen::Index>(dim));
    for (auto& v : out.true_weights) {
        v = normal(rng);
    }
    out.true_bias = normal(rng);

    std::vector<Sample> samples(n);
    for (Sample& z : samples) {
        z.features.resize(static_cast<Eigen::Index>(dim));
        for (auto& v : z.features) {
            v = uniform(rng);
            if (features == FeatureDistribution::Sign) {
                v = v >= 0.0 ? 1.0 : -1.0;
            }
        }
        if (l1_normalize_rows) {
            z.features = l1_normalized(z.features);
        }
        z.target = out.true_weights.dot(z.features) + out.true_bias;
        if (noise_std > 0.0) {
            z.target += noise_std * normal(rng);
        }
    }
    out.data = Dataset(std::move(samples), dim);
    return out;
}

/// Binary labels drawn from a logistic ground truth with uniform features.
[[nodiscard]] inline Dataset gen_synthetic_classification(std::size_t dim, std::size_t n, std::uint64_t seed) {
    detail::require(dim >= 1 && n >= 2, "gen_synthetic_classification: need dim >= 1 and n >= 2");
    Rng rng = make_rng(seed, Stream::Data);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Eigen::VectorXd w(static_cast<Eigen::Index>(dim));
    for (auto& v : w) {
        v = normal(rng);
    }
    std::vector<Sample> samples(n);
    for (Sample& z : samples) {
        z.features.resize(static_cast<Eigen::Index>(dim));
        for (auto& v : z.features) {
            v = uniform(rng);
        }
        const double p = 1.0 / (1.0 + std::exp(-w.dot(z.features)));
        z.target = unit(rng) < p ? 1.0 : 0.0;
    }
    return Dataset(std::move(samples), dim);
}

/// Seeded shuffle, then the first (1 - test_fraction) share becomes the training set.
[[nodiscard]] inline TrainTestSplit train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
    detail::require(test_fraction > 0.0 && test_fraction < 1.0, "train_test_split: fraction must be in (0, 1)");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed, Stream::Split);
    std::shuffle(order.begin(), order.end(), rng);

    const auto test_n = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(data.size())));
    detail::require(test_n >= 1 && test_n < data.size(), "train_test_split: both parts must be non-empty");
    std::vector<Sample> train;
    std::vector<Sample> test;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < data.size() - test_n ? train : test).push_back(data[order[i]]);
    }
    return {Dataset(std::move(train), data.feature_dim()), Dataset(std::move(test), data.feature_dim())};
}

/// Removes one random sample from `base` to form S, then plants it over a
/// random position of S to form S'.
[[nodiscard]] inline TwinPair make_twin(const Dataset& base, std::uint64_t seed) {
    detail::require(base.size() >= 2, "make_twin: base dataset needs at least 2 samples");
    Rng rng = make_rng(seed, Stream::Twin);

    std::uniform_int_distribution<std::size_t> pick_removed(0, base.size() - 1);
    const std::size_t removed_at = pick_removed(rng);

    std::vector<Sample> s;
    s.reserve(base.size() - 1);
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (i != removed_at) {
            s.push_back(base[i]);
        }
    }
    const Sample removed = base[removed_at];
    detail::require(std::any_of(s.begin(), s.end(), [&](const Sample& z) { return !(z == removed); }),
                    "make_twin: every remaining sample equals the removed one");

    // S' must actually differ from S, so skip positions holding a copy of the removed sample.
    std::uniform_int_distribution<std::size_t> pick_slot(0, s.size() - 1);
    std::size_t slot = pick_slot(rng);
    while (s[slot] == removed) {
        slot = pick_slot(rng);
    }
    std::vector<Sample> s_prime = s;
    s_prime[slot] = removed;

    const std::size_t dim = base.feature_dim();
    return TwinPair{Dataset(std::move(s), dim), Dataset(std::move(s_prime), dim), slot, removed};
}

} // namespace fwa
