#pragma once

#include <fwa/errors.hpp>
#include <fwa/rng.hpp>

#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fwa {

/// Flat model weights. The bias (when a model has one) is the last coordinate.
using ParameterVector = Eigen::VectorXd;

struct Sample {
    Eigen::VectorXd features;
    double target = 0.0;

    friend bool operator==(const Sample& a, const Sample& b) {
        return a.target == b.target && a.features.size() == b.features.size() &&
               a.features == b.features;
    }
};

[[nodiscard]] inline bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

/// Squared error (y_hat - y)^2 of an affine predictor w . (x, 1).
struct LinearRegressionMSE {
    std::size_t input_dim = 1;

    [[nodiscard]] std::size_t param_dim() const { return input_dim + 1; }
    [[nodiscard]] static constexpr bool convex() { return true; }
    [[nodiscard]] static constexpr bool classifier() { return false; }

    [[nodiscard]] double predict(const ParameterVector& w, const Eigen::VectorXd& x) const {
        return w.head(input_dim).dot(x) + w[static_cast<Eigen::Index>(input_dim)];
    }

    [[nodiscard]] double loss(const ParameterVector& w, const Sample& z) const {
        const double r = predict(w, z.features) - z.target;
        return r * r;
    }

    [[nodiscard]] ParameterVector gradient(const ParameterVector& w, const Sample& z) const {
        const double scale = 2.0 * (predict(w, z.features) - z.target);
        ParameterVector g(param_dim());
        g.head(input_dim) = scale * z.features;
        g[static_cast<Eigen::Index>(input_dim)] = scale;
        return g;
    }
};

/// Cross-entropy of a logistic predictor; targets are labels in {0, 1}.
struct LogisticRegression {
    std::size_t input_dim = 1;

    [[nodiscard]] std::size_t param_dim() const { return input_dim + 1; }
    [[nodiscard]] static constexpr bool convex() { return true; }
    [[nodiscard]] static constexpr bool classifier() { return true; }

    [[nodiscard]] double logit(const ParameterVector& w, const Eigen::VectorXd& x) const {
        return w.head(input_dim).dot(x) + w[static_cast<Eigen::Index>(input_dim)];
    }

    [[nodiscard]] double predict(const ParameterVector& w, const Eigen::VectorXd& x) const {
        return 1.0 / (1.0 + std::exp(-logit(w, x)));
    }

    [[nodiscard]] double loss(const ParameterVector& w, const Sample& z) const {
        const double s = logit(w, z.features);
        // log(1 + e^s) - y s, evaluated without overflow
        const double softplus = s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
        return softplus - z.target * s;
    }

    [[nodiscard]] ParameterVector gradient(const ParameterVector& w, const Sample& z) const {
        const double scale = predict(w, z.features) - z.target;
        ParameterVector g(param_dim());
        g.head(input_dim) = scale * z.features;
        g[static_cast<Eigen::Index>(input_dim)] = scale;
        return g;
    }
};

/// One tanh hidden layer with a scalar linear head, trained on squared error.
///
/// Parameter layout: hidden weights (row-major, hidden x input), hidden
/// biases, output weights, output bias.
struct TinyMLP {
    std::size_t input_dim = 1;
    std::size_t hidden = 8;

    [[nodiscard]] std::size_t param_dim() const { return (input_dim + 1) * hidden + hidden + 1; }
    [[nodiscard]] static constexpr bool convex() { return false; }
    [[nodiscard]] static constexpr bool classifier() { return false; }

    struct Activations {
        Eigen::VectorXd hidden;
        double output = 0.0;
    };

    [[nodiscard]] Activations forward(const ParameterVector& w, const Eigen::VectorXd& x) const {
        const auto in = static_cast<Eigen::Index>(input_dim);
        const auto h = static_cast<Eigen::Index>(hidden);
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            weights(w.data(), h, in);
        Activations act;
        act.hidden = (weights * x + w.segment(h * in, h)).array().tanh().matrix();
        act.output = w.segment(h * in + h, h).dot(act.hidden) + w[h * in + 2 * h];
        return act;
    }

    [[nodiscard]] double predict(const ParameterVector& w, const Eigen::VectorXd& x) const {
        return forward(w, x).output;
    }

    [[nodiscard]] double loss(const ParameterVector& w, const Sample& z) const {
        const double r = predict(w, z.features) - z.target;
        return r * r;
    }

    [[nodiscard]] ParameterVector gradient(const ParameterVector& w, const Sample& z) const {
        const auto in = static_cast<Eigen::Index>(input_dim);
        const auto h = static_cast<Eigen::Index>(hidden);
        const Activations act = forward(w, z.features);
        const double r = 2.0 * (act.output - z.target);

        ParameterVector g(param_dim());
        const Eigen::VectorXd out_weights = w.segment(h * in + h, h);
        const Eigen::VectorXd delta =
            (r * out_weights.array() * (1.0 - act.hidden.array().square())).matrix();
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> dweights(
            g.data(), h, in);
        dweights.noalias() = delta * z.features.transpose();
        g.segment(h * in, h) = delta;
        g.segment(h * in + h, h) = r * act.hidden;
        g[h * in + 2 * h] = r;
        return g;
    }
};

/// Separable convex quadratic 0.5 * sum_i h_i w_i^2 that ignores the sample.
/// Smoothness is max_i h_i; it is the reference map for expansivity probes.
struct DiagonalQuadratic {
    Eigen::VectorXd curvature;

    [[nodiscard]] std::size_t param_dim() const { return static_cast<std::size_t>(curvature.size()); }
    [[nodiscard]] static constexpr bool convex() { return true; }
    [[nodiscard]] static constexpr bool classifier() { return false; }
    [[nodiscard]] double smoothness() const { return curvature.maxCoeff(); }

    [[nodiscard]] double loss(const ParameterVector& w, const Sample&) const {
        return 0.5 * (curvature.array() * w.array().square()).sum();
    }

    [[nodiscard]] ParameterVector gradient(const ParameterVector& w, const Sample&) const {
        return (curvature.array() * w.array()).matrix();
    }
};

/// Anything that can score and differentiate a parameter vector on one sample.
template <typename M>
concept LossOracle = requires(const M& m, const ParameterVector& w, const Sample& z) {
    { m.param_dim() } -> std::convertible_to<std::size_t>;
    { m.loss(w, z) } -> std::convertible_to<double>;
    { m.gradient(w, z) } -> std::same_as<ParameterVector>;
};

/// The closed set of models the experiments run on.
class LossModel {
public:
    using Variant = std::variant<LinearRegressionMSE, LogisticRegression, TinyMLP>;

    LossModel(LinearRegressionMSE m) : impl_(m) {}
    LossModel(LogisticRegression m) : impl_(m) {}
    LossModel(TinyMLP m) : impl_(m) {}

    [[nodiscard]] static LossModel linear(std::size_t input_dim) { return LinearRegressionMSE{input_dim}; }
    [[nodiscard]] static LossModel logistic(std::size_t input_dim) { return LogisticRegression{input_dim}; }
    [[nodiscard]] static LossModel mlp(std::size_t input_dim, std::size_t hidden) {
        return TinyMLP{input_dim, hidden};
    }

    [[nodiscard]] const Variant& variant() const { return impl_; }

    [[nodiscard]] std::size_t input_dim() const {
        return std::visit([](const auto& m) { return m.input_dim; }, impl_);
    }
    [[nodiscard]] std::size_t param_dim() const {
        return std::visit([](const auto& m) { return m.param_dim(); }, impl_);
    }
    [[nodiscard]] bool is_convex() const {
        return std::visit([](const auto& m) { return m.convex(); }, impl_);
    }
    [[nodiscard]] bool is_classifier() const {
        return std::visit([](const auto& m) { return m.classifier(); }, impl_);
    }
    [[nodiscard]] double predict(const ParameterVector& w, const Eigen::VectorXd& x) const {
        return std::visit([&](const auto& m) { return m.predict(w, x); }, impl_);
    }
    [[nodiscard]] double loss(const ParameterVector& w, const Sample& z) const {
        return std::visit([&](const auto& m) { return m.loss(w, z); }, impl_);
    }
    [[nodiscard]] ParameterVector gradient(const ParameterVector& w, const Sample& z) const {
        return std::visit([&](const auto& m) { return m.gradient(w, z); }, impl_);
    }

    [[nodiscard]] std::string name() const {
        return std::visit(
            [](const auto& m) -> std::string {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, LinearRegressionMSE>) {
                    return "linear";
                } else if constexpr (std::is_same_v<M, LogisticRegression>) {
                    return "logistic";
                } else {
                    return "mlp";
                }
            },
            impl_);
    }

private:
    Variant impl_;
};

/// Whether the oracle is convex in w. Oracles that do not say are treated as non-convex.
template <LossOracle M>
[[nodiscard]] bool is_convex(const M& model) {
    if constexpr (requires { model.is_convex(); }) {
        return model.is_convex();
    } else if constexpr (requires { M::convex(); }) {
        return M::convex();
    } else {
        return false;
    }
}

namespace detail {

template <LossOracle M>
std::size_t expected_input_dim(const M& model) {
    if constexpr (requires { model.input_dim(); }) {
        return model.input_dim();
    } else if constexpr (requires { model.input_dim; }) {
        return model.input_dim;
    } else {
        return 0; // oracle ignores features
    }
}

template <LossOracle M>
void check_arguments(const M& model, const ParameterVector& w, const Sample& z) {
    if (static_cast<std::size_t>(w.size()) != model.param_dim()) {
        throw ContractViolation("parameter dimension " + std::to_string(w.size()) +
                                " does not match model dimension " +
                                std::to_string(model.param_dim()));
    }
    const std::size_t in = expected_input_dim(model);
    if (in != 0 && static_cast<std::size_t>(z.features.size()) != in) {
        throw ContractViolation("sample has " + std::to_string(z.features.size()) +
                                " features, model expects " + std::to_string(in));
    }
    if (!all_finite(w)) {
        throw NumericError("non-finite parameter vector");
    }
    if (!all_finite(z.features) || !std::isfinite(z.target)) {
        throw NumericError("non-finite sample");
    }
}

} // namespace detail

/// F(w; z).
template <LossOracle M>
[[nodiscard]] double loss(const M& model, const ParameterVector& w, const Sample& z) {
    detail::check_arguments(model, w, z);
    const double value = model.loss(w, z);
    if (!std::isfinite(value)) {
        throw NumericError("non-finite loss");
    }
    return value;
}

/// Analytic gradient of F(w; z) with respect to w.
template <LossOracle M>
[[nodiscard]] ParameterVector grad_sample(const M& model, const ParameterVector& w, const Sample& z) {
    detail::check_arguments(model, w, z);
    return model.gradient(w, z);
}

/// Mean per-sample gradient over a batch given by indices into `samples`.
template <LossOracle M>
[[nodiscard]] ParameterVector grad_batch(const M& model, const ParameterVector& w,
                                         std::span<const Sample> samples,
                                         std::span<const std::size_t> indices) {
    detail::require(!indices.empty(), "grad_batch: empty batch");
    ParameterVector sum = ParameterVector::Zero(static_cast<Eigen::Index>(model.param_dim()));
    for (const std::size_t i : indices) {
        detail::require(i < samples.size(), "grad_batch: sample index out of range");
        sum += grad_sample(model, w, samples[i]);
    }
    return sum / static_cast<double>(indices.size());
}

/// Mean per-sample gradient over a whole batch.
template <LossOracle M>
[[nodiscard]] ParameterVector grad_batch(const M& model, const ParameterVector& w,
                                         std::span<const Sample> batch) {
    detail::require(!batch.empty(), "grad_batch: empty batch");
    ParameterVector sum = ParameterVector::Zero(static_cast<Eigen::Index>(model.param_dim()));
    for (const Sample& z : batch) {
        sum += grad_sample(model, w, z);
    }
    return sum / static_cast<double>(batch.size());
}

/// Mean loss over a batch (the empirical risk when the batch is the dataset).
template <LossOracle M>
[[nodiscard]] double mean_loss(const M& model, const ParameterVector& w, std::span<const Sample> batch) {
    detail::require(!batch.empty(), "mean_loss: empty batch");
    double sum = 0.0;
    for (const Sample& z : batch) {
        sum += loss(model, w, z);
    }
    return sum / static_cast<double>(batch.size());
}

/// Starting point w_0. Convex models start at zero; the MLP gets a seeded
/// draw with entries N(0, 1/fan_in) so the hidden units are not symmetric.
[[nodiscard]] inline ParameterVector initial_parameters(const LossModel& model, std::uint64_t seed) {
    ParameterVector w = ParameterVector::Zero(static_cast<Eigen::Index>(model.param_dim()));
    if (const auto* mlp = std::get_if<TinyMLP>(&model.variant())) {
        Rng rng = make_rng(seed, Stream::Init);
        const auto in = static_cast<Eigen::Index>(mlp->input_dim);
        const auto h = static_cast<Eigen::Index>(mlp->hidden);
        std::normal_distribution<double> first(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
        std::normal_distribution<double> second(0.0, 1.0 / std::sqrt(static_cast<double>(h)));
        for (Eigen::Index i = 0; i < h * in; ++i) {
            w[i] = first(rng);
        }
        for (Eigen::Index i = 0; i < h; ++i) {
            w[h * in + h + i] = second(rng);
        }
    }
    return w;
}

} // namespace fwa
