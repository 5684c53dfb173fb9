#pragma once

// Test-only reference computations, kept independent of the library paths they check.

#include <fwa/model.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace fwa::testing {

/// Central finite-difference gradient of a scalar function.
inline Eigen::VectorXd finite_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& w, double h = 1e-6) {
    Eigen::VectorXd g(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        Eigen::VectorXd plus = w;
        Eigen::VectorXd minus = w;
        plus[i] += h;
        minus[i] -= h;
        g[i] = (f(plus) - f(minus)) / (2.0 * h);
    }
    return g;
}

/// Max coordinate relative error with a 1e-3 magnitude floor.
inline double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double scale = std::max({1e-3, std::abs(a[i]), std::abs(b[i])});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

/// Normal-equation least squares via LDLT; a second route next to the library's QR.
inline Eigen::VectorXd normal_equations(const std::vector<Sample>& samples) {
    const auto d = samples.front().features.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d + 1, d + 1);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d + 1);
    for (const Sample& z : samples) {
        Eigen::VectorXd x(d + 1);
        x << z.features, 1.0;
        A += x * x.transpose();
        b += z.target * x;
    }
    return A.ldlt().solve(b);
}

/// Plain mean of a list of vectors.
inline Eigen::VectorXd mean_of(const std::vector<Eigen::VectorXd>& vs) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(vs.front().size());
    for (const auto& v : vs) {
        sum += v;
    }
    return sum / static_cast<double>(vs.size());
}

inline double relative_difference(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = std::max({a.norm(), b.norm(), 1e-300});
    return (a - b).norm() / scale;
}

} // namespace fwa::testing
