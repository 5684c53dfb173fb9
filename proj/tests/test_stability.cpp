#include "oracles.hpp"

#include <fwa/bounds.hpp>
#include <fwa/stability.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace fwa;

TEST(ParameterDistance, HandExamples) {
    EXPECT_EQ(parameter_distance(Eigen::Vector2d(3, 4), Eigen::Vector2d(3, 4)), 0.0);
    EXPECT_DOUBLE_EQ(parameter_distance(Eigen::Vector2d(3, 4), Eigen::Vector2d(0, 0)), 1.0);
    EXPECT_DOUBLE_EQ(parameter_distance(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)), 1.0);
    EXPECT_EQ(parameter_distance(Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0)), 0.0);
}

TEST(ParameterDistance, SymmetricAndBounded) {
    Rng rng = make_rng(3, Stream::Probe);
    for (int i = 0; i < 200; ++i) {
        const auto u = random_point_in_ball(rng, 5, 3.0);
        const auto v = random_point_in_ball(rng, 5, 3.0);
        const double d = parameter_distance(u, v);
        EXPECT_EQ(d, parameter_distance(v, u));
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, std::sqrt(2.0) + 1e-15);
        EXPECT_GT(d, 0.0);
    }
}

TEST(ParameterDistance, DimensionMismatch) {
    EXPECT_THROW((void)parameter_distance(Eigen::Vector2d(1, 0), Eigen::Vector3d(1, 0, 0)), ContractViolation);
}

TEST(GeneralizationError, IdenticalSetsGiveZero) {
    const auto data = gen_synthetic_regression(3, 40, 0.2, 1).data;
    EXPECT_EQ(generalization_error(LossModel::linear(3), Eigen::VectorXd::Ones(4), data, data), 0.0);
}

TEST(GeneralizationError, MatchesResummedPerSampleLosses) {
    const auto split = train_test_split(gen_synthetic_regression(4, 90, 0.5, 2).data, 0.3, 7);
    const auto model = LossModel::mlp(4, 3);
    const auto w = initial_parameters(model, 11);
    auto raw_mean = [&](const Dataset& d) {
        double sum = 0.0;
        for (const Sample& z : d.samples()) {
            sum += model.loss(w, z);
        }
        return sum / static_cast<double>(d.size());
    };
    const double expected = std::abs(raw_mean(split.train) - raw_mean(split.test));
    EXPECT_LE(std::abs(generalization_error(model, w, split.train, split.test) - expected), 1e-12);
}

TEST(GeneralizationError, ClassifierUsesMisclassificationRate) {
    // w = 0 predicts 0.5, which rounds to label 1
    const Dataset train(std::vector<Sample>{{Eigen::VectorXd::Ones(1), 1.0}, {Eigen::VectorXd::Ones(1), 1.0}});
    const Dataset test(std::vector<Sample>{{Eigen::VectorXd::Ones(1), 0.0}, {Eigen::VectorXd::Ones(1), 1.0}});
    EXPECT_DOUBLE_EQ(generalization_error(LossModel::logistic(1), Eigen::VectorXd::Zero(2), train, test), 0.5);
}

TEST(GeneralizationError, EmptySplitIsContractViolation) {
    const auto data = gen_synthetic_regression(2, 10, 0.2, 1).data;
    EXPECT_THROW((void)generalization_error(LossModel::linear(2), Eigen::VectorXd::Zero(3), data, Dataset{}),
                 ContractViolation);
}

TEST(StabilityExperiment, IdenticalDatasetsStayAtZeroDistance) {
    const auto data = gen_synthetic_regression(3, 30, 0.2, 5).data;
    const TwinPair same{data, data, 0, data[0]};
    RunConfig cfg;
    cfg.seed = 3;
    cfg.epochs = 4;
    const auto reports = run_stability_experiment(LossModel::linear(3), same, data, LearningRateSchedule::constant(0.05),
                                                  cfg, {AveragingScheme::sgd(), AveragingScheme::fwa(10)});
    for (const auto& r : reports) {
        ASSERT_EQ(r.parameter_distance.size(), 4u);
        for (double d : r.parameter_distance) {
            EXPECT_EQ(d, 0.0);
        }
    }
}

TEST(StabilityExperiment, SeriesHaveOneEntryPerEpochAndStayInRange) {
    const auto split = train_test_split(gen_synthetic_regression(3, 60, 0.3, 6).data, 0.25, 2);
    RunConfig cfg;
    cfg.seed = 9;
    cfg.epochs = 5;
    cfg.batch_size = 3;
    cfg.sampling = Sampling::Permutation;
    const auto reports =
        run_stability_experiment(LossModel::linear(3), split.train, split.test, LearningRateSchedule::constant(0.05),
                                 cfg, {AveragingScheme::sgd(), AveragingScheme::fwa(20), AveragingScheme::swa()});
    ASSERT_EQ(reports.size(), 3u);
    for (const auto& r : reports) {
        EXPECT_EQ(r.parameter_distance.size(), 5u);
        EXPECT_EQ(r.generalization_error.size(), 5u);
        for (double d : r.parameter_distance) {
            EXPECT_GE(d, 0.0);
            EXPECT_LE(d, 1.0);
        }
    }
}

TEST(StabilityExperiment, DistanceIsZeroBeforeTheDifferingSampleIsDrawn) {
    const auto data = gen_synthetic_regression(2, 41, 0.2, 8).data;
    std::size_t late_touches = 0;
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        RunConfig cfg;
        cfg.seed = seed;
        cfg.epochs = 6;
        const auto reports = run_stability_experiment(LossModel::linear(2), data, data,
                                                      LearningRateSchedule::constant(0.05), cfg,
                                                      {AveragingScheme::sgd(), AveragingScheme::fwa(5)});
        for (const auto& r : reports) {
            ASSERT_GT(r.first_touch_step, 0u);
            for (std::size_t e = 0; e < r.parameter_distance.size(); ++e) {
                const std::size_t epoch_end = (e + 1) * 40;
                if (epoch_end < r.first_touch_step) {
                    EXPECT_EQ(r.parameter_distance[e], 0.0);
                    ++late_touches;
                } else {
                    EXPECT_GT(r.parameter_distance[e], 0.0);
                }
            }
        }
    }
    EXPECT_GT(late_touches, 0u);
}

TEST(Expansivity, QuadraticAtTheBoundaryStepIsAnIsometry) {
    const DiagonalQuadratic q{Eigen::VectorXd::Constant(1, 2.0)};
    const Dataset dummy(std::vector<Sample>{{Eigen::VectorXd::Zero(1), 0.0}});
    const auto probe = probe_expansivity(q, dummy, 1.0, 2.0, 1000, 1);
    EXPECT_NEAR(probe.max_ratio, 1.0, 1e-12);
    EXPECT_TRUE(probe.holds());
}

TEST(Expansivity, QuadraticAtHalfTheBoundaryContractsToAPoint) {
    const DiagonalQuadratic q{Eigen::VectorXd::Constant(1, 2.0)};
    const Dataset dummy(std::vector<Sample>{{Eigen::VectorXd::Zero(1), 0.0}});
    EXPECT_EQ(probe_expansivity(q, dummy, 0.5, 2.0, 1000, 1).max_ratio, 0.0);
}

TEST(Expansivity, ConvexLinearModelIsNonExpansive) {
    const auto data = gen_synthetic_regression(4, 80, 0.3, 3).data;
    const double beta = closed_form_beta_mse(data);
    const auto probe = probe_expansivity(LossModel::linear(4), data, 2.0 / beta, beta, 1000, 4);
    EXPECT_EQ(probe.allowed_ratio(), 1.0);
    EXPECT_TRUE(probe.holds()) << probe.max_ratio;
}

TEST(Expansivity, MlpStaysWithinOnePlusAlphaBeta) {
    const auto data = gen_synthetic_regression(3, 50, 0.3, 4).data;
    const auto model = LossModel::mlp(3, 5);
    const double beta_hat = empirical_beta(model, data, 1.0, 1000, 5);
    for (double alpha : {0.01, 0.1, 1.0}) {
        const auto probe = probe_expansivity(model, data, alpha, beta_hat, 1000, 6);
        EXPECT_FALSE(probe.convex);
        EXPECT_TRUE(probe.holds()) << probe.max_ratio << " vs " << probe.allowed_ratio();
    }
}

TEST(WindowDistance, HoldsWhenTheDifferingSampleIsOutsideTheWindow) {
    const auto base = gen_synthetic_regression(3, 61, 0.3, 10).data;
    const auto model = LossModel::mlp(3, 4);
    const double beta_hat = empirical_beta(model, base, 3.0, 2000, 2);
    const double c = 2.0;
    const std::size_t T = 300;
    const std::size_t k = 30;
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const TwinPair twin = make_twin(base, seed);
        RunConfig cfg;
        cfg.seed = seed;
        cfg.steps = T;
        std::size_t last_touch = 0;
        const auto lr = LearningRateSchedule::constant(c / static_cast<double>(T));
        const auto a = train(model, twin.s, lr, cfg, AveragingScheme::sgd(), [&](const StepRecord& r) {
            if (std::find(r.indices.begin(), r.indices.end(), twin.differing_index) != r.indices.end()) {
                last_touch = r.step;
            }
        });
        const auto b = train(model, twin.s_prime, lr, cfg, AveragingScheme::sgd());
        if (last_touch > T - k) {
            continue;
        }
        const auto check = check_window_distance(a.trajectory, b.trajectory, c, beta_hat, k);
        EXPECT_TRUE(check.holds()) << check.last_distance << " > " << check.bound();
        ++checked;
    }
    EXPECT_GT(checked, 5u);
}
