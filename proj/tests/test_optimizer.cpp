#include "oracles.hpp"

#include <fwa/bounds.hpp>
#include <fwa/optimizer.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace fwa;
using fwa::testing::mean_of;
using fwa::testing::relative_difference;

namespace {

const Dataset& one_dummy_sample() {
    static const Dataset data(std::vector<Sample>{Sample{Eigen::VectorXd::Zero(1), 0.0}});
    return data;
}

/// f(w) = w^2 / 2 in one dimension.
DiagonalQuadratic unit_quadratic() { return DiagonalQuadratic{Eigen::VectorXd::Ones(1)}; }

RunConfig quadratic_run(std::size_t steps) {
    RunConfig cfg;
    cfg.steps = steps;
    cfg.initial = Eigen::VectorXd::Ones(1);
    return cfg;
}

} // namespace

TEST(SgdStep, QuadraticHandIteration) {
    const auto next = sgd_step(unit_quadratic(), Eigen::VectorXd::Ones(1), one_dummy_sample().samples(), 0.5);
    EXPECT_DOUBLE_EQ(next[0], 0.5);
}

TEST(SgdStep, FixedPointAtMinimizer) {
    for (double alpha : {1e-3, 0.5, 7.0}) {
        EXPECT_EQ(sgd_step(unit_quadratic(), Eigen::VectorXd::Zero(1), one_dummy_sample().samples(), alpha)[0], 0.0);
    }
}

TEST(SgdStep, ProjectsOntoBall) {
    // zero curvature leaves w at (3, 4); projection rescales by 1/5
    const DiagonalQuadratic flat{Eigen::VectorXd::Zero(2)};
    const auto next = sgd_step(flat, Eigen::Vector2d(3, 4), one_dummy_sample().samples(), 0.1, 1.0);
    EXPECT_DOUBLE_EQ(next[0], 0.6);
    EXPECT_DOUBLE_EQ(next[1], 0.8);
}

TEST(SgdStep, RejectsNonPositiveRate) {
    EXPECT_THROW((void)sgd_step(unit_quadratic(), Eigen::VectorXd::Ones(1), one_dummy_sample().samples(), 0.0),
                 ContractViolation);
}

TEST(Train, QuadraticTrajectoryAndTailAverage) {
    const auto lr = LearningRateSchedule::constant(0.5);
    const auto result = train(unit_quadratic(), one_dummy_sample(), lr, quadratic_run(3), AveragingScheme::fwa(2));
    ASSERT_EQ(result.trajectory.iterates.size(), 4u);
    EXPECT_DOUBLE_EQ(result.trajectory.iterate(1)[0], 0.5);
    EXPECT_DOUBLE_EQ(result.trajectory.iterate(2)[0], 0.25);
    EXPECT_DOUBLE_EQ(result.trajectory.iterate(3)[0], 0.125);
    EXPECT_DOUBLE_EQ(result.final_average[0], 0.1875);
}

TEST(Train, SgdSchemeReturnsLastIterate) {
    const auto data = gen_synthetic_regression(3, 50, 0.1, 1).data;
    RunConfig cfg;
    cfg.seed = 4;
    cfg.epochs = 3;
    const auto result = train(LossModel::linear(3), data, LearningRateSchedule::constant(0.05), cfg,
                              AveragingScheme::sgd());
    EXPECT_EQ(result.final_average, result.trajectory.last());
}

TEST(Train, SwaIsMeanOfAllIterates) {
    const auto data = gen_synthetic_regression(3, 50, 0.1, 1).data;
    RunConfig cfg;
    cfg.seed = 5;
    cfg.steps = 137;
    const auto result = train(LossModel::linear(3), data, LearningRateSchedule::inverse_sqrt_t(0.1), cfg,
                              AveragingScheme::swa());
    const auto& it = result.trajectory.iterates;
    const std::vector<Eigen::VectorXd> after_start(it.begin() + 1, it.end());
    EXPECT_LE(relative_difference(result.final_average, mean_of(after_start)), 1e-12);
}

TEST(Train, FinalAverageMatchesCheckpointMask) {
    const auto data = gen_synthetic_regression(2, 30, 0.1, 3).data;
    RunConfig cfg;
    cfg.seed = 8;
    cfg.steps = 60;
    for (const auto& scheme : {AveragingScheme::fwa(7), AveragingScheme::lawa(4, 5), AveragingScheme::weighted({1, 0, 3})}) {
        const auto result = train(LossModel::linear(2), data, LearningRateSchedule::constant(0.05), cfg, scheme);
        const auto mask = checkpoint_mask(scheme, 60);
        const auto direct = average_over_mask(mask, static_cast<double>(scheme.k), result.trajectory.iterates, 0);
        EXPECT_LE(relative_difference(result.final_average, direct), 1e-13) << scheme.label();
    }
}

TEST(Train, LawaWarmupAveragesAvailableCheckpoints) {
    const auto lr = LearningRateSchedule::constant(0.5);
    std::vector<double> averages;
    (void)train(unit_quadratic(), one_dummy_sample(), lr, quadratic_run(6), AveragingScheme::lawa(3, 2),
                [&](const StepRecord& r) { averages.push_back(r.averager->average()[0]); });
    // iterates 2^-t; at t=3 the checkpoints are steps 1 and 3, at t=6 steps 2, 4, 6
    EXPECT_DOUBLE_EQ(averages[2], (0.5 + 0.125) / 2);
    EXPECT_DOUBLE_EQ(averages[5], (0.25 + 0.0625 + 0.015625) / 3);
}

TEST(Train, WindowTooLargeIsConfigError) {
    EXPECT_THROW((void)train(unit_quadratic(), one_dummy_sample(), LearningRateSchedule::constant(0.1),
                             quadratic_run(3), AveragingScheme::fwa(4)),
                 ConfigError);
}

TEST(Train, DivergenceIsNumericErrorWithStep) {
    const auto data = gen_synthetic_regression(2, 20, 0.1, 1).data;
    RunConfig cfg;
    cfg.steps = 5000;
    try {
        (void)train(LossModel::linear(2), data, LearningRateSchedule::constant(50.0), cfg, AveragingScheme::sgd());
        FAIL() << "expected divergence";
    } catch (const NumericError& e) {
        EXPECT_GT(e.step(), 0u);
    }
}

TEST(Train, BitwiseDeterministic) {
    const auto data = gen_synthetic_regression(3, 64, 0.3, 2).data;
    for (Sampling sampling : {Sampling::WithReplacement, Sampling::Permutation}) {
        RunConfig cfg;
        cfg.seed = 77;
        cfg.epochs = 4;
        cfg.batch_size = 5;
        cfg.sampling = sampling;
        const auto model = LossModel::mlp(3, 4);
        const auto a = train(model, data, LearningRateSchedule::constant(0.05), cfg, AveragingScheme::fwa(10));
        const auto b = train(model, data, LearningRateSchedule::constant(0.05), cfg, AveragingScheme::fwa(10));
        EXPECT_EQ(a.trajectory.iterates, b.trajectory.iterates);
        EXPECT_EQ(a.trajectory.losses, b.trajectory.losses);
        EXPECT_EQ(a.final_average, b.final_average);
    }
}

TEST(Train, ProjectionKeepsEveryIterateInsideTheBall) {
    const auto data = gen_synthetic_regression(4, 100, 0.5, 9).data;
    RunConfig cfg;
    cfg.seed = 1;
    cfg.steps = 400;
    cfg.projection_radius = 0.5;
    const auto result = train(LossModel::linear(4), data, LearningRateSchedule::constant(0.1), cfg,
                              AveragingScheme::sgd());
    for (const auto& w : result.trajectory.iterates) {
        EXPECT_LE(w.norm(), 0.5 + 1e-12);
    }
}

TEST(Train, FullBatchDescentIsMonotoneOnNoiselessConvexData) {
    const auto data = gen_synthetic_regression(4, 60, 0.0, 12).data;
    const double beta = closed_form_beta_mse(data);
    RunConfig cfg;
    cfg.batch_size = data.size();
    cfg.steps = 300;
    cfg.sampling = Sampling::Permutation;
    const auto model = LossModel::linear(4);
    const auto result = train(model, data, LearningRateSchedule::constant(1.0 / beta), cfg, AveragingScheme::sgd());
    double previous = mean_loss(model, result.trajectory.iterates.front(), data.samples());
    for (std::size_t t = 1; t < result.trajectory.iterates.size(); ++t) {
        const double current = mean_loss(model, result.trajectory.iterates[t], data.samples());
        EXPECT_LE(current, previous);
        previous = current;
    }
}

TEST(Train, TwinRunsAgreeUntilTheDifferingSampleIsDrawn) {
    const auto base = gen_synthetic_regression(3, 41, 0.2, 4).data;
    const TwinPair twin = make_twin(base, 6);
    RunConfig cfg;
    cfg.seed = 19;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.sampling = Sampling::Permutation;
    const auto model = LossModel::mlp(3, 3);
    std::size_t first_touch = 0;
    std::vector<std::vector<std::size_t>> streams[2];
    auto observe = [&](int run) {
        return [&, run](const StepRecord& r) {
            streams[run].emplace_back(r.indices.begin(), r.indices.end());
            if (run == 0 && first_touch == 0 &&
                std::find(r.indices.begin(), r.indices.end(), twin.differing_index) != r.indices.end()) {
                first_touch = r.step;
            }
        };
    };
    const auto a = train(model, twin.s, LearningRateSchedule::constant(0.1), cfg, AveragingScheme::sgd(), observe(0));
    const auto b = train(model, twin.s_prime, LearningRateSchedule::constant(0.1), cfg, AveragingScheme::sgd(), observe(1));
    EXPECT_EQ(streams[0], streams[1]);
    ASSERT_GT(first_touch, 0u);
    for (std::size_t t = 0; t < first_touch; ++t) {
        EXPECT_EQ(a.trajectory.iterate(t), b.trajectory.iterate(t));
    }
    EXPECT_NE(a.trajectory.iterate(first_touch), b.trajectory.iterate(first_touch));
}

TEST(Train, LongRunsKeepOnlyTheWindow) {
    const auto data = gen_synthetic_regression(2, 10, 0.1, 1).data;
    RunConfig cfg;
    cfg.steps = 500;
    cfg.history_budget = 100;
    const auto result = train(LossModel::linear(2), data, LearningRateSchedule::constant(0.05), cfg,
                              AveragingScheme::fwa(5));
    EXPECT_FALSE(result.trajectory.full_history());
    EXPECT_EQ(result.trajectory.iterates.size(), std::min<std::size_t>(501, result.trajectory.retained_window));
    EXPECT_EQ(result.trajectory.first_iterate_step + result.trajectory.iterates.size() - 1, 500u);
    EXPECT_EQ(result.trajectory.losses.size(), 500u);
}

TEST(Train, PermutationVisitsEverySampleOncePerEpoch) {
    IndexSampler sampler(10, 3, Sampling::Permutation, 5);
    std::vector<std::size_t> seen;
    for (int b = 0; b < 4; ++b) { // 3 + 3 + 3 + 1
        const auto batch = sampler.next();
        seen.insert(seen.end(), batch.begin(), batch.end());
    }
    std::sort(seen.begin(), seen.end());
    std::vector<std::size_t> all(10);
    std::iota(all.begin(), all.end(), std::size_t{0});
    EXPECT_EQ(seen, all);
}

TEST(IncrementalAverage, QuadraticHandComputation) {
    AveragerState state(window_spec(AveragingScheme::fwa(2)));
    const std::vector<Eigen::VectorXd> iterates{Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 0.25)};
    const std::vector<Eigen::VectorXd> updates{Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 0.25)};
    state.warm_start(iterates, updates);
    EXPECT_DOUBLE_EQ(state.current_average()[0], 0.375);
    state = incremental_average_update(state, Eigen::VectorXd::Constant(1, 0.125));
    EXPECT_DOUBLE_EQ(state.current_average()[0], 0.1875);
}

TEST(IncrementalAverage, WindowOfOneIsThePlainStep) {
    AveragerState state(window_spec(AveragingScheme::sgd()));
    const Eigen::VectorXd w0 = Eigen::Vector2d(1.0, 2.0);
    const Eigen::VectorXd w1 = Eigen::Vector2d(0.5, 1.0);
    const Eigen::VectorXd w2 = Eigen::Vector2d(0.2, 0.9);
    state.observe(w0, w1);
    state.observe(w1, w2);
    EXPECT_LE((state.current_average() - w2).norm(), 1e-15);
}

TEST(IncrementalAverage, BeforeWarmupIsContractViolation) {
    AveragerState state(window_spec(AveragingScheme::fwa(3)));
    EXPECT_THROW(state.update(Eigen::VectorXd::Ones(2)), ContractViolation);
    EXPECT_THROW((void)state.current_average(), ContractViolation);
}

TEST(IncrementalAverage, AgreesWithDirectAverageEveryStep) {
    const auto data = gen_synthetic_regression(3, 30, 0.3, 21).data;
    RunConfig cfg;
    cfg.seed = 2;
    cfg.steps = 20;
    const auto scheme = AveragingScheme::fwa(5);
    AveragerState state(window_spec(scheme));
    std::size_t compared = 0;
    (void)train(LossModel::linear(3), data, LearningRateSchedule::inverse_sqrt_t(0.2), cfg, scheme,
                [&](const StepRecord& r) {
                    state.observe(*r.previous, *r.iterate);
                    if (state.warmed()) {
                        EXPECT_LE(relative_difference(state.current_average(), r.averager->average()), 1e-10);
                        ++compared;
                    }
                });
    EXPECT_EQ(compared, 16u);
}

TEST(Export, TrajectoryCsvHasFixedColumns) {
    const auto result = train(unit_quadratic(), one_dummy_sample(), LearningRateSchedule::constant(0.5),
                              quadratic_run(3), AveragingScheme::sgd());
    const auto path = std::filesystem::temp_directory_path() / "fwa_traj.csv";
    write_trajectory_csv(result.trajectory, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "step,train_loss,lr,grad_norm");
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first, "1,0.5,0.5,1");
}
