#include <fwa/data.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace fwa;

namespace {

std::filesystem::path write_file(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << content;
    return path;
}

bool sample_less(const Sample& a, const Sample& b) {
    if (a.target != b.target) {
        return a.target < b.target;
    }
    return std::lexicographical_compare(a.features.begin(), a.features.end(), b.features.begin(), b.features.end());
}

} // namespace

TEST(L1Normalize, DividesByAbsoluteSum) {
    const Eigen::VectorXd x = l1_normalized(Eigen::Vector3d(1.0, -1.0, 2.0));
    EXPECT_EQ(x, Eigen::Vector3d(0.25, -0.25, 0.5));
}

TEST(L1Normalize, ZeroRowUnchanged) {
    EXPECT_EQ(l1_normalized(Eigen::Vector3d::Zero()), Eigen::Vector3d::Zero());
}

TEST(L1Normalize, Idempotent) {
    const auto data = gen_synthetic_regression(7, 100, 0.0, 3).data;
    const Dataset once = l1_normalize(data);
    const Dataset twice = l1_normalize(once);
    for (std::size_t i = 0; i < once.size(); ++i) {
        EXPECT_LE((once[i].features - twice[i].features).lpNorm<Eigen::Infinity>(), 1e-15);
    }
}

TEST(LoadCsv, ReadsRowsInOrderAndNormalizes) {
    const auto path = write_file("fwa_three_rows.csv", "a,b,y,c\n1,-1,7,2\n0,0,8,0\n3, 1 ,9,0\n");
    const Dataset raw = load_csv(path, "y", false);
    ASSERT_EQ(raw.size(), 3u);
    EXPECT_EQ(raw.feature_dim(), 3u);
    EXPECT_EQ(raw[0].target, 7.0);
    EXPECT_EQ(raw[2].target, 9.0);
    EXPECT_EQ(raw[2].features, Eigen::Vector3d(3, 1, 0));

    const Dataset normalized = load_csv(path, "y", true);
    EXPECT_EQ(normalized[0].features, Eigen::Vector3d(0.25, -0.25, 0.5));
    EXPECT_EQ(normalized[1].features, Eigen::Vector3d::Zero());
}

TEST(LoadCsv, Errors) {
    EXPECT_THROW((void)load_csv("/nonexistent/fwa.csv", "y", false), IoError);
    const auto bad = write_file("fwa_bad_cell.csv", "x,y\n1,2\n3,abc\n");
    try {
        (void)load_csv(bad, "y", false);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 3u);
        EXPECT_EQ(e.column(), 2u);
    }
    const auto missing = write_file("fwa_no_target.csv", "x,z\n1,2\n");
    EXPECT_THROW((void)load_csv(missing, "y", false), ConfigError);
}

TEST(LoadCsv, SaveRoundTripIsExact) {
    const auto data = gen_synthetic_regression(4, 30, 0.2, 17).data;
    const auto path = std::filesystem::temp_directory_path() / "fwa_roundtrip.csv";
    save_csv(data, path);
    EXPECT_EQ(load_csv(path, "y", false), data);
}

TEST(Synthetic, DeterministicGivenSeed) {
    const auto a = gen_synthetic_regression(5, 50, 0.1, 42);
    const auto b = gen_synthetic_regression(5, 50, 0.1, 42);
    EXPECT_EQ(a.data, b.data);
    EXPECT_EQ(a.true_weights, b.true_weights);
    EXPECT_NE(gen_synthetic_regression(5, 50, 0.1, 43).data, a.data);
}

TEST(Synthetic, NoiselessGroundTruthHasZeroResidual) {
    const auto gen = gen_synthetic_regression(6, 80, 0.0, 5);
    for (const Sample& z : gen.data.samples()) {
        EXPECT_EQ(gen.true_weights.dot(z.features) + gen.true_bias - z.target, 0.0);
    }
}

TEST(Synthetic, TargetVarianceTracksSignalPlusNoise) {
    // signal variance: sum_j w_j^2 Var(U[-1,1]) = |w|^2 / 3
    const auto gen = gen_synthetic_regression(10, 1000, 0.1, 99);
    double mean = 0.0;
    for (const Sample& z : gen.data.samples()) {
        mean += z.target;
    }
    mean /= 1000.0;
    double var = 0.0;
    for (const Sample& z : gen.data.samples()) {
        var += (z.target - mean) * (z.target - mean);
    }
    var /= 999.0;
    const double expected = gen.true_weights.squaredNorm() / 3.0 + 0.01;
    EXPECT_GT(var, expected / 3.0);
    EXPECT_LT(var, expected * 3.0);
}

TEST(Synthetic, SignFeaturesAreSignsOfTheUniformDraw) {
    const auto uniform = gen_synthetic_regression(4, 200, 0.0, 11);
    const auto sign = gen_synthetic_regression(4, 200, 0.0, 11, false, FeatureDistribution::Sign);
    EXPECT_EQ(sign.true_weights, uniform.true_weights);
    for (std::size_t i = 0; i < 200; ++i) {
        const Sample& u = uniform.data.samples()[i];
        const Sample& z = sign.data.samples()[i];
        for (Eigen::Index j = 0; j < 4; ++j) {
            EXPECT_EQ(z.features[j], u.features[j] >= 0.0 ? 1.0 : -1.0);
        }
        EXPECT_NEAR(z.target, sign.true_weights.dot(z.features) + sign.true_bias, 1e-12);
    }
}

TEST(Synthetic, PreconditionsEnforced) {
    EXPECT_THROW((void)gen_synthetic_regression(0, 10, 0.1, 1), ContractViolation);
    EXPECT_THROW((void)gen_synthetic_regression(2, 1, 0.1, 1), ContractViolation);
}

TEST(Split, EightyTwentyAndDeterministic) {
    const auto data = gen_synthetic_regression(2, 100, 0.1, 1).data;
    const auto split = train_test_split(data, 0.2, 7);
    EXPECT_EQ(split.train.size(), 80u);
    EXPECT_EQ(split.test.size(), 20u);
    EXPECT_EQ(train_test_split(data, 0.2, 7).test, split.test);
}

TEST(Twin, DiffersAtExactlyOneIndex) {
    const auto base = gen_synthetic_regression(3, 40, 0.1, 2).data;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TwinPair twin = make_twin(base, seed);
        ASSERT_EQ(twin.s.size(), base.size() - 1);
        ASSERT_EQ(twin.s_prime.size(), twin.s.size());
        std::size_t differing = 0;
        for (std::size_t i = 0; i < twin.s.size(); ++i) {
            if (!(twin.s[i] == twin.s_prime[i])) {
                ++differing;
                EXPECT_EQ(i, twin.differing_index);
            }
        }
        EXPECT_EQ(differing, 1u);
        EXPECT_EQ(twin.s_prime[twin.differing_index], twin.removed);
    }
}

TEST(Twin, ConservesTheBaseMultiset) {
    const auto base = gen_synthetic_regression(3, 25, 0.1, 6).data;
    const TwinPair twin = make_twin(base, 11);
    std::vector<Sample> merged(twin.s.samples().begin(), twin.s.samples().end());
    merged.push_back(twin.removed);
    std::vector<Sample> original(base.samples().begin(), base.samples().end());
    std::sort(merged.begin(), merged.end(), sample_less);
    std::sort(original.begin(), original.end(), sample_less);
    EXPECT_EQ(merged, original);
}

TEST(Twin, DeterministicGivenSeed) {
    const auto base = gen_synthetic_regression(3, 25, 0.1, 6).data;
    const TwinPair a = make_twin(base, 3);
    const TwinPair b = make_twin(base, 3);
    EXPECT_EQ(a.s, b.s);
    EXPECT_EQ(a.s_prime, b.s_prime);
    EXPECT_EQ(a.differing_index, b.differing_index);
}

TEST(Twin, SkipsSlotsHoldingACopyOfTheRemovedSample) {
    // all samples but one are identical; S' must still differ from S
    std::vector<Sample> samples(6, Sample{Eigen::Vector2d(1, 1), 0.0});
    samples[3] = Sample{Eigen::Vector2d(2, 2), 1.0};
    const Dataset base(samples);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const TwinPair twin = make_twin(base, seed);
        EXPECT_FALSE(twin.s == twin.s_prime);
    }
}

TEST(Twin, RejectsTinyOrDegenerateBases) {
    EXPECT_THROW((void)make_twin(Dataset(std::vector<Sample>{Sample{Eigen::Vector2d(1, 1), 0.0}}), 1),
                 ContractViolation);
    const Dataset same(std::vector<Sample>(2, Sample{Eigen::Vector2d(1, 1), 0.0}));
    EXPECT_THROW((void)make_twin(same, 1), ContractViolation);
}
