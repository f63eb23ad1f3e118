#include "camgen/flow.hpp"
#include "camgen/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace camgen;

namespace {

Mat<double> random_mat(int r, int c, Rng& rng) {
    Mat<double> m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

} // namespace

TEST(Blend, Endpoints) {
    Rng rng(31);
    const Mat<double> z0 = random_mat(3, 7, rng), eps = random_mat(3, 7, rng);
    EXPECT_EQ(blend(z0, eps, 0.0), z0);
    EXPECT_EQ(blend(z0, eps, 1.0), eps);
    EXPECT_EQ(blend<double>(Mat<double>::Zero(2, 2), Mat<double>::Ones(2, 2), 0.5), Mat<double>::Constant(2, 2, 0.5));
}

TEST(Blend, Errors) {
    EXPECT_THROW(blend<double>(Mat<double>::Zero(2, 2), Mat<double>::Zero(2, 3), 0.5), std::invalid_argument);
    EXPECT_THROW(blend<double>(Mat<double>::Zero(2, 2), Mat<double>::Zero(2, 2), 1.5), std::invalid_argument);
    EXPECT_THROW(velocity_target<double>(Mat<double>::Zero(2, 2), Mat<double>::Zero(3, 2)), std::invalid_argument);
}

TEST(Velocity, IdentitiesOnRandomTensors) {
    Rng rng(32);
    for (int trial = 0; trial < 100; ++trial) {
        const Mat<double> z0 = random_mat(4, 5, rng), eps = random_mat(4, 5, rng);
        const double t = rng.unit();
        const FlowState<double> st = FlowState<double>::make(z0, eps, t);
        const Mat<double> v = velocity_target(z0, eps);
        EXPECT_LT((st.zt - ((1 - t) * z0 + t * eps)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((st.zt - t * v - z0).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_EQ(velocity_target(z0, z0), Mat<double>::Zero(4, 5));
        EXPECT_EQ(velocity_target<double>(Mat<double>::Zero(4, 5), eps), eps);
    }
}

TEST(FlowLoss, ZeroAtTarget) {
    Rng rng(33);
    const Mat<double> z0 = random_mat(4, 6, rng), eps = random_mat(4, 6, rng);
    const FlowLoss l = flow_loss(velocity_target(z0, eps), z0, eps, {1.0, 2.0, 3.0});
    EXPECT_EQ(l.total, 0.0);
}

TEST(FlowLoss, ConstantOffsetGivesSquare) {
    Rng rng(34);
    const Mat<double> z0 = random_mat(2, 10, rng), eps = random_mat(2, 10, rng);
    Mat<double> pred = velocity_target(z0, eps);
    pred.row(1).array() += 0.3;
    pred.row(0).array() += 100.0;  // conditioning frame never counts
    EXPECT_NEAR(flow_loss(pred, z0, eps, {1.0}).total, 0.09, 1e-12);
}

TEST(FlowLoss, EndpointWeightRatio) {
    // Equal errors at the center and the endpoint of a 29-frame sequence.
    Mat<double> z0 = Mat<double>::Zero(29, 4), eps = Mat<double>::Zero(29, 4), pred = Mat<double>::Zero(29, 4);
    pred.row(14).setConstant(0.5);
    pred.row(28).setConstant(0.5);
    std::vector<double> w(28);
    for (int i = 1; i < 29; ++i) w[i - 1] = 1.0 + 0.01 * std::pow(2.0 * i / 28.0 - 1.0, 2);
    std::vector<double> only_end(28, 0.0), only_center(28, 0.0);
    only_end[27] = w[27];
    only_center[13] = w[13];
    EXPECT_NEAR(flow_loss(pred, z0, eps, only_end).total / flow_loss(pred, z0, eps, only_center).total, 1.01, 1e-12);
}

TEST(FlowLoss, NonNegativeAndZeroOnlyAtTarget) {
    Rng rng(35);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat<double> z0 = random_mat(3, 5, rng), eps = random_mat(3, 5, rng);
        Mat<double> pred = velocity_target(z0, eps);
        pred(1 + trial % 2, trial % 5) += 1e-3;
        EXPECT_GT(flow_loss(pred, z0, eps, {0.5, 2.0}).total, 0.0);
    }
}

TEST(FlowLoss, GradientMatchesFiniteDifferences) {
    Rng rng(36);
    const Mat<double> z0 = random_mat(3, 4, rng), eps = random_mat(3, 4, rng);
    Mat<double> pred = random_mat(3, 4, rng);
    const std::vector<double> w{0.7, 1.3};
    Mat<double> grad;
    flow_loss(pred, z0, eps, w, &grad);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        Mat<double> p = pred, m = pred;
        p.data()[i] += 1e-6;
        m.data()[i] -= 1e-6;
        const double fd = (flow_loss(p, z0, eps, w).total - flow_loss(m, z0, eps, w).total) / 2e-6;
        EXPECT_NEAR(grad.data()[i], fd, 1e-8);
    }
}

TEST(FlowLoss, Errors) {
    const Mat<double> z = Mat<double>::Zero(3, 2);
    EXPECT_THROW(flow_loss(z, z, z, {1.0}), std::invalid_argument);
    EXPECT_THROW(flow_loss(z, z, z, {1.0, -0.5}), std::invalid_argument);
    EXPECT_THROW(flow_loss<double>(z, Mat<double>::Zero(3, 3), z, {1.0, 1.0}), std::invalid_argument);
}

TEST(Euler, OracleVelocityRecoversDataInOneStep) {
    Rng rng(37);
    const Mat<double> z0 = random_mat(4, 8, rng), noise = random_mat(4, 8, rng);
    const VelocityFn<double> oracle = [&](const Mat<double>&, double) { return velocity_target(z0, noise); };
    for (int steps : {1, 3, 20}) {
        const Mat<double> out = euler_sample<double>(oracle, noise, z0.topRows(1), steps);
        EXPECT_LT((out - z0).cwiseAbs().maxCoeff(), 1e-5) << steps;
    }
}

TEST(Euler, ConditioningFrameHeldThroughout) {
    Rng rng(38);
    const Mat<double> cond = random_mat(1, 6, rng);
    const VelocityFn<double> check = [&](const Mat<double>& z, double t) {
        EXPECT_EQ(Mat<double>(z.row(0)), cond);
        EXPECT_GE(t, 0.0);
        EXPECT_LE(t, 1.0);
        return Mat<double>::Ones(z.rows(), z.cols()).eval();
    };
    const Mat<double> out = euler_sample(check, random_mat(3, 6, rng), cond, 5);
    EXPECT_EQ(Mat<double>(out.row(0)), cond);
    EXPECT_THROW(euler_sample(check, random_mat(3, 6, rng), cond, 0), std::invalid_argument);
}

TEST(Euler, StepTimesAreUniformFromOne) {
    std::vector<double> seen;
    const VelocityFn<double> rec = [&](const Mat<double>& z, double t) {
        seen.push_back(t);
        return Mat<double>::Zero(z.rows(), z.cols()).eval();
    };
    euler_sample<double>(rec, Mat<double>::Zero(2, 2), Mat<double>::Zero(1, 2), 4);
    EXPECT_EQ(seen, (std::vector<double>{1.0, 0.75, 0.5, 0.25}));
}

TEST(Noise, SeededAndStandard) {
    const Mat<float> a = gaussian_noise<float>(50, 200, 9), b = gaussian_noise<float>(50, 200, 9);
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a == gaussian_noise<float>(50, 200, 10));
    const double mean = a.cast<double>().mean();
    const double var = (a.cast<double>().array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 0.03);
    EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Latents, PixelMapping) {
    Image im(2, 3);
    for (size_t i = 0; i < im.rgb.size(); ++i) im.rgb[i] = static_cast<float>(i) / 17.0f;
    const Mat<float> z = to_latent(im);
    EXPECT_FLOAT_EQ(z(0, 0), -1.0f);
    const auto back = from_latents(to_latents({im, im}), 2, 3);
    ASSERT_EQ(back.size(), 2u);
    for (size_t i = 0; i < im.rgb.size(); ++i) EXPECT_NEAR(back[1].rgb[i], im.rgb[i], 1e-7);
    EXPECT_THROW(from_latents(z, 3, 3), std::invalid_argument);
}
