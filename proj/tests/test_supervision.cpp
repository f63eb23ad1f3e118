#include "camgen/supervision.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace camgen;

TEST(LossWeight, ReferenceValues) {
    EXPECT_DOUBLE_EQ(loss_weight(14, 29, 0.01), 1.0);
    EXPECT_DOUBLE_EQ(loss_weight(28, 29, 0.01), 1.01);
    const double x = 2.0 / 28.0 - 1.0;
    EXPECT_NEAR(loss_weight(1, 29, 0.01), 1.0 + 0.01 * x * x, 1e-15);
    EXPECT_NEAR(loss_weight(1, 29, 0.01), 1.0086224, 1e-7);
}

TEST(LossWeight, LawAcrossLengthsAndStrengths) {
    for (int n : {3, 9, 29}) {
        for (double g : {0.0, 0.01, 0.1}) {
            EXPECT_NEAR(loss_weight(n - 1, n, g), 1.0 + g, 1e-12);
            if ((n - 1) % 2 == 0) EXPECT_NEAR(loss_weight((n - 1) / 2, n, g), 1.0, 1e-12);
            for (int i = 1; i < n - 1; ++i) EXPECT_NEAR(loss_weight(i, n, g), loss_weight(n - 1 - i, n, g), 1e-12);
        }
    }
}

TEST(LossWeight, MonotoneAwayFromCenter) {
    const int n = 29;
    for (int i = 1; i < n; ++i)
        for (int j = 1; j < n; ++j) {
            const double di = std::abs(2.0 * i / (n - 1) - 1.0), dj = std::abs(2.0 * j / (n - 1) - 1.0);
            if (di <= dj) EXPECT_LE(loss_weight(i, n, 0.05), loss_weight(j, n, 0.05));
        }
}

TEST(LossWeight, FrameZeroRejected) {
    EXPECT_THROW(loss_weight(0, 9, 0.01), std::invalid_argument);
    EXPECT_THROW(loss_weight(9, 9, 0.01), std::invalid_argument);
    EXPECT_THROW(loss_weight(1, 1, 0.01), std::invalid_argument);
}

TEST(FrameWeights, EndpointModeSharesTheEndpointWeight) {
    SupervisionConfig cfg{0.01, 29, 4, 81};
    const auto w = frame_weights(cfg, WeightMode::endpoint);
    ASSERT_EQ(w.size(), 28u);
    for (int i = 25; i <= 28; ++i) EXPECT_DOUBLE_EQ(w[i - 1], loss_weight(28, 29, 0.01));
    for (int i = 1; i < 25; ++i) EXPECT_DOUBLE_EQ(w[i - 1], loss_weight(i, 29, 0.01));
}

TEST(FrameWeights, GammaZeroIsUniform) {
    SupervisionConfig cfg{0.0, 9, 2, 81};
    EXPECT_EQ(frame_weights(cfg, WeightMode::endpoint), std::vector<double>(8, 1.0));
    EXPECT_EQ(frame_weights(cfg, WeightMode::uniform), std::vector<double>(8, 1.0));
}

TEST(FrameWeights, ExtensionOnlyMode) {
    SupervisionConfig cfg{0.01, 9, 3, 81};
    const auto w = frame_weights(cfg, WeightMode::extension_only);
    EXPECT_EQ(w, (std::vector<double>{0, 0, 0, 0, 0, 1, 1, 1}));
}

TEST(SupervisionConfig, Validation) {
    EXPECT_NO_THROW((SupervisionConfig{0.01, 29, 4, 81}.validate()));
    EXPECT_THROW((SupervisionConfig{-0.1, 9, 2, 81}.validate()), std::invalid_argument);
    EXPECT_THROW((SupervisionConfig{0.01, 9, 0, 81}.validate()), std::invalid_argument);
    EXPECT_THROW((SupervisionConfig{0.01, 9, 9, 81}.validate()), std::invalid_argument);
    EXPECT_THROW((SupervisionConfig{0.01, 29, 4, 20}.validate()), std::invalid_argument);
    EXPECT_EQ((SupervisionConfig{0.01, 29, 4, 81}.trajectory_frames()), 26);
}

TEST(SparseSampling, ReferenceValues) {
    const auto idx = sparse_sample_indices(81, 29);
    ASSERT_EQ(idx.size(), 29u);
    EXPECT_EQ(idx.front(), 0);
    EXPECT_EQ(idx.back(), 80);
    EXPECT_EQ(idx[14], 40);
    // 80 / 28 = 2.857..; i = 7 gives exactly 20, i = 1 gives 2.857 -> 3.
    EXPECT_EQ(idx[7], 20);
    EXPECT_EQ(idx[1], 3);
}

TEST(SparseSampling, HalfRoundsAwayFromZero) {
    // T=4, N=3: positions 0, 1.5, 3 -> 0, 2, 3.
    EXPECT_EQ(sparse_sample_indices(4, 3), (std::vector<int>{0, 2, 3}));
}

TEST(SparseSampling, IdentityWhenLengthsMatch) {
    for (int t = 2; t < 40; ++t) {
        const auto idx = sparse_sample_indices(t, t);
        for (int i = 0; i < t; ++i) EXPECT_EQ(idx[i], i);
    }
}

TEST(SparseSampling, NoCollisionsAtTwiceOversampling) {
    for (int n = 2; n <= 30; ++n)
        for (int t = 2 * n; t <= 4 * n + 3; ++t) {
            const auto idx = sparse_sample_indices(t, n);
            EXPECT_EQ(std::set<int>(idx.begin(), idx.end()).size(), static_cast<size_t>(n)) << t << " " << n;
            for (size_t i = 1; i < idx.size(); ++i) EXPECT_LE(idx[i - 1], idx[i]);
            EXPECT_GE(idx.front(), 0);
            EXPECT_LE(idx.back(), t - 1);
        }
}

TEST(SparseSampling, Errors) {
    EXPECT_THROW(sparse_sample_indices(5, 6), std::invalid_argument);
    EXPECT_THROW(sparse_sample_indices(5, 1), std::invalid_argument);
}

TEST(TemporalExtension, Layout) {
    EXPECT_EQ(apply_temporal_extension(std::vector<int>{1, 2, 3}, 1), (std::vector<int>{1, 2, 3}));
    std::vector<int> seq(26);
    for (int i = 0; i < 26; ++i) seq[i] = i;
    const auto ext = apply_temporal_extension(seq, 4);
    ASSERT_EQ(ext.size(), 29u);
    for (int i = 25; i < 29; ++i) EXPECT_EQ(ext[i], 25);
    EXPECT_THROW(apply_temporal_extension(std::vector<int>{}, 2), std::invalid_argument);
    EXPECT_THROW(apply_temporal_extension(std::vector<int>{1}, 0), std::invalid_argument);
}
