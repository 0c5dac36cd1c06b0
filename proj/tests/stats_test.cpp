#include "calib/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

namespace calib {
namespace {

TEST(Aggregate, MeanAndSampleStd) {
    const auto ones = aggregate({1, 1, 1, 1, 1});
    EXPECT_EQ(ones.mean, 1.0);
    EXPECT_EQ(ones.std, 0.0);
    const auto two = aggregate({0, 1});
    EXPECT_EQ(two.mean, 0.5);
    EXPECT_NEAR(two.std, std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(two.std, 0.7071, 1e-4);
    EXPECT_THROW(aggregate({0.3}), InsufficientDataError);
}

TEST(Aggregate, PermutationInvariant) {
    const auto a = aggregate({0.3, 0.1, 0.7, 0.2, 0.9});
    const auto b = aggregate({0.9, 0.2, 0.7, 0.1, 0.3});
    EXPECT_NEAR(a.mean, b.mean, 1e-15);
    EXPECT_NEAR(a.std, b.std, 1e-15);
}

TEST(PctChange, PublishedReductions) {
    EXPECT_EQ(fmt::format("{:.2f}", pct_change(0.0193, 0.0147)), "23.83");
    EXPECT_EQ(fmt::format("{:.2f}", pct_change(0.0410, 0.0377)), "8.05");
    EXPECT_EQ(pct_change(0.3, 0.3), 0.0);
    EXPECT_THROW(pct_change(0.0, 0.1), DomainError);
}

TEST(PctChange, InvertsRelativeReduction) {
    SplitMix64 rng(8);
    for (int i = 0; i < 1000; ++i) {
        const double x = 1e-3 + rng.uniform();
        const double r = 100.0 * rng.uniform();
        ASSERT_NEAR(pct_change(x, x * (1 - r / 100)), r, 1e-9);
    }
}

TEST(IncompleteBeta, MatchesHighPrecisionOracle) {
    for (double df = 2; df <= 8; df += 1)
        for (double t = -10; t <= 10; t += 0.25)
            ASSERT_NEAR(student_t_two_tailed(t, df), oracle::t_two_tailed(t, df), 1e-12) << df << " " << t;
    for (double df : {2.37, 3.9, 5.5, 7.01})
        for (double t : {0.01, 0.5, 1.7, 2.2, 4.4, 9.9})
            ASSERT_NEAR(student_t_two_tailed(t, df), oracle::t_two_tailed(t, df), 1e-12);
}

TEST(StudentT, ClosedFormDf2) {
    for (double t = -10; t <= 10; t += 0.5)
        EXPECT_NEAR(student_t_cdf(t, 2), 0.5 * (1 + t / std::sqrt(t * t + 2)), 1e-13);
    EXPECT_EQ(student_t_two_tailed(0.0, 3), 1.0);
}

TEST(PairedTTest, HandCase) {
    const std::vector<double> a = {0.1, 0.2, 0.3}, b = {0.2, 0.3, 0.5};
    const auto r = paired_ttest(a, b);
    EXPECT_NEAR(r.statistic, -4.0, 1e-12);
    EXPECT_EQ(r.degrees_of_freedom, 2.0);
    // 2 * F(-4) with F(t) = (1 + t / sqrt(t^2 + 2)) / 2
    EXPECT_NEAR(r.p_value, 1 - 4 / std::sqrt(18.0), 1e-12);
    EXPECT_NEAR(r.p_value, 0.0572, 1e-4);
    EXPECT_FALSE(r.significant);
    EXPECT_EQ(r.direction, Direction::decrease);
}

TEST(PairedTTest, Degenerate) {
    const std::vector<double> a = {0.1, 0.2, 0.3};
    const auto same = paired_ttest(a, a);
    EXPECT_EQ(same.p_value, 1.0);
    EXPECT_EQ(same.degeneracy, Degeneracy::no_difference);
    const std::vector<double> shifted = {0.2, 0.3, 0.4};
    const auto shift = paired_ttest(shifted, a);
    // differences are all 0.1 up to rounding; exactly constant differences:
    const std::vector<double> c = {1.0, 2.0, 3.0}, d = {0.5, 1.5, 2.5};
    const auto constant = paired_ttest(c, d);
    EXPECT_EQ(constant.p_value, 0.0);
    EXPECT_EQ(constant.degeneracy, Degeneracy::zero_variance);
    EXPECT_TRUE(constant.significant);
    EXPECT_EQ(constant.direction, Direction::increase);
    EXPECT_LE(shift.p_value, 1e-6);
    EXPECT_THROW(paired_ttest(a, std::vector<double>{0.1, 0.2}), AlignmentError);
    EXPECT_THROW(paired_ttest(std::vector<double>{0.1}, std::vector<double>{0.2}), InsufficientDataError);
}

TEST(WelchTTest, HandCaseAgainstOracle) {
    const std::vector<double> a = {0.1, 0.2, 0.3}, b = {0.4, 0.5, 0.6};
    const auto r = unpaired_ttest(a, b);
    const double t = -0.3 / std::sqrt(0.01 / 3 + 0.01 / 3);
    EXPECT_NEAR(r.statistic, t, 1e-12);
    EXPECT_NEAR(r.degrees_of_freedom, 4.0, 1e-12);
    EXPECT_NEAR(r.p_value, oracle::t_two_tailed(t, 4.0), 1e-9);
    EXPECT_TRUE(r.significant);
}

TEST(WelchTTest, Degenerate) {
    const std::vector<double> a = {0.2, 0.2, 0.2};
    EXPECT_EQ(unpaired_ttest(a, a).p_value, 1.0);
    EXPECT_EQ(unpaired_ttest(a, a).degeneracy, Degeneracy::no_difference);
    const auto r = unpaired_ttest(std::vector<double>{0, 0, 0}, std::vector<double>{1, 1, 1});
    EXPECT_EQ(r.p_value, 0.0);
    EXPECT_EQ(r.degeneracy, Degeneracy::zero_variance);
    EXPECT_THROW(unpaired_ttest(std::vector<double>{1}, std::vector<double>{1, 2}), InsufficientDataError);
}

TEST(WelchTTest, SymmetricUnderSwap) {
    SplitMix64 rng(77);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> a(2 + rng.below(6)), b(2 + rng.below(6));
        for (auto& v : a) v = rng.uniform();
        for (auto& v : b) v = rng.uniform() + 0.1;
        const auto ab = unpaired_ttest(a, b), ba = unpaired_ttest(b, a);
        ASSERT_NEAR(ab.p_value, ba.p_value, 1e-14);
        ASSERT_NEAR(ab.statistic, -ba.statistic, 1e-12);
        ASSERT_GE(ab.p_value, 0.0);
        ASSERT_LE(ab.p_value, 1.0);
        ASSERT_NEAR(ab.p_value, oracle::t_two_tailed(ab.statistic, ab.degrees_of_freedom), 1e-9);
        if (a.size() == b.size()) {
            const auto p = paired_ttest(a, b), q = paired_ttest(b, a);
            ASSERT_NEAR(p.p_value, q.p_value, 1e-14);
        }
    }
}

TEST(TTestJson, AllFields) {
    const auto j = to_json(unpaired_ttest(std::vector<double>{0, 0}, std::vector<double>{1, 1}));
    EXPECT_EQ(j["statistic"], "-inf");
    EXPECT_EQ(j["p_value"].get<double>(), 0.0);
    EXPECT_EQ(j["direction"], "decrease");
    EXPECT_EQ(j["degenerate"], "zero_variance");
    EXPECT_TRUE(j["significant"].get<bool>());
}

}  // namespace
}  // namespace calib
