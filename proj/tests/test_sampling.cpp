#include <gtest/gtest.h>

#include <cmath>

#include "vsumm/sampling.hpp"

using namespace vsumm;

TEST(Sampling, SixToTwoFps) {
    const auto p = plan_sampling(18, 6, 2);
    EXPECT_EQ(p.snippet_length, 3);
    EXPECT_EQ(p.first_index, 2);
    EXPECT_EQ(p.indexes, (std::vector<Index>{2, 5, 8, 11, 14, 17}));
    EXPECT_EQ(p.count(), 6);
    EXPECT_DOUBLE_EQ(p.achieved_fps(), 2.0);
}

TEST(Sampling, IdentityWhenRatesMatch) {
    const auto p = plan_sampling(10, 4, 4);
    EXPECT_EQ(p.snippet_length, 1);
    EXPECT_EQ(p.first_index, 1);
    EXPECT_EQ(p.count(), 10);
    for (Index i = 0; i < 10; ++i) EXPECT_EQ(p.indexes[static_cast<std::size_t>(i)], i + 1);
}

TEST(Sampling, ThirtyToFour) {
    const auto p = plan_sampling(300, 30, 4);
    EXPECT_EQ(p.snippet_length, 8);
    EXPECT_EQ(p.first_index, 4);
    // Midpoints 4, 12, ..., 300 lie in range: 38 of them. The closed form
    // ceil((T - t1) / l) gives 37 here because 8 divides 296 exactly.
    EXPECT_EQ(p.count(), 38);
    EXPECT_EQ(p.indexes.back(), 300);
}

TEST(Sampling, ShortVideoStillSampled) {
    const auto p = plan_sampling(2, 30, 4);
    EXPECT_EQ(p.count(), 1);
    EXPECT_EQ(p.indexes[0], 1);
}

TEST(Sampling, PropertiesOverAcceptanceDomain) {
    for (int fps = 15; fps <= 30; ++fps)
        for (Index total = 1; total <= 10000; total += (total < 200 ? 1 : 97)) {
            const auto p = plan_sampling(total, fps, 4.0);
            ASSERT_GE(p.count(), 1);
            for (std::size_t i = 0; i < p.indexes.size(); ++i) {
                ASSERT_GE(p.indexes[i], 1);
                ASSERT_LE(p.indexes[i], total);
                if (i) ASSERT_EQ(p.indexes[i] - p.indexes[i - 1], p.snippet_length);
            }
            ASSERT_GT(p.indexes.back() + p.snippet_length, total);  // maximal
            if ((total - p.first_index) % p.snippet_length != 0) {
                const auto formula = static_cast<Index>(std::ceil(static_cast<double>(total - p.first_index) / static_cast<double>(p.snippet_length)));
                ASSERT_EQ(p.count(), formula) << total << " " << fps;
            }
            for (Index l = 1; l <= 40; ++l)
                ASSERT_LE(std::abs(fps / static_cast<double>(p.snippet_length) - 4.0), std::abs(fps / static_cast<double>(l) - 4.0) + 1e-12);
        }
}

TEST(Sampling, ApplyPlan) {
    SamplingPlan p = plan_sampling(5, 3, 1);
    p.indexes = {2, 5};
    const std::vector<char> src = {'a', 'b', 'c', 'd', 'e'};
    EXPECT_EQ(apply_plan<char>(p, std::span<const char>(src)), (std::vector<char>{'b', 'e'}));
    const auto id = plan_sampling(5, 4, 4);
    EXPECT_EQ(apply_plan<char>(id, std::span<const char>(src)), src);
    const std::vector<char> short_src = {'a', 'b'};
    EXPECT_THROW(apply_plan<char>(p, std::span<const char>(short_src)), ValidationError);
    Matrix m(5, 2);
    for (Index r = 0; r < 5; ++r) m.row(r) << r, -r;
    const auto rows = apply_plan(p, m);
    EXPECT_EQ(rows(0, 0), 1);
    EXPECT_EQ(rows(1, 1), -4);
}

TEST(Sampling, RejectsBadInput) {
    EXPECT_THROW(plan_sampling(0, 30, 4), ValidationError);
    EXPECT_THROW(plan_sampling(10, 0, 4), ValidationError);
    EXPECT_THROW(plan_sampling(10, 30, -1), ValidationError);
}
