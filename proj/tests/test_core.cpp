/*
   Copyright 2026 The zeronoise Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <zeronoise/core.hpp>
#include <zeronoise/philox.hpp>

#include <gtest/gtest.h>

#include <atomic>
#include <random>

using namespace zeronoise;

// Known-answer vectors of the Random123 reference distribution for Philox4x32-10.
TEST(Philox, KnownAnswerZero)
{
    const auto r = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(r[0], 0x6627e8d5u);
    EXPECT_EQ(r[1], 0xe169c58du);
    EXPECT_EQ(r[2], 0xbc57ac4cu);
    EXPECT_EQ(r[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes)
{
    const auto r = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(r[0], 0x408f276du);
    EXPECT_EQ(r[1], 0x41c83b0eu);
    EXPECT_EQ(r[2], 0xa20bc7c6u);
    EXPECT_EQ(r[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi)
{
    const auto r = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(r[0], 0xd16cfe09u);
    EXPECT_EQ(r[1], 0x94fdccebu);
    EXPECT_EQ(r[2], 0x5001e420u);
    EXPECT_EQ(r[3], 0x24126ea1u);
}

TEST(CounterRng, UniformsInOpenUnitInterval)
{
    const CounterRng rng(123);
    double sum = 0.0;
    const int count = 200000;
    for (int k = 0; k < count; ++k) {
        const auto u = rng.uniform_pair(k, 3, 0);
        ASSERT_GT(u[0], 0.0);
        ASSERT_LT(u[0], 1.0);
        ASSERT_GT(u[1], 0.0);
        ASSERT_LT(u[1], 1.0);
        sum += u[0] + u[1];
    }
    EXPECT_NEAR(sum / (2.0 * count), 0.5, 5.0 * std::sqrt(1.0 / 12.0 / (2.0 * count)));
}

TEST(CounterRng, NormalMoments)
{
    const CounterRng rng(7);
    const int count = 200000;
    double m1 = 0.0, m2 = 0.0, m4 = 0.0, cross = 0.0;
    for (int k = 0; k < count; ++k) {
        const auto z = rng.normal_pair(k, 0, 0);
        m1 += z[0];
        m2 += z[0] * z[0];
        m4 += std::pow(z[0], 4);
        cross += z[0] * z[1];
    }
    EXPECT_NEAR(m1 / count, 0.0, 5.0 / std::sqrt(count));
    EXPECT_NEAR(m2 / count, 1.0, 5.0 * std::sqrt(2.0 / count));
    EXPECT_NEAR(m4 / count, 3.0, 5.0 * std::sqrt(96.0 / count));
    EXPECT_NEAR(cross / count, 0.0, 5.0 / std::sqrt(count));
}

TEST(CounterRng, StreamsAreAddressable)
{
    const CounterRng a(99), b(99), c(100);
    EXPECT_EQ(a.normal_pair(5, 6, 0), b.normal_pair(5, 6, 0));
    EXPECT_NE(a.normal_pair(5, 6, 0), c.normal_pair(5, 6, 0));
    EXPECT_NE(a.normal_pair(5, 6, 0), a.normal_pair(5, 7, 0));
    EXPECT_NE(a.normal_pair(5, 6, 0), a.normal_pair(6, 6, 0));
    std::vector<double> z(5);
    a.normals(5, 6, std::span<double>(z));
    const auto p0 = a.normal_pair(5, 6, 0);
    const auto p2 = a.normal_pair(5, 6, 2);
    EXPECT_EQ(z[0], p0[0]);
    EXPECT_EQ(z[1], p0[1]);
    EXPECT_EQ(z[4], p2[0]);
}

TEST(PairwiseSum, MatchesNaiveOnIntegers)
{
    std::vector<double> v(1001);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = static_cast<double>(i);
    }
    EXPECT_EQ(pairwise_sum(v), 1000.0 * 1001.0 / 2.0);
    EXPECT_EQ(pairwise_sum(std::span<const double>()), 0.0);
}

TEST(SampleMoments, MeanStaysInRangeAndConstantHasZeroError)
{
    const std::vector<double> c(1000, 0.1);
    const auto m = sample_moments(c);
    EXPECT_EQ(m.mean, 0.1);
    EXPECT_EQ(m.std_error, 0.0);
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto mv = sample_moments(v);
    EXPECT_DOUBLE_EQ(mv.mean, 2.5);
    EXPECT_DOUBLE_EQ(mv.std_error, std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0 / 4.0));
    EXPECT_THROW(sample_moments(std::span<const double>()), DomainError);
}

TEST(ParallelFor, CoversEveryIndexOnce)
{
    for (unsigned workers : {1u, 2u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(1037);
        parallel_for(hits.size(), workers, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                hits[i]++;
            }
        });
        for (auto& h : hits) {
            ASSERT_EQ(h.load(), 1);
        }
    }
}

TEST(ParallelFor, PropagatesExceptions)
{
    EXPECT_THROW(parallel_for(100, 4,
                              [](std::size_t b, std::size_t) {
                                  if (b > 0) {
                                      throw DomainError("boom");
                                  }
                              }),
                 DomainError);
}

TEST(FormatDouble, RoundTripsExactly)
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> d(-1e6, 1e6);
    for (int k = 0; k < 1000; ++k) {
        const double v = d(gen) * std::pow(10.0, k % 20 - 10);
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(format_vector(Vector{1.0, -2.5}), "1;-2.5");
}

TEST(Box, Geometry)
{
    const Box b{{-1.0, 0.0}, {1.0, 3.0}};
    EXPECT_EQ(b.dim(), 2u);
    EXPECT_DOUBLE_EQ(b.volume(), 6.0);
    EXPECT_DOUBLE_EQ(b.diameter(), std::sqrt(13.0));
    EXPECT_TRUE(b.contains(Vector{0.0, 3.0}));
    EXPECT_FALSE(b.contains(Vector{0.0, 3.1}));
    EXPECT_TRUE(Box::interval(-0.5, 0.5).inside_with_margin(Box::interval(-1.0, 1.0), 0.5));
    EXPECT_FALSE(Box::interval(-0.5, 0.5).inside_with_margin(Box::interval(-1.0, 1.0), 0.6));
    EXPECT_THROW(Box::interval(1.0, 1.0).validate("b"), DomainError);
}

TEST(Matrix, GramAndNorms)
{
    Matrix a(2, 3);
    a(0, 0) = 1.0;
    a(0, 2) = 2.0;
    a(1, 1) = 3.0;
    const Matrix g = a.gram();
    EXPECT_DOUBLE_EQ(g(0, 0), 5.0);
    EXPECT_DOUBLE_EQ(g(1, 1), 9.0);
    EXPECT_DOUBLE_EQ(g(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(a.frobenius_norm(), std::sqrt(14.0));
    EXPECT_DOUBLE_EQ(g.trace(), 14.0);
}
