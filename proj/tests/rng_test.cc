//
// Copyright 2026 The AdaClip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "adaclip/rng.h"

#include <cmath>
#include <vector>

#include "adaclip/param_vector.h"
#include "gtest/gtest.h"

namespace adaclip {
namespace {

// Known-answer vectors published with Random123.
TEST(PhiloxTest, KnownAnswers) {
  EXPECT_EQ(philox::Block({0, 0, 0, 0}, {0, 0}),
            (philox::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox::Block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                          {0xffffffff, 0xffffffff}),
            (philox::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox::Block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                          {0xa4093822, 0x299f31d0}),
            (philox::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RngStreamTest, SameTripleSameSequence) {
  RngStream a(42, StreamLabel::kUpdateNoise, 7);
  RngStream b(42, StreamLabel::kUpdateNoise, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.NextU32(), b.NextU32());
  const ParamVector va = GaussianVector(a, 64, 1.5);
  const ParamVector vb = GaussianVector(b, 64, 1.5);
  EXPECT_EQ(va, vb);
}

TEST(RngStreamTest, LabelsSeedsAndRoundsDiffer) {
  auto first = [](uint64_t seed, StreamLabel label, uint32_t sub) {
    RngStream s(seed, label, sub);
    return s.NextU64();
  };
  const uint64_t base = first(1, StreamLabel::kSampling, 0);
  EXPECT_NE(base, first(1, StreamLabel::kCountNoise, 0));
  EXPECT_NE(base, first(1, StreamLabel::kSampling, 1));
  EXPECT_NE(base, first(2, StreamLabel::kSampling, 0));
  EXPECT_NE(base, first(uint64_t{1} << 32 | 1, StreamLabel::kSampling, 0));
}

TEST(RngStreamTest, ConsumingOneStreamDoesNotPerturbAnother) {
  RngStream reference(9, StreamLabel::kCountNoise, 3);
  std::vector<double> expected;
  for (int i = 0; i < 10; ++i) expected.push_back(reference.Gaussian());

  RngStream other(9, StreamLabel::kUpdateNoise, 3);
  RngStream count(9, StreamLabel::kCountNoise, 3);
  for (int i = 0; i < 12345; ++i) other.Gaussian();
  for (int i = 0; i < 10; ++i) EXPECT_EQ(count.Gaussian(), expected[i]);
}

TEST(RngStreamTest, UniformRange) {
  RngStream s(5, StreamLabel::kDataGen, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = s.UniformOpenLow();
    ASSERT_GT(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(GaussianVectorTest, ZeroStddevReturnsZerosWithoutConsuming) {
  RngStream s(1, StreamLabel::kUpdateNoise, 0);
  const ParamVector v = GaussianVector(s, 17, 0.0);
  EXPECT_EQ(v, ParamVector(17));
  EXPECT_EQ(s.position(), 0u);
}

// 1e6 draws: mean within 4 sigma = 4e-3, sample stddev within 0.5% (the
// stddev of the sample stddev is 1/sqrt(2e6) ~ 7e-4).
TEST(GaussianVectorTest, MomentsOfOneMillionDraws) {
  RngStream s(2024, StreamLabel::kUpdateNoise, 0);
  const ParamVector v = GaussianVector(s, 1000000, 1.0);
  double sum = 0.0;
  double sq = 0.0;
  for (double x : v) {
    sum += x;
    sq += x * x;
  }
  const double n = static_cast<double>(v.dim());
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_LT(std::abs(mean), 0.004);
  EXPECT_LT(std::abs(sd - 1.0), 0.005);
}

TEST(GaussianVectorTest, StddevScales) {
  RngStream a(3, StreamLabel::kUpdateNoise, 1);
  RngStream b(3, StreamLabel::kUpdateNoise, 1);
  const ParamVector unit = GaussianVector(a, 32, 1.0);
  const ParamVector scaled = GaussianVector(b, 32, 2.5);
  for (std::size_t i = 0; i < unit.dim(); ++i) EXPECT_EQ(scaled[i], 2.5 * unit[i]);
}

TEST(SaltSeedTest, CellZeroKeepsSeed) {
  EXPECT_EQ(SaltSeed(77, 0), 77u);
  EXPECT_NE(SaltSeed(77, 1), 77u);
  EXPECT_NE(SaltSeed(77, 1), SaltSeed(77, 2));
}

}  // namespace
}  // namespace adaclip
