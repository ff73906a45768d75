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

// Counter-based random streams. Every draw is a pure function of
// (master seed, label, sub-stream index, draw counter), so runs are
// reproducible regardless of how work is scheduled across threads.
//
// Not a cryptographically secure source: fine for simulation, not for
// deployed DP noise.

#ifndef ADACLIP_RNG_H_
#define ADACLIP_RNG_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace adaclip {

// Philox4x32-10 block function (Salmon et al., SC'11).
namespace philox {

using Counter = std::array<uint32_t, 4>;
using Key = std::array<uint32_t, 2>;

inline constexpr uint32_t kMulA = 0xD2511F53;
inline constexpr uint32_t kMulB = 0xCD9E8D57;
inline constexpr uint32_t kWeylA = 0x9E3779B9;
inline constexpr uint32_t kWeylB = 0xBB67AE85;

constexpr Counter Round(const Counter& ctr, const Key& key) {
  const uint64_t p0 = static_cast<uint64_t>(kMulA) * ctr[0];
  const uint64_t p1 = static_cast<uint64_t>(kMulB) * ctr[2];
  const auto hi0 = static_cast<uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<uint32_t>(p0);
  const auto hi1 = static_cast<uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<uint32_t>(p1);
  return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

constexpr Counter Block(Counter ctr, Key key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    ctr = Round(ctr, key);
  }
  return ctr;
}

}  // namespace philox

enum class StreamLabel : uint32_t {
  kSampling = 1,
  kUpdateNoise = 2,
  kCountNoise = 3,
  kDataGen = 4,
  kModelInit = 5,
};

constexpr std::string_view LabelName(StreamLabel label) {
  switch (label) {
    case StreamLabel::kSampling: return "sampling";
    case StreamLabel::kUpdateNoise: return "update_noise";
    case StreamLabel::kCountNoise: return "count_noise";
    case StreamLabel::kDataGen: return "data_gen";
    case StreamLabel::kModelInit: return "model_init";
  }
  return "unknown";
}

// splitmix64 finalizer; used to derive per-cell seeds in sweeps.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for sweep cell `index`. Cell 0 keeps the master seed so a 1x1 grid
// reproduces a plain run.
constexpr uint64_t SaltSeed(uint64_t master_seed, uint64_t index) {
  return index == 0 ? master_seed : master_seed ^ Mix64(index);
}

class RngStream {
 public:
  RngStream(uint64_t master_seed, StreamLabel label, uint32_t substream)
      : key_{static_cast<uint32_t>(master_seed),
             static_cast<uint32_t>(master_seed >> 32)},
        label_(label),
        substream_(substream) {}

  StreamLabel label() const { return label_; }
  uint32_t substream() const { return substream_; }
  // Number of 32-bit words consumed so far.
  uint64_t position() const { return consumed_; }

  uint32_t NextU32() {
    if (remaining_ == 0) Refill();
    ++consumed_;
    return buffer_[4 - remaining_--];
  }

  uint64_t NextU64() {
    const uint64_t lo = NextU32();
    const uint64_t hi = NextU32();
    return (hi << 32) | lo;
  }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1].
  double UniformOpenLow() { return 1.0 - Uniform(); }

  // Standard normal via Box-Muller. Each pair of uniforms yields two
  // variates; the second is cached for the next call.
  double Gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = UniformOpenLow();
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  void Refill() {
    const philox::Counter ctr{static_cast<uint32_t>(block_next_),
                              static_cast<uint32_t>(block_next_ >> 32),
                              substream_, static_cast<uint32_t>(label_)};
    buffer_ = philox::Block(ctr, key_);
    ++block_next_;
    remaining_ = 4;
  }

  philox::Key key_;
  StreamLabel label_;
  uint32_t substream_;
  uint64_t block_next_ = 0;
  uint64_t consumed_ = 0;
  philox::Counter buffer_{};
  int remaining_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace adaclip

#endif  // ADACLIP_RNG_H_
