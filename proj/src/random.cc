// Copyright 2026 The Tabsynth Authors
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

#include "tabsynth/random.h"

namespace tabsynth {
namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85;

inline void MulHiLo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  const uint64_t product = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(product >> 32);
  lo = static_cast<uint32_t>(product);
}

}  // namespace

std::array<uint32_t, 4> Philox4x32(std::array<uint32_t, 4> counter,
                                   std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    uint32_t hi0, lo0, hi1, lo1;
    MulHiLo(kPhiloxM0, counter[0], hi0, lo0);
    MulHiLo(kPhiloxM1, counter[2], hi1, lo1);
    counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return counter;
}

PhiloxStream::PhiloxStream(uint64_t key, uint32_t stream_hi,
                           uint64_t stream_lo)
    : key_{static_cast<uint32_t>(key), static_cast<uint32_t>(key >> 32)},
      counter_{0, stream_hi, static_cast<uint32_t>(stream_lo),
               static_cast<uint32_t>(stream_lo >> 32)} {}

PhiloxStream::result_type PhiloxStream::operator()() {
  if (next_ >= 4) {
    buffer_ = Philox4x32(counter_, key_);
    ++counter_[0];
    next_ = 0;
  }
  const uint64_t lo = buffer_[next_];
  const uint64_t hi = buffer_[next_ + 1];
  next_ += 2;
  return (hi << 32) | lo;
}

}  // namespace tabsynth
