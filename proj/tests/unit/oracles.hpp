/*
 *    Copyright 2026 The qrelay Authors.
 *
 *    Licensed under the Apache License, Version 2.0 (the "License");
 *    you may not use this file except in compliance with the License.
 *    You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 *    Unless required by applicable law or agreed to in writing, software
 *    distributed under the License is distributed on an "AS IS" BASIS,
 *    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *    See the License for the specific language governing permissions and
 *    limitations under the License.
 */

#pragma once

// Independent reimplementations used to derive expected values. They share no
// code with the library beyond plain data types.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

struct SplitMix {
  std::uint64_t x;
  std::uint64_t next() {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

struct Xoshiro {
  std::uint64_t s[4];
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
  static Xoshiro seeded(std::uint64_t seed) {
    SplitMix sm{seed};
    Xoshiro x{};
    for (auto& w : x.s) w = sm.next();
    return x;
  }
};

// Polynomial evaluation MAC over GF(2^61 - 1), computed with schoolbook
// arithmetic on 128-bit products.
inline std::uint64_t mersenne_mod(unsigned __int128 v) {
  const std::uint64_t p = (std::uint64_t{1} << 61) - 1;
  while (v >> 61) v = (v & p) + (v >> 61);
  std::uint64_t r = static_cast<std::uint64_t>(v);
  return r >= p ? r - p : r;
}

inline std::uint64_t word_le(const std::vector<std::uint8_t>& bits, std::size_t off) {
  std::uint64_t w = 0;
  for (std::size_t i = 0; i < 64; ++i) w |= static_cast<std::uint64_t>(bits[off + i] & 1) << i;
  return w;
}

inline std::uint64_t poly_tag(const std::vector<std::uint8_t>& key_bits, const std::vector<std::uint8_t>& msg,
                              unsigned tag_bits) {
  const std::uint64_t p = (std::uint64_t{1} << 61) - 1;
  std::uint64_t x = word_le(key_bits, 0) % p;
  if (x == 0) x = 1;
  const std::uint64_t pad = word_le(key_bits, 64);
  std::uint64_t h = 0;
  for (std::size_t i = 0; i < msg.size(); i += 7) {
    std::uint64_t c = 0;
    for (std::size_t j = i; j < msg.size() && j < i + 7; ++j) c |= static_cast<std::uint64_t>(msg[j]) << (8 * (j - i));
    h = mersenne_mod(static_cast<unsigned __int128>(h) * x + c);
  }
  h = mersenne_mod(static_cast<unsigned __int128>(h) * x + (msg.size() % p));
  std::uint64_t t = h + pad;
  if (tag_bits < 64) t &= (std::uint64_t{1} << tag_bits) - 1;
  return t;
}

// Case table for Alice, Carol, Bob bases (0 = X, 1 = Y).
enum class Group { A_AllSame, B_AliceCarol, C_CarolBob, D_Unused };
inline Group three_chain_group(int a, int c, int b) {
  if (a == c && c == b) return Group::A_AllSame;
  if (a == c) return Group::B_AliceCarol;
  if (c == b) return Group::C_CarolBob;
  return Group::D_Unused;
}

// Maximal runs of equal bases with length >= 2, as (first, last) positions.
inline std::vector<std::pair<std::size_t, std::size_t>> runs(const std::vector<int>& bases) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  while (i < bases.size()) {
    std::size_t j = i;
    while (j + 1 < bases.size() && bases[j + 1] == bases[i]) ++j;
    if (j > i) out.emplace_back(i, j);
    i = j + 1;
  }
  return out;
}

// Probability that an end-to-end bit survives k independent intercept/resend
// stages, each flipping with probability 1/4: error = (1 - (1/2)^k) / 2.
inline double chained_eve_error(int k) {
  double keep = 1.0;
  for (int i = 0; i < k; ++i) keep *= 0.5;
  return (1.0 - keep) / 2.0;
}

// Brute force over Eve's basis and her random outcome for one intercepted
// qubit sent and measured in the same basis: returns the disagreement probability.
inline double eve_single_hop_error() {
  double err = 0.0;
  for (int sent_bit = 0; sent_bit < 2; ++sent_bit)
    for (int eve_basis = 0; eve_basis < 2; ++eve_basis)
      for (int eve_outcome = 0; eve_outcome < 2; ++eve_outcome)
        for (int bob_outcome = 0; bob_outcome < 2; ++bob_outcome) {
          // Alice prepares in basis 0.
          double p = 0.5 * 0.5;
          int eve_bit = sent_bit;
          if (eve_basis != 0) {
            p *= 0.5;
            eve_bit = eve_outcome;
          } else if (eve_outcome != 0) {
            continue;
          }
          int bob_bit = eve_bit;
          if (eve_basis != 0) {
            p *= 0.5;
            bob_bit = bob_outcome;
          } else if (bob_outcome != 0) {
            continue;
          }
          if (bob_bit != sent_bit) err += p;
        }
  return err;
}

}  // namespace oracle
