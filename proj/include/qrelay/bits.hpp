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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qrelay {

/// One bit per element, values 0 or 1. Desk-scale keys stay well under a
/// few hundred thousand bits, so the unpacked form is kept for clarity.
using Bits = std::vector<std::uint8_t>;
using Bytes = std::vector<std::uint8_t>;

std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
std::uint8_t parity(std::span<const std::uint8_t> bits);

/// Packs bits LSB-first into 64-bit words.
std::vector<std::uint64_t> pack_words(std::span<const std::uint8_t> bits);
/// Packs bits LSB-first into bytes.
Bytes pack_bytes(std::span<const std::uint8_t> bits);
Bits unpack_bytes(std::span<const std::uint8_t> bytes, std::size_t n_bits);

/// Reads `width` (<= 64) bits starting at `offset` as a little-endian integer.
std::uint64_t read_word(std::span<const std::uint8_t> bits, std::size_t offset, std::size_t width);

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);
std::string to_hex64(std::uint64_t value);

/// Little-endian byte writer used for canonical message encodings.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void str(std::string_view s);
  void bytes(std::span<const std::uint8_t> b);

  const Bytes& data() const noexcept { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::string str();
  Bytes bytes();
  bool done() const noexcept { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace qrelay
