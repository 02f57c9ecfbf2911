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

#include <algorithm>
#include <numeric>

#include "qrelay/error.hpp"
#include "qrelay/protocol.hpp"

namespace qrelay {

namespace {

struct PassLayout {
  std::size_t block_size = 0;
  std::vector<std::size_t> order;     // permuted index -> key position
  std::vector<std::size_t> slot_of;   // key position -> permuted index
  std::vector<std::uint8_t> initiator_parity;
  std::vector<std::uint8_t> mismatch;

  std::size_t blocks() const { return initiator_parity.size(); }
  std::size_t block_of(std::size_t position) const { return slot_of[position] / block_size; }
  std::size_t block_begin(std::size_t blk) const { return blk * block_size; }
  std::size_t block_end(std::size_t blk) const { return std::min(order.size(), (blk + 1) * block_size); }
};

std::uint8_t range_parity(const Bits& key, const PassLayout& pass, std::size_t begin, std::size_t end) {
  std::uint8_t p = 0;
  for (std::size_t i = begin; i < end; ++i) p ^= key[pass.order[i]];
  return p;
}

struct Bisection {
  std::size_t pass;
  std::size_t begin;
  std::size_t end;
  std::uint8_t initiator_parity;
};

class Cascade {
 public:
  Cascade(const Bits& a, Bits b, const ReconciliationParams& params, Rng& rng, const PublicChannel& channel)
      : a_(a), b_(std::move(b)), params_(params), rng_(rng), channel_(channel) {}

  ReconciliationResult run() {
    const std::size_t n = a_.size();
    for (std::size_t p = 0; p < params_.passes; ++p) {
      open_pass(p, n);
      settle();
    }
    verify();
    result_.key_a = a_;
    result_.key_b = std::move(b_);
    return std::move(result_);
  }

 private:
  void send(Speaker who, PayloadType type, Bytes payload) {
    ++result_.messages;
    if (channel_) channel_(who, type, std::move(payload));
  }

  void open_pass(std::size_t p, std::size_t n) {
    PassLayout pass;
    std::size_t k = params_.block_size_initial;
    for (std::size_t i = 0; i < p && k < n; ++i) k *= 2;
    pass.block_size = std::min(k, n);
    pass.order.resize(n);
    std::iota(pass.order.begin(), pass.order.end(), std::size_t{0});
    if (p > 0) {
      for (std::size_t i = n; i > 1; --i) {
        std::swap(pass.order[i - 1], pass.order[rng_.below(i)]);
      }
    }
    pass.slot_of.resize(n);
    for (std::size_t i = 0; i < n; ++i) pass.slot_of[pass.order[i]] = i;

    const std::size_t nb = (n + pass.block_size - 1) / pass.block_size;
    pass.initiator_parity.resize(nb);
    pass.mismatch.resize(nb);
    Bits parities(nb);
    ByteWriter mismatch_msg;
    mismatch_msg.u32(static_cast<std::uint32_t>(p));
    for (std::size_t blk = 0; blk < nb; ++blk) {
      pass.initiator_parity[blk] = range_parity(a_, pass, pass.block_begin(blk), pass.block_end(blk));
      parities[blk] = pass.initiator_parity[blk];
      const std::uint8_t mine = range_parity(b_, pass, pass.block_begin(blk), pass.block_end(blk));
      pass.mismatch[blk] = pass.initiator_parity[blk] != mine;
      if (pass.mismatch[blk]) mismatch_msg.u32(static_cast<std::uint32_t>(blk));
    }
    result_.leakage_bits += nb;
    result_.top_level_parities += nb;

    ByteWriter parity_msg;
    parity_msg.u32(static_cast<std::uint32_t>(p));
    parity_msg.bytes(pack_bytes(parities));
    send(Speaker::Initiator, PayloadType::CascadeParities, parity_msg.take());
    send(Speaker::Responder, PayloadType::CascadeMismatch, mismatch_msg.take());
    passes_.push_back(std::move(pass));
  }

  // Bisect odd blocks until every opened pass agrees. A wave bisects every
  // odd block of every pass against the same responder string; each bisection
  // ends on a position where the strings differ, so flipping each distinct
  // end position corrects real errors even when blocks overlap.
  void settle() {
    for (;;) {
      std::vector<Bisection> active = pick_wave();
      if (active.empty()) return;
      run_wave(std::move(active));
    }
  }

  std::vector<Bisection> pick_wave() const {
    std::vector<Bisection> out;
    for (std::size_t q = 0; q < passes_.size(); ++q) {
      const PassLayout& pass = passes_[q];
      for (std::size_t blk = 0; blk < pass.blocks(); ++blk) {
        if (pass.mismatch[blk]) {
          out.push_back(Bisection{q, pass.block_begin(blk), pass.block_end(blk), pass.initiator_parity[blk]});
        }
      }
    }
    return out;
  }

  void run_wave(std::vector<Bisection> active) {
    for (;;) {
      bool open = false;
      Bits disclosed;
      Bits choices;
      for (auto& bis : active) {
        if (bis.end - bis.begin <= 1) continue;
        open = true;
        const PassLayout& pass = passes_[bis.pass];
        const std::size_t mid = bis.begin + (bis.end - bis.begin) / 2;
        const std::uint8_t left_initiator = range_parity(a_, pass, bis.begin, mid);
        const std::uint8_t left_responder = range_parity(b_, pass, bis.begin, mid);
        disclosed.push_back(left_initiator);
        ++result_.leakage_bits;
        if (left_initiator != left_responder) {
          bis.end = mid;
          bis.initiator_parity = left_initiator;
          choices.push_back(0);
        } else {
          bis.begin = mid;
          bis.initiator_parity ^= left_initiator;
          choices.push_back(1);
        }
      }
      if (!open) break;
      ByteWriter bisect_msg;
      bisect_msg.u32(static_cast<std::uint32_t>(disclosed.size()));
      bisect_msg.bytes(pack_bytes(disclosed));
      send(Speaker::Initiator, PayloadType::CascadeBisect, bisect_msg.take());
      ByteWriter choice_msg;
      choice_msg.u32(static_cast<std::uint32_t>(choices.size()));
      choice_msg.bytes(pack_bytes(choices));
      send(Speaker::Responder, PayloadType::CascadeChoice, choice_msg.take());
    }

    std::vector<std::uint8_t> fixed(b_.size(), 0);
    for (const auto& bis : active) {
      const std::size_t position = passes_[bis.pass].order[bis.begin];
      if (fixed[position]) continue;
      fixed[position] = 1;
      b_[position] ^= 1u;
      result_.corrections.push_back(Correction{position, bis.initiator_parity});
      for (auto& other : passes_) {
        other.mismatch[other.block_of(position)] ^= 1u;
      }
    }
  }

  void verify() {
    const std::size_t t = params_.verification_tag_bits;
    result_.verification_bits = t;
    if (t == 0) {
      result_.success = true;
      return;
    }
    const std::uint64_t seed = rng_.next();
    const Bits tag_a = multiply_random_matrix(a_, t, seed);
    const Bits tag_b = multiply_random_matrix(b_, t, seed);
    ByteWriter msg;
    msg.u64(seed);
    msg.bytes(pack_bytes(tag_a));
    send(Speaker::Initiator, PayloadType::VerifyTag, msg.take());
    result_.success = tag_a == tag_b;
  }

  const Bits& a_;
  Bits b_;
  const ReconciliationParams& params_;
  Rng& rng_;
  const PublicChannel& channel_;
  std::vector<PassLayout> passes_;
  ReconciliationResult result_;
};

}  // namespace

ReconciliationResult reconcile(const Bits& key_a, const Bits& key_b, const ReconciliationParams& params,
                               Rng& public_rng, const PublicChannel& channel) {
  if (key_a.size() != key_b.size()) fail(ErrorCode::MalformedInput, "reconcile: key lengths differ");
  if (key_a.empty()) fail(ErrorCode::DegenerateInput, "reconcile: zero-length key");
  if (params.block_size_initial < 1 || params.passes < 1) {
    fail(ErrorCode::MalformedInput, "reconcile: block size and pass count must be at least 1");
  }
  return Cascade(key_a, key_b, params, public_rng, channel).run();
}

}  // namespace qrelay
