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

#include "qrelay/error.hpp"
#include "qrelay/protocol.hpp"

namespace qrelay {

RoundGroups classify_round(std::span<const Basis> bases) {
  RoundGroups groups;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= bases.size(); ++i) {
    if (i == bases.size() || bases[i] != bases[start]) {
      if (i - start >= 2) {
        groups.runs.push_back(Beneficiary{PositionPair{start, i - 1}});
      }
      start = i;
    }
  }
  return groups;
}

std::size_t GroupAssignment::used_rounds() const { return rounds.size() - unused_rounds(); }

std::size_t GroupAssignment::unused_rounds() const {
  std::size_t n = 0;
  for (const auto& r : rounds) n += r.unused() ? 1 : 0;
  return n;
}

double GroupAssignment::usable_fraction() const {
  if (rounds.empty()) return 0.0;
  return static_cast<double>(used_rounds()) / static_cast<double>(rounds.size());
}

std::map<PositionPair, std::vector<std::size_t>> GroupAssignment::rounds_by_pair() const {
  std::map<PositionPair, std::vector<std::size_t>> out;
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    for (const auto& b : rounds[r].runs) out[b.pair].push_back(r);
  }
  return out;
}

GroupAssignment sift_bases(std::span<const std::vector<Basis>> announced, std::size_t chain_length) {
  if (announced.empty()) fail(ErrorCode::MalformedInput, "nothing to sift");
  GroupAssignment out;
  out.chain_length = chain_length;
  out.rounds.reserve(announced.size());
  for (std::size_t r = 0; r < announced.size(); ++r) {
    if (announced[r].size() != chain_length) {
      fail(ErrorCode::MalformedInput, "round " + std::to_string(r) + " has inconsistent chain length");
    }
    out.rounds.push_back(classify_round(announced[r]));
  }
  return out;
}

GroupAssignment sift(std::span<const RoundRecord> records) {
  if (records.empty()) fail(ErrorCode::MalformedInput, "nothing to sift");
  const std::size_t n = records.front().bases.size();
  GroupAssignment out;
  out.chain_length = n;
  out.rounds.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.bases.size() != n || rec.bits.size() != n) {
      fail(ErrorCode::MalformedInput,
           "round " + std::to_string(rec.round_index) + " has inconsistent chain length");
    }
    out.rounds.push_back(classify_round(rec.bases));
  }
  return out;
}

}  // namespace qrelay
