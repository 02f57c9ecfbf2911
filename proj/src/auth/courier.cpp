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

#include "qrelay/auth.hpp"
#include "qrelay/error.hpp"

namespace qrelay {

// ---------------------------------------------------------------------------
// PoolRegistry / ReplayGuard
// ---------------------------------------------------------------------------

bool PoolRegistry::has(const NodeId& a, const NodeId& b) const { return pools_.contains(NodePair::of(a, b)); }

void PoolRegistry::create(const NodePair& pair, Bits bits, std::uint64_t session_id) {
  if (pools_.contains(pair)) fail(ErrorCode::Conflict, "pool " + pair.label() + " already exists");
  AuthKeyPool view(pair, {});
  view.append(bits, session_id);
  pools_.emplace(pair, std::array<AuthKeyPool, 2>{view, view});
}

void PoolRegistry::append(const NodePair& pair, std::span<const std::uint8_t> bits, std::uint64_t session_id) {
  auto it = pools_.find(pair);
  if (it == pools_.end()) {
    create(pair, Bits(bits.begin(), bits.end()), session_id);
    return;
  }
  for (auto& v : it->second) v.append(bits, session_id);
}

AuthKeyPool& PoolRegistry::view(const NodeId& owner, const NodeId& peer) {
  return const_cast<AuthKeyPool&>(static_cast<const PoolRegistry&>(*this).view(owner, peer));
}

const AuthKeyPool& PoolRegistry::view(const NodeId& owner, const NodeId& peer) const {
  const NodePair key = NodePair::of(owner, peer);
  auto it = pools_.find(key);
  if (it == pools_.end()) fail(ErrorCode::NoKey, owner + " shares no authentication key with " + peer);
  return it->second[key.first == owner ? 0 : 1];
}

std::vector<NodePair> PoolRegistry::pairs() const {
  std::vector<NodePair> out;
  out.reserve(pools_.size());
  for (const auto& [k, _] : pools_) out.push_back(k);
  return out;
}

bool PoolRegistry::symmetric(const NodePair& pair) const {
  auto it = pools_.find(pair);
  if (it == pools_.end()) return true;
  return it->second[0] == it->second[1];
}

bool ReplayGuard::fresh(const ClassicalEnvelope& env) const {
  auto it = last_.find({env.session_id, env.origin, env.destination});
  return it == last_.end() || env.sequence > it->second;
}

void ReplayGuard::accept(const ClassicalEnvelope& env) {
  last_[{env.session_id, env.origin, env.destination}] = env.sequence;
}

// ---------------------------------------------------------------------------
// Scheme requirements
// ---------------------------------------------------------------------------

std::vector<NodePair> scheme_pools(AuthScheme scheme, std::span<const NodeId> path) {
  std::vector<NodePair> out;
  if (path.size() < 2) return out;
  switch (scheme) {
    case AuthScheme::RelayMediated:
      for (std::size_t i = 0; i + 1 < path.size(); ++i) out.push_back(NodePair::of(path[i], path[i + 1]));
      break;
    case AuthScheme::EndToEnd:
      out.push_back(NodePair::of(path.front(), path.back()));
      break;
    case AuthScheme::FullChain:
      for (std::size_t i = 0; i < path.size(); ++i)
        for (std::size_t j = i + 1; j < path.size(); ++j) out.push_back(NodePair::of(path[i], path[j]));
      break;
  }
  return out;
}

void require_scheme_pools(AuthScheme scheme, std::span<const NodeId> path, const PoolRegistry& pools) {
  for (const auto& p : scheme_pools(scheme, path)) {
    if (!pools.has(p.first, p.second)) {
      fail(ErrorCode::NoKey, std::string(to_string(scheme)) + " needs a key shared by " + p.first + " and " +
                                 p.second);
    }
  }
}

// ---------------------------------------------------------------------------
// Delivery
// ---------------------------------------------------------------------------

namespace {

class Courier {
 public:
  Courier(AuthScheme scheme, std::span<const NodeId> path, AuthDomain& domain, const LinkTap& tap)
      : scheme_(scheme), path_(path), domain_(domain), tap_(tap) {
    if (path_.size() < 2) fail(ErrorCode::MalformedInput, "a delivery path needs at least two nodes");
  }

  DeliveryOutcome send(ClassicalEnvelope env) {
    if (!sign_for_next(0, env)) return std::move(out_);
    return walk(std::move(env), 1, false);
  }

  DeliveryOutcome inject(ClassicalEnvelope env, std::size_t receiver) {
    if (receiver < 1 || receiver >= path_.size()) fail(ErrorCode::MalformedInput, "injection point outside path");
    return walk(std::move(env), receiver, true);
  }

 private:
  void reject(std::size_t k, Rejection why, std::string detail) {
    out_.delivered = false;
    out_.rejected_by = path_[k];
    out_.reason = why;
    out_.detail = std::move(detail);
  }

  std::vector<NodeId> required_authors(std::size_t k) const {
    switch (scheme_) {
      case AuthScheme::RelayMediated: return {path_[k - 1]};
      case AuthScheme::EndToEnd: return {path_.front()};
      case AuthScheme::FullChain: return std::vector<NodeId>(path_.begin(), path_.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return {};
  }

  bool add_tag(std::size_t k, const NodeId& recipient, TagScope scope, ClassicalEnvelope& env) {
    try {
      AuthKeyPool& view = domain_.pools.view(path_[k], recipient);
      AuthTag placeholder{path_[k], recipient, view.consumed_offset(), 0, scope};
      env.tag_chain.push_back(placeholder);
      const Bytes input = env.digest_input(env.tag_chain.size() - 1);
      env.tag_chain.back() = make_tag(view, path_[k], recipient, input, domain_.params, scope);
      return true;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::KeyExhaustion) {
        reject(k, Rejection::KeyExhaustion, e.what());
      } else if (e.code() == ErrorCode::NoKey) {
        reject(k, Rejection::NoKey, e.what());
      } else {
        throw;
      }
      return false;
    }
  }

  bool sign_for_next(std::size_t k, ClassicalEnvelope& env) {
    switch (scheme_) {
      case AuthScheme::RelayMediated:
        return add_tag(k, path_[k + 1], TagScope::Payload, env);
      case AuthScheme::EndToEnd:
        return k == 0 ? add_tag(k, path_.back(), TagScope::Payload, env) : true;
      case AuthScheme::FullChain:
        for (std::size_t j = k + 1; j < path_.size(); ++j) {
          if (!add_tag(k, path_[j], TagScope::PayloadAndPriorTags, env)) return false;
        }
        return true;
    }
    return false;
  }

  bool check_at(std::size_t k, ClassicalEnvelope& env, HopRecord& hop) {
    const NodeId& me = path_[k];
    ReplayGuard& guard = domain_.guards[me];
    if (!guard.fresh(env)) {
      hop.rejection = Rejection::Replay;
      reject(k, Rejection::Replay, me + " saw a stale sequence number " + std::to_string(env.sequence));
      return false;
    }

    bool all_ok = true;
    for (const auto& author : required_authors(k)) {
      auto it = std::find_if(env.tag_chain.begin(), env.tag_chain.end(),
                             [&](const AuthTag& t) { return t.author == author && t.recipient == me; });
      if (it == env.tag_chain.end()) {
        hop.rejection = Rejection::MissingTag;
        reject(k, Rejection::MissingTag, me + " found no tag from " + author);
        return false;
      }
      const auto index = static_cast<std::size_t>(it - env.tag_chain.begin());
      TagCheck check;
      check.tag_index = index;
      check.author = author;
      check.key_offset = it->key_offset;
      try {
        AuthKeyPool& view = domain_.pools.view(me, author);
        if (it->key_offset + domain_.params.key_bits_per_tag <= view.bits().size()) {
          auto seg = view.segment(it->key_offset, domain_.params.key_bits_per_tag);
          check.key_segment.assign(seg.begin(), seg.end());
        }
        check.stale = it->key_offset < view.consumed_offset();
        try {
          check.ok = verify_tag(view, env.digest_input(index), *it, domain_.params);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::KeyExhaustion) throw;
          check.ok = false;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoKey) throw;
        hop.rejection = Rejection::NoKey;
        reject(k, Rejection::NoKey, e.what());
        return false;
      }
      all_ok = all_ok && check.ok;
      hop.checks.push_back(std::move(check));
    }
    if (!all_ok) {
      hop.rejection = Rejection::TamperAlarm;
      reject(k, Rejection::TamperAlarm, me + " rejected a tag on message " + std::to_string(env.sequence));
      return false;
    }
    guard.accept(env);
    hop.verified = true;
    std::erase_if(env.tag_chain, [&](const AuthTag& t) { return t.recipient == me; });
    return true;
  }

  DeliveryOutcome walk(ClassicalEnvelope env, std::size_t start, bool injected) {
    const std::size_t last = path_.size() - 1;
    for (std::size_t k = start; k <= last; ++k) {
      HopRecord hop;
      hop.from = path_[k - 1];
      hop.to = path_[k];
      if (tap_ && !(injected && k == start)) {
        const ClassicalEnvelope before = env;
        tap_(HopContext{k - 1, path_[k - 1], path_[k]}, env);
        hop.altered = !(env == before);
      }
      hop.received = env;

      const bool verifying = scheme_ != AuthScheme::EndToEnd || k == last;
      bool passed = true;
      if (verifying) passed = check_at(k, env, hop);
      if (k == last && passed) out_.destination_checks = hop.checks.size();
      out_.hops.push_back(std::move(hop));
      if (!passed) return std::move(out_);

      if (k == last) {
        out_.delivered = true;
        out_.final_envelope = std::move(env);
        return std::move(out_);
      }
      if (!sign_for_next(k, env)) return std::move(out_);
    }
    return std::move(out_);
  }

  AuthScheme scheme_;
  std::span<const NodeId> path_;
  AuthDomain& domain_;
  const LinkTap& tap_;
  DeliveryOutcome out_;
};

}  // namespace

DeliveryOutcome send_authenticated(AuthScheme scheme, std::span<const NodeId> path, ClassicalEnvelope envelope,
                                   AuthDomain& domain, const LinkTap& tap) {
  return Courier(scheme, path, domain, tap).send(std::move(envelope));
}

DeliveryOutcome deliver_forged(AuthScheme scheme, std::span<const NodeId> path, std::size_t receiver,
                               ClassicalEnvelope forged, AuthDomain& domain, const LinkTap& tap) {
  return Courier(scheme, path, domain, tap).inject(std::move(forged), receiver);
}

}  // namespace qrelay
