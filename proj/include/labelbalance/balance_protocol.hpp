/*
 * Copyright 2026 The labelbalance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "labelbalance/image.hpp"
#include "labelbalance/mixup_dp.hpp"
#include "labelbalance/natural_noise.hpp"
#include "labelbalance/rng.hpp"

namespace lb::protocol {

// ------------------------------------------------------------------ planning

struct Deficit {
  int label = 0;
  std::size_t quantity = 0;   // P for this label

  bool operator==(const Deficit&) const = default;
};

// One entry per label whose local count is below its target, deficit =
// target - count, ordered by ascending local count then label.
std::vector<Deficit> PlanDeficits(const ClientDataset& client,
                                  std::span<const std::size_t> target_per_label);

// Per-label target = supplement_pct percent of the client's largest class
// count, rounded to nearest.
std::vector<std::size_t> SupplementTargets(const ClientDataset& client, double supplement_pct);

// ceil(mix_fraction * P), guarded against binary rounding (0.7 * 10 must give
// 7, not 8) and clipped to [0, P].
std::size_t RequestQuantity(double mix_fraction, std::size_t deficit);

// ------------------------------------------------------------------ messages

struct BountyRequest {
  int requester = 0;
  int label = 0;
  std::size_t quantity = 0;
  int deadline = 2;   // rounds the requester waits after issuing
  int issued_round = 0;
};

struct BountyResponse {
  int supplier = 0;
  int requester = 0;
  int label = 0;
  std::vector<LabeledImage> samples;   // Mixup provenance, label == request label
};

// Responders serve only when they hold the label and can form a k-way mix;
// `willing` can veto further but cannot override those two conditions.
struct SupplyPolicy {
  double capacity_fraction = 1.0;
  std::function<bool(std::span<const std::size_t> histogram, int label, std::size_t k)> willing;

  bool Willing(const ClientDataset& responder, int label, std::size_t k) const;
  std::size_t Capacity(const ClientDataset& responder, int label) const;
};

// min(quantity, floor(capacity_fraction * count_j)) DP-LabelHide samples, or
// an empty response when unwilling. Each sample is an independent draw, so
// ingredients repeat across samples but never within one.
BountyResponse ServeBounty(const ClientDataset& responder, const BountyRequest& request,
                           const SupplyPolicy& policy, const mixup::DpMixConfig& cfg, Rng& rng);

// ------------------------------------------------------------------ network

inline constexpr int kServer = -1;
inline constexpr int kBroadcast = -2;

enum class TopologyMode { kServerStar, kPeerEdges };

class Topology {
 public:
  static Topology ServerStar(int num_clients);
  static Topology PeerEdges(int num_clients, std::span<const std::pair<int, int>> edges);
  // "star", or an edge list such as "0-1 1-2" (separators: space or comma).
  static Topology Parse(const std::string& text, int num_clients);

  TopologyMode mode() const noexcept { return mode_; }
  int num_clients() const noexcept { return num_clients_; }
  // Whether `a` can reach `b` through the network (via the server for stars).
  bool Connected(int a, int b) const;
  // Clients that receive a broadcast from `client`, ascending.
  std::vector<int> Recipients(int client) const;
  bool Symmetric() const;

 private:
  TopologyMode mode_ = TopologyMode::kServerStar;
  int num_clients_ = 0;
  std::vector<std::vector<bool>> adjacency_;
};

enum class MessageType { kRequest, kResponse };
const char* ToString(MessageType type);

struct Envelope {
  int round_sent = 0;
  int src = 0;
  int dst = kBroadcast;
  std::uint64_t sequence = 0;
  MessageType type = MessageType::kRequest;
  int label = 0;
  std::size_t count = 0;
  std::size_t payload = 0;   // index into the sender-side payload table
};

struct Delivery {
  int round = 0;
  int src = 0;
  int dst = 0;
  std::uint64_t sequence = 0;
  MessageType type = MessageType::kRequest;
  int label = 0;
  std::size_t count = 0;
  std::size_t payload = 0;
};

struct TraceRow {
  int round = 0;
  MessageType type = MessageType::kRequest;
  int src = 0;   // kServer for the relay hop
  int dst = 0;
  int label = 0;
  std::size_t count = 0;
};

// Every delivery lands one round after sending. Stars relay through the
// server (two trace hops); peer messages need a direct edge and are silently
// dropped otherwise. Output is ordered by (round, src, sequence, dst).
std::vector<Delivery> Route(std::span<const Envelope> messages, const Topology& topology,
                            std::vector<TraceRow>* trace = nullptr);

// CSV header round,msg_type,src,dst,label,count; the server is written as
// "server".
void WriteTraceCsv(std::ostream& out, std::span<const TraceRow> rows);

// ------------------------------------------------------------------ balancing

struct BalanceConfig {
  // alpha: fraction of each deficit requested as mixups; the remainder is
  // natural noise.
  double mix_fraction = 0.5;
  int deadline = 2;
  mixup::DpMixConfig mix;
};

struct Peer {
  const ClientDataset* data = nullptr;   // pre-balance local data
  SupplyPolicy policy;
};

struct DeficitReport {
  int label = 0;
  std::size_t required = 0;    // P
  std::size_t requested = 0;   // ceil(alpha * P), 0 when no request was sent
  std::size_t received = 0;    // mixups delivered before the deadline
  std::size_t mixups_kept = 0; // E
  std::size_t noise_added = 0; // P - E
  // Real-provenance images observed in delivered payloads; always 0.
  std::size_t real_images_received = 0;
};

struct BalanceOutcome {
  ClientDataset dataset;
  std::vector<DeficitReport> reports;
  std::vector<TraceRow> trace;
  int requests_sent = 0;
};

// Label Balance for one requester. For each deficit (j, P), in order: send a
// bounty for ceil(alpha * P) label-j samples, wait `deadline` rounds, trim the
// received set uniformly at random to the requested size, fill the remaining
// P - E with natural noise labeled j, and union everything into the local
// data. Existing examples are never removed. `peers` is indexed by client id;
// the requester's own entry is ignored.
BalanceOutcome RunBalance(const ClientDataset& requester, std::span<const Deficit> deficits,
                          const BalanceConfig& cfg, const Topology& topology,
                          std::span<const Peer> peers, const noise::GeneratorState& generator,
                          Rng& rng);

struct FederationBalance {
  std::vector<ClientDataset> clients;
  std::vector<std::vector<DeficitReport>> reports;   // per client
  std::vector<TraceRow> trace;                       // requester order
};

// Balances every client against the pre-balance state of all the others,
// with per-label targets from SupplementTargets. Client c uses stream
// Rng(seed).Split(c), so results do not depend on evaluation order.
FederationBalance BalanceFederation(std::span<const ClientDataset> clients, double supplement_pct,
                                    const BalanceConfig& cfg, const Topology& topology,
                                    const SupplyPolicy& policy,
                                    const noise::GeneratorState& generator, std::uint64_t seed);

}  // namespace lb::protocol
