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

#include <algorithm>
#include <cmath>

#include "labelbalance/balance_protocol.hpp"
#include "labelbalance/error.hpp"

namespace lb::protocol {

namespace {
enum Stream : std::uint64_t { kServe = 11, kTrim = 12, kNoise = 13 };
}

std::vector<Deficit> PlanDeficits(const ClientDataset& client,
                                  std::span<const std::size_t> target_per_label) {
  if (target_per_label.size() != static_cast<std::size_t>(client.num_classes())) {
    Fail(ErrorCode::kInvalidArgument, "one target per label required");
  }
  std::vector<Deficit> plan;
  for (int y = 0; y < client.num_classes(); ++y) {
    const std::size_t have = client.count(y);
    const std::size_t want = target_per_label[static_cast<std::size_t>(y)];
    if (have < want) plan.push_back({y, want - have});
  }
  std::stable_sort(plan.begin(), plan.end(), [&client](const Deficit& a, const Deficit& b) {
    const auto ca = client.count(a.label);
    const auto cb = client.count(b.label);
    return ca != cb ? ca < cb : a.label < b.label;
  });
  return plan;
}

std::vector<std::size_t> SupplementTargets(const ClientDataset& client, double supplement_pct) {
  if (!(supplement_pct >= 0.0) || !std::isfinite(supplement_pct)) {
    Fail(ErrorCode::kInvalidArgument, "supplement_pct must be finite and >= 0");
  }
  const double target = std::round(static_cast<double>(client.MaxClassCount()) * supplement_pct / 100.0);
  return std::vector<std::size_t>(static_cast<std::size_t>(client.num_classes()),
                                  static_cast<std::size_t>(target));
}

std::size_t RequestQuantity(double mix_fraction, std::size_t deficit) {
  if (!(mix_fraction >= 0.0 && mix_fraction <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "mix_fraction must lie in [0, 1]");
  }
  const double exact = mix_fraction * static_cast<double>(deficit);
  const double nearest = std::round(exact);
  const double wanted =
      std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact) ? nearest : std::ceil(exact);
  return std::min(deficit, static_cast<std::size_t>(wanted));
}

bool SupplyPolicy::Willing(const ClientDataset& responder, int label, std::size_t k) const {
  if (responder.count(label) == 0 || responder.size() < k) return false;
  return !willing || willing(responder.label_histogram(), label, k);
}

std::size_t SupplyPolicy::Capacity(const ClientDataset& responder, int label) const {
  const double fraction = std::clamp(capacity_fraction, 0.0, 1.0);
  return static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(responder.count(label)) + 1e-9));
}

BountyResponse ServeBounty(const ClientDataset& responder, const BountyRequest& request,
                           const SupplyPolicy& policy, const mixup::DpMixConfig& cfg, Rng& rng) {
  BountyResponse response;
  response.supplier = responder.client_id();
  response.requester = request.requester;
  response.label = request.label;
  if (!policy.Willing(responder, request.label, cfg.k)) return response;

  // Only Real examples are ever mixed, so nothing pseudo is re-shared.
  const bool all_real = responder.CountProvenance(Provenance::kReal) == responder.size();
  const ClientDataset filtered = all_real ? ClientDataset(responder.client_id(), 1) : responder.RealOnly();
  const ClientDataset& pool = all_real ? responder : filtered;
  if (!policy.Willing(pool, request.label, cfg.k)) return response;
  const std::size_t n = std::min(request.quantity, policy.Capacity(pool, request.label));
  response.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    response.samples.push_back(mixup::DpLabelHide(pool, request.label, cfg, rng));
  }
  return response;
}

BalanceOutcome RunBalance(const ClientDataset& requester, std::span<const Deficit> deficits,
                          const BalanceConfig& cfg, const Topology& topology,
                          std::span<const Peer> peers, const noise::GeneratorState& generator,
                          Rng& rng) {
  if (cfg.deadline < 1) Fail(ErrorCode::kDeadlineZero, "wait period must be at least one round");
  if (!(cfg.mix_fraction >= 0.0 && cfg.mix_fraction <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "mix_fraction must lie in [0, 1]");
  }
  mixup::Validate(cfg.mix);
  const int self = requester.client_id();
  if (!requester.empty() && generator.config.out_shape != requester[0].shape) {
    Fail(ErrorCode::kShapeMismatch, "noise generator shape " +
                                        ToString(generator.config.out_shape) +
                                        " differs from client data " + ToString(requester[0].shape));
  }

  BalanceOutcome outcome{requester, {}, {}, 0};
  int round = 0;
  std::uint64_t next_sequence = 0;

  for (std::size_t d = 0; d < deficits.size(); ++d) {
    const int label = deficits[d].label;
    const std::size_t required = deficits[d].quantity;
    DeficitReport report;
    report.label = label;
    report.required = required;

    std::size_t mixups_kept = 0;  // E
    std::vector<LabeledImage> received;

    const std::size_t wanted = RequestQuantity(cfg.mix_fraction, required);
    if (wanted > 0) {
      ++outcome.requests_sent;
      report.requested = wanted;
      const BountyRequest request{self, label, wanted, cfg.deadline, round};
      std::vector<BountyResponse> payloads;
      std::vector<Envelope> in_flight{
          {round, self, kBroadcast, next_sequence++, MessageType::kRequest, label, wanted, 0}};

      for (int now = round + 1; now <= round + cfg.deadline && !in_flight.empty(); ++now) {
        const auto deliveries = Route(in_flight, topology, &outcome.trace);
        in_flight.clear();
        for (const auto& delivery : deliveries) {
          if (delivery.type == MessageType::kRequest) {
            const auto responder = static_cast<std::size_t>(delivery.dst);
            if (responder >= peers.size() || peers[responder].data == nullptr) continue;
            Rng serve_rng = rng.Split({kServe, d, responder, delivery.sequence});
            BountyResponse response =
                ServeBounty(*peers[responder].data, request, peers[responder].policy, cfg.mix,
                            serve_rng);
            if (response.samples.empty()) continue;
            in_flight.push_back({now, delivery.dst, self, next_sequence++, MessageType::kResponse,
                                 label, response.samples.size(), payloads.size()});
            payloads.push_back(std::move(response));
          } else if (delivery.dst == self) {
            for (auto& sample : payloads[delivery.payload].samples) {
              if (sample.provenance == Provenance::kReal) ++report.real_images_received;
              received.push_back(std::move(sample));
            }
          }
        }
      }
      round += cfg.deadline;
    }
    report.received = received.size();

    // Trim to the requested size, uniformly at random.
    if (received.size() > wanted) {
      Rng trim_rng = rng.Split({kTrim, d});
      auto keep = trim_rng.SampleWithoutReplacement(received.size(), wanted);
      std::sort(keep.begin(), keep.end());
      std::vector<LabeledImage> trimmed;
      trimmed.reserve(wanted);
      for (std::size_t index : keep) trimmed.push_back(std::move(received[index]));
      received = std::move(trimmed);
    }
    mixups_kept = std::min(received.size(), wanted);
    report.mixups_kept = mixups_kept;
    report.noise_added = required - mixups_kept;

    for (auto& sample : received) outcome.dataset.Add(std::move(sample));
    Rng noise_rng = rng.Split({kNoise, d});
    for (std::size_t n = 0; n < report.noise_added; ++n) {
      LabeledImage image = noise::Generate(generator, noise_rng);
      image.label = label;
      outcome.dataset.Add(std::move(image));
    }
    outcome.reports.push_back(report);
  }
  return outcome;
}

FederationBalance BalanceFederation(std::span<const ClientDataset> clients, double supplement_pct,
                                    const BalanceConfig& cfg, const Topology& topology,
                                    const SupplyPolicy& policy,
                                    const noise::GeneratorState& generator, std::uint64_t seed) {
  if (topology.num_clients() != static_cast<int>(clients.size())) {
    Fail(ErrorCode::kConfig, "topology size differs from the number of clients");
  }
  std::vector<Peer> peers;
  peers.reserve(clients.size());
  for (const auto& client : clients) peers.push_back({&client, policy});

  FederationBalance result;
  const Rng root(seed);
  for (const auto& client : clients) {
    const auto targets = SupplementTargets(client, supplement_pct);
    const auto deficits = PlanDeficits(client, targets);
    Rng rng = root.Split(static_cast<std::uint64_t>(client.client_id()));
    BalanceOutcome outcome = RunBalance(client, deficits, cfg, topology, peers, generator, rng);
    result.clients.push_back(std::move(outcome.dataset));
    result.reports.push_back(std::move(outcome.reports));
    result.trace.insert(result.trace.end(), outcome.trace.begin(), outcome.trace.end());
  }
  return result;
}

}  // namespace lb::protocol
