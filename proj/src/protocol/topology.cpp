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
#include <ostream>
#include <sstream>
#include <tuple>

#include "labelbalance/balance_protocol.hpp"
#include "labelbalance/error.hpp"

namespace lb::protocol {

Topology Topology::ServerStar(int num_clients) {
  if (num_clients < 1) Fail(ErrorCode::kInvalidArgument, "topology needs at least one client");
  Topology t;
  t.mode_ = TopologyMode::kServerStar;
  t.num_clients_ = num_clients;
  return t;
}

Topology Topology::PeerEdges(int num_clients, std::span<const std::pair<int, int>> edges) {
  if (num_clients < 1) Fail(ErrorCode::kInvalidArgument, "topology needs at least one client");
  Topology t;
  t.mode_ = TopologyMode::kPeerEdges;
  t.num_clients_ = num_clients;
  t.adjacency_.assign(static_cast<std::size_t>(num_clients),
                      std::vector<bool>(static_cast<std::size_t>(num_clients), false));
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= num_clients || b >= num_clients || a == b) {
      Fail(ErrorCode::kConfig, "bad edge " + std::to_string(a) + "-" + std::to_string(b));
    }
    t.adjacency_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = true;
    t.adjacency_[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = true;
  }
  return t;
}

Topology Topology::Parse(const std::string& text, int num_clients) {
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  std::string token;
  std::vector<std::pair<int, int>> edges;
  bool saw_star = false;
  bool saw_edges_keyword = false;
  while (in >> token) {
    if (token == "star") {
      saw_star = true;
      continue;
    }
    if (token == "none" || token == "edges") {
      saw_edges_keyword = true;
      continue;
    }
    const auto dash = token.find('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 == token.size()) {
      Fail(ErrorCode::kConfig, "topology token '" + token + "' is not 'star' or 'a-b'");
    }
    try {
      std::size_t used_a = 0;
      std::size_t used_b = 0;
      const int a = std::stoi(token.substr(0, dash), &used_a);
      const int b = std::stoi(token.substr(dash + 1), &used_b);
      if (used_a != dash || used_b != token.size() - dash - 1) throw std::invalid_argument(token);
      edges.emplace_back(a, b);
    } catch (const std::logic_error&) {
      Fail(ErrorCode::kConfig, "topology token '" + token + "' is not 'a-b'");
    }
  }
  if (saw_star) {
    if (!edges.empty() || saw_edges_keyword) {
      Fail(ErrorCode::kConfig, "topology mixes 'star' with an edge list");
    }
    return ServerStar(num_clients);
  }
  return PeerEdges(num_clients, edges);
}

bool Topology::Connected(int a, int b) const {
  if (a < 0 || b < 0 || a >= num_clients_ || b >= num_clients_ || a == b) return false;
  if (mode_ == TopologyMode::kServerStar) return true;
  return adjacency_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
}

std::vector<int> Topology::Recipients(int client) const {
  std::vector<int> out;
  for (int other = 0; other < num_clients_; ++other) {
    if (Connected(client, other)) out.push_back(other);
  }
  return out;
}

bool Topology::Symmetric() const {
  for (int a = 0; a < num_clients_; ++a) {
    for (int b = 0; b < num_clients_; ++b) {
      if (Connected(a, b) != Connected(b, a)) return false;
    }
  }
  return true;
}

const char* ToString(MessageType type) {
  return type == MessageType::kRequest ? "request" : "response";
}

std::vector<Delivery> Route(std::span<const Envelope> messages, const Topology& topology,
                            std::vector<TraceRow>* trace) {
  std::vector<Delivery> out;
  for (const auto& message : messages) {
    std::vector<int> targets;
    if (message.dst == kBroadcast) {
      targets = topology.Recipients(message.src);
    } else if (topology.Connected(message.src, message.dst)) {
      targets.push_back(message.dst);
    }
    if (trace != nullptr && topology.mode() == TopologyMode::kServerStar && !targets.empty()) {
      trace->push_back({message.round_sent, message.type, message.src, kServer, message.label,
                        message.count});
    }
    for (int dst : targets) {
      const int arrival = message.round_sent + 1;
      if (trace != nullptr) {
        const int hop_src = topology.mode() == TopologyMode::kServerStar ? kServer : message.src;
        trace->push_back({arrival, message.type, hop_src, dst, message.label, message.count});
      }
      out.push_back({arrival, message.src, dst, message.sequence, message.type, message.label,
                     message.count, message.payload});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Delivery& a, const Delivery& b) {
    return std::tie(a.round, a.src, a.sequence, a.dst) < std::tie(b.round, b.src, b.sequence, b.dst);
  });
  return out;
}

void WriteTraceCsv(std::ostream& out, std::span<const TraceRow> rows) {
  auto node = [](int id) { return id == kServer ? std::string("server") : std::to_string(id); };
  out << "round,msg_type,src,dst,label,count\n";
  for (const auto& row : rows) {
    out << row.round << ',' << ToString(row.type) << ',' << node(row.src) << ',' << node(row.dst)
        << ',' << row.label << ',' << row.count << '\n';
  }
}

}  // namespace lb::protocol
