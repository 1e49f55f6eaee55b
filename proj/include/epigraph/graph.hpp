#pragma once

// Interaction networks and the per-step union graph.
//
// Households are fixed cliques. Each occupation keeps a fixed membership but
// gets a fresh Watts-Strogatz realization every step. The global random
// network is re-drawn every step by pairing interaction stubs so that each
// agent's expected degree equals its random_degree.

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "epigraph/rng.hpp"
#include "epigraph/state.hpp"
#include "epigraph/types.hpp"

namespace epigraph {

// Directed edge list for one step. Every interaction appears once in each
// direction.
struct StepGraph {
  Step step = 0;
  std::vector<AgentId> src;
  std::vector<AgentId> dst;
  std::vector<NetworkKind> kind;

  std::size_t size() const noexcept { return src.size(); }
  bool empty() const noexcept { return src.empty(); }

  void reserve(std::size_t n) {
    src.reserve(n);
    dst.reserve(n);
    kind.reserve(n);
  }

  void add(AgentId from, AgentId to, NetworkKind k) {
    src.push_back(from);
    dst.push_back(to);
    kind.push_back(k);
  }

  void add_undirected(AgentId u, AgentId v, NetworkKind k) {
    add(u, v, k);
    add(v, u, k);
  }

  std::array<std::size_t, kNetworkKinds> count_by_kind() const noexcept {
    std::array<std::size_t, kNetworkKinds> out{};
    for (NetworkKind k : kind) ++out[index_of(k)];
    return out;
  }
};

inline void write_graph_csv(std::ostream& out, const StepGraph& g) {
  out << "src,dst,network_kind\n";
  for (std::size_t e = 0; e < g.size(); ++e) {
    out << g.src[e] << ',' << g.dst[e] << ',' << kNetworkNames[index_of(g.kind[e])] << '\n';
  }
}

struct HouseholdNetwork {
  std::vector<std::vector<AgentId>> households;
};

// Groups agents by dense household id. Empty ids are kept as empty groups.
inline HouseholdNetwork group_households(std::span<const std::uint32_t> household_id) {
  HouseholdNetwork net;
  for (AgentId i = 0; i < household_id.size(); ++i) {
    const auto h = household_id[i];
    if (h >= net.households.size()) net.households.resize(h + 1);
    net.households[h].push_back(i);
  }
  return net;
}

// m * (m - 1) directed edges per household of size m.
inline std::vector<std::pair<AgentId, AgentId>> build_households(const HouseholdNetwork& net) {
  std::vector<std::pair<AgentId, AgentId>> edges;
  for (const auto& members : net.households) {
    for (AgentId u : members) {
      for (AgentId v : members) {
        if (u != v) edges.emplace_back(u, v);
      }
    }
  }
  return edges;
}

namespace detail {

// Undirected Watts-Strogatz edges over positions 0..n-1, rewiring in the
// order of networkx.watts_strogatz_graph.
template <class Stream>
std::vector<std::pair<std::uint32_t, std::uint32_t>> watts_strogatz_positions(std::uint32_t n, int k,
                                                                               double beta, Stream& rng) {
  std::vector<std::vector<std::uint32_t>> adj(n);
  const int half = k / 2;
  for (std::uint32_t u = 0; u < n; ++u) {
    for (int j = 1; j <= half; ++j) {
      const std::uint32_t v = (u + static_cast<std::uint32_t>(j)) % n;
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
  }
  const auto connected = [&](std::uint32_t a, std::uint32_t b) {
    const auto& small = adj[a].size() <= adj[b].size() ? adj[a] : adj[b];
    const std::uint32_t other = adj[a].size() <= adj[b].size() ? b : a;
    return std::find(small.begin(), small.end(), other) != small.end();
  };
  const auto unlink = [&](std::uint32_t a, std::uint32_t b) {
    adj[a].erase(std::find(adj[a].begin(), adj[a].end(), b));
    adj[b].erase(std::find(adj[b].begin(), adj[b].end(), a));
  };
  if (beta > 0.0) {
    for (int j = 1; j <= half; ++j) {
      for (std::uint32_t u = 0; u < n; ++u) {
        if (!(rng.uniform() < beta)) continue;
        const std::uint32_t v = (u + static_cast<std::uint32_t>(j)) % n;
        if (adj[u].size() >= n - 1) continue;
        std::uint32_t w = static_cast<std::uint32_t>(rng.below(n));
        while (w == u || connected(u, w)) w = static_cast<std::uint32_t>(rng.below(n));
        unlink(u, v);
        adj[u].push_back(w);
        adj[w].push_back(u);
      }
    }
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(static_cast<std::size_t>(n) * half);
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t w : adj[u]) {
      if (u < w) edges.emplace_back(u, w);
    }
  }
  return edges;
}

}  // namespace detail

// Watts-Strogatz small world over `nodes`: ring lattice of degree k, each
// lattice edge rewired with probability beta. Directed, both ways.
template <class Stream>
std::vector<std::pair<AgentId, AgentId>> watts_strogatz(std::span<const AgentId> nodes, int k, double beta,
                                                        Stream& rng) {
  if (k % 2 != 0) throw std::invalid_argument("watts_strogatz: k must be even");
  if (k < 0 || static_cast<std::size_t>(k) >= nodes.size()) {
    throw std::invalid_argument("watts_strogatz: k must be smaller than the node count");
  }
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("watts_strogatz: beta must be in [0, 1]");
  const auto undirected =
      detail::watts_strogatz_positions(static_cast<std::uint32_t>(nodes.size()), k, beta, rng);
  std::vector<std::pair<AgentId, AgentId>> out;
  out.reserve(undirected.size() * 2);
  for (auto [a, b] : undirected) {
    out.emplace_back(nodes[a], nodes[b]);
    out.emplace_back(nodes[b], nodes[a]);
  }
  return out;
}

// Nearest even integer to `mean` (halves round up), then capped below `n`.
inline int lattice_degree(double mean, std::size_t n) {
  int k = 2 * static_cast<int>(std::floor(mean / 2.0 + 0.5));
  if (k < 0) k = 0;
  if (n == 0) return 0;
  const int cap = static_cast<int>(n - 1) - static_cast<int>((n - 1) % 2);
  return std::min(k, cap);
}

struct NetworkConfig {
  std::array<double, kOccupations> occupation_mean_interactions{};
  double occupation_rewire_prob = 0.1;
};

// Static network structure of one population.
struct PopulationNetworks {
  HouseholdNetwork households;
  std::vector<std::pair<AgentId, AgentId>> household_edges;
  std::array<std::vector<AgentId>, kOccupations> occupation_members;

  static PopulationNetworks from_state(const AgentColumns& st) {
    PopulationNetworks net;
    net.households = group_households(st.household_id);
    net.household_edges = build_households(net.households);
    for (AgentId i = 0; i < st.size(); ++i) {
      net.occupation_members[st.occupation[i] - 1].push_back(i);
    }
    return net;
  }
};

// Configuration-model pairing: agent i contributes floor(d_i) stubs plus one
// more with probability frac(d_i); shuffled stubs are paired consecutively and
// self-pairs dropped.
inline void add_random_network(StepGraph& g, const AgentColumns& st, const KeyedRng& rng, Step step) {
  KeyedStream stream(rng, static_cast<std::uint32_t>(step), 0, Purpose::GraphRandom);
  std::vector<AgentId> stubs;
  stubs.reserve(static_cast<std::size_t>(st.size() * 6));
  for (AgentId i = 0; i < st.size(); ++i) {
    if (st.disease_stage[i] == Stage::Dead) continue;
    const double d = st.random_degree[i];
    if (!(d > 0.0)) continue;
    const double whole = std::floor(d);
    auto count = static_cast<std::size_t>(whole);
    if (stream.uniform() < d - whole) ++count;
    stubs.insert(stubs.end(), count, i);
  }
  for (std::size_t i = stubs.size(); i > 1; --i) {
    std::swap(stubs[i - 1], stubs[stream.below(i)]);
  }
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    if (stubs[i] != stubs[i + 1]) g.add_undirected(stubs[i], stubs[i + 1], NetworkKind::Random);
  }
}

inline void add_occupation_networks(StepGraph& g, const PopulationNetworks& net, const AgentColumns& st,
                                    const NetworkConfig& cfg, const KeyedRng& rng, Step step) {
  std::vector<AgentId> alive;
  for (int occ = 0; occ < kOccupations; ++occ) {
    alive.clear();
    for (AgentId i : net.occupation_members[occ]) {
      if (st.disease_stage[i] != Stage::Dead) alive.push_back(i);
    }
    const int k = lattice_degree(cfg.occupation_mean_interactions[occ], alive.size());
    if (k <= 0) continue;
    KeyedStream stream(rng, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(occ),
                       Purpose::GraphOccupation);
    // who sits next to whom on the ring changes every step
    for (std::size_t i = alive.size(); i > 1; --i) {
      std::swap(alive[i - 1], alive[stream.below(i)]);
    }
    const auto edges = detail::watts_strogatz_positions(static_cast<std::uint32_t>(alive.size()), k,
                                                        cfg.occupation_rewire_prob, stream);
    for (auto [a, b] : edges) g.add_undirected(alive[a], alive[b], NetworkKind::Occupation);
  }
}

// Union of household, occupation and random interactions for `step`. Dead
// agents have no edges; quarantined agents keep theirs.
inline StepGraph realize_step_graph(const PopulationNetworks& net, const AgentColumns& st,
                                    const NetworkConfig& cfg, const KeyedRng& rng, Step step) {
  StepGraph g;
  g.step = step;
  g.reserve(net.household_edges.size() + st.size() * 10);
  for (auto [u, v] : net.household_edges) {
    if (st.disease_stage[u] != Stage::Dead && st.disease_stage[v] != Stage::Dead) {
      g.add(u, v, NetworkKind::Household);
    }
  }
  add_occupation_networks(g, net, st, cfg, rng, step);
  add_random_network(g, st, rng, step);
  return g;
}

}  // namespace epigraph
