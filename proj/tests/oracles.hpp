// Copyright 2026 The msot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Independent reference solvers used only by the tests.

#ifndef MSOT_TESTS_ORACLES_HPP_
#define MSOT_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

namespace msot::testing {

// Successive shortest paths on the complete bipartite graph with Dijkstra
// over reduced costs. O((n + m) * n * m); meant for n, m in the tens.
// costs are row-major n x m. Returns the optimal cost and fills `flow`.
inline double SspTransport(const std::vector<double>& supply,
                           const std::vector<double>& demand,
                           const std::vector<double>& costs,
                           std::vector<double>* flow_out = nullptr) {
  const std::size_t n = supply.size();
  const std::size_t m = demand.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> rs = supply;
  std::vector<double> rd = demand;
  std::vector<double> flow(n * m, 0.0);
  // Potentials: sources then targets.
  std::vector<double> pot(n + m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double lo = inf;
    for (std::size_t i = 0; i < n; ++i) lo = std::min(lo, costs[i * m + j]);
    pot[n + j] = lo;
  }
  double total = 0.0;
  for (double s : supply) total += s;
  const double stop = 1e-15 * std::max(1.0, total);

  std::vector<double> dist(n + m);
  std::vector<int> prev(n + m);
  std::vector<char> done(n + m);
  for (int guard = 0; guard < 100000; ++guard) {
    double left = 0.0;
    for (double s : rs) left = std::max(left, s);
    if (left <= stop) break;

    std::fill(dist.begin(), dist.end(), inf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (rs[i] > stop) dist[i] = 0.0;
    }
    for (;;) {
      int u = -1;
      for (std::size_t v = 0; v < n + m; ++v) {
        if (!done[v] && dist[v] < inf && (u < 0 || dist[v] < dist[u])) u = static_cast<int>(v);
      }
      if (u < 0) break;
      done[u] = 1;
      if (static_cast<std::size_t>(u) < n) {
        for (std::size_t j = 0; j < m; ++j) {
          const double r = std::max(0.0, costs[u * m + j] + pot[u] - pot[n + j]);
          if (dist[u] + r < dist[n + j]) {
            dist[n + j] = dist[u] + r;
            prev[n + j] = u;
          }
        }
      } else {
        const std::size_t j = u - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (flow[i * m + j] <= 0.0) continue;
          const double r = std::max(0.0, -costs[i * m + j] + pot[u] - pot[i]);
          if (dist[u] + r < dist[i]) {
            dist[i] = dist[u] + r;
            prev[i] = u;
          }
        }
      }
    }
    int end = -1;
    for (std::size_t j = 0; j < m; ++j) {
      if (rd[j] > stop && dist[n + j] < inf &&
          (end < 0 || dist[n + j] < dist[n + end])) {
        end = static_cast<int>(j);
      }
    }
    if (end < 0) break;
    double reach = 0.0;
    for (std::size_t v = 0; v < n + m; ++v) {
      if (dist[v] < inf) reach = std::max(reach, dist[v]);
    }
    for (std::size_t v = 0; v < n + m; ++v) pot[v] += dist[v] < inf ? dist[v] : reach;

    double push = rd[end];
    int v = static_cast<int>(n) + end;
    while (prev[v] >= 0) {
      const int u = prev[v];
      if (static_cast<std::size_t>(u) >= n) push = std::min(push, flow[v * m + (u - n)]);
      v = u;
    }
    push = std::min(push, rs[v]);
    rs[v] -= push;
    rd[end] -= push;
    v = static_cast<int>(n) + end;
    while (prev[v] >= 0) {
      const int u = prev[v];
      if (static_cast<std::size_t>(u) < n) {
        flow[u * m + (v - n)] += push;
      } else {
        flow[v * m + (u - n)] -= push;
      }
      v = u;
    }
  }
  long double cost = 0.0L;
  for (std::size_t k = 0; k < n * m; ++k) cost += static_cast<long double>(flow[k]) * costs[k];
  if (flow_out != nullptr) *flow_out = flow;
  return static_cast<double>(cost);
}

struct OracleArc {
  int source = 0;
  int target = 0;
  double cost = 0.0;
  double capacity = std::numeric_limits<double>::infinity();
};

struct OracleResult {
  double moved = 0.0;  // mass carried (the max flow when costs are ignored)
  double cost = 0.0;
  std::vector<double> flow;  // per arc
};

// Min-cost flow on an explicit arc list with capacities: successive shortest
// paths with Bellman-Ford over the residual graph (super source, sources,
// targets, super sink). Independent of the simplex code; small inputs only.
inline OracleResult SspSparse(const std::vector<double>& supply,
                              const std::vector<double>& demand,
                              const std::vector<OracleArc>& arcs) {
  const int n = static_cast<int>(supply.size());
  const int m = static_cast<int>(demand.size());
  const int s = n + m, t = n + m + 1, nodes = n + m + 2;
  struct Edge {
    int to;
    double cap;
    double cost;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> out(nodes);
  auto add = [&](int u, int v, double cap, double cost) {
    out[u].push_back(static_cast<int>(edges.size()));
    edges.push_back({v, cap, cost});
    out[v].push_back(static_cast<int>(edges.size()));
    edges.push_back({u, 0.0, -cost});
  };
  for (int i = 0; i < n; ++i) add(s, i, supply[i], 0.0);
  for (const OracleArc& a : arcs) add(a.source, n + a.target, a.capacity, a.cost);
  for (int j = 0; j < m; ++j) add(n + j, t, demand[j], 0.0);

  const double inf = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (double v : supply) total += v;
  const double eps = 1e-14 * std::max(1.0, total);
  OracleResult result;
  std::vector<double> dist(nodes);
  std::vector<int> via(nodes);
  for (int guard = 0; guard < 1000000; ++guard) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(via.begin(), via.end(), -1);
    dist[s] = 0.0;
    for (int round = 0; round < nodes; ++round) {
      bool changed = false;
      for (int u = 0; u < nodes; ++u) {
        if (dist[u] == inf) continue;
        for (int e : out[u]) {
          if (edges[e].cap <= eps) continue;
          const double d = dist[u] + edges[e].cost;
          if (d < dist[edges[e].to] - 1e-15) {
            dist[edges[e].to] = d;
            via[edges[e].to] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[t] == inf) break;
    double push = inf;
    for (int v = t; v != s; v = edges[via[v] ^ 1].to) push = std::min(push, edges[via[v]].cap);
    for (int v = t; v != s; v = edges[via[v] ^ 1].to) {
      edges[via[v]].cap -= push;
      edges[via[v] ^ 1].cap += push;
    }
    result.moved += push;
  }
  result.flow.assign(arcs.size(), 0.0);
  long double cost = 0.0L;
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    // Arc k is edge pair n + k: forward at 2 * (n + k), its reverse holds the flow.
    const double f = edges[2 * (n + k) + 1].cap;
    result.flow[k] = f;
    cost += static_cast<long double>(f) * arcs[k].cost;
  }
  result.cost = static_cast<double>(cost);
  return result;
}

}  // namespace msot::testing

#endif  // MSOT_TESTS_ORACLES_HPP_
