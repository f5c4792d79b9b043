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

#include "msot/netflow.hpp"

#include <algorithm>
#include <climits>
#include <deque>
#include <cmath>
#include <ostream>
#include <unordered_map>
#include <utility>

#include "msot/core.hpp"
#include "msot/error.hpp"

namespace msot {

TransportInstance::TransportInstance(std::vector<double> supplies,
                                     std::vector<double> demands,
                                     std::vector<Arc> arcs)
    : supplies_(std::move(supplies)),
      demands_(std::move(demands)),
      arcs_(std::move(arcs)) {
  for (const Arc& a : arcs_) has_capacities_ |= a.capacity != kUnlimited;
  Validate();
}

TransportInstance TransportInstance::Dense(std::vector<double> supplies,
                                           std::vector<double> demands,
                                           std::vector<double> costs) {
  TransportInstance inst;
  inst.supplies_ = std::move(supplies);
  inst.demands_ = std::move(demands);
  inst.dense_costs_ = std::move(costs);
  inst.dense_ = true;
  Require(inst.dense_costs_.size() == inst.supplies_.size() * inst.demands_.size(),
          "dense cost matrix has the wrong size");
  inst.Validate();
  return inst;
}

void TransportInstance::set_capacity(std::size_t a, double capacity) {
  Require(!dense_, "dense instances are uncapacitated");
  Require(a < arcs_.size(), "arc index out of range");
  Require(capacity > 0.0, "capacities must be positive");
  arcs_[a].capacity = capacity;
  if (capacity != kUnlimited) has_capacities_ = true;
}

void TransportInstance::ClearCapacities() {
  for (Arc& a : arcs_) a.capacity = kUnlimited;
  has_capacities_ = false;
}

void TransportInstance::Validate() const {
  Require(!supplies_.empty() && !demands_.empty(),
          "transport instance needs sources and targets");
  for (double s : supplies_) Require(std::isfinite(s) && s >= 0.0, "invalid supply");
  for (double d : demands_) Require(std::isfinite(d) && d >= 0.0, "invalid demand");
  const int n = static_cast<int>(supplies_.size());
  const int m = static_cast<int>(demands_.size());
  for (const Arc& a : arcs_) {
    Require(a.source >= 0 && a.source < n && a.target >= 0 && a.target < m,
            "arc endpoint out of range");
    Require(std::isfinite(a.cost), "non-finite arc cost");
    Require(a.capacity > 0.0, "capacities must be positive");
  }
  for (double c : dense_costs_) Require(std::isfinite(c), "non-finite arc cost");
  Require(num_arcs() + supplies_.size() + demands_.size() <
              static_cast<std::size_t>(INT_MAX),
          "instance too large");
}

namespace {

constexpr std::int8_t kLower = 1;
constexpr std::int8_t kUpper = -1;
constexpr std::int8_t kTree = 0;
constexpr std::int8_t kUp = 1;
constexpr std::int8_t kDown = -1;

class NetworkSimplex {
 public:
  NetworkSimplex(const TransportInstance& inst, const SolverOptions& options)
      : inst_(inst),
        dense_(inst.dense()),
        n_(static_cast<int>(inst.num_sources())),
        m_(static_cast<int>(inst.num_targets())),
        num_nodes_(n_ + m_),
        root_(n_ + m_),
        num_arcs_(static_cast<int>(inst.num_arcs())),
        over_base_(num_arcs_ + num_nodes_) {
    b_.resize(num_nodes_);
    std::vector<double> s = inst.supplies();
    std::vector<double> d = inst.demands();
    const double total_s = CompensatedSum(s);
    const double total_d = CompensatedSum(d);
    const double scale = std::max({1.0, total_s, total_d});
    Require(std::abs(total_s - total_d) <= 1e-9 * scale,
            "unbalanced instance: supplies and demands differ");
    // Absorb the rounding residual into the largest demand.
    auto largest = std::max_element(d.begin(), d.end());
    *largest = std::max(0.0, *largest + (total_s - total_d));
    double max_b = 0.0;
    for (int i = 0; i < n_; ++i) {
      b_[i] = s[i];
      max_b = std::max(max_b, s[i]);
    }
    for (int j = 0; j < m_; ++j) {
      b_[n_ + j] = -d[j];
      max_b = std::max(max_b, d[j]);
    }
    total_supply_ = total_s;
    flow_eps_ = 1e-13 * std::max(max_b, 1e-300);

    double max_cost = 0.0;
    for (std::size_t a = 0; a < inst.num_arcs(); ++a) {
      max_cost = std::max(max_cost, std::abs(inst.cost(a)));
    }
    art_cost_ = 1.0 + static_cast<double>(num_nodes_) * max_cost;
    eps_ = options.pricing_tolerance * std::max(1.0, max_cost);
    block_size_ = options.block_size > 0
                      ? options.block_size
                      : std::max<std::size_t>(
                            10, static_cast<std::size_t>(std::sqrt(
                                    static_cast<double>(std::max(num_arcs_, 1)))));
    if (options.reference_source_potentials.size() == static_cast<std::size_t>(n_) &&
        options.reference_target_potentials.size() == static_cast<std::size_t>(m_)) {
      reference_.resize(num_nodes_);
      for (int i = 0; i < n_; ++i) reference_[i] = -options.reference_source_potentials[i];
      for (int j = 0; j < m_; ++j) reference_[n_ + j] = options.reference_target_potentials[j];
    }
    if (!dense_) arcs_ = inst.arcs().data();
    costs_ = dense_ ? inst.dense_costs().data() : nullptr;

    const std::size_t total = num_nodes_ + 1;
    parent_.assign(total, -1);
    pred_.assign(total, -1);
    dir_.assign(total, kUp);
    flow_.assign(total, 0.0);
    pi_.assign(total, 0.0);
    size_.assign(total, 1);
    first_child_.assign(total, -1);
    next_sib_.assign(total, -1);
    prev_sib_.assign(total, -1);
    art_up_.resize(num_nodes_);
    for (int u = 0; u < num_nodes_; ++u) art_up_[u] = b_[u] >= 0.0;
  }

  void ColdStart() {
    over_arc_.clear();
    state_.assign(num_arcs_, kLower);
    std::fill(first_child_.begin(), first_child_.end(), -1);
    parent_[root_] = -1;
    size_[root_] = num_nodes_ + 1;
    pi_[root_] = 0.0;
    for (int u = 0; u < num_nodes_; ++u) {
      parent_[u] = root_;
      pred_[u] = num_arcs_ + u;
      size_[u] = 1;
      if (art_up_[u]) {
        dir_[u] = kUp;
        flow_[u] = b_[u];
        pi_[u] = 0.0;
      } else {
        dir_[u] = kDown;
        flow_[u] = -b_[u];
        pi_[u] = art_cost_;
      }
      Attach(root_, u);
    }
    warm_ = false;
  }

  bool WarmStart(const Basis& basis) {
    if (basis.num_sources != static_cast<std::size_t>(n_) ||
        basis.num_targets != static_cast<std::size_t>(m_) ||
        basis.tree.size() != static_cast<std::size_t>(num_nodes_)) {
      return false;
    }
    std::unordered_map<std::uint64_t, int> index;
    if (!dense_) {
      index.reserve(num_arcs_ * 2);
      for (int a = 0; a < num_arcs_; ++a) {
        index.emplace(Key(arcs_[a].source, arcs_[a].target), a);
      }
    }
    auto lookup = [&](int s, int t) -> int {
      if (s < 0 || s >= n_ || t < 0 || t >= m_) return -1;
      if (dense_) return s * m_ + t;
      auto it = index.find(Key(s, t));
      return it == index.end() ? -1 : it->second;
    };

    over_arc_.clear();
    state_.assign(num_arcs_, kLower);
    std::fill(first_child_.begin(), first_child_.end(), -1);
    parent_[root_] = -1;
    for (int u = 0; u < num_nodes_; ++u) {
      const Basis::Entry& e = basis.tree[u];
      if (e.parent < 0 || e.parent > num_nodes_ || e.parent == u) return false;
      parent_[u] = e.parent;
      dir_[u] = e.dir;
      if (e.artificial) {
        if (e.parent != root_ || (dir_[u] == kUp) != bool(art_up_[u])) return false;
        pred_[u] = num_arcs_ + u;
      } else {
        const int a = lookup(e.source, e.target);
        if (a < 0) return false;
        const int su = e.source;
        const int tu = n_ + e.target;
        const bool up = su == u && tu == e.parent;
        const bool down = tu == u && su == e.parent;
        if (!(up || down) || (up ? kUp : kDown) != e.dir) return false;
        pred_[u] = a;
        state_[a] = kTree;
      }
    }
    for (const ArcEnds& ends : basis.at_upper) {
      const int a = lookup(ends.source, ends.target);
      if (a < 0 || state_[a] != kLower || Cap(a) == kUnlimited) return false;
      state_[a] = kUpper;
    }
    for (int u = 0; u < num_nodes_; ++u) Attach(parent_[u], u);
    // Must be a spanning tree hanging from the root.
    BuildOrder();
    if (order_.size() != static_cast<std::size_t>(num_nodes_ + 1)) return false;
    std::fill(size_.begin(), size_.end(), 1);
    for (std::size_t k = order_.size(); k-- > 1;) size_[parent_[order_[k]]] += size_[order_[k]];
    if (!RecomputeTreeFlows(1e-12 * std::max(1.0, total_supply_), inst_.has_capacities())) {
      return false;
    }
    RecomputePotentials();
    warm_ = true;
    return true;
  }

  void Run() {
    const std::size_t limit =
        100 * (static_cast<std::size_t>(num_arcs_) + num_nodes_) + 1000000;
    while (dense_ ? FindEnteringDense() : FindEnteringSparse()) {
      Pivot(in_arc_);
      if (++pivots_ > limit) Fail(ErrorCode::kNumerical, "network simplex pivot limit exceeded");
    }
    // Empty overflow arcs hand their tree slot back to the real arc, which
    // then sits at its capacity.
    for (int u = 0; u < num_nodes_; ++u) {
      if (pred_[u] >= over_base_ && flow_[u] <= flow_eps_) {
        const int a = over_arc_[pred_[u] - over_base_];
        pred_[u] = a;
        state_[a] = kTree;
      }
    }
    BuildOrder();
    RecomputeTreeFlows(kUnlimited);
    RecomputePotentials();
    double art_flow = 0.0;
    for (int u = 0; u < num_nodes_; ++u) {
      if (pred_[u] >= num_arcs_) art_flow = std::max(art_flow, flow_[u]);
    }
    feasible_ = art_flow <= 1e-11 * std::max(1.0, total_supply_);
    if (feasible_) NormalizeDuals();
  }

  bool feasible() const { return feasible_; }

  TransportPlan ExtractPlan() const {
    TransportPlan plan;
    plan.status = feasible_ ? SolveStatus::kOptimal : SolveStatus::kInfeasible;
    plan.pivots = pivots_;
    plan.warm_started = warm_;
    for (int u = 0; u < num_nodes_; ++u) {
      const int a = pred_[u];
      if (a < num_arcs_ && flow_[u] > flow_eps_) AddFlow(plan, a, flow_[u]);
    }
    if (inst_.has_capacities()) {
      for (int a = 0; a < num_arcs_; ++a) {
        if (state_[a] == kUpper) AddFlow(plan, a, Cap(a));
      }
    }
    std::sort(plan.flows.begin(), plan.flows.end(),
              [](const Flow& x, const Flow& y) { return x.arc < y.arc; });
    long double obj = 0.0L;
    for (const Flow& f : plan.flows) obj += static_cast<long double>(Cost(f.arc)) * f.mass;
    plan.objective = static_cast<double>(obj);
    plan.source_potentials.resize(n_);
    plan.target_potentials.resize(m_);
    for (int i = 0; i < n_; ++i) plan.source_potentials[i] = -pi_[i];
    for (int j = 0; j < m_; ++j) plan.target_potentials[j] = pi_[n_ + j];
    return plan;
  }

  Basis ExtractBasis() const {
    Basis basis;
    basis.num_sources = n_;
    basis.num_targets = m_;
    basis.tree.resize(num_nodes_);
    for (int u = 0; u < num_nodes_; ++u) {
      Basis::Entry& e = basis.tree[u];
      e.parent = parent_[u];
      e.dir = dir_[u];
      const int a = pred_[u] >= over_base_ ? over_arc_[pred_[u] - over_base_] : pred_[u];
      if (a >= num_arcs_) {
        e.artificial = true;
      } else {
        const ArcEnds ends = inst_.ends(a);
        e.source = ends.source;
        e.target = ends.target;
      }
    }
    if (inst_.has_capacities()) {
      for (int a = 0; a < num_arcs_; ++a) {
        if (state_[a] == kUpper) basis.at_upper.push_back(inst_.ends(a));
      }
    }
    return basis;
  }

 private:
  std::uint64_t Key(int s, int t) const {
    return static_cast<std::uint64_t>(s) * static_cast<std::uint64_t>(m_) +
           static_cast<std::uint64_t>(t);
  }

  void AddFlow(TransportPlan& plan, int a, double mass) const {
    const ArcEnds ends = inst_.ends(a);
    plan.flows.push_back({static_cast<std::size_t>(a), ends.source, ends.target, mass});
  }

  // Node-level endpoints; artificial arcs connect a node with the root.
  int Src(int a) const {
    if (a < num_arcs_) return dense_ ? a / m_ : arcs_[a].source;
    if (a >= over_base_) return Src(over_arc_[a - over_base_]);
    const int u = a - num_arcs_;
    return art_up_[u] ? u : root_;
  }
  int Dst(int a) const {
    if (a < num_arcs_) return n_ + (dense_ ? a % m_ : arcs_[a].target);
    if (a >= over_base_) return Dst(over_arc_[a - over_base_]);
    const int u = a - num_arcs_;
    return art_up_[u] ? root_ : u;
  }
  double Cost(int a) const {
    if (a < num_arcs_) return dense_ ? costs_[a] : arcs_[a].cost;
    if (a >= over_base_) return Cost(over_arc_[a - over_base_]) + art_cost_;
    return art_up_[a - num_arcs_] ? 0.0 : art_cost_;
  }
  double Cap(int a) const {
    if (a < num_arcs_ && !dense_) return arcs_[a].capacity;
    return kUnlimited;
  }

  void Attach(int p, int u) {
    prev_sib_[u] = -1;
    next_sib_[u] = first_child_[p];
    if (first_child_[p] >= 0) prev_sib_[first_child_[p]] = u;
    first_child_[p] = u;
  }

  void Detach(int p, int u) {
    if (prev_sib_[u] >= 0) {
      next_sib_[prev_sib_[u]] = next_sib_[u];
    } else {
      first_child_[p] = next_sib_[u];
    }
    if (next_sib_[u] >= 0) prev_sib_[next_sib_[u]] = prev_sib_[u];
  }

  bool FindEnteringDense() {
    double best = -eps_;
    int in = -1;
    std::size_t cnt = block_size_;
    int e = next_arc_;
    int s = e / m_;
    int t = e - s * m_;
    const std::int8_t* state = state_.data();
    const double* pi = pi_.data();
    const double* pit = pi_.data() + n_;
    for (int k = 0; k < num_arcs_; ++k) {
      const double c = state[e] * (costs_[e] + pi[s] - pit[t]);
      if (c < best) {
        best = c;
        in = e;
      }
      ++e;
      if (++t == m_) {
        t = 0;
        if (++s == n_) {
          s = 0;
          e = 0;
        }
      }
      if (--cnt == 0) {
        if (in >= 0) break;
        cnt = block_size_;
      }
    }
    if (in < 0) return false;
    next_arc_ = e;
    in_arc_ = in;
    return true;
  }

  bool FindEnteringSparse() {
    double best = -eps_;
    int in = -1;
    std::size_t cnt = block_size_;
    int e = next_arc_;
    const std::int8_t* state = state_.data();
    const double* pi = pi_.data();
    const double* pit = pi_.data() + n_;
    for (int k = 0; k < num_arcs_; ++k) {
      const Arc& arc = arcs_[e];
      const double c = state[e] * (arc.cost + pi[arc.source] - pit[arc.target]);
      if (c < best) {
        best = c;
        in = e;
      }
      if (++e == num_arcs_) e = 0;
      if (--cnt == 0) {
        if (in >= 0) break;
        cnt = block_size_;
      }
    }
    if (in < 0) return false;
    next_arc_ = e;
    in_arc_ = in;
    return true;
  }

  // A proper ancestor always has the larger subtree.
  int FindJoin(int a, int b) const {
    while (a != b) {
      if (size_[a] < size_[b]) {
        a = parent_[a];
      } else {
        b = parent_[b];
      }
    }
    return a;
  }

  void Pivot(int in) {
    const int s = Src(in);
    const int t = Dst(in);
    const std::int8_t st = state_[in];
    const int first = st == kLower ? s : t;
    const int second = st == kLower ? t : s;
    const int join = FindJoin(s, t);

    // Ratio test with the strongly feasible tie rule: the last blocking arc
    // met when walking the cycle along its orientation from the join node.
    const double in_cap = Cap(in);
    double delta = in_cap;
    int u_out = -1;
    int side = 0;
    for (int u = first; u != join; u = parent_[u]) {
      const double d = dir_[u] == kUp ? flow_[u] : Cap(pred_[u]) - flow_[u];
      if (d < delta) {
        delta = d;
        u_out = u;
        side = 1;
      }
    }
    for (int u = second; u != join; u = parent_[u]) {
      const double d = dir_[u] == kUp ? Cap(pred_[u]) - flow_[u] : flow_[u];
      if (d <= delta) {
        delta = d;
        u_out = u;
        side = 2;
      }
    }
    if (delta == kUnlimited) Fail(ErrorCode::kInternal, "unbounded transport cycle");

    if (delta > 0.0) {
      const double val = st * delta;
      for (int u = s; u != join; u = parent_[u]) {
        flow_[u] = Clamp(flow_[u] - dir_[u] * val, Cap(pred_[u]));
      }
      for (int u = t; u != join; u = parent_[u]) {
        flow_[u] = Clamp(flow_[u] + dir_[u] * val, Cap(pred_[u]));
      }
    }

    if (side == 0) {
      state_[in] = static_cast<std::int8_t>(-st);
      return;
    }

    // Leaving arc lands exactly on the bound it hit.
    const bool to_lower = (side == 1) == (dir_[u_out] == kUp);
    const int out_arc = pred_[u_out];
    if (out_arc < num_arcs_) state_[out_arc] = to_lower ? kLower : kUpper;

    const int u_in = side == 1 ? first : second;
    const int v_in = side == 1 ? second : first;
    const double in_flow = st == kLower ? delta : in_cap - delta;
    state_[in] = kTree;

    // The cut subtree moves from below u_out's parent to below v_in.
    const int moved = size_[u_out];
    for (int u = parent_[u_out]; u != join; u = parent_[u]) size_[u] -= moved;
    for (int u = v_in; u != join; u = parent_[u]) size_[u] += moved;

    // Re-hang the cut subtree from u_in, reversing the path u_in .. u_out.
    int new_parent = v_in;
    int new_size = moved;
    int new_pred = in;
    std::int8_t new_dir = s == u_in ? kUp : kDown;
    double new_flow = in_flow;
    for (int u = u_in;;) {
      const int old_parent = parent_[u];
      const int old_pred = pred_[u];
      const std::int8_t old_dir = dir_[u];
      const double old_flow = flow_[u];
      const int old_size = size_[u];
      Detach(old_parent, u);
      parent_[u] = new_parent;
      pred_[u] = new_pred;
      dir_[u] = new_dir;
      flow_[u] = new_flow;
      size_[u] = new_size;
      Attach(new_parent, u);
      if (u == u_out) break;
      new_parent = u;
      new_size = moved - old_size;
      new_pred = old_pred;
      new_dir = static_cast<std::int8_t>(-old_dir);
      new_flow = old_flow;
      u = old_parent;
    }

    const double c = Cost(in);
    const double target_pi = s == u_in ? pi_[v_in] - c : pi_[v_in] + c;
    const double sigma = target_pi - pi_[u_in];
    // Only differences of potentials matter, so shift the smaller side.
    stack_.clear();
    if (2 * moved <= num_nodes_ + 1) {
      pi_[u_in] = target_pi;
      stack_.push_back(u_in);
      while (!stack_.empty()) {
        const int x = stack_.back();
        stack_.pop_back();
        for (int ch = first_child_[x]; ch >= 0; ch = next_sib_[ch]) {
          pi_[ch] += sigma;
          stack_.push_back(ch);
        }
      }
    } else {
      pi_[root_] -= sigma;
      stack_.push_back(root_);
      while (!stack_.empty()) {
        const int x = stack_.back();
        stack_.pop_back();
        for (int ch = first_child_[x]; ch >= 0; ch = next_sib_[ch]) {
          if (ch == u_in) continue;
          pi_[ch] -= sigma;
          stack_.push_back(ch);
        }
      }
    }
  }

  static double Clamp(double f, double cap) {
    if (f < 0.0) return 0.0;
    return f > cap ? cap : f;
  }

  // Breadth-first order of the tree from the root.
  void BuildOrder() {
    order_.clear();
    order_.push_back(root_);
    for (std::size_t k = 0; k < order_.size(); ++k) {
      for (int ch = first_child_[order_[k]]; ch >= 0; ch = next_sib_[ch]) {
        order_.push_back(ch);
        if (order_.size() > static_cast<std::size_t>(num_nodes_ + 1)) return;
      }
    }
  }

  // Tree flows are determined by supplies and nonbasic arcs at capacity.
  // Returns false if some tree arc would leave its bounds by more than tol.
  // With `elastic`, a tree arc above its capacity moves to its upper bound
  // and the excess onto a new overflow arc that takes its tree slot.
  bool RecomputeTreeFlows(double tol, bool elastic = false) {
    std::vector<double> acc(num_nodes_ + 1, 0.0);
    for (int u = 0; u < num_nodes_; ++u) acc[u] = b_[u];
    if (inst_.has_capacities()) {
      for (int a = 0; a < num_arcs_; ++a) {
        if (state_[a] != kUpper) continue;
        acc[Src(a)] -= Cap(a);
        acc[Dst(a)] += Cap(a);
      }
    }
    bool ok = true;
    for (std::size_t k = order_.size(); k-- > 1;) {
      const int u = order_[k];
      double f = dir_[u] == kUp ? acc[u] : -acc[u];
      if (elastic && pred_[u] < num_arcs_ && f > Cap(pred_[u]) + tol) {
        const int a = pred_[u];
        state_[a] = kUpper;
        f -= Cap(a);
        pred_[u] = over_base_ + static_cast<int>(over_arc_.size());
        over_arc_.push_back(a);
      }
      const double cap = Cap(pred_[u]);
      if (f < -tol || f > cap + tol) ok = false;
      if (f < flow_eps_) f = 0.0;
      if (f > cap) f = cap;
      flow_[u] = f;
      acc[parent_[u]] += acc[u];
    }
    return ok;
  }

  void RecomputePotentials() {
    pi_[root_] = 0.0;
    for (std::size_t k = 1; k < order_.size(); ++k) {
      const int u = order_[k];
      const int a = pred_[u];
      pi_[u] = dir_[u] == kUp ? pi_[parent_[u]] - Cost(a) : pi_[parent_[u]] + Cost(a);
    }
  }

  // Re-anchors the potentials of every subtree hanging from the root so that
  // no big-M offset survives (at zero, or on average at the reference
  // potentials), then restores dual feasibility across subtrees with a
  // shortest-path pass over the nonbasic arcs joining them.
  void NormalizeDuals() {
    std::vector<int> comp(num_nodes_ + 1, -1);
    int num_comp = 0;
    for (std::size_t k = 1; k < order_.size(); ++k) {
      const int u = order_[k];
      comp[u] = parent_[u] == root_ ? num_comp++ : comp[parent_[u]];
    }
    std::vector<double> anchor(num_comp, 0.0);
    if (reference_.empty()) {
      for (int ch = first_child_[root_]; ch >= 0; ch = next_sib_[ch]) anchor[comp[ch]] = pi_[ch];
    } else {
      std::vector<double> count(num_comp, 0.0);
      for (int u = 0; u < num_nodes_; ++u) {
        anchor[comp[u]] += pi_[u] - reference_[u];
        count[comp[u]] += 1.0;
      }
      for (int c = 0; c < num_comp; ++c) anchor[c] /= count[c];
    }
    const std::vector<double> saved = pi_;
    for (int u = 0; u < num_nodes_; ++u) pi_[u] -= anchor[comp[u]];
    if (num_comp == 1) return;

    struct Edge {
      int from;
      int to;
      double w;
    };
    std::vector<Edge> edges;
    for (int a = 0; a < num_arcs_; ++a) {
      if (state_[a] == kTree) continue;
      const int s = Src(a);
      const int t = Dst(a);
      const int cs = comp[s];
      const int ct = comp[t];
      if (cs == ct) continue;
      const double r = Cost(a) + pi_[s] - pi_[t];
      if (state_[a] == kLower) {
        edges.push_back({cs, ct, r});
      } else {
        edges.push_back({ct, cs, -r});
      }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
      return x.from != y.from ? x.from < y.from : (x.to != y.to ? x.to < y.to : x.w < y.w);
    });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const Edge& x, const Edge& y) {
                              return x.from == y.from && x.to == y.to;
                            }),
                edges.end());
    // Pricing stops at reduced costs >= -eps_, so cycles through these
    // edges can be slightly negative; padding each weight by eps_ removes
    // them and bounds the final violation by 2 * eps_.
    std::vector<std::size_t> offset(num_comp + 1, 0);
    for (const Edge& e : edges) ++offset[e.from + 1];
    for (int c = 0; c < num_comp; ++c) offset[c + 1] += offset[c];
    std::vector<double> shift(num_comp, 0.0);
    std::vector<char> queued(num_comp, 1);
    std::deque<int> queue;
    for (int c = 0; c < num_comp; ++c) queue.push_back(c);
    std::size_t budget = 64 * (edges.size() + num_comp) + 1024;
    while (!queue.empty()) {
      const int c = queue.front();
      queue.pop_front();
      queued[c] = 0;
      const std::size_t work = offset[c + 1] - offset[c] + 1;
      if (work > budget) {
        pi_ = saved;  // keep the raw duals
        return;
      }
      budget -= work;
      for (std::size_t k = offset[c]; k < offset[c + 1]; ++k) {
        const Edge& e = edges[k];
        const double cand = shift[c] + e.w + eps_;
        if (cand < shift[e.to]) {
          shift[e.to] = cand;
          if (!queued[e.to]) {
            queued[e.to] = 1;
            queue.push_back(e.to);
          }
        }
      }
    }
    for (int u = 0; u < num_nodes_; ++u) pi_[u] += shift[comp[u]];
  }

  const TransportInstance& inst_;
  const bool dense_;
  const int n_;
  const int m_;
  const int num_nodes_;
  const int root_;
  const int num_arcs_;
  const Arc* arcs_ = nullptr;
  const double* costs_ = nullptr;

  std::vector<double> b_;
  std::vector<double> reference_;
  std::vector<char> art_up_;
  double art_cost_ = 1.0;
  double eps_ = 0.0;
  double flow_eps_ = 0.0;
  double total_supply_ = 0.0;
  std::size_t block_size_ = 10;

  std::vector<std::int8_t> state_;
  std::vector<int> parent_;
  std::vector<int> pred_;
  std::vector<std::int8_t> dir_;
  std::vector<double> flow_;
  std::vector<double> pi_;
  std::vector<int> size_;  // subtree sizes
  std::vector<int> first_child_;
  std::vector<int> next_sib_;
  std::vector<int> prev_sib_;
  std::vector<int> stack_;
  std::vector<int> order_;

  // Overflow arcs (index over_base_ + k) run parallel to real arc
  // over_arc_[k] without capacity at big-M extra cost. A warm basis whose
  // tree arcs exceed their capacities starts with the excess on them.
  int over_base_ = 0;
  std::vector<int> over_arc_;

  int next_arc_ = 0;
  int in_arc_ = -1;
  std::size_t pivots_ = 0;
  bool warm_ = false;
  bool feasible_ = false;
};

SolveResult RunSimplex(const TransportInstance& instance, const Basis* warm,
                       const SolverOptions& options) {
  NetworkSimplex simplex(instance, options);
  if (warm == nullptr || warm->empty() || !simplex.WarmStart(*warm)) simplex.ColdStart();
  simplex.Run();
  return {simplex.ExtractPlan(), simplex.ExtractBasis()};
}

}  // namespace

SolveResult Solve(const TransportInstance& instance, const Basis* warm,
                  const SolverOptions& options) {
  SolveResult result = RunSimplex(instance, warm, options);
  if (result.plan.status != SolveStatus::kOptimal) {
    Fail(ErrorCode::kInfeasible, "transport instance has no feasible flow on its arc set");
  }
  return result;
}

SolveResult SolveCapacitated(const TransportInstance& instance,
                             const Basis* warm, const SolverOptions& options,
                             bool uncapacitated_feasible) {
  SolveResult result = RunSimplex(instance, warm, options);
  if (result.plan.status == SolveStatus::kInfeasible && instance.has_capacities()) {
    if (uncapacitated_feasible) {
      result.plan.status = SolveStatus::kCapacityInfeasible;
      return result;
    }
    TransportInstance relaxed = instance;
    relaxed.ClearCapacities();
    const SolveResult check = RunSimplex(relaxed, nullptr, options);
    if (check.plan.status == SolveStatus::kOptimal) {
      result.plan.status = SolveStatus::kCapacityInfeasible;
    }
  }
  return result;
}

OptimalityReport CheckOptimality(const TransportPlan& plan,
                                 const TransportInstance& instance) {
  OptimalityReport report;
  const std::size_t n = instance.num_sources();
  const std::size_t m = instance.num_targets();
  std::vector<double> out(n, 0.0);
  std::vector<double> in(m, 0.0);
  std::vector<double> flow_on;
  const bool use_map = instance.dense();
  std::unordered_map<std::size_t, double> dense_flow;
  if (use_map) {
    dense_flow.reserve(plan.flows.size() * 2);
  } else {
    flow_on.assign(instance.num_arcs(), 0.0);
  }
  for (const Flow& f : plan.flows) {
    out[f.source] += f.mass;
    in[f.target] += f.mass;
    if (f.mass > 0.0) ++report.positive_flows;
    if (use_map) {
      dense_flow[f.arc] += f.mass;
    } else if (f.arc < flow_on.size()) {
      flow_on[f.arc] += f.mass;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    report.worst_marginal_violation = std::max(
        report.worst_marginal_violation, std::abs(out[i] - instance.supplies()[i]));
  }
  for (std::size_t j = 0; j < m; ++j) {
    report.worst_marginal_violation = std::max(
        report.worst_marginal_violation, std::abs(in[j] - instance.demands()[j]));
  }
  const bool have_duals = plan.source_potentials.size() == n &&
                          plan.target_potentials.size() == m;
  if (have_duals) {
    const double flow_eps = 1e-12;
    for (std::size_t a = 0; a < instance.num_arcs(); ++a) {
      const ArcEnds e = instance.ends(a);
      const double r = instance.cost(a) - plan.source_potentials[e.source] -
                       plan.target_potentials[e.target];
      double f = 0.0;
      if (use_map) {
        auto it = dense_flow.find(a);
        if (it != dense_flow.end()) f = it->second;
      } else {
        f = flow_on[a];
      }
      const double cap = instance.capacity(a);
      if (f < cap - flow_eps) report.max_negative_reduced_cost = std::min(report.max_negative_reduced_cost, r);
      if (f > flow_eps) {
        report.max_negative_reduced_cost = std::min(report.max_negative_reduced_cost, -r);
        if (f < cap - flow_eps) {
          report.worst_complementary_slackness =
              std::max(report.worst_complementary_slackness, std::abs(r));
        }
      }
    }
  }
  report.optimal = have_duals &&
                   report.max_negative_reduced_cost >= -kOptimalityTolerance &&
                   report.worst_marginal_violation <= kMarginalTolerance;
  return report;
}

double PlanCost(const TransportPlan& plan, const TransportInstance& instance) {
  long double total = 0.0L;
  for (const Flow& f : plan.flows) {
    total += static_cast<long double>(instance.cost(f.arc)) * f.mass;
  }
  return static_cast<double>(total);
}

void WriteDimacs(const TransportInstance& instance, std::ostream& out,
                 double scale) {
  const std::size_t n = instance.num_sources();
  const std::size_t m = instance.num_targets();
  const double total = CompensatedSum(instance.supplies());
  out << "c msot transport instance (values scaled by " << scale << ")\n";
  out << "p min " << (n + m) << ' ' << instance.num_arcs() << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << "n " << (i + 1) << ' ' << std::llround(instance.supplies()[i] * scale) << '\n';
  }
  for (std::size_t j = 0; j < m; ++j) {
    out << "n " << (n + j + 1) << ' ' << -std::llround(instance.demands()[j] * scale) << '\n';
  }
  for (std::size_t a = 0; a < instance.num_arcs(); ++a) {
    const ArcEnds e = instance.ends(a);
    const double cap = instance.capacity(a);
    const long long cap_scaled = std::llround((cap == kUnlimited ? total : cap) * scale);
    out << "a " << (e.source + 1) << ' ' << (n + e.target + 1) << " 0 " << cap_scaled
        << ' ' << std::llround(instance.cost(a) * scale) << '\n';
  }
}

double MaxTransportableMass(const TransportInstance& instance,
                            std::vector<char>* source_side) {
  // Dinic on super source -> sources -> targets -> super sink, compressed
  // adjacency, after a greedy pass over the arcs.
  const int n = static_cast<int>(instance.num_sources());
  const int m = static_cast<int>(instance.num_targets());
  const int src = n + m;
  const int snk = n + m + 1;
  const int nodes = n + m + 2;
  const std::size_t arcs = instance.num_arcs();
  const std::vector<double>& supply = instance.supplies();
  const std::vector<double>& demand = instance.demands();

  std::vector<double> left_s(supply), left_d(demand);
  std::vector<double> arc_flow(arcs, 0.0);
  double flow = 0.0;
  double total = 0.0;
  for (double x : supply) total += x;
  for (std::size_t a = 0; a < arcs; ++a) {
    const ArcEnds e = instance.ends(a);
    const double x = std::min({left_s[e.source], left_d[e.target],
                               instance.capacity(a) - arc_flow[a]});
    if (x <= 0.0) continue;
    arc_flow[a] += x;
    left_s[e.source] -= x;
    left_d[e.target] -= x;
    flow += x;
  }

  // Edge k and its reverse k ^ 1 are stored side by side.
  std::vector<int> head_of, to;
  std::vector<double> cap;
  const std::size_t num_edges = 2 * (arcs + n + m);
  head_of.reserve(num_edges);
  to.reserve(num_edges);
  cap.reserve(num_edges);
  auto add = [&](int u, int v, double forward, double backward) {
    head_of.push_back(u);
    to.push_back(v);
    cap.push_back(forward);
    head_of.push_back(v);
    to.push_back(u);
    cap.push_back(backward);
  };
  for (int i = 0; i < n; ++i) add(src, i, left_s[i], supply[i] - left_s[i]);
  for (int j = 0; j < m; ++j) add(n + j, snk, left_d[j], demand[j] - left_d[j]);
  for (std::size_t a = 0; a < arcs; ++a) {
    const ArcEnds e = instance.ends(a);
    add(e.source, n + e.target, instance.capacity(a) - arc_flow[a], arc_flow[a]);
  }
  std::vector<int> first(nodes + 1, 0);
  for (int u : head_of) ++first[u + 1];
  for (int u = 0; u < nodes; ++u) first[u + 1] += first[u];
  std::vector<int> adj(head_of.size());
  {
    std::vector<int> pos(first.begin(), first.end() - 1);
    for (std::size_t k = 0; k < head_of.size(); ++k) adj[pos[head_of[k]]++] = static_cast<int>(k);
  }

  const double tiny = 1e-15 * std::max(total, 1e-300);
  std::vector<int> level(nodes), next(nodes), queue(nodes), path(nodes);
  auto bfs = [&] {
    std::fill(level.begin(), level.end(), -1);
    int qh = 0, qt = 0;
    level[src] = 0;
    queue[qt++] = src;
    while (qh < qt) {
      const int u = queue[qh++];
      // Nodes at the sink's depth or beyond cannot lie on a shortest path.
      if (level[snk] >= 0 && level[u] >= level[snk]) break;
      for (int k = first[u]; k < first[u + 1]; ++k) {
        const int id = adj[k];
        const int v = to[id];
        if (cap[id] > tiny && level[v] < 0) {
          level[v] = level[u] + 1;
          queue[qt++] = v;
        }
      }
    }
    return level[snk] >= 0;
  };
  // One augmenting path along the level graph, or zero at a blocking flow.
  auto augment = [&] {
    int depth = 0;
    int u = src;
    while (true) {
      if (u == snk) {
        double push = kUnlimited;
        for (int k = 0; k < depth; ++k) push = std::min(push, cap[path[k]]);
        for (int k = 0; k < depth; ++k) {
          cap[path[k]] -= push;
          cap[path[k] ^ 1] += push;
        }
        return push;
      }
      bool advanced = false;
      for (; next[u] < first[u + 1]; ++next[u]) {
        const int id = adj[next[u]];
        if (cap[id] > tiny && level[to[id]] == level[u] + 1) {
          path[depth++] = id;
          u = to[id];
          advanced = true;
          break;
        }
      }
      if (advanced) continue;
      if (depth == 0) return 0.0;
      level[u] = -1;  // dead end
      u = head_of[path[--depth]];
      ++next[u];
    }
  };
  while (bfs()) {
    std::copy(first.begin(), first.end() - 1, next.begin());
    for (double f; (f = augment()) > 0.0;) flow += f;
  }
  // The last search left the nodes still reachable from the super source.
  if (source_side != nullptr) {
    source_side->resize(static_cast<std::size_t>(n + m));
    for (int u = 0; u < n + m; ++u) (*source_side)[u] = level[u] >= 0;
  }
  return flow;
}

bool CanTransport(const TransportInstance& instance, double tolerance,
                  std::vector<char>* source_side) {
  double total = 0.0;
  for (double x : instance.supplies()) total += x;
  return MaxTransportableMass(instance, source_side) >= total - tolerance;
}

}  // namespace msot
