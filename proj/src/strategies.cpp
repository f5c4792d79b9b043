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

#include "msot/strategies.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <utility>

#include "msot/error.hpp"
#include "msot/io.hpp"

namespace msot {
namespace {

bool PairLess(const ArcEnds& a, const ArcEnds& b) {
  return a.source != b.source ? a.source < b.source : a.target < b.target;
}

bool PairEq(const ArcEnds& a, const ArcEnds& b) {
  return a.source == b.source && a.target == b.target;
}

void SortUnique(std::vector<ArcEnds>* v) {
  std::sort(v->begin(), v->end(), PairLess);
  v->erase(std::unique(v->begin(), v->end(), PairEq), v->end());
}

std::vector<int> Positions(const PartitionTree& tree, std::span<const int> ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(tree.level_index(id));
  return out;
}

}  // namespace

bool ArcSet::Contains(int source, int target) const {
  const ArcEnds key{source, target};
  auto it = std::lower_bound(pairs_.begin(), pairs_.end(), key, PairLess);
  return it != pairs_.end() && PairEq(*it, key);
}

std::size_t ArcSet::Merge(std::vector<ArcEnds> extra, ArcOrigin origin) {
  SortUnique(&extra);
  std::vector<ArcEnds> pairs;
  std::vector<ArcOrigin> origins;
  pairs.reserve(pairs_.size() + extra.size());
  origins.reserve(pairs_.size() + extra.size());
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t added = 0;
  while (a < pairs_.size() || b < extra.size()) {
    if (b == extra.size() || (a < pairs_.size() && !PairLess(extra[b], pairs_[a]))) {
      if (b < extra.size() && PairEq(extra[b], pairs_[a])) ++b;
      pairs.push_back(pairs_[a]);
      origins.push_back(origins_[a]);
      ++a;
    } else {
      pairs.push_back(extra[b++]);
      origins.push_back(origin);
      ++added;
    }
  }
  pairs_ = std::move(pairs);
  origins_ = std::move(origins);
  return added;
}

ScaleProblem::ScaleProblem(const PartitionTree& source_tree,
                           const PartitionTree& target_tree, int scale,
                           const CostFunction& cost, CostCoarsening coarsening)
    : source_tree_(&source_tree),
      target_tree_(&target_tree),
      scale_(scale),
      cost_(cost),
      coarsening_(coarsening) {
  Require(scale >= 0, "negative scale");
  Require(source_tree.measure().dim() == target_tree.measure().dim(),
          "source and target of different dimension");
  const auto sl = source_tree.level(scale);
  const auto tl = target_tree.level(scale);
  source_level_.assign(sl.begin(), sl.end());
  target_level_.assign(tl.begin(), tl.end());
  for (int id : source_level_) supplies_.push_back(source_tree.node(id).mass);
  for (int id : target_level_) demands_.push_back(target_tree.node(id).mass);
}

void ScaleProblem::set_parent_plan(const TransportPlan& plan, const ScaleProblem& parent) {
  parent_mass_.clear();
  const std::uint64_t m = parent.num_targets();
  for (const Flow& f : plan.flows) {
    parent_mass_[static_cast<std::uint64_t>(f.source) * m + f.target] += f.mass;
  }
}

double ScaleProblem::Cost(int s, int t) const {
  const int x = source_level_[s];
  const int y = target_level_[t];
  if (coarsening_ == CostCoarsening::kPointwise) {
    return cost_(source_tree_->node(x).center, target_tree_->node(y).center);
  }
  double weight = 0.0;
  if (coarsening_ == CostCoarsening::kWeightedAverage && scale_ > 0 && !parent_mass_.empty()) {
    const int px = source_tree_->ancestor(x, source_tree_->EffectiveScale(scale_ - 1));
    const int py = target_tree_->ancestor(y, target_tree_->EffectiveScale(scale_ - 1));
    const std::uint64_t m = target_tree_->level(scale_ - 1).size();
    auto it = parent_mass_.find(static_cast<std::uint64_t>(source_tree_->level_index(px)) * m +
                                target_tree_->level_index(py));
    if (it != parent_mass_.end()) weight = it->second;
  }
  return CoarsenCost(*source_tree_, x, *target_tree_, y, scale_, coarsening_, cost_, weight);
}

TransportInstance ScaleProblem::Instance(const ArcSet& arcs) const {
  std::vector<Arc> list;
  list.reserve(arcs.size());
  for (const ArcEnds& p : arcs.pairs()) list.push_back({p.source, p.target, Cost(p.source, p.target)});
  return TransportInstance(supplies_, demands_, std::move(list));
}

TransportInstance ScaleProblem::DenseInstance() const {
  const std::size_t n = num_sources();
  const std::size_t m = num_targets();
  std::vector<double> costs(n * m);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < m; ++t) {
      costs[s * m + t] = Cost(static_cast<int>(s), static_cast<int>(t));
    }
  }
  return TransportInstance::Dense(supplies_, demands_, std::move(costs));
}

namespace {

int ParseCount(std::string_view s, bool allow_fixpoint) {
  if (allow_fixpoint && (s == "inf" || s == "fix")) return kFixpoint;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  Require(ec == std::errc() && ptr == s.data() + s.size() && v >= 0,
          "bad iteration count '" + std::string(s) + "'");
  return v;
}

double ParseFactor(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  Require(ec == std::errc() && ptr == s.data() + s.size() && v >= 0.0,
          "bad radius factor '" + std::string(s) + "'");
  return v;
}

std::pair<std::string_view, std::string_view> SplitOnce(std::string_view s, char c) {
  const std::size_t k = s.find(c);
  if (k == std::string_view::npos) return {s, {}};
  return {s.substr(0, k), s.substr(k + 1)};
}

std::string FormatCount(int v) { return v == kFixpoint ? "inf" : std::to_string(v); }

}  // namespace

StrategyConfig ParseStrategy(std::string_view name, std::uint64_t seed) {
  StrategyConfig c;
  c.seed = seed;
  const auto [head, args] = SplitOnce(name, ':');
  const auto [a1, a2] = SplitOnce(args, ',');
  auto need = [&](int count) {
    const int given = args.empty() ? 0 : (a2.empty() ? 1 : 2);
    Require(given == count, "strategy '" + std::string(name) + "' expects " +
                                std::to_string(count) + " argument(s)");
  };
  if (head == "simple") {
    need(0);
    c.propagation = Propagation::kSimple;
  } else if (head == "cp") {
    need(0);
    c.propagation = Propagation::kCapacity;
  } else if (head == "cp+pr") {
    need(0);
    c.propagation = Propagation::kCapacity;
    c.refinement = Refinement::kPotential;
  } else if (head == "icp") {
    need(1);
    c.propagation = Propagation::kCapacity;
    c.capacity_iterations = ParseCount(a1, false);
  } else if (head == "nr") {
    need(1);
    c.refinement = Refinement::kNeighborhood;
    c.radius_factor = ParseFactor(a1);
  } else if (head == "icp+nr") {
    need(2);
    c.propagation = Propagation::kCapacity;
    c.capacity_iterations = ParseCount(a1, false);
    c.refinement = Refinement::kNeighborhood;
    c.radius_factor = ParseFactor(a2);
  } else if (head == "cp+nr") {
    need(1);
    c.propagation = Propagation::kCapacity;
    c.refinement = Refinement::kNeighborhood;
    c.radius_factor = ParseFactor(a1);
  } else if (head == "ipr") {
    need(1);
    c.refinement = Refinement::kPotential;
    c.refine_iterations = ParseCount(a1, true);
  } else if (head == "icp+pr") {
    need(1);
    c.propagation = Propagation::kCapacity;
    c.capacity_iterations = ParseCount(a1, false);
    c.refinement = Refinement::kPotential;
  } else if (head == "cp+ipr") {
    need(1);
    c.propagation = Propagation::kCapacity;
    c.refinement = Refinement::kPotential;
    c.refine_iterations = ParseCount(a1, true);
  } else if (head == "icp+ipr") {
    need(2);
    c.propagation = Propagation::kCapacity;
    c.capacity_iterations = ParseCount(a1, false);
    c.refinement = Refinement::kPotential;
    c.refine_iterations = ParseCount(a2, true);
  } else {
    Fail(ErrorCode::kInvalidArgument, "unknown strategy '" + std::string(name) + "'");
  }
  if (c.refinement == Refinement::kPotential) {
    Require(c.refine_iterations == kFixpoint || c.refine_iterations >= 1,
            "potential refinement needs at least one iteration");
  }
  if (c.propagation == Propagation::kCapacity && c.capacity_iterations == 0) {
    c.propagation = Propagation::kSimple;
  }
  return c;
}

std::string StrategyName(const StrategyConfig& c) {
  const bool cap = c.propagation == Propagation::kCapacity && c.capacity_iterations > 0;
  const int ci = cap ? c.capacity_iterations : 0;
  switch (c.refinement) {
    case Refinement::kNone:
      if (!cap) return "simple";
      return ci == 1 ? "cp" : "icp:" + std::to_string(ci);
    case Refinement::kNeighborhood: {
      const std::string f = FormatDouble(c.radius_factor);
      if (!cap) return "nr:" + f;
      return ci == 1 ? "cp+nr:" + f : "icp+nr:" + std::to_string(ci) + "," + f;
    }
    case Refinement::kPotential: {
      const int ri = c.refine_iterations;
      if (!cap) return "ipr:" + FormatCount(ri);
      if (ci == 1) return ri == 1 ? "cp+pr" : "cp+ipr:" + FormatCount(ri);
      if (ri == 1) return "icp+pr:" + std::to_string(ci);
      return "icp+ipr:" + std::to_string(ci) + "," + FormatCount(ri);
    }
  }
  return "simple";
}

std::vector<ArcEnds> Support(const TransportPlan& plan) {
  std::vector<ArcEnds> out;
  out.reserve(plan.flows.size());
  for (const Flow& f : plan.flows) {
    if (f.mass > 0.0) out.push_back({f.source, f.target});
  }
  SortUnique(&out);
  return out;
}

ArcSet SimplePropagate(const ScaleProblem& problem, const std::vector<ArcEnds>& support) {
  const int j = problem.scale();
  const PartitionTree& tx = problem.source_tree();
  const PartitionTree& ty = problem.target_tree();
  std::vector<std::vector<int>> src_children(problem.num_sources());
  std::vector<std::vector<int>> dst_children(problem.num_targets());
  std::vector<ArcEnds> pairs;
  for (const ArcEnds& p : support) {
    std::vector<int>& cs = src_children[p.source];
    if (cs.empty()) cs = Positions(tx, tx.children_at(problem.source_node(p.source), j));
    std::vector<int>& ct = dst_children[p.target];
    if (ct.empty()) ct = Positions(ty, ty.children_at(problem.target_node(p.target), j));
    for (int a : cs) {
      for (int b : ct) pairs.push_back({a, b});
    }
  }
  ArcSet out(j + 1);
  out.Merge(std::move(pairs), ArcOrigin::kPropagated);
  return out;
}

ArcSet CapacityPropagate(const ScaleProblem& problem, const ArcSet& arcs,
                         const SolveResult& optimum, int iterations, Philox& rng,
                         CapacityStats* stats) {
  Require(iterations >= 0, "negative capacity iteration count");
  CapacityStats local;
  CapacityStats& st = stats ? *stats : local;
  std::vector<ArcEnds> collected = Support(optimum.plan);
  const TransportInstance base = problem.Instance(arcs);
  const std::vector<double>& supply = problem.supplies();
  const std::vector<double>& demand = problem.demands();
  // A node with positive mass and a single arc must push its whole mass
  // through that arc, so capping it is infeasible for every draw.
  std::vector<int> src_degree(problem.num_sources(), 0);
  std::vector<int> dst_degree(problem.num_targets(), 0);
  for (const ArcEnds& p : arcs.pairs()) {
    ++src_degree[p.source];
    ++dst_degree[p.target];
  }
  bool pinned = false;
  for (std::size_t s = 0; s < supply.size(); ++s) pinned |= supply[s] > 0.0 && src_degree[s] == 1;
  for (std::size_t t = 0; t < demand.size(); ++t) pinned |= demand[t] > 0.0 && dst_degree[t] == 1;

  // Draws whose caps block a clear share of the mass are rejected by a
  // max-flow test; borderline cases go to the simplex. A rejected draw leaves
  // a minimum cut whose connected pieces with a deficit are kept: later draws
  // usually fail on the same few nodes, and re-checking a piece is cheap.
  const double total = CompensatedSum(supply);
  const double prune_gap = 1e-7 * std::max(1.0, total);
  const int n = static_cast<int>(supply.size());
  const int m = static_cast<int>(demand.size());
  std::vector<std::vector<int>> arcs_at(n + m);  // sources, then targets
  for (std::size_t a = 0; a < base.num_arcs(); ++a) {
    const ArcEnds e = base.ends(a);
    arcs_at[e.source].push_back(static_cast<int>(a));
    arcs_at[n + e.target].push_back(static_cast<int>(a));
  }
  std::vector<int> mark(n + m, -1);
  int stamp = 0;
  // Supply of the piece that cannot leave it under the given capacities.
  auto deficit = [&](const std::vector<int>& piece, const TransportInstance& inst) {
    ++stamp;
    for (int u : piece) mark[u] = stamp;
    double d = 0.0;
    for (int u : piece) {
      if (u >= n) {
        d -= demand[u - n];
        continue;
      }
      d += supply[u];
      for (int a : arcs_at[u]) {
        if (mark[n + base.ends(a).target] == stamp) continue;
        const double cap = inst.capacity(a);
        if (cap == kUnlimited) return -kUnlimited;
        d -= cap;
      }
    }
    return d;
  };
  std::vector<std::vector<int>> blockers;
  auto learn = [&](const std::vector<char>& side, const TransportInstance& inst) {
    std::vector<char> seen(n + m, 0);
    for (int r = 0; r < n + m; ++r) {
      if (!side[r] || seen[r]) continue;
      std::vector<int> piece{r};
      seen[r] = 1;
      for (std::size_t q = 0; q < piece.size(); ++q) {
        const int u = piece[q];
        for (int a : arcs_at[u]) {
          const ArcEnds e = base.ends(a);
          const int v = u < n ? n + e.target : e.source;
          if (side[v] && !seen[v]) {
            seen[v] = 1;
            piece.push_back(v);
          }
        }
      }
      if (deficit(piece, inst) > prune_gap) blockers.push_back(std::move(piece));
    }
  };

  SolveResult latest = optimum;
  constexpr int kMaxRetries = 5;
  std::vector<char> side;
  for (int it = 0; it < iterations; ++it) {
    bool solved = false;
    for (int attempt = 0; attempt <= kMaxRetries && !solved && !pinned; ++attempt) {
      if (attempt > 0) ++st.retries;
      TransportInstance capped = base;
      for (const Flow& f : latest.plan.flows) {
        const double lambda = rng.Uniform(0.1, 0.9);
        st.lambda_min = std::min(st.lambda_min, lambda);
        st.lambda_max = std::max(st.lambda_max, lambda);
        capped.set_capacity(f.arc, lambda * std::min(supply[f.source], demand[f.target]));
      }
      bool blocked = false;
      for (const std::vector<int>& piece : blockers) {
        if (deficit(piece, capped) > prune_gap) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      if (!CanTransport(capped, prune_gap, &side)) {
        learn(side, capped);
        continue;
      }
      SolveResult next = SolveCapacitated(capped, &latest.basis, {}, true);
      if (next.plan.status != SolveStatus::kOptimal) continue;
      const std::vector<ArcEnds> s = Support(next.plan);
      collected.insert(collected.end(), s.begin(), s.end());
      latest = std::move(next);
      solved = true;
    }
    if (solved) {
      ++st.iterations_done;
    } else {
      ++st.skipped;
    }
  }
  SortUnique(&collected);
  st.support_size = collected.size();
  return SimplePropagate(problem, collected);
}

std::size_t NeighborhoodRefine(const ScaleProblem& problem, const TransportPlan& plan,
                               double radius_factor, ArcSet* arcs) {
  Require(radius_factor >= 0.0, "radius factor must be non-negative");
  const int j = problem.scale();
  auto radius = [&](const PartitionTree& tree, int node) {
    if (std::isinf(radius_factor)) return radius_factor;
    const int parent = j > 0 ? tree.ancestor(node, tree.EffectiveScale(j - 1)) : node;
    return radius_factor * 2.0 * tree.node(parent).radius_bound;
  };
  auto ball = [&](const PartitionTree& tree, int node) {
    return Positions(tree, BallQuery(tree, tree.node(node).center, radius(tree, node), j));
  };
  std::vector<std::vector<int>> src_ball(problem.num_sources());
  std::vector<std::vector<int>> dst_ball(problem.num_targets());
  std::vector<char> src_done(problem.num_sources(), 0);
  std::vector<char> dst_done(problem.num_targets(), 0);
  std::vector<ArcEnds> pairs;
  for (const ArcEnds& p : Support(plan)) {
    if (!src_done[p.source]) {
      src_ball[p.source] = ball(problem.source_tree(), problem.source_node(p.source));
      src_done[p.source] = 1;
    }
    if (!dst_done[p.target]) {
      dst_ball[p.target] = ball(problem.target_tree(), problem.target_node(p.target));
      dst_done[p.target] = 1;
    }
    for (int a : src_ball[p.source]) {
      for (int b : dst_ball[p.target]) {
        if (!arcs->Contains(a, b)) pairs.push_back({a, b});
      }
    }
  }
  return arcs->Merge(std::move(pairs), ArcOrigin::kNeighborhood);
}

std::vector<ArcEnds> PotentialCandidates(const ScaleProblem& problem,
                                         const TransportPlan& plan,
                                         const ArcSet& arcs) {
  const PartitionTree& tx = problem.source_tree();
  const PartitionTree& ty = problem.target_tree();
  const CostFunction& cost = problem.cost_function();
  const std::vector<double>& phi = plan.source_potentials;
  const std::vector<double>& psi = plan.target_potentials;
  Require(phi.size() == problem.num_sources() && psi.size() == problem.num_targets(),
          "plan potentials do not match the problem");
  const int level = ty.EffectiveScale(problem.scale());
  const bool pointwise = problem.coarsening() == CostCoarsening::kPointwise;
  const bool exhaustive =
      !cost.has_ball_bound() || (!pointwise && !cost.is_metric_power());

  // Largest psi below every target-tree node.
  std::vector<double> max_psi(ty.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < problem.num_targets(); ++t) {
    for (int id = problem.target_node(static_cast<int>(t)); id >= 0; id = ty.node(id).parent) {
      if (max_psi[id] >= psi[t]) break;
      max_psi[id] = psi[t];
    }
  }

  std::vector<ArcEnds> out;
  std::vector<int> stack;
  for (std::size_t s = 0; s < problem.num_sources(); ++s) {
    const int si = static_cast<int>(s);
    const TreeNode& x = tx.node(problem.source_node(si));
    const double slack = pointwise ? 0.0 : x.radius_bound;
    stack.assign(1, ty.root());
    while (!stack.empty()) {
      const TreeNode& node = ty.node(stack.back());
      stack.pop_back();
      if (node.scale == level) {
        const int t = ty.level_index(node.id);
        if (arcs.Contains(si, t)) continue;
        if (problem.Cost(si, t) - phi[s] - psi[t] <= kReducedCostTie) out.push_back({si, t});
        continue;
      }
      if (!exhaustive) {
        const double lb = cost.BallLowerBound(x.center, node.center, node.radius_bound + slack);
        if (lb - phi[s] - max_psi[node.id] > kReducedCostTie + 1e-12 * std::abs(lb)) continue;
      }
      for (int c : node.children) stack.push_back(c);
    }
  }
  SortUnique(&out);
  return out;
}

Basis InterpolatedBasis(const ScaleProblem& problem, const TransportPlan& coarse_plan) {
  Require(problem.scale() > 0, "interpolation needs a coarser scale");
  const int j = problem.scale();
  const PartitionTree& tx = problem.source_tree();
  const PartitionTree& ty = problem.target_tree();
  const int n = static_cast<int>(problem.num_sources());
  const int m = static_cast<int>(problem.num_targets());
  const std::vector<double>& supply = problem.supplies();
  const std::vector<double>& demand = problem.demands();

  auto parent_pos = [&](const PartitionTree& tree, int node) {
    return tree.level_index(tree.ancestor(node, tree.EffectiveScale(j - 1)));
  };
  std::size_t cn = 0, cm = 0;
  for (const Flow& f : coarse_plan.flows) {
    cn = std::max(cn, static_cast<std::size_t>(f.source) + 1);
    cm = std::max(cm, static_cast<std::size_t>(f.target) + 1);
  }
  std::vector<std::vector<int>> src_children(cn), dst_children(cm);
  for (int s = 0; s < n; ++s) {
    const std::size_t p = parent_pos(tx, problem.source_node(s));
    if (p < cn) src_children[p].push_back(s);
  }
  for (int t = 0; t < m; ++t) {
    const std::size_t p = parent_pos(ty, problem.target_node(t));
    if (p < cm) dst_children[p].push_back(t);
  }

  double total = 0.0;
  for (double a : supply) total += a;
  const double tiny = 1e-14 * std::max(total, 1e-300);

  // Staircase split of a node's children over its mass-bearing pairs.
  struct Piece {
    int child;
    double mass;
  };
  const std::size_t num_flows = coarse_plan.flows.size();
  std::vector<std::vector<Piece>> src_pieces(num_flows), dst_pieces(num_flows);
  auto split = [&](bool source_side) {
    const std::size_t nodes = source_side ? cn : cm;
    std::vector<std::vector<std::size_t>> flows_of(nodes);
    for (std::size_t k = 0; k < num_flows; ++k) {
      const Flow& f = coarse_plan.flows[k];
      if (f.mass > tiny) flows_of[source_side ? f.source : f.target].push_back(k);
    }
    for (std::size_t p = 0; p < nodes; ++p) {
      const std::vector<int>& kids = source_side ? src_children[p] : dst_children[p];
      const std::vector<double>& mass = source_side ? supply : demand;
      std::size_t c = 0, e = 0;
      double kid_left = kids.empty() ? 0.0 : mass[kids[0]];
      double flow_left = flows_of[p].empty() ? 0.0 : coarse_plan.flows[flows_of[p][0]].mass;
      while (c < kids.size() && e < flows_of[p].size()) {
        const double x = std::min(kid_left, flow_left);
        if (x > tiny) {
          auto& out = source_side ? src_pieces[flows_of[p][e]] : dst_pieces[flows_of[p][e]];
          out.push_back({kids[c], x});
        }
        kid_left -= x;
        flow_left -= x;
        if (kid_left <= tiny && ++c < kids.size()) kid_left = mass[kids[c]];
        if (flow_left <= tiny && ++e < flows_of[p].size()) {
          flow_left = coarse_plan.flows[flows_of[p][e]].mass;
        }
      }
    }
  };
  split(true);
  split(false);

  // Node ids: sources 0..n-1, targets n..n+m-1.
  std::vector<int> uf(n + m);
  for (int u = 0; u < n + m; ++u) uf[u] = u;
  auto find = [&](int u) {
    while (uf[u] != u) u = uf[u] = uf[uf[u]];
    return u;
  };
  std::vector<std::vector<std::pair<int, int>>> adj(n + m);  // (neighbor, edge id)
  std::vector<ArcEnds> edges;
  for (std::size_t k = 0; k < num_flows; ++k) {
    const std::vector<Piece>& a = src_pieces[k];
    const std::vector<Piece>& b = dst_pieces[k];
    std::size_t i = 0, l = 0;
    double left_a = a.empty() ? 0.0 : a[0].mass;
    double left_b = b.empty() ? 0.0 : b[0].mass;
    while (i < a.size() && l < b.size()) {
      const double x = std::min(left_a, left_b);
      if (x > tiny) {
        const int u = a[i].child;
        const int v = n + b[l].child;
        const int ru = find(u), rv = find(v);
        if (ru != rv) {
          uf[ru] = rv;
          const int id = static_cast<int>(edges.size());
          edges.push_back({a[i].child, b[l].child});
          adj[u].push_back({v, id});
          adj[v].push_back({u, id});
        }
      }
      left_a -= x;
      left_b -= x;
      if (left_a <= tiny && ++i < a.size()) left_a = a[i].mass;
      if (left_b <= tiny && ++l < b.size()) left_b = b[l].mass;
    }
  }

  // Net mass per tree of the forest picks the artificial arc's direction.
  std::vector<double> net(n + m, 0.0);
  for (int s = 0; s < n; ++s) net[find(s)] += supply[s];
  for (int t = 0; t < m; ++t) net[find(n + t)] -= demand[t];

  Basis basis;
  basis.num_sources = static_cast<std::size_t>(n);
  basis.num_targets = static_cast<std::size_t>(m);
  basis.tree.resize(static_cast<std::size_t>(n + m));
  const int root = n + m;
  std::vector<char> seen(n + m, 0);
  std::vector<int> queue;
  std::vector<int> anchor(n + m, -1);
  for (int u = 0; u < n + m; ++u) {
    const int r = find(u);
    if (anchor[r] >= 0) continue;
    // A source anchors a tree with non-negative net supply (arc up to the
    // root), a target with positive demand one with net demand.
    const bool supply_side = net[r] >= 0.0;
    if ((u < n) == supply_side && (supply_side || demand[u - n] > 0.0)) anchor[r] = u;
  }
  for (int u = 0; u < n + m; ++u) {
    const int r = find(u);
    if (anchor[r] < 0) anchor[r] = u;  // cold-start fallback decides
  }
  for (int u = 0; u < n + m; ++u) {
    const int r = find(u);
    if (anchor[r] != u) continue;
    Basis::Entry& e = basis.tree[u];
    e.parent = root;
    e.artificial = true;
    const bool up = u < n ? supply[u] >= 0.0 : demand[u - n] <= 0.0;
    e.dir = up ? 1 : -1;
    seen[u] = 1;
    queue.assign(1, u);
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int x = queue[q];
      for (const auto& [y, id] : adj[x]) {
        if (seen[y]) continue;
        seen[y] = 1;
        Basis::Entry& c = basis.tree[y];
        c.parent = x;
        c.source = edges[id].source;
        c.target = edges[id].target;
        c.dir = y < n ? 1 : -1;  // arcs run source to target
        queue.push_back(y);
      }
    }
  }
  return basis;
}

RefineResult RefineLoop(const ScaleProblem& problem, ArcSet arcs,
                        const StrategyConfig& config, const Basis* warm,
                        const SolverOptions& solver) {
  RefineResult result;
  result.solution = Solve(problem.Instance(arcs), warm, solver);
  result.objectives.push_back(result.solution.plan.objective);
  if (config.refinement != Refinement::kNone) {
    const int budget = config.refine_iterations;
    for (int it = 0; budget == kFixpoint || it < budget; ++it) {
      std::size_t added = 0;
      if (config.refinement == Refinement::kNeighborhood) {
        added = NeighborhoodRefine(problem, result.solution.plan, config.radius_factor, &arcs);
      } else {
        added = arcs.Merge(PotentialCandidates(problem, result.solution.plan, arcs),
                           ArcOrigin::kPotential);
      }
      if (added == 0) break;
      result.solution = Solve(problem.Instance(arcs), &result.solution.basis, solver);
      result.objectives.push_back(result.solution.plan.objective);
      ++result.iterations;
    }
  }
  result.arcs = std::move(arcs);
  return result;
}

}  // namespace msot
