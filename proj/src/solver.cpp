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

#include "msot/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <utility>

#include "json.hpp"
#include "msot/error.hpp"
#include "msot/rng.hpp"

namespace msot {
namespace {

using Clock = std::chrono::steady_clock;

double MillisSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::size_t PositiveFlows(const TransportPlan& plan) {
  std::size_t k = 0;
  for (const Flow& f : plan.flows) k += f.mass > 0.0;
  return k;
}

// Stream for capacity draws, kept apart from tree seeding streams.
constexpr std::uint64_t kCapacityStream = 0x6361706163697479ULL;

ScaleProblem ProblemAt(const MultiscaleSolution& sol, int j) {
  ScaleProblem prob(*sol.source_tree, *sol.target_tree, j, sol.cost, sol.coarsening);
  if (sol.coarsening == CostCoarsening::kWeightedAverage && j > 0) {
    ScaleProblem parent(*sol.source_tree, *sol.target_tree, j - 1, sol.cost,
                        CostCoarsening::kPointwise);
    prob.set_parent_plan(sol.scales[j - 1].plan, parent);
  }
  return prob;
}

}  // namespace

MultiscaleSolution SolveMultiscale(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   const CostFunction& cost,
                                   const MultiscaleOptions& options) {
  Require(mu.size() > 0 && nu.size() > 0, "empty measure");
  Require(mu.dim() == nu.dim(), "source and target of different dimension");
  const Clock::time_point start = Clock::now();

  MultiscaleSolution sol;
  sol.cost = cost;
  sol.coarsening = options.coarsening;
  sol.strategy = options.strategy;
  TreeOptions src_opts = options.source_tree;
  TreeOptions dst_opts = options.target_tree;
  src_opts.seed = options.strategy.seed;
  dst_opts.seed = options.strategy.seed;
  sol.source_tree = std::make_shared<const PartitionTree>(BuildTree(mu, src_opts));
  sol.target_tree = std::make_shared<const PartitionTree>(BuildTree(nu, dst_opts));
  sol.tree_millis = MillisSince(start);
  sol.depth = AlignDepths(*sol.source_tree, *sol.target_tree);
  Require(options.stop_scale <= sol.depth,
          "stop scale " + std::to_string(options.stop_scale) + " exceeds the tree depth " +
              std::to_string(sol.depth));
  sol.stop_scale = options.stop_scale < 0 ? sol.depth : options.stop_scale;

  const StrategyConfig& strategy = options.strategy;
  Philox rng(strategy.seed, kCapacityStream);
  ArcSet next(0);
  next.Merge({{0, 0}}, ArcOrigin::kPropagated);
  for (int j = 0; j <= sol.stop_scale; ++j) {
    const Clock::time_point scale_start = Clock::now();
    const ScaleProblem prob = ProblemAt(sol, j);
    ScaleRecord rec;
    rec.scale = j;
    rec.num_sources = prob.num_sources();
    rec.num_targets = prob.num_targets();
    rec.initial_arcs = next.size();
    SolverOptions solver;
    if (j > 0) {
      // Coarser duals guide the choice among this scale's optimal duals.
      const TransportPlan& coarse = sol.scales[j - 1].plan;
      const PartitionTree& tx = *sol.source_tree;
      const PartitionTree& ty = *sol.target_tree;
      for (std::size_t s = 0; s < prob.num_sources(); ++s) {
        const int up = tx.ancestor(prob.source_node(static_cast<int>(s)), tx.EffectiveScale(j - 1));
        solver.reference_source_potentials.push_back(coarse.source_potentials[tx.level_index(up)]);
      }
      for (std::size_t t = 0; t < prob.num_targets(); ++t) {
        const int up = ty.ancestor(prob.target_node(static_cast<int>(t)), ty.EffectiveScale(j - 1));
        solver.reference_target_potentials.push_back(coarse.target_potentials[ty.level_index(up)]);
      }
    }
    Basis start;
    if (j > 0) start = InterpolatedBasis(prob, sol.scales[j - 1].plan);
    RefineResult refined =
        RefineLoop(prob, std::move(next), strategy, start.empty() ? nullptr : &start, solver);
    rec.plan = refined.solution.plan;
    rec.objective = rec.plan.objective;
    rec.positive_flows = PositiveFlows(rec.plan);
    rec.refine_iterations = refined.iterations;
    rec.objectives = refined.objectives;
    rec.pivots = rec.plan.pivots;

    if (j < sol.stop_scale) {
      const bool capacity = strategy.propagation == Propagation::kCapacity &&
                            strategy.capacity_iterations > 0;
      // With a single node on either side every path carries a full marginal,
      // so any cap below it is infeasible; propagate plainly instead.
      if (capacity && prob.num_sources() > 1 && prob.num_targets() > 1) {
        next = CapacityPropagate(prob, refined.arcs, refined.solution,
                                 strategy.capacity_iterations, rng, &rec.capacity);
        if (rec.capacity.skipped > 0) {
          sol.warnings.push_back("scale " + std::to_string(j) + ": " +
                                 std::to_string(rec.capacity.skipped) +
                                 " capacity iteration(s) skipped after repeated infeasible draws");
        }
      } else {
        next = SimplePropagate(prob, Support(rec.plan));
      }
    }
    rec.arcs = std::move(refined.arcs);
    rec.millis = MillisSince(scale_start);
    sol.scales.push_back(std::move(rec));
  }
  sol.total_millis = MillisSince(start);
  return sol;
}

std::vector<Flow> PointPlan(const MultiscaleSolution& solution) {
  const PartitionTree& tx = *solution.source_tree;
  const PartitionTree& ty = *solution.target_tree;
  const ScaleRecord& rec = solution.final_scale();
  const auto sl = tx.level(rec.scale);
  const auto tl = ty.level(rec.scale);
  const std::size_t m = ty.measure().size();
  std::vector<Flow> out;
  for (const Flow& f : rec.plan.flows) {
    const TreeNode& x = tx.node(sl[f.source]);
    const TreeNode& y = ty.node(tl[f.target]);
    if (x.mass <= 0.0 || y.mass <= 0.0) continue;
    const auto xs = tx.points_of(x.id);
    const auto ys = ty.points_of(y.id);
    if (xs.size() == 1 && ys.size() == 1) {
      out.push_back({xs[0] * m + ys[0], static_cast<int>(xs[0]), static_cast<int>(ys[0]), f.mass});
      continue;
    }
    for (std::size_t a : xs) {
      const double wa = tx.measure().mass(a) / x.mass;
      if (wa <= 0.0) continue;
      for (std::size_t b : ys) {
        const double mass = f.mass * wa * (ty.measure().mass(b) / y.mass);
        if (mass > 0.0) out.push_back({a * m + b, static_cast<int>(a), static_cast<int>(b), mass});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Flow& a, const Flow& b) { return a.arc < b.arc; });
  return out;
}

TransportPlan InducedPlan(const PartitionTree& source_tree, const PartitionTree& target_tree,
                          const std::vector<Flow>& point_flows, int j) {
  Require(j >= 0 && j <= std::max(source_tree.depth(), target_tree.depth()),
          "scale out of range");
  const int sj = source_tree.EffectiveScale(j);
  const int tj = target_tree.EffectiveScale(j);
  const std::size_t m = target_tree.level(j).size();
  std::map<std::size_t, double> acc;
  for (const Flow& f : point_flows) {
    Require(f.source >= 0 && static_cast<std::size_t>(f.source) < source_tree.measure().size() &&
                f.target >= 0 && static_cast<std::size_t>(f.target) < target_tree.measure().size(),
            "point plan index out of range");
    const int x = source_tree.ancestor(source_tree.leaf_of_point(f.source), sj);
    const int y = target_tree.ancestor(target_tree.leaf_of_point(f.target), tj);
    acc[source_tree.level_index(x) * m + target_tree.level_index(y)] += f.mass;
  }
  TransportPlan plan;
  for (const auto& [key, mass] : acc) {
    plan.flows.push_back({key, static_cast<int>(key / m), static_cast<int>(key % m), mass});
  }
  return plan;
}

double CoarseObjective(const ScaleProblem& problem, const TransportPlan& plan) {
  long double total = 0.0L;
  for (const Flow& f : plan.flows) {
    total += static_cast<long double>(f.mass) * problem.Cost(f.source, f.target);
  }
  return static_cast<double>(total);
}

BoundReport ComputeBoundReport(const MultiscaleSolution& solution, const TransportPlan* exact,
                               std::size_t max_dense_arcs) {
  const PartitionTree& tx = *solution.source_tree;
  const PartitionTree& ty = *solution.target_tree;
  BoundReport report;
  if (exact != nullptr) report.fine_optimum = exact->objective;

  std::optional<double> lipschitz;
  if (solution.cost.is_metric_power()) {
    const double p = solution.cost.exponent();
    if (p == 1.0) {
      lipschitz = 1.0;
    } else {
      const double reach = Distance(tx.node(tx.root()).center, ty.node(ty.root()).center) +
                           tx.node(tx.root()).radius_bound + ty.node(ty.root()).radius_bound;
      lipschitz = p * std::pow(reach, p - 1.0);
    }
  }

  for (int j = 0; j <= solution.stop_scale; ++j) {
    const ScaleProblem prob = ProblemAt(solution, j);
    ScaleBound b;
    b.scale = j;
    for (int id : tx.level(j)) b.diameter = std::max(b.diameter, CellDiameter(tx, id));
    for (int id : ty.level(j)) b.diameter = std::max(b.diameter, CellDiameter(ty, id));
    b.lipschitz = lipschitz;
    if (lipschitz) b.bound_term = b.diameter * *lipschitz;
    if (prob.num_sources() * prob.num_targets() <= max_dense_arcs) {
      b.scale_optimum = Solve(prob.DenseInstance()).plan.objective;
    }
    if (exact != nullptr) {
      const TransportPlan induced = InducedPlan(tx, ty, exact->flows, j);
      b.induced = CoarseObjective(prob, induced);
      const int sj = tx.EffectiveScale(j);
      const int tj = ty.EffectiveScale(j);
      long double e = 0.0L;
      for (const Flow& f : exact->flows) {
        const int s = tx.level_index(tx.ancestor(tx.leaf_of_point(f.source), sj));
        const int t = ty.level_index(ty.ancestor(ty.leaf_of_point(f.target), tj));
        const double fine = solution.cost(tx.measure().point(f.source), ty.measure().point(f.target));
        e += static_cast<long double>(f.mass) * std::abs(fine - prob.Cost(s, t));
      }
      b.e_term = static_cast<double>(e);
    }
    if (b.scale_optimum && report.fine_optimum) {
      const double w = *b.scale_optimum;
      const double slack = 1e-12 * std::max(1.0, std::abs(w));
      if (b.bound_term) b.lipschitz_holds = w <= *report.fine_optimum + *b.bound_term + slack;
      b.e_holds = w <= *report.fine_optimum + *b.e_term + slack;
      b.induced_holds = w <= *b.induced + slack;
    }
    report.scales.push_back(b);
  }
  return report;
}

std::vector<PlanRow> PlanRows(const MultiscaleSolution& solution, bool all_scales) {
  const PartitionTree& tx = *solution.source_tree;
  const PartitionTree& ty = *solution.target_tree;
  std::vector<PlanRow> rows;
  const int last = solution.stop_scale;
  for (int j = all_scales ? 0 : last; j <= last; ++j) {
    const ScaleRecord& rec = solution.scales[j];
    const std::string label = std::to_string(j);
    if (j == last && last == solution.depth) {
      for (const Flow& f : PointPlan(solution)) {
        rows.push_back({label, f.source, f.target, f.mass,
                        solution.cost(tx.measure().point(f.source), ty.measure().point(f.target))});
      }
      continue;
    }
    const ScaleProblem prob = ProblemAt(solution, j);
    for (const Flow& f : rec.plan.flows) {
      rows.push_back({label, prob.source_node(f.source), prob.target_node(f.target), f.mass,
                      prob.Cost(f.source, f.target)});
    }
  }
  return rows;
}

std::string SummaryJson(const MultiscaleSolution& solution, int indent) {
  nlohmann::json scales = nlohmann::json::array();
  for (const ScaleRecord& r : solution.scales) {
    scales.push_back({{"scale", r.scale},
                      {"sources", r.num_sources},
                      {"targets", r.num_targets},
                      {"objective", r.objective},
                      {"initial_arcs", r.initial_arcs},
                      {"arcs", r.arcs.size()},
                      {"positive_flows", r.positive_flows},
                      {"refine_iterations", r.refine_iterations},
                      {"pivots", r.pivots},
                      {"millis", r.millis}});
  }
  nlohmann::json doc = {{"strategy", StrategyName(solution.strategy)},
                        {"cost", solution.cost.ToString()},
                        {"seed", solution.strategy.seed},
                        {"n", solution.source_tree->measure().size()},
                        {"m", solution.target_tree->measure().size()},
                        {"depth", solution.depth},
                        {"stop_scale", solution.stop_scale},
                        {"objective", solution.objective()},
                        {"scales", std::move(scales)},
                        {"tree_millis", solution.tree_millis},
                        {"total_millis", solution.total_millis},
                        {"warnings", solution.warnings}};
  return doc.dump(indent);
}

}  // namespace msot
