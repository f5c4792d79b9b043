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

// Coarse-to-fine driver: builds the two partition trees, then per scale
// propagates the previous plan, solves and refines, and records diagnostics.

#ifndef MSOT_SOLVER_HPP_
#define MSOT_SOLVER_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "msot/core.hpp"
#include "msot/io.hpp"
#include "msot/mstree.hpp"
#include "msot/netflow.hpp"
#include "msot/strategies.hpp"

namespace msot {

struct MultiscaleOptions {
  StrategyConfig strategy;
  // Tree seeds are taken from strategy.seed.
  TreeOptions source_tree;
  TreeOptions target_tree;
  CostCoarsening coarsening = CostCoarsening::kPointwise;
  int stop_scale = -1;  // J0; negative means the finest common scale
};

struct ScaleRecord {
  int scale = 0;
  std::size_t num_sources = 0;
  std::size_t num_targets = 0;
  std::size_t initial_arcs = 0;  // after propagation, before refinement
  ArcSet arcs;                   // final arc set of the scale
  TransportPlan plan;            // flows indexed by level positions
  double objective = 0.0;
  std::size_t positive_flows = 0;
  int refine_iterations = 0;
  std::vector<double> objectives;
  std::size_t pivots = 0;
  CapacityStats capacity;  // capacity propagation into the next scale
  double millis = 0.0;
};

struct MultiscaleSolution {
  std::shared_ptr<const PartitionTree> source_tree;
  std::shared_ptr<const PartitionTree> target_tree;
  CostFunction cost;
  CostCoarsening coarsening = CostCoarsening::kPointwise;
  StrategyConfig strategy;
  int depth = 0;       // J, common scale count after alignment
  int stop_scale = 0;  // J0
  std::vector<ScaleRecord> scales;
  std::vector<std::string> warnings;
  double tree_millis = 0.0;
  double total_millis = 0.0;

  const ScaleRecord& final_scale() const { return scales.back(); }
  double objective() const { return scales.back().objective; }
};

MultiscaleSolution SolveMultiscale(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   const CostFunction& cost,
                                   const MultiscaleOptions& options = {});

// The final plan on input point indices. Mass on a pair of multi-point cells
// is split in proportion to the point masses. Flow::arc is source * m + target.
std::vector<Flow> PointPlan(const MultiscaleSolution& solution);

// Coupling between level-j cells induced by a point-level plan.
TransportPlan InducedPlan(const PartitionTree& source_tree, const PartitionTree& target_tree,
                          const std::vector<Flow>& point_flows, int j);

// Cost of a level-j plan under the coarsened cost of `problem`.
double CoarseObjective(const ScaleProblem& problem, const TransportPlan& plan);

struct ScaleBound {
  int scale = 0;
  double diameter = 0.0;                 // A_j, largest measured cell diameter
  std::optional<double> lipschitz;       // L of the ground cost, if known
  std::optional<double> bound_term;      // A_j * L
  std::optional<double> scale_optimum;   // W(pi_j*) on the full scale-j product
  std::optional<double> induced;         // W of the plan induced by pi*
  std::optional<double> e_term;          // E_j(pi*)
  bool lipschitz_holds = true;   // W(pi_j*) <= W(pi*) + A_j L
  bool e_holds = true;           // W(pi_j*) <= W(pi*) + E_j
  bool induced_holds = true;     // W(pi_j*) <= W(induced)
};

struct BoundReport {
  std::optional<double> fine_optimum;  // W(pi*)
  std::vector<ScaleBound> scales;
};

// `exact` is an optimal plan over input points (Flow::source/target are point
// indices), e.g. from SolveExact. Per-scale optima are computed by dense
// solves when the scale has at most `max_dense_arcs` pairs.
BoundReport ComputeBoundReport(const MultiscaleSolution& solution,
                               const TransportPlan* exact = nullptr,
                               std::size_t max_dense_arcs = std::size_t{1} << 24);

// Plan file rows. The final scale is written on input point indices when it
// is the finest scale; coarser scales (all_scales) use tree node ids.
std::vector<PlanRow> PlanRows(const MultiscaleSolution& solution, bool all_scales = false);

// {strategy, cost, seed, n, m, depth, stop_scale, objective, scales: [...],
// tree_millis, total_millis, warnings}
std::string SummaryJson(const MultiscaleSolution& solution, int indent = 2);

}  // namespace msot

#endif  // MSOT_SOLVER_HPP_
