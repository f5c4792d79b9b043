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

// Per-scale transport problems over a pair of partition trees, candidate arc
// sets, propagation to the next scale, and refinement within a scale.

#ifndef MSOT_STRATEGIES_HPP_
#define MSOT_STRATEGIES_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "msot/core.hpp"
#include "msot/mstree.hpp"
#include "msot/netflow.hpp"
#include "msot/rng.hpp"

namespace msot {

enum class ArcOrigin : std::uint8_t { kPropagated, kCapacity, kNeighborhood, kPotential };

// Candidate (source, target) pairs at one scale. Endpoints are positions in
// level(scale) of the respective trees; pairs are kept sorted and unique.
class ArcSet {
 public:
  ArcSet() = default;
  explicit ArcSet(int scale) : scale_(scale) {}

  int scale() const { return scale_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<ArcEnds>& pairs() const { return pairs_; }
  const std::vector<ArcOrigin>& origins() const { return origins_; }

  bool Contains(int source, int target) const;
  // Adds pairs not yet present, tagged with `origin`. Returns how many were new.
  std::size_t Merge(std::vector<ArcEnds> extra, ArcOrigin origin);

 private:
  int scale_ = 0;
  std::vector<ArcEnds> pairs_;
  std::vector<ArcOrigin> origins_;
};

// The transport problem between level j of two trees with coarsened cost.
class ScaleProblem {
 public:
  ScaleProblem(const PartitionTree& source_tree, const PartitionTree& target_tree,
               int scale, const CostFunction& cost,
               CostCoarsening coarsening = CostCoarsening::kPointwise);

  const PartitionTree& source_tree() const { return *source_tree_; }
  const PartitionTree& target_tree() const { return *target_tree_; }
  int scale() const { return scale_; }
  const CostFunction& cost_function() const { return cost_; }
  CostCoarsening coarsening() const { return coarsening_; }

  std::size_t num_sources() const { return supplies_.size(); }
  std::size_t num_targets() const { return demands_.size(); }
  const std::vector<double>& supplies() const { return supplies_; }
  const std::vector<double>& demands() const { return demands_; }
  int source_node(int s) const { return source_level_[s]; }
  int target_node(int t) const { return target_level_[t]; }

  // Scale-(j-1) plan masses between parents, used by kWeightedAverage.
  void set_parent_plan(const TransportPlan& plan, const ScaleProblem& parent);

  double Cost(int s, int t) const;
  TransportInstance Instance(const ArcSet& arcs) const;
  TransportInstance DenseInstance() const;

 private:
  const PartitionTree* source_tree_;
  const PartitionTree* target_tree_;
  int scale_;
  CostFunction cost_;
  CostCoarsening coarsening_;
  std::vector<int> source_level_;
  std::vector<int> target_level_;
  std::vector<double> supplies_;
  std::vector<double> demands_;
  std::unordered_map<std::uint64_t, double> parent_mass_;
};

enum class Propagation { kSimple, kCapacity };
enum class Refinement { kNone, kNeighborhood, kPotential };

// Iteration count meaning "until nothing changes".
inline constexpr int kFixpoint = -1;

struct StrategyConfig {
  Propagation propagation = Propagation::kSimple;
  int capacity_iterations = 1;
  Refinement refinement = Refinement::kNone;
  double radius_factor = 1.0;
  int refine_iterations = 1;  // kFixpoint allowed for potential refinement
  std::uint64_t seed = 1;
};

// Names: icp:<i>, nr:<f>, icp+nr:<i>,<f>, cp+nr:<f>, ipr:<i>, icp+pr:<i>,
// cp+ipr:<i>, icp+ipr:<i>,<k>, plus cp, cp+pr and simple. Refinement
// iteration counts accept "inf" (run to a fixpoint).
StrategyConfig ParseStrategy(std::string_view name, std::uint64_t seed = 1);
std::string StrategyName(const StrategyConfig& config);

// Positive flows of a plan, as level positions, sorted and unique.
std::vector<ArcEnds> Support(const TransportPlan& plan);

// Children products of every mass-bearing pair, as an arc set at scale j+1.
ArcSet SimplePropagate(const ScaleProblem& problem, const std::vector<ArcEnds>& support);

struct CapacityStats {
  int iterations_done = 0;
  int retries = 0;
  int skipped = 0;
  std::size_t support_size = 0;  // size of the union of supports
  double lambda_min = 1.0;
  double lambda_max = 0.0;
};

// Repeatedly caps the latest solution's mass-bearing arcs at
// lambda * min(supply, demand), lambda ~ U[0.1, 0.9] per arc, re-solves and
// collects the union of supports, which is then propagated to scale j+1.
// An infeasible draw is retried up to five times, then the iteration skipped.
ArcSet CapacityPropagate(const ScaleProblem& problem, const ArcSet& arcs,
                         const SolveResult& optimum, int iterations, Philox& rng,
                         CapacityStats* stats = nullptr);

// Adds all pairs (x', y') with x' near x and y' near y for every mass-bearing
// (x, y). Radii are factor * 2 * parent radius on each side.
std::size_t NeighborhoodRefine(const ScaleProblem& problem, const TransportPlan& plan,
                               double radius_factor, ArcSet* arcs);

// Pairs outside `arcs` with reduced cost c_j - phi - psi <= 1e-10, found by
// branch and bound over the target tree.
std::vector<ArcEnds> PotentialCandidates(const ScaleProblem& problem,
                                         const TransportPlan& plan,
                                         const ArcSet& arcs);

inline constexpr double kReducedCostTie = 1e-10;

// Initial basis at the problem's scale j > 0 built from the coarser optimum:
// each mass-bearing parent pair is split over its children by northwest-corner
// staircases, so the mass-bearing child pairs form a forest; each tree of the
// forest hangs from the root by an artificial arc. The solver falls back to a
// cold start when the basis does not fit the arc set.
Basis InterpolatedBasis(const ScaleProblem& problem, const TransportPlan& coarse_plan);

struct RefineResult {
  SolveResult solution;
  ArcSet arcs;
  int iterations = 0;
  std::vector<double> objectives;  // after every solve
};

// Solve on `arcs`, then alternate refinement and warm-started re-solves.
RefineResult RefineLoop(const ScaleProblem& problem, ArcSet arcs,
                        const StrategyConfig& config, const Basis* warm = nullptr,
                        const SolverOptions& solver = {});

}  // namespace msot

#endif  // MSOT_STRATEGIES_HPP_
