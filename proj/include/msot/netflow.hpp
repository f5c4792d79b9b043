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

// Exact min-cost-flow for bipartite transportation problems: a primal network
// simplex over an explicit (or implicit dense) arc set, with optional arc
// capacities, warm starts from a previous basis, and dual extraction.

#ifndef MSOT_NETFLOW_HPP_
#define MSOT_NETFLOW_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <utility>
#include <vector>

namespace msot {

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

struct Arc {
  int source = 0;
  int target = 0;
  double cost = 0.0;
  double capacity = kUnlimited;
};

struct ArcEnds {
  int source;
  int target;
};

// Sources carry supplies, targets carry demands. Either an explicit arc list or
// the implicit complete bipartite graph with row-major costs (arc index
// i * m + j).
class TransportInstance {
 public:
  TransportInstance() = default;
  TransportInstance(std::vector<double> supplies, std::vector<double> demands,
                    std::vector<Arc> arcs);
  static TransportInstance Dense(std::vector<double> supplies,
                                 std::vector<double> demands,
                                 std::vector<double> costs);

  std::size_t num_sources() const { return supplies_.size(); }
  std::size_t num_targets() const { return demands_.size(); }
  std::size_t num_arcs() const {
    return dense_ ? dense_costs_.size() : arcs_.size();
  }
  bool dense() const { return dense_; }
  bool has_capacities() const { return has_capacities_; }

  const std::vector<double>& supplies() const { return supplies_; }
  const std::vector<double>& demands() const { return demands_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const std::vector<double>& dense_costs() const { return dense_costs_; }

  ArcEnds ends(std::size_t a) const {
    if (dense_) {
      const std::size_t m = demands_.size();
      return {static_cast<int>(a / m), static_cast<int>(a % m)};
    }
    return {arcs_[a].source, arcs_[a].target};
  }
  double cost(std::size_t a) const {
    return dense_ ? dense_costs_[a] : arcs_[a].cost;
  }
  double capacity(std::size_t a) const {
    return dense_ ? kUnlimited : arcs_[a].capacity;
  }

  // Replaces every capacity (explicit instances only); kUnlimited lifts one.
  void set_capacity(std::size_t a, double capacity);
  void ClearCapacities();

 private:
  void Validate() const;

  std::vector<double> supplies_;
  std::vector<double> demands_;
  std::vector<Arc> arcs_;
  std::vector<double> dense_costs_;
  bool dense_ = false;
  bool has_capacities_ = false;
};

enum class SolveStatus { kOptimal, kInfeasible, kCapacityInfeasible };

struct Flow {
  std::size_t arc = 0;
  int source = 0;
  int target = 0;
  double mass = 0.0;
};

// Sparse coupling on an instance's arc set. Potentials follow the convention
// phi(s) + psi(t) <= c(s, t); reduced cost r = c - phi - psi.
struct TransportPlan {
  SolveStatus status = SolveStatus::kOptimal;
  std::vector<Flow> flows;  // strictly positive, sorted by arc index
  double objective = 0.0;
  std::vector<double> source_potentials;
  std::vector<double> target_potentials;
  std::size_t pivots = 0;
  bool warm_started = false;
};

// Spanning-tree state of a finished solve, keyed by arc endpoints so it can
// seed a solve over a different arc list on the same node sets.
struct Basis {
  struct Entry {
    int parent = -1;      // node index; root is n + m
    int source = -1;      // arc endpoints (instance-local indices)
    int target = -1;
    bool artificial = false;
    std::int8_t dir = 1;  // +1: arc points to parent, -1: away from it
  };
  std::size_t num_sources = 0;
  std::size_t num_targets = 0;
  std::vector<Entry> tree;  // one entry per non-root node
  std::vector<ArcEnds> at_upper;

  bool empty() const { return tree.empty(); }
};

struct SolverOptions {
  // Entering arcs need reduced cost below -tolerance * max(1, max |cost|).
  double pricing_tolerance = 1e-11;
  // Block size for block-search pricing; 0 selects sqrt(|arcs|).
  std::size_t block_size = 0;
  // Optional guide for picking among optimal duals. When the basis splits
  // into parts joined only by zero-flow artificial arcs, each part's free
  // offset is chosen to match these potentials on average (the result stays
  // dual feasible on the arc set). Sizes must match the instance or be empty.
  std::vector<double> reference_source_potentials;
  std::vector<double> reference_target_potentials;
};

struct SolveResult {
  TransportPlan plan;
  Basis basis;
};

// Uncapacitated-or-capacitated solve. Throws Error(kInfeasible) when no
// feasible flow exists on the arc set and kInvalidArgument on unbalanced or
// malformed instances. A warm basis that does not fit the instance is
// ignored.
SolveResult Solve(const TransportInstance& instance, const Basis* warm = nullptr,
                  const SolverOptions& options = {});

// As Solve, but infeasibility is reported through plan.status:
// kCapacityInfeasible when only the capacities make the instance infeasible.
// Telling the solver that the uncapacitated instance is known to be feasible
// saves the second solve that otherwise classifies an infeasible result.
SolveResult SolveCapacitated(const TransportInstance& instance,
                             const Basis* warm = nullptr,
                             const SolverOptions& options = {},
                             bool uncapacitated_feasible = false);

// Largest mass the arc set can carry from supplies to demands under the arc
// capacities (a max-flow value); equals the total supply iff a feasible flow
// exists. `source_side`, if given, receives the source side of a minimum cut
// (sources 0..n-1, then targets) other than the super source itself.
double MaxTransportableMass(const TransportInstance& instance,
                            std::vector<char>* source_side = nullptr);

// Whether the supply the arc set cannot carry stays within tolerance.
bool CanTransport(const TransportInstance& instance, double tolerance,
                  std::vector<char>* source_side = nullptr);

struct OptimalityReport {
  // Most negative signed violation of the reduced-cost optimality conditions
  // (zero when none are violated).
  double max_negative_reduced_cost = 0.0;
  double worst_marginal_violation = 0.0;
  double worst_complementary_slackness = 0.0;
  std::size_t positive_flows = 0;
  bool optimal = false;
};

inline constexpr double kOptimalityTolerance = 1e-8;
inline constexpr double kMarginalTolerance = 1e-9;

OptimalityReport CheckOptimality(const TransportPlan& plan,
                                 const TransportInstance& instance);

// Sum of cost * mass over the plan's flows.
double PlanCost(const TransportPlan& plan, const TransportInstance& instance);

// DIMACS min-cost-flow text with supplies, capacities and costs scaled by
// `scale` and rounded to integers.
void WriteDimacs(const TransportInstance& instance, std::ostream& out,
                 double scale = 1e9);

}  // namespace msot

#endif  // MSOT_NETFLOW_HPP_
