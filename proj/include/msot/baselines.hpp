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

// Reference methods: the exact solve over all pairs and entropic Sinkhorn.

#ifndef MSOT_BASELINES_HPP_
#define MSOT_BASELINES_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "msot/core.hpp"
#include "msot/io.hpp"
#include "msot/netflow.hpp"

namespace msot {

inline constexpr std::size_t kDefaultMaxPairs = std::size_t{1} << 27;

// Network simplex over the complete bipartite graph. Flows are indexed by
// input points (arc = i * m + j). Throws Error(kSizeLimit) past max_pairs.
TransportPlan SolveExact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const CostFunction& cost,
                         std::size_t max_pairs = kDefaultMaxPairs);

struct SinkhornConfig {
  // Entropy penalty weight; the kernel is exp(-c * weight). Zero selects
  // weight = 1 / (0.05 * median cost).
  double penalty = 0.0;
  // Stop once both marginals are within this total (L1) violation.
  double tolerance = 1e-5;
  int max_iterations = 100000;
  // Start in the log domain instead of waiting for the kernel to underflow.
  bool log_domain = false;
  // Project the final iterate onto the exact marginals so the reported
  // coupling is feasible and its cost never undercuts the optimum.
  bool round_to_marginals = true;
};

struct SinkhornResult {
  std::size_t num_sources = 0;
  std::size_t num_targets = 0;
  std::vector<double> coupling;  // dense row-major
  double objective = 0.0;        // sum of coupling * cost, no entropy term
  double penalty = 0.0;          // weight actually used
  int iterations = 0;
  double row_violation = 0.0;     // of the returned coupling (L1)
  double column_violation = 0.0;
  double iterate_violation = 0.0;  // row + column, before rounding
  bool converged = false;
  bool log_domain = false;
};

// Alternating row/column scaling. Switches to log-domain updates when the
// kernel underflows or the scalings stop being finite. Throws
// Error(kNumerical) if even the log-domain updates break down.
SinkhornResult Sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const CostFunction& cost, const SinkhornConfig& config = {},
                        std::size_t max_pairs = kDefaultMaxPairs);

double MedianCost(const std::vector<double>& costs);

// Dense row-major cost matrix between two measures.
std::vector<double> CostMatrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               const CostFunction& cost, std::size_t max_pairs);

// Plan rows labelled `label` ("exact", "sinkhorn") on point indices.
std::vector<PlanRow> PlanRows(const TransportPlan& plan, const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const CostFunction& cost,
                              const std::string& label);
// Entries below `threshold` are dropped.
std::vector<PlanRow> PlanRows(const SinkhornResult& result, const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const CostFunction& cost,
                              double threshold = 0.0);

}  // namespace msot

#endif  // MSOT_BASELINES_HPP_
