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

// Multiscale partition trees built by iterated K-means, plus coarsening of
// measures and costs over them and branch-and-bound ball queries.

#ifndef MSOT_MSTREE_HPP_
#define MSOT_MSTREE_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "msot/core.hpp"

namespace msot {

enum class CenterMode { kWeightedMean, kFrechet };

struct CenterSpec {
  CenterMode mode = CenterMode::kWeightedMean;
  double p = 1.0;  // exponent for kFrechet
};

struct StopRule {
  enum class Kind { kSingleton, kMaxLeaves, kMaxLeafRadius };
  Kind kind = Kind::kSingleton;
  double value = 0.0;

  static StopRule Singleton() { return {}; }
  static StopRule MaxLeaves(std::size_t leaves) {
    return {Kind::kMaxLeaves, static_cast<double>(leaves)};
  }
  static StopRule MaxLeafRadius(double radius) {
    return {Kind::kMaxLeafRadius, radius};
  }
};

struct TreeOptions {
  int branching = 0;  // 0 selects 2^min(D, 6)
  StopRule stop;
  std::uint64_t seed = 1;
  CenterSpec center;
  int kmeans_max_iterations = 25;
  double kmeans_tolerance = 1e-6;
};

int DefaultBranching(std::size_t dim);

struct TreeNode {
  int id = 0;
  int scale = 0;
  int parent = -1;
  Point center;
  double mass = 0.0;
  double radius_bound = 0.0;  // max distance from center to a covered point
  std::vector<int> children;
  // Covered points are order()[begin, end).
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t point_count() const { return end - begin; }
  bool is_leaf() const { return children.empty(); }
};

// A regular multiscale partition: every level partitions the point set and
// nests in the level above. Nodes that stop splitting are carried to deeper
// levels as single-child copies, so all levels have full coverage and the
// finest level holds every leaf.
class PartitionTree {
 public:
  const DiscreteMeasure& measure() const { return measure_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

  // Deepest scale index J; levels are 0..J.
  int depth() const { return static_cast<int>(levels_.size()) - 1; }
  int branching() const { return branching_; }
  int root() const { return 0; }

  // Nodes at scale j. Scales past depth() alias the finest level, which is
  // how two trees of different depth are aligned.
  std::span<const int> level(int j) const;
  int EffectiveScale(int j) const { return j < depth() ? j : depth(); }

  // Position of `node` within level(node.scale).
  int level_index(int node_id) const { return level_index_[node_id]; }

  // Permutation of point indices; each node covers a contiguous range.
  std::span<const std::size_t> order() const { return order_; }
  std::span<const std::size_t> points_of(int node_id) const;

  // Finest-level node covering point i.
  int leaf_of_point(std::size_t i) const { return leaf_of_point_[i]; }
  // Ancestor of `node_id` at scale j (<= node scale), or the node itself.
  int ancestor(int node_id, int j) const;

  // Scale-(j+1) nodes below a scale-j node; a node on an aliased level is its
  // own only child.
  std::span<const int> children_at(int node_id, int j) const;

 private:
  friend PartitionTree BuildTree(const DiscreteMeasure&, const TreeOptions&);

  DiscreteMeasure measure_;
  std::vector<TreeNode> nodes_;
  std::vector<std::vector<int>> levels_;
  std::vector<int> level_index_;
  std::vector<std::size_t> order_;
  std::vector<int> leaf_of_point_;
  std::vector<int> self_;  // self_[id] == id, backs aliased children_at
  int branching_ = 2;
};

// Splits breadth first with mass-weighted K-means until the stop rule holds
// or nodes are single points (or coincident points). Deterministic in seed.
PartitionTree BuildTree(const DiscreteMeasure& measure,
                        const TreeOptions& options = {});

// Scale-j measure: one atom per node at its center carrying the node mass.
DiscreteMeasure CoarsenMeasure(const PartitionTree& tree, int j);

// Representative of a cell from its children's centers and masses. Weighted
// mean divides by the total mass; kFrechet picks the child center minimizing
// the sum of rho^p to all children (lowest index wins ties).
Point NodeCenter(const std::vector<Point>& child_centers,
                 std::span<const double> child_masses, const CenterSpec& spec);

enum class CostCoarsening { kPointwise, kLocalAverage, kWeightedAverage };

// Coarsened cost between scale-j nodes of two trees. For kWeightedAverage,
// `parent_plan_mass` is the scale-(j-1) plan mass between the two parents;
// a zero weight falls back to the local average.
double CoarsenCost(const PartitionTree& source_tree, int source_node,
                   const PartitionTree& target_tree, int target_node, int j,
                   CostCoarsening mode, const CostFunction& cost,
                   double parent_plan_mass = 0.0);

// Scale-`scale` nodes whose center lies within distance r of q (Euclidean).
// Defaults to the finest level. Result sorted by node id.
std::vector<int> BallQuery(const PartitionTree& tree, PointView q, double r,
                           int scale = std::numeric_limits<int>::max());

// Common scale count for a pair of trees: the larger depth. The shallower
// tree's finest level stands in for the missing ones.
int AlignDepths(const PartitionTree& source_tree,
                const PartitionTree& target_tree);

// Largest pairwise distance within a cell; exact up to `exact_limit` points,
// otherwise 2 * radius_bound.
double CellDiameter(const PartitionTree& tree, int node_id,
                    std::size_t exact_limit = 4096);

}  // namespace msot

#endif  // MSOT_MSTREE_HPP_
