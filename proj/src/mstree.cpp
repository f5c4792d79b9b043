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

#include "msot/mstree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "msot/error.hpp"
#include "msot/rng.hpp"

namespace msot {

int DefaultBranching(std::size_t dim) {
  const std::size_t capped = std::min<std::size_t>(std::max<std::size_t>(dim, 1), 6);
  return 1 << capped;
}

std::span<const int> PartitionTree::level(int j) const {
  Require(j >= 0, "negative scale");
  return levels_[EffectiveScale(j)];
}

std::span<const std::size_t> PartitionTree::points_of(int node_id) const {
  const TreeNode& n = nodes_[node_id];
  return std::span<const std::size_t>(order_).subspan(n.begin, n.end - n.begin);
}

int PartitionTree::ancestor(int node_id, int j) const {
  while (nodes_[node_id].scale > j) node_id = nodes_[node_id].parent;
  return node_id;
}

std::span<const int> PartitionTree::children_at(int node_id, int j) const {
  if (j < depth()) return nodes_[node_id].children;
  return std::span<const int>(&self_[node_id], 1);
}

namespace {

// Lloyd iterations with k-means++ seeding over the points order[b, e).
// Reorders that range so clusters are contiguous and returns the cluster
// boundaries (offsets relative to b, starting at 0, ending at e - b).
class KMeansSplitter {
 public:
  KMeansSplitter(const DiscreteMeasure& measure, const TreeOptions& options)
      : measure_(measure), options_(options), dim_(measure.dim()) {}

  std::vector<std::size_t> Split(std::span<std::size_t> idx, int k_max,
                                 Philox& rng) {
    const std::size_t m = idx.size();
    const int k_req = static_cast<int>(std::min<std::size_t>(k_max, m));
    weights_.resize(m);
    bool any_mass = false;
    for (std::size_t i = 0; i < m; ++i) {
      weights_[i] = measure_.mass(idx[i]);
      any_mass |= weights_[i] > 0.0;
    }
    if (!any_mass) std::fill(weights_.begin(), weights_.end(), 1.0);

    Seed(idx, k_req, rng);
    const int k = static_cast<int>(centers_.size() / dim_);
    assign_.assign(m, 0);
    dist2_.assign(m, 0.0);
    double inertia = Assign(idx, k);
    for (int it = 0; it < options_.kmeans_max_iterations; ++it) {
      UpdateCenters(idx, k);
      const double next = Assign(idx, k);
      const bool converged =
          std::abs(inertia - next) <= options_.kmeans_tolerance * inertia;
      inertia = next;
      if (converged || inertia == 0.0) break;
    }

    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < m; ++i) ++count[assign_[i]];
    std::vector<std::size_t> start(k, 0);
    std::vector<int> remap(k, -1);
    std::vector<std::size_t> bounds{0};
    std::size_t offset = 0;
    int live = 0;
    for (int c = 0; c < k; ++c) {
      start[c] = offset;
      if (count[c] == 0) continue;
      remap[c] = live++;
      offset += count[c];
      bounds.push_back(offset);
    }
    std::vector<std::size_t> sorted(m);
    for (std::size_t i = 0; i < m; ++i) sorted[start[assign_[i]]++] = idx[i];
    std::copy(sorted.begin(), sorted.end(), idx.begin());
    return bounds;
  }

 private:
  PointView P(std::size_t i) const { return measure_.point(i); }

  std::size_t Sample(std::span<const double> w, double total, Philox& rng) {
    double r = rng.Uniform() * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      r -= w[i];
      if (r < 0.0 && w[i] > 0.0) return i;
    }
    for (std::size_t i = w.size(); i-- > 0;) {
      if (w[i] > 0.0) return i;
    }
    return 0;
  }

  void AddCenter(PointView p) { centers_.insert(centers_.end(), p.begin(), p.end()); }

  void Seed(std::span<const std::size_t> idx, int k, Philox& rng) {
    const std::size_t m = idx.size();
    centers_.clear();
    AddCenter(P(idx[Sample(weights_, CompensatedSum(weights_), rng)]));
    std::vector<double> d2(m);
    for (std::size_t i = 0; i < m; ++i) {
      d2[i] = SquaredDistance(P(idx[i]), PointView(centers_.data(), dim_));
    }
    std::vector<double> score(m);
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (std::size_t i = 0; i < m; ++i) total += score[i] = weights_[i] * d2[i];
      if (total <= 0.0) {
        total = 0.0;
        for (std::size_t i = 0; i < m; ++i) total += score[i] = d2[i];
      }
      if (total <= 0.0) break;  // every point coincides with a center
      const std::size_t pick = Sample(score, total, rng);
      AddCenter(P(idx[pick]));
      PointView fresh(centers_.data() + c * dim_, dim_);
      for (std::size_t i = 0; i < m; ++i) {
        d2[i] = std::min(d2[i], SquaredDistance(P(idx[i]), fresh));
      }
    }
  }

  double Assign(std::span<const std::size_t> idx, int k) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      PointView x = P(idx[i]);
      int best = 0;
      double best_d = SquaredDistance(x, PointView(centers_.data(), dim_));
      for (int c = 1; c < k; ++c) {
        const double d = SquaredDistance(x, PointView(centers_.data() + c * dim_, dim_));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign_[i] = best;
      dist2_[i] = best_d;
      inertia += weights_[i] * best_d;
    }
    return inertia;
  }

  void UpdateCenters(std::span<const std::size_t> idx, int k) {
    std::vector<double> sum(static_cast<std::size_t>(k) * dim_, 0.0);
    std::vector<double> raw(static_cast<std::size_t>(k) * dim_, 0.0);
    std::vector<double> weight(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int c = assign_[i];
      PointView x = P(idx[i]);
      for (std::size_t d = 0; d < dim_; ++d) {
        sum[c * dim_ + d] += weights_[i] * x[d];
        raw[c * dim_ + d] += x[d];
      }
      weight[c] += weights_[i];
      ++count[c];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] == 0) {
        // Re-seed from the point farthest from its current center.
        std::size_t far = 0;
        for (std::size_t i = 1; i < idx.size(); ++i) {
          if (dist2_[i] > dist2_[far]) far = i;
        }
        PointView x = P(idx[far]);
        std::copy(x.begin(), x.end(), centers_.begin() + c * dim_);
        dist2_[far] = 0.0;
        continue;
      }
      for (std::size_t d = 0; d < dim_; ++d) {
        centers_[c * dim_ + d] = weight[c] > 0.0
                                     ? sum[c * dim_ + d] / weight[c]
                                     : raw[c * dim_ + d] / static_cast<double>(count[c]);
      }
    }
  }

  const DiscreteMeasure& measure_;
  const TreeOptions& options_;
  std::size_t dim_;
  std::vector<double> weights_;
  std::vector<double> centers_;
  std::vector<int> assign_;
  std::vector<double> dist2_;
};

Point MeanOfPoints(const DiscreteMeasure& m, std::span<const std::size_t> idx) {
  Point c(m.dim(), 0.0);
  double w_total = 0.0;
  for (std::size_t i : idx) w_total += m.mass(i);
  const bool weighted = w_total > 0.0;
  for (std::size_t i : idx) {
    const double w = weighted ? m.mass(i) / w_total : 1.0 / static_cast<double>(idx.size());
    PointView x = m.point(i);
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += w * x[d];
  }
  return c;
}

bool AllCoincide(const DiscreteMeasure& m, std::span<const std::size_t> idx) {
  PointView first = m.point(idx.front());
  for (std::size_t i : idx) {
    PointView x = m.point(i);
    if (!std::equal(x.begin(), x.end(), first.begin())) return false;
  }
  return true;
}

double RadiusAround(const DiscreteMeasure& m, PointView center,
                    std::span<const std::size_t> idx) {
  double r2 = 0.0;
  for (std::size_t i : idx) r2 = std::max(r2, SquaredDistance(center, m.point(i)));
  return std::sqrt(r2);
}

}  // namespace

PartitionTree BuildTree(const DiscreteMeasure& measure,
                        const TreeOptions& options) {
  Require(measure.size() > 0, "cannot build a tree over an empty measure");
  const int k = options.branching > 0 ? options.branching
                                      : DefaultBranching(measure.dim());
  Require(options.branching == 0 || options.branching >= 2,
          "branching factor must be at least 2");
  if (options.stop.kind == StopRule::Kind::kMaxLeaves) {
    Require(options.stop.value >= 1.0, "max_leaves must be at least 1");
  }
  if (options.stop.kind == StopRule::Kind::kMaxLeafRadius) {
    Require(options.stop.value >= 0.0, "max_leaf_radius must be non-negative");
  }

  PartitionTree tree;
  tree.measure_ = measure;
  tree.branching_ = k;
  const std::size_t n = measure.size();
  tree.order_.resize(n);
  std::iota(tree.order_.begin(), tree.order_.end(), std::size_t{0});

  TreeNode root;
  root.begin = 0;
  root.end = n;
  tree.nodes_.push_back(root);
  tree.levels_.push_back({0});
  std::vector<char> terminal{0};

  KMeansSplitter splitter(tree.measure_, options);
  std::size_t leaf_count = 1;
  for (;;) {
    const std::vector<int> current = tree.levels_.back();
    std::vector<std::vector<std::size_t>> splits(current.size());
    bool any_split = false;
    for (std::size_t pos = 0; pos < current.size(); ++pos) {
      const int id = current[pos];
      if (terminal[id]) continue;
      TreeNode& node = tree.nodes_[id];
      std::span<std::size_t> idx(tree.order_.data() + node.begin, node.point_count());
      bool can_split = idx.size() >= 2 && !AllCoincide(tree.measure_, idx);
      if (can_split) {
        switch (options.stop.kind) {
          case StopRule::Kind::kSingleton:
            break;
          case StopRule::Kind::kMaxLeaves:
            can_split = static_cast<double>(leaf_count) < options.stop.value;
            break;
          case StopRule::Kind::kMaxLeafRadius: {
            const Point c = MeanOfPoints(tree.measure_, idx);
            can_split = RadiusAround(tree.measure_, c, idx) > options.stop.value;
            break;
          }
        }
      }
      if (can_split) {
        Philox rng(options.seed, static_cast<std::uint64_t>(id));
        std::vector<std::size_t> bounds = splitter.Split(idx, k, rng);
        if (bounds.size() > 2) {
          leaf_count += bounds.size() - 2;
          splits[pos] = std::move(bounds);
          any_split = true;
          continue;
        }
      }
      terminal[id] = 1;
    }
    if (!any_split) break;

    const int scale = static_cast<int>(tree.levels_.size());
    std::vector<int> next;
    for (std::size_t pos = 0; pos < current.size(); ++pos) {
      const int id = current[pos];
      const std::size_t base = tree.nodes_[id].begin;
      std::vector<std::size_t> bounds = std::move(splits[pos]);
      if (bounds.empty()) bounds = {0, tree.nodes_[id].point_count()};
      for (std::size_t c = 0; c + 1 < bounds.size(); ++c) {
        TreeNode child;
        child.id = static_cast<int>(tree.nodes_.size());
        child.scale = scale;
        child.parent = id;
        child.begin = base + bounds[c];
        child.end = base + bounds[c + 1];
        tree.nodes_[id].children.push_back(child.id);
        next.push_back(child.id);
        // A copy of a terminal node stays terminal.
        terminal.push_back(terminal[id]);
        tree.nodes_.push_back(std::move(child));
      }
    }
    tree.levels_.push_back(std::move(next));
  }

  // Masses, centers and radius bounds, children before parents.
  for (std::size_t r = tree.nodes_.size(); r-- > 0;) {
    TreeNode& node = tree.nodes_[r];
    std::span<const std::size_t> idx = tree.points_of(node.id);
    if (node.is_leaf()) {
      std::vector<double> w;
      w.reserve(idx.size());
      for (std::size_t i : idx) w.push_back(tree.measure_.mass(i));
      node.mass = CompensatedSum(w);
      if (idx.size() == 1) {
        PointView x = tree.measure_.point(idx.front());
        node.center.assign(x.begin(), x.end());
      } else if (options.center.mode == CenterMode::kWeightedMean) {
        node.center = MeanOfPoints(tree.measure_, idx);
      } else {
        std::vector<Point> pts;
        for (std::size_t i : idx) {
          PointView x = tree.measure_.point(i);
          pts.emplace_back(x.begin(), x.end());
        }
        node.center = NodeCenter(pts, w, options.center);
      }
    } else {
      std::vector<Point> centers;
      std::vector<double> masses;
      for (int c : node.children) {
        centers.push_back(tree.nodes_[c].center);
        masses.push_back(tree.nodes_[c].mass);
      }
      node.mass = CompensatedSum(masses);
      if (node.mass > 0.0 || options.center.mode == CenterMode::kFrechet) {
        node.center = NodeCenter(centers, masses, options.center);
      } else {
        std::vector<double> flat(masses.size(), 1.0);
        node.center = NodeCenter(centers, flat, options.center);
      }
    }
    node.radius_bound = RadiusAround(tree.measure_, node.center, idx);
  }

  tree.level_index_.assign(tree.nodes_.size(), 0);
  for (const std::vector<int>& lvl : tree.levels_) {
    for (std::size_t i = 0; i < lvl.size(); ++i) tree.level_index_[lvl[i]] = static_cast<int>(i);
  }
  tree.leaf_of_point_.assign(n, 0);
  for (int id : tree.levels_.back()) {
    for (std::size_t i : tree.points_of(id)) tree.leaf_of_point_[i] = id;
  }
  tree.self_.resize(tree.nodes_.size());
  std::iota(tree.self_.begin(), tree.self_.end(), 0);
  return tree;
}

DiscreteMeasure CoarsenMeasure(const PartitionTree& tree, int j) {
  Require(j >= 0 && j <= tree.depth(), "scale out of range");
  std::vector<Point> centers;
  std::vector<double> masses;
  for (int id : tree.level(j)) {
    centers.push_back(tree.node(id).center);
    masses.push_back(tree.node(id).mass);
  }
  return MakeMeasure(centers, std::move(masses));
}

Point NodeCenter(const std::vector<Point>& child_centers,
                 std::span<const double> child_masses, const CenterSpec& spec) {
  Require(!child_centers.empty(), "node center needs at least one child");
  Require(child_centers.size() == child_masses.size(), "center/mass count mismatch");
  if (spec.mode == CenterMode::kFrechet) {
    Require(spec.p >= 1.0, "Frechet exponent must be >= 1");
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < child_centers.size(); ++a) {
      double score = 0.0;
      for (std::size_t b = 0; b < child_centers.size(); ++b) {
        score += std::pow(Distance(child_centers[a], child_centers[b]), spec.p);
      }
      if (score < best_score) {
        best_score = score;
        best = a;
      }
    }
    return child_centers[best];
  }
  const double total = CompensatedSum(child_masses);
  Require(total > 0.0, "node center over zero total mass");
  Point c(child_centers.front().size(), 0.0);
  for (std::size_t a = 0; a < child_centers.size(); ++a) {
    Require(child_centers[a].size() == c.size(), "child centers of mixed dimension");
    const double w = child_masses[a] / total;
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += w * child_centers[a][d];
  }
  return c;
}

double CoarsenCost(const PartitionTree& source_tree, int source_node,
                   const PartitionTree& target_tree, int target_node, int j,
                   CostCoarsening mode, const CostFunction& cost,
                   double parent_plan_mass) {
  const TreeNode& x = source_tree.node(source_node);
  const TreeNode& y = target_tree.node(target_node);
  Require(x.scale == source_tree.EffectiveScale(j) &&
              y.scale == target_tree.EffectiveScale(j),
          "coarsened cost between nodes of different scales");
  Require(x.center.size() == y.center.size(), "trees of different dimension");
  if (mode == CostCoarsening::kPointwise) return cost(x.center, y.center);

  const DiscreteMeasure& mu = source_tree.measure();
  const DiscreteMeasure& nu = target_tree.measure();
  double sum = 0.0;
  for (std::size_t a : source_tree.points_of(source_node)) {
    for (std::size_t b : target_tree.points_of(target_node)) {
      sum += cost(mu.point(a), nu.point(b));
    }
  }
  const double pairs =
      static_cast<double>(x.point_count()) * static_cast<double>(y.point_count());
  if (mode == CostCoarsening::kWeightedAverage && parent_plan_mass > 0.0) {
    // Every pair shares the same parent-pair weight.
    return (sum * parent_plan_mass) / (pairs * parent_plan_mass);
  }
  return sum / pairs;
}

std::vector<int> BallQuery(const PartitionTree& tree, PointView q, double r,
                           int scale) {
  Require(r >= 0.0, "ball radius must be non-negative");
  const int target = tree.EffectiveScale(std::max(scale, 0));
  const double slack = 1e-12 * (1.0 + r);
  std::vector<int> out;
  std::vector<int> stack{tree.root()};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const TreeNode& node = tree.node(id);
    const double d = Distance(q, node.center);
    if (node.scale == target) {
      if (d <= r) out.push_back(id);
      continue;
    }
    if (d - node.radius_bound > r + slack) continue;
    for (int c : node.children) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int AlignDepths(const PartitionTree& source_tree,
                const PartitionTree& target_tree) {
  return std::max(source_tree.depth(), target_tree.depth());
}

double CellDiameter(const PartitionTree& tree, int node_id,
                    std::size_t exact_limit) {
  std::span<const std::size_t> idx = tree.points_of(node_id);
  if (idx.size() > exact_limit) return 2.0 * tree.node(node_id).radius_bound;
  const DiscreteMeasure& m = tree.measure();
  double best = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      best = std::max(best, SquaredDistance(m.point(idx[a]), m.point(idx[b])));
    }
  }
  return std::sqrt(best);
}

}  // namespace msot
