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

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "msot/bench.hpp"
#include "msot/error.hpp"
#include "msot/io.hpp"
#include "msot/mstree.hpp"
#include "msot/rng.hpp"

using namespace msot;

namespace {

DiscreteMeasure RandomMeasure(std::size_t n, std::size_t dim, std::uint64_t seed,
                              bool random_masses = true) {
  Philox rng(seed);
  std::vector<double> xs(n * dim), w(n);
  for (double& v : xs) v = rng.Uniform();
  for (double& v : w) v = rng.Uniform(0.1, 1.0);
  if (!random_masses) return MakeMeasure(PointSet(dim, xs));
  return MakeMeasure(PointSet(dim, xs), w);
}

// Partition, nesting, mass and radius invariants over every level.
void CheckTreeInvariants(const PartitionTree& tree) {
  const DiscreteMeasure& m = tree.measure();
  const std::size_t n = m.size();
  for (int j = 0; j <= tree.depth(); ++j) {
    std::vector<int> cover(n, 0);
    double total = 0.0;
    for (int id : tree.level(j)) {
      const TreeNode& node = tree.node(id);
      CHECK(node.scale <= j);
      total += node.mass;
      double covered = 0.0;
      for (std::size_t i : tree.points_of(id)) {
        ++cover[i];
        covered += m.mass(i);
        CHECK(Distance(node.center, m.point(i)) <= node.radius_bound * (1 + 1e-12) + 1e-15);
      }
      CHECK(std::fabs(covered - node.mass) <= 1e-12);
      if (j < tree.depth()) {
        // Nesting: children at j+1 cover exactly this node's range.
        std::size_t count = 0;
        double child_mass = 0.0;
        for (int c : tree.children_at(id, j)) {
          const TreeNode& child = tree.node(c);
          CHECK(child.begin >= node.begin);
          CHECK(child.end <= node.end);
          count += child.point_count();
          child_mass += child.mass;
        }
        CHECK(count == node.point_count());
        CHECK(std::fabs(child_mass - node.mass) <= 1e-15 * std::max(1.0, node.mass) * 4);
      }
    }
    CHECK(std::fabs(total - 1.0) <= 1e-12);
    for (int c : cover) CHECK(c == 1);
  }
}

}  // namespace

TEST_CASE("singleton measure builds a single-node tree") {
  TreeOptions opts;
  opts.branching = 4;
  const PartitionTree t = BuildTree(MakeMeasure(std::vector<Point>{{1, 2}}), opts);
  CHECK(t.size() == 1);
  CHECK(t.depth() == 0);
  CHECK(t.node(0).mass == 1.0);
  CHECK(t.node(0).scale == 0);
}

TEST_CASE("unit square corners split into four leaves") {
  TreeOptions opts;
  opts.branching = 4;
  opts.seed = 1;
  const PartitionTree t =
      BuildTree(MakeMeasure(std::vector<Point>{{0, 0}, {1, 0}, {0, 1}, {1, 1}}), opts);
  REQUIRE(t.depth() == 1);
  REQUIRE(t.level(1).size() == 4);
  for (int id : t.level(1)) {
    CHECK(t.node(id).mass == 0.25);
    CHECK(t.node(id).point_count() == 1);
    CHECK(t.node(id).radius_bound == 0.0);
  }
  CheckTreeInvariants(t);
}

TEST_CASE("default branching is 2^min(D, 6)") {
  CHECK(DefaultBranching(1) == 2);
  CHECK(DefaultBranching(2) == 4);
  CHECK(DefaultBranching(3) == 8);
  CHECK(DefaultBranching(10) == 64);
  const PartitionTree t = BuildTree(RandomMeasure(300, 2, 3));
  CHECK(t.branching() == 4);
  for (const TreeNode& node : t.nodes()) CHECK(node.children.size() <= 4);
}

TEST_CASE("branching below two is rejected") {
  TreeOptions opts;
  opts.branching = 1;
  CHECK_THROWS_AS(BuildTree(RandomMeasure(10, 2, 1), opts), Error);
}

TEST_CASE("tree invariants hold on random data") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (std::size_t dim : {1u, 2u, 3u}) {
      const PartitionTree t = BuildTree(RandomMeasure(400, dim, seed + 10 * dim));
      CheckTreeInvariants(t);
      // The finest level holds single points (no duplicates here).
      for (int id : t.level(t.depth())) CHECK(t.node(id).point_count() == 1);
    }
  }
}

TEST_CASE("coincident points end in one leaf") {
  std::vector<Point> pts(20, Point{0.5, 0.5});
  pts.push_back({0.0, 0.0});
  const PartitionTree t = BuildTree(MakeMeasure(pts));
  CheckTreeInvariants(t);
  std::size_t biggest = 0;
  for (int id : t.level(t.depth())) biggest = std::max(biggest, t.node(id).point_count());
  CHECK(biggest == 20);
}

TEST_CASE("stop rules") {
  const DiscreteMeasure m = RandomMeasure(500, 2, 4);
  TreeOptions leaves;
  leaves.stop = StopRule::MaxLeaves(40);
  const PartitionTree a = BuildTree(m, leaves);
  CheckTreeInvariants(a);
  // Breadth-first splitting stops once the leaf budget is reached; a split
  // adds at most K-1 leaves.
  CHECK(a.level(a.depth()).size() >= 40);
  CHECK(a.level(a.depth()).size() < 40 + 4);

  TreeOptions radius;
  radius.stop = StopRule::MaxLeafRadius(0.1);
  const PartitionTree b = BuildTree(m, radius);
  CheckTreeInvariants(b);
  for (int id : b.level(b.depth())) CHECK(b.node(id).radius_bound <= 0.1);
}

TEST_CASE("tree construction is deterministic in the seed") {
  const DiscreteMeasure m = RandomMeasure(300, 2, 6);
  TreeOptions opts;
  opts.seed = 17;
  CHECK(TreeToJson(BuildTree(m, opts)) == TreeToJson(BuildTree(m, opts)));
}

TEST_CASE("coarsened measures") {
  const DiscreteMeasure m = RandomMeasure(200, 2, 7);
  const PartitionTree t = BuildTree(m);
  const DiscreteMeasure top = CoarsenMeasure(t, 0);
  REQUIRE(top.size() == 1);
  CHECK(top.mass(0) == doctest::Approx(1.0).epsilon(1e-12));
  // Finest scale: the original atoms up to order.
  const DiscreteMeasure fine = CoarsenMeasure(t, t.depth());
  REQUIRE(fine.size() == m.size());
  std::vector<std::pair<double, double>> a, b;
  for (std::size_t i = 0; i < m.size(); ++i) {
    a.emplace_back(m.point(i)[0], m.mass(i));
    b.emplace_back(fine.point(i)[0], fine.mass(i));
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second == doctest::Approx(b[i].second).epsilon(1e-12));
  }
  for (int j = 0; j <= t.depth(); ++j) {
    CHECK(std::fabs(CompensatedSum(CoarsenMeasure(t, j).masses()) - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(CoarsenMeasure(t, t.depth() + 1), Error);
}

TEST_CASE("internal node mass equals the sum of its children") {
  const PartitionTree t = BuildTree(RandomMeasure(100, 2, 8));
  for (const TreeNode& node : t.nodes()) {
    if (node.is_leaf()) continue;
    double sum = 0.0;
    for (int c : node.children) sum += t.node(c).mass;
    CHECK(std::fabs(sum - node.mass) <= 1e-15 * 4);
  }
}

TEST_CASE("node centers") {
  const std::vector<Point> two{{0, 0}, {1, 0}};
  const std::vector<double> even{0.5, 0.5}, skew{0.75, 0.25};
  CHECK(NodeCenter(two, even, {}) == Point{0.5, 0});
  CHECK(NodeCenter(two, skew, {}) == Point{0.25, 0});
  const std::vector<Point> line{{0}, {1}, {10}};
  const std::vector<double> third{1, 1, 1};
  CHECK(NodeCenter(line, third, {CenterMode::kFrechet, 1.0}) == Point{1});
  const std::vector<double> zero{0, 0};
  CHECK_THROWS_AS(NodeCenter(two, zero, {}), Error);
}

TEST_CASE("frechet centers in tree construction") {
  TreeOptions opts;
  opts.center = {CenterMode::kFrechet, 1.0};
  const PartitionTree t = BuildTree(RandomMeasure(150, 2, 9), opts);
  CheckTreeInvariants(t);
}

TEST_CASE("coarsened costs") {
  // Source cells {0, 1} and target cell {10} on the line; two-point trees.
  const CostFunction c1 = CostFunction::MetricPower(1);
  TreeOptions opts;
  opts.branching = 2;
  const PartitionTree tx = BuildTree(MakeMeasure(std::vector<Point>{{0}, {1}}), opts);
  const PartitionTree ty = BuildTree(MakeMeasure(std::vector<Point>{{10}}), opts);
  CHECK(CoarsenCost(tx, 0, ty, 0, 0, CostCoarsening::kLocalAverage, c1) == 9.5);
  CHECK(CoarsenCost(tx, 0, ty, 0, 0, CostCoarsening::kPointwise, c1) == 9.5);  // center 0.5
  // Singleton leaves: every mode is the point cost.
  const int leaf = tx.level(1)[0];
  const double direct = c1(tx.measure().point(tx.points_of(leaf)[0]), Point{10});
  for (CostCoarsening mode : {CostCoarsening::kPointwise, CostCoarsening::kLocalAverage,
                              CostCoarsening::kWeightedAverage}) {
    CHECK(CoarsenCost(tx, leaf, ty, 0, 1, mode, c1, 0.3) == doctest::Approx(direct));
  }
}

TEST_CASE("weighted average with uniform weights is the local average") {
  const CostFunction c2 = CostFunction::MetricPower(2);
  TreeOptions opts;
  opts.branching = 2;
  Philox rng(3);
  std::vector<Point> a, b;
  for (int k = 0; k < 6; ++k) a.push_back({rng.Uniform(), rng.Uniform()});
  for (int k = 0; k < 6; ++k) b.push_back({rng.Uniform() + 2, rng.Uniform()});
  const PartitionTree tx = BuildTree(MakeMeasure(a), opts);
  const PartitionTree ty = BuildTree(MakeMeasure(b), opts);
  for (int x : tx.level(1)) {
    for (int y : ty.level(1)) {
      const double local = CoarsenCost(tx, x, ty, y, 1, CostCoarsening::kLocalAverage, c2);
      CHECK(CoarsenCost(tx, x, ty, y, 1, CostCoarsening::kWeightedAverage, c2, 0.25) ==
            doctest::Approx(local).epsilon(1e-14));
      CHECK(CoarsenCost(tx, x, ty, y, 1, CostCoarsening::kWeightedAverage, c2, 0.0) == local);
    }
  }
}

TEST_CASE("ball query matches a linear scan") {
  const PartitionTree t = BuildTree(RandomMeasure(200, 2, 12));
  Philox rng(13);
  for (int k = 0; k < 50; ++k) {
    const Point q{rng.Uniform(-0.2, 1.2), rng.Uniform(-0.2, 1.2)};
    for (int j : {t.depth(), std::max(0, t.depth() - 2), 1}) {
      std::vector<int> scan;
      for (int id : t.level(j)) {
        if (Distance(q, t.node(id).center) <= 0.3) scan.push_back(id);
      }
      std::sort(scan.begin(), scan.end());
      CHECK(BallQuery(t, q, 0.3, j) == scan);
    }
  }
  // r = 0 at an existing point, and an unbounded radius.
  const int leaf = t.level(t.depth())[5];
  const std::vector<int> hit = BallQuery(t, t.node(leaf).center, 0.0);
  CHECK(std::find(hit.begin(), hit.end(), leaf) != hit.end());
  CHECK(BallQuery(t, Point{0, 0}, std::numeric_limits<double>::infinity()).size() ==
        t.level(t.depth()).size());
  CHECK_THROWS_AS(BallQuery(t, Point{0, 0}, -1.0), Error);
}

TEST_CASE("depth alignment aliases the shallower tree") {
  TreeOptions opts;
  opts.branching = 2;
  const PartitionTree shallow = BuildTree(RandomMeasure(4, 1, 1), opts);
  const PartitionTree deep = BuildTree(RandomMeasure(64, 1, 2), opts);
  REQUIRE(shallow.depth() < deep.depth());
  CHECK(AlignDepths(shallow, deep) == deep.depth());
  CHECK(AlignDepths(deep, deep) == deep.depth());
  for (int j = shallow.depth() + 1; j <= deep.depth(); ++j) {
    CHECK(std::vector<int>(shallow.level(j).begin(), shallow.level(j).end()) ==
          std::vector<int>(shallow.level(shallow.depth()).begin(),
                           shallow.level(shallow.depth()).end()));
    for (int id : shallow.level(j)) {
      REQUIRE(shallow.children_at(id, j).size() == 1);
      CHECK(shallow.children_at(id, j)[0] == id);
    }
  }
  const PartitionTree single = BuildTree(MakeMeasure(std::vector<Point>{{0}}), opts);
  CHECK(AlignDepths(single, deep) == deep.depth());
  CHECK(single.level(3).size() == 1);
}

TEST_CASE("cell diameters") {
  const DiscreteMeasure m = RandomMeasure(120, 2, 14);
  const PartitionTree t = BuildTree(m);
  for (int id : t.level(1)) {
    double best = 0.0;
    auto idx = t.points_of(id);
    for (std::size_t a : idx) {
      for (std::size_t b : idx) best = std::max(best, Distance(m.point(a), m.point(b)));
    }
    CHECK(CellDiameter(t, id) == doctest::Approx(best).epsilon(1e-14));
    CHECK(CellDiameter(t, id, 0) >= best);
  }
}

TEST_CASE("tree json dump") {
  const PartitionTree t = BuildTree(RandomMeasure(10, 2, 1));
  const std::string json = TreeToJson(t);
  CHECK(json.find("\"nodes\"") != std::string::npos);
  CHECK(json.find("\"radius_bound\"") != std::string::npos);
}
