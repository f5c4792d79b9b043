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
#include <set>
#include <utility>
#include <vector>

#include "doctest.h"
#include "msot/bench.hpp"
#include "msot/error.hpp"
#include "msot/mstree.hpp"
#include "msot/netflow.hpp"
#include "msot/strategies.hpp"
#include "oracles.hpp"

using namespace msot;

namespace {

DiscreteMeasure RandomMeasure(std::size_t n, std::uint64_t seed, double dx = 0.0) {
  Philox rng(seed);
  std::vector<double> xs(2 * n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[2 * i] = rng.Uniform() + dx;
    xs[2 * i + 1] = rng.Uniform();
    w[i] = rng.Uniform(0.2, 1.0);
  }
  return MakeMeasure(PointSet(2, xs), w);
}

struct Pair {
  PartitionTree tx, ty;
};

Pair Trees(std::size_t n, std::size_t m, std::uint64_t seed, int branching = 2) {
  TreeOptions opts;
  opts.branching = branching;
  opts.seed = seed;
  return {BuildTree(RandomMeasure(n, seed), opts), BuildTree(RandomMeasure(m, seed + 1, 0.3), opts)};
}

ArcSet FullArcSet(const ScaleProblem& p) {
  ArcSet arcs(p.scale());
  std::vector<ArcEnds> all;
  for (std::size_t s = 0; s < p.num_sources(); ++s) {
    for (std::size_t t = 0; t < p.num_targets(); ++t) all.push_back({int(s), int(t)});
  }
  arcs.Merge(std::move(all), ArcOrigin::kPropagated);
  return arcs;
}

// A random half of the pairs plus a northwest-corner staircase, which keeps
// the arc set feasible.
ArcSet HalfArcSet(const ScaleProblem& p, Philox& rng) {
  std::vector<ArcEnds> pick;
  for (std::size_t s = 0; s < p.num_sources(); ++s) {
    for (std::size_t t = 0; t < p.num_targets(); ++t) {
      if (rng.Uniform() < 0.5) pick.push_back({int(s), int(t)});
    }
  }
  std::vector<double> a = p.supplies(), b = p.demands();
  std::size_t s = 0, t = 0;
  while (s < a.size() && t < b.size()) {
    pick.push_back({int(s), int(t)});
    const double f = std::min(a[s], b[t]);
    a[s] -= f;
    b[t] -= f;
    if (a[s] <= b[t]) {
      ++s;
    } else {
      ++t;
    }
  }
  ArcSet arcs(p.scale());
  arcs.Merge(std::move(pick), ArcOrigin::kPropagated);
  return arcs;
}

double FullOptimum(const ScaleProblem& p) { return Solve(p.DenseInstance()).plan.objective; }

std::vector<ArcEnds> ExhaustiveCandidates(const ScaleProblem& p, const TransportPlan& plan,
                                          const ArcSet& arcs) {
  std::vector<ArcEnds> out;
  for (std::size_t s = 0; s < p.num_sources(); ++s) {
    for (std::size_t t = 0; t < p.num_targets(); ++t) {
      if (arcs.Contains(int(s), int(t))) continue;
      const double r = p.Cost(int(s), int(t)) - plan.source_potentials[s] - plan.target_potentials[t];
      if (r <= kReducedCostTie) out.push_back({int(s), int(t)});
    }
  }
  return out;
}

bool SameArcs(std::vector<ArcEnds> a, std::vector<ArcEnds> b) {
  auto key = [](const ArcEnds& e) { return std::pair(e.source, e.target); };
  auto less = [&](const ArcEnds& x, const ArcEnds& y) { return key(x) < key(y); };
  std::sort(a.begin(), a.end(), less);
  std::sort(b.begin(), b.end(), less);
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [&](auto& x, auto& y) { return key(x) == key(y); });
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(ParseStrategy("icp:0").propagation == Propagation::kSimple);
  const StrategyConfig icp = ParseStrategy("icp:3");
  CHECK(icp.propagation == Propagation::kCapacity);
  CHECK(icp.capacity_iterations == 3);
  const StrategyConfig nr = ParseStrategy("nr:1.5");
  CHECK(nr.propagation == Propagation::kSimple);
  CHECK(nr.refinement == Refinement::kNeighborhood);
  CHECK(nr.radius_factor == 1.5);
  const StrategyConfig icpnr = ParseStrategy("icp+nr:2,0.5");
  CHECK(icpnr.capacity_iterations == 2);
  CHECK(icpnr.radius_factor == 0.5);
  CHECK(ParseStrategy("cp+nr:1").refinement == Refinement::kNeighborhood);
  CHECK(ParseStrategy("ipr:4").refine_iterations == 4);
  CHECK(ParseStrategy("ipr:inf").refine_iterations == kFixpoint);
  CHECK(ParseStrategy("icp+pr:2").refinement == Refinement::kPotential);
  const StrategyConfig cpipr = ParseStrategy("cp+ipr:3", 9);
  CHECK(cpipr.propagation == Propagation::kCapacity);
  CHECK(cpipr.refine_iterations == 3);
  CHECK(cpipr.seed == 9);
  for (const char* bad : {"", "cp:1", "icp", "nr:-1", "ipr:0", "bogus", "icp+nr:1"}) {
    CHECK_THROWS_AS(ParseStrategy(bad), Error);
  }
  for (const char* name : {"simple", "cp", "cp+pr", "icp:3", "nr:1.5", "icp+nr:2,0.5",
                           "cp+nr:1", "ipr:4", "icp+pr:2", "cp+ipr:3", "cp+ipr:inf"}) {
    const StrategyConfig c = ParseStrategy(name);
    const StrategyConfig again = ParseStrategy(StrategyName(c));
    CHECK(again.propagation == c.propagation);
    CHECK(again.refinement == c.refinement);
    CHECK(again.capacity_iterations == c.capacity_iterations);
    CHECK(again.refine_iterations == c.refine_iterations);
    CHECK(again.radius_factor == c.radius_factor);
  }
}

TEST_CASE("arc sets stay sorted and unique") {
  ArcSet arcs(2);
  CHECK(arcs.Merge({{1, 2}, {0, 1}, {1, 2}}, ArcOrigin::kPropagated) == 2);
  CHECK(arcs.Merge({{0, 1}, {3, 0}}, ArcOrigin::kPotential) == 1);
  REQUIRE(arcs.size() == 3);
  CHECK(arcs.Contains(3, 0));
  CHECK_FALSE(arcs.Contains(2, 1));
  for (std::size_t k = 1; k < arcs.size(); ++k) {
    const auto& a = arcs.pairs()[k - 1];
    const auto& b = arcs.pairs()[k];
    CHECK(std::pair(a.source, a.target) < std::pair(b.source, b.target));
  }
}

TEST_CASE("simple propagation takes children products") {
  const Pair tr = Trees(40, 40, 3);
  const ScaleProblem root(tr.tx, tr.ty, 0, CostFunction::MetricPower(2));
  const ArcSet all = SimplePropagate(root, {{0, 0}});
  const std::size_t kx = tr.tx.level(1).size(), ky = tr.ty.level(1).size();
  CHECK(all.size() == kx * ky);
  CHECK(all.scale() == 1);

  // A single mass-bearing pair whose nodes both split in two.
  const ScaleProblem p1(tr.tx, tr.ty, 1, CostFunction::MetricPower(2));
  for (std::size_t s = 0; s < p1.num_sources(); ++s) {
    for (std::size_t t = 0; t < p1.num_targets(); ++t) {
      const std::size_t cs = tr.tx.children_at(p1.source_node(int(s)), 1).size();
      const std::size_t ct = tr.ty.children_at(p1.target_node(int(t)), 1).size();
      CHECK(SimplePropagate(p1, {{int(s), int(t)}}).size() == cs * ct);
    }
  }
}

TEST_CASE("capacity propagation with zero iterations is simple propagation") {
  const Pair tr = Trees(60, 50, 5, 4);
  const ScaleProblem p(tr.tx, tr.ty, 1, CostFunction::MetricPower(2));
  const ArcSet arcs = FullArcSet(p);
  const SolveResult opt = Solve(p.Instance(arcs));
  Philox rng(1);
  const ArcSet a = CapacityPropagate(p, arcs, opt, 0, rng);
  const ArcSet b = SimplePropagate(p, Support(opt.plan));
  CHECK(a.pairs().size() == b.pairs().size());
  CHECK(SameArcs(a.pairs(), b.pairs()));
}

TEST_CASE("capacity propagation growth and lambda range") {
  const auto [mu, nu] = GenerateEllipse(500, 3);
  TreeOptions opts;
  opts.seed = 3;
  const PartitionTree tx = BuildTree(mu, opts), ty = BuildTree(nu, opts);
  double lo = 1.0, hi = 0.0;
  for (int j = 1; j < std::min(tx.depth(), ty.depth()); ++j) {
    const ScaleProblem p(tx, ty, j, CostFunction::MetricPower(2));
    const ArcSet arcs = FullArcSet(p);
    const SolveResult opt = Solve(p.Instance(arcs));
    for (int i = 1; i <= 3; ++i) {
      Philox rng(100 + i);
      CapacityStats stats;
      const ArcSet next = CapacityPropagate(p, arcs, opt, i, rng, &stats);
      const std::size_t bound = (std::size_t{1} << i) * (p.num_sources() + p.num_targets() - 1);
      CHECK(stats.support_size <= bound);
      CHECK(stats.support_size >= Support(opt.plan).size());
      CHECK(next.size() >= SimplePropagate(p, Support(opt.plan)).size());
      if (stats.iterations_done > 0) {
        lo = std::min(lo, stats.lambda_min);
        hi = std::max(hi, stats.lambda_max);
      }
    }
  }
  CHECK(lo >= 0.1);
  CHECK(hi <= 0.9);
  CHECK(lo < 0.2);
  CHECK(hi > 0.8);
}

TEST_CASE("capacity propagation on a 2x2 problem") {
  const std::vector<Point> a{{0, 0}, {0, 1}}, b{{1, 0}, {1, 1}};
  TreeOptions opts;
  opts.branching = 2;
  const PartitionTree tx = BuildTree(MakeMeasure(a), opts), ty = BuildTree(MakeMeasure(b), opts);
  const ScaleProblem p(tx, ty, 1, CostFunction::MetricPower(2));
  const ArcSet arcs = FullArcSet(p);
  const SolveResult opt = Solve(p.Instance(arcs));
  Philox rng(4);
  CapacityStats stats;
  CapacityPropagate(p, arcs, opt, 1, rng, &stats);
  CHECK(stats.support_size <= 2 * 3);
  CHECK(stats.support_size >= 2);
}

TEST_CASE("neighborhood refinement extremes") {
  const Pair tr = Trees(50, 50, 7);
  const int j = std::min(tr.tx.depth(), tr.ty.depth()) - 1;
  const ScaleProblem p(tr.tx, tr.ty, j, CostFunction::MetricPower(2));
  Philox rng(7);
  ArcSet arcs = HalfArcSet(p, rng);
  const SolveResult opt = Solve(p.Instance(arcs));
  ArcSet same = arcs;
  NeighborhoodRefine(p, opt.plan, 0.0, &same);
  // Zero radius only finds the coincident pairs already in the set.
  CHECK(same.size() == arcs.size());
  ArcSet everything = arcs;
  NeighborhoodRefine(p, opt.plan, 1e6, &everything);
  CHECK(everything.size() == p.num_sources() * p.num_targets());
}

TEST_CASE("neighborhood refinement matches a brute-force ball scan") {
  const Pair tr = Trees(80, 70, 9, 4);
  const int j = 2;
  const ScaleProblem p(tr.tx, tr.ty, j, CostFunction::MetricPower(2));
  Philox rng(9);
  ArcSet arcs = HalfArcSet(p, rng);
  const SolveResult opt = Solve(p.Instance(arcs));
  ArcSet refined = arcs;
  NeighborhoodRefine(p, opt.plan, 1.0, &refined);
  // Expected: every (x', y') within twice the parent radius of a mass-bearing
  // (x, y) on each side.
  std::set<std::pair<int, int>> want;
  for (const ArcEnds& e : arcs.pairs()) want.insert({e.source, e.target});
  auto radius = [&](const PartitionTree& t, int node) {
    return 2.0 * t.node(t.ancestor(node, t.EffectiveScale(j - 1))).radius_bound;
  };
  for (const ArcEnds& f : Support(opt.plan)) {
    const int xs = p.source_node(f.source), yt = p.target_node(f.target);
    const double rs = radius(tr.tx, xs), rt = radius(tr.ty, yt);
    for (std::size_t s = 0; s < p.num_sources(); ++s) {
      if (Distance(tr.tx.node(p.source_node(int(s))).center, tr.tx.node(xs).center) > rs) continue;
      for (std::size_t t = 0; t < p.num_targets(); ++t) {
        if (Distance(tr.ty.node(p.target_node(int(t))).center, tr.ty.node(yt).center) > rt) continue;
        want.insert({int(s), int(t)});
      }
    }
  }
  CHECK(refined.size() == want.size());
  for (const ArcEnds& e : refined.pairs()) CHECK(want.count({e.source, e.target}) == 1);
}

TEST_CASE("potential candidates on the full arc set are empty") {
  const Pair tr = Trees(30, 30, 11);
  const ScaleProblem p(tr.tx, tr.ty, tr.tx.depth(), CostFunction::MetricPower(2));
  const ArcSet arcs = FullArcSet(p);
  const SolveResult opt = Solve(p.Instance(arcs));
  CHECK(PotentialCandidates(p, opt.plan, arcs).empty());
}

TEST_CASE("potential candidates equal the exhaustive scan") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const std::size_t size = seed <= 6 ? 8 : 24;
    const Pair tr = Trees(size, size, seed);
    const int j = std::max(tr.tx.depth(), tr.ty.depth());
    for (double p_exp : {1.0, 2.0}) {
      const ScaleProblem p(tr.tx, tr.ty, j, CostFunction::MetricPower(p_exp));
      Philox rng(seed);
      const ArcSet arcs = HalfArcSet(p, rng);
      const SolveResult opt = Solve(p.Instance(arcs));
      CAPTURE(seed);
      CHECK(SameArcs(PotentialCandidates(p, opt.plan, arcs), ExhaustiveCandidates(p, opt.plan, arcs)));
    }
  }
}

TEST_CASE("custom costs without a bound are scanned exhaustively") {
  const Pair tr = Trees(20, 20, 13);
  const CostFunction l1 = CostFunction::Custom(
      [](PointView x, PointView y) { return std::fabs(x[0] - y[0]) + std::fabs(x[1] - y[1]); });
  const ScaleProblem p(tr.tx, tr.ty, tr.tx.depth(), l1);
  Philox rng(13);
  const ArcSet arcs = HalfArcSet(p, rng);
  const SolveResult opt = Solve(p.Instance(arcs));
  CHECK(SameArcs(PotentialCandidates(p, opt.plan, arcs), ExhaustiveCandidates(p, opt.plan, arcs)));
}

TEST_CASE("iterated potential refinement reaches the full optimum") {
  const Pair tr = Trees(32, 32, 15);
  const int j = std::max(tr.tx.depth(), tr.ty.depth());
  const ScaleProblem p(tr.tx, tr.ty, j, CostFunction::MetricPower(2));
  Philox rng(15);
  StrategyConfig config = ParseStrategy("ipr:inf");
  const RefineResult r = RefineLoop(p, HalfArcSet(p, rng), config);
  const double full = FullOptimum(p);
  CHECK(std::fabs(r.solution.plan.objective - full) <= 1e-10 * std::max(1.0, full));
  CHECK(PotentialCandidates(p, r.solution.plan, r.arcs).empty());
  CHECK(CheckOptimality(r.solution.plan, p.Instance(r.arcs)).optimal);
  // Fixpoint duals are feasible on every pair of the level.
  for (std::size_t s = 0; s < p.num_sources(); ++s) {
    for (std::size_t t = 0; t < p.num_targets(); ++t) {
      CHECK(p.Cost(int(s), int(t)) - r.solution.plan.source_potentials[s] -
                r.solution.plan.target_potentials[t] >= -1e-8);
    }
  }
}

TEST_CASE("refinement loops: budgets and monotone objectives") {
  const Pair tr = Trees(64, 64, 17, 4);
  const int j = std::max(tr.tx.depth(), tr.ty.depth());
  const ScaleProblem p(tr.tx, tr.ty, j, CostFunction::MetricPower(2));
  Philox rng(17);
  const ArcSet start = HalfArcSet(p, rng);

  const RefineResult none = RefineLoop(p, start, ParseStrategy("simple"));
  CHECK(none.iterations == 0);
  CHECK(none.objectives.size() == 1);

  const RefineResult ipr = RefineLoop(p, start, ParseStrategy("ipr:5"));
  CHECK(ipr.iterations <= 5);
  for (std::size_t k = 1; k < ipr.objectives.size(); ++k) {
    CHECK(ipr.objectives[k] <= ipr.objectives[k - 1] + 1e-12);
  }
  CHECK(ipr.solution.plan.objective <= none.solution.plan.objective + 1e-12);

  const RefineResult nr = RefineLoop(p, start, ParseStrategy("nr:1"));
  CHECK(nr.iterations == 1);
  CHECK(nr.arcs.size() >= start.size());
  CHECK(nr.solution.plan.objective <= none.solution.plan.objective + 1e-12);
}

TEST_CASE("interpolated basis warm-starts the next scale") {
  const auto [mu, nu] = GenerateEllipse(400, 21);
  const PartitionTree tx = BuildTree(mu), ty = BuildTree(nu);
  const CostFunction c2 = CostFunction::MetricPower(2);
  for (int j = 1; j + 1 <= std::min(tx.depth(), ty.depth()); ++j) {
    const ScaleProblem coarse(tx, ty, j, c2);
    const ScaleProblem fine(tx, ty, j + 1, c2);
    const SolveResult opt = Solve(coarse.Instance(FullArcSet(coarse)));
    const ArcSet arcs = SimplePropagate(coarse, Support(opt.plan));
    const TransportInstance inst = fine.Instance(arcs);
    const Basis basis = InterpolatedBasis(fine, opt.plan);
    CHECK(basis.tree.size() == fine.num_sources() + fine.num_targets());
    const SolveResult cold = Solve(inst);
    const SolveResult warm = Solve(inst, &basis);
    CAPTURE(j);
    CHECK(warm.plan.warm_started);
    CHECK(warm.plan.objective == doctest::Approx(cold.plan.objective).epsilon(1e-12));
    CHECK(CheckOptimality(warm.plan, inst).optimal);
  }
}
