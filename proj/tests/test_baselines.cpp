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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "msot/baselines.hpp"
#include "msot/bench.hpp"
#include "msot/error.hpp"
#include "msot/rng.hpp"
#include "oracles.hpp"

using namespace msot;

namespace {

DiscreteMeasure Random(std::size_t n, Philox& rng, double dx = 0.0) {
  std::vector<double> xs(2 * n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[2 * i] = rng.Uniform() + dx;
    xs[2 * i + 1] = rng.Uniform();
    w[i] = rng.Uniform(0.1, 1.0);
  }
  return MakeMeasure(PointSet(2, xs), w);
}

}  // namespace

TEST_CASE("exact solve basics") {
  const DiscreteMeasure a = MakeMeasure(std::vector<Point>{{0, 0}});
  const DiscreteMeasure b = MakeMeasure(std::vector<Point>{{3, 4}});
  CHECK(SolveExact(a, b, CostFunction::MetricPower(1)).objective == 5.0);
  Philox rng(1);
  const DiscreteMeasure m = Random(40, rng);
  for (double p : {1.0, 2.0}) CHECK(SolveExact(m, m, CostFunction::MetricPower(p)).objective == 0.0);
}

TEST_CASE("exact solve matches the SSP oracle") {
  Philox rng(2);
  for (int k = 0; k < 10; ++k) {
    const DiscreteMeasure mu = Random(5 + rng.Below(40), rng);
    const DiscreteMeasure nu = Random(5 + rng.Below(40), rng, 0.5);
    const CostFunction c = CostFunction::MetricPower(k % 2 ? 1.0 : 2.0);
    const TransportPlan plan = SolveExact(mu, nu, c);
    std::vector<double> s(mu.masses().begin(), mu.masses().end());
    std::vector<double> d(nu.masses().begin(), nu.masses().end());
    const double oracle = msot::testing::SspTransport(s, d, CostMatrix(mu, nu, c, kDefaultMaxPairs));
    CHECK(plan.objective == doctest::Approx(oracle).epsilon(1e-10));
    for (const Flow& f : plan.flows) CHECK(f.arc == f.source * nu.size() + f.target);
  }
}

TEST_CASE("exact solve respects the size guard") {
  Philox rng(3);
  const DiscreteMeasure m = Random(20, rng);
  try {
    SolveExact(m, m, CostFunction::MetricPower(2), 100);
    FAIL("guard not applied");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSizeLimit);
  }
}

TEST_CASE("sinkhorn on singletons") {
  const DiscreteMeasure a = MakeMeasure(std::vector<Point>{{0, 0}});
  const DiscreteMeasure b = MakeMeasure(std::vector<Point>{{3, 4}});
  const SinkhornResult r = Sinkhorn(a, b, CostFunction::MetricPower(1));
  REQUIRE(r.coupling.size() == 1);
  CHECK(r.coupling[0] == doctest::Approx(1.0));
  CHECK(r.objective == doctest::Approx(5.0));
  CHECK(r.converged);
}

TEST_CASE("sinkhorn marginals, positivity and the exact lower bound") {
  Philox rng(4);
  for (int k = 0; k < 15; ++k) {
    const DiscreteMeasure mu = Random(3 + rng.Below(20), rng);
    const DiscreteMeasure nu = Random(3 + rng.Below(20), rng, 0.3);
    const CostFunction c = CostFunction::MetricPower(2);
    const SinkhornResult r = Sinkhorn(mu, nu, c);
    REQUIRE(r.converged);
    CHECK(r.row_violation <= 1e-5);
    CHECK(r.column_violation <= 1e-5);
    for (double v : r.coupling) CHECK(v > 0.0);
    // Recompute the violations independently.
    double rows = 0.0, cols = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < nu.size(); ++j) s += r.coupling[i * nu.size() + j];
      rows += std::fabs(s - mu.mass(i));
    }
    for (std::size_t j = 0; j < nu.size(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) s += r.coupling[i * nu.size() + j];
      cols += std::fabs(s - nu.mass(j));
    }
    CHECK(rows <= 1e-5);
    CHECK(cols <= 1e-5);
    CHECK(r.objective >= SolveExact(mu, nu, c).objective - 1e-12);
  }
}

TEST_CASE("sinkhorn gap shrinks as the penalty grows") {
  const DiscreteMeasure mu = MakeMeasure(std::vector<Point>{{0}, {1}});
  const DiscreteMeasure nu = MakeMeasure(std::vector<Point>{{0}, {1}});
  const CostFunction c = CostFunction::MetricPower(1);
  double previous = INFINITY;
  for (double penalty : {1.0, 3.0, 10.0, 30.0}) {
    SinkhornConfig cfg;
    cfg.penalty = penalty;
    const SinkhornResult r = Sinkhorn(mu, nu, c, cfg);
    CHECK(r.objective >= 0.0);
    CHECK(r.objective < previous);
    previous = r.objective;
  }
  CHECK(previous < 1e-6);
}

TEST_CASE("log-domain sinkhorn agrees and handles kernel underflow") {
  Philox rng(5);
  const DiscreteMeasure mu = Random(12, rng);
  const DiscreteMeasure nu = Random(15, rng, 0.2);
  const CostFunction c = CostFunction::MetricPower(2);
  SinkhornConfig plain;
  plain.penalty = 20.0;
  SinkhornConfig logd = plain;
  logd.log_domain = true;
  const SinkhornResult a = Sinkhorn(mu, nu, c, plain);
  const SinkhornResult b = Sinkhorn(mu, nu, c, logd);
  CHECK(b.log_domain);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-6));
  // exp(-c * 1e5) underflows for every off-diagonal pair.
  const DiscreteMeasure far = Random(10, rng, 50.0);
  SinkhornConfig harsh;
  harsh.penalty = 1e5;
  harsh.max_iterations = 200000;
  const SinkhornResult h = Sinkhorn(mu, far, c, harsh);
  CHECK(h.log_domain);
  CHECK(std::isfinite(h.objective));
  CHECK(h.objective >= SolveExact(mu, far, c).objective - 1e-12);
}

TEST_CASE("median cost and plan rows") {
  CHECK(MedianCost({3, 1, 2}) == 2.0);
  CHECK(MedianCost({4, 1, 2, 3}) == 2.5);
  Philox rng(6);
  const DiscreteMeasure mu = Random(5, rng), nu = Random(4, rng);
  const CostFunction c = CostFunction::MetricPower(2);
  const SinkhornResult r = Sinkhorn(mu, nu, c);
  CHECK(PlanRows(r, mu, nu, c).size() == 20);
  for (const PlanRow& row : PlanRows(r, mu, nu, c, 0.05)) {
    CHECK(row.mass > 0.05);
    CHECK(row.scale == "sinkhorn");
  }
  const TransportPlan plan = SolveExact(mu, nu, c);
  const auto rows = PlanRows(plan, mu, nu, c, "exact");
  CHECK(rows.size() == plan.flows.size());
  double total = 0.0;
  for (const PlanRow& row : rows) total += row.mass * row.unit_cost;
  CHECK(total == doctest::Approx(plan.objective).epsilon(1e-12));
}
