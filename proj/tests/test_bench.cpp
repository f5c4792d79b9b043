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
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "msot/bench.hpp"
#include "msot/error.hpp"
#include "msot/io.hpp"

using namespace msot;

namespace {

double StdDev(const DiscreteMeasure& m, std::size_t axis) {
  double s = 0, q = 0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.point(i)[axis];
  const double mean = s / m.size();
  for (std::size_t i = 0; i < m.size(); ++i) q += std::pow(m.point(i)[axis] - mean, 2);
  return std::sqrt(q / m.size());
}

std::string Csv(const DiscreteMeasure& m) {
  std::ostringstream out;
  WriteMeasureCsv(m, out, true);
  return out.str();
}

}  // namespace

TEST_CASE("generators: sizes and determinism") {
  for (DatasetKind kind : {DatasetKind::kEllipse, DatasetKind::kCaffarelli, DatasetKind::kUniformShift}) {
    DatasetSpec spec;
    spec.kind = kind;
    spec.n = 777;
    spec.seed = 3;
    const MeasurePair a = Generate(spec), b = Generate(spec);
    CHECK(a.first.size() == 777);
    CHECK(a.second.size() == 777);
    CHECK(Csv(a.first) == Csv(b.first));
    CHECK(Csv(a.second) == Csv(b.second));
    spec.seed = 4;
    CHECK(Csv(Generate(spec).first) != Csv(a.first));
    CHECK(ParseDatasetKind(DatasetName(kind)) == kind);
  }
  const MeasurePair one = GenerateEllipse(1, 1);
  CHECK(one.first.size() == 1);
  CHECK(one.first.mass(0) == 1.0);
  CHECK_THROWS_AS(ParseDatasetKind("spiral"), Error);
}

TEST_CASE("ellipse extents follow the axis scalings") {
  const auto [mu, nu] = GenerateEllipse(5000, 1);
  CHECK(StdDev(mu, 0) / StdDev(nu, 0) == doctest::Approx(1.3 / 0.9).epsilon(0.03));
  CHECK(StdDev(mu, 1) / StdDev(nu, 1) == doctest::Approx(0.9 / 1.1).epsilon(0.03));
  // Undo the scaling: radii are 1 plus noise of standard deviation 0.1.
  std::vector<double> r;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    r.push_back(std::hypot(mu.point(i)[0] / 1.3, mu.point(i)[1] / 0.9));
  }
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / r.size();
  CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
  double spread = 0.0;
  for (double v : r) spread += (v - mean) * (v - mean);
  CHECK(std::sqrt(spread / r.size()) == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("caffarelli targets leave a gap around the axis") {
  const auto [mu, nu] = GenerateCaffarelli(3000, 2);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    CHECK(std::hypot(mu.point(i)[0], mu.point(i)[1]) <= 1.0);
    const double x = nu.point(i)[0];
    CHECK_FALSE((x > -1.0 && x < 1.0));
  }
}

TEST_CASE("uniform shift") {
  const auto [mu, nu] = GenerateUniformShift(1000, 3, 2.0, 5);
  CHECK(mu.dim() == 3);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(mu.point(i)[d] >= 0.0);
      CHECK(mu.point(i)[d] <= 1.0);
      const double y = nu.point(i)[d] - (d == 0 ? 2.0 : 0.0);
      CHECK(y >= 0.0);
      CHECK(y <= 1.0);
    }
  }
}

TEST_CASE("relative error and slopes") {
  CHECK(RelativeError(1.01, 1.0) == doctest::Approx(0.01));
  CHECK(RelativeError(0.99, 1.0) == doctest::Approx(0.01));
  CHECK(RelativeError(0.0, 0.0) == 0.0);
  std::vector<double> x{512, 1024, 2048, 4096}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.5));
  CHECK(LogLogSlope(x, y) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_THROWS_AS(LogLogSlope({5, 5}, {1, 2}), Error);
}

TEST_CASE("threads from the environment") {
  ::unsetenv("MOT_THREADS");
  CHECK(ThreadsFromEnvironment(3) == 3);
  ::setenv("MOT_THREADS", "5", 1);
  CHECK(ThreadsFromEnvironment(1) == 5);
  ::setenv("MOT_THREADS", "zero", 1);
  CHECK(ThreadsFromEnvironment(2) == 2);
  ::unsetenv("MOT_THREADS");
}

TEST_CASE("small scaling study") {
  StudyOptions opts;
  opts.dataset.kind = DatasetKind::kEllipse;
  opts.dataset.seed = 2;
  opts.sizes = {128, 256, 512};
  opts.strategies = {"cp", "cp+ipr:inf", "exact"};
  const StudyResult serial = ScalingStudy(opts);
  REQUIRE(serial.records.size() == 9);
  for (const RunRecord& r : serial.records) {
    REQUIRE(r.exact);
    REQUIRE(r.relerr);
    CHECK(*r.relerr >= 0.0);
    CHECK(*r.relerr == doctest::Approx(RelativeError(r.objective, *r.exact)));
    if (r.strategy != "cp") CHECK(*r.relerr <= 1e-8);
    CHECK(r.arcs > 0);
  }
  CHECK(serial.slopes.count("cp") == 1);
  CHECK(serial.slopes.count("exact") == 1);
  const std::string csv = RunRecordsCsv(serial.records);
  CHECK(csv.rfind("strategy,n,objective,exact,relerr,millis,arcs,flows,seed\n", 0) == 0);
  const nlohmann::json doc = nlohmann::json::parse(StudyJson(serial));
  CHECK(doc["runs"].size() == 9);
  CHECK(doc["slopes"].contains("cp"));

  opts.threads = 3;
  const StudyResult parallel = ScalingStudy(opts);
  for (std::size_t k = 0; k < serial.records.size(); ++k) {
    CHECK(parallel.records[k].strategy == serial.records[k].strategy);
    CHECK(parallel.records[k].objective == serial.records[k].objective);
    CHECK(parallel.records[k].arcs == serial.records[k].arcs);
  }
}
