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

#include "msot/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "msot/baselines.hpp"
#include "msot/error.hpp"
#include "msot/io.hpp"
#include "msot/rng.hpp"
#include "msot/solver.hpp"

namespace msot {

DatasetKind ParseDatasetKind(const std::string& name) {
  if (name == "ellipse") return DatasetKind::kEllipse;
  if (name == "caffarelli") return DatasetKind::kCaffarelli;
  if (name == "uniform_shift" || name == "uniform") return DatasetKind::kUniformShift;
  Fail(ErrorCode::kInvalidArgument, "unknown dataset '" + name + "'");
}

std::string DatasetName(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kEllipse:
      return "ellipse";
    case DatasetKind::kCaffarelli:
      return "caffarelli";
    case DatasetKind::kUniformShift:
      return "uniform_shift";
  }
  return "ellipse";
}

namespace {

DiscreteMeasure Ring(std::size_t n, Philox& rng, double sx, double sy, bool disk) {
  std::vector<double> xy(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * rng.Uniform();
    const double r = disk ? std::sqrt(rng.Uniform()) : 1.0;
    const double x = r * std::cos(t) + 0.1 * rng.Normal();
    const double y = r * std::sin(t) + 0.1 * rng.Normal();
    xy[2 * i] = sx * x;
    xy[2 * i + 1] = sy * y;
  }
  return MakeMeasure(PointSet(2, std::move(xy)));
}

std::vector<double> DiskSamples(std::size_t n, Philox& rng) {
  std::vector<double> xy;
  xy.reserve(2 * n);
  while (xy.size() < 2 * n) {
    const double x = rng.Uniform(-1.0, 1.0);
    const double y = rng.Uniform(-1.0, 1.0);
    if (x * x + y * y > 1.0) continue;
    xy.push_back(x);
    xy.push_back(y);
  }
  return xy;
}

}  // namespace

MeasurePair GenerateEllipse(std::size_t n, std::uint64_t seed, bool disk) {
  Require(n >= 1, "need at least one point per side");
  Philox src(seed, 0);
  Philox dst(seed, 1);
  return {Ring(n, src, 1.3, 0.9, disk), Ring(n, dst, 0.9, 1.1, disk)};
}

MeasurePair GenerateCaffarelli(std::size_t n, std::uint64_t seed) {
  Require(n >= 1, "need at least one point per side");
  Philox src(seed, 0);
  Philox dst(seed, 1);
  std::vector<double> a = DiskSamples(n, src);
  std::vector<double> b = DiskSamples(n, dst);
  for (std::size_t i = 0; i < n; ++i) b[2 * i] += b[2 * i] >= 0.0 ? 2.0 : -2.0;
  return {MakeMeasure(PointSet(2, std::move(a))), MakeMeasure(PointSet(2, std::move(b)))};
}

MeasurePair GenerateUniformShift(std::size_t n, std::size_t dim, double shift,
                                 std::uint64_t seed) {
  Require(n >= 1, "need at least one point per side");
  Require(dim >= 1, "dimension must be at least 1");
  Require(shift >= 0.0 && std::isfinite(shift), "shift must be non-negative");
  Philox src(seed, 0);
  Philox dst(seed, 1);
  std::vector<double> a(n * dim);
  std::vector<double> b(n * dim);
  for (double& v : a) v = src.Uniform();
  for (double& v : b) v = dst.Uniform();
  for (std::size_t i = 0; i < n; ++i) b[i * dim] += shift;
  return {MakeMeasure(PointSet(dim, std::move(a))), MakeMeasure(PointSet(dim, std::move(b)))};
}

MeasurePair Generate(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::kEllipse:
      return GenerateEllipse(spec.n, spec.seed, spec.ellipse_disk);
    case DatasetKind::kCaffarelli:
      return GenerateCaffarelli(spec.n, spec.seed);
    case DatasetKind::kUniformShift:
      return GenerateUniformShift(spec.n, spec.dim, spec.shift, spec.seed);
  }
  Fail(ErrorCode::kInternal, "unhandled dataset kind");
}

double RelativeError(double objective, double exact) {
  const double diff = std::abs(objective - exact);
  if (diff == 0.0) return 0.0;
  return diff / std::abs(exact);
}

double LogLogSlope(const std::vector<double>& x, const std::vector<double>& y) {
  Require(x.size() == y.size() && x.size() >= 2, "slope needs at least two points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    Require(x[k] > 0.0 && y[k] > 0.0, "log-log slope needs positive values");
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  Require(sxx > 0.0, "slope needs at least two distinct sizes");
  return sxy / sxx;
}

int ThreadsFromEnvironment(int fallback) {
  if (const char* env = std::getenv("MOT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return fallback;
}

StudyResult ScalingStudy(const StudyOptions& options) {
  Require(!options.sizes.empty(), "study needs at least one size");
  Require(!options.strategies.empty(), "study needs at least one strategy");
  const CostFunction cost = CostFunction::MetricPower(options.cost_exponent);
  for (const std::string& s : options.strategies) {
    if (s != "exact") ParseStrategy(s);
  }

  struct SizeData {
    MeasurePair data;
    std::optional<double> exact;
    double exact_millis = 0.0;
    std::size_t exact_flows = 0;
  };
  std::vector<SizeData> per_size;
  using Clock = std::chrono::steady_clock;
  const bool need_exact =
      options.with_exact ||
      std::find(options.strategies.begin(), options.strategies.end(), "exact") !=
          options.strategies.end();
  for (std::size_t n : options.sizes) {
    DatasetSpec spec = options.dataset;
    spec.n = n;
    SizeData d{Generate(spec), std::nullopt, 0.0, 0};
    if (need_exact && n * n <= options.max_exact_pairs) {
      const auto t0 = Clock::now();
      const TransportPlan plan = SolveExact(d.data.first, d.data.second, cost,
                                            options.max_exact_pairs);
      d.exact_millis = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      d.exact = plan.objective;
      d.exact_flows = plan.flows.size();
    }
    per_size.push_back(std::move(d));
  }

  struct Job {
    std::size_t size_index;
    std::string strategy;
  };
  std::vector<Job> jobs;
  for (const std::string& s : options.strategies) {
    for (std::size_t k = 0; k < options.sizes.size(); ++k) jobs.push_back({k, s});
  }
  std::vector<RunRecord> records(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const Job& job = jobs[k];
      const SizeData& d = per_size[job.size_index];
      RunRecord& r = records[k];
      r.strategy = job.strategy;
      r.n = options.sizes[job.size_index];
      r.seed = options.dataset.seed;
      r.exact = d.exact;
      try {
        if (job.strategy == "exact") {
          if (!d.exact) {
            errors[k] = "exact oracle exceeds the size guard at n=" + std::to_string(r.n);
            continue;
          }
          r.objective = *d.exact;
          r.millis = d.exact_millis;
          r.arcs = r.n * r.n;
          r.flows = d.exact_flows;
        } else {
          MultiscaleOptions mo;
          mo.strategy = ParseStrategy(job.strategy, options.dataset.seed);
          mo.source_tree = options.tree;
          mo.target_tree = options.tree;
          const MultiscaleSolution sol = SolveMultiscale(d.data.first, d.data.second, cost, mo);
          r.objective = sol.objective();
          r.millis = sol.total_millis;
          r.arcs = sol.final_scale().arcs.size();
          for (const ScaleRecord& sr : sol.scales) r.flows = std::max(r.flows, sr.positive_flows);
        }
        if (r.exact) r.relerr = RelativeError(r.objective, *r.exact);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  const int threads = std::max(1, options.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (!errors[k].empty()) Fail(ErrorCode::kNumerical, jobs[k].strategy + ": " + errors[k]);
  }

  StudyResult result;
  result.records = std::move(records);
  for (const std::string& s : options.strategies) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const RunRecord& r : result.records) {
      if (r.strategy != s) continue;
      xs.push_back(static_cast<double>(r.n));
      ys.push_back(std::max(r.millis, 1e-3));
    }
    if (xs.size() >= 2 && *std::min_element(xs.begin(), xs.end()) <
                              *std::max_element(xs.begin(), xs.end())) {
      result.slopes[s] = LogLogSlope(xs, ys);
    }
  }
  return result;
}

std::string RunRecordsCsv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "strategy,n,objective,exact,relerr,millis,arcs,flows,seed\n";
  for (const RunRecord& r : records) {
    out << r.strategy << ',' << r.n << ',' << FormatDouble(r.objective) << ','
        << (r.exact ? FormatDouble(*r.exact) : "") << ','
        << (r.relerr ? FormatDouble(*r.relerr) : "") << ',' << FormatDouble(r.millis) << ','
        << r.arcs << ',' << r.flows << ',' << r.seed << '\n';
  }
  return out.str();
}

std::string StudyJson(const StudyResult& result, int indent) {
  nlohmann::json runs = nlohmann::json::array();
  for (const RunRecord& r : result.records) {
    nlohmann::json j = {{"strategy", r.strategy}, {"n", r.n},         {"objective", r.objective},
                        {"millis", r.millis},     {"arcs", r.arcs},   {"flows", r.flows},
                        {"seed", r.seed}};
    j["exact"] = r.exact ? nlohmann::json(*r.exact) : nlohmann::json(nullptr);
    j["relerr"] = r.relerr ? nlohmann::json(*r.relerr) : nlohmann::json(nullptr);
    runs.push_back(std::move(j));
  }
  nlohmann::json slopes = nlohmann::json::object();
  for (const auto& [name, slope] : result.slopes) slopes[name] = slope;
  return nlohmann::json{{"runs", std::move(runs)}, {"slopes", std::move(slopes)}}.dump(indent);
}

}  // namespace msot
