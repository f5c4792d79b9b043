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

// Synthetic datasets, relative-error records and scaling studies.

#ifndef MSOT_BENCH_HPP_
#define MSOT_BENCH_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msot/core.hpp"
#include "msot/mstree.hpp"

namespace msot {

enum class DatasetKind { kEllipse, kCaffarelli, kUniformShift };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kEllipse;
  std::size_t n = 1000;
  std::size_t dim = 2;   // uniform_shift only
  double shift = 0.0;    // uniform_shift only
  std::uint64_t seed = 1;
  bool ellipse_disk = false;  // sample the unit disk instead of the circle
};

DatasetKind ParseDatasetKind(const std::string& name);
std::string DatasetName(DatasetKind kind);

using MeasurePair = std::pair<DiscreteMeasure, DiscreteMeasure>;

// Noisy unit circles (sigma 0.1), source scaled by (1.3, 0.9) and target by
// (0.9, 1.1).
MeasurePair GenerateEllipse(std::size_t n, std::uint64_t seed, bool disk = false);
// Unit-disk samples; target points with x >= 0 move by +2 in x, the others
// by -2.
MeasurePair GenerateCaffarelli(std::size_t n, std::uint64_t seed);
// Uniform on [0,1]^d; the target is moved by `shift` along the first axis.
MeasurePair GenerateUniformShift(std::size_t n, std::size_t dim, double shift,
                                 std::uint64_t seed);
MeasurePair Generate(const DatasetSpec& spec);

struct RunRecord {
  std::string strategy;
  std::size_t n = 0;
  double objective = 0.0;
  std::optional<double> exact;
  std::optional<double> relerr;
  double millis = 0.0;
  std::size_t arcs = 0;   // arcs in the finest solve
  std::size_t flows = 0;  // largest positive-flow count over scales
  std::uint64_t seed = 0;
};

// |objective - exact| / |exact|; zero when both vanish.
double RelativeError(double objective, double exact);

// Least-squares slope of log(y) against log(x).
double LogLogSlope(const std::vector<double>& x, const std::vector<double>& y);

struct StudyOptions {
  DatasetSpec dataset;
  std::vector<std::size_t> sizes;
  // Strategy names, or "exact" for the full network simplex solve.
  std::vector<std::string> strategies;
  double cost_exponent = 2.0;
  bool with_exact = true;  // compute the oracle where it fits
  std::size_t max_exact_pairs = std::size_t{1} << 27;
  TreeOptions tree;
  int threads = 1;
};

struct StudyResult {
  std::vector<RunRecord> records;
  std::map<std::string, double> slopes;  // per strategy, time against n
};

StudyResult ScalingStudy(const StudyOptions& options);

std::string RunRecordsCsv(const std::vector<RunRecord>& records);
std::string StudyJson(const StudyResult& result, int indent = 2);

// MOT_THREADS if set to a positive integer, else `fallback`.
int ThreadsFromEnvironment(int fallback);

}  // namespace msot

#endif  // MSOT_BENCH_HPP_
