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

// File formats: point-set CSV, plan CSV rows, and the tree debug dump.

#ifndef MSOT_IO_HPP_
#define MSOT_IO_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "msot/core.hpp"
#include "msot/mstree.hpp"

namespace msot {

enum class CsvHeader { kAuto, kPresent, kAbsent };

struct CsvReadOptions {
  // kAuto treats a first row that does not parse as numbers as a header.
  CsvHeader header = CsvHeader::kAuto;
  // Read the last column as masses. A header whose last column is named
  // "mass" turns this on as well.
  bool mass_column = false;
};

// Rows `x1,...,xD[,mass]`. Blank lines are skipped. Throws Error(kIo) when
// the file cannot be read and kInvalidArgument on malformed content.
DiscreteMeasure ReadMeasureCsv(const std::string& path,
                               const CsvReadOptions& options = {});
DiscreteMeasure ParseMeasureCsv(std::istream& in,
                                const CsvReadOptions& options = {});

// Writes a header row and one row per point; masses are appended as a
// `mass` column when requested.
void WriteMeasureCsv(const DiscreteMeasure& measure, std::ostream& out,
                     bool with_mass);
void WriteMeasureCsv(const DiscreteMeasure& measure, const std::string& path,
                     bool with_mass);

// One line of a plan file: `scale,source_node,target_node,mass,unit_cost`.
struct PlanRow {
  std::string scale;
  long long source = 0;
  long long target = 0;
  double mass = 0.0;
  double unit_cost = 0.0;
};

void WritePlanCsv(const std::vector<PlanRow>& rows, std::ostream& out);
void WritePlanCsv(const std::vector<PlanRow>& rows, const std::string& path);
std::vector<PlanRow> ReadPlanCsv(const std::string& path);

// Shortest round-trip decimal form of a double.
std::string FormatDouble(double v);

// {"branching", "depth", "nodes": [{id, scale, center, mass, radius_bound,
// children}]}
std::string TreeToJson(const PartitionTree& tree, int indent = -1);

}  // namespace msot

#endif  // MSOT_IO_HPP_
