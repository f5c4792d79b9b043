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

#include "msot/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "msot/error.hpp"

namespace msot {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(Trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool ParseDouble(std::string_view s, double* out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool ParseAll(const std::vector<std::string_view>& fields, std::vector<double>* out) {
  out->resize(fields.size());
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (!ParseDouble(fields[k], &(*out)[k])) return false;
  }
  return true;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

DiscreteMeasure ParseMeasureCsv(std::istream& in, const CsvReadOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  bool mass_column = options.mass_column;
  std::size_t width = 0;
  std::vector<double> coords;
  std::vector<double> masses;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view trimmed = Trim(line);
    if (trimmed.empty()) continue;
    const std::vector<std::string_view> fields = SplitFields(trimmed);
    const bool numeric = ParseAll(fields, &values);
    if (first) {
      first = false;
      const bool header = options.header == CsvHeader::kPresent ||
                          (options.header == CsvHeader::kAuto && !numeric);
      width = fields.size();
      if (header) {
        if (fields.back() == "mass") mass_column = true;
        continue;
      }
    }
    if (!numeric) {
      Fail(ErrorCode::kInvalidArgument,
           "line " + std::to_string(line_no) + ": expected numeric fields");
    }
    if (fields.size() != width) {
      Fail(ErrorCode::kInvalidArgument,
           "line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
               " fields, got " + std::to_string(fields.size()));
    }
    if (mass_column) {
      Require(width >= 2, "a mass column needs at least one coordinate column");
      coords.insert(coords.end(), values.begin(), values.end() - 1);
      masses.push_back(values.back());
    } else {
      coords.insert(coords.end(), values.begin(), values.end());
    }
  }
  if (in.bad()) Fail(ErrorCode::kIo, "read error");
  Require(!coords.empty(), "point file holds no points");
  const std::size_t dim = mass_column ? width - 1 : width;
  PointSet points(dim, std::move(coords));
  if (mass_column) return MakeMeasure(std::move(points), std::move(masses));
  return MakeMeasure(std::move(points));
}

DiscreteMeasure ReadMeasureCsv(const std::string& path, const CsvReadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open '" + path + "'");
  return ParseMeasureCsv(in, options);
}

void WriteMeasureCsv(const DiscreteMeasure& measure, std::ostream& out, bool with_mass) {
  const std::size_t dim = measure.dim();
  for (std::size_t k = 0; k < dim; ++k) out << (k ? "," : "") << 'x' << (k + 1);
  if (with_mass) out << ",mass";
  out << '\n';
  for (std::size_t i = 0; i < measure.size(); ++i) {
    const PointView p = measure.point(i);
    for (std::size_t k = 0; k < dim; ++k) out << (k ? "," : "") << FormatDouble(p[k]);
    if (with_mass) out << ',' << FormatDouble(measure.mass(i));
    out << '\n';
  }
}

void WriteMeasureCsv(const DiscreteMeasure& measure, const std::string& path,
                     bool with_mass) {
  std::ofstream out = OpenOut(path);
  WriteMeasureCsv(measure, out, with_mass);
  if (!out) Fail(ErrorCode::kIo, "write to '" + path + "' failed");
}

void WritePlanCsv(const std::vector<PlanRow>& rows, std::ostream& out) {
  out << "scale,source_node,target_node,mass,unit_cost\n";
  for (const PlanRow& r : rows) {
    out << r.scale << ',' << r.source << ',' << r.target << ',' << FormatDouble(r.mass)
        << ',' << FormatDouble(r.unit_cost) << '\n';
  }
}

void WritePlanCsv(const std::vector<PlanRow>& rows, const std::string& path) {
  std::ofstream out = OpenOut(path);
  WritePlanCsv(rows, out);
  if (!out) Fail(ErrorCode::kIo, "write to '" + path + "' failed");
}

std::vector<PlanRow> ReadPlanCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open '" + path + "'");
  std::vector<PlanRow> rows;
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto fields = SplitFields(Trim(line));
    double src = 0;
    double dst = 0;
    PlanRow row;
    if (fields.size() != 5 || !ParseDouble(fields[1], &src) || !ParseDouble(fields[2], &dst) ||
        !ParseDouble(fields[3], &row.mass) || !ParseDouble(fields[4], &row.unit_cost)) {
      Fail(ErrorCode::kInvalidArgument, "plan line " + std::to_string(line_no) + " is malformed");
    }
    row.scale = std::string(fields[0]);
    row.source = static_cast<long long>(src);
    row.target = static_cast<long long>(dst);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string TreeToJson(const PartitionTree& tree, int indent) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& node : tree.nodes()) {
    nodes.push_back({{"id", node.id},
                     {"scale", node.scale},
                     {"center", node.center},
                     {"mass", node.mass},
                     {"radius_bound", node.radius_bound},
                     {"children", node.children}});
  }
  nlohmann::json doc = {{"branching", tree.branching()},
                        {"depth", tree.depth()},
                        {"points", tree.measure().size()},
                        {"nodes", std::move(nodes)}};
  return doc.dump(indent);
}

}  // namespace msot
