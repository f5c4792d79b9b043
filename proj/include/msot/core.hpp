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

// Weighted point sets and ground costs.

#ifndef MSOT_CORE_HPP_
#define MSOT_CORE_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msot {

using Point = std::vector<double>;
using PointView = std::span<const double>;

// Row-major storage for a set of points of a common ambient dimension.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t dim, std::vector<double> coords);

  static PointSet FromPoints(const std::vector<Point>& points);

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return size() == 0; }

  PointView operator[](std::size_t i) const {
    return PointView(coords_.data() + i * dim_, dim_);
  }
  const std::vector<double>& coords() const { return coords_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

// A discrete probability measure: points with non-negative masses summing to
// one (within 1e-12). Immutable once built.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  const PointSet& points() const { return points_; }
  std::span<const double> masses() const { return masses_; }
  double mass(std::size_t i) const { return masses_[i]; }
  PointView point(std::size_t i) const { return points_[i]; }
  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return points_.dim(); }

 private:
  friend DiscreteMeasure MakeMeasure(PointSet points,
                                     std::optional<std::vector<double>> masses);
  PointSet points_;
  std::vector<double> masses_;
};

// Builds a measure. Without masses every point gets 1/n; otherwise masses are
// divided by their (compensated) sum. Throws on empty input, negative or
// non-finite masses, and all-zero masses.
DiscreteMeasure MakeMeasure(PointSet points,
                            std::optional<std::vector<double>> masses = {});
DiscreteMeasure MakeMeasure(const std::vector<Point>& points,
                            std::optional<std::vector<double>> masses = {});

// Kahan-Babuska compensated sum.
double CompensatedSum(std::span<const double> values);

double SquaredDistance(PointView x, PointView y);
double Distance(PointView x, PointView y);

class CostFunction {
 public:
  using Evaluator = std::function<double(PointView, PointView)>;
  // Lower bound on c(x, y) over every y within `radius` of `center`.
  using BallBound =
      std::function<double(PointView x, PointView center, double radius)>;

  enum class Kind { kMetricPower, kCustom };

  // c(x, y) = |x - y|^p, Euclidean, p >= 1.
  static CostFunction MetricPower(double p);
  // Opaque evaluator. Without a ball bound, branch-and-bound searches over
  // this cost cannot prune.
  static CostFunction Custom(Evaluator evaluator, BallBound bound = {});

  Kind kind() const { return kind_; }
  bool is_metric_power() const { return kind_ == Kind::kMetricPower; }
  double exponent() const { return p_; }
  bool has_ball_bound() const { return is_metric_power() || bool(bound_); }

  // Unchecked evaluation; callers guarantee matching dimensions.
  double operator()(PointView x, PointView y) const {
    if (kind_ == Kind::kMetricPower) return PowerOfDistance(SquaredDistance(x, y));
    return evaluator_(x, y);
  }

  // c evaluated at a known Euclidean distance (metric-power only).
  double OfDistance(double distance) const;

  // Sound lower bound for c(x, y) with |y - center| <= radius. Falls back to
  // zero when no bound is available.
  double BallLowerBound(PointView x, PointView center, double radius) const;

  std::string ToString() const;

 private:
  double PowerOfDistance(double squared) const;

  Kind kind_ = Kind::kMetricPower;
  double p_ = 1.0;
  Evaluator evaluator_;
  BallBound bound_;
};

// Checked evaluation: throws on a dimension mismatch.
double EvalCost(const CostFunction& cost, PointView x, PointView y);

}  // namespace msot

#endif  // MSOT_CORE_HPP_
