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

#include "msot/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "msot/error.hpp"

namespace msot {

PointSet::PointSet(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  Require(dim_ > 0 || coords_.empty(), "point dimension must be positive");
  Require(dim_ == 0 || coords_.size() % dim_ == 0,
          "coordinate count is not a multiple of the dimension");
  for (double v : coords_) Require(std::isfinite(v), "non-finite coordinate");
}

PointSet PointSet::FromPoints(const std::vector<Point>& points) {
  if (points.empty()) return PointSet();
  const std::size_t dim = points.front().size();
  std::vector<double> coords;
  coords.reserve(dim * points.size());
  for (const Point& p : points) {
    Require(p.size() == dim, "points of mixed dimension");
    coords.insert(coords.end(), p.begin(), p.end());
  }
  return PointSet(dim, std::move(coords));
}

double CompensatedSum(std::span<const double> values) {
  double sum = 0.0;
  double compensation = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      compensation += (sum - t) + v;
    } else {
      compensation += (v - t) + sum;
    }
    sum = t;
  }
  return sum + compensation;
}

DiscreteMeasure MakeMeasure(PointSet points,
                            std::optional<std::vector<double>> masses) {
  Require(!points.empty(), "measure needs at least one point");
  const std::size_t n = points.size();
  std::vector<double> w;
  if (!masses) {
    w.assign(n, 1.0 / static_cast<double>(n));
  } else {
    Require(masses->size() == n, "mass count does not match point count");
    for (double m : *masses) {
      Require(std::isfinite(m), "non-finite mass");
      Require(m >= 0.0, "negative mass");
    }
    const double total = CompensatedSum(*masses);
    Require(total > 0.0, "all masses are zero");
    w = std::move(*masses);
    for (double& m : w) m /= total;
  }
  // Push the rounding residual into the largest atom so that the compensated
  // total is as close to one as double precision allows.
  const double residual = 1.0 - CompensatedSum(w);
  if (residual != 0.0) {
    auto largest = std::max_element(w.begin(), w.end());
    *largest = std::max(0.0, *largest + residual);
  }
  DiscreteMeasure measure;
  measure.points_ = std::move(points);
  measure.masses_ = std::move(w);
  return measure;
}

DiscreteMeasure MakeMeasure(const std::vector<Point>& points,
                            std::optional<std::vector<double>> masses) {
  Require(!points.empty(), "measure needs at least one point");
  return MakeMeasure(PointSet::FromPoints(points), std::move(masses));
}

double SquaredDistance(PointView x, PointView y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double Distance(PointView x, PointView y) {
  return std::sqrt(SquaredDistance(x, y));
}

CostFunction CostFunction::MetricPower(double p) {
  Require(std::isfinite(p) && p >= 1.0, "metric-power exponent must be >= 1");
  CostFunction c;
  c.kind_ = Kind::kMetricPower;
  c.p_ = p;
  return c;
}

CostFunction CostFunction::Custom(Evaluator evaluator, BallBound bound) {
  Require(bool(evaluator), "custom cost needs an evaluator");
  CostFunction c;
  c.kind_ = Kind::kCustom;
  c.p_ = 0.0;
  c.evaluator_ = std::move(evaluator);
  c.bound_ = std::move(bound);
  return c;
}

double CostFunction::PowerOfDistance(double squared) const {
  if (p_ == 2.0) return squared;
  if (p_ == 1.0) return std::sqrt(squared);
  return std::pow(squared, 0.5 * p_);
}

double CostFunction::OfDistance(double distance) const {
  if (p_ == 1.0) return distance;
  if (p_ == 2.0) return distance * distance;
  return std::pow(distance, p_);
}

double CostFunction::BallLowerBound(PointView x, PointView center,
                                    double radius) const {
  if (kind_ == Kind::kMetricPower) {
    const double gap = Distance(x, center) - radius;
    return gap > 0.0 ? OfDistance(gap) : 0.0;
  }
  if (bound_) return bound_(x, center, radius);
  return 0.0;
}

std::string CostFunction::ToString() const {
  if (kind_ == Kind::kCustom) return "custom";
  std::ostringstream os;
  os << "p=" << p_;
  return os.str();
}

double EvalCost(const CostFunction& cost, PointView x, PointView y) {
  Require(x.size() == y.size(), "cost evaluated on points of different dimension");
  return cost(x, y);
}

}  // namespace msot
