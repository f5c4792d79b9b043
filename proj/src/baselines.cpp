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

#include "msot/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msot/error.hpp"

namespace msot {

std::vector<double> CostMatrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               const CostFunction& cost, std::size_t max_pairs) {
  Require(mu.size() > 0 && nu.size() > 0, "empty measure");
  Require(mu.dim() == nu.dim(), "source and target of different dimension");
  const std::size_t n = mu.size();
  const std::size_t m = nu.size();
  if (n > max_pairs / m) {
    Fail(ErrorCode::kSizeLimit, std::to_string(n) + " x " + std::to_string(m) +
                                    " pairs exceed the limit of " + std::to_string(max_pairs));
  }
  std::vector<double> c(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const PointView x = mu.point(i);
    double* row = c.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) row[j] = cost(x, nu.point(j));
  }
  return c;
}

TransportPlan SolveExact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const CostFunction& cost, std::size_t max_pairs) {
  std::vector<double> c = CostMatrix(mu, nu, cost, max_pairs);
  const std::span<const double> a = mu.masses();
  const std::span<const double> b = nu.masses();
  TransportInstance instance = TransportInstance::Dense(
      std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end()),
      std::move(c));
  return Solve(instance).plan;
}

double MedianCost(const std::vector<double>& costs) {
  Require(!costs.empty(), "median of no costs");
  std::vector<double> v = costs;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

namespace {

double LogSumExp(const double* v, std::size_t len, std::size_t stride) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < len; ++k) hi = std::max(hi, v[k * stride]);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (std::size_t k = 0; k < len; ++k) s += std::exp(v[k * stride] - hi);
  return hi + std::log(s);
}

struct Marginals {
  double row = 0.0;
  double col = 0.0;
};

Marginals Violations(const std::vector<double>& p, std::size_t n, std::size_t m,
                     std::span<const double> a, std::span<const double> b) {
  Marginals v;
  std::vector<double> col(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      r += p[i * m + j];
      col[j] += p[i * m + j];
    }
    v.row += std::abs(r - a[i]);
  }
  for (std::size_t j = 0; j < m; ++j) v.col += std::abs(col[j] - b[j]);
  return v;
}

// Scaling-form iterations. Returns false when the scalings stop being finite.
bool ScalingIterations(const std::vector<double>& c, double penalty, std::span<const double> a,
                       std::span<const double> b, const SinkhornConfig& cfg,
                       SinkhornResult* out) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<double> k(n * m);
  for (std::size_t t = 0; t < n * m; ++t) k[t] = std::exp(-c[t] * penalty);
  std::vector<double> u(n, 1.0);
  std::vector<double> v(m, 1.0);
  std::vector<double> kv(n);
  std::vector<double> ktu(m);
  auto finite = [](const std::vector<double>& w) {
    return std::all_of(w.begin(), w.end(), [](double x) { return std::isfinite(x) && x >= 0.0; });
  };
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += k[i * m + j] * v[j];
      kv[i] = s;
      u[i] = a[i] / s;
    }
    std::fill(ktu.begin(), ktu.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) ktu[j] += k[i * m + j] * u[i];
    }
    for (std::size_t j = 0; j < m; ++j) v[j] = b[j] / ktu[j];
    if (!finite(u) || !finite(v)) return false;
    out->iterations = it;
    // Columns are exact after the v update; check rows.
    double row = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += k[i * m + j] * v[j];
      row += std::abs(u[i] * s - a[i]);
    }
    if (row <= cfg.tolerance) {
      out->converged = true;
      break;
    }
  }
  out->coupling.resize(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out->coupling[i * m + j] = u[i] * k[i * m + j] * v[j];
  }
  return true;
}

bool LogIterations(const std::vector<double>& c, double penalty, std::span<const double> a,
                   std::span<const double> b, const SinkhornConfig& cfg, SinkhornResult* out) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const double eps = 1.0 / penalty;
  std::vector<double> f(n, 0.0);
  std::vector<double> g(m, 0.0);
  std::vector<double> la(n);
  std::vector<double> lb(m);
  for (std::size_t i = 0; i < n; ++i) la[i] = std::log(a[i]);
  for (std::size_t j = 0; j < m; ++j) lb[j] = std::log(b[j]);
  std::vector<double> work(std::max(n, m));
  out->converged = false;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) work[j] = (g[j] - c[i * m + j]) / eps;
      f[i] = a[i] > 0.0 ? eps * (la[i] - LogSumExp(work.data(), m, 1)) : -std::numeric_limits<double>::infinity();
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) work[i] = (f[i] - c[i * m + j]) / eps;
      g[j] = b[j] > 0.0 ? eps * (lb[j] - LogSumExp(work.data(), n, 1)) : -std::numeric_limits<double>::infinity();
    }
    out->iterations = it;
    double row = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] <= 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) work[j] = (f[i] + g[j] - c[i * m + j]) / eps;
      const double r = std::exp(LogSumExp(work.data(), m, 1));
      if (!std::isfinite(r)) return false;
      row += std::abs(r - a[i]);
    }
    if (row <= cfg.tolerance) {
      out->converged = true;
      break;
    }
  }
  out->coupling.resize(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out->coupling[i * m + j] = std::exp((f[i] + g[j] - c[i * m + j]) / eps);
    }
  }
  return true;
}

// Projects a positive coupling onto the transport polytope: shrink rows, then
// columns, to fit the marginals, and spread the missing mass as a rank-one
// term. Stays strictly positive and moves at most twice the L1 violation.
void RoundToMarginals(std::span<const double> a, std::span<const double> b,
                      std::vector<double>* coupling) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<double>& p = *coupling;
  for (std::size_t i = 0; i < n; ++i) {
    long double row = 0.0L;
    for (std::size_t j = 0; j < m; ++j) row += p[i * m + j];
    if (row > a[i]) {
      const double f = a[i] / static_cast<double>(row);
      for (std::size_t j = 0; j < m; ++j) p[i * m + j] *= f;
    }
  }
  std::vector<long double> col(m, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) col[j] += p[i * m + j];
  }
  std::vector<double> col_scale(m, 1.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (col[j] > b[j]) col_scale[j] = b[j] / static_cast<double>(col[j]);
  }
  std::vector<double> row_err(n), col_err(m);
  std::vector<long double> row_sum(n, 0.0L), col_sum(m, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double& x = p[i * m + j];
      x *= col_scale[j];
      row_sum[i] += x;
      col_sum[j] += x;
    }
  }
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    row_err[i] = std::max(0.0, a[i] - static_cast<double>(row_sum[i]));
    total += row_err[i];
  }
  for (std::size_t j = 0; j < m; ++j) {
    col_err[j] = std::max(0.0, b[j] - static_cast<double>(col_sum[j]));
  }
  if (total <= 0.0L) return;
  const double inv = 1.0 / static_cast<double>(total);
  for (std::size_t i = 0; i < n; ++i) {
    if (row_err[i] == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) p[i * m + j] += row_err[i] * col_err[j] * inv;
  }
}

}  // namespace

SinkhornResult Sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const CostFunction& cost, const SinkhornConfig& config,
                        std::size_t max_pairs) {
  Require(config.penalty >= 0.0 && std::isfinite(config.penalty), "penalty must be >= 0");
  Require(config.tolerance > 0.0, "tolerance must be positive");
  Require(config.max_iterations > 0, "max_iterations must be positive");
  const std::vector<double> c = CostMatrix(mu, nu, cost, max_pairs);
  const std::span<const double> a = mu.masses();
  const std::span<const double> b = nu.masses();
  SinkhornResult out;
  out.num_sources = a.size();
  out.num_targets = b.size();
  double penalty = config.penalty;
  if (penalty == 0.0) {
    const double median = MedianCost(c);
    // All-zero costs: any finite weight gives the same (product) coupling.
    penalty = median > 0.0 ? 1.0 / (0.05 * median) : 1.0;
  }
  out.penalty = penalty;

  bool ok = false;
  if (!config.log_domain) {
    // A kernel row or column of zeros means the scaling form cannot work.
    const double hi = *std::max_element(c.begin(), c.end()) * penalty;
    if (hi < 700.0) ok = ScalingIterations(c, penalty, a, b, config, &out);
  }
  if (!ok) {
    out.log_domain = true;
    out.iterations = 0;
    out.converged = false;
    if (!LogIterations(c, penalty, a, b, config, &out)) {
      Fail(ErrorCode::kNumerical,
           "Sinkhorn scaling broke down even in the log domain; lower the penalty weight");
    }
  }
  const Marginals before = Violations(out.coupling, a.size(), b.size(), a, b);
  out.iterate_violation = before.row + before.col;
  if (config.round_to_marginals) RoundToMarginals(a, b, &out.coupling);
  const Marginals v = Violations(out.coupling, a.size(), b.size(), a, b);
  out.row_violation = v.row;
  out.column_violation = v.col;
  long double obj = 0.0L;
  for (std::size_t t = 0; t < c.size(); ++t) obj += static_cast<long double>(out.coupling[t]) * c[t];
  out.objective = static_cast<double>(obj);
  return out;
}

std::vector<PlanRow> PlanRows(const TransportPlan& plan, const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const CostFunction& cost,
                              const std::string& label) {
  std::vector<PlanRow> rows;
  rows.reserve(plan.flows.size());
  for (const Flow& f : plan.flows) {
    rows.push_back({label, f.source, f.target, f.mass, cost(mu.point(f.source), nu.point(f.target))});
  }
  return rows;
}

std::vector<PlanRow> PlanRows(const SinkhornResult& result, const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const CostFunction& cost,
                              double threshold) {
  std::vector<PlanRow> rows;
  const std::size_t m = result.num_targets;
  for (std::size_t i = 0; i < result.num_sources; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double p = result.coupling[i * m + j];
      if (p > threshold) {
        rows.push_back({"sinkhorn", static_cast<long long>(i), static_cast<long long>(j), p,
                        cost(mu.point(i), nu.point(j))});
      }
    }
  }
  return rows;
}

}  // namespace msot
