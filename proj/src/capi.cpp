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

// extern "C" wrappers over the C++ library. Exceptions never cross the
// boundary: each entry point maps them to a status and a thread-local message.

#include "msot/msot.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "msot/baselines.hpp"
#include "msot/bench.hpp"
#include "msot/core.hpp"
#include "msot/error.hpp"
#include "msot/io.hpp"
#include "msot/mstree.hpp"
#include "msot/solver.hpp"

struct msot_measure {
  msot::DiscreteMeasure measure;
};

struct msot_cost {
  msot::CostFunction cost;
};

struct msot_solution {
  msot::MultiscaleSolution solution;
};

struct msot_plan {
  msot::TransportPlan plan;
  std::shared_ptr<const msot::DiscreteMeasure> source;
  std::shared_ptr<const msot::DiscreteMeasure> target;
  msot::CostFunction cost;
  std::string label;
  double millis = 0.0;
};

struct msot_sinkhorn {
  msot::SinkhornResult result;
  std::shared_ptr<const msot::DiscreteMeasure> source;
  std::shared_ptr<const msot::DiscreteMeasure> target;
  msot::CostFunction cost;
  double millis = 0.0;
};

struct msot_tree {
  msot::PartitionTree tree;
};

namespace {

thread_local std::string last_error;

msot_status StatusOf(msot::ErrorCode code) {
  switch (code) {
    case msot::ErrorCode::kInvalidArgument: return MSOT_INVALID_ARGUMENT;
    case msot::ErrorCode::kInfeasible: return MSOT_INFEASIBLE;
    case msot::ErrorCode::kNumerical: return MSOT_NUMERICAL;
    case msot::ErrorCode::kIo: return MSOT_IO_ERROR;
    case msot::ErrorCode::kSizeLimit: return MSOT_SIZE_LIMIT;
    case msot::ErrorCode::kInternal: return MSOT_INTERNAL;
  }
  return MSOT_INTERNAL;
}

template <typename F>
msot_status Guard(F&& body) {
  try {
    body();
    return MSOT_OK;
  } catch (const msot::Error& e) {
    last_error = e.what();
    return StatusOf(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return MSOT_SIZE_LIMIT;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MSOT_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return MSOT_INTERNAL;
  }
}

void NotNull(const void* p, const char* what) {
  msot::Require(p != nullptr, what);
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

double MillisSince(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

template <typename T>
void Emit(std::unique_ptr<T> value, T** out) {
  *out = value.release();
}

}  // namespace

extern "C" {

const char* msot_version(void) { return MSOT_VERSION_STRING; }

const char* msot_last_error(void) { return last_error.c_str(); }

const char* msot_status_name(msot_status status) {
  switch (status) {
    case MSOT_OK: return "ok";
    case MSOT_INVALID_ARGUMENT: return "invalid argument";
    case MSOT_INFEASIBLE: return "infeasible";
    case MSOT_NUMERICAL: return "numerical failure";
    case MSOT_IO_ERROR: return "i/o error";
    case MSOT_SIZE_LIMIT: return "size limit";
    case MSOT_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void msot_string_free(char* s) { std::free(s); }

// ---- measures ------------------------------------------------------------

msot_status msot_measure_create(size_t dim, size_t n, const double* coords,
                                const double* masses, msot_measure** out) {
  return Guard([&] {
    NotNull(out, "out is null");
    msot::Require(n == 0 || coords != nullptr, "coords is null");
    msot::Require(dim > 0, "dimension must be positive");
    std::vector<double> xs(coords, coords + n * dim);
    std::optional<std::vector<double>> ms;
    if (masses != nullptr) ms.emplace(masses, masses + n);
    auto m = std::make_unique<msot_measure>();
    m->measure = msot::MakeMeasure(msot::PointSet(dim, std::move(xs)), std::move(ms));
    Emit(std::move(m), out);
  });
}

msot_status msot_measure_read_csv(const char* path, int mass_column, msot_measure** out) {
  return Guard([&] {
    NotNull(path, "path is null");
    NotNull(out, "out is null");
    msot::CsvReadOptions options;
    options.mass_column = mass_column != 0;
    auto m = std::make_unique<msot_measure>();
    m->measure = msot::ReadMeasureCsv(path, options);
    Emit(std::move(m), out);
  });
}

msot_status msot_measure_write_csv(const msot_measure* measure, const char* path,
                                   int with_mass) {
  return Guard([&] {
    NotNull(measure, "measure is null");
    NotNull(path, "path is null");
    msot::WriteMeasureCsv(measure->measure, std::string(path), with_mass != 0);
  });
}

size_t msot_measure_size(const msot_measure* measure) {
  return measure ? measure->measure.size() : 0;
}

size_t msot_measure_dim(const msot_measure* measure) {
  return measure ? measure->measure.dim() : 0;
}

const double* msot_measure_coords(const msot_measure* measure) {
  return measure ? measure->measure.points().coords().data() : nullptr;
}

const double* msot_measure_masses(const msot_measure* measure) {
  return measure ? measure->measure.masses().data() : nullptr;
}

void msot_measure_free(msot_measure* measure) { delete measure; }

msot_status msot_generate(const char* kind, size_t n, size_t dim, double shift,
                          uint64_t seed, int disk, msot_measure** source,
                          msot_measure** target) {
  return Guard([&] {
    NotNull(kind, "kind is null");
    NotNull(source, "source is null");
    NotNull(target, "target is null");
    msot::DatasetSpec spec;
    spec.kind = msot::ParseDatasetKind(kind);
    spec.n = n;
    spec.dim = dim;
    spec.shift = shift;
    spec.seed = seed;
    spec.ellipse_disk = disk != 0;
    auto [mu, nu] = msot::Generate(spec);
    auto s = std::make_unique<msot_measure>();
    auto t = std::make_unique<msot_measure>();
    s->measure = std::move(mu);
    t->measure = std::move(nu);
    Emit(std::move(s), source);
    Emit(std::move(t), target);
  });
}

// ---- costs ---------------------------------------------------------------

msot_status msot_cost_metric_power(double p, msot_cost** out) {
  return Guard([&] {
    NotNull(out, "out is null");
    auto c = std::make_unique<msot_cost>();
    c->cost = msot::CostFunction::MetricPower(p);
    Emit(std::move(c), out);
  });
}

msot_status msot_cost_custom(msot_cost_fn evaluate, msot_ball_bound_fn bound, void* user,
                             msot_cost** out) {
  return Guard([&] {
    NotNull(out, "out is null");
    msot::Require(evaluate != nullptr, "cost callback is null");
    msot::CostFunction::Evaluator eval = [evaluate, user](msot::PointView x,
                                                          msot::PointView y) {
      return evaluate(x.data(), y.data(), x.size(), user);
    };
    msot::CostFunction::BallBound ball;
    if (bound != nullptr) {
      ball = [bound, user](msot::PointView x, msot::PointView center, double radius) {
        return bound(x.data(), center.data(), x.size(), radius, user);
      };
    }
    auto c = std::make_unique<msot_cost>();
    c->cost = msot::CostFunction::Custom(std::move(eval), std::move(ball));
    Emit(std::move(c), out);
  });
}

void msot_cost_free(msot_cost* cost) { delete cost; }

// ---- multiscale solve ----------------------------------------------------

void msot_solve_options_init(msot_solve_options* options) {
  if (options == nullptr) return;
  options->strategy = "cp";
  options->seed = 1;
  options->stop_scale = -1;
  options->branching = 0;
  options->coarsening = MSOT_COARSEN_POINTWISE;
}

msot_status msot_solve_multiscale(const msot_measure* source, const msot_measure* target,
                                  const msot_cost* cost, const msot_solve_options* options,
                                  msot_solution** out) {
  return Guard([&] {
    NotNull(source, "source is null");
    NotNull(target, "target is null");
    NotNull(cost, "cost is null");
    NotNull(out, "out is null");
    msot_solve_options defaults;
    msot_solve_options_init(&defaults);
    const msot_solve_options& o = options ? *options : defaults;
    msot::MultiscaleOptions ms;
    ms.strategy = msot::ParseStrategy(o.strategy ? o.strategy : "cp", o.seed);
    ms.source_tree.branching = o.branching;
    ms.target_tree.branching = o.branching;
    switch (o.coarsening) {
      case MSOT_COARSEN_POINTWISE: ms.coarsening = msot::CostCoarsening::kPointwise; break;
      case MSOT_COARSEN_LOCAL_AVERAGE:
        ms.coarsening = msot::CostCoarsening::kLocalAverage;
        break;
      case MSOT_COARSEN_WEIGHTED_AVERAGE:
        ms.coarsening = msot::CostCoarsening::kWeightedAverage;
        break;
      default: msot::Fail(msot::ErrorCode::kInvalidArgument, "unknown coarsening mode");
    }
    ms.stop_scale = o.stop_scale;
    auto s = std::make_unique<msot_solution>();
    s->solution = msot::SolveMultiscale(source->measure, target->measure, cost->cost, ms);
    Emit(std::move(s), out);
  });
}

double msot_solution_objective(const msot_solution* solution) {
  return solution ? solution->solution.objective() : 0.0;
}

int msot_solution_depth(const msot_solution* solution) {
  return solution ? solution->solution.depth : 0;
}

int msot_solution_stop_scale(const msot_solution* solution) {
  return solution ? solution->solution.stop_scale : 0;
}

size_t msot_solution_arcs(const msot_solution* solution) {
  return solution ? solution->solution.final_scale().arcs.size() : 0;
}

size_t msot_solution_num_warnings(const msot_solution* solution) {
  return solution ? solution->solution.warnings.size() : 0;
}

const char* msot_solution_warning(const msot_solution* solution, size_t i) {
  if (solution == nullptr || i >= solution->solution.warnings.size()) return nullptr;
  return solution->solution.warnings[i].c_str();
}

msot_status msot_solution_summary_json(const msot_solution* solution, int indent,
                                       char** out) {
  return Guard([&] {
    NotNull(solution, "solution is null");
    NotNull(out, "out is null");
    *out = CopyString(msot::SummaryJson(solution->solution, indent));
  });
}

msot_status msot_solution_write_plan(const msot_solution* solution, const char* path,
                                     int all_scales) {
  return Guard([&] {
    NotNull(solution, "solution is null");
    NotNull(path, "path is null");
    msot::WritePlanCsv(msot::PlanRows(solution->solution, all_scales != 0),
                       std::string(path));
  });
}

msot_status msot_solution_point_plan(const msot_solution* solution, msot_plan** out) {
  return Guard([&] {
    NotNull(solution, "solution is null");
    NotNull(out, "out is null");
    const msot::MultiscaleSolution& sol = solution->solution;
    msot::Require(sol.stop_scale == sol.depth,
                  "point plan needs a solve down to the finest scale");
    auto p = std::make_unique<msot_plan>();
    p->source = std::make_shared<msot::DiscreteMeasure>(sol.source_tree->measure());
    p->target = std::make_shared<msot::DiscreteMeasure>(sol.target_tree->measure());
    p->cost = sol.cost;
    p->label = std::to_string(sol.depth);
    p->plan.flows = msot::PointPlan(sol);
    std::vector<double> terms;
    terms.reserve(p->plan.flows.size());
    for (const msot::Flow& f : p->plan.flows) {
      terms.push_back(f.mass * p->cost(p->source->point(f.source), p->target->point(f.target)));
    }
    p->plan.objective = msot::CompensatedSum(terms);
    p->millis = sol.total_millis;
    Emit(std::move(p), out);
  });
}

void msot_solution_free(msot_solution* solution) { delete solution; }

// ---- exact solve and plans -----------------------------------------------

msot_status msot_solve_exact(const msot_measure* source, const msot_measure* target,
                             const msot_cost* cost, size_t max_pairs, msot_plan** out) {
  return Guard([&] {
    NotNull(source, "source is null");
    NotNull(target, "target is null");
    NotNull(cost, "cost is null");
    NotNull(out, "out is null");
    auto p = std::make_unique<msot_plan>();
    p->source = std::make_shared<msot::DiscreteMeasure>(source->measure);
    p->target = std::make_shared<msot::DiscreteMeasure>(target->measure);
    p->cost = cost->cost;
    p->label = "exact";
    const auto start = std::chrono::steady_clock::now();
    p->plan = msot::SolveExact(*p->source, *p->target, p->cost,
                               max_pairs ? max_pairs : msot::kDefaultMaxPairs);
    p->millis = MillisSince(start);
    Emit(std::move(p), out);
  });
}

double msot_plan_objective(const msot_plan* plan) {
  return plan ? plan->plan.objective : 0.0;
}

size_t msot_plan_num_flows(const msot_plan* plan) {
  return plan ? plan->plan.flows.size() : 0;
}

msot_status msot_plan_flow(const msot_plan* plan, size_t i, size_t* source, size_t* target,
                           double* mass) {
  return Guard([&] {
    NotNull(plan, "plan is null");
    msot::Require(i < plan->plan.flows.size(), "flow index out of range");
    const msot::Flow& f = plan->plan.flows[i];
    if (source) *source = static_cast<size_t>(f.source);
    if (target) *target = static_cast<size_t>(f.target);
    if (mass) *mass = f.mass;
  });
}

msot_status msot_plan_write_csv(const msot_plan* plan, const char* path) {
  return Guard([&] {
    NotNull(plan, "plan is null");
    NotNull(path, "path is null");
    msot::WritePlanCsv(
        msot::PlanRows(plan->plan, *plan->source, *plan->target, plan->cost, plan->label),
        std::string(path));
  });
}

msot_status msot_plan_summary_json(const msot_plan* plan, int indent, char** out) {
  return Guard([&] {
    NotNull(plan, "plan is null");
    NotNull(out, "out is null");
    nlohmann::json doc = {{"method", plan->label},
                          {"cost", plan->cost.ToString()},
                          {"n", plan->source->size()},
                          {"m", plan->target->size()},
                          {"objective", plan->plan.objective},
                          {"positive_flows", plan->plan.flows.size()},
                          {"pivots", plan->plan.pivots},
                          {"millis", plan->millis}};
    *out = CopyString(doc.dump(indent));
  });
}

void msot_plan_free(msot_plan* plan) { delete plan; }

// ---- Sinkhorn ------------------------------------------------------------

void msot_sinkhorn_options_init(msot_sinkhorn_options* options) {
  if (options == nullptr) return;
  const msot::SinkhornConfig defaults;
  options->penalty = defaults.penalty;
  options->tolerance = defaults.tolerance;
  options->max_iterations = defaults.max_iterations;
  options->log_domain = defaults.log_domain ? 1 : 0;
  options->max_pairs = 0;
}

msot_status msot_sinkhorn_solve(const msot_measure* source, const msot_measure* target,
                                const msot_cost* cost, const msot_sinkhorn_options* options,
                                msot_sinkhorn** out) {
  return Guard([&] {
    NotNull(source, "source is null");
    NotNull(target, "target is null");
    NotNull(cost, "cost is null");
    NotNull(out, "out is null");
    msot_sinkhorn_options o;
    msot_sinkhorn_options_init(&o);
    if (options) o = *options;
    msot::SinkhornConfig config;
    config.penalty = o.penalty;
    config.tolerance = o.tolerance;
    config.max_iterations = o.max_iterations;
    config.log_domain = o.log_domain != 0;
    auto r = std::make_unique<msot_sinkhorn>();
    r->source = std::make_shared<msot::DiscreteMeasure>(source->measure);
    r->target = std::make_shared<msot::DiscreteMeasure>(target->measure);
    r->cost = cost->cost;
    const auto start = std::chrono::steady_clock::now();
    r->result = msot::Sinkhorn(*r->source, *r->target, r->cost, config,
                               o.max_pairs ? o.max_pairs : msot::kDefaultMaxPairs);
    r->millis = MillisSince(start);
    Emit(std::move(r), out);
  });
}

double msot_sinkhorn_objective(const msot_sinkhorn* result) {
  return result ? result->result.objective : 0.0;
}

int msot_sinkhorn_iterations(const msot_sinkhorn* result) {
  return result ? result->result.iterations : 0;
}

int msot_sinkhorn_converged(const msot_sinkhorn* result) {
  return result && result->result.converged ? 1 : 0;
}

msot_status msot_sinkhorn_summary_json(const msot_sinkhorn* result, int indent, char** out) {
  return Guard([&] {
    NotNull(result, "result is null");
    NotNull(out, "out is null");
    const msot::SinkhornResult& r = result->result;
    nlohmann::json doc = {{"method", "sinkhorn"},
                          {"cost", result->cost.ToString()},
                          {"n", r.num_sources},
                          {"m", r.num_targets},
                          {"objective", r.objective},
                          {"penalty", r.penalty},
                          {"iterations", r.iterations},
                          {"row_violation", r.row_violation},
                          {"column_violation", r.column_violation},
                          {"iterate_violation", r.iterate_violation},
                          {"converged", r.converged},
                          {"log_domain", r.log_domain},
                          {"millis", result->millis}};
    *out = CopyString(doc.dump(indent));
  });
}

msot_status msot_sinkhorn_write_csv(const msot_sinkhorn* result, const char* path,
                                    double threshold) {
  return Guard([&] {
    NotNull(result, "result is null");
    NotNull(path, "path is null");
    msot::WritePlanCsv(msot::PlanRows(result->result, *result->source, *result->target,
                                      result->cost, threshold),
                       std::string(path));
  });
}

void msot_sinkhorn_free(msot_sinkhorn* result) { delete result; }

// ---- partition trees -----------------------------------------------------

void msot_tree_options_init(msot_tree_options* options) {
  if (options == nullptr) return;
  options->branching = 0;
  options->seed = 1;
  options->max_leaves = 0;
  options->max_leaf_radius = 0.0;
}

msot_status msot_tree_build(const msot_measure* measure, const msot_tree_options* options,
                            msot_tree** out) {
  return Guard([&] {
    NotNull(measure, "measure is null");
    NotNull(out, "out is null");
    msot_tree_options o;
    msot_tree_options_init(&o);
    if (options) o = *options;
    msot::TreeOptions t;
    t.branching = o.branching;
    t.seed = o.seed;
    if (o.max_leaves > 0) {
      t.stop = msot::StopRule::MaxLeaves(o.max_leaves);
    } else if (o.max_leaf_radius > 0.0) {
      t.stop = msot::StopRule::MaxLeafRadius(o.max_leaf_radius);
    }
    auto tree = std::make_unique<msot_tree>();
    tree->tree = msot::BuildTree(measure->measure, t);
    Emit(std::move(tree), out);
  });
}

int msot_tree_depth(const msot_tree* tree) { return tree ? tree->tree.depth() : 0; }

size_t msot_tree_size(const msot_tree* tree) { return tree ? tree->tree.size() : 0; }

msot_status msot_tree_json(const msot_tree* tree, int indent, char** out) {
  return Guard([&] {
    NotNull(tree, "tree is null");
    NotNull(out, "out is null");
    *out = CopyString(msot::TreeToJson(tree->tree, indent));
  });
}

void msot_tree_free(msot_tree* tree) { delete tree; }

// ---- scaling studies -----------------------------------------------------

void msot_bench_options_init(msot_bench_options* options) {
  if (options == nullptr) return;
  options->dataset = "ellipse";
  options->dim = 2;
  options->shift = 0.0;
  options->disk = 0;
  options->seed = 1;
  options->sizes = nullptr;
  options->num_sizes = 0;
  options->strategies = nullptr;
  options->num_strategies = 0;
  options->cost_exponent = 2.0;
  options->with_exact = 1;
  options->max_exact_pairs = 0;
  options->threads = 1;
}

msot_status msot_bench_run(const msot_bench_options* options, char** csv, char** json) {
  return Guard([&] {
    NotNull(options, "options is null");
    const msot_bench_options& o = *options;
    NotNull(o.dataset, "dataset is null");
    msot::Require(o.num_sizes == 0 || o.sizes != nullptr, "sizes is null");
    msot::Require(o.num_strategies == 0 || o.strategies != nullptr, "strategies is null");
    msot::StudyOptions study;
    study.dataset.kind = msot::ParseDatasetKind(o.dataset);
    study.dataset.dim = o.dim;
    study.dataset.shift = o.shift;
    study.dataset.ellipse_disk = o.disk != 0;
    study.dataset.seed = o.seed;
    study.sizes.assign(o.sizes, o.sizes + o.num_sizes);
    for (size_t i = 0; i < o.num_strategies; ++i) {
      NotNull(o.strategies[i], "strategy name is null");
      study.strategies.emplace_back(o.strategies[i]);
    }
    study.cost_exponent = o.cost_exponent;
    study.with_exact = o.with_exact != 0;
    if (o.max_exact_pairs) study.max_exact_pairs = o.max_exact_pairs;
    study.tree.seed = o.seed;
    study.threads = o.threads;
    const msot::StudyResult result = msot::ScalingStudy(study);
    std::string csv_text = msot::RunRecordsCsv(result.records);
    std::string json_text = msot::StudyJson(result);
    char* csv_out = csv ? CopyString(csv_text) : nullptr;
    try {
      if (json) *json = CopyString(json_text);
    } catch (...) {
      std::free(csv_out);
      throw;
    }
    if (csv) *csv = csv_out;
  });
}

}  // extern "C"
