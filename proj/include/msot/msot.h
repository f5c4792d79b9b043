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

/* C interface to the msot library. Objects are opaque handles created by the
 * msot_*_create / solve functions and released with the matching *_free.
 * Every fallible call returns an msot_status; on failure a description is
 * available from msot_last_error() on the calling thread. Strings returned
 * through char** out-parameters are owned by the caller and released with
 * msot_string_free. */

#ifndef MSOT_MSOT_H_
#define MSOT_MSOT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MSOT_BUILDING_LIBRARY)
#    define MSOT_API __declspec(dllexport)
#  else
#    define MSOT_API __declspec(dllimport)
#  endif
#else
#  define MSOT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum msot_status {
  MSOT_OK = 0,
  MSOT_INVALID_ARGUMENT = 1,
  MSOT_INFEASIBLE = 2,
  MSOT_NUMERICAL = 3,
  MSOT_IO_ERROR = 4,
  MSOT_SIZE_LIMIT = 5,
  MSOT_INTERNAL = 6
} msot_status;

typedef struct msot_measure msot_measure;
typedef struct msot_cost msot_cost;
typedef struct msot_solution msot_solution;
typedef struct msot_plan msot_plan;
typedef struct msot_sinkhorn msot_sinkhorn;
typedef struct msot_tree msot_tree;

MSOT_API const char* msot_version(void);

/* Message of the last failed call on this thread; "" if none. */
MSOT_API const char* msot_last_error(void);
MSOT_API const char* msot_status_name(msot_status status);
MSOT_API void msot_string_free(char* s);

/* ---- measures ---------------------------------------------------------- */

/* `coords` holds n rows of dim values. `masses` may be NULL for uniform
 * masses; otherwise they are normalized to sum to one. */
MSOT_API msot_status msot_measure_create(size_t dim, size_t n, const double* coords,
                                         const double* masses, msot_measure** out);
/* mass_column: read the last column as masses (a "mass" header does too). */
MSOT_API msot_status msot_measure_read_csv(const char* path, int mass_column,
                                           msot_measure** out);
MSOT_API msot_status msot_measure_write_csv(const msot_measure* measure,
                                            const char* path, int with_mass);
MSOT_API size_t msot_measure_size(const msot_measure* measure);
MSOT_API size_t msot_measure_dim(const msot_measure* measure);
/* Borrowed pointers, valid while the measure lives. */
MSOT_API const double* msot_measure_coords(const msot_measure* measure);
MSOT_API const double* msot_measure_masses(const msot_measure* measure);
MSOT_API void msot_measure_free(msot_measure* measure);

/* Synthetic pairs: "ellipse", "caffarelli" or "uniform_shift". dim and
 * shift apply to uniform_shift, disk to ellipse. */
MSOT_API msot_status msot_generate(const char* kind, size_t n, size_t dim, double shift,
                                   uint64_t seed, int disk, msot_measure** source,
                                   msot_measure** target);

/* ---- costs ------------------------------------------------------------- */

typedef double (*msot_cost_fn)(const double* x, const double* y, size_t dim,
                               void* user);
/* Lower bound of the cost from x to any point within `radius` of `center`. */
typedef double (*msot_ball_bound_fn)(const double* x, const double* center,
                                     size_t dim, double radius, void* user);

/* |x - y|^p with p >= 1. */
MSOT_API msot_status msot_cost_metric_power(double p, msot_cost** out);
/* `bound` may be NULL, which disables pruning in candidate searches. The
 * callbacks must be pure and must outlive the cost and every result computed
 * from it. */
MSOT_API msot_status msot_cost_custom(msot_cost_fn evaluate, msot_ball_bound_fn bound,
                                      void* user, msot_cost** out);
MSOT_API void msot_cost_free(msot_cost* cost);

/* ---- multiscale solve -------------------------------------------------- */

typedef enum msot_coarsening {
  MSOT_COARSEN_POINTWISE = 0,
  MSOT_COARSEN_LOCAL_AVERAGE = 1,
  MSOT_COARSEN_WEIGHTED_AVERAGE = 2
} msot_coarsening;

typedef struct msot_solve_options {
  const char* strategy;  /* e.g. "cp", "cp+ipr:3"; NULL means "cp" */
  uint64_t seed;
  int stop_scale;        /* J0; negative solves to the finest scale */
  int branching;         /* K; 0 picks 2^min(D, 6) */
  int coarsening;        /* msot_coarsening */
} msot_solve_options;

MSOT_API void msot_solve_options_init(msot_solve_options* options);

MSOT_API msot_status msot_solve_multiscale(const msot_measure* source,
                                           const msot_measure* target,
                                           const msot_cost* cost,
                                           const msot_solve_options* options,
                                           msot_solution** out);
MSOT_API double msot_solution_objective(const msot_solution* solution);
MSOT_API int msot_solution_depth(const msot_solution* solution);
MSOT_API int msot_solution_stop_scale(const msot_solution* solution);
/* Arcs in the last solved scale. */
MSOT_API size_t msot_solution_arcs(const msot_solution* solution);
MSOT_API size_t msot_solution_num_warnings(const msot_solution* solution);
MSOT_API const char* msot_solution_warning(const msot_solution* solution, size_t i);
MSOT_API msot_status msot_solution_summary_json(const msot_solution* solution,
                                                int indent, char** out);
/* Plan CSV of the final scale, or of every scale when all_scales is set. */
MSOT_API msot_status msot_solution_write_plan(const msot_solution* solution,
                                              const char* path, int all_scales);
/* The final coupling expressed on input points. */
MSOT_API msot_status msot_solution_point_plan(const msot_solution* solution,
                                              msot_plan** out);
MSOT_API void msot_solution_free(msot_solution* solution);

/* ---- exact solve and plans -------------------------------------------- */

/* max_pairs 0 selects the default guard of 2^27 pairs. */
MSOT_API msot_status msot_solve_exact(const msot_measure* source,
                                      const msot_measure* target, const msot_cost* cost,
                                      size_t max_pairs, msot_plan** out);
MSOT_API double msot_plan_objective(const msot_plan* plan);
MSOT_API size_t msot_plan_num_flows(const msot_plan* plan);
MSOT_API msot_status msot_plan_flow(const msot_plan* plan, size_t i, size_t* source,
                                    size_t* target, double* mass);
MSOT_API msot_status msot_plan_write_csv(const msot_plan* plan, const char* path);
MSOT_API msot_status msot_plan_summary_json(const msot_plan* plan, int indent,
                                            char** out);
MSOT_API void msot_plan_free(msot_plan* plan);

/* ---- Sinkhorn ---------------------------------------------------------- */

typedef struct msot_sinkhorn_options {
  double penalty;     /* entropy weight; 0 picks 1 / (0.05 * median cost) */
  double tolerance;   /* L1 marginal violation at which to stop */
  int max_iterations;
  int log_domain;
  size_t max_pairs;   /* 0 selects the default guard */
} msot_sinkhorn_options;

MSOT_API void msot_sinkhorn_options_init(msot_sinkhorn_options* options);

/* A run that hits max_iterations still succeeds; check
 * msot_sinkhorn_converged. */
MSOT_API msot_status msot_sinkhorn_solve(const msot_measure* source,
                                         const msot_measure* target,
                                         const msot_cost* cost,
                                         const msot_sinkhorn_options* options,
                                         msot_sinkhorn** out);
MSOT_API double msot_sinkhorn_objective(const msot_sinkhorn* result);
MSOT_API int msot_sinkhorn_iterations(const msot_sinkhorn* result);
MSOT_API int msot_sinkhorn_converged(const msot_sinkhorn* result);
MSOT_API msot_status msot_sinkhorn_summary_json(const msot_sinkhorn* result,
                                                int indent, char** out);
/* Entries below threshold are left out of the file. */
MSOT_API msot_status msot_sinkhorn_write_csv(const msot_sinkhorn* result,
                                             const char* path, double threshold);
MSOT_API void msot_sinkhorn_free(msot_sinkhorn* result);

/* ---- partition trees --------------------------------------------------- */

typedef struct msot_tree_options {
  int branching;         /* 0 picks 2^min(D, 6) */
  uint64_t seed;
  size_t max_leaves;     /* 0: no limit */
  double max_leaf_radius; /* <= 0: no limit; ignored when max_leaves is set */
} msot_tree_options;

MSOT_API void msot_tree_options_init(msot_tree_options* options);
MSOT_API msot_status msot_tree_build(const msot_measure* measure,
                                     const msot_tree_options* options, msot_tree** out);
MSOT_API int msot_tree_depth(const msot_tree* tree);
MSOT_API size_t msot_tree_size(const msot_tree* tree);
/* indent < 0 writes a single line. */
MSOT_API msot_status msot_tree_json(const msot_tree* tree, int indent, char** out);
MSOT_API void msot_tree_free(msot_tree* tree);

/* ---- scaling studies --------------------------------------------------- */

typedef struct msot_bench_options {
  const char* dataset;  /* generator name as in msot_generate */
  size_t dim;
  double shift;
  int disk;
  uint64_t seed;
  const size_t* sizes;
  size_t num_sizes;
  const char* const* strategies;  /* strategy names or "exact" */
  size_t num_strategies;
  double cost_exponent;
  int with_exact;
  size_t max_exact_pairs;  /* 0 selects the default guard */
  int threads;
} msot_bench_options;

MSOT_API void msot_bench_options_init(msot_bench_options* options);
/* Either output may be NULL. `csv` receives one row per run, `json` the
 * records together with per-strategy time slopes. */
MSOT_API msot_status msot_bench_run(const msot_bench_options* options, char** csv,
                                    char** json);

#ifdef __cplusplus
}
#endif

#endif /* MSOT_MSOT_H_ */
