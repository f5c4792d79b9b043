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

// msot command-line tool. Every subcommand goes through the C API.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure (infeasible,
// underflow), 3 I/O error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "msot/msot.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

// Thrown by Check to unwind to main with the right exit code.
struct Failure {
  int exit_code;
};

int ExitCodeOf(msot_status status) {
  switch (status) {
    case MSOT_OK: return 0;
    case MSOT_INVALID_ARGUMENT:
    case MSOT_SIZE_LIMIT: return kExitUsage;
    case MSOT_IO_ERROR: return kExitIo;
    default: return kExitNumerical;
  }
}

void Check(msot_status status, const std::string& context) {
  if (status == MSOT_OK) return;
  std::cerr << "msot: " << context << ": " << msot_status_name(status) << ": "
            << msot_last_error() << "\n";
  throw Failure{ExitCodeOf(status)};
}

[[noreturn]] void UsageError(const std::string& what) {
  std::cerr << "msot: " << what << "\n";
  throw Failure{kExitUsage};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using Measure = std::unique_ptr<msot_measure, Deleter<msot_measure, msot_measure_free>>;
using Cost = std::unique_ptr<msot_cost, Deleter<msot_cost, msot_cost_free>>;
using Solution = std::unique_ptr<msot_solution, Deleter<msot_solution, msot_solution_free>>;
using Plan = std::unique_ptr<msot_plan, Deleter<msot_plan, msot_plan_free>>;
using SinkhornRun = std::unique_ptr<msot_sinkhorn, Deleter<msot_sinkhorn, msot_sinkhorn_free>>;
using Tree = std::unique_ptr<msot_tree, Deleter<msot_tree, msot_tree_free>>;

std::string TakeString(char* s) {
  std::string out = s ? s : "";
  msot_string_free(s);
  return out;
}

double Manhattan(const double* x, const double* y, size_t dim, void*) {
  double sum = 0.0;
  for (size_t k = 0; k < dim; ++k) sum += std::fabs(x[k] - y[k]);
  return sum;
}

// "p=<x>" for |x - y|^p, or "custom" for the L1 (Manhattan) distance, run
// through the opaque-callback path without a pruning bound.
Cost ParseCost(const std::string& spec) {
  msot_cost* c = nullptr;
  if (spec == "custom") {
    Check(msot_cost_custom(&Manhattan, nullptr, nullptr, &c), "cost");
    return Cost(c);
  }
  if (spec.rfind("p=", 0) != 0) UsageError("cost must be p=<exponent> or custom, got " + spec);
  double p = 0.0;
  std::istringstream in(spec.substr(2));
  if (!(in >> p) || !in.eof()) UsageError("bad cost exponent in " + spec);
  Check(msot_cost_metric_power(p, &c), "cost");
  return Cost(c);
}

Measure ReadMeasure(const std::string& path, bool mass_column) {
  msot_measure* m = nullptr;
  Check(msot_measure_read_csv(path.c_str(), mass_column ? 1 : 0, &m), path);
  return Measure(m);
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  out.close();
  if (!out) {
    std::cerr << "msot: cannot write " << path << "\n";
    throw Failure{kExitIo};
  }
}

// Summary JSON goes to --summary when given; stdout gets it with --json or
// when there is no summary file.
void EmitSummary(const std::string& json, const std::string& summary_path, bool to_stdout) {
  if (!summary_path.empty()) WriteText(summary_path, json);
  if (to_stdout || summary_path.empty()) std::cout << json << "\n";
}

int ThreadsDefault() {
  if (const char* env = std::getenv("MOT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

std::vector<std::string> SplitList(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Common {
  std::string src, dst;
  bool mass_column = false;
  std::string cost = "p=2";
  std::string out, summary;
  bool json = false;
};

void AddInputs(CLI::App* cmd, Common& c) {
  cmd->add_option("--src", c.src, "Source point set CSV")->required();
  cmd->add_option("--dst", c.dst, "Target point set CSV")->required();
  cmd->add_flag("--mass-column", c.mass_column, "Read the last CSV column as masses");
  cmd->add_option("--cost", c.cost, "p=<exponent> or custom")->capture_default_str();
}

void AddOutputs(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Plan CSV output");
  cmd->add_option("--summary", c.summary, "Summary JSON output");
  cmd->add_flag("--json", c.json, "Print the summary JSON to stdout");
}

struct MultiscaleFlags {
  std::string strategy = "cp";
  std::uint64_t seed = 1;
  int stop_scale = -1;
  int branching = 0;
  std::string coarsening = "pointwise";
  bool all_scales = false;
};

void AddMultiscale(CLI::App* cmd, MultiscaleFlags& f) {
  cmd->add_option("--strategy", f.strategy, "Propagation/refinement strategy")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Seed for trees and capacity draws")->capture_default_str();
  cmd->add_option("--J0", f.stop_scale, "Stop after this scale (default: finest)");
  cmd->add_option("--K", f.branching, "Tree branching factor (default 2^min(D,6))");
  cmd->add_option("--coarsening", f.coarsening, "pointwise, local_average or weighted_average")
      ->capture_default_str();
}

msot_solve_options SolveOptions(const MultiscaleFlags& f) {
  msot_solve_options o;
  msot_solve_options_init(&o);
  o.strategy = f.strategy.c_str();
  o.seed = f.seed;
  o.stop_scale = f.stop_scale;
  o.branching = f.branching;
  if (f.coarsening == "pointwise") {
    o.coarsening = MSOT_COARSEN_POINTWISE;
  } else if (f.coarsening == "local_average") {
    o.coarsening = MSOT_COARSEN_LOCAL_AVERAGE;
  } else if (f.coarsening == "weighted_average") {
    o.coarsening = MSOT_COARSEN_WEIGHTED_AVERAGE;
  } else {
    UsageError("unknown coarsening " + f.coarsening);
  }
  return o;
}

Solution RunMultiscale(const Common& c, const MultiscaleFlags& f, const msot_measure* mu,
                       const msot_measure* nu, const msot_cost* cost) {
  const msot_solve_options o = SolveOptions(f);
  msot_solution* s = nullptr;
  Check(msot_solve_multiscale(mu, nu, cost, &o, &s), "solve");
  Solution sol(s);
  for (size_t i = 0; i < msot_solution_num_warnings(s); ++i) {
    std::cerr << "msot: warning: " << msot_solution_warning(s, i) << "\n";
  }
  if (!c.out.empty()) {
    Check(msot_solution_write_plan(s, c.out.c_str(), f.all_scales ? 1 : 0), c.out);
  }
  return sol;
}

int CmdGenerate(const std::string& kind, size_t n, size_t dim, double shift,
                std::uint64_t seed, bool disk, const std::string& out_src,
                const std::string& out_dst, bool json) {
  msot_measure* s = nullptr;
  msot_measure* t = nullptr;
  Check(msot_generate(kind.c_str(), n, dim, shift, seed, disk ? 1 : 0, &s, &t), "generate");
  Measure mu(s), nu(t);
  if (!out_src.empty()) Check(msot_measure_write_csv(s, out_src.c_str(), 1), out_src);
  if (!out_dst.empty()) Check(msot_measure_write_csv(t, out_dst.c_str(), 1), out_dst);
  if (json) {
    nlohmann::json doc = {{"dataset", kind}, {"n", n}, {"seed", seed},
                          {"dim", msot_measure_dim(s)}, {"source", out_src},
                          {"target", out_dst}};
    std::cout << doc.dump(2) << "\n";
  }
  return 0;
}

int CmdSolve(const Common& c, const MultiscaleFlags& f) {
  Measure mu = ReadMeasure(c.src, c.mass_column);
  Measure nu = ReadMeasure(c.dst, c.mass_column);
  Cost cost = ParseCost(c.cost);
  Solution sol = RunMultiscale(c, f, mu.get(), nu.get(), cost.get());
  char* json = nullptr;
  Check(msot_solution_summary_json(sol.get(), 2, &json), "summary");
  EmitSummary(TakeString(json), c.summary, c.json);
  return 0;
}

int CmdExact(const Common& c, size_t max_pairs) {
  Measure mu = ReadMeasure(c.src, c.mass_column);
  Measure nu = ReadMeasure(c.dst, c.mass_column);
  Cost cost = ParseCost(c.cost);
  msot_plan* p = nullptr;
  Check(msot_solve_exact(mu.get(), nu.get(), cost.get(), max_pairs, &p), "exact");
  Plan plan(p);
  if (!c.out.empty()) Check(msot_plan_write_csv(p, c.out.c_str()), c.out);
  char* json = nullptr;
  Check(msot_plan_summary_json(p, 2, &json), "summary");
  EmitSummary(TakeString(json), c.summary, c.json);
  return 0;
}

int CmdSinkhorn(const Common& c, const msot_sinkhorn_options& options, double threshold) {
  Measure mu = ReadMeasure(c.src, c.mass_column);
  Measure nu = ReadMeasure(c.dst, c.mass_column);
  Cost cost = ParseCost(c.cost);
  msot_sinkhorn* r = nullptr;
  Check(msot_sinkhorn_solve(mu.get(), nu.get(), cost.get(), &options, &r), "sinkhorn");
  SinkhornRun run(r);
  if (!msot_sinkhorn_converged(r)) {
    std::cerr << "msot: warning: sinkhorn stopped at the iteration cap before reaching the "
                 "tolerance\n";
  }
  if (!c.out.empty()) Check(msot_sinkhorn_write_csv(r, c.out.c_str(), threshold), c.out);
  char* json = nullptr;
  Check(msot_sinkhorn_summary_json(r, 2, &json), "summary");
  EmitSummary(TakeString(json), c.summary, c.json);
  return 0;
}

int CmdCompare(const Common& c, const MultiscaleFlags& f, size_t max_pairs) {
  Measure mu = ReadMeasure(c.src, c.mass_column);
  Measure nu = ReadMeasure(c.dst, c.mass_column);
  Cost cost = ParseCost(c.cost);
  Solution sol = RunMultiscale(c, f, mu.get(), nu.get(), cost.get());
  msot_plan* p = nullptr;
  Check(msot_solve_exact(mu.get(), nu.get(), cost.get(), max_pairs, &p), "exact");
  Plan exact(p);
  char* text = nullptr;
  Check(msot_solution_summary_json(sol.get(), -1, &text), "summary");
  const nlohmann::json multiscale = nlohmann::json::parse(TakeString(text));
  Check(msot_plan_summary_json(p, -1, &text), "summary");
  const nlohmann::json oracle = nlohmann::json::parse(TakeString(text));

  const double objective = msot_solution_objective(sol.get());
  const double best = msot_plan_objective(p);
  double relerr = 0.0;
  if (best != 0.0) {
    relerr = std::fabs(objective - best) / std::fabs(best);
  } else if (objective != 0.0) {
    relerr = INFINITY;
  }
  nlohmann::json doc = {{"strategy", multiscale["strategy"]},
                        {"cost", multiscale["cost"]},
                        {"seed", f.seed},
                        {"n", multiscale["n"]},
                        {"m", multiscale["m"]},
                        {"objective", objective},
                        {"exact", best},
                        {"relerr", relerr},
                        {"millis", multiscale["total_millis"]},
                        {"exact_millis", oracle["millis"]},
                        {"multiscale", multiscale},
                        {"exact_solve", oracle}};
  EmitSummary(doc.dump(2), c.summary, c.json);
  return 0;
}

struct BenchFlags {
  std::string dataset = "ellipse";
  std::string sizes = "512,1024,2048,4096,8192";
  std::string strategies = "cp,exact";
  double cost_exponent = 2.0;
  std::uint64_t seed = 1;
  size_t dim = 2;
  double shift = 0.0;
  bool disk = false;
  bool no_exact = false;
  size_t max_pairs = 0;
  int threads = 0;
  std::string out, summary;
  bool json = false;
};

int CmdBench(const BenchFlags& b) {
  std::vector<size_t> sizes;
  for (const std::string& s : SplitList(b.sizes, ',')) {
    try {
      size_t used = 0;
      const unsigned long long v = std::stoull(s, &used);
      if (used != s.size() || v == 0) throw std::invalid_argument(s);
      sizes.push_back(static_cast<size_t>(v));
    } catch (const std::exception&) {
      UsageError("bad size '" + s + "' in --sizes");
    }
  }
  const std::vector<std::string> names = SplitList(b.strategies, ',');
  std::vector<const char*> strategies;
  for (const std::string& s : names) strategies.push_back(s.c_str());

  msot_bench_options o;
  msot_bench_options_init(&o);
  o.dataset = b.dataset.c_str();
  o.dim = b.dim;
  o.shift = b.shift;
  o.disk = b.disk ? 1 : 0;
  o.seed = b.seed;
  o.sizes = sizes.data();
  o.num_sizes = sizes.size();
  o.strategies = strategies.data();
  o.num_strategies = strategies.size();
  o.cost_exponent = b.cost_exponent;
  o.with_exact = b.no_exact ? 0 : 1;
  o.max_exact_pairs = b.max_pairs;
  o.threads = b.threads > 0 ? b.threads : ThreadsDefault();
  char* csv = nullptr;
  char* json = nullptr;
  Check(msot_bench_run(&o, &csv, &json), "bench");
  const std::string csv_text = TakeString(csv);
  const std::string json_text = TakeString(json);
  if (!b.out.empty()) WriteText(b.out, csv_text);
  if (!b.summary.empty()) WriteText(b.summary, json_text);
  if (b.json) {
    std::cout << json_text << "\n";
  } else if (b.out.empty()) {
    std::cout << csv_text;
  }
  return 0;
}

int CmdTree(const std::string& src, bool mass_column, const msot_tree_options& options,
            const std::string& out, int indent) {
  Measure mu = ReadMeasure(src, mass_column);
  msot_tree* t = nullptr;
  Check(msot_tree_build(mu.get(), &options, &t), "tree");
  Tree tree(t);
  char* json = nullptr;
  Check(msot_tree_json(t, indent, &json), "tree");
  const std::string text = TakeString(json);
  if (out.empty()) {
    std::cout << text << "\n";
  } else {
    WriteText(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale optimal transport between weighted point sets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", msot_version());

  // generate
  std::string gen_kind;
  size_t gen_n = 1000, gen_dim = 2;
  double gen_shift = 0.0;
  std::uint64_t gen_seed = 1;
  bool gen_disk = false, gen_json = false;
  std::string gen_src, gen_dst;
  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic point set pair");
  generate->add_option("kind", gen_kind, "ellipse, caffarelli or uniform_shift")->required();
  generate->add_option("--n", gen_n, "Points per side")->capture_default_str();
  generate->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  generate->add_option("--dim", gen_dim, "Dimension (uniform_shift)")->capture_default_str();
  generate->add_option("--shift", gen_shift, "Target shift along x (uniform_shift)");
  generate->add_flag("--disk", gen_disk, "Ellipse: sample the disk instead of the circle");
  generate->add_option("--out-src", gen_src, "Source CSV output")->required();
  generate->add_option("--out-dst", gen_dst, "Target CSV output")->required();
  generate->add_flag("--json", gen_json, "Print a JSON description to stdout");

  // solve
  Common solve_c;
  MultiscaleFlags solve_f;
  CLI::App* solve = app.add_subcommand("solve", "Multiscale transport solve");
  AddInputs(solve, solve_c);
  AddMultiscale(solve, solve_f);
  AddOutputs(solve, solve_c);
  solve->add_flag("--all-scales", solve_f.all_scales, "Write the plans of every scale");

  // exact
  Common exact_c;
  size_t exact_pairs = 0;
  CLI::App* exact = app.add_subcommand("exact", "Network simplex over all pairs");
  AddInputs(exact, exact_c);
  AddOutputs(exact, exact_c);
  exact->add_option("--max-pairs", exact_pairs, "Size guard on n*m (default 2^27)");

  // sinkhorn
  Common sk_c;
  msot_sinkhorn_options sk_o;
  msot_sinkhorn_options_init(&sk_o);
  bool sk_log = false;
  double sk_threshold = 0.0;
  CLI::App* sinkhorn = app.add_subcommand("sinkhorn", "Entropy-regularized Sinkhorn baseline");
  AddInputs(sinkhorn, sk_c);
  AddOutputs(sinkhorn, sk_c);
  sinkhorn->add_option("--penalty", sk_o.penalty, "Entropy weight (default 1/(0.05 median))");
  sinkhorn->add_option("--tolerance", sk_o.tolerance, "L1 marginal tolerance")
      ->capture_default_str();
  sinkhorn->add_option("--max-iter", sk_o.max_iterations, "Iteration cap")
      ->capture_default_str();
  sinkhorn->add_flag("--log-domain", sk_log, "Run in the log domain from the start");
  sinkhorn->add_option("--threshold", sk_threshold, "Drop plan entries at or below this mass");
  sinkhorn->add_option("--max-pairs", sk_o.max_pairs, "Size guard on n*m (default 2^27)");

  // compare
  Common cmp_c;
  MultiscaleFlags cmp_f;
  size_t cmp_pairs = 0;
  CLI::App* compare = app.add_subcommand("compare", "Multiscale solve against the exact optimum");
  AddInputs(compare, cmp_c);
  AddMultiscale(compare, cmp_f);
  AddOutputs(compare, cmp_c);
  compare->add_option("--max-pairs", cmp_pairs, "Size guard on n*m (default 2^27)");

  // bench
  BenchFlags bench_f;
  CLI::App* bench = app.add_subcommand("bench", "Scaling study on a synthetic family");
  bench->add_option("dataset", bench_f.dataset, "ellipse, caffarelli or uniform_shift")
      ->capture_default_str();
  bench->add_option("--sizes", bench_f.sizes, "Comma-separated n grid")->capture_default_str();
  bench->add_option("--strategies", bench_f.strategies, "Comma-separated names, or exact")
      ->capture_default_str();
  bench->add_option("--p", bench_f.cost_exponent, "Cost exponent")->capture_default_str();
  bench->add_option("--seed", bench_f.seed, "Dataset and strategy seed")->capture_default_str();
  bench->add_option("--dim", bench_f.dim, "Dimension (uniform_shift)")->capture_default_str();
  bench->add_option("--shift", bench_f.shift, "Target shift (uniform_shift)");
  bench->add_flag("--disk", bench_f.disk, "Ellipse: sample the disk");
  bench->add_flag("--no-exact", bench_f.no_exact, "Skip the exact oracle");
  bench->add_option("--max-pairs", bench_f.max_pairs, "Exact oracle size guard");
  bench->add_option("--threads", bench_f.threads, "Worker threads (default MOT_THREADS or 1)");
  bench->add_option("--out", bench_f.out, "Run records CSV output");
  bench->add_option("--summary", bench_f.summary, "Study JSON output");
  bench->add_flag("--json", bench_f.json, "Print the study JSON to stdout");

  // tree
  std::string tree_src, tree_out;
  bool tree_mass = false;
  int tree_indent = 2;
  msot_tree_options tree_o;
  msot_tree_options_init(&tree_o);
  CLI::App* tree = app.add_subcommand("tree", "Build a partition tree and dump it as JSON");
  tree->add_option("--src", tree_src, "Point set CSV")->required();
  tree->add_flag("--mass-column", tree_mass, "Read the last CSV column as masses");
  tree->add_option("--K", tree_o.branching, "Branching factor (default 2^min(D,6))");
  tree->add_option("--seed", tree_o.seed, "K-means seed")->capture_default_str();
  tree->add_option("--max-leaves", tree_o.max_leaves, "Stop at this many leaves");
  tree->add_option("--max-leaf-radius", tree_o.max_leaf_radius, "Stop below this leaf radius");
  tree->add_option("--indent", tree_indent, "JSON indent; negative for one line")
      ->capture_default_str();
  tree->add_option("--out", tree_out, "JSON output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*generate) {
      return CmdGenerate(gen_kind, gen_n, gen_dim, gen_shift, gen_seed, gen_disk, gen_src,
                         gen_dst, gen_json);
    }
    if (*solve) return CmdSolve(solve_c, solve_f);
    if (*exact) return CmdExact(exact_c, exact_pairs);
    if (*sinkhorn) {
      sk_o.log_domain = sk_log ? 1 : 0;
      return CmdSinkhorn(sk_c, sk_o, sk_threshold);
    }
    if (*compare) return CmdCompare(cmp_c, cmp_f, cmp_pairs);
    if (*bench) return CmdBench(bench_f);
    if (*tree) return CmdTree(tree_src, tree_mass, tree_o, tree_out, tree_indent);
  } catch (const Failure& f) {
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "msot: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
