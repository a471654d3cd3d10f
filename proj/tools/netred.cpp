// Command-line front end: generate networks, balance them, project initial
// weights, run the iterative edge weighting, and evaluate reduced models.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <netred/balancing.hpp>
#include <netred/errors.hpp>
#include <netred/h2.hpp>
#include <netred/io.hpp>
#include <netred/optimizer.hpp>
#include <netred/reduction.hpp>

namespace {

constexpr int kExitParse = 2;
constexpr int kExitConnectivity = 3;
constexpr int kExitSolver = 4;
constexpr int kExitAdmissibility = 5;
constexpr int kExitUsage = 64;

struct RunConfig {
  double delta_hat = 1e-5;
  double tol = 1e-5;
  int max_iter = 200;
  double w_min = 0.0;  // 0 requests the default rule 1e-6 * max initial weight
  double eps_psd = 1e-7;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string graph, clusters, weights, out, trace;
};

netred::OptimizerConfig optimizer_config(const RunConfig& run) {
  netred::OptimizerConfig cfg;
  cfg.delta_hat = run.delta_hat;
  cfg.tol = run.tol;
  cfg.max_iter = run.max_iter;
  cfg.w_min = run.w_min;
  cfg.eps_psd_base = run.eps_psd;
  if (const char* env = std::getenv("NETRED_SOLVER_TOL")) {
    const double tol = std::strtod(env, nullptr);
    if (tol > 0.0) {
      cfg.solver.feas_tol = tol;
      cfg.solver.gap_tol = 0.1 * tol;
    }
  }
  return cfg;
}

struct Pipeline {
  netred::DirectedNetwork net;
  netred::Clustering clus;
  netred::BalancedRepresentation rep;
  netred::QuotientModel quot;
  netred::WeightParameterization param;
  Eigen::VectorXd w0;
  netred::ErrorSystemData data;
};

Pipeline build_pipeline(const std::string& graph_path, const std::string& clusters_path) {
  netred::DirectedNetwork net =
      netred::parse_network(netred::read_text_file(graph_path));
  netred::Clustering clus = netred::parse_clustering(
      netred::read_text_file(clusters_path), net.vertex_count());
  netred::BalancedRepresentation rep = netred::balanced_representation(net);
  netred::QuotientModel quot =
      netred::quotient(netred::incidence(net), clus, rep, net.output_map());
  netred::WeightParameterization param = netred::parameterize(quot);
  Eigen::VectorXd w0 = netred::projection_initial_weights(rep.laplacian, clus, quot);
  netred::ErrorSystemData data =
      netred::build_error_system_data(rep, net.output_map(), quot);
  return {std::move(net), std::move(clus), std::move(rep), std::move(quot),
          std::move(param), std::move(w0), std::move(data)};
}

double oracle_h2(const Pipeline& p, const Eigen::VectorXd& w) {
  const netred::ErrorRealization e =
      netred::error_realization(p.rep, p.net.output_map(), p.quot, w);
  return netred::h2_norm(e.a, e.b, e.c);
}

int cmd_gen(const std::string& preset, int random_n, int cycles, int extra_edges,
            bool unbalanced, int inputs, int outputs, const RunConfig& run,
            int clusters, const std::string& clusters_out) {
  netred::DirectedNetwork net =
      !preset.empty()
          ? netred::preset_network(preset)
          : (unbalanced
                 ? netred::random_network(random_n, extra_edges, run.seed, inputs, outputs)
                 : netred::random_balanced_network(random_n, cycles, run.seed, inputs,
                                                   outputs));
  netred::write_text_file(run.out, netred::serialize_network(net));
  std::printf("wrote %s (n=%d, edges=%d)\n", run.out.c_str(), net.vertex_count(),
              net.edge_count());

  if (!clusters_out.empty()) {
    const netred::Clustering clus =
        !preset.empty() ? netred::preset_clustering(preset)
                        : netred::random_contiguous_clustering(net.vertex_count(),
                                                               clusters, run.seed);
    netred::write_text_file(clusters_out, netred::serialize_clustering(clus));
    std::printf("wrote %s (%d clusters)\n", clusters_out.c_str(), clus.cluster_count());
  }
  return 0;
}

int cmd_balance(const RunConfig& run) {
  const netred::DirectedNetwork net =
      netred::parse_network(netred::read_text_file(run.graph));
  const netred::BalancedRepresentation rep = netred::balanced_representation(net);
  netred::write_text_file(run.out, netred::serialize_masses(rep.masses));
  std::printf("wrote %s (sum of masses %s)\n", run.out.c_str(),
              netred::format_sig(rep.masses.sum()).c_str());
  return 0;
}

int cmd_project(const RunConfig& run) {
  const Pipeline p = build_pipeline(run.graph, run.clusters);
  netred::write_text_file(run.out, netred::serialize_weights(p.quot, p.w0));
  std::printf("wrote %s (%d quotient edges)\n", run.out.c_str(), p.quot.edge_count());
  for (int k = 0; k < p.quot.edge_count(); ++k) {
    std::printf("  %d->%d %s\n", p.quot.edge_map[static_cast<size_t>(k)].first + 1,
                p.quot.edge_map[static_cast<size_t>(k)].second + 1,
                netred::format_sig(p.w0(k)).c_str());
  }
  return 0;
}

int cmd_reduce(const RunConfig& run) {
  const Pipeline p = build_pipeline(run.graph, run.clusters);
  Eigen::VectorXd w_start = p.w0;
  if (!run.weights.empty()) {
    w_start = netred::match_weights(
        p.quot, netred::parse_weights(netred::read_text_file(run.weights)));
  }
  const Eigen::VectorXd mu0 = netred::mu_from_weights(p.param, w_start);

  const netred::OptimizerConfig cfg = optimizer_config(run);
  const netred::WeightingResult res = netred::optimize_weights(p.data, p.param, mu0, cfg);
  if (res.status == netred::WeightingStatus::subproblem_failure &&
      res.trace.steps.size() <= 1) {
    throw netred::SolverError("edge weighting failed before the first step");
  }

  const netred::ReducedSystem sys = netred::reduced_system(p.quot, res.weights);
  netred::ReductionSummary summary;
  summary.initial_h2 = res.initial_h2;
  summary.final_h2 = res.final_h2;
  summary.improvement_percent =
      res.initial_h2 > 0.0
          ? (res.initial_h2 - res.final_h2) / res.initial_h2 * 100.0
          : 0.0;
  summary.iterations = static_cast<int>(res.trace.steps.size()) - 1;
  summary.status = netred::to_string(res.status);

  netred::write_text_file(run.out,
                          netred::serialize_reduced_model(p.clus, p.quot, sys, summary));
  if (!run.trace.empty()) {
    netred::write_text_file(run.trace, netred::serialize_trace_csv(res.trace));
  }
  std::printf("initial H2 error  %s\n", netred::format_sig(summary.initial_h2).c_str());
  std::printf("final H2 error    %s\n", netred::format_sig(summary.final_h2).c_str());
  std::printf("improvement       %s%%\n",
              netred::format_sig(summary.improvement_percent).c_str());
  std::printf("iterations        %d (%s)\n", summary.iterations, summary.status.c_str());
  return 0;
}

int cmd_evaluate(const RunConfig& run) {
  const Pipeline p = build_pipeline(run.graph, run.clusters);
  const Eigen::VectorXd w = netred::match_weights(
      p.quot, netred::parse_weights(netred::read_text_file(run.weights)));
  const netred::ErrorRealization e =
      netred::error_realization(p.rep, p.net.output_map(), p.quot, w);
  const double h2 = netred::h2_norm(e.a, e.b, e.c);
  const netred::ReducedSystem sys = netred::reduced_system(p.quot, w);
  std::printf("H2 error          %s\n", netred::format_sig(h2).c_str());
  std::printf("error system      %s\n",
              netred::is_hurwitz(e.a) ? "asymptotically stable" : "NOT stable");
  std::printf("consensus         %s\n",
              netred::consensus_check(sys.laplacian) ? "preserved" : "NOT preserved");
  return 0;
}

int cmd_sweep(const RunConfig& run, int count, int nodes_min, int nodes_max, int clusters) {
  struct Row {
    int index = 0;
    std::uint64_t seed = 0;
    int n = 0, r = 0, iterations = 0;
    double initial = 0.0, final_h2 = 0.0, elapsed_ms = 0.0;
    std::string status = "error";
  };
  std::vector<Row> rows(static_cast<size_t>(count));
  std::atomic<int> next{0};

  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      Row& row = rows[static_cast<size_t>(i)];
      row.index = i;
      row.seed = run.seed + static_cast<std::uint64_t>(i);
      row.n = nodes_min + (nodes_max > nodes_min ? i % (nodes_max - nodes_min + 1) : 0);
      row.r = std::min(clusters, row.n - 1);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const netred::DirectedNetwork net = netred::random_balanced_network(
            row.n, 1 + i % 2, row.seed, 1 + i % 2, 1 + i % 2);
        const netred::Clustering clus =
            netred::random_contiguous_clustering(row.n, row.r, row.seed);
        const netred::BalancedRepresentation rep = netred::balanced_representation(net);
        const netred::QuotientModel quot =
            netred::quotient(netred::incidence(net), clus, rep, net.output_map());
        const netred::WeightParameterization param = netred::parameterize(quot);
        const Eigen::VectorXd w0 =
            netred::projection_initial_weights(rep.laplacian, clus, quot);
        const netred::ErrorSystemData data =
            netred::build_error_system_data(rep, net.output_map(), quot);
        const netred::WeightingResult res = netred::optimize_weights(
            data, param, netred::mu_from_weights(param, w0), optimizer_config(run));
        row.initial = res.initial_h2;
        row.final_h2 = res.final_h2;
        row.iterations = static_cast<int>(res.trace.steps.size()) - 1;
        row.status = netred::to_string(res.status);
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      row.elapsed_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count();
    }
  };

  std::vector<std::thread> pool;
  const int jobs = std::max(1, run.jobs);
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  std::ostringstream csv;
  csv << "index,seed,n,clusters,initial_h2,final_h2,improvement_percent,iterations,"
         "status,elapsed_ms\n";
  int improved = 0;
  for (const Row& row : rows) {
    const double imp =
        row.initial > 0.0 ? (row.initial - row.final_h2) / row.initial * 100.0 : 0.0;
    improved += imp > 1.0;
    csv << row.index << ',' << row.seed << ',' << row.n << ',' << row.r << ','
        << netred::format_sig(row.initial) << ',' << netred::format_sig(row.final_h2)
        << ',' << netred::format_sig(imp) << ',' << row.iterations << ',' << row.status
        << ',' << netred::format_sig(row.elapsed_ms) << "\n";
  }
  netred::write_text_file(run.out, csv.str());
  std::printf("wrote %s; %d/%d instances improved by more than 1%%\n", run.out.c_str(),
              improved, count);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-preserving network reduction with optimal edge weighting"};
  app.require_subcommand(1);

  RunConfig run;

  auto add_run_options = [&](CLI::App* sub, bool with_optimizer) {
    if (with_optimizer) {
      sub->add_option("--delta-hat", run.delta_hat, "bound transform constant");
      sub->add_option("--tol", run.tol, "stopping tolerance on the objective");
      sub->add_option("--max-iter", run.max_iter, "maximum weighting iterations");
      sub->add_option("--w-min", run.w_min, "weight floor (0: 1e-6 * max initial)");
      sub->add_option("--eps-psd", run.eps_psd, "strictness margin per unit dimension");
    }
  };

  std::string preset, clusters_out;
  int random_n = 8, cycles = 2, extra_edges = 0, inputs = 1, outputs = 1, gen_clusters = 3;
  bool unbalanced = false;
  CLI::App* gen = app.add_subcommand("gen", "generate a network file");
  gen->add_option("--preset", preset, "bundled preset name (paper6)");
  gen->add_option("--random", random_n, "random network with this many vertices");
  gen->add_option("--cycles", cycles, "extra balanced cycles (balanced generator)");
  gen->add_option("--edges", extra_edges, "extra random edges (unbalanced generator)");
  gen->add_flag("--unbalanced", unbalanced, "generate a generic (unbalanced) digraph");
  gen->add_option("--inputs", inputs, "input channels");
  gen->add_option("--outputs", outputs, "output channels");
  gen->add_option("--seed", run.seed, "random seed");
  gen->add_option("--clusters", gen_clusters, "cluster count for --clusters-out");
  gen->add_option("--clusters-out", clusters_out, "also write a clustering file");
  gen->add_option("--out", run.out, "output graph file")->required();

  CLI::App* balance = app.add_subcommand("balance", "compute balancing masses");
  balance->add_option("--graph", run.graph)->required();
  balance->add_option("--out", run.out)->required();

  CLI::App* project = app.add_subcommand("project", "clustering-projection weights");
  project->add_option("--graph", run.graph)->required();
  project->add_option("--clusters", run.clusters)->required();
  project->add_option("--out", run.out)->required();

  CLI::App* reduce = app.add_subcommand("reduce", "reduce and optimize edge weights");
  reduce->add_option("--graph", run.graph)->required();
  reduce->add_option("--clusters", run.clusters)->required();
  reduce->add_option("--weights", run.weights, "initial weights file (default: projection)");
  reduce->add_option("--out", run.out, "reduced model file")->required();
  reduce->add_option("--trace", run.trace, "iteration trace CSV");
  add_run_options(reduce, true);

  CLI::App* evaluate = app.add_subcommand("evaluate", "H2 error of given weights");
  evaluate->add_option("--graph", run.graph)->required();
  evaluate->add_option("--clusters", run.clusters)->required();
  evaluate->add_option("--weights", run.weights)->required();

  int count = 20, nodes_min = 6, nodes_max = 8, sweep_clusters = 5;
  CLI::App* sweep = app.add_subcommand("sweep", "benchmark over seeded random instances");
  sweep->add_option("--count", count, "number of instances");
  sweep->add_option("--nodes-min", nodes_min);
  sweep->add_option("--nodes-max", nodes_max);
  sweep->add_option("--clusters", sweep_clusters);
  sweep->add_option("--seed", run.seed, "base seed");
  sweep->add_option("--jobs", run.jobs, "parallel workers");
  sweep->add_option("--out", run.out, "results CSV")->required();
  add_run_options(sweep, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen(preset, random_n, cycles, extra_edges, unbalanced, inputs, outputs,
                     run, gen_clusters, clusters_out);
    }
    if (balance->parsed()) return cmd_balance(run);
    if (project->parsed()) return cmd_project(run);
    if (reduce->parsed()) return cmd_reduce(run);
    if (evaluate->parsed()) return cmd_evaluate(run);
    if (sweep->parsed()) return cmd_sweep(run, count, nodes_min, nodes_max, sweep_clusters);
  } catch (const netred::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitParse;
  } catch (const netred::ConnectivityError& e) {
    std::fprintf(stderr, "connectivity error: %s\n", e.what());
    return kExitConnectivity;
  } catch (const netred::AdmissibilityError& e) {
    std::fprintf(stderr, "admissibility error: %s\n", e.what());
    return kExitAdmissibility;
  } catch (const netred::SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
