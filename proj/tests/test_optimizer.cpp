#include <doctest.h>

#include <netred/h2.hpp>
#include <netred/io.hpp>
#include <netred/optimizer.hpp>

#include "support.hpp"

using namespace netred;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct ExampleData {
  DirectedNetwork net = preset_network("paper6");
  Clustering clus = preset_clustering("paper6");
  BalancedRepresentation rep = balanced_representation(net);
  QuotientModel quot = quotient(incidence(net), clus, rep, net.output_map());
  WeightParameterization param = parameterize(quot);
  VectorXd w0 = projection_initial_weights(rep.laplacian, clus, quot);
  ErrorSystemData data = build_error_system_data(rep, net.output_map(), quot);

  double oracle(const VectorXd& w) const {
    const ErrorRealization e = error_realization(rep, net.output_map(), quot, w);
    return h2_norm(e.a, e.b, e.c);
  }
};

ErrorSystemData make_instance(int seed, int n, int r, int io, VectorXd* w0_out,
                            WeightParameterization* param_out) {
  const DirectedNetwork net = random_balanced_network(n, 2, 100 + seed, io, io);
  const Clustering clus = random_contiguous_clustering(n, r, 100 + seed);
  const BalancedRepresentation rep = balanced_representation(net);
  const QuotientModel q = quotient(incidence(net), clus, rep, net.output_map());
  if (w0_out) *w0_out = projection_initial_weights(rep.laplacian, clus, q);
  if (param_out) *param_out = parameterize(q);
  return build_error_system_data(rep, net.output_map(), q);
}

}  // namespace

TEST_CASE("error system data reassembles the deflated realization") {
  ExampleData ex;
  const ErrorRealization e = error_realization(ex.rep, ex.net.output_map(), ex.quot, ex.w0);
  CHECK((error_state_matrix(ex.data, ex.w0) - e.a).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK((ex.data.b_err - e.b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ex.data.c_err - e.c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("weight-quadratic map structure") {
  ExampleData ex;
  const int dim = ex.data.dim, p = ex.data.p;

  SUBCASE("zero weights leave only the constant identity block") {
    const MatrixXd phi0 = phi_map(ex.data, ex.param, VectorXd::Zero(2));
    MatrixXd expect = MatrixXd::Zero(2 * dim + p, 2 * dim + p);
    expect.bottomRightCorner(dim, dim) = -MatrixXd::Identity(dim, dim);
    CHECK((phi0 - expect).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("quadratic corner equals the factored product oracle") {
    // phi_a = V1 W V2 W V1^T with V1 = S_r^T Mhat^-1 Bhat and
    // V2 = Bhat0^T (S_r^+)^T S_r^+ Bhat0, computed directly.
    const MatrixXd v1 = ex.data.defl.s_red.transpose() *
                        ex.quot.masses.cwiseInverse().asDiagonal() * ex.quot.incidence;
    const MatrixXd v2 = ex.quot.incidence_pos.transpose() *
                        ex.data.defl.s_red_pinv.transpose() * ex.data.defl.s_red_pinv *
                        ex.quot.incidence_pos;
    auto gen = testsupport::rng(14);
    for (int trial = 0; trial < 10; ++trial) {
      VectorXd w(4);
      for (int i = 0; i < 4; ++i) w(i) = testsupport::urand(gen, 0.1, 2.0);
      const MatrixXd oracle_phi_a =
          v1 * w.asDiagonal() * v2 * w.asDiagonal() * v1.transpose();
      const MatrixXd phi = phi_map(ex.data, w);
      const MatrixXd corner =
          -phi.topLeftCorner(dim, dim).bottomRightCorner(ex.data.r - 1, ex.data.r - 1);
      CHECK((corner - oracle_phi_a).cwiseAbs().maxCoeff() <= 1e-12);
      // The rest of the quadratic block vanishes.
      CHECK(phi.topLeftCorner(dim, dim).topLeftCorner(ex.data.n - 1, ex.data.n - 1)
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }

  SUBCASE("midpoint psd-convexity of the quadratic corner") {
    auto gen = testsupport::rng(15);
    for (int trial = 0; trial < 25; ++trial) {
      VectorXd w1(4), w2(4);
      for (int i = 0; i < 4; ++i) {
        w1(i) = testsupport::urand(gen, 0.1, 2.0);
        w2(i) = testsupport::urand(gen, 0.1, 2.0);
      }
      const double lambda = 0.5;
      const MatrixXd a1 = weight_block(ex.data, w1);
      const MatrixXd a2 = weight_block(ex.data, w2);
      const MatrixXd am = weight_block(ex.data, lambda * w1 + (1 - lambda) * w2);
      const MatrixXd combo = lambda * a1.transpose() * a1 +
                             (1 - lambda) * a2.transpose() * a2 - am.transpose() * am;
      CHECK(testsupport::min_eigenvalue(combo) >= -1e-9);
    }
  }
}

TEST_CASE("derivative of the weight map") {
  ExampleData ex;
  SUBCASE("zero direction maps to zero") {
    CHECK(dphi(ex.data, ex.w0, VectorXd::Zero(4)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("matches central finite differences") {
    auto gen = testsupport::rng(16);
    for (int trial = 0; trial < 10; ++trial) {
      VectorXd w(4), h(4);
      for (int i = 0; i < 4; ++i) {
        w(i) = testsupport::urand(gen, 0.2, 2.0);
        h(i) = testsupport::urand(gen, -1.0, 1.0);
      }
      const double step = 1e-4;
      const MatrixXd fd =
          (phi_map(ex.data, w + step * h) - phi_map(ex.data, w - step * h)) / (2 * step);
      const MatrixXd an = dphi(ex.data, w, h);
      CHECK((fd - an).norm() <= 1e-8 * std::max(1.0, an.norm()));
    }
  }
  SUBCASE("tangent overestimates the map") {
    auto gen = testsupport::rng(17);
    for (int trial = 0; trial < 25; ++trial) {
      VectorXd w0(4), w1(4);
      for (int i = 0; i < 4; ++i) {
        w0(i) = testsupport::urand(gen, 0.2, 2.0);
        w1(i) = testsupport::urand(gen, 0.2, 2.0);
      }
      const MatrixXd gap =
          phi_map(ex.data, w1) - (phi_map(ex.data, w0) + dphi(ex.data, w0, w1 - w0));
      CHECK(testsupport::min_eigenvalue(-gap) >= -1e-9);
    }
  }
}

TEST_CASE("bound feasibility brackets the Lyapunov oracle") {
  ExampleData ex;
  OptimizerConfig cfg;
  const double h2sq = std::pow(ex.oracle(ex.w0), 2);

  const SolverOutcome above =
      theorem1_feasible(ex.data, ex.w0, 1.1 * cfg.delta_hat * h2sq, cfg.delta_hat, cfg);
  CHECK(above.status == SolveStatus::optimal);
  CHECK(above.primal.size() > 0);

  const SolverOutcome below =
      theorem1_feasible(ex.data, ex.w0, 0.9 * cfg.delta_hat * h2sq, cfg.delta_hat, cfg);
  CHECK(below.status == SolveStatus::infeasible);
  CHECK(below.primal.size() == 0);

  const double located = bisect_h2_squared(ex.data, ex.w0, cfg.delta_hat);
  CHECK(located == doctest::Approx(h2sq).epsilon(0.01));
}

TEST_CASE("classical-form feasibility") {
  ExampleData ex;
  OptimizerConfig cfg;
  const double h2sq = std::pow(ex.oracle(ex.w0), 2);

  CHECK(standard_h2_feasible(ex.data, ex.w0, 1.1 * h2sq, cfg).status ==
        SolveStatus::optimal);
  CHECK(standard_h2_feasible(ex.data, ex.w0, 0.9 * h2sq, cfg).status ==
        SolveStatus::infeasible);
  CHECK(standard_h2_feasible(ex.data, ex.w0, 1e6, cfg).status == SolveStatus::optimal);
  CHECK(standard_h2_feasible(ex.data, ex.w0, 0.0, cfg).status == SolveStatus::infeasible);
}

TEST_CASE("transformed and classical forms agree on random instances") {
  OptimizerConfig cfg;
  auto gen = testsupport::rng(18);
  int agreements = 0;
  for (int seed = 1; seed <= 8; ++seed) {
    VectorXd w0;
    WeightParameterization param;
    const ErrorSystemData data = make_instance(seed, 5 + seed % 3, 3, 1, &w0, &param);
    const ErrorRealization e = error_realization(data.rep, data.output_map, data.quot, w0);
    const double h2sq = std::pow(h2_norm(e.a, e.b, e.c), 2);
    for (int probe = 0; probe < 3; ++probe) {
      const double gamma = h2sq * testsupport::urand(gen, 0.4, 2.5);
      const SolverOutcome hat =
          theorem1_feasible(data, w0, cfg.delta_hat * gamma, cfg.delta_hat, cfg);
      const SolverOutcome classical = standard_h2_feasible(data, w0, gamma, cfg);
      REQUIRE(hat.status != SolveStatus::numerical_failure);
      REQUIRE(classical.status != SolveStatus::numerical_failure);
      CHECK(hat.status == classical.status);
      agreements += hat.status == classical.status;
    }
  }
  CHECK(agreements == 24);
}

TEST_CASE("square and reduced bound assemblies give the same value") {
  for (int seed = 1; seed <= 5; ++seed) {
    VectorXd w0;
    const ErrorSystemData data = make_instance(seed, 5 + seed % 2, 3, 1, &w0, nullptr);
    OptimizerConfig square;
    square.reduced_bound_block = false;
    OptimizerConfig reduced;
    reduced.reduced_bound_block = true;
    const SolverOutcome a = fixed_weight_bound(data, w0, square);
    const SolverOutcome b = fixed_weight_bound(data, w0, reduced);
    REQUIRE(a.status == SolveStatus::optimal);
    REQUIRE(b.status == SolveStatus::optimal);
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-4));
  }
}

TEST_CASE("fixed-weight bound upper-bounds the oracle tightly") {
  ExampleData ex;
  OptimizerConfig cfg;
  const SolverOutcome out = fixed_weight_bound(ex.data, ex.w0, cfg);
  REQUIRE(out.status == SolveStatus::optimal);
  const double h2sq = std::pow(ex.oracle(ex.w0), 2);
  CHECK(out.objective >= h2sq - 1e-9);
  CHECK(out.objective <= 1.05 * h2sq);
}

TEST_CASE("linearized subproblem at the identity-clustering fixed point") {
  const DirectedNetwork net = random_balanced_network(5, 1, 7, 1, 1);
  const BalancedRepresentation rep = balanced_representation(net);
  const IncidenceDecomposition dec = incidence(net);
  const QuotientModel q = quotient(dec, Clustering::identity(5), rep, net.output_map());
  const WeightParameterization param = parameterize(q);
  const ErrorSystemData data = build_error_system_data(rep, net.output_map(), q);
  OptimizerConfig cfg;
  cfg.w_min = 1e-6;
  SubproblemLayout layout;
  const ConicProgram prog = linearized_subproblem(
      data, param, mu_from_weights(param, dec.weights), cfg, &layout);
  const SolverOutcome out = default_solver().solve(prog, cfg.solver);
  REQUIRE(out.status == SolveStatus::optimal);
  CHECK(out.objective <= 1e-4);  // strictness-margin-level noise
}

TEST_CASE("iterative edge weighting on the bundled example") {
  ExampleData ex;
  OptimizerConfig cfg;  // paper defaults delta_hat = tol = 1e-5
  const WeightingResult res =
      optimize_weights(ex.data, ex.param, mu_from_weights(ex.param, ex.w0), cfg);

  REQUIRE(!res.trace.steps.empty());
  CHECK(res.status == WeightingStatus::converged);
  CHECK(res.final_h2 <= res.initial_h2 + 1e-12);

  double prev = res.trace.steps.front().objective;
  for (const IterationRecord& rec : res.trace.steps) {
    CHECK(rec.objective <= prev + 1e-9);
    prev = rec.objective;
    // Balance and floor hold at every iterate.
    const VectorXd w = weights_from_mu(ex.param, rec.mu);
    CHECK((ex.quot.incidence * w).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(w.minCoeff() >= 1e-6 * ex.w0.maxCoeff() - 1e-12);
  }

  // Iterate feasibility: the achieved bound is certified by the fixed-weight
  // LMIs at the final weights.
  const double f_final = res.trace.steps.back().objective;
  const SolverOutcome certificate = theorem1_feasible(
      ex.data, res.weights, cfg.delta_hat * f_final * 1.02 + 1e-12, cfg.delta_hat, cfg);
  CHECK(certificate.status == SolveStatus::optimal);

  // Certified objective stays within 5% of the Lyapunov oracle.
  CHECK(std::pow(res.final_h2, 2) <= f_final + 1e-9);
  CHECK(f_final <= 1.05 * std::pow(res.final_h2, 2) + 1e-9);
}

TEST_CASE("identity clustering terminates at numerically zero error") {
  const DirectedNetwork net = random_balanced_network(5, 1, 9, 1, 1);
  const BalancedRepresentation rep = balanced_representation(net);
  const IncidenceDecomposition dec = incidence(net);
  const QuotientModel q = quotient(dec, Clustering::identity(5), rep, net.output_map());
  const WeightParameterization param = parameterize(q);
  const ErrorSystemData data = build_error_system_data(rep, net.output_map(), q);
  OptimizerConfig cfg;
  const WeightingResult res =
      optimize_weights(data, param, mu_from_weights(param, dec.weights), cfg);
  CHECK(res.status == WeightingStatus::converged);
  CHECK(res.final_h2 <= 1e-8);
  CHECK(res.trace.steps.size() <= 4);
}

TEST_CASE("single-cluster reduction yields a zero-dimensional optimization") {
  const DirectedNetwork net = random_balanced_network(5, 1, 11, 1, 1);
  const BalancedRepresentation rep = balanced_representation(net);
  const QuotientModel q =
      quotient(incidence(net), Clustering::single(5), rep, net.output_map());
  CHECK(q.edge_count() == 0);
  const WeightParameterization param = parameterize(q);
  CHECK(param.free_count() == 0);
  const ErrorSystemData data = build_error_system_data(rep, net.output_map(), q);
  OptimizerConfig cfg;
  const WeightingResult res = optimize_weights(data, param, VectorXd::Zero(0), cfg);
  CHECK(res.status == WeightingStatus::converged);
  CHECK(res.trace.steps.size() == 1);
  CHECK(res.weights.size() == 0);
}

TEST_CASE("over-constrained weight floor is reported as infeasible") {
  ExampleData ex;
  OptimizerConfig cfg;
  cfg.w_min = 10.0;  // no balanced assignment reaches this floor from w0 = (2,1,1,1)
  const WeightingResult res =
      optimize_weights(ex.data, ex.param, mu_from_weights(ex.param, ex.w0), cfg);
  CHECK(res.status == WeightingStatus::subproblem_failure);
  REQUIRE(res.trace.steps.size() >= 2);
  CHECK(res.trace.steps.back().status == SolveStatus::infeasible);
  CHECK((res.weights - ex.w0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("monotone improvement on a random instance") {
  VectorXd w0;
  WeightParameterization param;
  const ErrorSystemData data = make_instance(5, 6, 5, 2, &w0, &param);
  OptimizerConfig cfg;
  cfg.tol = 1e-6;
  cfg.max_iter = 25;
  const WeightingResult res = optimize_weights(data, param, mu_from_weights(param, w0), cfg);
  REQUIRE(!res.trace.steps.empty());
  CHECK(res.final_h2 <= res.initial_h2 + 1e-12);
  double prev = res.trace.steps.front().objective;
  for (const IterationRecord& rec : res.trace.steps) {
    CHECK(rec.objective <= prev + 1e-9);
    prev = rec.objective;
  }
}
