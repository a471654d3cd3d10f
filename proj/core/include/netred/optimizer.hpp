#pragma once

/*
  Edge-weight optimization for the reduced network: an LMI characterization of
  the H2 error bound, its convex-concave split, the linearized convex
  subproblem, and the iterative weighting loop, all over the conic-solver
  interface.

  Fixed error-system data (everything that does not depend on the reduced edge
  weights) is prepared once; the weight-dependent coupling block enters the
  state matrix as  A_err = a_fixed + coupling_selector * weight_block_embed(w).
*/

#include <vector>

#include <Eigen/Dense>

#include "netred/conic.hpp"
#include "netred/h2.hpp"
#include "netred/reduction.hpp"

namespace netred {

struct ErrorSystemData {
  int n = 0, r = 0, p = 0, q = 0;
  int dim = 0;  // deflated error-state dimension, n + r - 2

  Eigen::MatrixXd a_fixed;            // dim x dim, weight-independent part
  Eigen::MatrixXd coupling_selector;  // dim x dim, places the weight block
  Eigen::MatrixXd b_err;              // dim x p
  Eigen::MatrixXd c_err;              // q x dim

  // Weight block factors: block(w) = coupling_left * Diag(w) * coupling_right.
  Eigen::MatrixXd coupling_left;   // (r-1) x mhat
  Eigen::MatrixXd coupling_right;  // mhat x (r-1)

  QuotientModel quot;
  BalancedRepresentation rep;
  Eigen::MatrixXd output_map;
  DeflationPair defl;
};

ErrorSystemData build_error_system_data(const BalancedRepresentation& rep,
                                        const Eigen::MatrixXd& output_map,
                                        const QuotientModel& quot);

/// Weight-dependent coupling block, (r-1) square.
Eigen::MatrixXd weight_block(const ErrorSystemData& d, const Eigen::VectorXd& w);
/// Its embedding into the deflated state dimension (top-right corner).
Eigen::MatrixXd weight_block_embed(const ErrorSystemData& d, const Eigen::VectorXd& w);
/// Error-system state matrix at the given weights.
Eigen::MatrixXd error_state_matrix(const ErrorSystemData& d, const Eigen::VectorXd& w);

/// Concave part of the bilinear constraint (quadratic in the weights).
Eigen::MatrixXd phi_map(const ErrorSystemData& d, const Eigen::VectorXd& w);
Eigen::MatrixXd phi_map(const ErrorSystemData& d, const WeightParameterization& p,
                        const Eigen::VectorXd& mu);
/// Affine part, evaluated at a candidate certificate matrix.
Eigen::MatrixXd psi_map(const ErrorSystemData& d, const Eigen::MatrixXd& q_hat,
                        double delta_hat);
/// Directional derivative of phi at w_at in direction h (exact; phi is quadratic).
Eigen::MatrixXd dphi(const ErrorSystemData& d, const Eigen::VectorXd& w_at,
                     const Eigen::VectorXd& h);
Eigen::MatrixXd dphi(const ErrorSystemData& d, const WeightParameterization& p,
                     const Eigen::VectorXd& mu, const Eigen::VectorXd& h);

struct OptimizerConfig {
  double delta_hat = 1e-5;
  double tol = 1e-5;   // stopping tolerance on consecutive objectives
  int max_iter = 200;  // subproblem solves
  double w_min = 0.0;  // <= 0 requests the default 1e-6 * max initial weight
  double eps_psd_base = 1e-7;  // strictness margin per unit of block dimension
  // Keep iterating past a flat objective while the H2 oracle still improves
  // by more than 10*tol. Off by default.
  bool continue_while_oracle_improves = false;
  // Assemble the bound LMI with its decoupled identity rows dropped (third
  // block of size r-1). The square embedding remains available for
  // cross-validation.
  bool reduced_bound_block = true;
  // The transformed LMIs carry certificates with large dynamic range and the
  // central path can flatten just short of the gap target; the acceptance
  // factors keep such flattened-but-converged solves usable.
  SolverSettings solver{1e-8, 1e-10, 200, 1000.0, 1000.0, false};
  const SdpSolver* solver_impl = nullptr;  // null: built-in interior point
};

/// Feasibility of the transformed H2-bound LMIs at fixed weights.
SolverOutcome theorem1_feasible(const ErrorSystemData& d, const Eigen::VectorXd& w,
                                double gamma_hat, double delta_hat,
                                const OptimizerConfig& cfg = {});

/// Feasibility of the classical H2-bound LMIs at fixed weights.
SolverOutcome standard_h2_feasible(const ErrorSystemData& d, const Eigen::VectorXd& w,
                                   double gamma, const OptimizerConfig& cfg = {});

/// Bisection over the transformed bound; returns the located H2^2 value
/// (gamma_hat at the feasibility boundary divided by delta_hat).
double bisect_h2_squared(const ErrorSystemData& d, const Eigen::VectorXd& w,
                         double delta_hat, double rel_tol = 2e-3,
                         const OptimizerConfig& cfg = {});

/// Least upper bound tr(R) achievable at fixed weights (objective used for
/// the iteration trace at step zero).
SolverOutcome fixed_weight_bound(const ErrorSystemData& d, const Eigen::VectorXd& w,
                                 const OptimizerConfig& cfg = {});

struct SubproblemLayout {
  int q_offset = 0;   // symmetric certificate block, dim x dim
  int r_offset = 0;   // symmetric trace block, q x q
  int mu_offset = 0;  // free weight variables
  int dim = 0, q = 0, mu_count = 0;
};

/// Convex subproblem linearized at mu_k: minimize tr(R) subject to the
/// tangent-overestimated constraint and elementwise T mu >= w_min.
ConicProgram linearized_subproblem(const ErrorSystemData& d, const WeightParameterization& p,
                                   const Eigen::VectorXd& mu_k, const OptimizerConfig& cfg,
                                   SubproblemLayout* layout = nullptr);

enum class WeightingStatus { converged, max_iter_reached, subproblem_failure };

std::string to_string(WeightingStatus status);

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;  // tr(R) from the subproblem
  double h2_error = 0.0;   // Lyapunov-oracle H2 error at this iterate
  SolveStatus status = SolveStatus::optimal;
  double elapsed_ms = 0.0;
  Eigen::VectorXd mu;
};

struct IterationTrace {
  std::vector<IterationRecord> steps;
};

struct WeightingResult {
  Eigen::VectorXd weights;
  Eigen::VectorXd mu;
  WeightingStatus status = WeightingStatus::converged;
  IterationTrace trace;
  double initial_h2 = 0.0;
  double final_h2 = 0.0;
};

/// Iterative edge weighting from an admissible starting point.
WeightingResult optimize_weights(const ErrorSystemData& d, const WeightParameterization& p,
                                 const Eigen::VectorXd& mu0, const OptimizerConfig& cfg = {});

}  // namespace netred
