#pragma once

/*
  Conic programs over PSD blocks in LMI form,

      minimize c^T x  subject to  F0_k + sum_i x_i Fi_k >= 0 for each block k,

  and a dense NT-scaled primal-dual predictor-corrector interior-point solver
  for them. Linear inequalities are 1x1 blocks. Problem sizes here are desk
  scale (block dims of a few tens, a few hundred scalar variables).
*/

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace netred {

enum class SolveStatus { optimal, infeasible, numerical_failure };

std::string to_string(SolveStatus status);

struct SolverOutcome {
  SolveStatus status = SolveStatus::numerical_failure;
  Eigen::VectorXd primal;  // present iff status == optimal
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::string diagnostics;
};

struct MatrixBlock {
  int dim = 0;
  Eigen::MatrixXd constant;
  std::vector<std::pair<int, Eigen::MatrixXd>> terms;

  void add_term(int var, const Eigen::MatrixXd& coeff);
};

struct ConicProgram {
  std::vector<double> objective;
  std::vector<MatrixBlock> blocks;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int add_variable(double cost = 0.0);
  int add_variables(int count);
  MatrixBlock& add_block(int dim);
};

// Packed layout for a symmetric matrix variable: upper-triangle entries in
// row-major order; the basis matrix of an off-diagonal entry carries both
// mirrored ones.
int sym_size(int dim);
int sym_index(int i, int j, int dim);
Eigen::MatrixXd sym_basis(int i, int j, int dim);
Eigen::MatrixXd sym_value(const Eigen::VectorXd& x, int offset, int dim);

struct SolverSettings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-9;
  int max_iter = 150;
  // When the central path flattens before reaching gap_tol (degenerate
  // optimal faces), the best iterate is still accepted within these factors.
  double accept_feas_factor = 50.0;
  double accept_gap_factor = 100.0;
  bool verbose = false;
};

class SdpSolver {
 public:
  virtual ~SdpSolver() = default;
  virtual SolverOutcome solve(const ConicProgram& prog, const SolverSettings& settings) const = 0;
};

class InteriorPointSolver final : public SdpSolver {
 public:
  SolverOutcome solve(const ConicProgram& prog, const SolverSettings& settings) const override;
};

const SdpSolver& default_solver();

/// Maximizes a uniform margin t with every block shifted to
/// F_k(x) - t * block_scales[k] * I >= 0 and t <= cap; the base program is
/// feasible iff the optimal margin is positive.
struct FeasibilityOutcome {
  bool feasible = false;
  double margin = 0.0;
  SolverOutcome outcome;
};

FeasibilityOutcome max_margin_feasibility(ConicProgram prog,
                                          const std::vector<double>& block_scales,
                                          double cap, const SdpSolver& solver,
                                          const SolverSettings& settings);

}  // namespace netred
