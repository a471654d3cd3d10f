#pragma once

/*
  H2 analysis of the reduction error: deflated error-system realization,
  stability tests, and H2 norms via Lyapunov equations. This is the oracle
  the edge-weighting optimizer is validated against.
*/

#include <Eigen/Dense>

#include "netred/balancing.hpp"
#include "netred/reduction.hpp"

namespace netred {

/// Deflation matrices S_n (n x (n-1), stacked -I over 1^T) and S_r, plus
/// their mass-weighted left inverses.
struct DeflationPair {
  Eigen::MatrixXd s_full;       // S_n
  Eigen::MatrixXd s_red;        // S_r
  Eigen::MatrixXd s_full_pinv;  // (S_n^T M^-1 S_n)^-1 S_n^T M^-1
  Eigen::MatrixXd s_red_pinv;
};

DeflationPair deflation(int n, int r, const Eigen::VectorXd& masses,
                        const Eigen::VectorXd& reduced_masses);

/// Deflated asymptotically stable realization of the error system, together
/// with the undeflated triple kept for frequency-domain cross-checks only
/// (the undeflated state matrix is not Hurwitz).
struct ErrorRealization {
  Eigen::MatrixXd a, b, c;  // deflated, a is (n+r-2) square and Hurwitz
  Eigen::MatrixXd a_full, b_full, c_full;
};

ErrorRealization error_realization(const BalancedRepresentation& rep,
                                   const Eigen::MatrixXd& output_map,
                                   const QuotientModel& q, const Eigen::VectorXd& w);

/// Solves A X + X A^T + rhs = 0 for symmetric rhs; A must be Hurwitz.
/// Throws SolverError (with the residual) when the solve is too inaccurate.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs);

/// sqrt(trace(C P C^T)) with A P + P A^T + B B^T = 0.
double h2_norm(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c);

/// Max real part of the spectrum below -1e-9 * ||A||.
bool is_hurwitz(const Eigen::MatrixXd& a);

/// True iff the Laplacian has a simple zero eigenvalue (within 1e-9) and
/// every other eigenvalue has strictly positive real part.
bool consensus_check(const Eigen::MatrixXd& reduced_laplacian);

}  // namespace netred
