#pragma once

/*
  Balanced graph representation: a positive diagonal mass matrix M such that
  L_b = M L is the Laplacian of a balanced graph (row and column sums zero),
  together with the rescaled input map F_b = M F.
*/

#include <Eigen/Dense>

#include "netred/graph.hpp"

namespace netred {

struct BalancedRepresentation {
  Eigen::VectorXd masses;     // diagonal of M, strictly positive
  Eigen::MatrixXd laplacian;  // L_b = Diag(masses) * L, balanced
  Eigen::MatrixXd input_map;  // F_b = Diag(masses) * F
};

/// Positive left null vector of L (v^T L = 0), normalized so sum(v) = n.
/// Throws ConnectivityError when the left null space is not one-dimensional
/// and SolverError when the computed vector is not sign-definite.
Eigen::VectorXd left_perron_vector(const Eigen::MatrixXd& lap);

/// Balanced representation of a strongly connected network. Returns masses
/// equal to one (exactly) when the network is already balanced.
BalancedRepresentation balanced_representation(const DirectedNetwork& net);

}  // namespace netred
