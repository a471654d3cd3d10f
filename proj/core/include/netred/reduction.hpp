#pragma once

/*
  Quotient construction over a vertex clustering, the parameterized
  reduced-order model, and the null-space parameterization of admissible
  (balance-preserving) edge weights.
*/

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netred/balancing.hpp"
#include "netred/graph.hpp"

namespace netred {

/// Quotient graph data: incidence of the cluster graph, aggregated masses and
/// input/output maps. Column k of `incidence` is the quotient edge
/// edge_map[k] = (tail cluster, head cluster).
struct QuotientModel {
  Eigen::MatrixXd incidence;      // Bhat, r x mhat
  Eigen::MatrixXd incidence_pos;  // Bhat0
  std::vector<std::pair<int, int>> edge_map;
  Eigen::VectorXd masses;         // Mhat diagonal, length r
  Eigen::MatrixXd input_map;      // Fhat_b = Pi^T F_b, r x p
  Eigen::MatrixXd output_map;     // Hhat = H Pi, q x r

  int cluster_count() const { return static_cast<int>(masses.size()); }
  int edge_count() const { return static_cast<int>(incidence.cols()); }
};

/// Basis of ker(Bhat): w = lift * mu ranges over all balance-preserving
/// weight vectors. free_columns lists which weight coordinates act as the
/// free variables mu (in ascending order); pivot_columns are the dependent
/// ones, eliminated through the invertible block.
struct WeightParameterization {
  std::vector<int> pivot_columns;
  std::vector<int> free_columns;
  Eigen::MatrixXd lift;  // T, mhat x mbar, full column rank, Bhat * T = 0

  int free_count() const { return static_cast<int>(lift.cols()); }
  int edge_count() const { return static_cast<int>(lift.rows()); }
};

/// Reduced state-space model on the quotient graph for a fixed weight vector.
struct ReducedSystem {
  Eigen::MatrixXd laplacian;   // Lhat = Mhat^-1 Bhat0 Diag(w) Bhat^T
  Eigen::MatrixXd input_map;   // Fhat = Mhat^-1 Fhat_b
  Eigen::MatrixXd output_map;  // Hhat
  Eigen::VectorXd weights;
};

/// Builds the quotient model from the balanced incidence decomposition.
/// Parallel inter-cluster edges merge into a single quotient edge. Throws
/// ConnectivityError when the quotient graph is not strongly connected.
QuotientModel quotient(const IncidenceDecomposition& dec, const Clustering& c,
                       const BalancedRepresentation& rep, const Eigen::MatrixXd& output_map);

/// Null-space parameterization of an incidence matrix with rank r-1.
WeightParameterization parameterize(const Eigen::MatrixXd& quotient_incidence);
WeightParameterization parameterize(const QuotientModel& q);

Eigen::VectorXd weights_from_mu(const WeightParameterization& p, const Eigen::VectorXd& mu);

/// Left inverse of the lift; rejects weight vectors outside range(T).
Eigen::VectorXd mu_from_weights(const WeightParameterization& p, const Eigen::VectorXd& w,
                                double tol = 1e-8);

ReducedSystem reduced_system(const QuotientModel& q, const Eigen::VectorXd& w);

/// Clustering-projection initial weights: the (i,j) entry of Pi^T L_b Pi
/// gives (minus) the aggregate weight of quotient edge j -> i.
Eigen::VectorXd projection_initial_weights(const Eigen::MatrixXd& balanced_laplacian,
                                           const Clustering& c, const QuotientModel& q);

}  // namespace netred
