#include "netred/balancing.hpp"

#include <cmath>

#include <Eigen/SVD>

namespace netred {

Eigen::VectorXd left_perron_vector(const Eigen::MatrixXd& lap) {
  const int n = static_cast<int>(lap.rows());
  if (lap.cols() != n || n < 1) {
    throw std::invalid_argument("Laplacian must be square");
  }
  if (n == 1) {
    return Eigen::VectorXd::Ones(1);
  }

  // Left null vector of L = kernel of L^T, via SVD for a reliable rank check.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(lap.transpose(),
                                        Eigen::ComputeFullV | Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double scale = sv(0);
  const double rank_tol = 1e-10 * std::max(scale, 1.0);
  if (sv(n - 1) > rank_tol || (n >= 2 && sv(n - 2) <= rank_tol)) {
    throw ConnectivityError(
        "left null space of the Laplacian is not one-dimensional; "
        "the network is not strongly connected");
  }
  Eigen::VectorXd v = svd.matrixV().col(n - 1);

  // Perron positivity: flip so the largest-magnitude entry is positive, then
  // require all entries are well away from zero.
  int imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0.0) v = -v;
  if (v.minCoeff() <= 1e-12 * v.maxCoeff()) {
    throw SolverError("computed left null vector is not sign-definite");
  }
  v *= static_cast<double>(n) / v.sum();
  return v;
}

BalancedRepresentation balanced_representation(const DirectedNetwork& net) {
  if (!is_strongly_connected(net)) {
    throw ConnectivityError("balancing requires a strongly connected network");
  }
  const int n = net.vertex_count();
  const Eigen::MatrixXd lap = laplacian(net);

  BalancedRepresentation rep;
  if (is_balanced(net)) {
    rep.masses = Eigen::VectorXd::Ones(n);
    rep.laplacian = lap;
    rep.input_map = net.input_map();
    return rep;
  }
  rep.masses = left_perron_vector(lap);
  rep.laplacian = rep.masses.asDiagonal() * lap;
  rep.input_map = rep.masses.asDiagonal() * net.input_map();
  return rep;
}

}  // namespace netred
