#include "netred/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace netred {

QuotientModel quotient(const IncidenceDecomposition& dec, const Clustering& c,
                       const BalancedRepresentation& rep,
                       const Eigen::MatrixXd& output_map) {
  const int n = static_cast<int>(dec.incidence.rows());
  const int m = static_cast<int>(dec.incidence.cols());
  if (c.vertex_count() != n || rep.masses.size() != n || output_map.cols() != n) {
    throw std::invalid_argument("quotient: inconsistent dimensions");
  }
  const int r = c.cluster_count();

  QuotientModel q;
  // Collapse Pi^T B: drop intra-cluster columns, merge duplicates, keeping
  // first-occurrence column order.
  std::map<std::pair<int, int>, int> seen;
  std::vector<std::pair<int, int>> pairs;
  for (int k = 0; k < m; ++k) {
    int head = -1, tail = -1;
    for (int v = 0; v < n; ++v) {
      if (dec.incidence(v, k) > 0.5) head = v;
      if (dec.incidence(v, k) < -0.5) tail = v;
    }
    const int ct = c.cluster_of(tail);
    const int ch = c.cluster_of(head);
    if (ct == ch) continue;
    if (seen.emplace(std::make_pair(ct, ch), static_cast<int>(pairs.size())).second) {
      pairs.emplace_back(ct, ch);
    }
  }
  const int mhat = static_cast<int>(pairs.size());
  q.incidence = Eigen::MatrixXd::Zero(r, mhat);
  q.incidence_pos = Eigen::MatrixXd::Zero(r, mhat);
  for (int k = 0; k < mhat; ++k) {
    q.incidence(pairs[static_cast<size_t>(k)].second, k) = 1.0;
    q.incidence(pairs[static_cast<size_t>(k)].first, k) = -1.0;
    q.incidence_pos(pairs[static_cast<size_t>(k)].second, k) = 1.0;
  }
  q.edge_map = std::move(pairs);

  if (!strongly_connected_arcs(r, q.edge_map)) {
    throw ConnectivityError("quotient graph is not strongly connected");
  }

  const Eigen::MatrixXd pi = characteristic_matrix(c);
  q.masses = pi.transpose() * rep.masses;
  q.input_map = pi.transpose() * rep.input_map;
  q.output_map = output_map * pi;
  return q;
}

WeightParameterization parameterize(const Eigen::MatrixXd& quotient_incidence) {
  const int r = static_cast<int>(quotient_incidence.rows());
  const int mhat = static_cast<int>(quotient_incidence.cols());
  const int rbar = r - 1;
  if (rbar < 0 || mhat < rbar) {
    throw std::invalid_argument("parameterize: incidence has too few columns");
  }

  // Rows of Bhat sum to zero, so dropping the last one keeps the row space.
  const Eigen::MatrixXd bbar = quotient_incidence.topRows(rbar);

  // Greedy pivot selection scanning right to left, so the earliest columns
  // stay free. Rank growth is tested via the smallest singular value of the
  // accumulated pivot block.
  WeightParameterization p;
  std::vector<char> is_pivot(static_cast<size_t>(mhat), 0);
  Eigen::MatrixXd basis(rbar, rbar);
  int count = 0;
  for (int k = mhat - 1; k >= 0 && count < rbar; --k) {
    basis.col(count) = bbar.col(k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis.leftCols(count + 1));
    const double smin = svd.singularValues()(count);
    if (smin > 1e-10 * std::max(1.0, svd.singularValues()(0))) {
      is_pivot[static_cast<size_t>(k)] = 1;
      ++count;
    }
  }
  if (count != rbar) {
    throw ConnectivityError(
        "quotient incidence is rank deficient; expected rank r - 1");
  }
  for (int k = 0; k < mhat; ++k) {
    (is_pivot[static_cast<size_t>(k)] ? p.pivot_columns : p.free_columns).push_back(k);
  }
  const int mbar = mhat - rbar;

  Eigen::MatrixXd ba(rbar, rbar), bb(rbar, mbar);
  for (int j = 0; j < rbar; ++j) ba.col(j) = bbar.col(p.pivot_columns[static_cast<size_t>(j)]);
  for (int j = 0; j < mbar; ++j) bb.col(j) = bbar.col(p.free_columns[static_cast<size_t>(j)]);

  const Eigen::MatrixXd dependent = -ba.partialPivLu().solve(bb);  // rbar x mbar
  p.lift = Eigen::MatrixXd::Zero(mhat, mbar);
  for (int j = 0; j < rbar; ++j) p.lift.row(p.pivot_columns[static_cast<size_t>(j)]) = dependent.row(j);
  for (int j = 0; j < mbar; ++j) p.lift(p.free_columns[static_cast<size_t>(j)], j) = 1.0;
  return p;
}

WeightParameterization parameterize(const QuotientModel& q) {
  return parameterize(q.incidence);
}

Eigen::VectorXd weights_from_mu(const WeightParameterization& p, const Eigen::VectorXd& mu) {
  if (mu.size() != p.free_count()) {
    throw std::invalid_argument("weights_from_mu: wrong mu dimension");
  }
  return p.lift * mu;
}

Eigen::VectorXd mu_from_weights(const WeightParameterization& p, const Eigen::VectorXd& w,
                                double tol) {
  if (w.size() != p.edge_count()) {
    throw std::invalid_argument("mu_from_weights: wrong weight dimension");
  }
  // Free coordinates read off directly; then verify w really lies in range(T).
  Eigen::VectorXd mu(p.free_count());
  for (int j = 0; j < p.free_count(); ++j) mu(j) = w(p.free_columns[static_cast<size_t>(j)]);
  const double residual = (p.lift * mu - w).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  if (residual > tol * scale) {
    throw AdmissibilityError("weights are not balance-consistent; residual " +
                             std::to_string(residual));
  }
  return mu;
}

ReducedSystem reduced_system(const QuotientModel& q, const Eigen::VectorXd& w) {
  if (w.size() != q.edge_count()) {
    throw std::invalid_argument("reduced_system: wrong weight dimension");
  }
  if (w.size() > 0 && w.minCoeff() <= 0.0) {
    throw AdmissibilityError("reduced weights must be strictly positive");
  }
  ReducedSystem sys;
  const Eigen::VectorXd inv_masses = q.masses.cwiseInverse();
  sys.laplacian = inv_masses.asDiagonal() *
                  (q.incidence_pos * w.asDiagonal() * q.incidence.transpose());
  sys.input_map = inv_masses.asDiagonal() * q.input_map;
  sys.output_map = q.output_map;
  sys.weights = w;
  return sys;
}

Eigen::VectorXd projection_initial_weights(const Eigen::MatrixXd& balanced_laplacian,
                                           const Clustering& c, const QuotientModel& q) {
  const Eigen::MatrixXd pi = characteristic_matrix(c);
  const Eigen::MatrixXd reduced = pi.transpose() * balanced_laplacian * pi;
  Eigen::VectorXd w(q.edge_count());
  for (int k = 0; k < q.edge_count(); ++k) {
    const auto& [tail, head] = q.edge_map[static_cast<size_t>(k)];
    w(k) = -reduced(head, tail);
    if (!(w(k) > 0.0)) {
      throw SolverError("projection produced a nonpositive weight for quotient edge " +
                        std::to_string(tail) + "->" + std::to_string(head));
    }
  }
  return w;
}

}  // namespace netred
