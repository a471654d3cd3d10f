#include "netred/h2.hpp"

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Eigenvalues>

#include "netred/errors.hpp"

namespace netred {

namespace {

Eigen::MatrixXd deflation_basis(int n) {
  Eigen::MatrixXd s(n, n - 1);
  s.topRows(n - 1) = -Eigen::MatrixXd::Identity(n - 1, n - 1);
  s.bottomRows(1) = Eigen::RowVectorXd::Ones(n - 1);
  return s;
}

Eigen::MatrixXd weighted_left_inverse(const Eigen::MatrixXd& s, const Eigen::VectorXd& masses) {
  const Eigen::VectorXd inv = masses.cwiseInverse();
  const Eigen::MatrixXd stm = s.transpose() * inv.asDiagonal();  // S^T M^-1
  return (stm * s).ldlt().solve(stm);
}

}  // namespace

DeflationPair deflation(int n, int r, const Eigen::VectorXd& masses,
                        const Eigen::VectorXd& reduced_masses) {
  if (n < 1 || r < 1 || masses.size() != n || reduced_masses.size() != r) {
    throw std::invalid_argument("deflation: inconsistent dimensions");
  }
  if (masses.minCoeff() <= 0.0 || reduced_masses.minCoeff() <= 0.0) {
    throw std::invalid_argument("deflation: masses must be positive");
  }
  DeflationPair d;
  d.s_full = deflation_basis(n);
  d.s_red = r > 1 ? deflation_basis(r) : Eigen::MatrixXd(1, 0);
  d.s_full_pinv = weighted_left_inverse(d.s_full, masses);
  d.s_red_pinv = r > 1 ? weighted_left_inverse(d.s_red, reduced_masses)
                       : Eigen::MatrixXd(0, 1);
  return d;
}

ErrorRealization error_realization(const BalancedRepresentation& rep,
                                   const Eigen::MatrixXd& output_map,
                                   const QuotientModel& q, const Eigen::VectorXd& w) {
  const int n = static_cast<int>(rep.masses.size());
  const int r = q.cluster_count();
  if (w.size() != q.edge_count()) {
    throw std::invalid_argument("error_realization: wrong weight dimension");
  }
  if (w.size() > 0) {
    if (w.minCoeff() <= 0.0) {
      throw AdmissibilityError("weights must be strictly positive");
    }
    const double balance = (q.incidence * w).cwiseAbs().maxCoeff();
    if (balance > 1e-8 * w.cwiseAbs().maxCoeff()) {
      throw AdmissibilityError("weights do not keep the quotient balanced; |Bhat w| = " +
                               std::to_string(balance));
    }
  }

  const DeflationPair defl = deflation(n, r, rep.masses, q.masses);
  const Eigen::VectorXd inv_m = rep.masses.cwiseInverse();
  const Eigen::VectorXd inv_mhat = q.masses.cwiseInverse();
  const Eigen::MatrixXd lhat_b = q.incidence_pos * w.asDiagonal() * q.incidence.transpose();

  ErrorRealization e;
  const int d = (n - 1) + (r - 1);
  e.a = Eigen::MatrixXd::Zero(d, d);
  e.a.topLeftCorner(n - 1, n - 1) =
      -defl.s_full_pinv * rep.laplacian * inv_m.asDiagonal() * defl.s_full;
  if (r > 1) {
    e.a.bottomRightCorner(r - 1, r - 1) =
        -defl.s_red_pinv * lhat_b * inv_mhat.asDiagonal() * defl.s_red;
  }
  const int p = static_cast<int>(rep.input_map.cols());
  const int q_out = static_cast<int>(output_map.rows());
  e.b = Eigen::MatrixXd::Zero(d, p);
  e.b.topRows(n - 1) = defl.s_full_pinv * rep.input_map;
  if (r > 1) e.b.bottomRows(r - 1) = defl.s_red_pinv * q.input_map;
  e.c = Eigen::MatrixXd::Zero(q_out, d);
  e.c.leftCols(n - 1) = output_map * inv_m.asDiagonal() * defl.s_full;
  if (r > 1) e.c.rightCols(r - 1) = -q.output_map * inv_mhat.asDiagonal() * defl.s_red;

  if (!is_hurwitz(e.a)) {
    throw AdmissibilityError("deflated error system is not Hurwitz; admissibility broken");
  }

  // Undeflated realization, for cross-checks away from s = 0.
  const Eigen::MatrixXd lap_full = inv_m.asDiagonal() * rep.laplacian;
  const Eigen::MatrixXd lhat = inv_mhat.asDiagonal() * lhat_b;
  e.a_full = Eigen::MatrixXd::Zero(n + r, n + r);
  e.a_full.topLeftCorner(n, n) = -lap_full;
  e.a_full.bottomRightCorner(r, r) = -lhat;
  e.b_full = Eigen::MatrixXd::Zero(n + r, p);
  e.b_full.topRows(n) = inv_m.asDiagonal() * rep.input_map;
  e.b_full.bottomRows(r) = inv_mhat.asDiagonal() * q.input_map;
  e.c_full = Eigen::MatrixXd::Zero(q_out, n + r);
  e.c_full.leftCols(n) = output_map;
  e.c_full.rightCols(r) = -q.output_map;
  return e;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || rhs.rows() != n || rhs.cols() != n) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }

  // Bartels-Stewart on the complex Schur form: with A = U T U^H the equation
  // becomes T Y + Y T^H = -U^H rhs U, solved column by column.
  using CMat = Eigen::MatrixXcd;
  Eigen::ComplexSchur<CMat> schur(a.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success) {
    throw SolverError("Schur decomposition failed in Lyapunov solve");
  }
  const CMat& t = schur.matrixT();
  const CMat& u = schur.matrixU();

  auto triangular_solve = [&](const CMat& c) {
    CMat y = CMat::Zero(n, n);
    CMat shifted(n, n);
    for (int k = n - 1; k >= 0; --k) {
      Eigen::VectorXcd col = c.col(k);
      for (int j = k + 1; j < n; ++j) col -= std::conj(t(k, j)) * y.col(j);
      shifted = t;
      shifted.diagonal().array() += std::conj(t(k, k));
      y.col(k) = shifted.triangularView<Eigen::Upper>().solve(col);
    }
    return y;
  };

  auto solve_once = [&](const Eigen::MatrixXd& q) {
    const CMat c = -(u.adjoint() * q.cast<std::complex<double>>() * u);
    const CMat y = triangular_solve(c);
    Eigen::MatrixXd x = (u * y * u.adjoint()).real();
    return Eigen::MatrixXd(0.5 * (x + x.transpose()));
  };

  Eigen::MatrixXd x = solve_once(rhs);
  const double rhs_norm = std::max(rhs.norm(), 1e-300);
  Eigen::MatrixXd residual = a * x + x * a.transpose() + rhs;
  if (residual.norm() > 1e-13 * rhs_norm) {
    x += solve_once(residual);
    residual = a * x + x * a.transpose() + rhs;
  }
  if (residual.norm() > 1e-10 * rhs_norm) {
    throw SolverError("Lyapunov solve too inaccurate; relative residual " +
                      std::to_string(residual.norm() / rhs_norm));
  }
  return x;
}

double h2_norm(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c) {
  if (a.rows() == 0) return 0.0;
  if (!is_hurwitz(a)) {
    throw std::invalid_argument("h2_norm: state matrix is not Hurwitz");
  }
  const Eigen::MatrixXd gram = solve_lyapunov(a, b * b.transpose());
  const double value = (c * gram * c.transpose()).trace();
  // Tiny negative traces are roundoff from an exactly-zero norm.
  return std::sqrt(std::max(value, 0.0));
}

bool is_hurwitz(const Eigen::MatrixXd& a) {
  if (a.rows() == 0) return true;
  Eigen::EigenSolver<Eigen::MatrixXd> eig(a, false);
  const double bound = -1e-9 * a.norm();
  return eig.eigenvalues().real().maxCoeff() < bound;
}

bool consensus_check(const Eigen::MatrixXd& reduced_laplacian) {
  const int r = static_cast<int>(reduced_laplacian.rows());
  if (r == 0) return false;
  Eigen::EigenSolver<Eigen::MatrixXd> eig(reduced_laplacian, false);
  int zeros = 0;
  bool rest_stable = true;
  for (int i = 0; i < r; ++i) {
    const std::complex<double> lambda = eig.eigenvalues()(i);
    if (std::abs(lambda) <= 1e-9) {
      ++zeros;
    } else if (lambda.real() <= 0.0) {
      rest_stable = false;
    }
  }
  return zeros == 1 && rest_stable;
}

}  // namespace netred
