#pragma once

// Shared test utilities: independent oracles kept deliberately separate from
// the library implementation paths they check.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace testsupport {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double urand(std::mt19937_64& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

// Laplacian by direct accumulation over the edge list (double loop oracle).
inline Eigen::MatrixXd laplacian_by_accumulation(
    int n, const std::vector<std::tuple<int, int, double>>& edges) {
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [tail, head, weight] : edges) {
    lap(head, head) += weight;
    lap(head, tail) -= weight;
  }
  return lap;
}

// Boolean transitive closure (Floyd-Warshall) reachability oracle.
inline bool strongly_connected_by_closure(int n,
                                          const std::vector<std::pair<int, int>>& arcs) {
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (int v = 0; v < n; ++v) reach[v][v] = 1;
  for (const auto& [u, v] : arcs) reach[u][v] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = 1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!reach[i][j]) return false;
  return true;
}

// Dense matrix exponential by scaling and squaring with a Taylor kernel;
// accurate enough at test scale and independent of any library solver.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  Eigen::MatrixXd scaled = a;
  while (norm > 0.5) {
    scaled *= 0.5;
    norm *= 0.5;
    ++squarings;
  }
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 24; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

// Adaptive Simpson quadrature of ||C exp(At) B||_F^2 over [0, horizon].
inline double impulse_energy_quadrature(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                        const Eigen::MatrixXd& c, double horizon,
                                        int levels = 14) {
  auto f = [&](double t) { return (c * expm(a * t) * b).squaredNorm(); };
  struct Seg {
    double lo, hi, flo, fmid, fhi, whole;
    int depth;
  };
  auto simpson = [&](double lo, double hi, double flo, double fmid, double fhi) {
    return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  };
  std::vector<Seg> stack;
  {
    const double mid = 0.5 * horizon;
    const double flo = f(0.0), fmid = f(mid), fhi = f(horizon);
    stack.push_back({0.0, horizon, flo, fmid, fhi, simpson(0.0, horizon, flo, fmid, fhi), 0});
  }
  double total = 0.0;
  while (!stack.empty()) {
    Seg s = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (s.lo + s.hi);
    const double lmid = 0.5 * (s.lo + mid), rmid = 0.5 * (mid + s.hi);
    const double flmid = f(lmid), frmid = f(rmid);
    const double left = simpson(s.lo, mid, s.flo, flmid, s.fmid);
    const double right = simpson(mid, s.hi, s.fmid, frmid, s.fhi);
    if (s.depth >= levels || std::abs(left + right - s.whole) < 1e-12 * (1.0 + std::abs(left + right))) {
      total += left + right;
    } else {
      stack.push_back({s.lo, mid, s.flo, flmid, s.fmid, left, s.depth + 1});
      stack.push_back({mid, s.hi, s.fmid, frmid, s.fhi, right, s.depth + 1});
    }
  }
  return total;
}

// Horizon long enough for the impulse response to die out.
inline double decay_horizon(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> eig(a, false);
  const double alpha = eig.eigenvalues().real().maxCoeff();
  return 40.0 / std::max(-alpha, 1e-3);
}

// Fixed-step RK4 for x' = A x + B u(t).
inline Eigen::VectorXd rk4_integrate(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                     const Eigen::VectorXd& x0, double dt, int steps,
                                     const std::function<Eigen::VectorXd(double)>& input) {
  Eigen::VectorXd x = x0;
  double t = 0.0;
  for (int i = 0; i < steps; ++i) {
    const Eigen::VectorXd k1 = a * x + b * input(t);
    const Eigen::VectorXd k2 = a * (x + 0.5 * dt * k1) + b * input(t + 0.5 * dt);
    const Eigen::VectorXd k3 = a * (x + 0.5 * dt * k2) + b * input(t + 0.5 * dt);
    const Eigen::VectorXd k4 = a * (x + dt * k3) + b * input(t + dt);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += dt;
  }
  return x;
}

// Random symmetric matrix with entries in [-1, 1].
inline Eigen::MatrixXd random_symmetric(std::mt19937_64& gen, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = urand(gen, -1.0, 1.0);
  return 0.5 * (m + m.transpose());
}

inline double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (sym + sym.transpose()),
                                                     Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

}  // namespace testsupport
