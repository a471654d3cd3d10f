#include "netred/conic.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "netred/errors.hpp"

namespace netred {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

void MatrixBlock::add_term(int var, const Eigen::MatrixXd& coeff) {
  if (coeff.rows() != dim || coeff.cols() != dim) {
    throw std::invalid_argument("block term has wrong dimension");
  }
  terms.emplace_back(var, 0.5 * (coeff + coeff.transpose()));
}

int ConicProgram::add_variable(double cost) {
  objective.push_back(cost);
  return static_cast<int>(objective.size()) - 1;
}

int ConicProgram::add_variables(int count) {
  const int first = num_vars();
  objective.insert(objective.end(), static_cast<size_t>(count), 0.0);
  return first;
}

MatrixBlock& ConicProgram::add_block(int dim) {
  if (dim < 1) throw std::invalid_argument("block dimension must be positive");
  MatrixBlock blk;
  blk.dim = dim;
  blk.constant = Eigen::MatrixXd::Zero(dim, dim);
  blocks.push_back(std::move(blk));
  return blocks.back();
}

int sym_size(int dim) { return dim * (dim + 1) / 2; }

int sym_index(int i, int j, int dim) {
  if (i > j) std::swap(i, j);
  return i * dim - i * (i - 1) / 2 + (j - i);
}

Eigen::MatrixXd sym_basis(int i, int j, int dim) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(dim, dim);
  e(i, j) = 1.0;
  e(j, i) = 1.0;
  return e;
}

Eigen::MatrixXd sym_value(const Eigen::VectorXd& x, int offset, int dim) {
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      m(i, j) = m(j, i) = x(offset + sym_index(i, j, dim));
    }
  }
  return m;
}

namespace {

// All solver internals run in extended precision: the transformed-LMI
// programs this library produces carry certificates with large dynamic range,
// and the extra mantissa bits push the attainable complementarity gap well
// below what the iterative edge weighting needs to resolve its small steps.
using Real = long double;
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Real max_abs(const Mat& m) {
  return m.size() == 0 ? Real(0) : m.cwiseAbs().maxCoeff();
}

// Largest alpha with lambda + alpha * delta >= 0 (scaled-space step length).
Real step_to_boundary(const Vec& lambda, const Mat& delta) {
  const Vec scale = lambda.cwiseSqrt().cwiseInverse();
  const Mat t = scale.asDiagonal() * delta * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> eig(Mat(0.5 * (t + t.transpose())),
                                         Eigen::EigenvaluesOnly);
  const Real emin = eig.eigenvalues()(0);
  if (emin >= Real(0)) return std::numeric_limits<Real>::infinity();
  return Real(-1) / emin;
}

// Per-block state of the interior-point iteration.
struct BlockState {
  int dim = 0;
  Mat f0;
  std::vector<std::pair<int, Mat>> terms;

  Mat slack;  // S
  Mat dual;   // Z

  // NT scaling for the current iterate.
  Mat r, rinv, y;  // y = rinv^T rinv = W^{-1}
  Vec lambda;
  std::vector<Mat> scaled_terms;  // y * Fi * y, aligned with terms

  Mat affine(const Vec& x) const {
    Mat m = f0;
    for (const auto& [var, coeff] : terms) m += x(var) * coeff;
    return m;
  }
};

struct Direction {
  Vec dx;
  std::vector<Mat> ds, dz;
  std::vector<Mat> ds_scaled, dz_scaled;
};

class Ipm {
 public:
  Ipm(const ConicProgram& prog, const SolverSettings& settings)
      : settings_(settings), num_vars_(prog.num_vars()) {
    cone_dim_ = 0;
    for (const MatrixBlock& blk : prog.blocks) {
      BlockState b;
      b.dim = blk.dim;
      b.f0 = blk.constant.cast<Real>();
      b.f0 = 0.5 * (b.f0 + b.f0.transpose()).eval();
      Real norm = max_abs(b.f0);
      for (const auto& [var, coeff] : blk.terms) {
        if (var < 0 || var >= num_vars_) {
          throw std::invalid_argument("block term references unknown variable");
        }
        b.terms.emplace_back(var, coeff.cast<Real>());
        norm = std::max(norm, max_abs(b.terms.back().second));
      }
      const Real data_norm = std::max(norm, Real(1e-10));
      b.f0 /= data_norm;
      for (auto& [var, coeff] : b.terms) coeff /= data_norm;
      cone_dim_ += b.dim;
      blocks_.push_back(std::move(b));
    }
    cost_ = Eigen::Map<const VectorXd>(prog.objective.data(), num_vars_).cast<Real>();
    cost_scale_ = std::max(Real(1), cost_.size() ? cost_.cwiseAbs().maxCoeff() : Real(0));
    cost_ /= cost_scale_;
  }

  SolverOutcome run() {
    SolverOutcome out;
    if (blocks_.empty()) {
      out.status = SolveStatus::optimal;
      out.primal = VectorXd::Zero(num_vars_);
      out.objective = 0.0;
      return out;
    }
    if (num_vars_ == 0) return constant_case();

    Vec x = Vec::Zero(num_vars_);
    for (BlockState& b : blocks_) {
      const Real shift = std::max(Real(1), Real(2) * max_abs(b.f0));
      b.slack = shift * Mat::Identity(b.dim, b.dim);
      b.dual = Mat::Identity(b.dim, b.dim);
    }

    std::string stop_reason = "iteration limit";
    Vec best_x;
    Real best_score = std::numeric_limits<Real>::infinity();
    Real best_pobj = 0.0;
    int no_progress = 0;
    int tiny_steps = 0;

    for (int iter = 0; iter < settings_.max_iter; ++iter) {
      // Residuals and optimality measures, normalized by iterate scale so a
      // large well-conditioned dual does not read as a large residual.
      std::vector<Mat> rp(blocks_.size());
      Real pres = 0.0, pnorm = 1.0;
      for (size_t k = 0; k < blocks_.size(); ++k) {
        rp[k] = blocks_[k].affine(x) - blocks_[k].slack;
        pres = std::max(pres, rp[k].norm());
        pnorm = std::max({pnorm, blocks_[k].f0.norm(), blocks_[k].slack.norm()});
      }
      pres /= pnorm;

      Vec az = Vec::Zero(num_vars_);
      for (const BlockState& b : blocks_) {
        for (const auto& [var, coeff] : b.terms) {
          az(var) += (coeff.array() * b.dual.array()).sum();
        }
      }
      const Vec rd = cost_ - az;
      const Real dnorm = std::max(
          {Real(1), cost_.cwiseAbs().maxCoeff(), az.cwiseAbs().maxCoeff()});
      const Real dres = rd.cwiseAbs().maxCoeff() / dnorm;

      Real gap = 0.0, dobj = 0.0;
      for (const BlockState& b : blocks_) {
        gap += (b.slack.array() * b.dual.array()).sum();
        dobj -= (b.f0.array() * b.dual.array()).sum();
      }
      const Real pobj = cost_.dot(x);
      const Real relgap =
          gap / std::max({Real(1), Real(std::abs(double(pobj))), Real(std::abs(double(dobj)))});

      if (settings_.verbose) {
        std::fprintf(stderr, "ipm %3d pobj % .6Le dobj % .6Le gap %.2Le pres %.2Le dres %.2Le\n",
                     iter, pobj, dobj, gap, pres, dres);
      }
      const Real score = std::max(
          {pres / Real(settings_.accept_feas_factor * settings_.feas_tol),
           dres / Real(settings_.accept_feas_factor * settings_.feas_tol),
           relgap / Real(settings_.accept_gap_factor * settings_.gap_tol)});
      if (score < Real(0.99) * best_score) {
        best_score = score;
        best_x = x;
        best_pobj = pobj;
        no_progress = 0;
      } else {
        ++no_progress;
      }
      if (pres <= Real(settings_.feas_tol) && dres <= Real(settings_.feas_tol) &&
          relgap <= Real(settings_.gap_tol)) {
        out.status = SolveStatus::optimal;
        out.primal = x.cast<double>();
        out.objective = static_cast<double>(pobj * cost_scale_);
        out.diagnostics = "iterations " + std::to_string(iter) + ", gap " +
                          std::to_string(static_cast<double>(relgap));
        return out;
      }
      if (infeasibility_certificate()) {
        out.status = SolveStatus::infeasible;
        out.diagnostics = "dual improving ray found at iteration " + std::to_string(iter);
        return out;
      }
      if (!std::isfinite(static_cast<double>(pobj)) ||
          x.cwiseAbs().maxCoeff() > Real(1e14)) {
        stop_reason = "iterates diverged";
        break;
      }
      if (no_progress >= 15) {
        stop_reason = "progress stalled";
        break;
      }

      if (!compute_scalings()) {
        stop_reason = "NT scaling failed (iterate lost definiteness)";
        break;
      }
      if (!factor_schur()) {
        stop_reason = "Schur complement factorization failed";
        break;
      }

      const Real mu = gap / cone_dim_;

      // Predictor.
      auto neg_lambda_sq = [&](size_t k) {
        Mat m = Mat::Zero(blocks_[k].dim, blocks_[k].dim);
        m.diagonal() = -blocks_[k].lambda.array().square();
        return m;
      };
      std::vector<Mat> target(blocks_.size());
      for (size_t k = 0; k < blocks_.size(); ++k) target[k] = neg_lambda_sq(k);
      Direction aff = solve_direction(rp, rd, target);
      Real ap = 1.0, ad = 1.0;
      step_lengths(aff, ap, ad);
      const Real a_aff = std::min(Real(1), std::min(ap, ad));

      Real gap_aff = 0.0;
      for (size_t k = 0; k < blocks_.size(); ++k) {
        const Mat ls = Mat(blocks_[k].lambda.asDiagonal()) + a_aff * aff.ds_scaled[k];
        const Mat lz = Mat(blocks_[k].lambda.asDiagonal()) + a_aff * aff.dz_scaled[k];
        gap_aff += (ls.array() * lz.array()).sum();
      }
      Real sigma = std::pow(std::max(gap_aff, Real(0)) / gap, Real(3));
      sigma = std::clamp(sigma, Real(1e-10), Real(1) - Real(1e-10));

      // Corrector.
      for (size_t k = 0; k < blocks_.size(); ++k) {
        const Mat cross = 0.5 * (aff.ds_scaled[k] * aff.dz_scaled[k] +
                                 aff.dz_scaled[k] * aff.ds_scaled[k]);
        target[k] = neg_lambda_sq(k) - cross +
                    sigma * mu * Mat::Identity(blocks_[k].dim, blocks_[k].dim);
      }
      Direction dir = solve_direction(rp, rd, target);
      step_lengths(dir, ap, ad);
      const Real eta = 0.99;
      ap = ad = std::min(Real(1), eta * std::min(ap, ad));

      if (settings_.verbose) {
        std::fprintf(stderr, "        sigma %.3Le ap %.3Le ad %.3Le xmax %.2Le\n", sigma,
                     ap, ad, x.cwiseAbs().maxCoeff());
      }
      tiny_steps = std::min(ap, ad) < Real(1e-8) ? tiny_steps + 1 : 0;
      if (tiny_steps >= 2) {
        stop_reason = "step lengths collapsed";
        break;
      }

      // Commit the step, backtracking if roundoff pushed an iterate off the
      // cone despite the fraction-to-boundary rule.
      bool committed = false;
      for (int attempt = 0; attempt < 6 && !committed; ++attempt) {
        committed = true;
        for (size_t k = 0; k < blocks_.size() && committed; ++k) {
          Mat s_new = blocks_[k].slack + ap * dir.ds[k];
          Mat z_new = blocks_[k].dual + ad * dir.dz[k];
          s_new = 0.5 * (s_new + s_new.transpose()).eval();
          z_new = 0.5 * (z_new + z_new.transpose()).eval();
          if (Eigen::LLT<Mat>(s_new).info() != Eigen::Success ||
              Eigen::LLT<Mat>(z_new).info() != Eigen::Success) {
            committed = false;
          }
        }
        if (!committed) {
          ap *= 0.5;
          ad *= 0.5;
        }
      }
      if (!committed) {
        stop_reason = "step rejected (iterate would leave the cone)";
        break;
      }
      x += ap * dir.dx;
      for (size_t k = 0; k < blocks_.size(); ++k) {
        blocks_[k].slack += ap * dir.ds[k];
        blocks_[k].dual += ad * dir.dz[k];
        blocks_[k].slack = 0.5 * (blocks_[k].slack + blocks_[k].slack.transpose()).eval();
        blocks_[k].dual = 0.5 * (blocks_[k].dual + blocks_[k].dual.transpose()).eval();
      }
    }

    // Accept the best iterate when it sits within the configured factors of
    // the requested tolerances; the path often flattens there on degenerate
    // problems while the solution itself is fine.
    if (best_score <= Real(1) && best_x.size() == num_vars_) {
      out.status = SolveStatus::optimal;
      out.primal = best_x.cast<double>();
      out.objective = static_cast<double>(best_pobj * cost_scale_);
      out.diagnostics = "loose convergence (" + stop_reason + "), tolerance score " +
                        std::to_string(static_cast<double>(best_score));
      return out;
    }
    out.status = SolveStatus::numerical_failure;
    out.diagnostics = stop_reason + "; best tolerance score " +
                      std::to_string(static_cast<double>(best_score));
    return out;
  }

 private:
  SolverOutcome constant_case() const {
    SolverOutcome out;
    for (const BlockState& b : blocks_) {
      Eigen::SelfAdjointEigenSolver<Mat> eig(b.f0, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues()(0) < -Real(settings_.feas_tol)) {
        out.status = SolveStatus::infeasible;
        out.diagnostics = "constant block not PSD";
        return out;
      }
    }
    out.status = SolveStatus::optimal;
    out.primal = VectorXd::Zero(0);
    out.objective = 0.0;
    return out;
  }

  bool infeasibility_certificate() const {
    // Farkas direction: Z >= 0 with <Fi, Z> ~ 0 for all i and <F0, Z> < 0.
    Real znorm = 0.0;
    for (const BlockState& b : blocks_) znorm += b.dual.squaredNorm();
    znorm = std::sqrt(znorm);
    if (znorm < Real(1e2)) return false;
    Real f0z = 0.0;
    Vec atz = Vec::Zero(num_vars_);
    for (const BlockState& b : blocks_) {
      f0z += (b.f0.array() * b.dual.array()).sum();
      for (const auto& [var, coeff] : b.terms) {
        atz(var) += (coeff.array() * b.dual.array()).sum();
      }
    }
    return f0z / znorm < Real(-1e-8) &&
           (atz.size() == 0 || atz.cwiseAbs().maxCoeff() / znorm < Real(1e-9));
  }

  bool compute_scalings() {
    for (BlockState& b : blocks_) {
      Eigen::LLT<Mat> ls(b.slack);
      Eigen::LLT<Mat> lz(b.dual);
      if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
      const Mat lsm = ls.matrixL();
      const Mat lzm = lz.matrixL();
      Eigen::JacobiSVD<Mat> svd(Mat(lzm.transpose() * lsm),
                                Eigen::ComputeFullU | Eigen::ComputeFullV);
      b.lambda = svd.singularValues();
      if (b.lambda(b.dim - 1) <= Real(0)) return false;
      const Vec inv_sqrt = b.lambda.cwiseSqrt().cwiseInverse();
      b.r = lsm * svd.matrixV() * inv_sqrt.asDiagonal();
      b.rinv = inv_sqrt.asDiagonal() * svd.matrixU().transpose() * lzm.transpose();
      b.y = b.rinv.transpose() * b.rinv;
    }
    return true;
  }

  bool factor_schur() {
    Mat m = Mat::Zero(num_vars_, num_vars_);
    for (BlockState& b : blocks_) {
      b.scaled_terms.clear();
      b.scaled_terms.reserve(b.terms.size());
      for (const auto& [var, coeff] : b.terms) b.scaled_terms.push_back(b.y * coeff * b.y);
      for (size_t a = 0; a < b.terms.size(); ++a) {
        for (size_t c = a; c < b.terms.size(); ++c) {
          const Real v = (b.terms[a].second.array() * b.scaled_terms[c].array()).sum();
          const int ia = b.terms[a].first, ic = b.terms[c].first;
          m(ia, ic) += v;
          if (ia != ic) m(ic, ia) += v;
        }
      }
    }
    jacobi_ = m.diagonal().cwiseMax(Real(1e-300)).cwiseSqrt().cwiseInverse();
    schur_ = jacobi_.asDiagonal() * m * jacobi_.asDiagonal();
    Real bump = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Mat regularized = schur_;
      regularized.diagonal().array() += bump;
      llt_.compute(regularized);
      if (llt_.info() == Eigen::Success) {
        schur_ = regularized;
        return true;
      }
      bump = bump == Real(0) ? Real(1e-19) : bump * Real(100);
    }
    return false;
  }

  Vec solve_schur(const Vec& rhs) const {
    const Vec scaled = jacobi_.asDiagonal() * rhs;
    Vec y = llt_.solve(scaled);
    y += llt_.solve(scaled - schur_ * y);  // one refinement step
    return jacobi_.asDiagonal() * y;
  }

  Direction solve_direction(const std::vector<Mat>& rp, const Vec& rd,
                            const std::vector<Mat>& target) const {
    const size_t nblk = blocks_.size();
    std::vector<Mat> g(nblk), rhs_mat(nblk);
    Vec rhs = -rd;
    for (size_t k = 0; k < nblk; ++k) {
      const BlockState& b = blocks_[k];
      // g = lambda-circ-inverse of the target.
      g[k].resize(b.dim, b.dim);
      for (int i = 0; i < b.dim; ++i) {
        for (int j = 0; j < b.dim; ++j) {
          g[k](i, j) = Real(2) * target[k](i, j) / (b.lambda(i) + b.lambda(j));
        }
      }
      rhs_mat[k] = b.rinv.transpose() * g[k] * b.rinv - b.y * rp[k] * b.y;
      for (const auto& [var, coeff] : b.terms) {
        rhs(var) += (coeff.array() * rhs_mat[k].array()).sum();
      }
    }

    Direction dir;
    dir.dx = solve_schur(rhs);
    dir.ds.resize(nblk);
    dir.dz.resize(nblk);
    dir.ds_scaled.resize(nblk);
    dir.dz_scaled.resize(nblk);
    for (size_t k = 0; k < nblk; ++k) {
      const BlockState& b = blocks_[k];
      Mat ds = rp[k];
      for (const auto& [var, coeff] : b.terms) ds += dir.dx(var) * coeff;
      Mat dz = rhs_mat[k];
      for (size_t idx = 0; idx < b.terms.size(); ++idx) {
        dz -= dir.dx(b.terms[idx].first) * b.scaled_terms[idx];
      }
      dir.ds[k] = 0.5 * (ds + ds.transpose());
      dir.dz[k] = 0.5 * (dz + dz.transpose());
      Mat dss = b.rinv * dir.ds[k] * b.rinv.transpose();
      Mat dzs = b.r.transpose() * dir.dz[k] * b.r;
      dir.ds_scaled[k] = 0.5 * (dss + dss.transpose());
      dir.dz_scaled[k] = 0.5 * (dzs + dzs.transpose());
    }
    return dir;
  }

  void step_lengths(const Direction& dir, Real& ap, Real& ad) const {
    ap = ad = std::numeric_limits<Real>::infinity();
    for (size_t k = 0; k < blocks_.size(); ++k) {
      ap = std::min(ap, step_to_boundary(blocks_[k].lambda, dir.ds_scaled[k]));
      ad = std::min(ad, step_to_boundary(blocks_[k].lambda, dir.dz_scaled[k]));
    }
    ap = std::min(ap, Real(1e8));
    ad = std::min(ad, Real(1e8));
  }

  SolverSettings settings_;
  int num_vars_ = 0;
  int cone_dim_ = 0;
  std::vector<BlockState> blocks_;
  Vec cost_;
  Real cost_scale_ = 1.0;

  Vec jacobi_;
  Mat schur_;
  Eigen::LLT<Mat> llt_;
};

}  // namespace

SolverOutcome InteriorPointSolver::solve(const ConicProgram& prog,
                                         const SolverSettings& settings) const {
  Ipm ipm(prog, settings);
  return ipm.run();
}

const SdpSolver& default_solver() {
  static const InteriorPointSolver solver;
  return solver;
}

FeasibilityOutcome max_margin_feasibility(ConicProgram prog,
                                          const std::vector<double>& block_scales,
                                          double cap, const SdpSolver& solver,
                                          const SolverSettings& settings) {
  if (block_scales.size() != prog.blocks.size()) {
    throw std::invalid_argument("max_margin_feasibility: one scale per block required");
  }
  const int t = prog.add_variable(-1.0);  // maximize the margin
  for (size_t k = 0; k < block_scales.size(); ++k) {
    if (!(block_scales[k] > 0.0)) {
      throw std::invalid_argument("margin scales must be positive");
    }
    MatrixBlock& blk = prog.blocks[k];
    blk.add_term(t, -block_scales[k] *
                        Eigen::MatrixXd::Identity(blk.dim, blk.dim));
  }
  MatrixBlock& cap_block = prog.add_block(1);
  cap_block.constant(0, 0) = cap;
  cap_block.add_term(t, -Eigen::MatrixXd::Identity(1, 1));

  FeasibilityOutcome fo;
  fo.outcome = solver.solve(prog, settings);
  if (fo.outcome.status == SolveStatus::optimal) {
    fo.margin = fo.outcome.primal(t);
    fo.feasible = fo.margin > 0.0;
  }
  return fo;
}

}  // namespace netred
