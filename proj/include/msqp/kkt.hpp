#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace msqp {

using SpMat = Eigen::SparseMatrix<double>;

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization detected a singular operator caused by a rank-deficient
/// constraint Jacobian (violated surjectivity of c'(0_x)).
class RankDeficientError : public SolverError {
 public:
  RankDeficientError() : SolverError("saddle-point operator is rank deficient") {}
};

/// Inertia shows the Hessian block is not positive definite on ker C;
/// the caller is expected to regularize and retry.
class IndefiniteOnKernelError : public SolverError {
 public:
  IndefiniteOnKernelError() : SolverError("Hessian indefinite on the constraint kernel") {}
};

class UnboundedRegularizationError : public SolverError {
 public:
  UnboundedRegularizationError() : SolverError("Hessian regularization did not terminate") {}
};

/// The 2x2 block system [H, C^T; C, 0] with right-hand sides r1 (size d)
/// and r2 (size m); solutions satisfy K (step, multiplier) + (r1, r2) = 0.
struct SaddlePointSystem {
  SpMat H;
  SpMat C;
  Eigen::VectorXd r1;
  Eigen::VectorXd r2;
};

struct KktSolution {
  Eigen::VectorXd step;
  Eigen::VectorXd multiplier;
  double residual_norm = 0.0;
};

struct Inertia {
  int n_pos = 0;
  int n_neg = 0;
  int n_zero = 0;
};

/// Direct factorization of a saddle-point operator. A bandwidth-reducing
/// ordering is chosen internally and the permuted matrix is factored in
/// banded form; results follow the dense semantics of the block system.
///
/// Instances own their workspace; concurrent solves on distinct
/// factorizations are safe.
class SaddleFactorization {
 public:
  SaddleFactorization(const SpMat& H, const SpMat& C);
  ~SaddleFactorization();
  SaddleFactorization(SaddleFactorization&&) noexcept;
  SaddleFactorization& operator=(SaddleFactorization&&) noexcept;

  int dim() const;    // d
  int codim() const;  // m

  /// True when the factorization met a (relatively) zero pivot.
  bool singular() const;

  /// Signed eigenvalue counts of the full operator, computed on demand.
  Inertia inertia() const;

  /// Inertia test for "H positive definite on ker C": exactly m negative
  /// and no zero eigenvalues.
  bool positive_on_kernel() const;

  /// Solve K z + (r1, r2) = 0. Throws RankDeficientError or
  /// IndefiniteOnKernelError if the operator is singular (classified by a
  /// rank check of C).
  KktSolution solve(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Solve the Lagrange-Newton system. Validates symmetry of H, requires the
/// factorization to be nonsingular with H positive definite on ker C.
KktSolution solve_saddle(const SaddlePointSystem& sys);

/// Minimal-norm solve of C w + c0 = 0 in the metric given by `metric`
/// (positive definite): returns w in the metric-orthogonal complement of
/// ker C.
Eigen::VectorXd normal_step(const SpMat& C, const SpMat& metric, const Eigen::VectorXd& c0);

/// Lagrange multiplier estimate: solves [metric, C^T; C, 0](v, p) + (f', 0) = 0.
/// Returns (v, p) with v the projected (negative) gradient.
std::pair<Eigen::VectorXd, Eigen::VectorXd> lagrange_multiplier(const SpMat& C,
                                                                const SpMat& metric,
                                                                const Eigen::VectorXd& fprime);

/// Tangential step: solves [H, C^T; C, 0](dt, dp) + (rhs, 0) = 0 with dt in
/// ker C. Throws IndefiniteOnKernelError if H is not positive definite on
/// ker C.
std::pair<Eigen::VectorXd, Eigen::VectorXd> tangential_step(const SpMat& H, const SpMat& C,
                                                            const Eigen::VectorXd& rhs);

/// Smallest lambda in {0, l0, 2*l0, 4*l0, ...}, l0 = 1e-8 (1 + max|H_ij|),
/// such that H + lambda I is positive definite on ker C (certified by
/// factorization inertia). Gives up after 60 doublings.
SpMat hessian_regularize(const SpMat& H, const SpMat& C);

}  // namespace msqp
