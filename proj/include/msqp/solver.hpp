#pragma once

#include "msqp/models.hpp"
#include "msqp/oracle.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace msqp {

/// A full SQP step left the domain of the update retraction (Algorithm 1
/// terminates with "update not defined").
class UpdateNotDefinedError : public SolverError {
 public:
  UpdateNotDefinedError() : SolverError("update not defined: step outside retraction domain") {}
};

/// One row per computed trial correction, accepted or not.
struct IterationRecord {
  int iter = 0;
  double nu = 1.0;
  double tau = 1.0;
  double norm_dn = 0.0;
  double norm_dt = 0.0;
  double norm_dx = 0.0;
  double norm_ds = 0.0;
  double omega_c = 0.0;
  double omega_f = 0.0;
  double f_value = 0.0;      // objective at the trial point
  double feasibility = 0.0;  // inf-norm of c(0) at the trial's base point
  double eta = 0.0;
  bool accepted = false;
};

enum class SolveStatus { Converged, MaxIterExceeded, StallDetected };

struct SolveResult {
  SolveStatus status = SolveStatus::MaxIterExceeded;
  std::unique_ptr<ProblemOracle> oracle;  // rebased to the final iterate
  Eigen::VectorXd multiplier;
  std::vector<IterationRecord> history;
  int accepted_steps = 0;
  double f_value = 0.0;
  double feasibility = 0.0;
};

/// Called after every recorded trial with the current oracle (already
/// rebased when the trial was accepted).
using IterationObserver = std::function<void(const ProblemOracle&, const IterationRecord&)>;

/// Local SQP iteration: multiplier estimate, full Lagrange-Newton step,
/// update through the oracle's update retraction. No globalization; stops
/// when |dx| <= tol or after max_iter steps. Factorization errors propagate;
/// a step outside the retraction domain raises UpdateNotDefinedError.
SolveResult local_sqp_solve(std::unique_ptr<ProblemOracle> oracle, double tol, int max_iter,
                            const IterationObserver& observer = {});

/// Affine covariant composite step method: per outer iteration the normal
/// step, multiplier, normal damping, tangential step, tangential damping,
/// second order correction, acceptance tests and Lipschitz-estimate updates.
/// Converged when |dx| <= tol_dx and the feasibility inf-norm <= tol_feas;
/// 30 consecutive rejections abort with StallDetected.
SolveResult composite_step_solve(std::unique_ptr<ProblemOracle> oracle, const SolverConfig& cfg,
                                 const IterationObserver& observer = {});

}  // namespace msqp
