#pragma once

#include "msqp/kkt.hpp"
#include "msqp/oracle.hpp"

#include <Eigen/Dense>

namespace msqp {

/// Signals m(dx) = m(dn) with a nonzero tangential component, which the
/// decrease test cannot tolerate; indicates a model-evaluation bug.
class DegenerateDenominatorError : public SolverError {
 public:
  DegenerateDenominatorError() : SolverError("degenerate decrease-test denominator") {}
};

/// Globalization parameters. Defaults satisfy every range constraint below
/// and are the values used by the benchmark.
struct SolverConfig {
  double theta_aim = 0.5;    // desired Newton contraction, in (0,1)
  double theta_acc = 0.75;   // contraction acceptance bound, in (0,1)
  double rho_ellbow = 0.8;   // ellbow space for the normal step, in (0,1]
  double eta_lo = 0.25;      // decrease-test threshold, in (0,1)
  double eta_hat = 0.9;      // no-increase threshold for omega_f, in [eta_lo,1)
  double b_lo = 0.25;        // omega_f safeguard factors: b_lo < 1 < b_hat <= b_hi
  double b_hat = 2.0;
  double b_hi = 4.0;
  double omega_c_init = 1e-6;
  double omega_f_init = 1e-6;
  double tol_dx = 1e-10;
  double tol_feas = 1e-10;
  int max_iter = 100;
  bool hybrid_model = false;  // force the hybrid model even for consistent pairs

  void validate() const;
};

/// Cached data of the linear-quadratic model at the current base point:
/// values and derivatives at 0 plus the (possibly regularized) Lagrangian
/// Hessian for a fixed multiplier.
struct ModelData {
  double f0 = 0.0;
  Eigen::VectorXd grad_f;
  Eigen::VectorXd c0;
  SpMat C;
  SpMat H;

  static ModelData build(const ProblemOracle& oracle, const Eigen::VectorXd& p);
};

/// Quadratic model q(dx) = f(0) + f'(0) dx + 1/2 L''(0,p)(dx,dx).
double quadratic_model(const ModelData& md, const Eigen::VectorXd& dx);
double quadratic_model(const ProblemOracle& oracle, const Eigen::VectorXd& p,
                       const Eigen::VectorXd& dx);

/// Hybrid model
///   q~(dn)(dt) = L(dn,p) - (1-nu) p.c(0) + (f'(0) + L''(0,p) dn) dt
///                + 1/2 L''(0,p)(dt,dt)
/// with L(dn,p) evaluated through the update retraction. For fixed dn it has
/// the same tangential minimizer as q(dn + dt).
double hybrid_model(const ProblemOracle& oracle, const ModelData& md,
                    const Eigen::VectorXd& p, double nu, const Eigen::VectorXd& dn,
                    const Eigen::VectorXd& dt);
double hybrid_model(const ProblemOracle& oracle, const Eigen::VectorXd& p, double nu,
                    const Eigen::VectorXd& dn, const Eigen::VectorXd& dt);

/// Cubic regularization m(v) = q(v) + omega_f/6 |v|^3 on top of whichever
/// model value is active.
double cubic_model(double model_value, double omega_f, const Eigen::VectorXd& dx);

/// Maximal damping nu in (0,1] with (omega_c/2) nu |Dn| <= rho_ellbow * theta_aim,
/// additionally capped by the retraction domain bound.
double compute_nu(double omega_c, double theta_aim, double rho_ellbow, double norm_dn,
                  double domain_cap);

/// Damping tau in [0,1] minimizing the cubic model along dx = dn + tau Dt,
/// then capped by the trust-region bound (omega_c/2)|dx| <= theta_aim.
/// Solved by bisection on the monotone scalar derivative to an interval of
/// width 1e-12. Returns 0 only for Dt = 0.
double compute_tau(const ModelData& md, double omega_f, double omega_c, double theta_aim,
                   const Eigen::VectorXd& dn, const Eigen::VectorXd& Dt);
double compute_tau(const ProblemOracle& oracle, const Eigen::VectorXd& p, double omega_f,
                   double omega_c, double theta_aim, const Eigen::VectorXd& dn,
                   const Eigen::VectorXd& Dt);

/// A-posteriori estimate [omega_c] = 2 |ds| / |dx|^2, floored at 1e-12.
/// Throws std::invalid_argument for dx = 0.
double update_omega_c(const Eigen::VectorXd& dx, const Eigen::VectorXd& ds);

/// Safeguarded update of [omega_f] from the raw estimate
/// 6 (f(dx + sigma ds) - qhat(dx)) / |dx|^3: clamped into
/// [b_lo old, b_hi old], raised to at least b_hat old when the decrease
/// test failed, and never increased when eta >= eta_hat.
double update_omega_f(double old_omega, double f_new, double qhat_dx, double norm_dx,
                      double eta, bool accepted, const SolverConfig& cfg);

struct AcceptanceResult {
  bool accepted = false;
  double eta = 0.0;
};

/// Contraction test |ds|/|dx| <= theta_acc and decrease test eta >= eta_lo
/// with eta = (f_new - m(dn)) / (m(dx) - m(dn)). The denominator must be
/// negative; a vanishing one raises DegenerateDenominatorError.
AcceptanceResult acceptance_test(const Eigen::VectorXd& dx, const Eigen::VectorXd& ds,
                                 double f_new, double m_at_dx, double m_at_dn,
                                 const SolverConfig& cfg);

}  // namespace msqp
