#include "msqp/models.hpp"

#include <cmath>
#include <limits>

namespace msqp {

void SolverConfig::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(msg); };
  if (!(theta_aim > 0.0 && theta_aim < 1.0)) fail("theta_aim must lie in (0,1)");
  if (!(theta_acc > 0.0 && theta_acc < 1.0)) fail("theta_acc must lie in (0,1)");
  if (!(rho_ellbow > 0.0 && rho_ellbow <= 1.0)) fail("rho_ellbow must lie in (0,1]");
  if (!(eta_lo > 0.0 && eta_lo < 1.0)) fail("eta_lo must lie in (0,1)");
  if (!(eta_hat >= eta_lo && eta_hat < 1.0)) fail("eta_hat must lie in [eta_lo,1)");
  if (!(b_lo > 0.0 && b_lo < 1.0)) fail("b_lo must lie in (0,1)");
  if (!(b_hat > 1.0 && b_hat <= b_hi)) fail("b_hat must lie in (1,b_hi]");
  if (!(omega_c_init >= 0.0)) fail("omega_c_init must be nonnegative");
  if (!(omega_f_init > 0.0)) fail("omega_f_init must be positive");
  if (!(tol_dx > 0.0 && tol_feas > 0.0)) fail("tolerances must be positive");
  if (max_iter < 0) fail("max_iter must be nonnegative");
}

ModelData ModelData::build(const ProblemOracle& oracle, const Eigen::VectorXd& p) {
  ModelData md;
  md.f0 = oracle.f0();
  md.grad_f = oracle.grad_f();
  md.c0 = oracle.c0();
  md.C = oracle.jac_c();
  md.H = oracle.lagrangian_hessian(p);
  return md;
}

double quadratic_model(const ModelData& md, const Eigen::VectorXd& dx) {
  return md.f0 + md.grad_f.dot(dx) + 0.5 * dx.dot(md.H * dx);
}

double quadratic_model(const ProblemOracle& oracle, const Eigen::VectorXd& p,
                       const Eigen::VectorXd& dx) {
  return quadratic_model(ModelData::build(oracle, p), dx);
}

double hybrid_model(const ProblemOracle& oracle, const ModelData& md,
                    const Eigen::VectorXd& p, double nu, const Eigen::VectorXd& dn,
                    const Eigen::VectorXd& dt) {
  const double lagrangian_at_dn = oracle.f(dn) + p.dot(oracle.c(dn));
  const Eigen::VectorXd h_dn = md.H * dn;
  return lagrangian_at_dn - (1.0 - nu) * p.dot(md.c0) + (md.grad_f + h_dn).dot(dt) +
         0.5 * dt.dot(md.H * dt);
}

double hybrid_model(const ProblemOracle& oracle, const Eigen::VectorXd& p, double nu,
                    const Eigen::VectorXd& dn, const Eigen::VectorXd& dt) {
  return hybrid_model(oracle, ModelData::build(oracle, p), p, nu, dn, dt);
}

double cubic_model(double model_value, double omega_f, const Eigen::VectorXd& dx) {
  const double norm = dx.norm();
  return model_value + omega_f / 6.0 * norm * norm * norm;
}

double compute_nu(double omega_c, double theta_aim, double rho_ellbow, double norm_dn,
                  double domain_cap) {
  double nu = 1.0;
  const double denom = omega_c * norm_dn;
  if (denom > 0.0) nu = std::min(1.0, 2.0 * rho_ellbow * theta_aim / denom);
  return std::min(nu, domain_cap);
}

double compute_tau(const ModelData& md, double omega_f, double omega_c, double theta_aim,
                   const Eigen::VectorXd& dn, const Eigen::VectorXd& Dt) {
  const double t2 = Dt.squaredNorm();
  if (t2 == 0.0) return 0.0;
  const double a = Dt.dot(md.H * Dt);
  const double b = (md.grad_f + md.H * dn).dot(Dt);
  const double n2 = dn.squaredNorm();

  // Derivative of the 1-D cubic model along tau; monotone increasing for
  // a > 0, omega_f >= 0.
  auto dphi = [&](double tau) {
    return b + tau * a + 0.5 * omega_f * std::sqrt(n2 + tau * tau * t2) * tau * t2;
  };

  double tau;
  if (dphi(0.0) >= 0.0) {
    tau = 0.0;
  } else if (dphi(1.0) <= 0.0) {
    tau = 1.0;
  } else {
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      (dphi(mid) < 0.0 ? lo : hi) = mid;
    }
    tau = 0.5 * (lo + hi);
  }

  if (omega_c > 0.0) {
    const double radius = 2.0 * theta_aim / omega_c;
    const double r2 = radius * radius;
    const double cap = (r2 <= n2) ? 0.0 : std::sqrt((r2 - n2) / t2);
    tau = std::min(tau, cap);
  }
  return std::min(tau, 1.0);
}

double compute_tau(const ProblemOracle& oracle, const Eigen::VectorXd& p, double omega_f,
                   double omega_c, double theta_aim, const Eigen::VectorXd& dn,
                   const Eigen::VectorXd& Dt) {
  return compute_tau(ModelData::build(oracle, p), omega_f, omega_c, theta_aim, dn, Dt);
}

double update_omega_c(const Eigen::VectorXd& dx, const Eigen::VectorXd& ds) {
  const double norm_dx = dx.norm();
  if (norm_dx == 0.0) throw std::invalid_argument("omega_c update undefined for dx = 0");
  return std::max(2.0 * ds.norm() / (norm_dx * norm_dx), 1e-12);
}

double update_omega_f(double old_omega, double f_new, double qhat_dx, double norm_dx,
                      double eta, bool accepted, const SolverConfig& cfg) {
  double raw = 6.0 * (f_new - qhat_dx) / (norm_dx * norm_dx * norm_dx);
  if (!std::isfinite(raw)) raw = std::numeric_limits<double>::infinity();
  double next = std::min(cfg.b_hi * old_omega, std::max(cfg.b_lo * old_omega, raw));
  const bool decrease_failed = !(eta >= cfg.eta_lo);
  if (!accepted && decrease_failed) next = std::max(next, cfg.b_hat * old_omega);
  if (eta >= cfg.eta_hat) next = std::min(next, old_omega);
  return next;
}

AcceptanceResult acceptance_test(const Eigen::VectorXd& dx, const Eigen::VectorXd& ds,
                                 double f_new, double m_at_dx, double m_at_dn,
                                 const SolverConfig& cfg) {
  const double norm_dx = dx.norm();
  const double contraction = (norm_dx > 0.0) ? ds.norm() / norm_dx : 0.0;
  const bool contraction_ok = contraction <= cfg.theta_acc;

  const double denom = m_at_dx - m_at_dn;
  double eta;
  if (denom >= 0.0) {
    if (std::abs(denom) <= 1e-14 * (1.0 + std::abs(m_at_dn)))
      eta = 1.0;  // models indistinguishable at roundoff
    else
      throw DegenerateDenominatorError();
  } else {
    eta = (f_new - m_at_dn) / denom;
  }

  const bool decrease_ok = eta >= cfg.eta_lo;
  return AcceptanceResult{contraction_ok && decrease_ok, eta};
}

}  // namespace msqp
