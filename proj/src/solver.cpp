#include "msqp/solver.hpp"

#include <cmath>
#include <limits>

namespace msqp {

namespace {

constexpr int kMaxConsecutiveRejections = 30;

SpMat identity_metric(int d) {
  SpMat m(d, d);
  m.setIdentity();
  return m;
}

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() > 0 ? v.lpNorm<Eigen::Infinity>() : 0.0;
}

// Largest sigma in [0,1] keeping dx + sigma ds inside the retraction domain.
// The rod's retractions are globally defined, so this normally returns 1.
double domain_sigma(const ProblemOracle& oracle, const Eigen::VectorXd& dx,
                    const Eigen::VectorXd& ds) {
  double sigma = 1.0;
  while (sigma > 1e-9 && !oracle.in_domain(dx + sigma * ds)) sigma *= 0.5;
  return sigma > 1e-9 ? sigma : 0.0;
}

}  // namespace

SolveResult local_sqp_solve(std::unique_ptr<ProblemOracle> oracle, double tol, int max_iter,
                            const IterationObserver& observer) {
  SolveResult result;
  result.multiplier = Eigen::VectorXd::Zero(oracle->codim());

  for (int iter = 0; iter < max_iter + 1; ++iter) {
    const Eigen::VectorXd c0 = oracle->c0();
    const Eigen::VectorXd fp = oracle->grad_f();
    const SpMat C = oracle->jac_c();
    const double feas = inf_norm(c0);

    const SpMat metric = identity_metric(oracle->dim());
    SaddleFactorization mfact(metric, C);
    if (mfact.singular()) throw RankDeficientError();
    const Eigen::VectorXd p = mfact.solve(fp, Eigen::VectorXd::Zero(C.rows())).multiplier;
    result.multiplier = p;

    SaddlePointSystem sys;
    sys.H = oracle->lagrangian_hessian(p);
    sys.C = C;
    sys.r1 = fp + C.transpose() * p;
    sys.r2 = c0;
    const KktSolution sol = solve_saddle(sys);

    if (sol.step.norm() <= tol) {
      result.status = SolveStatus::Converged;
      break;
    }
    if (iter == max_iter) break;  // MaxIterExceeded
    if (!oracle->in_domain(sol.step)) throw UpdateNotDefinedError();

    IterationRecord rec;
    rec.iter = iter;
    rec.norm_dx = sol.step.norm();
    rec.f_value = oracle->f(sol.step);
    rec.feasibility = feas;
    rec.eta = 1.0;
    rec.accepted = true;

    oracle = oracle->rebase(sol.step);
    ++result.accepted_steps;
    result.history.push_back(rec);
    if (observer) observer(*oracle, rec);
  }

  result.f_value = oracle->f0();
  result.feasibility = inf_norm(oracle->c0());
  result.oracle = std::move(oracle);
  return result;
}

SolveResult composite_step_solve(std::unique_ptr<ProblemOracle> oracle, const SolverConfig& cfg,
                                 const IterationObserver& observer) {
  cfg.validate();

  SolveResult result;
  result.multiplier = Eigen::VectorXd::Zero(oracle->codim());
  double omega_c = cfg.omega_c_init;
  double omega_f = cfg.omega_f_init;
  int trial_index = 0;
  bool done = false;

  for (int outer = 0; outer < cfg.max_iter && !done; ++outer) {
    const int d = oracle->dim();
    const Eigen::VectorXd c0 = oracle->c0();
    const double feas = inf_norm(c0);
    const Eigen::VectorXd fp = oracle->grad_f();
    const SpMat C = oracle->jac_c();

    const SpMat metric = identity_metric(d);
    SaddleFactorization mfact(metric, C);
    if (mfact.singular()) throw RankDeficientError();

    const Eigen::VectorXd zero_d = Eigen::VectorXd::Zero(d);
    const Eigen::VectorXd zero_m = Eigen::VectorXd::Zero(C.rows());

    const Eigen::VectorXd full_dn = mfact.solve(zero_d, c0).step;
    const Eigen::VectorXd p = mfact.solve(fp, zero_m).multiplier;
    result.multiplier = p;

    SpMat H = oracle->lagrangian_hessian(p);
    SaddleFactorization hfact(H, C);
    if (hfact.singular() || !hfact.positive_on_kernel()) {
      H = hessian_regularize(H, C);
      hfact = SaddleFactorization(H, C);
    }

    ModelData md;
    md.f0 = oracle->f0();
    md.grad_f = fp;
    md.c0 = c0;
    md.C = C;
    md.H = H;
    const Eigen::VectorXd lagrangian_grad = fp + C.transpose() * p;
    const bool use_hybrid = cfg.hybrid_model || !oracle->stratification_pair_consistent();

    int consecutive_rejections = 0;
    while (!done) {
      const double nu = compute_nu(omega_c, cfg.theta_aim, cfg.rho_ellbow, full_dn.norm(),
                                   std::numeric_limits<double>::infinity());
      const Eigen::VectorXd dn = nu * full_dn;
      const Eigen::VectorXd full_dt = hfact.solve(lagrangian_grad + H * dn, zero_m).step;
      const double tau =
          compute_tau(md, omega_f, omega_c, cfg.theta_aim, dn, full_dt);
      const Eigen::VectorXd dt = tau * full_dt;
      const Eigen::VectorXd dx = dn + dt;
      const double norm_dx = dx.norm();

      if (norm_dx <= cfg.tol_dx && feas <= cfg.tol_feas) {
        result.status = SolveStatus::Converged;
        done = true;
        break;
      }

      const Eigen::VectorXd remainder = oracle->c(dx) - c0 - C * dx;
      const Eigen::VectorXd ds = mfact.solve(zero_d, remainder).step;
      const double sigma = domain_sigma(*oracle, dx, ds);
      const Eigen::VectorXd update = dx + sigma * ds;
      const double f_new = oracle->f(update);

      double q_dx, q_dn;
      if (use_hybrid) {
        q_dx = hybrid_model(*oracle, md, p, nu, dn, dt);
        q_dn = hybrid_model(*oracle, md, p, nu, dn, zero_d);
      } else {
        q_dx = quadratic_model(md, dx);
        q_dn = quadratic_model(md, dn);
      }
      const double m_dx = cubic_model(q_dx, omega_f, dx);
      const double m_dn = cubic_model(q_dn, omega_f, dn);

      AcceptanceResult acc;
      if (tau > 0.0) {
        acc = acceptance_test(dx, ds, f_new, m_dx, m_dn, cfg);
      } else {
        // Pure feasibility step: the decrease test is vacuous.
        acc.eta = 1.0;
        acc.accepted = (norm_dx > 0.0 ? ds.norm() / norm_dx : 0.0) <= cfg.theta_acc;
      }

      IterationRecord rec;
      rec.iter = trial_index++;
      rec.nu = nu;
      rec.tau = tau;
      rec.norm_dn = dn.norm();
      rec.norm_dt = dt.norm();
      rec.norm_dx = norm_dx;
      rec.norm_ds = ds.norm();
      rec.omega_c = omega_c;
      rec.omega_f = omega_f;
      rec.f_value = f_new;
      rec.feasibility = feas;
      rec.eta = acc.eta;
      rec.accepted = acc.accepted;
      result.history.push_back(rec);

      // Both estimates are measurements of the computed (dx, ds); they are
      // updated on rejected trials as well.
      omega_c = update_omega_c(dx, ds);
      omega_f = update_omega_f(omega_f, f_new, q_dx, norm_dx, acc.eta, acc.accepted, cfg);

      if (acc.accepted) {
        oracle = oracle->rebase(update);
        ++result.accepted_steps;
        if (observer) observer(*oracle, rec);
        break;
      }
      if (observer) observer(*oracle, rec);
      if (++consecutive_rejections >= kMaxConsecutiveRejections) {
        result.status = SolveStatus::StallDetected;
        done = true;
      }
    }
  }

  result.f_value = oracle->f0();
  result.feasibility = inf_norm(oracle->c0());
  result.oracle = std::move(oracle);
  return result;
}

}  // namespace msqp
