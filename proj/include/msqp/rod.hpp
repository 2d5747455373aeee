#pragma once

#include "msqp/geometry.hpp"
#include "msqp/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <memory>
#include <vector>

namespace msqp {

/// Discretization and physical data of the inextensible-rod benchmark on a
/// uniform grid s_i = i/n, i = 0..n. Interior nodes 1..n-1 are unknowns;
/// boundary positions and unit tangents are clamped.
struct RodConfig {
  int n = 240;
  std::vector<double> sigma;           // flexural stiffness per interval; empty = 1.0
  std::vector<Eigen::Vector3d> load;   // load per interior node; empty = zero
  double radius = 0.6;
  double pitch_a = 0.5;
  Eigen::Vector3d y_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d y_b = Eigen::Vector3d::Zero();
  SpherePoint v_a{Eigen::Vector3d::UnitX()};
  SpherePoint v_b{Eigen::Vector3d::UnitX()};

  double h() const { return 1.0 / n; }
  double sigma_at(int interval) const {
    return sigma.empty() ? 1.0 : sigma.at(static_cast<std::size_t>(interval));
  }
  Eigen::Vector3d load_at(int node) const {  // interior node, 1-based
    return load.empty() ? Eigen::Vector3d::Zero()
                        : load.at(static_cast<std::size_t>(node - 1));
  }

  void validate() const;

  /// Configuration clamped to the sampled helix
  /// y0(s) = [r cos(w s), r sin(w s), a^2 w s], w = 1/sqrt(r^2 + a^2),
  /// with constant stiffness and a constant load vector at every interior
  /// node.
  static RodConfig helix(int n, double sigma_value, const Eigen::Vector3d& g, double r = 0.6,
                         double a = 0.5);
};

/// Interior nodes (y_i, v_i), i = 1..n-1, as a product-manifold point.
struct RodState {
  ProductPoint x;
};

/// Samples the helix at the interior grid points; tangents are the
/// normalized derivative (|y0'| != 1 unless a = 1, so normalization is not
/// a no-op).
RodState helix_initial(const RodConfig& cfg);

/// Pullback of the discrete bending + load energy at tangent coordinates u,
/// parametrizing each sphere factor with `kind`. Positions enter the load
/// term retracted, i.e. as y_i + dy_i.
double energy_eval(const RodConfig& cfg, RetractionKind kind, const TangentCoords& u,
                   const RodState& state);

/// Pullback of the inextensibility constraint, blocks
/// (Y_{i+1} - Y_i)/h - mu_{v_i}(u_i) for i = 0..n-1 with clamped boundary
/// data. Returns all 3n residual components.
Eigen::VectorXd constraint_eval(const RodConfig& cfg, RetractionKind kind,
                                const TangentCoords& u, const RodState& state);

struct EnergyDerivatives {
  Eigen::VectorXd gradient;  // zero curvature part in y, -h g_i load part
  SpMat hessian;             // tridiagonal sphere blocks, zero y blocks
};
EnergyDerivatives energy_derivatives(const RodConfig& cfg, RetractionKind kind,
                                     const RodState& state);

/// Jacobian (block-bidiagonal in y, block-diagonal in u) and the data needed
/// for the constraint's second derivative, which acts on the u coordinates
/// only through -mu''(0).
struct ConstraintDerivatives {
  SpMat jacobian;  // 3n x 5(n-1)

  /// d x d bilinear form sum_i p_i . c_i''(0).
  SpMat second_form(const Eigen::VectorXd& p) const;

  RetractionKind kind = RetractionKind::Projection;
  std::vector<SpherePoint> node_v;       // interior nodes
  std::vector<TangentBasis2> node_basis;
};
ConstraintDerivatives constraint_derivatives(const RodConfig& cfg, RetractionKind kind,
                                             const RodState& state);

/// Oracle with evaluations/updates through `update_kind` and model
/// derivatives through `model_kind`. The constraint target is linear, so the
/// stratification pair is the identity and second order consistent.
std::unique_ptr<ProblemOracle> assemble_problem_oracle(const RodConfig& cfg,
                                                       const RodState& state,
                                                       RetractionKind model_kind,
                                                       RetractionKind update_kind);

}  // namespace msqp
