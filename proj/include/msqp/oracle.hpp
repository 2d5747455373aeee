#pragma once

#include "msqp/geometry.hpp"
#include "msqp/kkt.hpp"

#include <Eigen/Dense>

#include <memory>

namespace msqp {

/// Map S_y : Y -> T_y Y with S_y(y) = 0 and derivative identity at y; the
/// constraint-target counterpart of a retraction. IdentityLinear is the
/// default for linear target spaces (the rod); SphereProjectionInverse
/// inverts the projection parametrization on S^2 and exists for unit tests.
struct Stratification {
  enum class Kind { IdentityLinear, SphereProjectionInverse };

  Kind kind = Kind::IdentityLinear;

  /// Coordinates of w in T_base. For IdentityLinear this is w - base (any
  /// dimension); for SphereProjectionInverse both arguments are sphere
  /// points in R^3 and the result has the two basis coefficients.
  Eigen::VectorXd apply(const Eigen::VectorXd& base, const Eigen::VectorXd& w) const;

  /// Second derivative of the ambient extension of the map at the base
  /// point, applied to directions (a, b). Zero for IdentityLinear.
  Eigen::VectorXd second_derivative(const Eigen::VectorXd& base, const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& b) const;
};

/// A pair of stratifications whose transition map has vanishing second
/// derivative at the origin, so Lagrangian Hessians agree on all of T_x X.
bool second_order_consistent(const Stratification& model, const Stratification& update);

/// Pullback evaluators of an equality-constrained problem at a base point.
///
/// f(u), c(u) evaluate through the update retraction; grad_f, jac_c and
/// lagrangian_hessian are the derivatives at u = 0 through the model
/// retraction. First derivatives are invariant under the retraction choice.
/// Implementations must be pure: concurrent evaluation is safe, and rebase
/// returns a fresh oracle at the retracted point without mutating this one.
class ProblemOracle {
 public:
  virtual ~ProblemOracle() = default;

  virtual int dim() const = 0;
  virtual int codim() const = 0;

  virtual double f(const TangentCoords& u) const = 0;
  virtual Eigen::VectorXd c(const TangentCoords& u) const = 0;

  virtual double f0() const { return f(TangentCoords::Zero(dim())); }
  virtual Eigen::VectorXd c0() const { return c(TangentCoords::Zero(dim())); }

  /// Coefficients of f'(0) in the tangent basis.
  virtual Eigen::VectorXd grad_f() const = 0;
  virtual SpMat jac_c() const = 0;
  /// L''(0, p) = f''(0) + sum_i p_i c_i''(0), via the model retraction.
  virtual SpMat lagrangian_hessian(const Eigen::VectorXd& p) const = 0;

  /// New oracle at the update-retracted point R_x(step).
  virtual std::unique_ptr<ProblemOracle> rebase(const TangentCoords& step) const = 0;

  /// Whether the model/update stratification pair is second order
  /// consistent (selects the plain quadratic model over the hybrid one).
  virtual bool stratification_pair_consistent() const { return true; }

  /// Membership in the retraction domain V_x; the rod's retractions are
  /// globally defined.
  virtual bool in_domain(const TangentCoords&) const { return true; }

  /// Base point for manifold-valued problems, if any.
  virtual const ProductPoint* point() const { return nullptr; }

  virtual RetractionKind model_retraction() const { return RetractionKind::Projection; }
  virtual RetractionKind update_retraction() const { return RetractionKind::Projection; }
};

}  // namespace msqp
