#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace msqp {

/// Which local parametrization of the sphere is used for retracting,
/// differentiating, or both.
enum class RetractionKind { Projection, Exponential };

/// Point on the unit sphere S^2, embedded in R^3 with |v| = 1.
struct SpherePoint {
  Eigen::Vector3d v;
};

/// Orthonormal basis {zeta1, zeta2} of the tangent plane at a sphere point.
struct TangentBasis2 {
  Eigen::Vector3d zeta1;
  Eigen::Vector3d zeta2;
};

/// Thrown when a point lies outside the hemisphere on which the projection
/// retraction can be inverted.
class HemisphereDomainError : public std::domain_error {
 public:
  HemisphereDomainError() : std::domain_error("point outside invertibility hemisphere") {}
};

/// Deterministic orthonormal tangent basis at v: pick the coordinate axis e
/// least aligned with v (ties broken by lowest index), project it onto the
/// tangent plane and normalize, complete with the cross product.
TangentBasis2 sphere_tangent_basis(const SpherePoint& v);

/// Local parametrization of S^2 at v in the coordinates of `basis`.
///
/// Projection:   mu(u) = (v + u1 z1 + u2 z2) / |v + u1 z1 + u2 z2|
/// Exponential:  mu(u) = exp(u1 C1 + u2 C2) v  with  C_j = z_j v^T - v z_j^T,
/// evaluated in closed form as the rotation of v by angle |u| in the plane
/// spanned by v and u1 z1 + u2 z2.
///
/// Both are globally defined and share the first derivative u1 z1 + u2 z2
/// at u = 0.
SpherePoint sphere_retract(RetractionKind kind, const SpherePoint& v,
                           const TangentBasis2& basis, const Eigen::Vector2d& u);

/// First derivative of either parametrization at u = 0 applied to du.
Eigen::Vector3d sphere_param_first_derivative(const TangentBasis2& basis,
                                              const Eigen::Vector2d& du);

/// Second derivative of the parametrization at u = 0, as a bilinear map
/// applied to (du, dw).
///
/// Projection:   -(du . dw) v
/// Exponential:  (du1 C1 + du2 C2)(dw1 C1 + dw2 C2) v
Eigen::Vector3d sphere_param_second_derivative(RetractionKind kind, const SpherePoint& v,
                                               const TangentBasis2& basis,
                                               const Eigen::Vector2d& du,
                                               const Eigen::Vector2d& dw);

/// Inverse of the projection parametrization: the u with
/// sphere_retract(Projection, v, basis, u) == w. Requires <w,v> > 0,
/// otherwise throws HemisphereDomainError.
Eigen::Vector2d sphere_inverse_projection_retraction(const SpherePoint& v,
                                                     const SpherePoint& w,
                                                     const TangentBasis2& basis);

/// Point on a product manifold (R^3 x S^2)^k with possibly different counts
/// of Euclidean and sphere factors. For the rod both counts equal n-1.
struct ProductPoint {
  std::vector<Eigen::Vector3d> euclidean;
  std::vector<SpherePoint> sphere;

  /// Dimension of the tangent space: 3 per Euclidean block, 2 per sphere block.
  int tangent_dim() const {
    return static_cast<int>(3 * euclidean.size() + 2 * sphere.size());
  }
};

/// Coefficient vector in the per-node tangent bases. Layout is node-wise
/// interleaved: node i contributes 3 Euclidean coefficients (if present)
/// followed by 2 sphere coefficients (if present).
using TangentCoords = Eigen::VectorXd;

/// Componentwise retraction: Euclidean blocks add, sphere blocks retract
/// with the node's deterministic tangent basis.
ProductPoint product_retract(const ProductPoint& x, RetractionKind kind,
                             const TangentCoords& u);

/// Nonlinear transport T_{x1} -> T_{x2}: retract u from x1 and invert at x2,
/// both with the projection parametrization. Euclidean blocks shift by the
/// coordinate difference x1 - x2. Throws HemisphereDomainError if some
/// intermediate sphere point leaves the invertible hemisphere of x2.
TangentCoords transport(const ProductPoint& x1, const ProductPoint& x2,
                        const TangentCoords& u);

}  // namespace msqp
