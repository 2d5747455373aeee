#include "msqp/geometry.hpp"

#include <cmath>

namespace msqp {

TangentBasis2 sphere_tangent_basis(const SpherePoint& v) {
  int least = 0;
  double best = std::abs(v.v[0]);
  for (int i = 1; i < 3; ++i) {
    if (std::abs(v.v[i]) < best) {
      best = std::abs(v.v[i]);
      least = i;
    }
  }
  Eigen::Vector3d e = Eigen::Vector3d::Zero();
  e[least] = 1.0;
  Eigen::Vector3d z1 = e - e.dot(v.v) * v.v;
  z1.normalize();
  return TangentBasis2{z1, v.v.cross(z1)};
}

Eigen::Vector3d sphere_param_first_derivative(const TangentBasis2& basis,
                                              const Eigen::Vector2d& du) {
  return du[0] * basis.zeta1 + du[1] * basis.zeta2;
}

namespace {

// sin(t)/t with a series fallback near zero.
double sinc(double t) {
  if (std::abs(t) < 1e-8) return 1.0 - t * t / 6.0;
  return std::sin(t) / t;
}

Eigen::Matrix3d exp_generator(const Eigen::Vector3d& zeta, const Eigen::Vector3d& v) {
  return zeta * v.transpose() - v * zeta.transpose();
}

}  // namespace

SpherePoint sphere_retract(RetractionKind kind, const SpherePoint& v,
                           const TangentBasis2& basis, const Eigen::Vector2d& u) {
  const Eigen::Vector3d w = sphere_param_first_derivative(basis, u);
  if (kind == RetractionKind::Projection) {
    Eigen::Vector3d r = v.v + w;
    r.normalize();
    return SpherePoint{r};
  }
  // Rotation of v by angle |u| in the plane spanned by v and w: the closed
  // form of exp(u1 C1 + u2 C2) v for C_j = zeta_j v^T - v zeta_j^T.
  const double angle = u.norm();
  Eigen::Vector3d r = std::cos(angle) * v.v + sinc(angle) * w;
  r.normalize();
  return SpherePoint{r};
}

Eigen::Vector3d sphere_param_second_derivative(RetractionKind kind, const SpherePoint& v,
                                               const TangentBasis2& basis,
                                               const Eigen::Vector2d& du,
                                               const Eigen::Vector2d& dw) {
  if (kind == RetractionKind::Projection) {
    return -du.dot(dw) * v.v;
  }
  const Eigen::Matrix3d c1 = exp_generator(basis.zeta1, v.v);
  const Eigen::Matrix3d c2 = exp_generator(basis.zeta2, v.v);
  return (du[0] * c1 + du[1] * c2) * ((dw[0] * c1 + dw[1] * c2) * v.v);
}

Eigen::Vector2d sphere_inverse_projection_retraction(const SpherePoint& v,
                                                     const SpherePoint& w,
                                                     const TangentBasis2& basis) {
  const double align = w.v.dot(v.v);
  if (align <= 0.0) throw HemisphereDomainError();
  const Eigen::Vector3d dv = w.v / align - v.v;
  return Eigen::Vector2d(dv.dot(basis.zeta1), dv.dot(basis.zeta2));
}

namespace {

void check_coord_length(const ProductPoint& x, const TangentCoords& u) {
  if (u.size() != x.tangent_dim())
    throw std::invalid_argument("tangent coordinate length does not match point");
}

}  // namespace

ProductPoint product_retract(const ProductPoint& x, RetractionKind kind,
                             const TangentCoords& u) {
  check_coord_length(x, u);
  ProductPoint out = x;
  const std::size_t nodes = std::max(x.euclidean.size(), x.sphere.size());
  int off = 0;
  for (std::size_t i = 0; i < nodes; ++i) {
    if (i < x.euclidean.size()) {
      out.euclidean[i] += u.segment<3>(off);
      off += 3;
    }
    if (i < x.sphere.size()) {
      const TangentBasis2 basis = sphere_tangent_basis(x.sphere[i]);
      out.sphere[i] = sphere_retract(kind, x.sphere[i], basis, u.segment<2>(off));
      off += 2;
    }
  }
  return out;
}

TangentCoords transport(const ProductPoint& x1, const ProductPoint& x2,
                        const TangentCoords& u) {
  check_coord_length(x1, u);
  if (x1.euclidean.size() != x2.euclidean.size() || x1.sphere.size() != x2.sphere.size())
    throw std::invalid_argument("transport endpoints have mismatched structure");
  TangentCoords out(u.size());
  const std::size_t nodes = std::max(x1.euclidean.size(), x1.sphere.size());
  int off = 0;
  for (std::size_t i = 0; i < nodes; ++i) {
    if (i < x1.euclidean.size()) {
      out.segment<3>(off) = u.segment<3>(off) + (x1.euclidean[i] - x2.euclidean[i]);
      off += 3;
    }
    if (i < x1.sphere.size()) {
      const TangentBasis2 b1 = sphere_tangent_basis(x1.sphere[i]);
      const SpherePoint w = sphere_retract(RetractionKind::Projection, x1.sphere[i], b1,
                                           u.segment<2>(off));
      const TangentBasis2 b2 = sphere_tangent_basis(x2.sphere[i]);
      out.segment<2>(off) = sphere_inverse_projection_retraction(x2.sphere[i], w, b2);
      off += 2;
    }
  }
  return out;
}

}  // namespace msqp
