#include "msqp/oracle.hpp"

namespace msqp {

Eigen::VectorXd Stratification::apply(const Eigen::VectorXd& base,
                                      const Eigen::VectorXd& w) const {
  if (kind == Kind::IdentityLinear) return w - base;
  if (base.size() != 3 || w.size() != 3)
    throw std::invalid_argument("sphere stratification expects 3-vectors");
  const SpherePoint v{base};
  const TangentBasis2 basis = sphere_tangent_basis(v);
  return sphere_inverse_projection_retraction(v, SpherePoint{w}, basis);
}

Eigen::VectorXd Stratification::second_derivative(const Eigen::VectorXd& base,
                                                  const Eigen::VectorXd& a,
                                                  const Eigen::VectorXd& b) const {
  if (kind == Kind::IdentityLinear) return Eigen::VectorXd::Zero(base.size());
  // Hessian of u_j(w) = <zeta_j, w> / <v, w> at w = v:
  //   -<zeta_j, a><v, b> - <v, a><zeta_j, b>.
  const SpherePoint v{base};
  const TangentBasis2 basis = sphere_tangent_basis(v);
  Eigen::VectorXd out(2);
  const double va = base.dot(a), vb = base.dot(b);
  out[0] = -basis.zeta1.dot(a) * vb - va * basis.zeta1.dot(b);
  out[1] = -basis.zeta2.dot(a) * vb - va * basis.zeta2.dot(b);
  return out;
}

bool second_order_consistent(const Stratification& model, const Stratification& update) {
  return model.kind == update.kind;
}

}  // namespace msqp
