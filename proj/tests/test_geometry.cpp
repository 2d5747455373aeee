#include "msqp/geometry.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace msqp;
using msqp::testing::Rng;

namespace {

SpherePoint sp(double x, double y, double z) {
  Eigen::Vector3d v(x, y, z);
  return SpherePoint{v.normalized()};
}

}  // namespace

TEST_CASE("tangent basis construction is deterministic and orthonormal") {
  SUBCASE("axis-aligned examples") {
    const TangentBasis2 b1 = sphere_tangent_basis(sp(1, 0, 0));
    CHECK(b1.zeta1.isApprox(Eigen::Vector3d(0, 1, 0), 1e-15));
    CHECK(b1.zeta2.isApprox(Eigen::Vector3d(0, 0, 1), 1e-15));

    const TangentBasis2 b2 = sphere_tangent_basis(sp(0, 0, 1));
    CHECK(b2.zeta1.isApprox(Eigen::Vector3d(1, 0, 0), 1e-15));
    CHECK(b2.zeta2.isApprox(Eigen::Vector3d(0, 1, 0), 1e-15));
  }

  SUBCASE("orthogonality for random points") {
    Rng rng(11);
    for (int k = 0; k < 200; ++k) {
      const SpherePoint v{rng.unit3()};
      const TangentBasis2 b = sphere_tangent_basis(v);
      CHECK(std::abs(b.zeta1.dot(v.v)) < 1e-12);
      CHECK(std::abs(b.zeta2.dot(v.v)) < 1e-12);
      CHECK(std::abs(b.zeta1.dot(b.zeta2)) < 1e-12);
      CHECK(std::abs(b.zeta1.norm() - 1.0) < 1e-12);
      CHECK(std::abs(b.zeta2.norm() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("sphere retractions") {
  const SpherePoint e1 = sp(1, 0, 0);
  const TangentBasis2 basis = sphere_tangent_basis(e1);

  SUBCASE("projection example") {
    const SpherePoint r = sphere_retract(RetractionKind::Projection, e1, basis, {1.0, 0.0});
    CHECK(r.v.isApprox(Eigen::Vector3d(1, 1, 0).normalized(), 1e-14));
  }

  SUBCASE("zero coordinates return the base point") {
    for (auto kind : {RetractionKind::Projection, RetractionKind::Exponential}) {
      const SpherePoint r = sphere_retract(kind, e1, basis, {0.0, 0.0});
      CHECK(r.v.isApprox(e1.v, 1e-15));
    }
  }

  SUBCASE("exponential quarter turn") {
    const SpherePoint r =
        sphere_retract(RetractionKind::Exponential, e1, basis, {M_PI / 2.0, 0.0});
    CHECK(r.v.isApprox(Eigen::Vector3d(0, 1, 0), 1e-14));
  }

  SUBCASE("unit norm for large random tangents") {
    Rng rng(22);
    for (int k = 0; k < 10000; ++k) {
      const SpherePoint v{rng.unit3()};
      const TangentBasis2 b = sphere_tangent_basis(v);
      const Eigen::Vector2d u = rng.vector(2, -10.0, 10.0);
      for (auto kind : {RetractionKind::Projection, RetractionKind::Exponential}) {
        const SpherePoint r = sphere_retract(kind, v, b, u);
        CHECK(std::abs(r.v.norm() - 1.0) < 1e-12);
      }
    }
  }

  SUBCASE("first derivative agreement, observed order >= 2") {
    Rng rng(33);
    for (int k = 0; k < 5; ++k) {
      const SpherePoint v{rng.unit3()};
      const TangentBasis2 b = sphere_tangent_basis(v);
      const Eigen::Vector2d u = rng.vector(2, -1.0, 1.0);
      const Eigen::Vector3d expected = sphere_param_first_derivative(b, u);
      for (auto kind : {RetractionKind::Projection, RetractionKind::Exponential}) {
        auto error_at = [&](double h) {
          const Eigen::Vector3d diff =
              (sphere_retract(kind, v, b, h * u).v - sphere_retract(kind, v, b, -h * u).v) /
              (2.0 * h);
          return (diff - expected).norm();
        };
        const double e1h = error_at(1e-3);
        const double e2h = error_at(5e-4);
        const double order = std::log2(e1h / e2h);
        CHECK(order > 1.9);
      }
    }
  }
}

TEST_CASE("second derivative of the parametrizations") {
  Rng rng(44);
  const SpherePoint v{rng.unit3()};
  const TangentBasis2 b = sphere_tangent_basis(v);

  SUBCASE("projection formula") {
    const Eigen::Vector3d d2 = sphere_param_second_derivative(RetractionKind::Projection, v, b,
                                                              {1.0, 0.0}, {1.0, 0.0});
    CHECK(d2.isApprox(-v.v, 1e-14));
  }

  SUBCASE("bilinearity: zero argument gives zero") {
    for (auto kind : {RetractionKind::Projection, RetractionKind::Exponential}) {
      const Eigen::Vector3d d2 =
          sphere_param_second_derivative(kind, v, b, {0.0, 0.0}, {0.7, -0.3});
      CHECK(d2.norm() == 0.0);
    }
  }

  SUBCASE("matches finite differences of the retraction") {
    const double h = 1e-4;
    for (auto kind : {RetractionKind::Projection, RetractionKind::Exponential}) {
      for (int k = 0; k < 10; ++k) {
        const SpherePoint w{rng.unit3()};
        const TangentBasis2 basis = sphere_tangent_basis(w);
        const Eigen::Vector2d du = rng.vector(2, -1.0, 1.0);
        const Eigen::Vector3d exact = sphere_param_second_derivative(kind, w, basis, du, du);
        const Eigen::Vector3d fd =
            (sphere_retract(kind, w, basis, h * du).v - 2.0 * w.v +
             sphere_retract(kind, w, basis, -h * du).v) /
            (h * h);
        CHECK((fd - exact).norm() <= 1e-6 * (1.0 + exact.norm()));
      }
    }
  }
}

TEST_CASE("retraction discrepancy is second order bounded") {
  Rng rng(55);
  for (int k = 0; k < 10; ++k) {
    const SpherePoint v{rng.unit3()};
    const TangentBasis2 b = sphere_tangent_basis(v);
    const Eigen::Vector2d u = rng.vector(2, -1.0, 1.0);
    double first_ratio = -1.0;
    for (int s = 0; s < 6; ++s) {
      const Eigen::Vector2d us = u / std::pow(2.0, s);
      const double diff = (sphere_retract(RetractionKind::Projection, v, b, us).v -
                           sphere_retract(RetractionKind::Exponential, v, b, us).v)
                              .norm();
      const double ratio = diff / us.squaredNorm();
      if (s == 0) first_ratio = std::max(ratio, 1e-12);
      CHECK(ratio <= 4.0 * first_ratio + 1e-12);
    }
  }
}

TEST_CASE("transition map between the parametrizations") {
  Rng rng(66);
  const SpherePoint v{rng.unit3()};
  const TangentBasis2 b = sphere_tangent_basis(v);

  auto phi = [&](const Eigen::Vector2d& u) {
    const SpherePoint w = sphere_retract(RetractionKind::Exponential, v, b, u);
    return sphere_inverse_projection_retraction(v, w, b);
  };

  CHECK(phi(Eigen::Vector2d::Zero()).norm() < 1e-14);

  // Phi'(0) = id by finite differences.
  const double h = 1e-6;
  Eigen::Matrix2d jac;
  for (int j = 0; j < 2; ++j) {
    Eigen::Vector2d e = Eigen::Vector2d::Zero();
    e[j] = h;
    jac.col(j) = (phi(e) - phi(-e)) / (2.0 * h);
  }
  CHECK((jac - Eigen::Matrix2d::Identity()).norm() < 1e-6);
}

TEST_CASE("inverse projection retraction") {
  const SpherePoint e1 = sp(1, 0, 0);
  const TangentBasis2 basis = sphere_tangent_basis(e1);

  SUBCASE("w equal to v gives zero coordinates") {
    CHECK(sphere_inverse_projection_retraction(e1, e1, basis).norm() == 0.0);
  }

  SUBCASE("hand example") {
    const SpherePoint w = sp(1, 1, 0);
    const Eigen::Vector2d u = sphere_inverse_projection_retraction(e1, w, basis);
    CHECK(u.isApprox(Eigen::Vector2d(1.0, 0.0), 1e-14));
  }

  SUBCASE("antipodal point is outside the domain") {
    CHECK_THROWS_AS(sphere_inverse_projection_retraction(e1, sp(-1, 0, 0), basis),
                    HemisphereDomainError);
  }

  SUBCASE("round trip on the valid hemisphere") {
    Rng rng(77);
    for (int k = 0; k < 500; ++k) {
      const SpherePoint v{rng.unit3()};
      const TangentBasis2 b = sphere_tangent_basis(v);
      const Eigen::Vector2d u = rng.vector(2, -3.0, 3.0);
      const SpherePoint w = sphere_retract(RetractionKind::Projection, v, b, u);
      const Eigen::Vector2d back = sphere_inverse_projection_retraction(v, w, b);
      CHECK((back - u).norm() < 1e-12 * (1.0 + u.norm()));
    }
  }
}

TEST_CASE("product retraction") {
  Rng rng(88);
  ProductPoint x;
  x.euclidean = {Eigen::Vector3d(1, 2, 3)};
  x.sphere = {sp(1, 0, 0)};

  SUBCASE("zero coordinates are the identity") {
    const TangentCoords u = TangentCoords::Zero(5);
    const ProductPoint r = product_retract(x, RetractionKind::Projection, u);
    CHECK(r.euclidean[0].isApprox(x.euclidean[0]));
    CHECK(r.sphere[0].v.isApprox(x.sphere[0].v));
  }

  SUBCASE("pure Euclidean coordinates leave spheres unchanged") {
    TangentCoords u = TangentCoords::Zero(5);
    u.head<3>() = Eigen::Vector3d(0.5, -1.0, 2.0);
    const ProductPoint r = product_retract(x, RetractionKind::Exponential, u);
    CHECK(r.euclidean[0].isApprox(Eigen::Vector3d(1.5, 1.0, 5.0)));
    CHECK(r.sphere[0].v.isApprox(x.sphere[0].v, 1e-15));
  }

  SUBCASE("sphere block delegates to the sphere retraction") {
    TangentCoords u = TangentCoords::Zero(5);
    u[3] = 1.0;
    const ProductPoint r = product_retract(x, RetractionKind::Projection, u);
    CHECK(r.sphere[0].v.isApprox(Eigen::Vector3d(1, 1, 0).normalized(), 1e-14));
  }
}

TEST_CASE("transport") {
  Rng rng(99);
  ProductPoint x1;
  x1.euclidean = {Eigen::Vector3d(0.3, -0.4, 1.0), Eigen::Vector3d(2, 0, 0)};
  x1.sphere = {SpherePoint{rng.unit3()}, SpherePoint{rng.unit3()}};

  SUBCASE("transport to the same point is the identity") {
    const TangentCoords u = rng.vector(x1.tangent_dim(), -0.4, 0.4);
    CHECK((transport(x1, x1, u) - u).norm() < 1e-13);
  }

  SUBCASE("euclidean-only blocks shift by the coordinate difference") {
    ProductPoint a, b;
    a.euclidean = {Eigen::Vector3d(1, 0, 0)};
    b.euclidean = {Eigen::Vector3d(0, 0, 2)};
    TangentCoords u(3);
    u << 0.1, 0.2, 0.3;
    const TangentCoords t = transport(a, b, u);
    CHECK(t.isApprox(u + (a.euclidean[0] - b.euclidean[0]), 1e-15));
  }

  SUBCASE("round trip inverts") {
    ProductPoint x2 = x1;
    // Perturb x2 moderately so all hemisphere conditions hold.
    TangentCoords shift = rng.vector(x1.tangent_dim(), -0.3, 0.3);
    x2 = product_retract(x2, RetractionKind::Projection, shift);
    for (int k = 0; k < 20; ++k) {
      const TangentCoords u = rng.vector(x1.tangent_dim(), -0.3, 0.3);
      const TangentCoords there = transport(x1, x2, u);
      const TangentCoords back = transport(x2, x1, there);
      CHECK((back - u).norm() < 1e-10 * (1.0 + u.norm()));
    }
  }
}
