#include "msqp/kkt.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace msqp;
using msqp::testing::Rng;
using msqp::testing::kernel_basis;

namespace {

SpMat sparse(const Eigen::MatrixXd& m) { return m.sparseView(); }

SpMat identity(int n) {
  SpMat m(n, n);
  m.setIdentity();
  return m;
}

// Random instance with full-row-rank C and H positive definite everywhere.
struct RandomInstance {
  Eigen::MatrixXd H;
  Eigen::MatrixXd C;
};

RandomInstance random_instance(Rng& rng, int d, int m) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  Eigen::MatrixXd h = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd c(m, d);
  while (true) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j) c(i, j) = rng.uniform(-1.0, 1.0);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c);
    if (qr.rank() == m) break;
  }
  return {h, c};
}

}  // namespace

TEST_CASE("solve_saddle hand examples") {
  SUBCASE("coupled constraint") {
    SaddlePointSystem sys;
    sys.H = identity(2);
    sys.C = sparse(Eigen::MatrixXd::Ones(1, 2));
    sys.r1 = Eigen::VectorXd::Zero(2);
    sys.r2 = Eigen::VectorXd::Constant(1, 2.0);
    const KktSolution sol = solve_saddle(sys);
    CHECK(sol.step.isApprox(Eigen::Vector2d(-1, -1), 1e-12));
    CHECK(sol.multiplier.isApprox(Eigen::VectorXd::Constant(1, 1.0), 1e-12));
  }

  SUBCASE("homogeneous system") {
    SaddlePointSystem sys;
    sys.H = identity(2);
    sys.C = sparse(Eigen::MatrixXd::Ones(1, 2));
    sys.r1 = Eigen::VectorXd::Zero(2);
    sys.r2 = Eigen::VectorXd::Zero(1);
    const KktSolution sol = solve_saddle(sys);
    CHECK(sol.step.norm() == 0.0);
    CHECK(sol.multiplier.norm() == 0.0);
  }

  SUBCASE("step lies in the kernel") {
    SaddlePointSystem sys;
    sys.H = identity(2);
    Eigen::MatrixXd c(1, 2);
    c << 0, 1;
    sys.C = sparse(c);
    sys.r1 = Eigen::Vector2d(1, 0);
    sys.r2 = Eigen::VectorXd::Zero(1);
    const KktSolution sol = solve_saddle(sys);
    CHECK(sol.step.isApprox(Eigen::Vector2d(-1, 0), 1e-12));
    CHECK(sol.multiplier.norm() < 1e-12);
  }

  SUBCASE("asymmetric H is rejected") {
    SaddlePointSystem sys;
    Eigen::MatrixXd h(2, 2);
    h << 1, 1, 0, 1;
    sys.H = sparse(h);
    sys.C = sparse(Eigen::MatrixXd::Ones(1, 2));
    sys.r1 = Eigen::VectorXd::Zero(2);
    sys.r2 = Eigen::VectorXd::Zero(1);
    CHECK_THROWS_AS(solve_saddle(sys), std::invalid_argument);
  }
}

TEST_CASE("normal step") {
  SUBCASE("single coordinate") {
    Eigen::MatrixXd c(1, 2);
    c << 1, 0;
    const Eigen::VectorXd dn = normal_step(sparse(c), identity(2),
                                           Eigen::VectorXd::Constant(1, 1.0));
    CHECK(dn.isApprox(Eigen::Vector2d(-1, 0), 1e-12));
  }

  SUBCASE("feasible origin") {
    Eigen::MatrixXd c(1, 2);
    c << 1, 1;
    const Eigen::VectorXd dn = normal_step(sparse(c), identity(2), Eigen::VectorXd::Zero(1));
    CHECK(dn.norm() == 0.0);
  }

  SUBCASE("minimal norm on the feasible line") {
    Eigen::MatrixXd c(1, 2);
    c << 1, 1;
    const Eigen::VectorXd dn = normal_step(sparse(c), identity(2),
                                           Eigen::VectorXd::Constant(1, 2.0));
    CHECK(dn.isApprox(Eigen::Vector2d(-1, -1), 1e-12));
  }

  SUBCASE("rank deficient C") {
    Eigen::MatrixXd c(2, 2);
    c << 1, 0, 1, 0;
    CHECK_THROWS_AS(normal_step(sparse(c), identity(2), Eigen::VectorXd::Ones(2)),
                    RankDeficientError);
  }
}

TEST_CASE("lagrange multiplier") {
  Eigen::MatrixXd c(1, 2);
  c << 0, 1;

  SUBCASE("gradient in the kernel") {
    auto [v, p] = lagrange_multiplier(sparse(c), identity(2), Eigen::Vector2d(1, 0));
    CHECK(p.norm() < 1e-12);
    CHECK(v.isApprox(Eigen::Vector2d(-1, 0), 1e-12));
  }

  SUBCASE("homogeneous") {
    auto [v, p] = lagrange_multiplier(sparse(c), identity(2), Eigen::Vector2d(0, 0));
    CHECK(v.norm() == 0.0);
    CHECK(p.norm() == 0.0);
  }

  SUBCASE("gradient in the range of C^T") {
    auto [v, p] = lagrange_multiplier(sparse(c), identity(2), Eigen::Vector2d(0, 1));
    CHECK(p.isApprox(Eigen::VectorXd::Constant(1, -1.0), 1e-12));
    CHECK(v.norm() < 1e-12);
  }
}

TEST_CASE("tangential step") {
  Eigen::MatrixXd c(1, 2);
  c << 0, 1;

  SUBCASE("hand example") {
    auto [dt, dp] = tangential_step(identity(2), sparse(c), Eigen::Vector2d(1, 0));
    CHECK(dt.isApprox(Eigen::Vector2d(-1, 0), 1e-12));
  }

  SUBCASE("zero right-hand side") {
    auto [dt, dp] = tangential_step(identity(2), sparse(c), Eigen::Vector2d(0, 0));
    CHECK(dt.norm() == 0.0);
    CHECK(dp.norm() == 0.0);
  }

  SUBCASE("indefinite Hessian on the kernel is reported") {
    Eigen::MatrixXd h = -Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(tangential_step(sparse(h), sparse(c), Eigen::Vector2d(1, 0)),
                    IndefiniteOnKernelError);
  }
}

TEST_CASE("splitting consistency: normal plus tangential equals the full step") {
  Rng rng(123);
  for (int inst = 0; inst < 25; ++inst) {
    const auto [H, C] = random_instance(rng, 5, 2);
    const Eigen::VectorXd fp = rng.vector(5, -1.0, 1.0);
    const Eigen::VectorXd c0 = rng.vector(2, -1.0, 1.0);

    const Eigen::VectorXd dn = normal_step(sparse(C), identity(5), c0);
    auto [v, p] = lagrange_multiplier(sparse(C), identity(5), fp);
    const Eigen::VectorXd rhs = fp + C.transpose() * p + H * dn;
    auto [dt, dp_t] = tangential_step(sparse(H), sparse(C), rhs);

    SaddlePointSystem sys;
    sys.H = sparse(H);
    sys.C = sparse(C);
    sys.r1 = fp + C.transpose() * p;
    sys.r2 = c0;
    const KktSolution full = solve_saddle(sys);

    CHECK((dn + dt - full.step).norm() < 1e-8 * (1.0 + full.step.norm()));
    CHECK((dp_t - full.multiplier).norm() < 1e-8 * (1.0 + full.multiplier.norm()));
    CHECK(full.residual_norm <= 1e-9 * (1.0 + sys.r1.norm() + sys.r2.norm()));
    // dt in ker C, dn orthogonal to it.
    CHECK((C * dt).norm() < 1e-9);
    CHECK(std::abs(dn.dot(dt)) < 1e-9);
  }
}

TEST_CASE("oracle equivalence on random instances") {
  Rng rng(321);
  for (int inst = 0; inst < 100; ++inst) {
    const int d = 2 + static_cast<int>(rng.uniform(0.0, 6.999));
    const int m = 1 + static_cast<int>(rng.uniform(0.0, std::min(2, d - 1) + 0.999));
    const auto [H, C] = random_instance(rng, d, m);
    const Eigen::VectorXd c0 = rng.vector(m, -1.0, 1.0);
    const Eigen::VectorXd fp = rng.vector(d, -1.0, 1.0);

    // Pseudo-inverse oracle for the minimal-norm normal step.
    const Eigen::MatrixXd pinv =
        C.transpose() * (C * C.transpose()).ldlt().solve(Eigen::MatrixXd::Identity(m, m));
    const Eigen::VectorXd dn_oracle = -pinv * c0;
    const Eigen::VectorXd dn = normal_step(sparse(C), identity(d), c0);
    CHECK((dn - dn_oracle).norm() <= 1e-8 * (1.0 + dn_oracle.norm()));

    // Multiplier oracle: p = -(C C^T)^-1 C f'.
    const Eigen::VectorXd p_oracle = -(C * C.transpose()).ldlt().solve(C * fp);
    auto [v, p] = lagrange_multiplier(sparse(C), identity(d), fp);
    CHECK((p - p_oracle).norm() <= 1e-8 * (1.0 + p_oracle.norm()));

    // Tangential oracle: reduced solve in a kernel basis.
    const Eigen::VectorXd rhs = rng.vector(d, -1.0, 1.0);
    const Eigen::MatrixXd Z = kernel_basis(C);
    const Eigen::VectorXd alpha = (Z.transpose() * H * Z).ldlt().solve(-Z.transpose() * rhs);
    const Eigen::VectorXd dt_oracle = Z * alpha;
    auto [dt, dp] = tangential_step(sparse(H), sparse(C), rhs);
    CHECK((dt - dt_oracle).norm() <= 1e-8 * (1.0 + dt_oracle.norm()));
  }
}

TEST_CASE("pseudo-inverse identity C c'(0)^- = id") {
  Rng rng(55);
  for (int inst = 0; inst < 20; ++inst) {
    const auto [H, C] = random_instance(rng, 6, 3);
    const Eigen::VectorXd g = rng.vector(3, -2.0, 2.0);
    // normal_step solves C w + g = 0, so C (-w) = g.
    const Eigen::VectorXd w = normal_step(sparse(C), identity(6), g);
    CHECK((C * (-w) - g).norm() <= 1e-9 * (1.0 + g.norm()));
  }
}

TEST_CASE("minimum norm property of the multiplier") {
  Rng rng(77);
  const auto [H, C] = random_instance(rng, 6, 2);
  const Eigen::VectorXd fp = rng.vector(6, -1.0, 1.0);
  auto [v, p_star] = lagrange_multiplier(sparse(C), identity(6), fp);
  const double optimal = (fp + C.transpose() * p_star).norm();
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd p = rng.vector(2, -5.0, 5.0);
    CHECK(optimal <= (fp + C.transpose() * p).norm() + 1e-12);
  }
}

TEST_CASE("hessian regularization") {
  Eigen::MatrixXd c(1, 2);
  c << 0, 1;

  SUBCASE("positive definite H is unchanged") {
    const SpMat reg = hessian_regularize(identity(2), sparse(c));
    CHECK((Eigen::MatrixXd(reg) - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
  }

  SUBCASE("negative definite H gets the smallest certified shift") {
    const SpMat h = sparse(-Eigen::MatrixXd::Identity(2, 2));
    const SpMat reg = hessian_regularize(h, sparse(c));
    const double lambda = Eigen::MatrixXd(reg)(0, 0) + 1.0;
    // Kernel is span{e1}; need lambda > 1, and lambda must be the first
    // schedule value 2^k * lambda0 exceeding it.
    CHECK(lambda > 1.0);
    const double lambda0 = 1e-8 * 2.0;
    CHECK(lambda / 2.0 <= 1.0 + 1e-9);  // previous schedule value failed
    const double k = std::log2(lambda / lambda0);
    CHECK(std::abs(k - std::round(k)) < 1e-9);

    // Accepted by tangential_step without IndefiniteOnKernel.
    auto [dt, dp] = tangential_step(reg, sparse(c), Eigen::Vector2d(1, 0));
    CHECK((c * dt).norm() < 1e-12);
  }
}
