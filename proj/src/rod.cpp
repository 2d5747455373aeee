#include "msqp/rod.hpp"

#include <cmath>

namespace msqp {

namespace {

constexpr int kNodeDim = 5;  // 3 position + 2 sphere coefficients

Eigen::Vector3d helix_position(double r, double a, double s) {
  const double w = 1.0 / std::sqrt(r * r + a * a);
  return {r * std::cos(w * s), r * std::sin(w * s), a * a * w * s};
}

Eigen::Vector3d helix_tangent(double r, double a, double s) {
  const double w = 1.0 / std::sqrt(r * r + a * a);
  Eigen::Vector3d d{-r * w * std::sin(w * s), r * w * std::cos(w * s), a * a * w};
  return d.normalized();
}

// Retracted sphere values mu_{v_i}(u_i) for the interior nodes.
std::vector<Eigen::Vector3d> retracted_tangents(const RodConfig& cfg, RetractionKind kind,
                                                const TangentCoords& u, const RodState& state) {
  const int interior = cfg.n - 1;
  std::vector<Eigen::Vector3d> mu(static_cast<std::size_t>(interior));
  for (int i = 0; i < interior; ++i) {
    const SpherePoint& v = state.x.sphere[static_cast<std::size_t>(i)];
    const TangentBasis2 basis = sphere_tangent_basis(v);
    mu[static_cast<std::size_t>(i)] =
        sphere_retract(kind, v, basis, u.segment<2>(i * kNodeDim + 3)).v;
  }
  return mu;
}

void check_state(const RodConfig& cfg, const RodState& state) {
  const std::size_t interior = static_cast<std::size_t>(cfg.n - 1);
  if (state.x.euclidean.size() != interior || state.x.sphere.size() != interior)
    throw std::invalid_argument("rod state does not match configuration");
}

}  // namespace

void RodConfig::validate() const {
  if (n < 2) throw std::invalid_argument("rod needs at least two intervals");
  if (!sigma.empty() && static_cast<int>(sigma.size()) != n)
    throw std::invalid_argument("sigma must have one value per interval");
  for (double s : sigma)
    if (!(s > 0.0)) throw std::invalid_argument("stiffness must be positive");
  if (!load.empty() && static_cast<int>(load.size()) != n - 1)
    throw std::invalid_argument("load must have one vector per interior node");
  if (std::abs(v_a.v.norm() - 1.0) > 1e-12 || std::abs(v_b.v.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("boundary tangents must be unit vectors");
}

RodConfig RodConfig::helix(int n, double sigma_value, const Eigen::Vector3d& g, double r,
                           double a) {
  RodConfig cfg;
  cfg.n = n;
  cfg.radius = r;
  cfg.pitch_a = a;
  cfg.sigma.assign(static_cast<std::size_t>(n), sigma_value);
  cfg.load.assign(static_cast<std::size_t>(n - 1), g);
  cfg.y_a = helix_position(r, a, 0.0);
  cfg.y_b = helix_position(r, a, 1.0);
  cfg.v_a = SpherePoint{helix_tangent(r, a, 0.0)};
  cfg.v_b = SpherePoint{helix_tangent(r, a, 1.0)};
  cfg.validate();
  return cfg;
}

RodState helix_initial(const RodConfig& cfg) {
  cfg.validate();
  RodState state;
  const int interior = cfg.n - 1;
  state.x.euclidean.reserve(static_cast<std::size_t>(interior));
  state.x.sphere.reserve(static_cast<std::size_t>(interior));
  for (int i = 1; i <= interior; ++i) {
    const double s = i * cfg.h();
    state.x.euclidean.push_back(helix_position(cfg.radius, cfg.pitch_a, s));
    state.x.sphere.push_back(SpherePoint{helix_tangent(cfg.radius, cfg.pitch_a, s)});
  }
  return state;
}

double energy_eval(const RodConfig& cfg, RetractionKind kind, const TangentCoords& u,
                   const RodState& state) {
  check_state(cfg, state);
  if (u.size() != state.x.tangent_dim())
    throw std::invalid_argument("tangent coordinate length does not match rod");
  const int n = cfg.n;
  const double h = cfg.h();
  const std::vector<Eigen::Vector3d> mu = retracted_tangents(cfg, kind, u, state);

  auto tangent_at = [&](int i) -> Eigen::Vector3d {
    if (i == 0) return cfg.v_a.v;
    if (i == n) return cfg.v_b.v;
    return mu[static_cast<std::size_t>(i - 1)];
  };

  double bending = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d diff = tangent_at(i + 1) - tangent_at(i);
    bending += 0.5 * cfg.sigma_at(i) / h * diff.squaredNorm();
  }
  double load_term = 0.0;
  for (int i = 1; i < n; ++i) {
    const Eigen::Vector3d y =
        state.x.euclidean[static_cast<std::size_t>(i - 1)] + u.segment<3>((i - 1) * kNodeDim);
    load_term += h * cfg.load_at(i).dot(y);
  }
  return bending - load_term;
}

Eigen::VectorXd constraint_eval(const RodConfig& cfg, RetractionKind kind,
                                const TangentCoords& u, const RodState& state) {
  check_state(cfg, state);
  if (u.size() != state.x.tangent_dim())
    throw std::invalid_argument("tangent coordinate length does not match rod");
  const int n = cfg.n;
  const double h = cfg.h();
  const std::vector<Eigen::Vector3d> mu = retracted_tangents(cfg, kind, u, state);

  auto position_at = [&](int i) -> Eigen::Vector3d {
    if (i == 0) return cfg.y_a;
    if (i == n) return cfg.y_b;
    return state.x.euclidean[static_cast<std::size_t>(i - 1)] +
           u.segment<3>((i - 1) * kNodeDim);
  };

  Eigen::VectorXd c(3 * n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d tangent = (i == 0) ? cfg.v_a.v : mu[static_cast<std::size_t>(i - 1)];
    c.segment<3>(3 * i) = (position_at(i + 1) - position_at(i)) / h - tangent;
  }
  return c;
}

EnergyDerivatives energy_derivatives(const RodConfig& cfg, RetractionKind kind,
                                     const RodState& state) {
  check_state(cfg, state);
  const int n = cfg.n;
  const int interior = n - 1;
  const int d = kNodeDim * interior;
  const double h = cfg.h();

  std::vector<TangentBasis2> bases(static_cast<std::size_t>(interior));
  for (int i = 0; i < interior; ++i)
    bases[static_cast<std::size_t>(i)] =
        sphere_tangent_basis(state.x.sphere[static_cast<std::size_t>(i)]);

  auto tangent_value = [&](int node) -> Eigen::Vector3d {
    if (node == 0) return cfg.v_a.v;
    if (node == n) return cfg.v_b.v;
    return state.x.sphere[static_cast<std::size_t>(node - 1)].v;
  };

  EnergyDerivatives out;
  out.gradient = Eigen::VectorXd::Zero(d);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(12 * interior));

  for (int i = 1; i <= interior; ++i) {
    const int base = (i - 1) * kNodeDim;
    out.gradient.segment<3>(base) = -h * cfg.load_at(i);

    // Weighted discrete curvature sigma_i (v_{i+1} - v_i) - sigma_{i-1} (v_i - v_{i-1}).
    const Eigen::Vector3d w = cfg.sigma_at(i) * (tangent_value(i + 1) - tangent_value(i)) -
                              cfg.sigma_at(i - 1) * (tangent_value(i) - tangent_value(i - 1));
    const TangentBasis2& basis = bases[static_cast<std::size_t>(i - 1)];
    const SpherePoint& v = state.x.sphere[static_cast<std::size_t>(i - 1)];

    out.gradient[base + 3] = -basis.zeta1.dot(w) / h;
    out.gradient[base + 4] = -basis.zeta2.dot(w) / h;

    const double diag = (cfg.sigma_at(i) + cfg.sigma_at(i - 1)) / h;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        Eigen::Vector2d ea = Eigen::Vector2d::Zero(), eb = Eigen::Vector2d::Zero();
        ea[a] = 1.0;
        eb[b] = 1.0;
        double val = -sphere_param_second_derivative(kind, v, basis, ea, eb).dot(w) / h;
        if (a == b) val += diag;
        trips.emplace_back(base + 3 + a, base + 3 + b, val);
      }

    if (i >= 2) {
      const TangentBasis2& prev = bases[static_cast<std::size_t>(i - 2)];
      const double s = cfg.sigma_at(i - 1) / h;
      const Eigen::Vector3d zi[2] = {basis.zeta1, basis.zeta2};
      const Eigen::Vector3d zp[2] = {prev.zeta1, prev.zeta2};
      const int prev_base = (i - 2) * kNodeDim;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const double val = -s * zi[a].dot(zp[b]);
          trips.emplace_back(base + 3 + a, prev_base + 3 + b, val);
          trips.emplace_back(prev_base + 3 + b, base + 3 + a, val);
        }
    }
  }

  out.hessian.resize(d, d);
  out.hessian.setFromTriplets(trips.begin(), trips.end());
  return out;
}

ConstraintDerivatives constraint_derivatives(const RodConfig& cfg, RetractionKind kind,
                                             const RodState& state) {
  check_state(cfg, state);
  const int n = cfg.n;
  const int interior = n - 1;
  const int d = kNodeDim * interior;
  const double h = cfg.h();

  ConstraintDerivatives out;
  out.kind = kind;
  out.node_v = state.x.sphere;
  out.node_basis.resize(static_cast<std::size_t>(interior));
  for (int i = 0; i < interior; ++i)
    out.node_basis[static_cast<std::size_t>(i)] = sphere_tangent_basis(out.node_v[static_cast<std::size_t>(i)]);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(12 * n));
  for (int i = 0; i < n; ++i) {
    const int row = 3 * i;
    for (int k = 0; k < 3; ++k) {
      if (i >= 1) trips.emplace_back(row + k, (i - 1) * kNodeDim + k, -1.0 / h);
      if (i + 1 <= interior) trips.emplace_back(row + k, i * kNodeDim + k, 1.0 / h);
    }
    if (i >= 1) {
      const TangentBasis2& basis = out.node_basis[static_cast<std::size_t>(i - 1)];
      const Eigen::Vector3d z[2] = {basis.zeta1, basis.zeta2};
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 3; ++k)
          trips.emplace_back(row + k, (i - 1) * kNodeDim + 3 + j, -z[j][k]);
    }
  }
  out.jacobian.resize(3 * n, d);
  out.jacobian.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SpMat ConstraintDerivatives::second_form(const Eigen::VectorXd& p) const {
  const int interior = static_cast<int>(node_v.size());
  const int d = kNodeDim * interior;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(4 * interior));
  for (int i = 1; i <= interior; ++i) {
    const Eigen::Vector3d pi = p.segment<3>(3 * i);
    const SpherePoint& v = node_v[static_cast<std::size_t>(i - 1)];
    const TangentBasis2& basis = node_basis[static_cast<std::size_t>(i - 1)];
    const int base = (i - 1) * kNodeDim;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        Eigen::Vector2d ea = Eigen::Vector2d::Zero(), eb = Eigen::Vector2d::Zero();
        ea[a] = 1.0;
        eb[b] = 1.0;
        const double val = -pi.dot(sphere_param_second_derivative(kind, v, basis, ea, eb));
        if (val != 0.0) trips.emplace_back(base + 3 + a, base + 3 + b, val);
      }
  }
  SpMat form(d, d);
  form.setFromTriplets(trips.begin(), trips.end());
  return form;
}

namespace {

class RodOracle final : public ProblemOracle {
 public:
  RodOracle(RodConfig cfg, RodState state, RetractionKind model_kind, RetractionKind update_kind)
      : cfg_(std::move(cfg)),
        state_(std::move(state)),
        model_kind_(model_kind),
        update_kind_(update_kind),
        energy_(energy_derivatives(cfg_, model_kind_, state_)),
        constraint_(constraint_derivatives(cfg_, model_kind_, state_)) {
    const TangentCoords zero = TangentCoords::Zero(dim());
    f0_ = energy_eval(cfg_, update_kind_, zero, state_);
    c0_ = constraint_eval(cfg_, update_kind_, zero, state_);
  }

  int dim() const override { return kNodeDim * (cfg_.n - 1); }
  int codim() const override { return 3 * cfg_.n; }

  double f(const TangentCoords& u) const override {
    return energy_eval(cfg_, update_kind_, u, state_);
  }
  Eigen::VectorXd c(const TangentCoords& u) const override {
    return constraint_eval(cfg_, update_kind_, u, state_);
  }
  double f0() const override { return f0_; }
  Eigen::VectorXd c0() const override { return c0_; }

  Eigen::VectorXd grad_f() const override { return energy_.gradient; }
  SpMat jac_c() const override { return constraint_.jacobian; }
  SpMat lagrangian_hessian(const Eigen::VectorXd& p) const override {
    return SpMat(energy_.hessian + constraint_.second_form(p));
  }

  std::unique_ptr<ProblemOracle> rebase(const TangentCoords& step) const override {
    RodState next{product_retract(state_.x, update_kind_, step)};
    return std::make_unique<RodOracle>(cfg_, std::move(next), model_kind_, update_kind_);
  }

  const ProductPoint* point() const override { return &state_.x; }
  RetractionKind model_retraction() const override { return model_kind_; }
  RetractionKind update_retraction() const override { return update_kind_; }

 private:
  RodConfig cfg_;
  RodState state_;
  RetractionKind model_kind_;
  RetractionKind update_kind_;
  EnergyDerivatives energy_;
  ConstraintDerivatives constraint_;
  double f0_ = 0.0;
  Eigen::VectorXd c0_;
};

}  // namespace

std::unique_ptr<ProblemOracle> assemble_problem_oracle(const RodConfig& cfg,
                                                       const RodState& state,
                                                       RetractionKind model_kind,
                                                       RetractionKind update_kind) {
  cfg.validate();
  return std::make_unique<RodOracle>(cfg, state, model_kind, update_kind);
}

}  // namespace msqp
