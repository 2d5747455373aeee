#include "msqp/kkt.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace msqp {

namespace {

constexpr double kPivotRelTol = 1e-12;

struct Entry {
  int row;
  int col;
  double value;
};

// Reverse Cuthill-McKee on the adjacency of the assembled operator.
// Deterministic: start nodes and neighbour visits are ordered by
// (degree, index).
std::vector<int> rcm_ordering(int n, const std::vector<Entry>& entries) {
  std::vector<std::vector<int>> adj(n);
  for (const Entry& e : entries) {
    if (e.row != e.col) {
      adj[e.row].push_back(e.col);
      adj[e.col].push_back(e.row);
    }
  }
  for (auto& nb : adj) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  auto degree = [&](int i) { return static_cast<int>(adj[i].size()); };

  std::vector<int> order;
  order.reserve(n);
  std::vector<char> visited(n, 0);
  std::vector<int> start_candidates(n);
  std::iota(start_candidates.begin(), start_candidates.end(), 0);
  std::stable_sort(start_candidates.begin(), start_candidates.end(),
                   [&](int a, int b) { return degree(a) < degree(b); });

  std::vector<int> queue;
  for (int start : start_candidates) {
    if (visited[start]) continue;
    queue.clear();
    queue.push_back(start);
    visited[start] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      int node = queue[head];
      order.push_back(node);
      std::vector<int> next;
      for (int nb : adj[node])
        if (!visited[nb]) next.push_back(nb);
      std::stable_sort(next.begin(), next.end(),
                       [&](int a, int b) { return degree(a) < degree(b); });
      for (int nb : next) {
        visited[nb] = 1;
        queue.push_back(nb);
      }
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

}  // namespace

struct SaddleFactorization::Impl {
  int d = 0;
  int m = 0;
  int n = 0;
  SpMat H;
  SpMat C;
  std::vector<Entry> permuted;  // entries of P K P^T
  SpMat permuted_mat;           // same entries as a queryable matrix
  std::vector<int> perm;        // perm[new] = old
  std::vector<int> inv_perm;    // inv_perm[old] = new
  int kl = 0;
  std::vector<double> band_lu;  // dgbtrf storage, ldab = 3*kl + 1
  std::vector<lapack_int> ipiv;
  bool is_singular = false;
  mutable std::optional<Inertia> cached_inertia;

  Eigen::MatrixXd dense_block(int r0, int c0, int nr, int nc) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nr, nc);
    for (int j = c0; j < c0 + nc; ++j)
      for (SpMat::InnerIterator it(permuted_mat, j); it; ++it) {
        const int i = static_cast<int>(it.row());
        if (i >= r0 && i < r0 + nr) out(i - r0, j - c0) = it.value();
      }
    return out;
  }

  double gershgorin_scale() const {
    std::vector<double> row_sum(static_cast<std::size_t>(n), 0.0);
    for (const Entry& e : permuted) row_sum[static_cast<std::size_t>(e.row)] += std::abs(e.value);
    double scale = 1.0;
    for (double r : row_sum) scale = std::max(scale, r);
    return scale;
  }

  Inertia inertia_sturm(double zero_tol) const;

  Eigen::VectorXd apply_kkt(const Eigen::VectorXd& z) const {
    Eigen::VectorXd out(n);
    out.head(d) = H * z.head(d) + C.transpose() * z.tail(m);
    out.tail(m) = C * z.head(d);
    return out;
  }

  // Solve K z = b via the banded LU of the permuted operator.
  Eigen::VectorXd lu_solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd pb(n);
    for (int i = 0; i < n; ++i) pb[i] = b[perm[i]];
    lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, kl, kl, 1,
                                     band_lu.data(), 3 * kl + 1,
                                     ipiv.data(), pb.data(), n);
    if (info != 0) throw SolverError("banded triangular solve failed");
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[perm[i]] = pb[i];
    return z;
  }
};

SaddleFactorization::SaddleFactorization(const SpMat& H, const SpMat& C)
    : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  s.d = static_cast<int>(H.rows());
  s.m = static_cast<int>(C.rows());
  s.n = s.d + s.m;
  if (H.cols() != s.d || C.cols() != s.d)
    throw std::invalid_argument("saddle-point blocks have inconsistent dimensions");
  s.H = H;
  s.C = C;

  std::vector<Entry> entries;
  entries.reserve(H.nonZeros() + 2 * C.nonZeros());
  for (int k = 0; k < H.outerSize(); ++k)
    for (SpMat::InnerIterator it(H, k); it; ++it)
      entries.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
  for (int k = 0; k < C.outerSize(); ++k)
    for (SpMat::InnerIterator it(C, k); it; ++it) {
      entries.push_back({s.d + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
      entries.push_back({static_cast<int>(it.col()), s.d + static_cast<int>(it.row()), it.value()});
    }

  s.perm = rcm_ordering(s.n, entries);
  s.inv_perm.resize(s.n);
  for (int i = 0; i < s.n; ++i) s.inv_perm[s.perm[i]] = i;

  s.permuted.reserve(entries.size());
  int bw = 0;
  for (const Entry& e : entries) {
    Entry pe{s.inv_perm[e.row], s.inv_perm[e.col], e.value};
    bw = std::max(bw, std::abs(pe.row - pe.col));
    s.permuted.push_back(pe);
  }
  s.kl = bw;
  {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(s.permuted.size());
    for (const Entry& e : s.permuted) trips.emplace_back(e.row, e.col, e.value);
    s.permuted_mat.resize(s.n, s.n);
    s.permuted_mat.setFromTriplets(trips.begin(), trips.end());
  }

  const int ldab = 3 * s.kl + 1;
  s.band_lu.assign(static_cast<std::size_t>(ldab) * s.n, 0.0);
  for (const Entry& e : s.permuted)
    s.band_lu[static_cast<std::size_t>(e.col) * ldab + (2 * s.kl + e.row - e.col)] += e.value;

  s.ipiv.resize(s.n);
  lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, s.n, s.n, s.kl, s.kl,
                                   s.band_lu.data(), ldab, s.ipiv.data());
  if (info < 0) throw SolverError("invalid argument to banded factorization");
  if (info > 0) {
    s.is_singular = true;
    return;
  }
  double max_piv = 0.0, min_piv = std::numeric_limits<double>::infinity();
  for (int j = 0; j < s.n; ++j) {
    const double u = std::abs(s.band_lu[static_cast<std::size_t>(j) * ldab + 2 * s.kl]);
    max_piv = std::max(max_piv, u);
    min_piv = std::min(min_piv, u);
  }
  s.is_singular = (min_piv <= kPivotRelTol * max_piv);
}

SaddleFactorization::~SaddleFactorization() = default;
SaddleFactorization::SaddleFactorization(SaddleFactorization&&) noexcept = default;
SaddleFactorization& SaddleFactorization::operator=(SaddleFactorization&&) noexcept = default;

int SaddleFactorization::dim() const { return impl_->d; }
int SaddleFactorization::codim() const { return impl_->m; }
bool SaddleFactorization::singular() const { return impl_->is_singular; }

namespace {

// Number of eigenvalues of the symmetric tridiagonal (diag, off) strictly
// below t, by the Sturm sign-count recurrence with the usual pivot guard.
int sturm_count_below(const std::vector<double>& diag, const std::vector<double>& off,
                      double t, double pivmin) {
  int count = 0;
  double x = diag[0] - t;
  if (x < 0.0) ++count;
  for (std::size_t i = 1; i < diag.size(); ++i) {
    if (std::abs(x) < pivmin) x = (x < 0.0 ? -pivmin : pivmin);
    x = diag[i] - t - off[i - 1] * off[i - 1] / x;
    if (x < 0.0) ++count;
  }
  return count;
}

void count_eigs(const Eigen::VectorXd& eigs, double zero_tol, Inertia& acc) {
  for (int i = 0; i < eigs.size(); ++i) {
    if (eigs[i] > zero_tol)
      ++acc.n_pos;
    else if (eigs[i] < -zero_tol)
      ++acc.n_neg;
    else
      ++acc.n_zero;
  }
}

}  // namespace

// Exact but O(n^2 kd): reduce the band to tridiagonal form and count
// eigenvalue signs by Sturm sequences. Fallback for the rare case where the
// fast block elimination meets an unresolvable near-singular pivot block.
Inertia SaddleFactorization::Impl::inertia_sturm(double zero_tol) const {
  const int kd = kl;
  const int ldab = kd + 1;
  std::vector<double> band(static_cast<std::size_t>(ldab) * n, 0.0);
  for (const Entry& e : permuted)
    if (e.row >= e.col)
      band[static_cast<std::size_t>(e.col) * ldab + (e.row - e.col)] += e.value;

  std::vector<double> diag(static_cast<std::size_t>(n));
  std::vector<double> off(static_cast<std::size_t>(std::max(n - 1, 1)), 0.0);
  double q_dummy = 0.0;
  lapack_int info = LAPACKE_dsbtrd(LAPACK_COL_MAJOR, 'N', 'L', n, kd, band.data(), ldab,
                                   diag.data(), off.data(), &q_dummy, 1);
  if (info != 0) throw SolverError("band tridiagonalization failed");

  double max_off2 = 0.0;
  for (double e : off) max_off2 = std::max(max_off2, e * e);
  const double pivmin = std::numeric_limits<double>::min() /
                        std::numeric_limits<double>::epsilon() * std::max(max_off2, 1.0);

  Inertia res;
  res.n_neg = sturm_count_below(diag, off, -zero_tol, pivmin);
  const int below_pos = sturm_count_below(diag, off, zero_tol, pivmin);
  res.n_zero = below_pos - res.n_neg;
  res.n_pos = n - below_pos;
  return res;
}

Inertia SaddleFactorization::inertia() const {
  Impl& s = *impl_;
  if (s.cached_inertia) return *s.cached_inertia;
  const double zero_tol = kPivotRelTol * s.gershgorin_scale();

  if (s.n <= 256) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.dense_block(0, 0, s.n, s.n),
                                                       Eigen::EigenvaluesOnly);
    Inertia res;
    count_eigs(eig.eigenvalues(), zero_tol, res);
    s.cached_inertia = res;
    return res;
  }

  // Block elimination: with pivot blocks at least as large as the bandwidth
  // the operator is block tridiagonal, and by congruence the inertia is the
  // sum of the Schur pivot-block inertias. A near-singular pivot block is
  // first enlarged; if one persists, fall back to the exact Sturm count.
  const int block = std::max(s.kl, 8);
  Inertia res;
  int pos = 0;
  Eigen::MatrixXd carry;  // Schur correction for the rows right of pos
  bool fallback = false;
  while (pos < s.n && !fallback) {
    int bs = std::min(block, s.n - pos);
    Eigen::MatrixXd pivot_block;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    for (int attempt = 0;; ++attempt) {
      pivot_block = s.dense_block(pos, pos, bs, bs);
      if (carry.size() > 0)
        pivot_block.topLeftCorner(carry.rows(), carry.cols()) += carry;
      eig.compute(pivot_block);
      const double min_abs = eig.eigenvalues().cwiseAbs().minCoeff();
      if (min_abs > zero_tol || pos + bs == s.n) break;
      if (attempt >= 8) {
        fallback = true;
        break;
      }
      bs = std::min(bs + block, s.n - pos);
    }
    if (fallback) break;
    count_eigs(eig.eigenvalues(), zero_tol, res);
    pos += bs;
    if (pos < s.n) {
      const int nr = std::min(s.kl, s.n - pos);
      const Eigen::MatrixXd coupling = s.dense_block(pos, pos - bs, nr, bs);
      carry = -coupling * eig.eigenvectors() *
              eig.eigenvalues().cwiseInverse().asDiagonal() *
              eig.eigenvectors().transpose() * coupling.transpose();
    }
  }

  if (fallback) res = s.inertia_sturm(zero_tol);
  s.cached_inertia = res;
  return res;
}

bool SaddleFactorization::positive_on_kernel() const {
  if (impl_->is_singular) return false;
  const Inertia in = inertia();
  return in.n_zero == 0 && in.n_neg == impl_->m;
}

namespace detail {

// Failure classification: a singular operator stems either from a
// rank-deficient C (violated surjectivity) or from a Hessian that is
// singular/indefinite on ker C.
[[noreturn]] void throw_classified(const SpMat& C) {
  Eigen::MatrixXd dense = Eigen::MatrixXd(C);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dense);
  if (qr.rank() < C.rows()) throw RankDeficientError();
  throw IndefiniteOnKernelError();
}

}  // namespace detail

KktSolution SaddleFactorization::solve(const Eigen::VectorXd& r1,
                                       const Eigen::VectorXd& r2) const {
  const Impl& s = *impl_;
  if (r1.size() != s.d || r2.size() != s.m)
    throw std::invalid_argument("right-hand side dimensions do not match");
  if (s.is_singular) detail::throw_classified(s.C);

  Eigen::VectorXd b(s.n);
  b.head(s.d) = -r1;
  b.tail(s.m) = -r2;
  Eigen::VectorXd z = s.lu_solve(b);

  const double scale = 1.0 + b.norm();
  Eigen::VectorXd res = s.apply_kkt(z) - b;
  if (res.norm() > 1e-13 * scale) {
    z -= s.lu_solve(res);
    res = s.apply_kkt(z) - b;
  }

  KktSolution sol;
  sol.step = z.head(s.d);
  sol.multiplier = z.tail(s.m);
  sol.residual_norm = res.norm();
  return sol;
}

KktSolution solve_saddle(const SaddlePointSystem& sys) {
  const int d = static_cast<int>(sys.H.rows());
  double asym = 0.0, scale = 0.0;
  Eigen::MatrixXd Hd(sys.H);
  asym = (Hd - Hd.transpose()).cwiseAbs().maxCoeff();
  scale = Hd.cwiseAbs().maxCoeff();
  if (sys.H.cols() != d || asym > 1e-12 * std::max(1.0, scale))
    throw std::invalid_argument("H block must be symmetric");

  SaddleFactorization fact(sys.H, sys.C);
  if (fact.singular()) detail::throw_classified(sys.C);
  if (!fact.positive_on_kernel()) throw IndefiniteOnKernelError();
  return fact.solve(sys.r1, sys.r2);
}

Eigen::VectorXd normal_step(const SpMat& C, const SpMat& metric, const Eigen::VectorXd& c0) {
  SaddleFactorization fact(metric, C);
  if (fact.singular()) throw RankDeficientError();
  return fact.solve(Eigen::VectorXd::Zero(C.cols()), c0).step;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> lagrange_multiplier(const SpMat& C,
                                                                const SpMat& metric,
                                                                const Eigen::VectorXd& fprime) {
  SaddleFactorization fact(metric, C);
  if (fact.singular()) throw RankDeficientError();
  KktSolution sol = fact.solve(fprime, Eigen::VectorXd::Zero(C.rows()));
  return {sol.step, sol.multiplier};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> tangential_step(const SpMat& H, const SpMat& C,
                                                            const Eigen::VectorXd& rhs) {
  SaddleFactorization fact(H, C);
  if (fact.singular()) detail::throw_classified(C);
  if (!fact.positive_on_kernel()) throw IndefiniteOnKernelError();
  KktSolution sol = fact.solve(rhs, Eigen::VectorXd::Zero(C.rows()));
  return {sol.step, sol.multiplier};
}

SpMat hessian_regularize(const SpMat& H, const SpMat& C) {
  const int d = static_cast<int>(H.rows());
  double hmax = 0.0;
  for (int k = 0; k < H.outerSize(); ++k)
    for (SpMat::InnerIterator it(H, k); it; ++it) hmax = std::max(hmax, std::abs(it.value()));

  SpMat identity(d, d);
  identity.setIdentity();

  const double lambda0 = 1e-8 * (1.0 + hmax);
  double lambda = 0.0;
  for (int attempt = 0; attempt <= 60; ++attempt) {
    SpMat reg = H;
    if (lambda > 0.0) reg = H + lambda * identity;
    SaddleFactorization fact(reg, C);
    if (!fact.singular() && fact.positive_on_kernel()) return reg;
    lambda = (attempt == 0) ? lambda0 : 2.0 * lambda;
  }
  throw UnboundedRegularizationError();
}

}  // namespace msqp
