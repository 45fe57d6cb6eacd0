#pragma once

// Homogeneous linear model machinery: scatter assembly, partitioned
// constraint, Schur-reduced generalised eigensolve, generalised inverses and
// coefficient covariance. Everything here is dimension-generic; the conic
// layer instantiates it at M = 6, R = 5.

#include "conicfit/error.hpp"
#include "conicfit/jacobi.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace conicfit {

template <typename Scalar, int M>
using ModelVector = Eigen::Matrix<Scalar, M, 1>;

template <typename Scalar, int M>
using SymMatrix = Eigen::Matrix<Scalar, M, M>;

template <typename Scalar, int M>
struct ScatterMatrix {
  SymMatrix<Scalar, M> s;
  bool weights_applied = false;
};

/// Blocks of a scatter matrix partitioned at the constraint rank R.
template <typename Scalar, int M, int R>
struct SchurBlocks {
  static constexpr int K = M - R;
  Eigen::Matrix<Scalar, R, R> reduced;  // S11 - S12 S22^-1 S21
  Eigen::Matrix<Scalar, K, R> s21;
  Eigen::Matrix<Scalar, K, K> s22_inv;
};

template <typename Scalar, int R>
struct ReducedEigen {
  Eigen::Matrix<Scalar, R, 1> lambdas;  // ascending
  Eigen::Matrix<Scalar, R, R> vectors;  // columns, C~-orthonormal
};

/// All R eigenpairs of S G = lambda C G for a partitioned C.
template <typename Scalar, int M, int R>
struct EigenSolution {
  static constexpr int K = M - R;
  Eigen::Matrix<Scalar, R, 1> lambdas;          // ascending
  Eigen::Matrix<Scalar, R, R> reduced_vectors;  // G~_m as columns
  Eigen::Matrix<Scalar, M, R> vectors;          // full G_m = (G~_m; H~_m)
  Eigen::Matrix<Scalar, K, R> s21;
  Eigen::Matrix<Scalar, K, K> s22_inv;

  ModelVector<Scalar, M> vector(int m) const { return vectors.col(m); }
};

namespace detail {

template <typename Scalar, int M>
bool lexicographic_less(const ModelVector<Scalar, M>& a, const ModelVector<Scalar, M>& b) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a(k) < b(k)) return true;
    if (b(k) < a(k)) return false;
  }
  return false;
}

/// Summation order used for every data sum: sorted by design vector (then
/// weight), so the result does not depend on the order points were given in.
template <typename Scalar, int M>
std::vector<std::size_t> canonical_order(std::span<const ModelVector<Scalar, M>> keys,
                                         std::span<const Scalar> weights) {
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (lexicographic_less<Scalar, M>(keys[i], keys[j])) return true;
    if (lexicographic_less<Scalar, M>(keys[j], keys[i])) return false;
    return weights[i] < weights[j];
  });
  return order;
}

/// Pairwise (cascade) summation of term(i) over the indices in `order`.
template <typename Mat, typename Term>
Mat pairwise_sum(std::span<const std::size_t> order, const Term& term) {
  if (order.size() <= 8) {
    Mat acc = Mat::Zero();
    for (std::size_t idx : order) acc += term(idx);
    return acc;
  }
  const std::size_t half = order.size() / 2;
  return pairwise_sum<Mat>(order.first(half), term) + pairwise_sum<Mat>(order.subspan(half), term);
}

template <typename Derived>
typename Derived::PlainObject symmetrized(const Eigen::MatrixBase<Derived>& a) {
  return (a + a.transpose()) / typename Derived::Scalar(2);
}

}  // namespace detail

/// First component of largest magnitude made positive (lowest index wins ties).
template <typename Derived>
typename Derived::PlainObject canonical_sign(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k)
    if (std::abs(v(k)) > std::abs(v(best))) best = k;
  typename Derived::PlainObject out = v;
  if (out(best) < 0) out = -out;
  return out;
}

/// S = sum_i w_i D_i D_i^T, accumulated pairwise in canonical order and
/// mirrored from the upper triangle.
template <typename Scalar, int M>
ScatterMatrix<Scalar, M> build_scatter(std::span<const ModelVector<Scalar, M>> designs,
                                       std::span<const Scalar> weights) {
  if (designs.empty()) fail_input("no data");
  if (designs.size() != weights.size()) fail_input("designs and weights differ in length");
  bool unit = true;
  for (std::size_t i = 0; i < designs.size(); ++i) {
    if (!(weights[i] > 0) || !std::isfinite(weights[i])) fail_input("invalid weight");
    if (!designs[i].allFinite()) fail_input("non-finite design vector");
    unit = unit && weights[i] == Scalar(1);
  }

  const auto order = detail::canonical_order<Scalar, M>(designs, weights);
  const SymMatrix<Scalar, M> upper = detail::pairwise_sum<SymMatrix<Scalar, M>>(
      order, [&](std::size_t i) -> SymMatrix<Scalar, M> {
        return (weights[i] * designs[i]) * designs[i].transpose();
      });

  ScatterMatrix<Scalar, M> out;
  out.s = upper.template selfadjointView<Eigen::Upper>();
  out.weights_applied = !unit;
  return out;
}

// Exposed for the conic layer, which sums over the same points.
template <typename Scalar, int M>
std::vector<std::size_t> canonical_order(std::span<const ModelVector<Scalar, M>> designs,
                                         std::span<const Scalar> weights) {
  return detail::canonical_order<Scalar, M>(designs, weights);
}

template <int R, typename Scalar, int M>
SchurBlocks<Scalar, M, R> schur_reduce(const SymMatrix<Scalar, M>& s) {
  static_assert(R >= 1 && R <= M);
  constexpr int K = M - R;
  SchurBlocks<Scalar, M, R> out;
  if constexpr (K == 0) {
    out.reduced = s;
  } else {
    const Eigen::Matrix<Scalar, K, K> s22 = s.template bottomRightCorner<K, K>();
    const auto spectrum = jacobi_eigen<Scalar, K>(s22);
    const Scalar lo = spectrum.values(0), hi = spectrum.values(K - 1);
    if (!(lo > 0) || !(hi < Scalar(1e12) * lo)) fail_numerical("degenerate data for reduction");

    out.s22_inv = detail::symmetrized(
        s22.llt().solve(Eigen::Matrix<Scalar, K, K>::Identity()).eval());
    out.s21 = s.template bottomLeftCorner<K, R>();
    const Eigen::Matrix<Scalar, R, R> reduced =
        s.template topLeftCorner<R, R>() - out.s21.transpose() * out.s22_inv * out.s21;
    out.reduced = detail::symmetrized(reduced);
  }
  return out;
}

/// Solves S~ G~ = lambda C~ G~ by factoring C~ = J J^T and diagonalising the
/// standard problem J^-1 S~ J^-T with cyclic Jacobi; vectors map back by J^-T.
template <typename Scalar, int R>
ReducedEigen<Scalar, R> solve_reduced_eigen(const Eigen::Matrix<Scalar, R, R>& s_tilde,
                                            const Eigen::Matrix<Scalar, R, R>& c_tilde) {
  using Mat = Eigen::Matrix<Scalar, R, R>;
  const auto c_spec = jacobi_eigen<Scalar, R>(c_tilde);
  if (!(c_spec.values(0) > Scalar(1e-12) * c_tilde.trace()))
    fail_numerical("invalid normalization matrix");

  const Eigen::LLT<Mat> llt(c_tilde);
  const Mat l = llt.matrixL();
  const Mat left = l.template triangularView<Eigen::Lower>().solve(s_tilde);
  const Mat both = l.template triangularView<Eigen::Lower>().solve(left.transpose());
  const auto std_eig = jacobi_eigen<Scalar, R>(detail::symmetrized(both));

  ReducedEigen<Scalar, R> out;
  out.lambdas = std_eig.values;
  out.vectors = l.transpose().template triangularView<Eigen::Upper>().solve(std_eig.vectors);
  return out;
}

/// Appends H~ = -S22^-1 S21 G~ to a reduced eigenvector.
template <typename Scalar, int M, int R>
ModelVector<Scalar, M> reconstruct_full(const Eigen::Matrix<Scalar, R, 1>& g_tilde,
                                        const Eigen::Matrix<Scalar, M - R, R>& s21,
                                        const Eigen::Matrix<Scalar, M - R, M - R>& s22_inv) {
  ModelVector<Scalar, M> g;
  g.template head<R>() = g_tilde;
  if constexpr (M > R) g.template tail<M - R>() = -s22_inv * s21 * g_tilde;
  return g;
}

/// Full generalised eigensystem of (S, C) for a constraint in partitioned
/// form: only the upper-left R x R block of C may be nonzero.
template <int R, typename Scalar, int M>
EigenSolution<Scalar, M, R> solve_generalized(const SymMatrix<Scalar, M>& s,
                                              const SymMatrix<Scalar, M>& c) {
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = R; j < M; ++j)
      if (c(i, j) != 0 || c(j, i) != 0)
        fail_input("constraint matrix is not in partitioned form");

  const auto blocks = schur_reduce<R>(s);
  const Eigen::Matrix<Scalar, R, R> c_tilde = c.template topLeftCorner<R, R>();
  const auto reduced = solve_reduced_eigen<Scalar, R>(blocks.reduced, c_tilde);

  EigenSolution<Scalar, M, R> out;
  out.lambdas = reduced.lambdas;
  out.s21 = blocks.s21;
  out.s22_inv = blocks.s22_inv;
  for (int m = 0; m < R; ++m) {
    const Eigen::Matrix<Scalar, R, 1> g_tilde = reduced.vectors.col(m);
    ModelVector<Scalar, M> full = reconstruct_full<Scalar, M, R>(g_tilde, blocks.s21, blocks.s22_inv);
    const ModelVector<Scalar, M> signed_full = canonical_sign(full);
    const Scalar flip = (signed_full.dot(full) < 0) ? Scalar(-1) : Scalar(1);
    out.vectors.col(m) = signed_full;
    out.reduced_vectors.col(m) = flip * g_tilde;
  }
  return out;
}

/// diag(0_RR, S22^-1): the corner term shared by every generalised inverse.
template <typename Scalar, int M, int R>
SymMatrix<Scalar, M> inverse_corner(const EigenSolution<Scalar, M, R>& sol) {
  SymMatrix<Scalar, M> y = SymMatrix<Scalar, M>::Zero();
  if constexpr (M > R) y.template bottomRightCorner<M - R, M - R>() = sol.s22_inv;
  return y;
}

/// Y_0 = sum_{m>0} G_m G_m^T / lambda_m + diag(0, S22^-1).
///
/// The measured lambda_0 is not subtracted from the denominators; with this
/// choice Y_0 S Y_0 = Y_0 and Y_0 C G_m = G_m / lambda_m hold exactly.
template <typename Scalar, int M, int R>
SymMatrix<Scalar, M> generalized_inverse_y0(const EigenSolution<Scalar, M, R>& sol) {
  static_assert(R >= 2);
  const Scalar top = sol.lambdas(R - 1);
  if (!(sol.lambdas(1) - sol.lambdas(0) >= Scalar(1e-10) * top))
    fail_numerical("degenerate fit direction");
  SymMatrix<Scalar, M> y = inverse_corner(sol);
  for (int m = 1; m < R; ++m) {
    if (!(sol.lambdas(m) > Scalar(1e-12) * top)) fail_numerical("degenerate fit direction");
    y += sol.vectors.col(m) * sol.vectors.col(m).transpose() / sol.lambdas(m);
  }
  return detail::symmetrized(y);
}

/// General perturbation inverse Y_n = sum_{m!=n} G_m G_m^T / (lambda_m - lambda_n)
/// + diag(0, S22^-1). First-order eigenvector response is -Y_n (dS - lambda_n dC) G_n.
template <typename Scalar, int M, int R>
SymMatrix<Scalar, M> generalized_inverse(const EigenSolution<Scalar, M, R>& sol, int n) {
  const Scalar top = std::abs(sol.lambdas(R - 1));
  SymMatrix<Scalar, M> y = inverse_corner(sol);
  for (int m = 0; m < R; ++m) {
    if (m == n) continue;
    const Scalar gap = sol.lambdas(m) - sol.lambdas(n);
    if (!(std::abs(gap) >= Scalar(1e-10) * top)) fail_numerical("degenerate fit direction");
    y += sol.vectors.col(m) * sol.vectors.col(m).transpose() / gap;
  }
  return detail::symmetrized(y);
}

/// Inverse of S restricted to the subspace orthogonal to the given normals:
/// Y = B (B^T S B)^-1 B^T for any basis B of that subspace. With the single
/// normal C G_0 this reproduces Y_0.
template <typename Scalar, int M>
SymMatrix<Scalar, M> restricted_inverse(const SymMatrix<Scalar, M>& s,
                                        const Eigen::Matrix<Scalar, M, Eigen::Dynamic>& normals) {
  const Eigen::Index k = normals.cols();
  if (k >= M) fail_input("too many constraint normals");
  Eigen::Matrix<Scalar, M, Eigen::Dynamic> unit = normals;
  for (Eigen::Index j = 0; j < k; ++j) {
    const Scalar nrm = unit.col(j).norm();
    if (!(nrm > 0)) fail_numerical("zero constraint normal");
    unit.col(j) /= nrm;
  }
  const SymMatrix<Scalar, M> gram = unit * unit.transpose();
  const auto spec = jacobi_eigen<Scalar, M>(gram);
  const Eigen::Index free_dims = M - k;
  if (k > 0 && !(spec.values(free_dims) > Scalar(1e-12)))
    fail_numerical("dependent constraint normals");

  const Eigen::Matrix<Scalar, M, Eigen::Dynamic> basis = spec.vectors.leftCols(free_dims);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> restricted =
      basis.transpose() * s * basis;
  const Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt(restricted);
  if (llt.info() != Eigen::Success) fail_numerical("restricted scatter is not positive definite");
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> inv =
      llt.solve(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(free_dims, free_dims));
  return detail::symmetrized((basis * inv * basis.transpose()).eval());
}

/// sigma^2 from the smallest eigenvalue (valid when C = C_N), clamped at 0.
template <typename Scalar, int M, int R>
Scalar estimate_sigma2(const EigenSolution<Scalar, M, R>& sol) {
  return std::max(sol.lambdas(0), Scalar(0));
}

/// V_0 = sigma^2 Y_0 / N, valid under the optimal weighting.
template <typename Scalar, int M>
SymMatrix<Scalar, M> covariance_optimal(const SymMatrix<Scalar, M>& y0, Scalar sigma2,
                                        std::size_t n) {
  if (sigma2 < 0) fail_input("negative variance");
  if (n + 1 < static_cast<std::size_t>(M)) fail_input("underdetermined");
  return (sigma2 / static_cast<Scalar>(n)) * y0;
}

/// V_0 = sigma^2 Y_0 [sum_i w_i^2 D_i (sum_mu (D_{i,mu}^T G_0)^2) D_i^T] Y_0, for
/// weights that are not the optimal ones. `gradients[i]` holds dD/dx_mu as
/// columns.
template <typename Scalar, int M, int Lambda>
SymMatrix<Scalar, M> covariance_explicit(
    const SymMatrix<Scalar, M>& y0, Scalar sigma2,
    std::span<const ModelVector<Scalar, M>> designs,
    std::span<const Eigen::Matrix<Scalar, M, Lambda>> gradients, std::span<const Scalar> weights,
    const ModelVector<Scalar, M>& g0) {
  if (sigma2 < 0) fail_input("negative variance");
  if (designs.size() != gradients.size() || designs.size() != weights.size())
    fail_input("explicit covariance inputs differ in length");
  if (designs.size() + 1 < static_cast<std::size_t>(M)) fail_input("underdetermined");

  const auto order = canonical_order<Scalar, M>(designs, weights);
  const SymMatrix<Scalar, M> middle = detail::pairwise_sum<SymMatrix<Scalar, M>>(
      order, [&](std::size_t i) -> SymMatrix<Scalar, M> {
        const Scalar grad_sq = (gradients[i].transpose() * g0).squaredNorm();
        return (weights[i] * weights[i] * grad_sq * designs[i]) * designs[i].transpose();
      });
  const SymMatrix<Scalar, M> mid = middle.template selfadjointView<Eigen::Upper>();
  return detail::symmetrized((sigma2 * y0 * mid * y0).eval());
}

}  // namespace conicfit
