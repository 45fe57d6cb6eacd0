#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace conicfit {

template <typename Scalar, int N>
struct SymmetricEigen {
  Eigen::Matrix<Scalar, N, 1> values;   // ascending
  Eigen::Matrix<Scalar, N, N> vectors;  // orthonormal columns
};

/// Cyclic Jacobi diagonalisation of a small dense symmetric matrix.
///
/// Only the upper triangle of `a` is read. Rotations are applied until the
/// off-diagonal part has been annihilated to working precision (an entry is
/// dropped once adding it to both corresponding diagonal entries no longer
/// changes them). Eigenvalues are returned in ascending order.
template <typename Scalar, int N>
SymmetricEigen<Scalar, N> jacobi_eigen(const Eigen::Matrix<Scalar, N, N>& a,
                                       int max_sweeps = 64) {
  using Mat = Eigen::Matrix<Scalar, N, N>;
  const Eigen::Index n = a.rows();

  Mat m = a.template selfadjointView<Eigen::Upper>();
  Mat v = Mat::Identity(n, n);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Scalar off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (off == Scalar(0)) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = m(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar g = Scalar(100) * std::abs(apq);
        if (sweep > 3 && std::abs(m(p, p)) + g == std::abs(m(p, p)) &&
            std::abs(m(q, q)) + g == std::abs(m(q, q))) {
          m(p, q) = m(q, p) = 0;
          continue;
        }
        const Scalar theta = (m(q, q) - m(p, p)) / (Scalar(2) * apq);
        Scalar t = Scalar(1) / (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
        if (theta < 0) t = -t;
        const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
        const Scalar s = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = m(q, p) = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<Eigen::Index, (N > 0 ? N : 1)> order{};
  std::iota(order.begin(), order.begin() + n, Eigen::Index{0});
  std::stable_sort(order.begin(), order.begin() + n,
                   [&](Eigen::Index i, Eigen::Index j) { return m(i, i) < m(j, j); });

  SymmetricEigen<Scalar, N> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = m(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

}  // namespace conicfit
