#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the orthogonalization or recurrence code under test.

#include "bergman/measure.hpp"

#include <complex>
#include <vector>

namespace oracle {

using lcplx = std::complex<long double>;

/// Phi_n(z) from monomial moments in long double: Phi_n = z^n - sum_k c_k z^k
/// with the Gram system sum_k <z^k, z^j> c_k = <z^n, z^j>, j < n, solved by
/// Gaussian elimination with partial pivoting.
inline std::complex<double> monic_from_moments(const bergman::DiscretizedMeasure& mu, int n, std::complex<double> z) {
  const auto pts = mu.support_points();
  const auto w = mu.support_weights();
  // moments m[a][b] = sum_i w_i z_i^a conj(z_i)^b, a, b <= n
  std::vector<std::vector<lcplx>> m(n + 1, std::vector<lcplx>(n + 1, 0.0L));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const lcplx zi(pts[i].real(), pts[i].imag());
    std::vector<lcplx> pw(n + 1, 1.0L);
    for (int a = 1; a <= n; ++a) pw[a] = pw[a - 1] * zi;
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b) m[a][b] += static_cast<long double>(w[i]) * pw[a] * std::conj(pw[b]);
  }
  if (n == 0) return 1.0;
  // rows j: sum_k m[k][j] c_k = m[n][j]
  std::vector<std::vector<lcplx>> A(n, std::vector<lcplx>(n + 1));
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) A[j][k] = m[k][j];
    A[j][n] = m[n][j];
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    for (int r = col + 1; r < n; ++r) {
      const lcplx f = A[r][col] / A[col][col];
      for (int k = col; k <= n; ++k) A[r][k] -= f * A[col][k];
    }
  }
  std::vector<lcplx> c(n);
  for (int r = n - 1; r >= 0; --r) {
    lcplx s = A[r][n];
    for (int k = r + 1; k < n; ++k) s -= A[r][k] * c[k];
    c[r] = s / A[r][r];
  }
  const lcplx zl(z.real(), z.imag());
  lcplx val = 1.0L, pw = 1.0L;
  for (int k = 0; k < n; ++k) pw *= zl;
  val = pw;
  pw = 1.0L;
  for (int k = 0; k < n; ++k) {
    val -= c[k] * pw;
    pw *= zl;
  }
  return {static_cast<double>(val.real()), static_cast<double>(val.imag())};
}

} // namespace oracle
