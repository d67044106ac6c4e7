#pragma once

#include "bergman/orthopoly.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bergman {

/// A polynomial of a Hessenberg section together with the range of columns
/// in which it equals the section of the same polynomial of the infinite
/// matrix.
///
/// For upper-Hessenberg M, the paths contributing to (M^d)_{jk} only visit
/// indices in [j-d+1, k+d-1] and end in rows <= k+d, so columns
/// 1..N-d are complete and exact.
struct FiniteSection {
  Eigen::MatrixXcd entries;
  int exact_cols = 0;
  int degree = 0;
  std::string provenance;

  cplx at(int j, int k) const { return entries(j - 1, k - 1); }
};

FiniteSection poly_of_section(const HessenbergSection& h, const PolynomialSpec& p);

/// P(A) by Horner for any square matrix (no exactness bookkeeping).
Eigen::MatrixXcd matrix_polynomial(const Eigen::MatrixXcd& a, const PolynomialSpec& p);

struct ShiftResidual {
  int n = 0;
  double matrix_side = 0.0;   // ||(P(M) - r R^q) e_n||^2 from the section
  double measure_side = 0.0;  // ||P phi_{n-1}||^2 + r^2 - 2 r kappa_{n-1}/kappa_{n+q-1}
  double residual() const;    // sqrt(max(matrix_side, 0))
};

/// Requires 1 <= n <= N - q (column n of P(M) exact and complete).
ShiftResidual shift_residual(const HessenbergSection& h, const OrthoBasis& basis, const DiscretizedMeasure& mu,
                             const PolynomialSpec& p, double r, int n);
/// Same, reusing a precomputed P(H).
ShiftResidual shift_residual(const FiniteSection& pm, const OrthoBasis& basis, const DiscretizedMeasure& mu,
                             const PolynomialSpec& p, double r, int n);
/// Every admissible n = 1..N-q.
std::vector<ShiftResidual> shift_residual_sequence(const HessenbergSection& h, const OrthoBasis& basis,
                                                   const DiscretizedMeasure& mu, const PolynomialSpec& p, double r);

/// Matrix side only, for imported sections.
double shift_residual_matrix(const FiniteSection& pm, int q, double r, int n);

/// sum_{j=1}^q H_{n+j,n+j}; requires n >= 0 and n + q <= N.
cplx trace_window(const HessenbergSection& h, int q, int n);

struct RightLimitWindow {
  int center_residue = 0;
  int half_width = 0;
  Eigen::MatrixXcd window;  // (2m+1)^2, entry (a+m, b+m) is X_{a,b}
  std::vector<int> subsequence;
  std::vector<double> successive_differences;
  bool converged = false;
  double max_difference = 0.0;
  double below_hessenberg = 0.0;  // largest |X_{a,b}|, a > b+1
  double periodicity_error = 0.0; // max |X_{a,b} - X_{a+q,b+q}|
  double relation_error = 0.0;    // max |P(X) - r R^q| on the uncontaminated sub-window
  bool relation_checked = false;

  cplx at(int a, int b) const { return window(a + half_width, b + half_width); }
};

/// (2m+1) x (2m+1) window of h centered at (n, n), 1-based n.
Eigen::MatrixXcd centered_window(const HessenbergSection& h, int n, int m);

/// Windows centered at n = s (mod q), taken over every center whose window
/// lies inside rows/cols [q, N-q]. When `p` is given, P(X) = r R^q is
/// checked on the sub-window where every product path stays inside X.
RightLimitWindow right_limit(const HessenbergSection& h, int q, int s, int m, double tol,
                             const PolynomialSpec* p = nullptr, double r = 0.0);

struct BlockToeplitzReport {
  int q = 0;
  int half_width = 0;
  double tol = 0.0;
  std::vector<RightLimitWindow> classes;  // one per residue s = 0..q-1
  double shift_consistency = 0.0;         // max |X^{(s+1)}_{a,b} - X^{(s)}_{a+1,b+1}|
  double periodicity_error = 0.0;
  bool verdict = false;
};

BlockToeplitzReport block_toeplitz_diagnostic(const HessenbergSection& h, int q, int m, double tol);

struct CharPolyCheck {
  double max_relative_error = 0.0;
  int points_used = 0;
  std::vector<std::string> notes;  // skipped points
};

/// det(z I - H[1..n,1..n]) by dense LU per point against Phi_n(z) from the
/// Hessenberg recurrence. Requires 1 <= n <= min(N, 25).
CharPolyCheck char_poly_check(const HessenbergSection& h, const OrthoBasis& basis, int n,
                              const std::vector<cplx>& test_points);

/// Both sides of ||P(M)^k e_{n+1}||^2 = int |P|^{2k} |phi_n|^2 dmu.
/// Requires n + 1 <= N - k q.
std::pair<double, double> operator_measure_identity(const HessenbergSection& h, const OrthoBasis& basis,
                                                    const DiscretizedMeasure& mu, const PolynomialSpec& p,
                                                    int k, int n);

} // namespace bergman
