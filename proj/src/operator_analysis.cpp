#include "bergman/operator_analysis.hpp"
#include "bergman/error.hpp"
#include "bergman/io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bergman {

namespace {

// sum_i w_i |f(z_i)|^2 |phi_n(z_i)|^2 over nodes and atoms.
template <class F>
double weighted_integral(const OrthoBasis& basis, const DiscretizedMeasure& mu, int n, F&& f) {
  const auto pts = mu.support_points();
  const auto w = mu.support_weights();
  if (static_cast<Eigen::Index>(pts.size()) != basis.values.rows())
    throw InputError("basis does not belong to this measure");
  long double s = 0.0L;
  for (std::size_t i = 0; i < pts.size(); ++i) s += w[i] * f(pts[i]) * std::norm(basis.values(i, n));
  return static_cast<double>(s);
}

} // namespace

Eigen::MatrixXcd matrix_polynomial(const Eigen::MatrixXcd& a, const PolynomialSpec& p) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Identity(n, n) * p.coeffs[p.degree];
  for (int k = p.degree - 1; k >= 0; --k) {
    acc = (acc * a).eval();
    acc.diagonal().array() += p.coeffs[k];
  }
  return acc;
}

FiniteSection poly_of_section(const HessenbergSection& h, const PolynomialSpec& p) {
  const int N = h.size();
  if (p.degree >= N) throw WindowError("poly_of_section: polynomial degree must be below the section size");
  FiniteSection out;
  out.entries = matrix_polynomial(h.entries, p);
  out.degree = p.degree;
  out.exact_cols = N - p.degree;
  out.provenance = "P(M), P deg " + std::to_string(p.degree);
  return out;
}

double ShiftResidual::residual() const { return std::sqrt(std::max(matrix_side, 0.0)); }

double shift_residual_matrix(const FiniteSection& pm, int q, double r, int n) {
  const int N = static_cast<int>(pm.entries.rows());
  if (n < 1 || n > pm.exact_cols || n + q > N)
    throw WindowError("shift_residual: column " + std::to_string(n) + " outside the exact window (1.." +
                      std::to_string(pm.exact_cols) + ")");
  Eigen::VectorXcd col = pm.entries.col(n - 1);
  col(n + q - 1) -= r;
  return col.squaredNorm();
}

ShiftResidual shift_residual(const FiniteSection& pm, const OrthoBasis& basis, const DiscretizedMeasure& mu,
                             const PolynomialSpec& p, double r, int n) {
  const int q = p.degree;
  ShiftResidual out;
  out.n = n;
  out.matrix_side = shift_residual_matrix(pm, q, r, n);
  if (n + q - 1 > basis.N) throw WindowError("shift_residual: basis too short for n + q - 1");
  const double pphi = weighted_integral(basis, mu, n - 1, [&](cplx z) { return std::norm(p(z)); });
  out.measure_side = pphi + r * r - 2.0 * r * basis.kappa[n - 1] / basis.kappa[n + q - 1];
  return out;
}

ShiftResidual shift_residual(const HessenbergSection& h, const OrthoBasis& basis, const DiscretizedMeasure& mu,
                             const PolynomialSpec& p, double r, int n) {
  return shift_residual(poly_of_section(h, p), basis, mu, p, r, n);
}

std::vector<ShiftResidual> shift_residual_sequence(const HessenbergSection& h, const OrthoBasis& basis,
                                                   const DiscretizedMeasure& mu, const PolynomialSpec& p, double r) {
  const auto pm = poly_of_section(h, p);
  std::vector<ShiftResidual> out;
  for (int n = 1; n <= pm.exact_cols; ++n) out.push_back(shift_residual(pm, basis, mu, p, r, n));
  return out;
}

cplx trace_window(const HessenbergSection& h, int q, int n) {
  if (q < 1 || n < 0 || n + q > h.size()) throw WindowError("trace_window: need 0 <= n and n + q <= N");
  cplx s{};
  for (int j = 1; j <= q; ++j) s += h.at(n + j, n + j);
  return s;
}

Eigen::MatrixXcd centered_window(const HessenbergSection& h, int n, int m) {
  if (n - m < 1 || n + m > h.size()) throw WindowError("centered_window: window leaves the section");
  return h.entries.block(n - m - 1, n - m - 1, 2 * m + 1, 2 * m + 1);
}

RightLimitWindow right_limit(const HessenbergSection& h, int q, int s, int m, double tol, const PolynomialSpec* p,
                             double r) {
  if (q < 1 || s < 0 || s >= q || m < 0) throw InputError("right_limit: need q >= 1, 0 <= s < q, m >= 0");
  const int N = h.size();
  RightLimitWindow out;
  out.center_residue = s;
  out.half_width = m;
  for (int n = std::max(q, 1) + m; n + m <= N - q; ++n)
    if (n % q == s) out.subsequence.push_back(n);
  if (out.subsequence.size() < 4)
    throw WindowError("right_limit: insufficient run length (" + std::to_string(out.subsequence.size()) +
                      " windows, need 4)");

  Eigen::MatrixXcd prev = centered_window(h, out.subsequence.front(), m);
  for (std::size_t i = 1; i < out.subsequence.size(); ++i) {
    Eigen::MatrixXcd cur = centered_window(h, out.subsequence[i], m);
    out.successive_differences.push_back((cur - prev).cwiseAbs().maxCoeff());
    prev = std::move(cur);
  }
  out.window = prev;
  out.max_difference = out.successive_differences.back();
  out.converged = out.max_difference <= tol;

  const int w = 2 * m + 1;
  for (int a = 0; a < w; ++a)
    for (int b = 0; b < w; ++b) {
      if (a > b + 1) out.below_hessenberg = std::max(out.below_hessenberg, std::abs(out.window(a, b)));
      if (a + q < w && b + q < w)
        out.periodicity_error = std::max(out.periodicity_error, std::abs(out.window(a, b) - out.window(a + q, b + q)));
    }

  if (p) {
    const int d = p->degree;
    const Eigen::MatrixXcd px = matrix_polynomial(out.window, *p);
    // Paths of (X^d)_{a,b} visit indices in [a-d+1, b+d-1].
    const int lo = d - 1, hi = w - d;
    for (int a = lo; a <= hi; ++a)
      for (int b = lo; b <= hi; ++b) {
        const cplx expected = (a == b + q) ? cplx(r) : cplx(0.0);
        out.relation_error = std::max(out.relation_error, std::abs(px(a, b) - expected));
        out.relation_checked = true;
      }
  }
  return out;
}

BlockToeplitzReport block_toeplitz_diagnostic(const HessenbergSection& h, int q, int m, double tol) {
  BlockToeplitzReport out;
  out.q = q;
  out.half_width = m;
  out.tol = tol;
  bool all = true;
  for (int s = 0; s < q; ++s) {
    out.classes.push_back(right_limit(h, q, s, m, tol));
    all = all && out.classes.back().converged;
    out.periodicity_error = std::max(out.periodicity_error, out.classes.back().periodicity_error);
  }
  // Limits along neighbouring classes must be one-index shifts of each other.
  if (q > 1) {
    const int w = 2 * m + 1;
    for (int s = 0; s < q; ++s) {
      const auto& x = out.classes[s].window;
      const auto& y = out.classes[(s + 1) % q].window;
      for (int a = 0; a + 1 < w; ++a)
        for (int b = 0; b + 1 < w; ++b)
          out.shift_consistency = std::max(out.shift_consistency, std::abs(y(a, b) - x(a + 1, b + 1)));
    }
  }
  out.verdict = all && out.periodicity_error <= tol && out.shift_consistency <= tol;
  return out;
}

CharPolyCheck char_poly_check(const HessenbergSection& h, const OrthoBasis& basis, int n,
                              const std::vector<cplx>& test_points) {
  if (n < 1 || n > std::min(h.size(), 25)) throw WindowError("char_poly_check: need 1 <= n <= min(N, 25)");
  CharPolyCheck out;
  const Eigen::MatrixXcd hn = h.entries.topLeftCorner(n, n);
  for (const auto& z : test_points) {
    const Eigen::MatrixXcd a = z * Eigen::MatrixXcd::Identity(n, n) - hn;
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
    if ((lu.matrixLU().diagonal().array() == cplx(0.0)).any()) {
      out.notes.push_back("skipped " + format_complex(z) + ": singular factorization");
      continue;
    }
    const cplx det = lu.determinant();
    const cplx phi = evaluate_monic(h, basis.kappa[0], z, n);
    const double scale = std::abs(phi) > 0.0 ? std::abs(phi) : 1.0;
    out.max_relative_error = std::max(out.max_relative_error, std::abs(det - phi) / scale);
    ++out.points_used;
  }
  return out;
}

std::pair<double, double> operator_measure_identity(const HessenbergSection& h, const OrthoBasis& basis,
                                                    const DiscretizedMeasure& mu, const PolynomialSpec& p, int k,
                                                    int n) {
  const int N = h.size();
  if (k < 0 || n < 0 || n + 1 > N - k * p.degree)
    throw WindowError("operator_measure_identity: need n + 1 <= N - k q");
  double matrix_side = 1.0;
  if (k == 0) {
    matrix_side = 1.0;
  } else {
    const auto pm = poly_of_section(h, p);
    Eigen::VectorXcd col = Eigen::VectorXcd::Unit(N, n);
    for (int i = 0; i < k; ++i) col = pm.entries * col;
    matrix_side = col.squaredNorm();
  }
  const double measure_side = weighted_integral(basis, mu, n, [&](cplx z) { return std::pow(std::norm(p(z)), k); });
  return {matrix_side, measure_side};
}

} // namespace bergman
