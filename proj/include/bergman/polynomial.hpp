#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace bergman {

using cplx = std::complex<double>;

/// Monic complex polynomial. Coefficients are stored in ascending degree
/// order, so coeffs[degree] == 1.
struct PolynomialSpec {
  std::vector<cplx> coeffs;
  int degree = 0;
  std::vector<cplx> roots;
  cplx alpha{};  // sum of roots, equal to -coeffs[degree-1]

  cplx operator()(cplx z) const;
  cplx derivative(cplx z) const;
  double max_abs_coeff() const;
};

/// Builds a PolynomialSpec from ascending coefficients.
///
/// A leading coefficient that is not within 1e-12 of 1 is normalized when
/// `normalize` is set (a warning is appended to `warnings` if supplied) and
/// rejected otherwise. Roots come from the companion matrix eigenvalues,
/// followed by one Newton polish per root.
PolynomialSpec make_polynomial(std::span<const cplx> coeffs, bool normalize = false,
                               std::vector<std::string>* warnings = nullptr);

/// Horner evaluation of an ascending coefficient list.
cplx horner(std::span<const cplx> coeffs, cplx z);

/// Taylor coefficients of p around c: p(c + h) = sum_k t[k] h^k.
std::vector<cplx> taylor_shift(std::span<const cplx> coeffs, cplx c);

/// Coefficients of a * b.
std::vector<cplx> poly_multiply(std::span<const cplx> a, std::span<const cplx> b);

/// Monic polynomial with the given roots.
PolynomialSpec polynomial_from_roots(std::span<const cplx> roots);

} // namespace bergman
