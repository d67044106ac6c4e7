#include "bergman/polynomial.hpp"
#include "bergman/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bergman {

cplx horner(std::span<const cplx> coeffs, cplx z) {
  cplx acc{};
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
  return acc;
}

cplx PolynomialSpec::operator()(cplx z) const { return horner(coeffs, z); }

cplx PolynomialSpec::derivative(cplx z) const {
  cplx acc{};
  for (int k = degree; k >= 1; --k) acc = acc * z + static_cast<double>(k) * coeffs[k];
  return acc;
}

double PolynomialSpec::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& c : coeffs) m = std::max(m, std::abs(c));
  return m;
}

std::vector<cplx> taylor_shift(std::span<const cplx> coeffs, cplx c) {
  // Repeated synthetic division by (z - c).
  std::vector<cplx> a(coeffs.begin(), coeffs.end());
  const auto n = a.size();
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = n - 1; j > k; --j) a[j - 1] += c * a[j];
  return a;
}

std::vector<cplx> poly_multiply(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<cplx> out(a.size() + b.size() - 1, cplx{});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

PolynomialSpec make_polynomial(std::span<const cplx> coeffs_in, bool normalize,
                               std::vector<std::string>* warnings) {
  std::vector<cplx> coeffs(coeffs_in.begin(), coeffs_in.end());
  if (coeffs.empty()) throw InputError("polynomial: empty coefficient list");
  const int q = static_cast<int>(coeffs.size()) - 1;
  if (q < 1) throw InputError("polynomial: degree must be at least 1");
  const cplx lead = coeffs.back();
  if (std::abs(lead) == 0.0) throw InputError("polynomial: zero leading coefficient");
  if (std::abs(lead - 1.0) > 1e-12) {
    if (!normalize) {
      std::ostringstream msg;
      msg << "polynomial: leading coefficient " << lead << " is not 1 (polynomial must be monic)";
      throw InputError(msg.str());
    }
    for (auto& c : coeffs) c /= lead;
    if (warnings) warnings->push_back("polynomial: normalized non-monic input");
  }
  coeffs.back() = 1.0;

  PolynomialSpec p;
  p.coeffs = coeffs;
  p.degree = q;
  p.alpha = -coeffs[q - 1];

  if (q == 1) {
    p.roots = {-coeffs[0]};
  } else {
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(q, q);
    for (int i = 1; i < q; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < q; ++i) companion(i, q - 1) = -coeffs[i];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, false);
    if (es.info() != Eigen::Success) throw NumericalError("polynomial: companion eigen-solve failed");
    p.roots.resize(q);
    for (int i = 0; i < q; ++i) {
      cplx z = es.eigenvalues()(i);
      const cplx d = p.derivative(z);
      if (std::abs(d) > 0.0) z -= p(z) / d;
      p.roots[i] = z;
    }
  }
  std::sort(p.roots.begin(), p.roots.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });

  const double tol = 1e-10 * (1.0 + p.max_abs_coeff());
  for (const auto& z : p.roots) {
    if (std::abs(p(z)) > tol) {
      std::ostringstream msg;
      msg << "polynomial: root residual " << std::abs(p(z)) << " at " << z << " exceeds " << tol;
      throw NumericalError(msg.str());
    }
  }
  return p;
}

PolynomialSpec polynomial_from_roots(std::span<const cplx> roots) {
  std::vector<cplx> c{1.0};
  for (const auto& x : roots) {
    const std::vector<cplx> factor{-x, 1.0};
    c = poly_multiply(c, factor);
  }
  return make_polynomial(c);
}

} // namespace bergman
