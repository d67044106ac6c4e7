#pragma once

#include "bergman/measure.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace bergman {

/// Values of the orthonormal polynomials at the support points of a measure.
///
/// Row i corresponds to support point i (nodes first, then atoms), column n
/// to phi_n. kappa[n] is the leading coefficient of phi_n.
struct OrthoBasis {
  Eigen::MatrixXcd values;
  std::vector<double> kappa;
  int N = 0;
  std::string measure_hash;
};

/// N x N principal section of the Bergman shift matrix.
///
/// Stored 0-based; the accessor takes the 1-based indices used throughout
/// the library, so at(j, k) = <z phi_{k-1}, phi_{j-1}> and e_{n+1} pairs
/// with phi_n.
struct HessenbergSection {
  Eigen::MatrixXcd entries;
  bool subdiag_positive = true;

  int size() const { return static_cast<int>(entries.rows()); }
  cplx at(int j, int k) const { return entries(j - 1, k - 1); }
};

struct Orthogonalization {
  OrthoBasis basis;
  HessenbergSection hessenberg;
};

/// Arnoldi-style orthogonalization of 1, z, z^2, ... against the discrete
/// measure: phi_{n+1} is z phi_n orthogonalized (two classical Gram-Schmidt
/// passes) against phi_0..phi_n, and the projection coefficients fill
/// column n+1 of the Hessenberg matrix.
///
/// Throws InputError when the support has at most N distinct points and
/// DegenerateMeasure when a residual collapses below 1e-13 of its input.
Orthogonalization orthogonalize(const DiscretizedMeasure& mu, int N);

/// phi_0(z)..phi_upto(z) from the Hessenberg recurrence (upto <= N-1).
std::vector<cplx> evaluate_phi(const HessenbergSection& h, double kappa0, cplx z, int upto);

/// phi_0(z)..phi_N(z); the last step uses kappa[N-1]/kappa[N] as the
/// subdiagonal entry that lies outside the section.
std::vector<cplx> evaluate_basis(const OrthoBasis& basis, const HessenbergSection& h, cplx z);

/// Monic Phi_n(z) for 0 <= n <= N, using only the n x n leading section.
cplx evaluate_monic(const HessenbergSection& h, double kappa0, cplx z, int n);

/// Largest deviation among: discrete Gram matrix vs identity, kappa_0 vs
/// total_mass^{-1/2} (relative), and <z phi_n, phi_{n+1}> vs
/// kappa_n/kappa_{n+1} (relative). The last term ties the stored kappa to
/// the stored values.
double orthonormality_residual(const OrthoBasis& basis, const DiscretizedMeasure& mu);

// Export / import. The index convention is written into every header.
std::string hessenberg_to_csv(const HessenbergSection& h, const std::string& measure_hash);
std::string hessenberg_to_json(const HessenbergSection& h, const std::vector<double>& kappa,
                               const std::string& measure_hash);
/// Reads a section written by hessenberg_to_json; kappa is filled when present.
HessenbergSection hessenberg_from_json(const std::string& text, std::vector<double>* kappa = nullptr,
                                       std::string* measure_hash = nullptr);
HessenbergSection hessenberg_from_csv(const std::string& text);
std::string basis_to_csv(const OrthoBasis& basis);

} // namespace bergman
