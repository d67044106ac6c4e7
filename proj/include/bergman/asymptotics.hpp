#pragma once

#include "bergman/orthopoly.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bergman {

struct Extrapolation {
  cplx value;
  std::string method;  // "aitken", "aitken-dyadic" or "last-value"
};

struct SequenceReport {
  std::string label;
  std::vector<int> n_values;
  std::vector<cplx> values;
  std::optional<Extrapolation> extrapolated;
  double tolerance_used = 0.0;
  std::vector<std::string> notes;

  cplx last() const { return values.back(); }
  /// Largest |value| over the last `count` entries.
  double tail_max_abs(std::size_t count) const;
};

/// Aitken delta-squared over the last third of the sequence. Transformed
/// values whose denominator is below 1e-12 in modulus are discarded; the
/// median of the rest is returned, or the last raw value when none remain.
/// When the tail differences decay algebraically rather than geometrically,
/// the transform is applied to the index-doubling triples (x_{m/4}, x_{m/2}, x_m)
/// instead ("aitken-dyadic"). Empty for fewer than 6 terms.
std::optional<Extrapolation> aitken_tail(const std::vector<cplx>& values);

/// Fills `extrapolated` from aitken_tail.
void extrapolate(SequenceReport& report);

/// Upper bound (sum_{n<=upto} |phi_n(z)|^2)^{-1} for lambda(z); upto = -1 means N.
double christoffel_lambda(const OrthoBasis& basis, const HessenbergSection& h, cplx z, int upto = -1);

struct KboundReport {
  std::vector<cplx> grid;
  int N = 0;
  std::vector<std::vector<double>> partial_sums;  // per point, S_0..S_N
  std::vector<double> last_decade_fraction;       // share of S_N from n in (N-10, N]
  std::vector<bool> growth_flags;
  int flagged() const;
};

/// Kernel sums of |P|^2 mu on K = {nodes with |P| <= (1 - margin) r}, subsampled to at most 200 points.
KboundReport kbound_scan(const DiscretizedMeasure& mu, const PolynomialSpec& p, double r, int N, double margin);

/// eta_n(s) = int_{|P| <= s} |phi_n|^2 dmu, n = 0..N, one report per s.
std::vector<SequenceReport> weak_concentration(const OrthoBasis& basis, const DiscretizedMeasure& mu,
                                               const PolynomialSpec& p, const std::vector<double>& s_list);

/// kappa_n / kappa_{n+q}, n = 0..N-q. Requires q <= N/4.
SequenceReport kappa_ratio(const OrthoBasis& basis, int q);

/// kappa_{nq+s} / kappa_{nq+s+1} along n.
SequenceReport kappa_ratio_residue(const OrthoBasis& basis, int q, int s);

enum class RatioMode {
  Corollary,     // P(z) phi_n(z) / (r phi_{n+q}(z))
  Monic,         // Phi_{n+q}(z) / Phi_n(z)
  Residue,       // phi_{nq+s-1}(z) / phi_{nq+s}(z)
  MonicResidue,  // Phi_{nq+s}(z) / Phi_{nq+s+1}(z)
};

/// Ratio asymptotics at a fixed point z. Corollary and monic modes need z
/// strictly outside the node hull; residue modes need |z| > max node modulus.
SequenceReport ratio_asymptotics(const OrthoBasis& basis, const HessenbergSection& h, const DiscretizedMeasure& mu,
                                 const PolynomialSpec& p, double r, cplx z, RatioMode mode, int s = 0);

/// Chain mu_0 = mu, mu_{m+1} = |z - x_{m+1}|^2 mu_m; report m holds
/// kappa_n(mu_{m+1}) / kappa_{n+1}(mu_m), n = 0..N-1.
std::vector<SequenceReport> christoffel_shift_check(const DiscretizedMeasure& mu, const std::vector<cplx>& roots_order,
                                                    int N);

/// Limit of Phi_{nq+s}/Phi_{nq+s+1} for area measure on {|z^q - 1| < r},
/// principal powers. Requires 0 < r < 1, |z| >= 2, 0 <= s < q.
cplx islands_reference(int q, double r, cplx z, int s);

/// Sum over atoms of mass * |phi_n(atom)|^2, n = 0..N.
SequenceReport atom_mass_decay(const OrthoBasis& basis, const DiscretizedMeasure& mu);

/// Multiplies every weight and atom mass by c > 0.
DiscretizedMeasure scale_measure(const DiscretizedMeasure& mu, double c);

/// kappa_{n-K}(nu) / kappa_n(mu) for nu = prod_j |z - z_j|^2 r^{-2/q} mu over
/// the K atoms exterior to {|P| <= r}; the expected limit r^{K/q} is noted.
SequenceReport exterior_atom_kappa_sequence(const DiscretizedMeasure& mu, const OrthoBasis& mu_basis,
                                            const LemniscateSpec& lem, int N);

} // namespace bergman
