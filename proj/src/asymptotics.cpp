#include "bergman/asymptotics.hpp"
#include "bergman/error.hpp"
#include "bergman/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bergman {

double SequenceReport::tail_max_abs(std::size_t count) const {
  double m = 0.0;
  const std::size_t start = values.size() > count ? values.size() - count : 0;
  for (std::size_t i = start; i < values.size(); ++i) m = std::max(m, std::abs(values[i]));
  return m;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

cplx aitken3(cplx a, cplx b, cplx c, bool& ok) {
  const cplx d1 = b - a;
  const cplx d2 = c - b;
  const cplx denom = d2 - d1;
  ok = std::abs(denom) >= 1e-12;
  return ok ? c - d2 * d2 / denom : c;
}

// Differences shrinking like k^{-p}: successive ratios 1 - p/k with p(k) = k (1 - ratio)
// roughly constant across the tail, where geometric decay makes p(k) grow linearly.
bool algebraic_tail(const std::vector<cplx>& x, std::size_t start) {
  // p(k) = k (1 - |d_{k+1}/d_k|) is flat for algebraic decay and grows like k for geometric decay;
  // the least-squares slope of log p against log k separates the two.
  std::vector<double> lk, lp;
  for (std::size_t k = start; k + 2 < x.size(); ++k) {
    const cplx d0 = x[k + 1] - x[k];
    const cplx d1 = x[k + 2] - x[k + 1];
    if (std::abs(d0) == 0.0) return false;
    const cplx ratio = d1 / d0;
    if (ratio.real() <= 0.0 || std::abs(ratio) >= 1.0) return false;
    lk.push_back(std::log(static_cast<double>(k + 1)));
    lp.push_back(std::log((1.0 - std::abs(ratio)) * static_cast<double>(k + 1)));
  }
  if (lk.size() < 6) return false;
  const double n = static_cast<double>(lk.size());
  const double mk = std::accumulate(lk.begin(), lk.end(), 0.0) / n;
  const double mp = std::accumulate(lp.begin(), lp.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lk.size(); ++i) {
    sxy += (lk[i] - mk) * (lp[i] - mp);
    sxx += (lk[i] - mk) * (lk[i] - mk);
  }
  return sxx > 0.0 && std::abs(sxy / sxx) < 0.5;
}

}  // namespace

std::optional<Extrapolation> aitken_tail(const std::vector<cplx>& x) {
  if (x.size() < 6) return std::nullopt;
  const std::size_t start = 2 * x.size() / 3;
  std::vector<double> re, im;
  const bool dyadic = algebraic_tail(x, start);
  for (std::size_t k = start; k < x.size(); ++k) {
    bool ok = false;
    cplx t;
    if (dyadic) {
      // x at k+1, (k+1)/2, (k+1)/4 terms: algebraic decay becomes geometric along doublings.
      if ((k + 1) % 4 != 0) continue;
      t = aitken3(x[(k + 1) / 4 - 1], x[(k + 1) / 2 - 1], x[k], ok);
    } else {
      if (k + 2 >= x.size()) break;
      t = aitken3(x[k], x[k + 1], x[k + 2], ok);
    }
    if (!ok) continue;
    re.push_back(t.real());
    im.push_back(t.imag());
  }
  if (re.empty()) return Extrapolation{x.back(), "last-value"};
  return Extrapolation{cplx(median(re), median(im)), dyadic ? "aitken-dyadic" : "aitken"};
}

void extrapolate(SequenceReport& report) { report.extrapolated = aitken_tail(report.values); }

double christoffel_lambda(const OrthoBasis& basis, const HessenbergSection& h, cplx z, int upto) {
  const auto phi = evaluate_basis(basis, h, z);
  const int last = upto < 0 ? basis.N : std::min(upto, basis.N);
  double s = 0.0;
  for (int n = 0; n <= last; ++n) s += std::norm(phi[n]);
  return 1.0 / s;
}

int KboundReport::flagged() const {
  return static_cast<int>(std::count(growth_flags.begin(), growth_flags.end(), true));
}

KboundReport kbound_scan(const DiscretizedMeasure& mu, const PolynomialSpec& p, double r, int N, double margin) {
  if (!(margin > 0.0 && margin < 1.0)) throw InputError("kbound_scan: margin must lie in (0, 1)");
  std::vector<std::size_t> inner;
  for (std::size_t i = 0; i < mu.nodes.size(); ++i)
    if (std::abs(p(mu.nodes[i])) <= (1.0 - margin) * r) inner.push_back(i);
  if (inner.empty())
    throw InputError("kbound_scan: no measure nodes in {|P| <= (1 - margin) r}; the measure has no interior "
                     "presence at this margin");

  KboundReport out;
  out.N = N;
  const std::size_t stride = (inner.size() + 199) / 200;
  std::vector<std::size_t> picked;
  for (std::size_t k = 0; k < inner.size(); k += stride) picked.push_back(inner[k]);

  const auto muq = apply_polynomial_weight(mu, p);
  const auto orth = orthogonalize(muq, N);

  // Row of each surviving mu node inside muq (dropped nodes sit at roots of P).
  std::vector<long> row(mu.nodes.size(), -1);
  for (std::size_t i = 0, j = 0; i < mu.nodes.size(); ++i)
    if (mu.weights[i] * std::norm(p(mu.nodes[i])) > 0.0) row[i] = static_cast<long>(j++);

  for (const auto idx : picked) {
    const cplx z = mu.nodes[idx];
    std::vector<cplx> phi;
    if (row[idx] >= 0) {
      phi.resize(N + 1);
      for (int n = 0; n <= N; ++n) phi[n] = orth.basis.values(row[idx], n);
    } else {
      phi = evaluate_basis(orth.basis, orth.hessenberg, z);
    }
    std::vector<double> sums(N + 1);
    double s = 0.0;
    for (int n = 0; n <= N; ++n) {
      s += std::norm(phi[n]);
      sums[n] = s;
    }
    const int decade_start = std::max(0, N - 10);
    const double before = decade_start > 0 ? sums[decade_start] : 0.0;
    const double frac = s > 0.0 ? (s - before) / s : 0.0;
    out.grid.push_back(z);
    out.partial_sums.push_back(std::move(sums));
    out.last_decade_fraction.push_back(frac);
    out.growth_flags.push_back(frac > 0.05);
  }
  return out;
}

std::vector<SequenceReport> weak_concentration(const OrthoBasis& basis, const DiscretizedMeasure& mu,
                                               const PolynomialSpec& p, const std::vector<double>& s_list) {
  const auto pts = mu.support_points();
  const auto w = mu.support_weights();
  if (static_cast<Eigen::Index>(pts.size()) != basis.values.rows())
    throw InputError("weak_concentration: basis does not belong to this measure");
  std::vector<double> level(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) level[i] = std::abs(p(pts[i]));

  std::vector<SequenceReport> out;
  for (double s : s_list) {
    SequenceReport rep;
    rep.label = "eta_n(" + format_double(s) + ")";
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (level[i] <= s) mask(i) = w[i];
    const Eigen::VectorXd eta = basis.values.cwiseAbs2().transpose() * mask;
    for (int n = 0; n <= basis.N; ++n) {
      rep.n_values.push_back(n);
      rep.values.emplace_back(eta(n), 0.0);
    }
    out.push_back(std::move(rep));
  }
  return out;
}

SequenceReport kappa_ratio(const OrthoBasis& basis, int q) {
  if (q < 1 || 4 * q > basis.N) throw InputError("kappa_ratio: need 1 <= q <= N/4");
  SequenceReport rep;
  rep.label = "kappa_n/kappa_{n+" + std::to_string(q) + "}";
  for (int n = 0; n + q <= basis.N; ++n) {
    rep.n_values.push_back(n);
    rep.values.emplace_back(basis.kappa[n] / basis.kappa[n + q], 0.0);
  }
  extrapolate(rep);
  return rep;
}

SequenceReport kappa_ratio_residue(const OrthoBasis& basis, int q, int s) {
  if (q < 1 || s < 0 || s >= q) throw InputError("kappa_ratio_residue: need 0 <= s < q");
  SequenceReport rep;
  rep.label = "kappa_{" + std::to_string(q) + "n+" + std::to_string(s) + "}/kappa_{" + std::to_string(q) + "n+" +
              std::to_string(s + 1) + "}";
  for (int n = 0; n * q + s + 1 <= basis.N; ++n) {
    rep.n_values.push_back(n);
    rep.values.emplace_back(basis.kappa[n * q + s] / basis.kappa[n * q + s + 1], 0.0);
  }
  extrapolate(rep);
  return rep;
}

SequenceReport ratio_asymptotics(const OrthoBasis& basis, const HessenbergSection& h, const DiscretizedMeasure& mu,
                                 const PolynomialSpec& p, double r, cplx z, RatioMode mode, int s) {
  const int q = p.degree;
  const int N = basis.N;
  if (mode == RatioMode::Corollary || mode == RatioMode::Monic) {
    if (!(hull_distance(mu, z) > 0.0))
      throw InputError("ratio_asymptotics: z = " + format_complex(z) + " is not outside the convex hull of the nodes");
  } else {
    const double radius = mu.max_modulus();
    if (!(std::abs(z) > radius))
      throw InputError("ratio_asymptotics: residue modes need |z| > " + format_double(radius));
    if (s < 0 || s >= q) throw InputError("ratio_asymptotics: residue s must lie in [0, q)");
  }
  const auto phi = evaluate_basis(basis, h, z);
  auto monic = [&](int k) { return phi[k] / basis.kappa[k]; };

  SequenceReport rep;
  std::vector<std::pair<int, std::pair<cplx, cplx>>> terms;  // n, (numerator, denominator)
  switch (mode) {
    case RatioMode::Corollary:
      rep.label = "P(z)phi_n/(r phi_{n+q})";
      for (int n = 0; n + q <= N; ++n) terms.push_back({n, {p(z) * phi[n], r * phi[n + q]}});
      break;
    case RatioMode::Monic:
      rep.label = "Phi_{n+q}/Phi_n";
      for (int n = 0; n + q <= N; ++n) terms.push_back({n, {monic(n + q), monic(n)}});
      break;
    case RatioMode::Residue:
      rep.label = "phi_{nq+" + std::to_string(s) + "-1}/phi_{nq+" + std::to_string(s) + "}";
      for (int n = 0; n * q + s <= N; ++n)
        if (n * q + s >= 1) terms.push_back({n, {phi[n * q + s - 1], phi[n * q + s]}});
      break;
    case RatioMode::MonicResidue:
      rep.label = "Phi_{nq+" + std::to_string(s) + "}/Phi_{nq+" + std::to_string(s) + "+1}";
      for (int n = 0; n * q + s + 1 <= N; ++n) terms.push_back({n, {monic(n * q + s), monic(n * q + s + 1)}});
      break;
  }
  for (const auto& [n, nd] : terms) {
    if (nd.second == cplx(0.0)) {
      rep.notes.push_back("n = " + std::to_string(n) + " skipped: zero denominator");
      continue;
    }
    rep.n_values.push_back(n);
    rep.values.push_back(nd.first / nd.second);
  }
  extrapolate(rep);
  return rep;
}

std::vector<SequenceReport> christoffel_shift_check(const DiscretizedMeasure& mu, const std::vector<cplx>& roots_order,
                                                    int N) {
  std::vector<SequenceReport> out;
  DiscretizedMeasure cur = mu;
  auto cur_orth = orthogonalize(cur, N);
  for (std::size_t m = 0; m < roots_order.size(); ++m) {
    const cplx x = roots_order[m];
    const std::vector<cplx> factor{-x, 1.0};
    auto next = apply_polynomial_weight(cur, make_polynomial(factor));
    auto next_orth = orthogonalize(next, N);
    SequenceReport rep;
    rep.label = "kappa_n(mu_" + std::to_string(m + 1) + ")/kappa_{n+1}(mu_" + std::to_string(m) + ")";
    for (int n = 0; n < N; ++n) {
      rep.n_values.push_back(n);
      rep.values.emplace_back(next_orth.basis.kappa[n] / cur_orth.basis.kappa[n + 1], 0.0);
    }
    rep.notes.push_back("lambda(x; mu_" + std::to_string(m) + ") <= " +
                        format_double(christoffel_lambda(cur_orth.basis, cur_orth.hessenberg, x)) + " at x = " +
                        format_complex(x));
    extrapolate(rep);
    out.push_back(std::move(rep));
    cur = std::move(next);
    cur_orth = std::move(next_orth);
  }
  return out;
}

cplx islands_reference(int q, double r, cplx z, int s) {
  if (q < 1 || s < 0 || s >= q) throw InputError("islands_reference: need 0 <= s < q");
  if (!(r > 0.0 && r < 1.0)) throw InputError("islands_reference: need 0 < r < 1");
  if (std::abs(z) < 2.0) throw InputError("islands_reference: principal branch is only certified for |z| >= 2");
  const cplx zq1 = std::pow(z, q) - 1.0;
  const cplx a = (zq1 + r * r) / zq1;
  if (s <= q - 2) return std::pow(a, 1.0 / q) / z;
  return std::pow(z, q - 1) / zq1 * std::pow(a, (1.0 - q) / q);
}

SequenceReport atom_mass_decay(const OrthoBasis& basis, const DiscretizedMeasure& mu) {
  SequenceReport rep;
  rep.label = "sum_j mu({z_j})|phi_n(z_j)|^2";
  const Eigen::Index first_atom = static_cast<Eigen::Index>(mu.nodes.size());
  if (first_atom + static_cast<Eigen::Index>(mu.atoms.size()) != basis.values.rows())
    throw InputError("atom_mass_decay: basis does not belong to this measure");
  for (int n = 0; n <= basis.N; ++n) {
    double s = 0.0;
    for (std::size_t j = 0; j < mu.atoms.size(); ++j)
      s += mu.atoms[j].mass * std::norm(basis.values(first_atom + static_cast<Eigen::Index>(j), n));
    rep.n_values.push_back(n);
    rep.values.emplace_back(s, 0.0);
  }
  return rep;
}

DiscretizedMeasure scale_measure(const DiscretizedMeasure& mu, double c) {
  if (!(c > 0.0)) throw InputError("scale_measure: factor must be > 0");
  DiscretizedMeasure out = mu;
  for (auto& w : out.weights) w *= c;
  for (auto& a : out.atoms) a.mass *= c;
  out.finalize();
  return out;
}

SequenceReport exterior_atom_kappa_sequence(const DiscretizedMeasure& mu, const OrthoBasis& mu_basis,
                                            const LemniscateSpec& lem, int N) {
  std::vector<cplx> ext;
  for (const auto& a : mu.atoms)
    if (std::abs(lem.poly(a.location)) > lem.level) ext.push_back(a.location);
  if (ext.empty()) throw InputError("exterior_atom_kappa_sequence: measure has no exterior atoms");
  const int k = static_cast<int>(ext.size());
  const int q = lem.poly.degree;
  auto nu = apply_polynomial_weight(mu, polynomial_from_roots(ext));
  nu = scale_measure(nu, std::pow(lem.level, -2.0 * k / q));
  const auto nu_orth = orthogonalize(nu, N);
  SequenceReport rep;
  rep.label = "kappa_{n-" + std::to_string(k) + "}(nu)/kappa_n(mu)";
  for (int n = k; n <= std::min(N + k, mu_basis.N); ++n) {
    rep.n_values.push_back(n);
    rep.values.emplace_back(nu_orth.basis.kappa[n - k] / mu_basis.kappa[n], 0.0);
  }
  rep.notes.push_back("expected limit r^{K/q} = " + format_double(std::pow(lem.level, static_cast<double>(k) / q)));
  extrapolate(rep);
  return rep;
}

} // namespace bergman
