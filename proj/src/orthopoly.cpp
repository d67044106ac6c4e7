#include "bergman/orthopoly.hpp"
#include "bergman/error.hpp"
#include "bergman/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bergman {

namespace {

double weighted_norm(const Eigen::VectorXcd& v, const Eigen::VectorXd& w) {
  return std::sqrt((v.cwiseAbs2().cwiseProduct(w)).sum());
}

std::size_t distinct_support(const DiscretizedMeasure& mu) {
  auto pts = mu.support_points();
  auto w = mu.support_weights();
  std::vector<cplx> positive;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (w[i] > 0.0) positive.push_back(pts[i]);
  std::sort(positive.begin(), positive.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return static_cast<std::size_t>(std::unique(positive.begin(), positive.end()) - positive.begin());
}

} // namespace

Orthogonalization orthogonalize(const DiscretizedMeasure& mu, int N) {
  if (N < 1) throw InputError("orthogonalize: N must be >= 1");
  if (distinct_support(mu) <= static_cast<std::size_t>(N)) {
    std::ostringstream msg;
    msg << "orthogonalize: measure has " << distinct_support(mu) << " distinct support points, need more than N = " << N;
    throw InputError(msg.str());
  }
  const auto pts = mu.support_points();
  const auto wts = mu.support_weights();
  const Eigen::Index m = static_cast<Eigen::Index>(pts.size());
  Eigen::VectorXcd z(m);
  Eigen::VectorXd w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    z(i) = pts[i];
    w(i) = wts[i];
  }

  Orthogonalization out;
  auto& basis = out.basis;
  basis.N = N;
  basis.measure_hash = mu.hash();
  basis.values.resize(m, N + 1);
  basis.kappa.assign(N + 1, 0.0);
  Eigen::MatrixXcd hext = Eigen::MatrixXcd::Zero(N + 1, N);

  const double total = w.sum();
  basis.kappa[0] = 1.0 / std::sqrt(total);
  basis.values.col(0).setConstant(basis.kappa[0]);

  Eigen::VectorXcd v(m), wv(m), h(N + 1), h2(N + 1);
  for (int n = 0; n < N; ++n) {
    const auto cols = basis.values.leftCols(n + 1);
    v = z.cwiseProduct(basis.values.col(n));
    const double vnorm = weighted_norm(v, w);
    // h_j = <v, phi_j> = sum_i w_i v_i conj(phi_j(z_i))
    wv = w.cast<cplx>().cwiseProduct(v);
    h.head(n + 1).noalias() = cols.adjoint() * wv;
    v.noalias() -= cols * h.head(n + 1);
    wv = w.cast<cplx>().cwiseProduct(v);
    h2.head(n + 1).noalias() = cols.adjoint() * wv;
    v.noalias() -= cols * h2.head(n + 1);
    h.head(n + 1) += h2.head(n + 1);

    const double beta = weighted_norm(v, w);
    if (!(beta > 1e-13 * vnorm)) {
      std::ostringstream msg;
      msg << "orthogonalize: measure is effectively finite-dimensional; reached degree " << n;
      throw DegenerateMeasure(msg.str(), n);
    }
    basis.values.col(n + 1) = v / beta;
    hext.col(n).head(n + 1) = h.head(n + 1);
    hext(n + 1, n) = beta;
    basis.kappa[n + 1] = basis.kappa[n] / beta;
  }

  out.hessenberg.entries = hext.topRows(N);
  for (int k = 0; k + 1 < N; ++k)
    if (!(out.hessenberg.entries(k + 1, k).real() > 0.0)) out.hessenberg.subdiag_positive = false;
  return out;
}

std::vector<cplx> evaluate_phi(const HessenbergSection& h, double kappa0, cplx z, int upto) {
  const int N = h.size();
  if (upto < 0 || upto > N - 1) throw WindowError("evaluate_phi: upto must lie in [0, N-1]");
  std::vector<cplx> phi(upto + 1);
  phi[0] = kappa0;
  for (int k = 0; k < upto; ++k) {
    cplx s = z * phi[k];
    for (int j = 0; j <= k; ++j) s -= h.entries(j, k) * phi[j];
    phi[k + 1] = s / h.entries(k + 1, k);
  }
  return phi;
}

std::vector<cplx> evaluate_basis(const OrthoBasis& basis, const HessenbergSection& h, cplx z) {
  const int N = h.size();
  auto phi = evaluate_phi(h, basis.kappa[0], z, N - 1);
  cplx s = z * phi[N - 1];
  for (int j = 0; j < N; ++j) s -= h.entries(j, N - 1) * phi[j];
  phi.push_back(s / (basis.kappa[N - 1] / basis.kappa[N]));
  return phi;
}

cplx evaluate_monic(const HessenbergSection& h, double kappa0, cplx z, int n) {
  const int N = h.size();
  if (n < 0 || n > N) throw WindowError("evaluate_monic: n must lie in [0, N]");
  if (n == 0) return 1.0;
  const auto phi = evaluate_phi(h, kappa0, z, n - 1);
  double kappa = kappa0;
  for (int k = 1; k < n; ++k) kappa /= h.entries(k, k - 1).real();
  cplx s = z * phi[n - 1];
  for (int j = 0; j < n; ++j) s -= h.entries(j, n - 1) * phi[j];
  return s / kappa;
}

double orthonormality_residual(const OrthoBasis& basis, const DiscretizedMeasure& mu) {
  const auto wts = mu.support_weights();
  const auto pts = mu.support_points();
  if (static_cast<Eigen::Index>(wts.size()) != basis.values.rows())
    throw InputError("orthonormality_residual: basis does not belong to this measure");
  Eigen::VectorXd w(wts.size());
  Eigen::VectorXcd z(pts.size());
  for (std::size_t i = 0; i < wts.size(); ++i) {
    w(i) = wts[i];
    z(i) = pts[i];
  }
  const Eigen::MatrixXcd weighted = w.cast<cplx>().asDiagonal() * basis.values;
  const Eigen::MatrixXcd gram = basis.values.adjoint() * weighted;
  const Eigen::Index n1 = gram.rows();
  double res = (gram - Eigen::MatrixXcd::Identity(n1, n1)).cwiseAbs().maxCoeff();
  res = std::max(res, std::abs(basis.kappa[0] * std::sqrt(w.sum()) - 1.0));
  for (int n = 0; n < basis.N; ++n) {
    // <z phi_n, phi_{n+1}>
    const cplx lead = (basis.values.col(n + 1).adjoint() * z.cwiseProduct(weighted.col(n)))(0);
    const double expected = basis.kappa[n] / basis.kappa[n + 1];
    res = std::max(res, std::abs(lead - expected) / expected);
  }
  return res;
}

std::string hessenberg_to_csv(const HessenbergSection& h, const std::string& measure_hash) {
  const int N = h.size();
  std::string out = "# N=" + std::to_string(N) + ",measure_hash=" + measure_hash +
                    ",indexing=1-based M_jk=<z phi_{k-1},phi_{j-1}>; columns re_1,im_1,...,re_N,im_N\n";
  for (int j = 0; j < N; ++j) {
    for (int k = 0; k < N; ++k) {
      if (k) out += ",";
      out += format_double(h.entries(j, k).real()) + "," + format_double(h.entries(j, k).imag());
    }
    out += "\n";
  }
  return out;
}

HessenbergSection hessenberg_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  const int N = static_cast<int>(rows.size());
  HessenbergSection h;
  h.entries.resize(N, N);
  for (int j = 0; j < N; ++j) {
    if (static_cast<int>(rows[j].size()) != 2 * N) throw InputError("hessenberg_from_csv: ragged row");
    for (int k = 0; k < N; ++k) h.entries(j, k) = cplx(rows[j][2 * k], rows[j][2 * k + 1]);
  }
  for (int k = 0; k + 1 < N; ++k)
    if (!(h.entries(k + 1, k).real() > 0.0)) h.subdiag_positive = false;
  return h;
}

std::string hessenberg_to_json(const HessenbergSection& h, const std::vector<double>& kappa,
                               const std::string& measure_hash) {
  nlohmann::json j;
  j["N"] = h.size();
  j["measure_hash"] = measure_hash;
  j["indexing"] = "1-based; M_jk = <z phi_{k-1}, phi_{j-1}>; e_{n+1} <-> phi_n";
  j["kappa"] = kappa;
  auto rows = nlohmann::json::array();
  for (int r = 0; r < h.size(); ++r) {
    auto row = nlohmann::json::array();
    for (int c = 0; c < h.size(); ++c) row.push_back({h.entries(r, c).real(), h.entries(r, c).imag()});
    rows.push_back(std::move(row));
  }
  j["entries"] = std::move(rows);
  return j.dump(1);
}

HessenbergSection hessenberg_from_json(const std::string& text, std::vector<double>* kappa, std::string* measure_hash) {
  const auto j = nlohmann::json::parse(text);
  const int N = j.at("N").get<int>();
  HessenbergSection h;
  h.entries.resize(N, N);
  const auto& rows = j.at("entries");
  if (static_cast<int>(rows.size()) != N) throw InputError("hessenberg_from_json: row count differs from N");
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) h.entries(r, c) = cplx(rows[r][c][0].get<double>(), rows[r][c][1].get<double>());
  for (int k = 0; k + 1 < N; ++k)
    if (!(h.entries(k + 1, k).real() > 0.0)) h.subdiag_positive = false;
  if (kappa && j.contains("kappa")) *kappa = j["kappa"].get<std::vector<double>>();
  if (measure_hash && j.contains("measure_hash")) *measure_hash = j["measure_hash"].get<std::string>();
  return h;
}

std::string basis_to_csv(const OrthoBasis& basis) {
  std::string out = "# N=" + std::to_string(basis.N) + ",measure_hash=" + basis.measure_hash +
                    ",rows=support points (nodes then atoms); columns re_0,im_0,...,re_N,im_N\n# kappa";
  for (double k : basis.kappa) out += "," + format_double(k);
  out += "\n";
  for (Eigen::Index i = 0; i < basis.values.rows(); ++i) {
    for (Eigen::Index n = 0; n < basis.values.cols(); ++n) {
      if (n) out += ",";
      out += format_double(basis.values(i, n).real()) + "," + format_double(basis.values(i, n).imag());
    }
    out += "\n";
  }
  return out;
}

} // namespace bergman
