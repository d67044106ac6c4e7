#include "bergman/asymptotics.hpp"
#include "bergman/error.hpp"
#include "bergman/orthopoly.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bergman;

namespace {

const double pi = std::numbers::pi;

DiscretizedMeasure disk_measure(int N) {
  QuadratureConfig cfg;
  cfg.target_degree = 2 * N + 4;
  return discretize_area({make_polynomial(std::vector<cplx>{0.0, 1.0}), 1.0}, cfg);
}

DiscretizedMeasure ovals_measure(int depth) {
  QuadratureConfig cfg;
  cfg.cell_depth = depth;
  return discretize_area({make_polynomial(std::vector<cplx>{-1.0, 0.0, 1.0}), 0.5}, cfg);
}

DiscretizedMeasure three_atoms() {
  return assemble_measure({}, {{cplx(0.0, 0.0), 1.0}, {cplx(1.0, 0.5), 0.5}, {cplx(-0.3, 1.0), 2.0}}, QuadratureConfig{});
}

} // namespace

TEST_CASE("disk closed forms at N = 10") {
  const auto mu = disk_measure(10);
  const auto o = orthogonalize(mu, 10);
  const auto& H = o.hessenberg;
  for (int j = 1; j <= 10; ++j)
    for (int k = 1; k <= 10; ++k) {
      const cplx expect = j == k + 1 ? std::sqrt(double(k) / (k + 1)) : 0.0;
      CHECK(std::abs(H.at(j, k) - expect) < 1e-10);
    }
  for (int n = 0; n <= 10; ++n) CHECK(std::abs(o.basis.kappa[n] - std::sqrt((n + 1) / pi)) < 1e-10);
  CHECK(o.basis.kappa[0] == doctest::Approx(0.5641895835).epsilon(1e-9));
  CHECK(o.basis.measure_hash == mu.hash());
}

TEST_CASE("Hessenberg structure and subdiagonal identity") {
  const auto mu = ovals_measure(7);
  const auto o = orthogonalize(mu, 40);
  const auto& H = o.hessenberg;
  CHECK(H.subdiag_positive);
  for (int k = 1; k <= 40; ++k) {
    for (int j = k + 2; j <= 40; ++j) CHECK(H.at(j, k) == cplx(0.0, 0.0));
    if (k < 40) {
      CHECK(H.at(k + 1, k).imag() == 0.0);
      CHECK(H.at(k + 1, k).real() > 0.0);
      CHECK(std::abs(H.at(k + 1, k).real() * o.basis.kappa[k] - o.basis.kappa[k - 1]) <= 1e-10 * o.basis.kappa[k - 1]);
    }
  }
  CHECK(std::abs(o.basis.kappa[0] * std::sqrt(mu.total_mass) - 1.0) < 1e-12);
}

TEST_CASE("dimension guard on an atoms-only measure") {
  const auto mu = three_atoms();
  const auto o = orthogonalize(mu, 2);
  CHECK(orthonormality_residual(o.basis, mu) < 1e-12);
  CHECK_THROWS_AS(orthogonalize(mu, 3), InputError);
}

TEST_CASE("evaluate_phi") {
  const auto mu = disk_measure(12);
  const auto o = orthogonalize(mu, 12);
  const auto at0 = evaluate_phi(o.hessenberg, o.basis.kappa[0], 0.0, 11);
  CHECK(std::abs(at0[0] - 1.0 / std::sqrt(pi)) < 1e-14);
  for (int n = 1; n <= 11; ++n) CHECK(std::abs(at0[n]) < 1e-12);
  const auto at2 = evaluate_phi(o.hessenberg, o.basis.kappa[0], 2.0, 3);
  CHECK(std::abs(at2[3] - std::sqrt(4 / pi) * 8.0) < 1e-9);
  CHECK(std::abs(at2[3] - 9.027) < 1e-3);
  CHECK(std::abs(evaluate_monic(o.hessenberg, o.basis.kappa[0], 2.0, 5) - 32.0) < 1e-10);

  // node values reproduced by the recurrence
  const auto ov = ovals_measure(7);
  const auto oo = orthogonalize(ov, 30);
  for (std::size_t i = 0; i < ov.nodes.size(); i += 97) {
    const auto phi = evaluate_basis(oo.basis, oo.hessenberg, ov.nodes[i]);
    for (int n = 0; n <= 30; ++n) CHECK(std::abs(phi[n] - oo.basis.values(i, n)) < 1e-8);
  }
}

TEST_CASE("orthonormality residual and its detector") {
  const auto mu = disk_measure(40);
  auto o = orthogonalize(mu, 40);
  CHECK(orthonormality_residual(o.basis, mu) < 1e-11);
  o.basis.kappa[17] *= 1.01;
  CHECK(orthonormality_residual(o.basis, mu) > 1e-3);
}

TEST_CASE("scaling covariance") {
  const auto mu = ovals_measure(7);
  const auto a = orthogonalize(mu, 30);
  for (double c : {0.1, 2.5, 40.0}) {
    const auto b = orthogonalize(scale_measure(mu, c), 30);
    for (int n = 0; n <= 30; ++n)
      CHECK(std::abs(b.basis.kappa[n] * std::sqrt(c) / a.basis.kappa[n] - 1.0) < 1e-12);
    CHECK((b.hessenberg.entries - a.hessenberg.entries).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("extremal bound on kappa ratios") {
  const auto p = make_polynomial(std::vector<cplx>{-1.0, 0.0, 1.0});
  const auto mu = ovals_measure(8);
  const auto o = orthogonalize(mu, 60);
  double bound = 0.0;
  for (auto z : mu.support_points()) bound = std::max(bound, std::abs(p(z)));
  CHECK(bound <= 0.5);
  for (int n = 0; n + 2 <= 60; ++n) CHECK(o.basis.kappa[n] / o.basis.kappa[n + 2] <= bound + 1e-8);
  // the bound holds for any monic polynomial of degree q, e.g. z^2 on the same measure
  const auto z2 = make_polynomial(std::vector<cplx>{0.0, 0.0, 1.0});
  double b2 = 0.0;
  for (auto z : mu.support_points()) b2 = std::max(b2, std::abs(z2(z)));
  for (int n = 0; n + 2 <= 60; ++n) CHECK(o.basis.kappa[n] / o.basis.kappa[n + 2] <= b2 + 1e-8);
}

TEST_CASE("monic minimality spot check") {
  const auto mu = ovals_measure(7);
  const auto o = orthogonalize(mu, 10);
  const auto pts = mu.support_points();
  const auto w = mu.support_weights();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int n = 1; n <= 6; ++n) {
    auto norm = [&](const std::vector<cplx>& lower) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < pts.size(); ++i)
        s += w[i] * std::norm(o.basis.values(i, n) / o.basis.kappa[n] + horner(lower, pts[i]));
      return std::sqrt(static_cast<double>(s));
    };
    const double base = norm(std::vector<cplx>(n, 0.0));
    CHECK(std::abs(base - 1.0 / o.basis.kappa[n]) < 1e-12 / o.basis.kappa[n]);
    for (int t = 0; t < 20; ++t) {
      std::vector<cplx> lower(n);
      for (auto& c : lower) c = 0.3 * cplx(g(rng), g(rng));
      CHECK(norm(lower) >= base - 1e-10);
    }
  }
}

TEST_CASE("monic polynomials against the moment oracle") {
  for (const auto& mu : {ovals_measure(7), three_atoms()}) {
    const int N = mu.support_size() > 10 ? 8 : 2;
    const auto o = orthogonalize(mu, N);
    for (int n = 0; n <= std::min(6, N); ++n)
      for (cplx z : {cplx(3.0, 0.0), cplx(0.0, 3.0), cplx(-2.0, 2.0), cplx(0.3, 0.1)}) {
        const cplx ref = oracle::monic_from_moments(mu, n, z);
        const cplx got = evaluate_monic(o.hessenberg, o.basis.kappa[0], z, n);
        CHECK(std::abs(got - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
      }
  }
}

TEST_CASE("export and import round trips") {
  const auto mu = ovals_measure(6);
  const auto o = orthogonalize(mu, 12);
  const auto csv = hessenberg_to_csv(o.hessenberg, mu.hash());
  CHECK(csv.find("N=12") != std::string::npos);
  CHECK(csv.find(mu.hash()) != std::string::npos);
  const auto back = hessenberg_from_csv(csv);
  CHECK((back.entries - o.hessenberg.entries).cwiseAbs().maxCoeff() == 0.0);

  std::vector<double> kappa;
  std::string hash;
  const auto fromj = hessenberg_from_json(hessenberg_to_json(o.hessenberg, o.basis.kappa, mu.hash()), &kappa, &hash);
  CHECK((fromj.entries - o.hessenberg.entries).cwiseAbs().maxCoeff() == 0.0);
  CHECK(kappa == o.basis.kappa);
  CHECK(hash == mu.hash());

  const auto bcsv = basis_to_csv(o.basis);
  CHECK(std::count(bcsv.begin(), bcsv.end(), '\n') >= static_cast<long>(mu.support_size()));
  CHECK_THROWS(hessenberg_from_csv("garbage"));
}
