#include "bergman/asymptotics.hpp"
#include "bergman/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bergman;

namespace {

const double pi = std::numbers::pi;

PolynomialSpec poly(std::vector<cplx> c) { return make_polynomial(c); }

DiscretizedMeasure disk_measure(int N) {
  QuadratureConfig cfg;
  cfg.target_degree = 2 * N + 4;
  return discretize_area({poly({0.0, 1.0}), 1.0}, cfg);
}

DiscretizedMeasure ovals_measure(int depth) {
  QuadratureConfig cfg;
  cfg.cell_depth = depth;
  return discretize_area({poly({-1.0, 0.0, 1.0}), 0.5}, cfg);
}

DiscretizedMeasure circle_measure(double scale, std::vector<Atom> atoms = {}) {
  QuadratureConfig cfg;
  cfg.boundary_nodes = 1024;
  MeasurePart part;
  part.kind = PartKind::Boundary;
  part.lem = {poly({0.0, 1.0}), 1.0};
  part.scale = scale;
  return assemble_measure({part}, atoms, cfg);
}

std::vector<cplx> to_cplx(const std::vector<double>& x) { return {x.begin(), x.end()}; }

} // namespace

TEST_CASE("christoffel_lambda") {
  const auto mu = disk_measure(40);
  const auto o = orthogonalize(mu, 40);
  // sum |phi_n(0)|^2 = 1/pi for the disk, for every N
  CHECK(std::abs(christoffel_lambda(o.basis, o.hessenberg, 0.0) - pi) < 1e-10);
  CHECK(std::abs(christoffel_lambda(o.basis, o.hessenberg, 0.0, 3) - pi) < 1e-10);

  double prev = INFINITY;
  for (int upto = 0; upto <= 40; ++upto) {
    const double l = christoffel_lambda(o.basis, o.hessenberg, cplx(0.5, 0.2), upto);
    CHECK(l <= prev * (1.0 + 1e-14));
    prev = l;
  }
  // lambda(z) -> pi (1 - |z|^2)^2 inside the disk
  const double a = 0.25;
  CHECK(std::abs(christoffel_lambda(o.basis, o.hessenberg, a) - pi * (1 - a * a) * (1 - a * a)) < 1e-10);

  // normalized arc length on the unit circle: phi_n = z^n
  const auto c = circle_measure(1.0 / (2 * pi));
  const auto oc = orthogonalize(c, 20);
  CHECK(std::abs(christoffel_lambda(oc.basis, oc.hessenberg, 0.0) - 1.0) < 1e-10);
}

TEST_CASE("kbound_scan") {
  const auto mu = disk_measure(60);
  const auto rep = kbound_scan(mu, poly({0.0, 1.0}), 1.0, 60, 0.1);
  CHECK(rep.flagged() == 0);
  CHECK(!rep.grid.empty());
  CHECK(rep.grid.size() <= 200);
  for (const auto& s : rep.partial_sums)
    for (std::size_t n = 1; n < s.size(); ++n) CHECK(s[n] >= s[n - 1]);

  CHECK_THROWS_AS(kbound_scan(circle_measure(1.0), poly({0.0, 1.0}), 1.0, 20, 0.1), InputError);
  CHECK_THROWS_AS(kbound_scan(mu, poly({0.0, 1.0}), 1.0, 20, 1.5), InputError);
}

TEST_CASE("weak_concentration") {
  const auto mu = disk_measure(30);
  const auto o = orthogonalize(mu, 30);
  const auto reps = weak_concentration(o.basis, mu, poly({0.0, 1.0}), {0.5, 1.0});
  REQUIRE(reps.size() == 2);
  // int_{|z| <= s} |phi_n|^2 dA = s^{2n+2}
  for (int n = 0; n <= 30; ++n) CHECK(std::abs(reps[0].values[n].real() - std::pow(0.5, 2 * n + 2)) < 1e-12);
  CHECK(std::abs(reps[0].values[3].real() - 0.00390625) < 1e-12);
  for (const auto& v : reps[1].values) CHECK(std::abs(v.real() - 1.0) < 1e-10);

  const auto other = orthogonalize(ovals_measure(6), 10);
  CHECK_THROWS_AS(weak_concentration(other.basis, mu, poly({0.0, 1.0}), {0.5}), InputError);
}

TEST_CASE("aitken_tail") {
  std::vector<double> geo, alg, flat;
  for (int n = 1; n <= 60; ++n) {
    geo.push_back(1.0 + std::pow(0.6, n));
    alg.push_back(2.0 - 1.0 / n);
    flat.push_back(3.0);
  }
  const auto g = aitken_tail(to_cplx(geo));
  REQUIRE(g);
  CHECK(g->method == "aitken");
  CHECK(std::abs(g->value - 1.0) < 1e-12);

  // 1/n error: plain Aitken would leave about 1/(2n)
  const auto a = aitken_tail(to_cplx(alg));
  REQUIRE(a);
  CHECK(a->method == "aitken-dyadic");
  CHECK(std::abs(a->value - 2.0) < 1e-10);

  const auto f = aitken_tail(to_cplx(flat));
  REQUIRE(f);
  CHECK(f->method == "last-value");
  CHECK(f->value == cplx(3.0, 0.0));

  CHECK_FALSE(aitken_tail(to_cplx({1.0, 2.0, 3.0, 4.0, 5.0})));
}

TEST_CASE("kappa_ratio") {
  const auto mu = disk_measure(120);
  const auto o = orthogonalize(mu, 120);
  const auto rep = kappa_ratio(o.basis, 1);
  CHECK(rep.values.size() == 120);
  for (int n = 0; n < 120; ++n) CHECK(std::abs(rep.values[n].real() - std::sqrt((n + 1.0) / (n + 2.0))) < 1e-10);
  REQUIRE(rep.extrapolated);
  CHECK(std::abs(rep.extrapolated->value - 1.0) < 1e-3);
  CHECK_THROWS_AS(kappa_ratio(o.basis, 31), InputError);

  const auto r0 = kappa_ratio_residue(o.basis, 2, 0);
  CHECK(std::abs(r0.values[3].real() - std::sqrt(7.0 / 8.0)) < 1e-10);
  CHECK_THROWS_AS(kappa_ratio_residue(o.basis, 2, 2), InputError);
}

TEST_CASE("ratio_asymptotics on the disk") {
  const auto mu = disk_measure(30);
  const auto o = orthogonalize(mu, 30);
  const auto z = poly({0.0, 1.0});
  const auto cor = ratio_asymptotics(o.basis, o.hessenberg, mu, z, 1.0, 2.0, RatioMode::Corollary);
  CHECK(std::abs(cor.values[10] - std::sqrt(11.0 / 12.0)) < 1e-10);
  CHECK(std::abs(cor.values[10] - 0.9574) < 1e-4);
  const auto mon = ratio_asymptotics(o.basis, o.hessenberg, mu, z, 1.0, 2.0, RatioMode::Monic);
  for (const auto& v : mon.values) CHECK(std::abs(v - 2.0) < 1e-9);
  CHECK_THROWS_AS(ratio_asymptotics(o.basis, o.hessenberg, mu, z, 1.0, 0.3, RatioMode::Monic), InputError);
  CHECK_THROWS_AS(ratio_asymptotics(o.basis, o.hessenberg, mu, z, 1.0, 0.5, RatioMode::Residue), InputError);
}

TEST_CASE("christoffel_shift_check") {
  const auto mu = disk_measure(30);
  const auto one = christoffel_shift_check(mu, {0.0}, 20);
  REQUIRE(one.size() == 1);
  for (const auto& v : one[0].values) CHECK(std::abs(v - 1.0) < 1e-10);

  // the chain measure depends only on the multiset of roots
  const auto ov = ovals_measure(6);
  const std::vector<cplx> roots{cplx(0.3, 0.1), cplx(-0.8, 0.2)};
  const auto w1 = apply_polynomial_weight(apply_polynomial_weight(ov, polynomial_from_roots(std::vector<cplx>{roots[0]})),
                                          polynomial_from_roots(std::vector<cplx>{roots[1]}));
  const auto w2 = apply_polynomial_weight(apply_polynomial_weight(ov, polynomial_from_roots(std::vector<cplx>{roots[1]})),
                                          polynomial_from_roots(std::vector<cplx>{roots[0]}));
  REQUIRE(w1.weights.size() == w2.weights.size());
  for (std::size_t i = 0; i < w1.weights.size(); ++i)
    CHECK(std::abs(w1.weights[i] - w2.weights[i]) <= 1e-14 * std::max(1.0, w1.weights[i]));
  const auto c1 = christoffel_shift_check(ov, roots, 15);
  const auto c2 = christoffel_shift_check(ov, {roots[1], roots[0]}, 15);
  REQUIRE(c1.size() == 2);
  // second link ends at the same measure mu_2 from either order: compare kappa products
  for (std::size_t n = 0; n + 1 < c1[1].values.size(); ++n) {
    const cplx p1 = c1[1].values[n] * c1[0].values[n + 1];
    const cplx p2 = c2[1].values[n] * c2[0].values[n + 1];
    CHECK(std::abs(p1 - p2) < 1e-10);
  }
}

TEST_CASE("islands_reference") {
  // q = 1: the disk |z - 1| < r has Phi_n = (z - 1)^n
  for (cplx z : {cplx(3.0, 0.0), cplx(0.0, 2.5), cplx(-2.0, -2.0)})
    CHECK(std::abs(islands_reference(1, 0.5, z, 0) - 1.0 / (z - 1.0)) < 1e-14);
  // the product over one period is 1/(z^q - 1)
  const cplx a = islands_reference(2, 0.5, 3.0, 0);
  const cplx b = islands_reference(2, 0.5, 3.0, 1);
  CHECK(std::abs(a * b - 1.0 / 8.0) < 1e-14);
  CHECK_THROWS_AS(islands_reference(3, 0.7, 1.5, 0), InputError);
  CHECK_THROWS_AS(islands_reference(3, 1.2, 3.0, 0), InputError);
  CHECK_THROWS_AS(islands_reference(3, 0.7, 3.0, 3), InputError);
}

TEST_CASE("atoms: mass decay and exterior kappa limit") {
  // interior atom on arc length: its Christoffel weight vanishes along phi_n
  const auto mu = circle_measure(1.0, {{cplx(0.5, 0.0), 0.3}});
  const auto o = orthogonalize(mu, 60);
  const auto dec = atom_mass_decay(o.basis, mu);
  CHECK(dec.values.size() == 61);
  CHECK(dec.tail_max_abs(10) < 1e-10);
  CHECK(std::abs(dec.values[0] - 0.3 / (2 * pi + 0.3)) < 1e-10);

  // one exterior atom at 2 on the unit circle: kappa_{n-1}(nu) / kappa_n(mu) -> r^{1/q} = 1
  const auto ext = circle_measure(1.0, {{cplx(2.0, 0.0), 0.5}});
  const auto oe = orthogonalize(ext, 40);
  const auto seq = exterior_atom_kappa_sequence(ext, oe.basis, {poly({0.0, 1.0}), 1.0}, 40);
  REQUIRE(seq.extrapolated);
  CHECK(std::abs(seq.extrapolated->value - 1.0) < 1e-3);
  CHECK(seq.n_values.front() == 1);
  CHECK_THROWS_AS(exterior_atom_kappa_sequence(mu, o.basis, {poly({0.0, 1.0}), 1.0}, 40), InputError);

  const auto sc = scale_measure(mu, 3.0);
  CHECK(std::abs(sc.total_mass - 3.0 * mu.total_mass) < 1e-12);
  CHECK_THROWS_AS(scale_measure(mu, 0.0), InputError);
}
