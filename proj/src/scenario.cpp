#include "bergman/scenario.hpp"
#include "bergman/asymptotics.hpp"
#include "bergman/error.hpp"
#include "bergman/io.hpp"
#include "bergman/operator_analysis.hpp"
#include "bergman/orthopoly.hpp"

#include <Eigen/Core>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#ifndef BERGMAN_SCENARIO_DIR
#define BERGMAN_SCENARIO_DIR "scenarios"
#endif

namespace bergman {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& msg) {
  throw InputError("scenario field '" + field + "': " + msg);
}

double as_number(const json& j, const std::string& field) {
  if (!j.is_number()) field_error(field, "expected a number, got " + j.dump());
  return j.get<double>();
}

int as_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) field_error(field, "expected an integer, got " + j.dump());
  return j.get<int>();
}

std::string as_string(const json& j, const std::string& field) {
  if (!j.is_string()) field_error(field, "expected a string, got " + j.dump());
  return j.get<std::string>();
}

cplx as_complex(const json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  field_error(field, "expected a number or a [re, im] pair, got " + j.dump());
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) field_error(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Typed access to one diagnostic's parameter object.
class Params {
public:
  Params(const json& j, std::string where) : j_(j), where_(std::move(where)) {}

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string field(const std::string& key) const { return where_ + "." + key; }

  double number(const std::string& key, double def) const {
    return has(key) ? as_number(j_.at(key), field(key)) : def;
  }
  int integer(const std::string& key, int def) const { return has(key) ? as_int(j_.at(key), field(key)) : def; }
  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    if (!j_.at(key).is_boolean()) field_error(field(key), "expected a boolean");
    return j_.at(key).get<bool>();
  }
  std::string string(const std::string& key, const std::string& def) const {
    return has(key) ? as_string(j_.at(key), field(key)) : def;
  }
  cplx complex(const std::string& key, cplx def) const { return has(key) ? as_complex(j_.at(key), field(key)) : def; }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) const {
    if (!has(key)) return def;
    const auto& a = j_.at(key);
    if (a.is_number()) return {a.get<double>()};
    if (!a.is_array()) field_error(field(key), "expected a number or an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_number(a[i], field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }
  std::vector<int> integers(const std::string& key, std::vector<int> def) const {
    if (!has(key)) return def;
    const auto& a = j_.at(key);
    if (a.is_number_integer()) return {a.get<int>()};
    if (!a.is_array()) field_error(field(key), "expected an integer or an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_int(a[i], field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }
  std::vector<cplx> complexes(const std::string& key, std::vector<cplx> def) const {
    if (!has(key)) return def;
    const auto& a = j_.at(key);
    if (!a.is_array()) field_error(field(key), "expected an array of points");
    std::vector<cplx> out;
    for (std::size_t i = 0; i < a.size(); ++i)
      out.push_back(as_complex(a[i], field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

private:
  const json& j_;
  std::string where_;
};

struct Context {
  const Scenario& sc;
  PolynomialSpec p;
  LemniscateSpec lem;
  double r = 1.0;
  int q = 1;
  int N = 0;
  DiscretizedMeasure mu;
  Orthogonalization orth;
  std::optional<FiniteSection> pm_cache;

  const OrthoBasis& basis() const { return orth.basis; }
  const HessenbergSection& h() const { return orth.hessenberg; }
  const FiniteSection& pm() {
    if (!pm_cache) pm_cache = poly_of_section(h(), p);
    return *pm_cache;
  }
  double max_support_abs_p() const {
    double m = 0.0;
    for (const auto& z : mu.support_points()) m = std::max(m, std::abs(p(z)));
    return m;
  }
};

struct Output {
  json values = json::object();
  json details = json::object();
  std::vector<SequenceReport> sequences;
};

using DiagnosticFn = std::function<void(Context&, const Params&, Output&)>;

struct DiagnosticDef {
  std::string name;
  std::set<std::string> params;
  std::string doc;
  DiagnosticFn run;
};

SequenceReport make_sequence(std::string label, int n0, const std::vector<double>& v) {
  SequenceReport s;
  s.label = std::move(label);
  for (std::size_t i = 0; i < v.size(); ++i) {
    s.n_values.push_back(n0 + static_cast<int>(i));
    s.values.emplace_back(v[i], 0.0);
  }
  return s;
}

// Default test points for determinant checks: three points well outside the support.
std::vector<cplx> far_points(const DiscretizedMeasure& mu) {
  const double R = 1.0 + 2.0 * mu.max_modulus();
  std::vector<cplx> pts;
  for (int k = 0; k < 3; ++k) pts.push_back(std::polar(R, 0.3 + 2.0 * std::numbers::pi * k / 3.0));
  return pts;
}

// ---------------------------------------------------------------------------
// Diagnostics

void diag_hessenberg_check(Context& c, const Params& prm, Output& out) {
  const auto& H = c.h();
  const auto& kappa = c.basis().kappa;
  const int N = H.size();
  double min_sub = INFINITY, sub_kappa = 0.0, below = 0.0;
  for (int k = 1; k < N; ++k) {
    const cplx s = H.at(k + 1, k);
    min_sub = std::min(min_sub, s.real());
    sub_kappa = std::max(sub_kappa, std::abs(s * kappa[k] - kappa[k - 1]) / kappa[k - 1]);
    for (int j = k + 2; j <= N; ++j) below = std::max(below, std::abs(H.at(j, k)));
  }
  out.values["size"] = N;
  out.values["subdiag_positive"] = H.subdiag_positive;
  out.values["min_subdiag"] = min_sub;
  out.values["subdiag_kappa_error"] = sub_kappa;
  out.values["structural_zero_max"] = below;

  const auto ref = prm.string("reference", "");
  if (ref.empty()) return;
  if (ref != "unit_disk_area") field_error(prm.field("reference"), "unknown reference '" + ref + "'");
  double sub_err = 0.0, off = 0.0, kap_err = 0.0;
  for (int j = 1; j <= N; ++j)
    for (int k = 1; k <= N; ++k) {
      if (j == k + 1)
        sub_err = std::max(sub_err, std::abs(H.at(j, k) - std::sqrt(double(k) / (k + 1))));
      else
        off = std::max(off, std::abs(H.at(j, k)));
    }
  for (std::size_t n = 0; n < kappa.size(); ++n)
    kap_err = std::max(kap_err, std::abs(kappa[n] - std::sqrt((n + 1.0) / std::numbers::pi)));
  out.values["max_subdiag_error"] = sub_err;
  out.values["max_off_subdiag"] = off;
  out.values["max_kappa_error"] = kap_err;
}

void diag_orthonormality(Context& c, const Params&, Output& out) {
  out.values["residual"] = orthonormality_residual(c.basis(), c.mu);
}

void diag_char_poly(Context& c, const Params& prm, Output& out) {
  const int n_max = prm.integer("n_max", std::min(15, c.N));
  if (n_max < 1 || n_max > std::min(c.N, 25)) field_error(prm.field("n_max"), "must lie in [1, min(N, 25)]");
  const auto pts = prm.complexes("points", far_points(c.mu));
  std::vector<double> errs;
  json notes = json::array();
  for (int n = 1; n <= n_max; ++n) {
    const auto chk = char_poly_check(c.h(), c.basis(), n, pts);
    errs.push_back(chk.max_relative_error);
    for (const auto& s : chk.notes) notes.push_back("n=" + std::to_string(n) + ": " + s);
  }
  out.values["max_error"] = *std::max_element(errs.begin(), errs.end());
  out.values["n_max"] = n_max;
  json jp = json::array();
  for (auto z : pts) jp.push_back(complex_json(z));
  out.details["points"] = jp;
  out.details["notes"] = notes;
  out.sequences.push_back(make_sequence("char_poly_relative_error", 1, errs));
}

struct ResidualSummary {
  double max_gap = 0.0;
  double head_median = 0.0;
  double tail_median = 0.0;
  std::vector<double> residual, matrix_side, measure_side;
};

ResidualSummary residual_summary(Context& c, int head_lo, int head_hi, int tail_count) {
  ResidualSummary s;
  const int last = c.N - c.q;
  std::vector<double> head, tail;
  for (int n = 1; n <= last; ++n) {
    const auto sr = shift_residual(c.pm(), c.basis(), c.mu, c.p, c.r, n);
    s.max_gap = std::max(s.max_gap, std::abs(sr.matrix_side - sr.measure_side));
    s.residual.push_back(sr.residual());
    s.matrix_side.push_back(sr.matrix_side);
    s.measure_side.push_back(sr.measure_side);
    if (n >= head_lo && n <= head_hi) head.push_back(sr.residual());
    if (n > last - tail_count) tail.push_back(sr.residual());
  }
  s.head_median = median_of(head);
  s.tail_median = median_of(tail);
  return s;
}

void diag_shift_residual(Context& c, const Params& prm, Output& out) {
  const auto head = prm.integers("head", {5, 20});
  if (head.size() != 2 || head[0] < 1 || head[1] < head[0]) field_error(prm.field("head"), "expected [lo, hi]");
  const int tail = prm.integer("tail_count", 15);
  if (tail < 1) field_error(prm.field("tail_count"), "must be >= 1");
  const auto s = residual_summary(c, head[0], head[1], tail);
  out.values["admissible"] = c.N - c.q;
  out.values["max_identity_gap"] = s.max_gap;
  out.values["head_median"] = s.head_median;
  out.values["tail_median"] = s.tail_median;
  out.values["decay_ratio"] = s.tail_median / s.head_median;
  out.values["first"] = s.residual.front();
  out.values["last"] = s.residual.back();
  out.sequences.push_back(make_sequence("residual", 1, s.residual));
  out.sequences.push_back(make_sequence("matrix_side", 1, s.matrix_side));
  out.sequences.push_back(make_sequence("measure_side", 1, s.measure_side));
}

void diag_trace_window(Context& c, const Params& prm, Output& out) {
  const int tail = prm.integer("tail_count", 20);
  if (tail < 1) field_error(prm.field("tail_count"), "must be >= 1");
  SequenceReport s;
  s.label = "trace_window";
  for (int n = 0; n + c.q <= c.N; ++n) {
    s.n_values.push_back(n);
    s.values.push_back(trace_window(c.h(), c.q, n));
  }
  double dev = 0.0;
  const std::size_t start = s.values.size() > std::size_t(tail) ? s.values.size() - tail : 0;
  for (std::size_t i = start; i < s.values.size(); ++i) dev = std::max(dev, std::abs(s.values[i] - c.p.alpha));
  out.values["alpha_re"] = c.p.alpha.real();
  out.values["alpha_im"] = c.p.alpha.imag();
  out.values["tail_max_deviation"] = dev;
  out.values["last_deviation"] = std::abs(s.values.back() - c.p.alpha);
  extrapolate(s);
  out.sequences.push_back(std::move(s));
}

json window_json(const Eigen::MatrixXcd& w) {
  json rows = json::array();
  for (int a = 0; a < w.rows(); ++a) {
    json row = json::array();
    for (int b = 0; b < w.cols(); ++b) row.push_back(complex_json(w(a, b)));
    rows.push_back(row);
  }
  return rows;
}

double shift_pattern_error(const RightLimitWindow& w) {
  double e = 0.0;
  const int m = w.half_width;
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b) e = std::max(e, std::abs(w.at(a, b) - (a == b + 1 ? 1.0 : 0.0)));
  return e;
}

void emit_window(const RightLimitWindow& w, const std::string& suffix, Output& out) {
  out.values["converged" + suffix] = w.converged;
  out.values["max_difference" + suffix] = w.max_difference;
  out.values["below_hessenberg" + suffix] = w.below_hessenberg;
  out.values["periodicity_error" + suffix] = w.periodicity_error;
  if (w.relation_checked) out.values["relation_error" + suffix] = w.relation_error;
  out.values["shift_pattern_error" + suffix] = shift_pattern_error(w);
  out.details["window" + suffix] = window_json(w.window);
  out.details["subsequence" + suffix] = w.subsequence;
}

std::vector<int> residues(const Params& prm, int q) {
  std::vector<int> all(q);
  for (int s = 0; s < q; ++s) all[s] = s;
  auto rs = prm.integers("s", all);
  for (int s : rs)
    if (s < 0 || s >= q) field_error(prm.field("s"), "residue " + std::to_string(s) + " outside [0, q-1]");
  return rs;
}

void diag_right_limit(Context& c, const Params& prm, Output& out) {
  const int m = prm.integer("m", 4);
  const double tol = prm.number("tol", 0.05);
  const bool relation = prm.boolean("check_relation", true);
  bool all_conv = true;
  double per = 0.0, rel = 0.0, pat = 0.0;
  for (int s : residues(prm, c.q)) {
    const auto w = right_limit(c.h(), c.q, s, m, tol, relation ? &c.p : nullptr, c.r);
    emit_window(w, "_s" + std::to_string(s), out);
    all_conv = all_conv && w.converged;
    per = std::max(per, w.periodicity_error);
    rel = std::max(rel, w.relation_error);
    pat = std::max(pat, shift_pattern_error(w));
    out.sequences.push_back(make_sequence("successive_differences_s" + std::to_string(s), 1, w.successive_differences));
  }
  out.values["all_converged"] = all_conv;
  out.values["max_periodicity_error"] = per;
  if (relation) out.values["max_relation_error"] = rel;
  out.values["max_shift_pattern_error"] = pat;
}

void diag_block_toeplitz(Context& c, const Params& prm, Output& out) {
  const int m = prm.integer("m", 4);
  const double tol = prm.number("tol", 0.05);
  const auto rep = block_toeplitz_diagnostic(c.h(), c.q, m, tol);
  out.values["verdict"] = rep.verdict;
  out.values["periodicity_error"] = rep.periodicity_error;
  out.values["shift_consistency"] = rep.shift_consistency;
  double md = 0.0;
  for (const auto& w : rep.classes) {
    const auto sfx = "_s" + std::to_string(w.center_residue);
    out.values["converged" + sfx] = w.converged;
    out.values["max_difference" + sfx] = w.max_difference;
    md = std::max(md, w.max_difference);
  }
  out.values["max_difference"] = md;
}

void diag_operator_identity(Context& c, const Params& prm, Output& out) {
  const auto ks = prm.integers("k", {0, 1, 2});
  std::vector<int> ns = prm.integers("n", {});
  double gap = 0.0;
  json rows = json::array();
  for (int k : ks) {
    if (k < 0) field_error(prm.field("k"), "must be >= 0");
    std::vector<int> use = ns;
    if (use.empty()) {
      const int hi = c.N - 1 - k * c.q;
      for (int n : {0, hi / 4, hi / 2, hi})
        if (n >= 0 && (use.empty() || use.back() != n)) use.push_back(n);
    }
    for (int n : use) {
      const auto [lhs, rhs] = operator_measure_identity(c.h(), c.basis(), c.mu, c.p, k, n);
      const double g = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
      gap = std::max(gap, g);
      rows.push_back({{"k", k}, {"n", n}, {"matrix_side", lhs}, {"measure_side", rhs}});
    }
  }
  out.values["max_relative_gap"] = gap;
  out.details["pairs"] = rows;
}

void diag_christoffel_lambda(Context& c, const Params& prm, Output& out) {
  const auto pts = prm.complexes("points", {cplx(0.0, 0.0)});
  const int half = prm.integer("compare_degree", c.N / 2);
  double worst = 0.0;
  json jp = json::array();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double full = christoffel_lambda(c.basis(), c.h(), pts[i]);
    const double part = christoffel_lambda(c.basis(), c.h(), pts[i], half);
    out.values["lambda_" + std::to_string(i)] = full;
    worst = std::max(worst, full - part);
    jp.push_back(complex_json(pts[i]));
  }
  out.values["monotonicity_violation"] = worst;
  out.details["points"] = jp;
  out.details["label"] = "upper bound (sum_{n<=N} |phi_n(z)|^2)^{-1}";
}

void diag_kbound(Context& c, const Params& prm, Output& out) {
  const int N = prm.integer("degree", std::min(c.N, 100));
  const double margin = prm.number("margin", 0.3);
  const auto rep = kbound_scan(c.mu, c.p, c.r, N, margin);
  double frac = 0.0, nonmono = 0.0;
  std::vector<double> finals;
  for (std::size_t i = 0; i < rep.grid.size(); ++i) {
    frac = std::max(frac, rep.last_decade_fraction[i]);
    const auto& ps = rep.partial_sums[i];
    for (std::size_t n = 1; n < ps.size(); ++n) nonmono = std::max(nonmono, ps[n - 1] - ps[n]);
    finals.push_back(ps.back());
  }
  out.values["grid_size"] = rep.grid.size();
  out.values["flagged"] = rep.flagged();
  out.values["max_last_decade_fraction"] = frac;
  out.values["max_partial_sum"] = *std::max_element(finals.begin(), finals.end());
  out.values["monotonicity_violation"] = nonmono;
  out.values["degree"] = N;
}

void diag_weak_concentration(Context& c, const Params& prm, Output& out) {
  const auto s_list = prm.numbers("s", {0.8 * c.r});
  for (double s : s_list)
    if (!(s > 0.0 && s <= c.r)) field_error(prm.field("s"), "each s must lie in (0, r]");
  const int from = prm.integer("monotone_from", c.q);
  const auto reference = prm.string("reference", "");
  const int ref_upto = prm.integer("reference_upto", 10);
  if (!reference.empty() && reference != "unit_disk_area")
    field_error(prm.field("reference"), "unknown reference '" + reference + "'");
  auto reps = weak_concentration(c.basis(), c.mu, c.p, s_list);
  double max_value = 0.0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    auto& rep = reps[i];
    const auto sfx = "_" + std::to_string(i);
    double inc = 0.0;
    for (std::size_t n = std::max(1, from); n < rep.values.size(); ++n)
      inc = std::max(inc, rep.values[n].real() - rep.values[n - 1].real());
    for (const auto& v : rep.values) max_value = std::max(max_value, v.real());
    out.values["s" + sfx] = s_list[i];
    out.values["last" + sfx] = rep.last().real();
    out.values["max_increase" + sfx] = inc;
    if (!reference.empty()) {
      double err = 0.0;
      for (int n = 0; n <= std::min(ref_upto, c.N); ++n)
        err = std::max(err, std::abs(rep.values[n].real() - std::pow(s_list[i], 2.0 * n + 2.0)));
      out.values["reference_error" + sfx] = err;
    }
    out.sequences.push_back(std::move(rep));
  }
  out.values["max_value"] = max_value;
}

void emit_sequence_limit(SequenceReport& s, const std::string& sfx, Output& out) {
  extrapolate(s);
  out.values["last" + sfx] = s.last().real();
  if (s.extrapolated) {
    out.values["extrapolated" + sfx] = s.extrapolated->value.real();
    out.details["method" + sfx] = s.extrapolated->method;
  }
}

void diag_kappa_ratio(Context& c, const Params& prm, Output& out) {
  const int stride = prm.integer("stride", c.q);
  auto s = kappa_ratio(c.basis(), stride);
  const double bound = c.max_support_abs_p();
  double excess = -INFINITY;
  if (stride == c.q)
    for (const auto& v : s.values) excess = std::max(excess, v.real() - bound);
  emit_sequence_limit(s, "", out);
  if (stride == c.q) {
    out.values["extremal_bound"] = bound;
    out.values["max_extremal_excess"] = excess;
  }
  out.sequences.push_back(std::move(s));
}

void diag_kappa_ratio_residue(Context& c, const Params& prm, Output& out) {
  for (int s : residues(prm, c.q)) {
    auto seq = kappa_ratio_residue(c.basis(), c.q, s);
    emit_sequence_limit(seq, "_s" + std::to_string(s), out);
    out.sequences.push_back(std::move(seq));
  }
}

RatioMode parse_mode(const std::string& m, const std::string& field) {
  if (m == "corollary") return RatioMode::Corollary;
  if (m == "monic") return RatioMode::Monic;
  if (m == "residue") return RatioMode::Residue;
  if (m == "monic_residue") return RatioMode::MonicResidue;
  field_error(field, "unknown mode '" + m + "' (corollary, monic, residue, monic_residue)");
}

// Largest successive difference over the last third of a sequence.
double cauchy_tail(const std::vector<cplx>& v) {
  double d = 0.0;
  for (std::size_t k = std::max<std::size_t>(1, 2 * v.size() / 3); k < v.size(); ++k)
    d = std::max(d, std::abs(v[k] - v[k - 1]));
  return d;
}

void diag_ratio_asymptotics(Context& c, const Params& prm, Output& out) {
  const cplx z = prm.complex("z", 2.0);
  const auto mode_name = prm.string("mode", "corollary");
  const auto mode = parse_mode(mode_name, prm.field("mode"));
  const auto reference = prm.string("reference", "");
  if (!reference.empty() && reference != "islands" && reference != "monic_limit")
    field_error(prm.field("reference"), "unknown reference '" + reference + "'");
  const bool residue_mode = mode == RatioMode::Residue || mode == RatioMode::MonicResidue;
  const std::vector<int> rs = residue_mode ? residues(prm, c.q) : std::vector<int>{0};
  for (int s : rs) {
    auto seq = ratio_asymptotics(c.basis(), c.h(), c.mu, c.p, c.r, z, mode, s);
    extrapolate(seq);
    const auto sfx = residue_mode ? "_s" + std::to_string(s) : std::string();
    const cplx lim = seq.extrapolated ? seq.extrapolated->value : seq.last();
    out.values["extrapolated_re" + sfx] = lim.real();
    out.values["extrapolated_im" + sfx] = lim.imag();
    out.values["extrapolated_abs" + sfx] = std::abs(lim);
    out.values["cauchy_tail" + sfx] = cauchy_tail(seq.values);
    if (reference == "islands") {
      if (mode != RatioMode::MonicResidue && mode != RatioMode::Residue)
        field_error(prm.field("reference"), "islands reference needs a residue mode");
      const cplx ref = islands_reference(c.q, c.r, z, s);
      out.values["reference_re" + sfx] = ref.real();
      out.values["reference_im" + sfx] = ref.imag();
      out.values["reference_error" + sfx] = std::abs(lim - ref);
    } else if (reference == "monic_limit") {
      const cplx ref = mode == RatioMode::Monic ? c.p(z) : cplx(1.0, 0.0);
      out.values["reference_error" + sfx] = std::abs(lim - ref);
    }
    out.sequences.push_back(std::move(seq));
  }
  out.details["z"] = complex_json(z);
  out.details["mode"] = mode_name;
}

void diag_islands_reference(Context& c, const Params& prm, Output& out) {
  const cplx z = prm.complex("z", 2.0);
  const int q = prm.integer("q", c.q);
  const double r = prm.number("r", c.r);
  for (int s = 0; s < q; ++s) {
    const cplx v = islands_reference(q, r, z, s);
    out.values["re_s" + std::to_string(s)] = v.real();
    out.values["im_s" + std::to_string(s)] = v.imag();
  }
}

void diag_christoffel_shift(Context& c, const Params& prm, Output& out) {
  const auto roots = prm.complexes("roots", c.p.roots);
  const int N = prm.integer("degree", c.N);
  const int offset = prm.integer("tail_offset", 10);
  if (offset < 0 || offset >= N) field_error(prm.field("tail_offset"), "must lie in [0, degree)");
  auto reps = christoffel_shift_check(c.mu, roots, N);
  double worst_tail = 0.0, worst = 0.0;
  for (std::size_t m = 0; m < reps.size(); ++m) {
    auto& rep = reps[m];
    const double tail = std::abs(rep.values[N - 1 - offset] - 1.0);
    double all = 0.0;
    for (const auto& v : rep.values) all = std::max(all, std::abs(v - 1.0));
    out.values["tail_deviation_" + std::to_string(m + 1)] = tail;
    out.values["max_deviation_" + std::to_string(m + 1)] = all;
    worst_tail = std::max(worst_tail, tail);
    worst = std::max(worst, all);
    out.sequences.push_back(std::move(rep));
  }
  out.values["max_tail_deviation"] = worst_tail;
  out.values["max_deviation"] = worst;
  out.values["tail_n"] = N - 1 - offset;
}

void diag_atom_mass_decay(Context& c, const Params& prm, Output& out) {
  const int tail = prm.integer("tail_count", 20);
  auto s = atom_mass_decay(c.basis(), c.mu);
  out.values["tail_max"] = s.tail_max_abs(static_cast<std::size_t>(tail));
  out.values["first"] = s.values.front().real();
  out.values["atoms"] = c.mu.atoms.size();
  out.sequences.push_back(std::move(s));
}

void diag_exterior_atom_kappa(Context& c, const Params&, Output& out) {
  auto s = exterior_atom_kappa_sequence(c.mu, c.basis(), c.lem, c.N);
  int K = 0;
  for (const auto& a : c.mu.atoms)
    if (std::abs(c.p(a.location)) > c.r) ++K;
  const double expected = std::pow(c.r, double(K) / c.q);
  emit_sequence_limit(s, "", out);
  out.values["exterior_atoms"] = K;
  out.values["expected_limit"] = expected;
  const double lim = s.extrapolated ? s.extrapolated->value.real() : s.last().real();
  out.values["limit_error"] = std::abs(lim - expected);
  out.sequences.push_back(std::move(s));
}

void diag_weak_consistency(Context& c, const Params& prm, Output& out) {
  const double frac = prm.number("s_fraction", 0.8);
  const double kappa_tol = prm.number("kappa_tol", 0.02);
  const double eta_tol = prm.number("eta_tol", 0.05);
  const double decay = prm.number("decay_ratio", 0.5);
  const auto res = residual_summary(c, 5, 20, 15);
  auto kr = kappa_ratio(c.basis(), c.q);
  extrapolate(kr);
  const double klim = kr.extrapolated ? kr.extrapolated->value.real() : kr.last().real();
  const auto eta = weak_concentration(c.basis(), c.mu, c.p, {frac * c.r});
  const bool a = res.tail_median < decay * res.head_median;
  const bool b = std::abs(klim - c.r) <= kappa_tol;
  const bool d = eta[0].last().real() <= eta_tol;
  out.values["residual_decays"] = a;
  out.values["kappa_ratio_converges"] = b;
  out.values["eta_vanishes"] = d;
  out.values["consistent"] = (a == b) && (b == d);
  out.values["all_hold"] = a && b && d;
  out.values["residual_decay_ratio"] = res.tail_median / res.head_median;
  out.values["kappa_limit_error"] = std::abs(klim - c.r);
  out.values["eta_last"] = eta[0].last().real();
}

void diag_monic_minimality(Context& c, const Params& prm, Output& out) {
  const int n_max = prm.integer("n_max", 6);
  const int trials = prm.integer("trials", 20);
  const double scale = prm.number("scale", 0.5);
  if (n_max < 1 || n_max > c.N) field_error(prm.field("n_max"), "must lie in [1, N]");
  std::mt19937_64 rng(c.sc.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto pts = c.mu.support_points();
  const auto w = c.mu.support_weights();
  auto norm2 = [&](const std::function<cplx(std::size_t)>& f) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < pts.size(); ++i) s += static_cast<long double>(w[i]) * std::norm(f(i));
    return static_cast<double>(s);
  };
  double margin = INFINITY;
  for (int n = 1; n <= n_max; ++n) {
    const double kn = c.basis().kappa[n];
    const auto col = c.basis().values.col(n);
    const double base = std::sqrt(norm2([&](std::size_t i) { return col(i) / kn; }));
    for (int t = 0; t < trials; ++t) {
      std::vector<cplx> lower(n);
      for (auto& a : lower) a = scale * cplx(g(rng), g(rng));
      const double qn = std::sqrt(norm2([&](std::size_t i) { return col(i) / kn + horner(lower, pts[i]); }));
      margin = std::min(margin, qn - base);
    }
  }
  out.values["min_margin"] = margin;
}

void diag_scaling_covariance(Context& c, const Params& prm, Output& out) {
  const double f = prm.number("factor", 2.5);
  if (!(f > 0.0)) field_error(prm.field("factor"), "must be > 0");
  const auto scaled = orthogonalize(scale_measure(c.mu, f), c.N);
  double kerr = 0.0;
  for (std::size_t n = 0; n < c.basis().kappa.size(); ++n)
    kerr = std::max(kerr, std::abs(scaled.basis.kappa[n] * std::sqrt(f) / c.basis().kappa[n] - 1.0));
  out.values["max_kappa_relative_error"] = kerr;
  out.values["max_hessenberg_difference"] = (scaled.hessenberg.entries - c.h().entries).cwiseAbs().maxCoeff();
}

void diag_band_structure(Context& c, const Params&, Output& out) {
  const auto& pm = c.pm();
  double band = 0.0;
  for (int k = 1; k <= pm.exact_cols; ++k)
    for (int j = k + pm.degree + 1; j <= c.N; ++j) band = std::max(band, std::abs(pm.at(j, k)));
  out.values["max_outside_band"] = band;
  out.values["exact_cols"] = pm.exact_cols;
}

const std::vector<DiagnosticDef>& registry() {
  static const std::vector<DiagnosticDef> defs = {
      {"hessenberg_check", {"reference"},
       "Structure of the Hessenberg section H: entries below the subdiagonal are exactly zero, the "
       "subdiagonal is real positive and H_{k+1,k} kappa_k = kappa_{k-1}. With reference "
       "\"unit_disk_area\" the entries and kappa_n are compared with the closed forms "
       "H_{n+1,n} = sqrt(n/(n+1)), kappa_n = sqrt((n+1)/pi), all other entries zero.",
       diag_hessenberg_check},
      {"orthonormality_residual", {},
       "max |<phi_m, phi_n> - delta_mn| over the stored node values, together with the kappa_0 "
       "normalization and the consistency <z phi_n, phi_{n+1}> = kappa_n / kappa_{n+1}.",
       diag_orthonormality},
      {"char_poly_check", {"n_max", "points"},
       "Monic polynomial as a characteristic polynomial: Phi_n(z) = det(z I - H_n) where H_n is the "
       "leading n x n block. The determinant is taken by LU at each test point and compared with the "
       "Hessenberg recurrence; reports the largest relative error over n = 1..n_max.",
       diag_char_poly},
      {"shift_residual", {"head", "tail_count"},
       "Column residual ||(P(M) - r R^q) e_n|| on the exact window n <= N - q. The matrix side and the "
       "measure side ||P phi_{n-1}||^2 + r^2 - 2 r kappa_{n-1}/kappa_{n+q-1} are equal for every n; "
       "decay of the residual is equivalent to kappa_n/kappa_{n+q} -> r for measures on {|P| <= r}.",
       diag_shift_residual},
      {"trace_window", {"tail_count"},
       "Diagonal window sums sum_{j=1}^q H_{n+j,n+j}. When the residual decays they tend to alpha, "
       "the sum of the roots of P.",
       diag_trace_window},
      {"right_limit", {"s", "m", "tol", "check_relation"},
       "Windows of H of half width m centered at n = s (mod q). Reports Cauchy convergence, "
       "q-periodicity along diagonals, P(X) - r R^q on the uncontaminated sub-window, and the distance "
       "to the pure shift pattern X_{k+1,k} = 1.",
       diag_right_limit},
      {"block_toeplitz", {"m", "tol"},
       "Asymptotic q-block Toeplitz test: every residue class of stride-q windows converges, the limits "
       "are q-periodic, and the class s+1 limit is the class s limit shifted by one index.",
       diag_block_toeplitz},
      {"operator_measure_identity", {"k", "n"},
       "||P(M)^k e_{n+1}||^2 against the quadrature value of int |P|^{2k} |phi_n|^2 dmu; the two are "
       "equal whenever n + 1 <= N - k q.",
       diag_operator_identity},
      {"christoffel_lambda", {"points", "compare_degree"},
       "Christoffel function upper bound (sum_{n<=N} |phi_n(z)|^2)^{-1}; nonincreasing in N.",
       diag_christoffel_lambda},
      {"kbound_scan", {"degree", "margin"},
       "Kernel sums sum_{n<=N} |phi_n(z; |P|^2 mu)|^2 on nodes with |P| <= (1 - margin) r. A point is "
       "flagged when the last ten degrees carry more than 5% of the sum.",
       diag_kbound},
      {"weak_concentration", {"s", "monotone_from", "reference", "reference_upto"},
       "eta_n(s) = int_{|P| <= s} |phi_n|^2 dmu. For s < r it tends to zero exactly when every weak "
       "limit of |phi_n|^2 dmu lives on {|P| = r}. With reference \"unit_disk_area\" it is compared with "
       "s^{2n+2}.",
       diag_weak_concentration},
      {"kappa_ratio", {"stride"},
       "kappa_n / kappa_{n+q}; tends to r when the shift residual decays. Never exceeds max |P| on the "
       "support (extremal property of monic polynomials). Limit by Aitken delta-squared on the tail third.",
       diag_kappa_ratio},
      {"kappa_ratio_residue", {"s"},
       "kappa_{nq+s} / kappa_{nq+s+1} per residue class s; for the islands {|z^q - 1| < r} the limits are "
       "1 for s < q-1 and r for s = q-1.",
       diag_kappa_ratio_residue},
      {"ratio_asymptotics", {"z", "mode", "s", "reference"},
       "Ratios at a fixed z: corollary P(z) phi_n / (r phi_{n+q}) -> 1 and monic Phi_{n+q}/Phi_n -> P(z) "
       "outside the convex hull of the support; residue phi_{nq+s-1}/phi_{nq+s} and monic_residue "
       "Phi_{nq+s}/Phi_{nq+s+1} for |z| beyond the support. Residue limits exist exactly when M is "
       "asymptotically q-block Toeplitz.",
       diag_ratio_asymptotics},
      {"islands_reference", {"z", "q", "r"},
       "Limit of Phi_{nq+s}/Phi_{nq+s+1} for area measure on {|z^q - 1| < r}: "
       "(1/z) ((z^q - 1 + r^2)/(z^q - 1))^{1/q} for s <= q-2 and "
       "z^{q-1}/(z^q - 1) ((z^q - 1 + r^2)/(z^q - 1))^{(1-q)/q} for s = q-1, principal powers, |z| >= 2.",
       diag_islands_reference},
      {"christoffel_shift", {"roots", "degree", "tail_offset"},
       "Christoffel transform chain mu_{m+1} = |z - x_{m+1}|^2 mu_m; reports kappa_n(mu_{m+1}) / "
       "kappa_{n+1}(mu_m), which tends to 1 when x_{m+1} is an interior point with positive Christoffel "
       "function.",
       diag_christoffel_shift},
      {"atom_mass_decay", {"tail_count"},
       "sum_j mu({z_j}) |phi_n(z_j)|^2 over the atoms; square summability of phi_n at interior atoms "
       "forces it to zero, and exterior atoms are absorbed geometrically.",
       diag_atom_mass_decay},
      {"exterior_atom_kappa", {},
       "kappa_{n-K}(nu) / kappa_n(mu) with nu = prod_j |z - z_j|^2 r^{-2/q} mu over the K atoms outside "
       "{|P| <= r}; expected limit r^{K/q}.",
       diag_exterior_atom_kappa},
      {"weak_consistency", {"s_fraction", "kappa_tol", "eta_tol", "decay_ratio"},
       "Three equivalent asymptotic statements checked together: residual decay, kappa_n/kappa_{n+q} -> r, "
       "and eta_n(s) -> 0 at s = s_fraction * r. 'consistent' is true when all three agree.",
       diag_weak_consistency},
      {"monic_minimality", {"n_max", "trials", "scale"},
       "Phi_n has the least L2(mu) norm among monic polynomials of degree n: random lower-order "
       "perturbations (seeded by the scenario seed) never reduce the norm.",
       diag_monic_minimality},
      {"scaling_covariance", {"factor"},
       "Scaling mu by c multiplies kappa_n by c^{-1/2} and leaves the Hessenberg section unchanged.",
       diag_scaling_covariance},
      {"band_structure", {},
       "Entries of P(H) with row > column + deg P vanish inside the exact window of columns 1..N - deg P.",
       diag_band_structure},
  };
  return defs;
}

const DiagnosticDef* find_def(const std::string& op) {
  for (const auto& d : registry())
    if (d.name == op) return &d;
  return nullptr;
}

// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.')
      out += ch;
    else if (out.empty() || out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

json quadrature_json(const QuadratureConfig& q) {
  return {{"cell_depth", q.cell_depth},         {"interior_depth", q.interior_depth},
          {"boundary_nodes", q.boundary_nodes}, {"target_degree", q.target_degree},
          {"refinement_tol", q.refinement_tol}, {"radial_panels", q.radial_panels},
          {"clip_samples", q.clip_samples}};
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

bool any_imag(const SequenceReport& s) {
  return std::any_of(s.values.begin(), s.values.end(), [](cplx v) { return v.imag() != 0.0; });
}

}  // namespace

// ---------------------------------------------------------------------------

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw InputError("scenario JSON syntax error at line " + std::to_string(line) + ", column " +
                     std::to_string(col) + ": " + e.what());
  }
  if (!doc.is_object()) throw InputError("scenario must be a JSON object");
  reject_unknown_keys(doc,
                      {"name", "description", "polynomial", "normalize_polynomial", "level", "parts", "atoms",
                       "quadrature", "degree", "seed", "diagnostics", "expectations"},
                      "");

  Scenario sc;
  sc.source = doc;
  if (!doc.contains("name")) field_error("name", "missing");
  sc.name = as_string(doc["name"], "name");
  if (doc.contains("description")) sc.description = as_string(doc["description"], "description");

  if (!doc.contains("polynomial")) field_error("polynomial", "missing");
  const auto& pj = doc["polynomial"];
  if (!pj.is_array() || pj.size() < 2) field_error("polynomial", "expected at least two ascending coefficients");
  for (std::size_t i = 0; i < pj.size(); ++i)
    sc.polynomial.push_back(as_complex(pj[i], "polynomial[" + std::to_string(i) + "]"));
  bool normalize = false;
  if (doc.contains("normalize_polynomial")) {
    if (!doc["normalize_polynomial"].is_boolean()) field_error("normalize_polynomial", "expected a boolean");
    normalize = doc["normalize_polynomial"].get<bool>();
  }
  PolynomialSpec p;
  try {
    std::vector<std::string> warn;
    p = make_polynomial(sc.polynomial, normalize, &warn);
    sc.polynomial = p.coeffs;
  } catch (const Error& e) {
    field_error("polynomial", e.what());
  }

  if (!doc.contains("level")) field_error("level", "missing");
  sc.level = as_number(doc["level"], "level");
  if (!(sc.level > 0.0)) field_error("level", "must be > 0");

  if (!doc.contains("parts") || !doc["parts"].is_array() || doc["parts"].empty())
    field_error("parts", "expected a nonempty array");
  for (std::size_t i = 0; i < doc["parts"].size(); ++i) {
    const auto& part = doc["parts"][i];
    const auto where = "parts[" + std::to_string(i) + "]";
    if (!part.is_object()) field_error(where, "expected an object");
    reject_unknown_keys(part, {"kind", "density", "scale"}, where);
    PartSpec ps;
    if (!part.contains("kind")) field_error(where + ".kind", "missing");
    ps.kind = as_string(part["kind"], where + ".kind");
    if (ps.kind != "area" && ps.kind != "boundary") field_error(where + ".kind", "must be \"area\" or \"boundary\"");
    if (part.contains("density")) ps.density = as_string(part["density"], where + ".density");
    if (part.contains("scale")) ps.scale = as_number(part["scale"], where + ".scale");
    if (!(ps.scale > 0.0)) field_error(where + ".scale", "must be > 0");
    if (!ps.density.empty()) {
      try {
        parse_density(ps.density, p);
      } catch (const Error& e) {
        field_error(where + ".density", e.what());
      }
    }
    sc.parts.push_back(ps);
  }

  if (doc.contains("atoms")) {
    if (!doc["atoms"].is_array()) field_error("atoms", "expected an array");
    for (std::size_t i = 0; i < doc["atoms"].size(); ++i) {
      const auto& a = doc["atoms"][i];
      const auto where = "atoms[" + std::to_string(i) + "]";
      if (!a.is_object() || !a.contains("z") || !a.contains("mass"))
        field_error(where, "expected {\"z\": [x, y], \"mass\": m}");
      reject_unknown_keys(a, {"z", "mass"}, where);
      Atom atom{as_complex(a["z"], where + ".z"), as_number(a["mass"], where + ".mass")};
      if (!(atom.mass > 0.0)) field_error(where + ".mass", "must be > 0");
      sc.atoms.push_back(atom);
    }
  }

  if (doc.contains("quadrature")) {
    const auto& qj = doc["quadrature"];
    if (!qj.is_object()) field_error("quadrature", "expected an object");
    reject_unknown_keys(qj,
                        {"cell_depth", "interior_depth", "boundary_nodes", "target_degree", "refinement_tol",
                         "radial_panels", "clip_samples"},
                        "quadrature");
    auto& q = sc.quadrature;
    if (qj.contains("cell_depth")) q.cell_depth = as_int(qj["cell_depth"], "quadrature.cell_depth");
    if (qj.contains("interior_depth")) q.interior_depth = as_int(qj["interior_depth"], "quadrature.interior_depth");
    if (qj.contains("boundary_nodes")) q.boundary_nodes = as_int(qj["boundary_nodes"], "quadrature.boundary_nodes");
    if (qj.contains("target_degree")) {
      q.target_degree = as_int(qj["target_degree"], "quadrature.target_degree");
      sc.auto_target_degree = false;
    }
    if (qj.contains("refinement_tol")) q.refinement_tol = as_number(qj["refinement_tol"], "quadrature.refinement_tol");
    if (qj.contains("radial_panels")) q.radial_panels = as_int(qj["radial_panels"], "quadrature.radial_panels");
    if (qj.contains("clip_samples")) q.clip_samples = as_int(qj["clip_samples"], "quadrature.clip_samples");
    q.validate();
  }

  if (!doc.contains("degree")) field_error("degree", "missing");
  sc.degree = as_int(doc["degree"], "degree");
  if (sc.degree < 4 * p.degree)
    field_error("degree", "N = " + std::to_string(sc.degree) + " must be at least 4q = " + std::to_string(4 * p.degree));
  if (sc.auto_target_degree) sc.quadrature.target_degree = 2 * sc.degree + 4;

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) field_error("seed", "expected a nonnegative integer");
    sc.seed = doc["seed"].get<std::uint64_t>();
  }

  std::set<std::string> ids;
  if (doc.contains("diagnostics")) {
    if (!doc["diagnostics"].is_array()) field_error("diagnostics", "expected an array");
    for (std::size_t i = 0; i < doc["diagnostics"].size(); ++i) {
      const auto& d = doc["diagnostics"][i];
      const auto where = "diagnostics[" + std::to_string(i) + "]";
      if (!d.is_object()) field_error(where, "expected an object");
      reject_unknown_keys(d, {"op", "id", "params"}, where);
      Diagnostic diag;
      if (!d.contains("op")) field_error(where + ".op", "missing");
      diag.op = as_string(d["op"], where + ".op");
      const auto* def = find_def(diag.op);
      if (!def) field_error(where + ".op", "unknown diagnostic '" + diag.op + "'");
      diag.id = d.contains("id") ? as_string(d["id"], where + ".id") : diag.op;
      if (diag.id.empty() || diag.id.find('.') != std::string::npos)
        field_error(where + ".id", "must be nonempty and contain no '.'");
      if (!ids.insert(diag.id).second) field_error(where + ".id", "duplicate id '" + diag.id + "'");
      diag.params = d.contains("params") ? d["params"] : json::object();
      if (!diag.params.is_object()) field_error(where + ".params", "expected an object");
      reject_unknown_keys(diag.params, def->params, where + ".params");
      sc.diagnostics.push_back(diag);
    }
  }

  if (doc.contains("expectations")) {
    if (!doc["expectations"].is_array()) field_error("expectations", "expected an array");
    for (std::size_t i = 0; i < doc["expectations"].size(); ++i) {
      const auto& e = doc["expectations"][i];
      const auto where = "expectations[" + std::to_string(i) + "]";
      if (!e.is_object()) field_error(where, "expected an object");
      reject_unknown_keys(e, {"quantity", "target", "tolerance", "max", "min"}, where);
      Expectation ex;
      if (!e.contains("quantity")) field_error(where + ".quantity", "missing");
      ex.quantity = as_string(e["quantity"], where + ".quantity");
      const auto dot = ex.quantity.find('.');
      if (dot == std::string::npos || dot + 1 == ex.quantity.size())
        field_error(where + ".quantity", "expected \"<diagnostic id>.<field>\"");
      if (!ids.count(ex.quantity.substr(0, dot)))
        field_error(where + ".quantity", "no diagnostic with id '" + ex.quantity.substr(0, dot) + "'");
      if (e.contains("target")) {
        ex.target = as_number(e["target"], where + ".target");
        if (!e.contains("tolerance")) field_error(where + ".tolerance", "required with target");
        ex.tolerance = as_number(e["tolerance"], where + ".tolerance");
        if (!(ex.tolerance >= 0.0)) field_error(where + ".tolerance", "must be >= 0");
      }
      if (e.contains("max")) ex.max = as_number(e["max"], where + ".max");
      if (e.contains("min")) ex.min = as_number(e["min"], where + ".min");
      const int forms = int(ex.target.has_value()) + int(ex.max.has_value()) + int(ex.min.has_value());
      if (forms != 1) field_error(where, "exactly one of target, max, min is required");
      sc.expectations.push_back(ex);
    }
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw InputError("cannot read scenario " + path.string() + ": " + e.what());
  }
  try {
    return parse_scenario(text);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::optional<double> RunReport::quantity(const std::string& name) const {
  const auto dot = name.find('.');
  if (dot == std::string::npos || !json.contains("diagnostics")) return std::nullopt;
  for (const auto& d : json["diagnostics"]) {
    if (d["id"] != name.substr(0, dot) || !d.contains("values")) continue;
    const auto& v = d["values"];
    const auto field = name.substr(dot + 1);
    if (!v.contains(field)) return std::nullopt;
    if (v[field].is_boolean()) return v[field].get<bool>() ? 1.0 : 0.0;
    if (v[field].is_number()) return v[field].get<double>();
    return std::nullopt;
  }
  return std::nullopt;
}

bool RunReport::passed() const {
  return errors.empty() && std::all_of(expectations.begin(), expectations.end(),
                                       [](const ExpectationResult& e) { return e.passed; });
}

RunReport run_scenario(const Scenario& input, const std::filesystem::path& out_dir, const RunOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  Scenario sc = input;
  if (opts.degree) {
    sc.degree = *opts.degree;
    const int q = static_cast<int>(sc.polynomial.size()) - 1;
    if (sc.degree < 4 * q) throw InputError("--degree: N must be at least 4q = " + std::to_string(4 * q));
    if (sc.auto_target_degree) sc.quadrature.target_degree = 2 * sc.degree + 4;
  }
  if (opts.depth) {
    if (*opts.depth < 1) throw InputError("--depth must be >= 1");
    sc.quadrature.cell_depth = *opts.depth;
    if (sc.quadrature.interior_depth > *opts.depth) sc.quadrature.interior_depth = *opts.depth;
  }

  RunReport report;
  json& rep = report.json;
  json timing = json::object();
  rep["scenario"] = sc.source;
  rep["effective"] = {{"degree", sc.degree}, {"quadrature", quadrature_json(sc.quadrature)}, {"seed", sc.seed}};

  Context ctx{sc, make_polynomial(sc.polynomial), {}, sc.level, 0, sc.degree, {}, {}, {}};
  ctx.q = ctx.p.degree;
  ctx.lem = LemniscateSpec{ctx.p, sc.level};

  bool ready = false;
  auto t0 = clock::now();
  try {
    std::vector<MeasurePart> parts;
    for (const auto& ps : sc.parts) {
      MeasurePart mp;
      mp.kind = ps.kind == "area" ? PartKind::Area : PartKind::Boundary;
      mp.lem = ctx.lem;
      if (!ps.density.empty()) mp.density = parse_density(ps.density, ctx.p);
      mp.scale = ps.scale;
      parts.push_back(std::move(mp));
    }
    ctx.mu = assemble_measure(parts, sc.atoms, sc.quadrature);
    timing["measure"] = std::chrono::duration<double>(clock::now() - t0).count();
    t0 = clock::now();
    ctx.orth = orthogonalize(ctx.mu, sc.degree);
    timing["orthogonalize"] = std::chrono::duration<double>(clock::now() - t0).count();
    ready = true;
  } catch (const std::exception& e) {
    report.errors.push_back(std::string("pipeline: ") + e.what());
  }

  rep["environment"] = {
      {"precision", "binary64"},
      {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
      {"index_convention", "1-based matrices; e_{n+1} pairs with phi_n"},
      {"degree", sc.degree},
      {"quadrature", quadrature_json(sc.quadrature)},
      {"node_count", ctx.mu.nodes.size()},
      {"atom_count", ctx.mu.atoms.size()},
      {"total_mass", ctx.mu.total_mass},
      {"measure_hash", ready ? ctx.mu.hash() : ""},
      {"boundary_components", ctx.mu.info.boundary_components},
      {"straddling_mass", ctx.mu.info.straddling_mass},
      {"warnings", ctx.mu.info.warnings},
      {"notes", ctx.mu.info.notes},
      {"atom_flags", ctx.mu.info.atom_flags},
      {"hull_note", "convex hull of discretization nodes and atoms (inner approximation of the support hull)"},
      {"polynomial", {{"coeffs", json::array()}, {"roots", json::array()}, {"alpha", complex_json(ctx.p.alpha)}}},
  };
  for (auto c : ctx.p.coeffs) rep["environment"]["polynomial"]["coeffs"].push_back(complex_json(c));
  for (auto c : ctx.p.roots) rep["environment"]["polynomial"]["roots"].push_back(complex_json(c));

  if (ready && opts.write_files) {
    write_text_file(out_dir / "exports" / "hessenberg.csv", hessenberg_to_csv(ctx.h(), ctx.mu.hash()));
    write_text_file(out_dir / "exports" / "hessenberg.json",
                    hessenberg_to_json(ctx.h(), ctx.basis().kappa, ctx.mu.hash()));
    std::vector<int> ns;
    std::vector<cplx> ks;
    for (std::size_t n = 0; n < ctx.basis().kappa.size(); ++n) {
      ns.push_back(static_cast<int>(n));
      ks.emplace_back(ctx.basis().kappa[n], 0.0);
    }
    write_text_file(out_dir / "sequences" / "kappa.csv", sequence_to_csv(ns, ks, false));
  }

  std::map<std::string, json> values_by_id;
  json diags = json::array();
  json tdiag = json::object();
  for (const auto& d : sc.diagnostics) {
    json entry = {{"id", d.id}, {"op", d.op}, {"params", d.params}};
    if (!ready) {
      entry["status"] = "skipped";
      entry["error"] = "measure or basis construction failed";
      diags.push_back(entry);
      continue;
    }
    Output out;
    t0 = clock::now();
    try {
      find_def(d.op)->run(ctx, Params(d.params, d.id + ".params"), out);
      entry["status"] = "ok";
    } catch (const std::exception& e) {
      entry["status"] = "error";
      entry["error"] = e.what();
      report.errors.push_back(d.id + ": " + e.what());
    }
    tdiag[d.id] = std::chrono::duration<double>(clock::now() - t0).count();
    entry["values"] = out.values;
    if (!out.details.empty()) entry["details"] = out.details;
    json seqs = json::array();
    for (auto& s : out.sequences) {
      const auto stem = sanitize(d.id + "_" + s.label);
      json sj = {{"label", s.label}, {"csv", "sequences/" + stem + ".csv"}, {"plot", "plotdata/" + stem + ".tsv"},
                 {"count", s.values.size()}};
      if (s.extrapolated) {
        sj["extrapolated"] = complex_json(s.extrapolated->value);
        sj["method"] = s.extrapolated->method;
      }
      if (!s.notes.empty()) sj["notes"] = s.notes;
      seqs.push_back(sj);
      if (opts.write_files) {
        const bool cx = any_imag(s);
        write_text_file(out_dir / "sequences" / (stem + ".csv"), sequence_to_csv(s.n_values, s.values, cx));
        std::string tsv = cx ? "# n\tre\tim\n" : "# n\tvalue\n";
        for (std::size_t i = 0; i < s.values.size(); ++i) {
          tsv += std::to_string(s.n_values[i]) + "\t" + format_double(s.values[i].real());
          if (cx) tsv += "\t" + format_double(s.values[i].imag());
          tsv += "\n";
        }
        write_text_file(out_dir / "plotdata" / (stem + ".tsv"), tsv);
        json side = {{"diagnostic", d.id}, {"op", d.op}, {"label", s.label},
                     {"columns", cx ? json::array({"n", "re", "im"}) : json::array({"n", "value"})},
                     {"scenario", sc.name}, {"tolerance_used", s.tolerance_used}};
        if (s.extrapolated) side["extrapolated"] = complex_json(s.extrapolated->value);
        write_text_file(out_dir / "plotdata" / (stem + ".json"), side.dump(2) + "\n");
      }
    }
    if (!seqs.empty()) entry["sequences"] = seqs;
    values_by_id[d.id] = out.values;
    diags.push_back(entry);
  }
  rep["diagnostics"] = diags;

  json exps = json::array();
  for (const auto& ex : sc.expectations) {
    ExpectationResult res;
    res.expectation = ex;
    const auto dot = ex.quantity.find('.');
    const auto id = ex.quantity.substr(0, dot);
    const auto field = ex.quantity.substr(dot + 1);
    const auto it = values_by_id.find(id);
    if (it != values_by_id.end() && it->second.contains(field)) {
      const auto& v = it->second[field];
      if (v.is_boolean())
        res.measured = v.get<bool>() ? 1.0 : 0.0;
      else if (v.is_number())
        res.measured = v.get<double>();
    }
    json ej = {{"quantity", ex.quantity}};
    std::ostringstream msg;
    msg.precision(10);
    if (!res.measured) {
      res.passed = false;
      msg << "quantity not emitted";
    } else {
      const double m = *res.measured;
      if (ex.target) {
        res.passed = std::abs(m - *ex.target) <= ex.tolerance;
        msg << "measured " << m << ", target " << *ex.target << " +/- " << ex.tolerance;
        ej["target"] = *ex.target;
        ej["tolerance"] = ex.tolerance;
      } else if (ex.max) {
        res.passed = m <= *ex.max;
        msg << "measured " << m << ", max " << *ex.max;
        ej["max"] = *ex.max;
      } else {
        res.passed = m >= *ex.min;
        msg << "measured " << m << ", min " << *ex.min;
        ej["min"] = *ex.min;
      }
      ej["measured"] = m;
    }
    res.message = msg.str();
    ej["passed"] = res.passed;
    ej["message"] = res.message;
    exps.push_back(ej);
    report.expectations.push_back(res);
  }
  rep["expectations"] = exps;
  rep["errors"] = report.errors;
  rep["passed"] = report.passed();
  timing["diagnostics"] = tdiag;
  timing["threads"] = thread_count();
  report.seconds = std::chrono::duration<double>(clock::now() - start).count();
  timing["total"] = report.seconds;
  rep["timing"] = timing;
  if (ready && opts.keep_state)
    report.state = std::make_shared<const ScenarioState>(ScenarioState{ctx.p, ctx.r, std::move(ctx.mu), std::move(ctx.orth)});

  if (opts.write_files) write_text_file(out_dir / "report.json", rep.dump(2) + "\n");
  return report;
}

RunReport run_scenario(const std::filesystem::path& path, const std::filesystem::path& out_dir,
                       const RunOptions& opts) {
  return run_scenario(load_scenario(path), out_dir, opts);
}

std::filesystem::path scenario_directory() {
  if (const char* env = std::getenv("BERGMAN_SCENARIOS"); env && *env) return env;
  return BERGMAN_SCENARIO_DIR;
}

std::vector<ScenarioEntry> list_scenarios() {
  std::vector<ScenarioEntry> out;
  const auto dir = scenario_directory();
  if (!std::filesystem::is_directory(dir)) throw InputError("scenario directory not found: " + dir.string());
  for (const auto& f : std::filesystem::directory_iterator(dir)) {
    if (f.path().extension() != ".json") continue;
    ScenarioEntry e{f.path().stem().string(), "", f.path()};
    try {
      const auto sc = load_scenario(f.path());
      e.name = sc.name;
      e.description = sc.description;
    } catch (const std::exception& ex) {
      e.description = std::string("invalid: ") + ex.what();
    }
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

const std::vector<std::string>& diagnostic_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& d : registry()) v.push_back(d.name);
    return v;
  }();
  return names;
}

std::string describe(const std::string& op) {
  const auto* def = find_def(op);
  if (!def) throw InputError("unknown diagnostic '" + op + "'");
  std::string out = op + "\n  " + def->doc + "\n  params:";
  if (def->params.empty()) out += " none";
  for (const auto& p : def->params) out += " " + p;
  return out + "\n";
}

void configure_threads_from_env() {
  const char* env = std::getenv("BERGMAN_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) throw InputError(std::string("BERGMAN_THREADS: invalid value '") + env + "'");
#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(n));
#endif
  Eigen::setNbThreads(static_cast<int>(n));
}

}  // namespace bergman
