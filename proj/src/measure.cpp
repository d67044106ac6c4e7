#include "bergman/measure.hpp"
#include "bergman/error.hpp"
#include "bergman/io.hpp"
#include "bergman/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <sstream>

namespace bergman {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double cross(cplx o, cplx a, cplx b) {
  return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
}

double segment_distance(cplx a, cplx b, cplx z) {
  const cplx ab = b - a;
  const double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(z - a);
  double t = ((z - a) * std::conj(ab)).real() / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(z - (a + t * ab));
}

// Newton solve of P(z) = target from z.
bool newton_level(const PolynomialSpec& p, cplx target, cplx& z, double tol) {
  for (int it = 0; it < 30; ++it) {
    const cplx f = p(z) - target;
    if (std::abs(f) <= tol) return true;
    const cplx d = p.derivative(z);
    if (std::abs(d) == 0.0) return false;
    z -= f / d;
  }
  return std::abs(p(z) - target) <= 10.0 * tol;
}

// One continuation step of P(z(t)) = r e^{it} from t to t + dt.
cplx continuation_step(const PolynomialSpec& p, double r, cplx z, double t, double dt) {
  auto rhs = [&](double tt, cplx zz) { return cplx(0.0, 1.0) * r * std::polar(1.0, tt) / p.derivative(zz); };
  const cplx k1 = rhs(t, z);
  const cplx k2 = rhs(t + 0.5 * dt, z + 0.5 * dt * k1);
  const cplx k3 = rhs(t + 0.5 * dt, z + 0.5 * dt * k2);
  const cplx k4 = rhs(t + dt, z + dt * k3);
  cplx next = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!newton_level(p, r * std::polar(1.0, t + dt), next, 1e-14 * r))
    throw NumericalError("trace_boundary: Newton correction failed to converge");
  return next;
}

// Advances from t0 to t1 with substeps no larger than max_dt.
cplx advance(const PolynomialSpec& p, double r, cplx z, double t0, double t1, double max_dt) {
  const int steps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / max_dt)));
  const double dt = (t1 - t0) / steps;
  for (int i = 0; i < steps; ++i) z = continuation_step(p, r, z, t0 + i * dt, dt);
  return z;
}

std::size_t nearest_index(const std::vector<cplx>& pts, cplx z) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (std::abs(pts[i] - z) < std::abs(pts[best] - z)) best = i;
  return best;
}

double kahan_total(const std::vector<double>& w, const std::vector<Atom>& atoms) {
  long double s = 0.0L;
  for (double x : w) s += x;
  for (const auto& a : atoms) s += a.mass;
  return static_cast<double>(s);
}

} // namespace

void QuadratureConfig::validate() const {
  if (cell_depth < 1) throw InputError("quadrature.cell_depth must be >= 1");
  if (boundary_nodes < 16) throw InputError("quadrature.boundary_nodes must be >= 16");
  if (!(refinement_tol > 0.0)) throw InputError("quadrature.refinement_tol must be > 0");
  if (target_degree < 0) throw InputError("quadrature.target_degree must be >= 0");
  if (radial_panels < 1) throw InputError("quadrature.radial_panels must be >= 1");
  if (clip_samples < 1) throw InputError("quadrature.clip_samples must be >= 1");
}

double BoundaryDiscretization::total_length() const {
  double s = 0.0;
  for (const auto& c : components) s += c.length;
  return s;
}

const char* to_string(NodeTag tag) {
  switch (tag) {
    case NodeTag::Area: return "area";
    case NodeTag::Boundary: return "boundary";
    case NodeTag::WeightModified: return "weight-modified";
  }
  return "?";
}

std::vector<cplx> DiscretizedMeasure::support_points() const {
  std::vector<cplx> pts = nodes;
  for (const auto& a : atoms) pts.push_back(a.location);
  return pts;
}

std::vector<double> DiscretizedMeasure::support_weights() const {
  std::vector<double> w = weights;
  for (const auto& a : atoms) w.push_back(a.mass);
  return w;
}

double DiscretizedMeasure::max_modulus() const {
  double m = 0.0;
  for (const auto& z : nodes) m = std::max(m, std::abs(z));
  for (const auto& a : atoms) m = std::max(m, std::abs(a.location));
  return m;
}

std::string DiscretizedMeasure::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double v[3] = {nodes[i].real(), nodes[i].imag(), weights[i]};
    mix(v, sizeof v);
  }
  for (const auto& a : atoms) {
    const double v[3] = {a.location.real(), a.location.imag(), a.mass};
    mix(v, sizeof v);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void DiscretizedMeasure::finalize() {
  total_mass = kahan_total(weights, atoms);
  hull = convex_hull(support_points());
}

std::vector<cplx> convex_hull(std::vector<cplx> pts) {
  std::sort(pts.begin(), pts.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<cplx> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i - 1]) <= 0.0) --k;
    h[k++] = pts[i - 1];
  }
  h.resize(k - 1);
  return h;
}

double distance_to_polygon(const std::vector<cplx>& hull, cplx z) {
  if (hull.empty()) return std::numeric_limits<double>::infinity();
  if (hull.size() == 1) return std::abs(z - hull[0]);
  if (hull.size() == 2) return segment_distance(hull[0], hull[1], z);
  bool inside = true;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (cross(hull[i], hull[(i + 1) % hull.size()], z) < 0.0) {
      inside = false;
      break;
    }
  }
  if (inside) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i)
    d = std::min(d, segment_distance(hull[i], hull[(i + 1) % hull.size()], z));
  return d;
}

double hull_distance(const DiscretizedMeasure& mu, cplx z) { return distance_to_polygon(mu.hull, z); }

Density parse_density(const std::string& text, const PolynomialSpec& poly) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InputError("density: expected 'const:c' or 'dP:c', got '" + text + "'");
  const std::string kind = text.substr(0, colon);
  double c = 0.0;
  try {
    std::size_t used = 0;
    c = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InputError("density: bad constant in '" + text + "'");
  }
  if (!(c > 0.0)) throw InputError("density: constant must be > 0 in '" + text + "'");
  if (kind == "const") return [c](cplx) { return c; };
  if (kind == "dP") return [c, poly](cplx z) { return c * std::abs(poly.derivative(z)); };
  throw InputError("density: unknown kind '" + kind + "'");
}

BoundaryDiscretization trace_boundary(const LemniscateSpec& lem, const QuadratureConfig& cfg) {
  cfg.validate();
  const auto& p = lem.poly;
  const double r = lem.level;
  if (!(r > 0.0)) throw InputError("trace_boundary: level must be > 0");
  const int q = p.degree;

  if (q >= 2) {
    std::vector<cplx> dcoef(q);
    for (int k = 1; k <= q; ++k) dcoef[k - 1] = static_cast<double>(k) * p.coeffs[k] / static_cast<double>(q);
    const auto crit = make_polynomial(dcoef);
    for (const auto& c : crit.roots) {
      if (std::abs(std::abs(p(c)) - r) <= 1e-8) {
        std::ostringstream msg;
        msg << "trace_boundary: level " << r << " is singular (critical point " << c << " on the level set)";
        throw NumericalError(msg.str());
      }
    }
  }

  // Seeds: the q solutions of P(z) = r.
  std::vector<cplx> shifted = p.coeffs;
  shifted[0] -= r;
  const auto seeds = make_polynomial(shifted).roots;
  const double scale = 1.0 + std::max(std::abs(seeds.front()), std::abs(seeds.back()));
  // Two traces this close are the same point of the same component.
  const double merge_tol = 1e-9 * scale;
  const double max_dt = two_pi / 512.0;

  // One phase turn maps seeds to seeds; cycles of the map are components.
  std::vector<int> next(q, -1);
  for (int i = 0; i < q; ++i) {
    const cplx end = advance(p, r, seeds[i], 0.0, two_pi, max_dt);
    const auto j = nearest_index(seeds, end);
    if (std::abs(seeds[j] - end) > merge_tol)
      throw NumericalError("trace_boundary: continuation did not land on a seed after one turn");
    next[i] = static_cast<int>(j);
  }

  BoundaryDiscretization out;
  out.level = r;
  out.poly = p;
  std::vector<bool> seen(q, false);
  for (int start = 0; start < q; ++start) {
    if (seen[start]) continue;
    int turns = 0;
    int cur = start;
    do {
      seen[cur] = true;
      cur = next[cur];
      ++turns;
      if (turns > q) throw NumericalError("trace_boundary: continuation failed to close within q turns");
    } while (cur != start);

    BoundaryComponent comp;
    comp.turns = turns;
    const int n = cfg.boundary_nodes;
    const double dt = two_pi * turns / n;
    cplx z = seeds[start];
    comp.nodes.reserve(n);
    for (int k = 0; k < n; ++k) {
      const double t = k * dt;
      const cplx dz = cplx(0.0, 1.0) * r * std::polar(1.0, t) / p.derivative(z);
      comp.nodes.push_back({z, std::abs(dz) * dt, dz / std::abs(dz)});
      comp.length += std::abs(dz) * dt;
      z = advance(p, r, z, t, t + dt, max_dt);
    }
    comp.closure_error = std::abs(z - seeds[start]);
    if (comp.closure_error > 1e-8 * r)
      throw NumericalError("trace_boundary: traced component failed to return to its seed");
    out.components.push_back(std::move(comp));
  }
  return out;
}

namespace {

struct AreaBuilder {
  const PolynomialSpec& p;
  double r;
  const QuadratureConfig& cfg;
  int interior_depth;
  double root_side;  // side of the level-0 box
  DiscretizedMeasure out;

  enum class Cell { Inside, Outside, Straddle };

  Cell classify(cplx c, double half) const {
    const auto t = taylor_shift(p.coeffs, c);
    const double delta = half * std::numbers::sqrt2;
    double bound = 0.0, pow = 1.0;
    for (std::size_t k = 1; k < t.size(); ++k) {
      pow *= delta;
      bound += std::abs(t[k]) * pow;
    }
    const double v = std::abs(t[0]);
    if (v + bound <= r) return Cell::Inside;
    if (v - bound > r) return Cell::Outside;
    return Cell::Straddle;
  }

  void emit_grid(cplx c, double half, int level) {
    const int per_side = 1 << std::max(0, interior_depth - level);
    const double h = 2.0 * half / per_side;
    const cplx corner = c - cplx(half, half);
    for (int iy = 0; iy < per_side; ++iy)
      for (int ix = 0; ix < per_side; ++ix) {
        out.nodes.push_back(corner + cplx((ix + 0.5) * h, (iy + 0.5) * h));
        out.weights.push_back(h * h);
        out.tags.push_back(NodeTag::Area);
      }
  }

  void clip(cplx c, double half) {
    const int k = cfg.clip_samples;
    const double h = 2.0 * half / k;
    const cplx corner = c - cplx(half, half);
    std::vector<cplx> inside;
    for (int iy = 0; iy < k; ++iy)
      for (int ix = 0; ix < k; ++ix) {
        const cplx s = corner + cplx((ix + 0.5) * h, (iy + 0.5) * h);
        if (std::abs(p(s)) <= r) inside.push_back(s);
      }
    out.info.straddling_mass += 4.0 * half * half;
    if (inside.empty()) return;
    cplx centroid{};
    for (const auto& s : inside) centroid += s;
    centroid /= static_cast<double>(inside.size());
    // The node is the inside sample closest to the centroid, so it lies in the region.
    out.nodes.push_back(inside[nearest_index(inside, centroid)]);
    out.weights.push_back(4.0 * half * half * static_cast<double>(inside.size()) / (k * k));
    out.tags.push_back(NodeTag::Area);
  }

  void visit(cplx c, double half, int level) {
    const Cell cell = classify(c, half);
    if (cell == Cell::Outside) return;
    if (cell == Cell::Inside) {
      emit_grid(c, half, level);
      return;
    }
    if (level >= cfg.cell_depth) {
      clip(c, half);
      return;
    }
    const double h2 = 0.5 * half;
    visit(c + cplx(-h2, -h2), h2, level + 1);
    visit(c + cplx(h2, -h2), h2, level + 1);
    visit(c + cplx(-h2, h2), h2, level + 1);
    visit(c + cplx(h2, h2), h2, level + 1);
  }
};

DiscretizedMeasure disk_rule(cplx center, double radius, const QuadratureConfig& cfg) {
  DiscretizedMeasure out;
  const int nr = cfg.target_degree / 2 + 2;
  const int m = cfg.target_degree + 2;
  const int panels = cfg.radial_panels;
  for (int pnl = 0; pnl < panels; ++pnl) {
    const auto g = gauss_legendre(nr, radius * pnl / panels, radius * (pnl + 1) / panels);
    for (int i = 0; i < nr; ++i) {
      for (int l = 0; l < m; ++l) {
        out.nodes.push_back(center + std::polar(g.nodes[i], two_pi * l / m));
        out.weights.push_back(g.weights[i] * g.nodes[i] * two_pi / m);
        out.tags.push_back(NodeTag::Area);
      }
    }
  }
  out.info.notes.push_back("disk polar rule: " + std::to_string(panels) + " radial panels x " +
                           std::to_string(nr) + " Gauss nodes x " + std::to_string(m) + " angles");
  return out;
}

} // namespace

DiscretizedMeasure discretize_area(const LemniscateSpec& lem, const QuadratureConfig& cfg) {
  cfg.validate();
  const auto& p = lem.poly;
  const double r = lem.level;
  if (!(r > 0.0)) throw InputError("discretize_area: level must be > 0");

  DiscretizedMeasure out;
  if (p.degree == 1) {
    out = disk_rule(p.roots.front(), r, cfg);
  } else {
    // {|P| <= r} lies in the union of disks of radius r^{1/q} around the roots.
    const double margin = std::pow(r, 1.0 / p.degree);
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& x : p.roots) {
      xmin = std::min(xmin, x.real() - margin);
      xmax = std::max(xmax, x.real() + margin);
      ymin = std::min(ymin, x.imag() - margin);
      ymax = std::max(ymax, x.imag() + margin);
    }
    const double side = std::max(xmax - xmin, ymax - ymin);
    const cplx center(0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
    const int interior = cfg.interior_depth < 0 ? cfg.cell_depth : cfg.interior_depth;
    AreaBuilder b{p, r, cfg, interior, side, {}};
    b.visit(center, 0.5 * side, 0);
    out = std::move(b.out);
    out.info.notes.push_back("dyadic cells: depth " + std::to_string(cfg.cell_depth) + ", " +
                             std::to_string(out.nodes.size()) + " nodes");
  }
  out.finalize();
  if (out.nodes.empty()) throw NumericalError("discretize_area: no cells inside the lemniscate");
  if (out.info.straddling_mass > cfg.refinement_tol * out.total_mass) {
    std::ostringstream msg;
    msg << "discretize_area: straddling-mass fraction " << out.info.straddling_mass / out.total_mass
        << " exceeds refinement_tol " << cfg.refinement_tol;
    out.info.warnings.push_back(msg.str());
  }
  return out;
}

DiscretizedMeasure assemble_measure(const std::vector<MeasurePart>& parts, const std::vector<Atom>& atoms,
                                    const QuadratureConfig& cfg) {
  if (parts.empty() && atoms.empty()) throw InputError("assemble_measure: empty composition");
  DiscretizedMeasure out;
  for (const auto& part : parts) {
    if (!(part.scale > 0.0)) throw InputError("assemble_measure: part scale must be > 0");
    if (part.kind == PartKind::Area) {
      auto area = discretize_area(part.lem, cfg);
      for (std::size_t i = 0; i < area.nodes.size(); ++i) {
        const double d = part.density ? part.density(area.nodes[i]) : 1.0;
        if (!(d > 0.0)) throw InputError("assemble_measure: density <= 0 at an area node");
        out.nodes.push_back(area.nodes[i]);
        out.weights.push_back(area.weights[i] * d * part.scale);
        out.tags.push_back(NodeTag::Area);
      }
      out.info.straddling_mass += area.info.straddling_mass * part.scale;
      for (auto& w : area.info.warnings) out.info.warnings.push_back(std::move(w));
      for (auto& n : area.info.notes) out.info.notes.push_back(std::move(n));
    } else {
      const auto bd = trace_boundary(part.lem, cfg);
      for (const auto& comp : bd.components) {
        for (const auto& bn : comp.nodes) {
          const double d = part.density ? part.density(bn.node) : 1.0;
          if (!(d > 0.0)) throw InputError("assemble_measure: density <= 0 at a boundary node");
          out.nodes.push_back(bn.node);
          out.weights.push_back(bn.arc_weight * d * part.scale);
          out.tags.push_back(NodeTag::Boundary);
        }
      }
      out.info.boundary_components += static_cast<int>(bd.components.size());
      out.info.notes.push_back("boundary: " + std::to_string(bd.components.size()) + " component(s), length " +
                               format_double(bd.total_length()));
    }
  }

  const LemniscateSpec* ref = parts.empty() ? nullptr : &parts.front().lem;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const auto& a = atoms[i];
    if (!(a.mass > 0.0)) throw InputError("assemble_measure: atom mass must be > 0");
    for (std::size_t j = 0; j < i; ++j)
      if (atoms[j].location == a.location) throw InputError("assemble_measure: duplicate atom location");
    for (const auto& z : out.nodes)
      if (z == a.location) throw InputError("assemble_measure: atom coincides with a quadrature node");
    out.atoms.push_back(a);
    if (ref) {
      const double v = std::abs(ref->poly(a.location));
      out.info.atom_flags.push_back(v > ref->level ? "exterior atom" : (v < ref->level ? "interior atom" : "on-level atom"));
    } else {
      out.info.atom_flags.push_back("atom");
    }
  }
  out.finalize();
  return out;
}

DiscretizedMeasure apply_polynomial_weight(const DiscretizedMeasure& mu, const PolynomialSpec& w) {
  if (w.degree < 1) throw InputError("apply_polynomial_weight: weight polynomial must be nonconstant");
  DiscretizedMeasure out;
  out.info = mu.info;
  out.info.dropped_nodes = 0;
  out.info.dropped_atoms = 0;
  out.nodes.reserve(mu.nodes.size());
  for (std::size_t i = 0; i < mu.nodes.size(); ++i) {
    const double m = std::norm(w(mu.nodes[i]));
    const double nw = mu.weights[i] * m;
    if (!(nw > 0.0)) {
      ++out.info.dropped_nodes;
      continue;
    }
    out.nodes.push_back(mu.nodes[i]);
    out.weights.push_back(nw);
    out.tags.push_back(NodeTag::WeightModified);
  }
  std::vector<std::string> flags;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
    const auto& a = mu.atoms[i];
    const double nm = a.mass * std::norm(w(a.location));
    if (!(nm > 0.0)) {
      ++out.info.dropped_atoms;
      std::ostringstream msg;
      msg << "atom at " << format_complex(a.location) << " removed: weight polynomial vanishes there";
      out.info.notes.push_back(msg.str());
      continue;
    }
    out.atoms.push_back({a.location, nm});
    if (i < mu.info.atom_flags.size()) flags.push_back(mu.info.atom_flags[i]);
  }
  out.info.atom_flags = std::move(flags);
  if (out.info.dropped_nodes > 0)
    out.info.notes.push_back(std::to_string(out.info.dropped_nodes) + " node(s) removed at roots of the weight polynomial");
  out.finalize();
  return out;
}

double region_mass(const DiscretizedMeasure& mu, const LemniscateSpec& lem, double s) {
  if (s > lem.level) throw InputError("region_mass: s must not exceed the level r");
  long double m = 0.0L;
  for (std::size_t i = 0; i < mu.nodes.size(); ++i)
    if (std::abs(lem.poly(mu.nodes[i])) <= s) m += mu.weights[i];
  for (const auto& a : mu.atoms)
    if (std::abs(lem.poly(a.location)) <= s) m += a.mass;
  return static_cast<double>(m);
}

std::string measure_to_csv(const DiscretizedMeasure& mu) {
  std::string out = "re,im,weight,tag\n";
  for (std::size_t i = 0; i < mu.nodes.size(); ++i)
    out += format_double(mu.nodes[i].real()) + "," + format_double(mu.nodes[i].imag()) + "," +
           format_double(mu.weights[i]) + "," + to_string(mu.tags[i]) + "\n";
  for (const auto& a : mu.atoms)
    out += format_double(a.location.real()) + "," + format_double(a.location.imag()) + "," +
           format_double(a.mass) + ",atom\n";
  return out;
}

} // namespace bergman
