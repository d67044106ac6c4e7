#pragma once

#include "bergman/polynomial.hpp"

#include <functional>
#include <string>
#include <vector>

namespace bergman {

struct LemniscateSpec {
  PolynomialSpec poly;
  double level = 1.0;  // r > 0
};

struct QuadratureConfig {
  int cell_depth = 8;        // max dyadic refinement level for straddling area cells
  int interior_depth = -1;   // level at which certified interior cells are emitted; -1 means cell_depth
  int boundary_nodes = 512;  // nodes per traced boundary component
  int target_degree = 64;    // highest polynomial degree whose inner products must be trusted
  double refinement_tol = 0.05;
  int radial_panels = 2;     // radial Gauss panels of the disk rule
  int clip_samples = 8;      // per-side subsamples for clipping straddling cells

  void validate() const;
};

struct BoundaryNode {
  cplx node;
  double arc_weight = 0.0;
  cplx tangent;  // unit, positive orientation
};

struct BoundaryComponent {
  std::vector<BoundaryNode> nodes;
  int turns = 1;  // phase turns of P needed to close the component
  double length = 0.0;
  double closure_error = 0.0;
};

struct BoundaryDiscretization {
  std::vector<BoundaryComponent> components;
  double level = 1.0;
  PolynomialSpec poly;

  double total_length() const;
};

enum class NodeTag { Area, Boundary, WeightModified };

const char* to_string(NodeTag tag);

struct Atom {
  cplx location;
  double mass = 0.0;
};

struct MeasureInfo {
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  std::vector<std::string> atom_flags;  // one per atom: interior / exterior / on-level
  double straddling_mass = 0.0;         // area of clipped cells at the finest level
  int boundary_components = 0;
  std::size_t dropped_nodes = 0;
  std::size_t dropped_atoms = 0;
};

/// Discrete approximation of a measure: weighted nodes plus exact atoms.
struct DiscretizedMeasure {
  std::vector<cplx> nodes;
  std::vector<double> weights;
  std::vector<NodeTag> tags;
  std::vector<Atom> atoms;
  double total_mass = 0.0;
  std::vector<cplx> hull;  // counter-clockwise convex polygon of nodes and atoms
  MeasureInfo info;

  std::size_t support_size() const { return nodes.size() + atoms.size(); }
  /// Nodes followed by atom locations.
  std::vector<cplx> support_points() const;
  /// Node weights followed by atom masses.
  std::vector<double> support_weights() const;
  double max_modulus() const;
  /// FNV-1a hash over nodes, weights and atoms, as 16 hex digits.
  std::string hash() const;
  /// Recomputes total_mass and hull from nodes and atoms.
  void finalize();
};

/// Strictly positive density sampled at boundary (or area) nodes.
using Density = std::function<double(cplx)>;

/// Parses "const:c" or "dP:c" (c times |P'(z)|).
Density parse_density(const std::string& text, const PolynomialSpec& poly);

enum class PartKind { Area, Boundary };

struct MeasurePart {
  PartKind kind = PartKind::Area;
  LemniscateSpec lem;
  Density density;  // empty means 1
  double scale = 1.0;
};

/// Traces {|P(z)| = r} by phase continuation of P(z) = r e^{it}.
BoundaryDiscretization trace_boundary(const LemniscateSpec& lem, const QuadratureConfig& cfg);

/// Area measure on {|P(z)| <= r}.
DiscretizedMeasure discretize_area(const LemniscateSpec& lem, const QuadratureConfig& cfg);

DiscretizedMeasure assemble_measure(const std::vector<MeasurePart>& parts,
                                    const std::vector<Atom>& atoms, const QuadratureConfig& cfg);

/// Multiplies the measure by |W(z)|^2; nodes and atoms at roots of W are dropped.
DiscretizedMeasure apply_polynomial_weight(const DiscretizedMeasure& mu, const PolynomialSpec& w);

/// Mass of {|P| <= s}.
double region_mass(const DiscretizedMeasure& mu, const LemniscateSpec& lem, double s);

/// Euclidean distance from z to the node hull; 0 inside or on it.
double hull_distance(const DiscretizedMeasure& mu, cplx z);

std::vector<cplx> convex_hull(std::vector<cplx> points);
double distance_to_polygon(const std::vector<cplx>& hull, cplx z);

/// CSV with columns re,im,weight,tag; atoms are tagged "atom".
std::string measure_to_csv(const DiscretizedMeasure& mu);

} // namespace bergman
