#pragma once

// Projective geometry over CP^3 and CP^5 with real structures: the Klein
// quadric model of lines, rulings of metric quadrics and their almost
// complex structures, and the junction construction that joins two
// structures of equal orientation through a third one sharing a compatible
// metric with each.

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ak4/errors.hpp"
#include "ak4/pointwise.hpp"

namespace ak4 {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Tolerance on normal-form coordinates; rank decisions use singular values
// with this relative threshold.
inline constexpr double kTolProj = 1e-9;

// ---------------------------------------------------------------------------
// points, subspaces, real structures
// ---------------------------------------------------------------------------

// Normal form of homogeneous coordinates: unit Euclidean norm, first
// significant coordinate real positive. Throws BadDimension on (near-)zero.
CVec projective_normal_form(CVec v);

// Euclidean distance between normal forms; scale- and phase-invariant.
double projective_distance(const CVec& a, const CVec& b);

class ProjPoint {
 public:
  explicit ProjPoint(const CVec& coords) : v_(projective_normal_form(coords)) {}

  const CVec& coords() const { return v_; }
  int ambient_dim() const { return static_cast<int>(v_.size()) - 1; }
  double distance(const ProjPoint& o) const {
    return projective_distance(v_, o.v_);
  }
  bool same_as(const ProjPoint& o, double tol = kTolProj) const {
    return distance(o) <= tol;
  }

 private:
  CVec v_;
};

class ProjSubspace {
 public:
  // Columns spanning the subspace; orthonormalized, rank decided by singular
  // values at the relative threshold kTolProj.
  static ProjSubspace from_columns(const CMat& columns);

  const CMat& basis() const { return basis_; }
  int ambient_dim() const { return static_cast<int>(basis_.rows()) - 1; }
  int proj_dim() const { return static_cast<int>(basis_.cols()) - 1; }

  bool contains(const CVec& v, double tol = kTolProj) const;
  bool contains(const ProjPoint& p, double tol = kTolProj) const {
    return contains(p.coords(), tol);
  }
  bool same_as(const ProjSubspace& o, double tol = kTolProj) const;

  // conjugated subspace (coordinatewise), an orthonormal basis again
  ProjSubspace conjugated() const;

 private:
  explicit ProjSubspace(CMat basis) : basis_(std::move(basis)) {}
  CMat basis_;
};

// Antiholomorphic involution p -> normal form of M conj(p). The stored
// matrix is rescaled so that M conj(M) = +I (standard type, has fixed
// points) or -I (quaternionic type, has none).
class RealStructure {
 public:
  static RealStructure standard(int ambient_dim);      // conjugation
  static RealStructure quaternionic(int ambient_dim);  // ambient_dim odd
  static RealStructure from_matrix(const CMat& m);

  const CMat& matrix() const { return m_; }
  bool is_standard() const { return type_ > 0; }
  bool is_quaternionic() const { return type_ < 0; }

  CVec apply_vec(const CVec& v) const { return m_ * v.conjugate(); }
  ProjPoint apply(const ProjPoint& p) const {
    return ProjPoint(apply_vec(p.coords()));
  }
  ProjSubspace apply(const ProjSubspace& s) const;
  bool fixes(const ProjPoint& p, double tol = kTolProj) const;
  bool preserves(const ProjSubspace& s, double tol = kTolProj) const;

 private:
  RealStructure(CMat m, int type) : m_(std::move(m)), type_(type) {}
  CMat m_;
  int type_;  // +1 standard, -1 quaternionic
};

// Nondegenerate quadric in CP^3 given by a symmetric Gram matrix, together
// with a real structure mapping the quadric to itself. For Gram matrices of
// SPD metrics the quadric is real but carries no real points.
struct QuadricModel {
  Eigen::Matrix4cd gram;
  RealStructure theta;

  // |v^T gram w| residual of a point or of a spanning set, relative
  double isotropy_residual(const CMat& columns) const;
};

// Point of CP^5 satisfying the Pluecker relation within kTolProj.
class KleinPoint {
 public:
  explicit KleinPoint(const ProjPoint& p);
  const ProjPoint& point() const { return p_; }
  const CVec& coords() const { return p_.coords(); }

 private:
  ProjPoint p_;
};

// Quadratic form of the Klein quadric, p0 p5 - p1 p4 + p2 p3, and its
// polarization.
Cplx klein_form(const CVec& p);
Cplx klein_form_polar(const CVec& u, const CVec& v);

// ---------------------------------------------------------------------------
// incidence operations
// ---------------------------------------------------------------------------

using ProjObject = std::variant<ProjPoint, ProjSubspace>;

ProjSubspace span(const std::vector<ProjObject>& objs);
ProjSubspace span(const std::vector<ProjPoint>& points);

// Exact linear-algebra intersection; empty intersection is a value.
std::optional<ProjSubspace> intersect(const ProjSubspace& a,
                                      const ProjSubspace& b);

// ---------------------------------------------------------------------------
// Klein correspondence
// ---------------------------------------------------------------------------

// Line in CP^3 -> Pluecker point. Independent of the chosen basis.
KleinPoint pluecker_embed(const ProjSubspace& line);

// Klein point -> line in CP^3; inverse of pluecker_embed.
ProjSubspace pluecker_extract(const KleinPoint& k);

// ---------------------------------------------------------------------------
// real points on invariant lines
// ---------------------------------------------------------------------------

// Two distinct fixed points of a standard-type structure on an invariant
// line, built as z + theta(z) and i (z - theta(z)) for sample points z.
// Throws QuaternionicStructure / NotRealLine on precondition failure.
std::pair<ProjPoint, ProjPoint> real_points_on_real_line(
    const ProjSubspace& line, const RealStructure& theta);

// Minimum of the displacement distance d(p, theta(p)) over a parameter grid
// on the line. Near zero for standard structures on invariant lines,
// bounded away from zero for quaternionic ones.
double fixed_point_residual_scan(const ProjSubspace& line,
                                 const RealStructure& theta, int samples);

// ---------------------------------------------------------------------------
// rulings and almost complex structures
// ---------------------------------------------------------------------------

// The eigenline of J in CP^3: projectivized eigenspace of eigenvalue -i,
// spanned by vectors u + i J u. No metric involved.
ProjSubspace ruling_line(const AlmostComplex4& J);

// Line of the compatible pair (J, g) on the quadric of the complexified
// metric, plus that quadric with the standard conjugation structure.
std::pair<ProjSubspace, QuadricModel> acs_to_ruling_line(
    const AlmostComplex4& J, const Metric4& g);

// Structure determined by a line disjoint from its conjugate: -i on the
// span, +i on the conjugate span. Throws RealIntersection.
AlmostComplex4 acs_from_line(const ProjSubspace& line);

// Inverse of acs_to_ruling_line; validates that the line is isotropic for
// the quadric (NotIsotropic) and disjoint from its conjugate
// (RealIntersection).
AlmostComplex4 ruling_line_to_acs(const ProjSubspace& line,
                                  const QuadricModel& q);

// ---------------------------------------------------------------------------
// junction
// ---------------------------------------------------------------------------

struct JunctionResult {
  AlmostComplex4 J_junct;
  Metric4 g_p;  // compatible with J0 and J_junct
  Metric4 g_q;  // compatible with J_junct and J1
  int attempts = 0;
  bool shortcut = false;
};

inline constexpr int kJunctionMaxRetries = 16;

// Junction construction: from two structures inducing the same orientation,
// produce J_junct plus metrics g_p, g_q compatible as annotated above.
// Plane choices are seeded and deterministic; after kJunctionMaxRetries
// failed attempts throws DegenerateConfiguration. Orientation mismatch
// throws IncompatibleOrientation.
JunctionResult junction(const AlmostComplex4& J0, const AlmostComplex4& J1,
                        const Metric4& g_ref, std::uint64_t seed);

// SPD solution of the two invariance constraints J^T G J = G, found by a
// null-space solve of the linear system on symmetric matrices followed by a
// search for a positive element of the solution subspace. Returns nothing
// when no SPD element is found.
std::optional<Metric4> common_metric(const AlmostComplex4& JA,
                                     const AlmostComplex4& JB);

}  // namespace ak4
