#pragma once

// Pointwise linear algebra of hermitian triples (g, J, omega) on R^4:
// reconstruction of each element from the other two, the Hodge star on
// 2-forms, self-dual/anti-self-dual splitting, the compatibility cone of
// J-invariant symmetric forms, and the spinor-fiber action of omega.
//
// Conventions used throughout:
//   * the defining identity is omega(u, v) = g(u, J v);
//   * positive orientation is e0^e1^e2^e3;
//   * 2-form components are stored in the ordered basis
//     (e0^e1, e0^e2, e0^e3, e1^e2, e1^e3, e2^e3).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <utility>

#include <Eigen/Dense>

#include "ak4/errors.hpp"

namespace ak4 {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Cplx = std::complex<double>;
using Vec6c = Eigen::Matrix<Cplx, 6, 1>;

// Relative tolerance for all pointwise algebraic predicates.
inline constexpr double kTolAlg = 1e-10;

// ||a - b||_F relative to the larger operand norm; symmetric in (a, b).
template <typename DerivedA, typename DerivedB>
double rel_error(const Eigen::MatrixBase<DerivedA>& a,
                 const Eigen::MatrixBase<DerivedB>& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale == 0.0) return 0.0;
  return (a - b).norm() / scale;
}

// index pairs of the 2-form component basis, in storage order
inline constexpr std::array<std::pair<int, int>, 6> kFormPairs = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

// ---------------------------------------------------------------------------
// domain types
// ---------------------------------------------------------------------------

// Symmetric bilinear form on R^4. The checked constructor requires all four
// eigenvalues positive; `unchecked` admits indefinite forms (used as inputs
// to cone classification).
class Metric4 {
 public:
  static Metric4 spd(const Mat4& m);
  static Metric4 unchecked(const Mat4& m);
  static Metric4 identity();

  const Mat4& matrix() const { return m_; }
  bool positive_definite(double tol = kTolAlg) const;
  double volume_density() const;  // sqrt(det g), requires SPD

 private:
  explicit Metric4(const Mat4& symmetrized) : m_(symmetrized) {}
  Mat4 m_;
};

// Endomorphism J with J^2 = -I (within kTolAlg, relative).
class AlmostComplex4 {
 public:
  static AlmostComplex4 from_matrix(const Mat4& j);
  const Mat4& matrix() const { return j_; }
  AlmostComplex4 negated() const;

  // J is compatible with g when J^T g J = g.
  bool compatible_with(const Metric4& g, double tol = kTolAlg) const;

 private:
  explicit AlmostComplex4(const Mat4& j) : j_(j) {}
  Mat4 j_;
};

// Antisymmetric bilinear form on R^4, six independent components.
class TwoForm4 {
 public:
  TwoForm4() : c_(Vec6::Zero()) {}
  explicit TwoForm4(const Vec6& components) : c_(components) {}
  static TwoForm4 from_matrix(const Mat4& antisymmetric);

  const Vec6& components() const { return c_; }
  Mat4 matrix() const;        // the antisymmetric 4x4 representation
  double pfaffian() const;    // nondegenerate <=> pfaffian != 0
  int rank(double tol = kTolAlg) const;  // 0, 2 or 4

  TwoForm4 operator-() const { return TwoForm4(-c_); }
  TwoForm4 operator+(const TwoForm4& o) const { return TwoForm4(c_ + o.c_); }
  TwoForm4 operator-(const TwoForm4& o) const { return TwoForm4(c_ - o.c_); }
  TwoForm4 scaled(double s) const { return TwoForm4(s * c_); }

 private:
  Vec6 c_;
};

// A compatible triple. `from_metric_acs` builds omega from (g, J) and is the
// canonical way to obtain a valid instance.
struct HermitianTriple {
  Metric4 g;
  AlmostComplex4 J;
  TwoForm4 omega;

  static HermitianTriple from_metric_acs(const Metric4& g,
                                         const AlmostComplex4& J);

  // omega = g(., J.), type (1,1), self-dual, nondegenerate
  bool valid(double tol = kTolAlg) const;

  // (g, J, omega) -> (g, -J, -omega); an involution on valid triples
  HermitianTriple conjugated() const;
};

// Parameters (a, b, c) of a J-invariant symmetric form read off in the
// standard block frame, where the form is diag([[a,b],[b,c]], [[a,b],[b,c]]).
struct ConePoint {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

enum class ConeClass { Positive, Negative, Degenerate, Indefinite };

// Fiber of W+ = L^{0,0} (+) L^{0,2}: a complex-valued function component and
// the coefficient of the canonical (0,2) frame form induced by the triple.
struct SpinorFiber {
  Cplx alpha{0.0, 0.0};
  Cplx beta{0.0, 0.0};
};

// ---------------------------------------------------------------------------
// operations
// ---------------------------------------------------------------------------

// omega(u, v) = g(u, J v); throws IncompatiblePair unless J^2 = -I and
// J^T g J = g within tol.
TwoForm4 reconstruct_omega(const Metric4& g, const AlmostComplex4& J,
                           double tol = kTolAlg);

// J = g^{-1} omega; throws IncompatiblePair unless the result squares to -I
// within tol (no polar normalization of incompatible pairs).
AlmostComplex4 reconstruct_J(const Metric4& g, const TwoForm4& omega,
                             double tol = kTolAlg);

// g(u, v) = omega(J u, v); throws NotSymmetric when omega is not (1,1) for J,
// NotPositive when the candidate is not SPD.
Metric4 reconstruct_g(const AlmostComplex4& J, const TwoForm4& omega,
                      double tol = kTolAlg);

// Matrix of *_g on 2-form components; orientation is +1 for e0^e1^e2^e3.
// Squares to the identity; the (+1)/(-1) eigenspaces are 3-dimensional.
Mat6 hodge_star_2(const Metric4& g, int orientation);

// Gram matrix of the metric inner product on 2-forms (indices raised by
// g^{-1}), i.e. <a, b>_g = a^T G2 b on component vectors.
Mat6 metric_gram_2(const Metric4& g);

// Wedge pairing on component vectors: a ^ b = (a^T W b) e0^e1^e2^e3.
Mat6 wedge_pairing_2();

// omega = sd + asd with *sd = sd, *asd = -asd, orthogonal in <.,.>_g.
std::pair<TwoForm4, TwoForm4> sd_asd_split(const TwoForm4& omega,
                                           const Metric4& g, int orientation);

// Total classification: positive (ac-b^2>0, a+c>0), negative (ac-b^2>0,
// a+c<0), degenerate (ac-b^2=0), indefinite (ac-b^2<0).
ConeClass classify_cone(const ConePoint& p);

// Scale p into the unit shell ac - b^2 = 1 of the positive cone (the
// Lobachevsky-plane model of compatible conformal classes). Idempotent.
// Throws NotInCone unless classify_cone(p) == Positive.
ConePoint lobachevsky_normalize(const ConePoint& p);

// Read (a, b, c) of a J-invariant symmetric form in the standard block frame.
// The frame is built deterministically: an orthonormal basis (w0, w1, Jw0,
// Jw1) w.r.t. the inner product that makes J orthogonal.
ConePoint cone_coordinates(const Mat4& symmetric, const AlmostComplex4& J);

// Clifford action of the triple's omega on the spinor fiber: diagonal with
// eigenvalue -2i on alpha and +2i on beta.
SpinorFiber clifford_action(const HermitianTriple& triple,
                            const SpinorFiber& s);

// The self-dual 2-form (|beta|^2 - |alpha|^2) omega + (alpha conj(beta) +
// conj(alpha) beta), the cross term taken in the canonical (0,2)+(2,0) frame.
TwoForm4 sw_quadratic(const SpinorFiber& s, const HermitianTriple& triple);

// K^2 = 2 chi + 3 sigma. The mod-2 condition against w_2 needs a choice of
// representative and is not checked.
bool check_spinc_constraints(long long chi, long long sigma, long long Ksq);

// ---------------------------------------------------------------------------
// frame and orientation helpers
// ---------------------------------------------------------------------------

// Orientation induced by J relative to e0^e1^e2^e3: sign of
// det[v, Jv, w, Jw] for a complex frame (v, w). Metric-free; invariant under
// J -> -J.
int orientation_sign(const AlmostComplex4& J);

// g-orthonormal frame (u, Ju, w, Jw) adapted to a compatible pair, chosen
// deterministically (u seeded from e0; w from the first standard vector in
// general position, tried in the order e2, e1, e3).
Eigen::Matrix4d adapted_frame(const Metric4& g, const AlmostComplex4& J);

// Component vector of the canonical (0,2) frame form of the triple,
// conj(phi^1) ^ conj(phi^2) for the dual coframe of adapted_frame.
Vec6c canonical_02_form(const HermitianTriple& triple);

}  // namespace ak4
