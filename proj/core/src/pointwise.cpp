#include "ak4/pointwise.hpp"

#include <algorithm>
#include <cmath>

namespace ak4 {

namespace {

// row index of an ordered pair (i < j) in the component basis
int pair_index(int i, int j) {
  for (int k = 0; k < 6; ++k) {
    if (kFormPairs[k].first == i && kFormPairs[k].second == j) return k;
  }
  return -1;
}

Mat4 symmetrize(const Mat4& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

// ---------------------------------------------------------------------------
// Metric4
// ---------------------------------------------------------------------------

Metric4 Metric4::spd(const Mat4& m) {
  const Mat4 s = symmetrize(m);
  Eigen::SelfAdjointEigenSolver<Mat4> es(s);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw NotPositive("Metric4::spd: matrix has a nonpositive eigenvalue");
  }
  return Metric4(s);
}

Metric4 Metric4::unchecked(const Mat4& m) { return Metric4(symmetrize(m)); }

Metric4 Metric4::identity() { return Metric4(Mat4::Identity()); }

bool Metric4::positive_definite(double /*tol*/) const {
  Eigen::SelfAdjointEigenSolver<Mat4> es(m_);
  return es.eigenvalues().minCoeff() > 0.0;
}

double Metric4::volume_density() const {
  const double det = m_.determinant();
  if (det <= 0.0) throw NotPositive("Metric4::volume_density: det <= 0");
  return std::sqrt(det);
}

// ---------------------------------------------------------------------------
// AlmostComplex4
// ---------------------------------------------------------------------------

AlmostComplex4 AlmostComplex4::from_matrix(const Mat4& j) {
  if (rel_error(j * j, -Mat4::Identity()) > kTolAlg) {
    throw IncompatiblePair("AlmostComplex4: J*J != -I");
  }
  return AlmostComplex4(j);
}

AlmostComplex4 AlmostComplex4::negated() const { return AlmostComplex4(-j_); }

bool AlmostComplex4::compatible_with(const Metric4& g, double tol) const {
  const Mat4& m = g.matrix();
  return rel_error(j_.transpose() * m * j_, m) <= tol;
}

// ---------------------------------------------------------------------------
// TwoForm4
// ---------------------------------------------------------------------------

TwoForm4 TwoForm4::from_matrix(const Mat4& a) {
  Vec6 c;
  for (int k = 0; k < 6; ++k) {
    c[k] = 0.5 * (a(kFormPairs[k].first, kFormPairs[k].second) -
                  a(kFormPairs[k].second, kFormPairs[k].first));
  }
  return TwoForm4(c);
}

Mat4 TwoForm4::matrix() const {
  Mat4 a = Mat4::Zero();
  for (int k = 0; k < 6; ++k) {
    a(kFormPairs[k].first, kFormPairs[k].second) = c_[k];
    a(kFormPairs[k].second, kFormPairs[k].first) = -c_[k];
  }
  return a;
}

double TwoForm4::pfaffian() const {
  return c_[0] * c_[5] - c_[1] * c_[4] + c_[2] * c_[3];
}

int TwoForm4::rank(double tol) const {
  const double scale = c_.norm();
  if (scale <= tol) return 0;
  // pfaffian is quadratic in the components
  if (std::abs(pfaffian()) > tol * scale * scale) return 4;
  return 2;
}

// ---------------------------------------------------------------------------
// triple reconstruction
// ---------------------------------------------------------------------------

TwoForm4 reconstruct_omega(const Metric4& g, const AlmostComplex4& J,
                           double tol) {
  if (!J.compatible_with(g, tol)) {
    throw IncompatiblePair("reconstruct_omega: J^T g J != g");
  }
  const Mat4 w = g.matrix() * J.matrix();
  return TwoForm4::from_matrix(w);  // antisymmetrizes exactly
}

AlmostComplex4 reconstruct_J(const Metric4& g, const TwoForm4& omega,
                             double tol) {
  const Mat4 k = g.matrix().ldlt().solve(omega.matrix());
  if (rel_error(k * k, -Mat4::Identity()) > tol) {
    throw IncompatiblePair("reconstruct_J: g^{-1} omega does not square to -I");
  }
  return AlmostComplex4::from_matrix(k);
}

Metric4 reconstruct_g(const AlmostComplex4& J, const TwoForm4& omega,
                      double tol) {
  const Mat4 candidate = J.matrix().transpose() * omega.matrix();
  if (rel_error(candidate, candidate.transpose()) > tol) {
    throw NotSymmetric("reconstruct_g: omega is not of type (1,1) for J");
  }
  return Metric4::spd(candidate);  // throws NotPositive when indefinite
}

HermitianTriple HermitianTriple::from_metric_acs(const Metric4& g,
                                                 const AlmostComplex4& J) {
  return HermitianTriple{g, J, reconstruct_omega(g, J)};
}

bool HermitianTriple::valid(double tol) const {
  const Mat4& gm = g.matrix();
  const Mat4& jm = J.matrix();
  const Mat4 wm = omega.matrix();
  if (!g.positive_definite()) return false;
  if (rel_error(jm * jm, -Mat4::Identity()) > tol) return false;
  if (rel_error(jm.transpose() * gm * jm, gm) > tol) return false;
  if (rel_error(wm, gm * jm) > tol) return false;
  // type (1,1): omega(Ju, Jv) = omega(u, v)
  if (rel_error(jm.transpose() * wm * jm, wm) > tol) return false;
  // self-dual in the orientation induced by J
  const auto [sd, asd] = sd_asd_split(omega, g, orientation_sign(J));
  const double scale = omega.components().norm();
  if (asd.components().norm() > tol * scale) return false;
  if (std::abs(omega.pfaffian()) <= tol * scale * scale) return false;
  return true;
}

HermitianTriple HermitianTriple::conjugated() const {
  return HermitianTriple{g, J.negated(), -omega};
}

// ---------------------------------------------------------------------------
// Hodge star on 2-forms
// ---------------------------------------------------------------------------

Mat6 wedge_pairing_2() {
  Mat6 w = Mat6::Zero();
  w(0, 5) = w(5, 0) = 1.0;   // e01 ^ e23 = +vol
  w(1, 4) = w(4, 1) = -1.0;  // e02 ^ e13 = -vol
  w(2, 3) = w(3, 2) = 1.0;   // e03 ^ e12 = +vol
  return w;
}

Mat6 metric_gram_2(const Metric4& g) {
  const Mat4 gi = g.matrix().inverse();
  Mat6 gram;
  for (int r = 0; r < 6; ++r) {
    const auto [i, j] = kFormPairs[r];
    for (int s = 0; s < 6; ++s) {
      const auto [k, l] = kFormPairs[s];
      gram(r, s) = gi(i, k) * gi(j, l) - gi(i, l) * gi(j, k);
    }
  }
  return gram;
}

Mat6 hodge_star_2(const Metric4& g, int orientation) {
  // a ^ (*b) = <a, b>_g vol_g resolves to * = sqrt(det g) W G2 on components.
  const double dens = g.volume_density();
  return (orientation >= 0 ? 1.0 : -1.0) * dens * wedge_pairing_2() *
         metric_gram_2(g);
}

std::pair<TwoForm4, TwoForm4> sd_asd_split(const TwoForm4& omega,
                                           const Metric4& g, int orientation) {
  const Mat6 star = hodge_star_2(g, orientation);
  const Vec6 starred = star * omega.components();
  return {TwoForm4(0.5 * (omega.components() + starred)),
          TwoForm4(0.5 * (omega.components() - starred))};
}

// ---------------------------------------------------------------------------
// compatibility cone
// ---------------------------------------------------------------------------

ConeClass classify_cone(const ConePoint& p) {
  const double disc = p.a * p.c - p.b * p.b;
  if (disc < 0.0) return ConeClass::Indefinite;
  if (disc == 0.0) return ConeClass::Degenerate;
  return (p.a + p.c > 0.0) ? ConeClass::Positive : ConeClass::Negative;
}

ConePoint lobachevsky_normalize(const ConePoint& p) {
  if (classify_cone(p) != ConeClass::Positive) {
    throw NotInCone("lobachevsky_normalize: point not in the positive cone");
  }
  const double s = 1.0 / std::sqrt(p.a * p.c - p.b * p.b);
  return ConePoint{s * p.a, s * p.b, s * p.c};
}

namespace {

// Orthonormal pair (u, w) w.r.t. `metric` with w independent of (u, Ju),
// candidates tried in the fixed order e2, e1, e3.
std::pair<Vec4, Vec4> adapted_pair(const Mat4& metric, const Mat4& jm) {
  const auto dot = [&](const Vec4& x, const Vec4& y) {
    return x.dot(metric * y);
  };
  Vec4 u = Vec4::Unit(0);
  u /= std::sqrt(dot(u, u));
  const Vec4 ju = jm * u;

  const int order[3] = {2, 1, 3};
  Vec4 best = Vec4::Zero();
  double best_norm = -1.0;
  for (int idx : order) {
    Vec4 cand = Vec4::Unit(idx);
    cand -= dot(cand, u) * u + dot(cand, ju) * ju;
    const double nrm = std::sqrt(std::max(0.0, dot(cand, cand)));
    if (nrm > 0.25) {
      return {u, cand / nrm};
    }
    if (nrm > best_norm) {
      best_norm = nrm;
      best = cand;
    }
  }
  if (best_norm <= 0.0) {
    throw DegenerateConfiguration("adapted frame: no independent direction");
  }
  return {u, best / best_norm};
}

}  // namespace

Eigen::Matrix4d adapted_frame(const Metric4& g, const AlmostComplex4& J) {
  const auto [u, w] = adapted_pair(g.matrix(), J.matrix());
  Mat4 frame;
  frame.col(0) = u;
  frame.col(1) = J.matrix() * u;
  frame.col(2) = w;
  frame.col(3) = J.matrix() * w;
  return frame;
}

ConePoint cone_coordinates(const Mat4& symmetric, const AlmostComplex4& J) {
  // inner product in which J is orthogonal (the identity whenever J already is)
  const Mat4 h =
      0.5 * (Mat4::Identity() + J.matrix().transpose() * J.matrix());
  const auto [u, w] = adapted_pair(h, J.matrix());
  Mat4 frame;  // ordered (w0, w1, Jw0, Jw1): the standard block frame
  frame.col(0) = u;
  frame.col(1) = w;
  frame.col(2) = J.matrix() * u;
  frame.col(3) = J.matrix() * w;
  const Mat4 s = frame.transpose() * symmetrize(symmetric) * frame;
  return ConePoint{0.5 * (s(0, 0) + s(2, 2)), 0.5 * (s(0, 1) + s(2, 3)),
                   0.5 * (s(1, 1) + s(3, 3))};
}

// ---------------------------------------------------------------------------
// spinor fiber
// ---------------------------------------------------------------------------

SpinorFiber clifford_action(const HermitianTriple& /*triple*/,
                            const SpinorFiber& s) {
  constexpr Cplx two_i{0.0, 2.0};
  return SpinorFiber{-two_i * s.alpha, two_i * s.beta};
}

Vec6c canonical_02_form(const HermitianTriple& triple) {
  const Mat4 frame = adapted_frame(triple.g, triple.J);
  const Mat4 coframe = frame.inverse();
  using Vec4c = Eigen::Matrix<Cplx, 4, 1>;
  const Cplx im{0.0, 1.0};
  // conj(phi^1) = f1 - i f2, conj(phi^2) = f3 - i f4
  Vec4c p = coframe.row(0).transpose().cast<Cplx>() -
            im * coframe.row(1).transpose().cast<Cplx>();
  Vec4c q = coframe.row(2).transpose().cast<Cplx>() -
            im * coframe.row(3).transpose().cast<Cplx>();
  Vec6c phi;
  for (int k = 0; k < 6; ++k) {
    const auto [i, j] = kFormPairs[k];
    phi[k] = p[i] * q[j] - p[j] * q[i];
  }
  return phi;
}

TwoForm4 sw_quadratic(const SpinorFiber& s, const HermitianTriple& triple) {
  const double coeff = std::norm(s.beta) - std::norm(s.alpha);
  const Vec6c phi = canonical_02_form(triple);
  const Vec6c cross_c = std::conj(s.alpha) * s.beta * phi;
  const Vec6 cross = 2.0 * cross_c.real();
  return TwoForm4(coeff * triple.omega.components() + cross);
}

bool check_spinc_constraints(long long chi, long long sigma, long long Ksq) {
  return Ksq == 2 * chi + 3 * sigma;
}

int orientation_sign(const AlmostComplex4& J) {
  const Mat4& jm = J.matrix();
  double best = 0.0;
  for (int k = 1; k < 4; ++k) {
    Mat4 frame;
    frame.col(0) = Vec4::Unit(0);
    frame.col(1) = jm.col(0);
    frame.col(2) = Vec4::Unit(k);
    frame.col(3) = jm.col(k);
    const double det = frame.determinant();
    if (std::abs(det) > std::abs(best)) best = det;
  }
  return best >= 0.0 ? 1 : -1;
}

}  // namespace ak4
