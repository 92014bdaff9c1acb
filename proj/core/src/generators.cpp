#include "ak4/generators.hpp"

#include <cmath>
#include <numbers>

namespace ak4 {

namespace {

// polar factor: J = A (-A^2)^{-1/2}, computed through the generalized
// eigenproblem of the g-self-adjoint operator -A^2
AlmostComplex4 polar_acs(const Metric4& g, const Mat4& a) {
  const Mat4 m = -a * a;                 // g-self-adjoint, positive for generic a
  const Mat4 gm = g.matrix() * m;        // symmetric
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat4> es(0.5 * (gm + gm.transpose()),
                                                    g.matrix());
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw IncompatiblePair("polar_acs: form is degenerate for the metric");
  }
  // eigenvectors are g-orthonormal: V^T g V = I, so V^{-1} = V^T g
  const Mat4 v = es.eigenvectors();
  const Vec4 inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
  const Mat4 m_inv_sqrt = v * inv_sqrt.asDiagonal() * v.transpose() * g.matrix();
  Mat4 j = a * m_inv_sqrt;
  // restore exact g-skewness, then polish the square towards -I (odd
  // polynomials preserve skewness, so compatibility survives the polish)
  const Mat4 w = 0.5 * (g.matrix() * j - j.transpose() * g.matrix());
  j = g.matrix().ldlt().solve(w);
  for (int it = 0; it < 2; ++it) j = 0.5 * (3.0 * j + j * j * j);
  return AlmostComplex4::from_matrix(j);
}

}  // namespace

AlmostComplex4 standard_acs() {
  Mat4 j = Mat4::Zero();
  j(0, 1) = 1.0;
  j(1, 0) = -1.0;
  j(2, 3) = 1.0;
  j(3, 2) = -1.0;
  return AlmostComplex4::from_matrix(j);
}

TwoForm4 standard_symplectic_form() {
  Vec6 c = Vec6::Zero();
  c[0] = 1.0;  // e0^e1
  c[5] = 1.0;  // e2^e3
  return TwoForm4(c);
}

Metric4 random_spd_metric(Rng& rng, double spread) {
  // random orthogonal frame from a QR factorization of a gaussian matrix
  Mat4 a;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) a(r, c) = rng.gaussian();
  const Eigen::HouseholderQR<Mat4> qr(a);
  const Mat4 q = qr.householderQ();
  Vec4 eigs;
  for (int i = 0; i < 4; ++i) {
    const double t = rng.uniform(-1.0, 1.0);
    eigs[i] = t >= 0.0 ? 1.0 + spread * t : 1.0 / (1.0 - spread * t);
  }
  return Metric4::spd(q * eigs.asDiagonal() * q.transpose());
}

AlmostComplex4 compatible_acs_from_form(const Metric4& g,
                                        const TwoForm4& sigma) {
  const Mat4 a = g.matrix().ldlt().solve(sigma.matrix());
  return polar_acs(g, a);
}

GeneratedPair random_compatible_pair(Rng& rng) {
  const Metric4 g = random_spd_metric(rng);
  Vec6 c;
  for (int i = 0; i < 6; ++i) c[i] = rng.gaussian();
  // resample the rare degenerate draw
  TwoForm4 sigma(c);
  while (std::abs(sigma.pfaffian()) < 1e-6 * c.squaredNorm()) {
    for (int i = 0; i < 6; ++i) c[i] = rng.gaussian();
    sigma = TwoForm4(c);
  }
  return GeneratedPair{g, compatible_acs_from_form(g, sigma)};
}

GeneratedPair random_compatible_pair_oriented(Rng& rng, int orientation) {
  for (int tries = 0; tries < 64; ++tries) {
    GeneratedPair pair = random_compatible_pair(rng);
    if (orientation_sign(pair.J) == orientation) return pair;
  }
  throw DegenerateConfiguration(
      "random_compatible_pair_oriented: orientation never matched");
}

HermitianTriple random_triple(Rng& rng) {
  const GeneratedPair pair = random_compatible_pair(rng);
  return HermitianTriple::from_metric_acs(pair.g, pair.J);
}

// ---------------------------------------------------------------------------
// smooth fields
// ---------------------------------------------------------------------------

TrigPoly TrigPoly::random(Rng& rng, double amplitude, int max_mode,
                          int n_modes) {
  TrigPoly p;
  double weight = 0.0;
  for (int m = 0; m < n_modes; ++m) {
    Mode mode;
    bool nonzero = false;
    for (int i = 0; i < 4; ++i) {
      mode.k[i] = rng.uniform_int(-max_mode, max_mode);
      if (mode.k[i] != 0) nonzero = true;
    }
    if (!nonzero) mode.k[rng.uniform_int(0, 3)] = 1;
    mode.cos_coeff = rng.gaussian();
    mode.sin_coeff = rng.gaussian();
    weight += std::abs(mode.cos_coeff) + std::abs(mode.sin_coeff);
    p.modes_.push_back(mode);
  }
  if (weight > 0.0) {
    for (auto& mode : p.modes_) {
      mode.cos_coeff *= amplitude / weight;
      mode.sin_coeff *= amplitude / weight;
    }
  }
  return p;
}

TrigPoly TrigPoly::zero() { return TrigPoly{}; }

TrigPoly TrigPoly::constant(double value) {
  TrigPoly p;
  p.offset_ = value;
  return p;
}

double TrigPoly::operator()(const Vec4& x) const {
  double value = offset_;
  for (const auto& mode : modes_) {
    double phase = 0.0;
    for (int i = 0; i < 4; ++i) phase += mode.k[i] * x[i];
    phase *= 2.0 * std::numbers::pi;
    value += mode.cos_coeff * std::cos(phase) + mode.sin_coeff * std::sin(phase);
  }
  return value;
}

double TrigPoly::partial(const Vec4& x, int axis) const {
  double value = 0.0;
  for (const auto& mode : modes_) {
    double phase = 0.0;
    for (int i = 0; i < 4; ++i) phase += mode.k[i] * x[i];
    phase *= 2.0 * std::numbers::pi;
    const double freq = 2.0 * std::numbers::pi * mode.k[axis];
    value += freq * (-mode.cos_coeff * std::sin(phase) +
                     mode.sin_coeff * std::cos(phase));
  }
  return value;
}

TrigSymField TrigSymField::random(Rng& rng, int max_mode, int n_modes) {
  TrigSymField f;
  for (auto& entry : f.entries_) {
    entry = TrigPoly::random(rng, 1.0, max_mode, n_modes);
  }
  return f;
}

Mat4 TrigSymField::operator()(const Vec4& x) const {
  Mat4 s;
  int at = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      const double v = entries_[at++](x);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// grid builders
// ---------------------------------------------------------------------------

Grid4 flat_grid(int n) { return Grid4(n, Metric4::identity()); }

TripleField standard_flat_field(int n) {
  const Grid4 grid = flat_grid(n);
  std::vector<AlmostComplex4> j(grid.vertex_count(), standard_acs());
  return TripleField(grid, std::move(j));
}

TripleField perturbed_metric_field(int n, double epsilon, std::uint64_t seed) {
  Rng rng(seed);
  const TrigSymField s = TrigSymField::random(rng);
  const Mat4 omega0 = standard_symplectic_form().matrix();
  std::vector<Metric4> metrics;
  std::vector<AlmostComplex4> j;
  const Grid4 shape = flat_grid(n);
  metrics.reserve(shape.vertex_count());
  j.reserve(shape.vertex_count());
  for (long v = 0; v < shape.vertex_count(); ++v) {
    const Vec4 x = shape.vertex_position(v);
    const Metric4 g = Metric4::spd(Mat4::Identity() + epsilon * s(x));
    metrics.push_back(g);
    j.push_back(polar_acs(g, g.matrix().ldlt().solve(omega0)));
  }
  return TripleField(Grid4(n, std::move(metrics)), std::move(j));
}

TripleField j_invariant_deformed_field(int n, double epsilon,
                                       std::uint64_t seed,
                                       bool volume_preserving) {
  Rng rng(seed);
  const TrigSymField s = TrigSymField::random(rng);
  const AlmostComplex4 j0 = standard_acs();
  const Mat4& jm = j0.matrix();
  const Grid4 shape = flat_grid(n);
  std::vector<Metric4> metrics;
  metrics.reserve(shape.vertex_count());
  for (long v = 0; v < shape.vertex_count(); ++v) {
    const Vec4 x = shape.vertex_position(v);
    const Mat4 invariant = 0.5 * (s(x) + jm.transpose() * s(x) * jm);
    Mat4 g = Mat4::Identity() + epsilon * invariant;
    if (volume_preserving) {
      g /= std::pow(g.determinant(), 0.25);
    }
    metrics.push_back(Metric4::spd(g));
  }
  std::vector<AlmostComplex4> j(shape.vertex_count(), j0);
  return TripleField(Grid4(n, std::move(metrics)), std::move(j));
}

FormField random_smooth_scalar(int n, double amplitude, std::uint64_t seed) {
  Rng rng(seed);
  const TrigPoly p = TrigPoly::random(rng, amplitude);
  return FormField::sample(0, n,
                           [&](int, const Vec4& x) { return p(x); });
}

FormField random_smooth_one_form(int n, double amplitude, std::uint64_t seed) {
  Rng rng(seed);
  std::array<TrigPoly, 4> comp = {
      TrigPoly::random(rng, amplitude), TrigPoly::random(rng, amplitude),
      TrigPoly::random(rng, amplitude), TrigPoly::random(rng, amplitude)};
  const auto& combos = cell_combos(1);
  return FormField::sample(1, n, [&](int c, const Vec4& x) {
    return comp[combos[c][0]](x);
  });
}

FormField smooth_closed_two_form(int n, double amplitude, std::uint64_t seed) {
  Rng rng(seed);
  std::array<TrigPoly, 4> eta = {
      TrigPoly::random(rng, amplitude), TrigPoly::random(rng, amplitude),
      TrigPoly::random(rng, amplitude), TrigPoly::random(rng, amplitude)};
  const auto& combos = cell_combos(2);
  // analytic curl components d eta = (partial_a eta_b - partial_b eta_a)
  return FormField::sample(2, n, [&](int c, const Vec4& x) {
    const int a = combos[c][0];
    const int b = combos[c][1];
    return eta[b].partial(x, a) - eta[a].partial(x, b);
  });
}

}  // namespace ak4
