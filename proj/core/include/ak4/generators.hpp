#pragma once

// Deterministic generators for pointwise structures and smooth periodic
// fields on the 4-torus. Everything is a pure function of the supplied Rng
// or seed.

#include <array>
#include <cstdint>
#include <vector>

#include "ak4/hodge.hpp"
#include "ak4/pointwise.hpp"
#include "ak4/rng.hpp"

namespace ak4 {

// ---------------------------------------------------------------------------
// pointwise generators
// ---------------------------------------------------------------------------

// the flat structure with omega = e0^e1 + e2^e3 at g = I
AlmostComplex4 standard_acs();
TwoForm4 standard_symplectic_form();

// well-conditioned random SPD matrix, eigenvalues within [1/(1+spread), 1+spread]
Metric4 random_spd_metric(Rng& rng, double spread = 0.5);

// Compatible structure from a nondegenerate 2-form by polar normalization of
// g^{-1} sigma. Throws IncompatiblePair when sigma is degenerate for g.
AlmostComplex4 compatible_acs_from_form(const Metric4& g, const TwoForm4& sigma);

struct GeneratedPair {
  Metric4 g;
  AlmostComplex4 J;
};

GeneratedPair random_compatible_pair(Rng& rng);
// resamples until the induced orientation matches
GeneratedPair random_compatible_pair_oriented(Rng& rng, int orientation);
HermitianTriple random_triple(Rng& rng);

// ---------------------------------------------------------------------------
// smooth periodic scalar fields
// ---------------------------------------------------------------------------

// Low-frequency trigonometric polynomial on the unit torus; smooth, exactly
// periodic, with |f| <= amplitude.
class TrigPoly {
 public:
  static TrigPoly random(Rng& rng, double amplitude, int max_mode = 2,
                         int n_modes = 6);
  static TrigPoly zero();
  static TrigPoly constant(double value);

  double operator()(const Vec4& x) const;
  double partial(const Vec4& x, int axis) const;

 private:
  struct Mode {
    std::array<int, 4> k;
    double cos_coeff;
    double sin_coeff;
  };
  std::vector<Mode> modes_;
  double offset_ = 0.0;
};

// symmetric-matrix field with smooth entries bounded by 1
class TrigSymField {
 public:
  static TrigSymField random(Rng& rng, int max_mode = 2, int n_modes = 4);
  Mat4 operator()(const Vec4& x) const;

 private:
  std::array<TrigPoly, 10> entries_;  // upper triangle, row by row
};

// ---------------------------------------------------------------------------
// grid-level builders
// ---------------------------------------------------------------------------

Grid4 flat_grid(int n);

// constant flat metric with the standard symplectic structure
TripleField standard_flat_field(int n);

// g(x) = I + epsilon S(x) with S smooth symmetric, J(x) aligned to the
// standard form through polar normalization; valid for epsilon < ~0.2
TripleField perturbed_metric_field(int n, double epsilon, std::uint64_t seed);

// fixed standard J, smooth J-invariant metric deformation of the flat
// metric; with volume_preserving the determinant is normalized to 1 so the
// volume form matches the flat one exactly
TripleField j_invariant_deformed_field(int n, double epsilon,
                                       std::uint64_t seed,
                                       bool volume_preserving);

// cochain samples of random smooth forms
FormField random_smooth_scalar(int n, double amplitude, std::uint64_t seed);
FormField random_smooth_one_form(int n, double amplitude, std::uint64_t seed);

// sample of the exterior derivative of a smooth 1-form (analytic curl at
// face midpoints); smooth, closed in the continuum
FormField smooth_closed_two_form(int n, double amplitude, std::uint64_t seed);

}  // namespace ak4
