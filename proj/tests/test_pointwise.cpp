#include "doctest.h"

#include <cmath>
#include <complex>

#include "ak4/generators.hpp"
#include "ak4/pointwise.hpp"
#include "ak4/rng.hpp"

using namespace ak4;

namespace {

// Dense tensor-formula oracle for the star on 2-forms:
// (*a)_{mn} = orient * sqrt(det g) / 2 * eps_{mnrs} a^{rs},
// with indices raised by g^{-1}. Independent of the production route.
int eps4(int i, int j, int k, int l) {
  const int p[4] = {i, j, k, l};
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      if (p[a] == p[b]) return 0;
  int sign = 1;
  int q[4] = {i, j, k, l};
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      if (q[a] > q[b]) {
        std::swap(q[a], q[b]);
        sign = -sign;
      }
  return sign;
}

Mat6 star2_oracle(const Mat4& g, int orient) {
  const Mat4 gi = g.inverse();
  const double dens = std::sqrt(g.determinant());
  Mat6 out = Mat6::Zero();
  for (int col = 0; col < 6; ++col) {
    const auto [a, b] = kFormPairs[col];
    Mat4 low = Mat4::Zero();
    low(a, b) = 1.0;
    low(b, a) = -1.0;
    Mat4 raised = Mat4::Zero();
    for (int r = 0; r < 4; ++r)
      for (int s = 0; s < 4; ++s)
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j)
            raised(r, s) += gi(r, i) * gi(s, j) * low(i, j);
    for (int row = 0; row < 6; ++row) {
      const auto [m, nn] = kFormPairs[row];
      double acc = 0.0;
      for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s) acc += eps4(m, nn, r, s) * raised(r, s);
      out(row, col) = orient * 0.5 * dens * acc;
    }
  }
  return out;
}

AlmostComplex4 block_acs() {
  // J e0 = e1, J e2 = e3
  Mat4 j = Mat4::Zero();
  j(1, 0) = 1.0;
  j(0, 1) = -1.0;
  j(3, 2) = 1.0;
  j(2, 3) = -1.0;
  return AlmostComplex4::from_matrix(j);
}

}  // namespace

TEST_CASE("reconstruct_omega on the block structure") {
  const Metric4 g = Metric4::identity();
  const TwoForm4 omega = reconstruct_omega(g, block_acs());
  // hand evaluation of g(e_i, J e_j) on the six basis pairs
  Vec6 expect;
  expect << -1, 0, 0, 0, 0, -1;
  CHECK(rel_error(omega.components(), expect) < 1e-15);
  // omega ^ omega = 2 vol
  CHECK(omega.pfaffian() == doctest::Approx(1.0));
  CHECK(omega.rank() == 4);
}

TEST_CASE("reconstruct_omega linearity") {
  const Metric4 g = Metric4::identity();
  const AlmostComplex4 j = standard_acs();
  const TwoForm4 omega = reconstruct_omega(g, j);
  const TwoForm4 neg = reconstruct_omega(g, j.negated());
  CHECK(rel_error(neg.components(), Vec6(-omega.components())) < 1e-15);

  const Metric4 g3 = Metric4::spd(3.0 * Mat4::Identity());
  const TwoForm4 scaled = reconstruct_omega(g3, j);
  CHECK(rel_error(scaled.components(), Vec6(3.0 * omega.components())) < 1e-15);
}

TEST_CASE("reconstruct_omega rejects incompatible pairs") {
  Mat4 g = Mat4::Identity();
  g(0, 0) = 2.0;  // breaks J^T g J = g for the standard structure
  CHECK_THROWS_AS(reconstruct_omega(Metric4::spd(g), standard_acs()),
                  IncompatiblePair);
}

TEST_CASE("reconstruct_J round trips") {
  const Metric4 g = Metric4::identity();
  const AlmostComplex4 j = standard_acs();
  const TwoForm4 omega = reconstruct_omega(g, j);
  const AlmostComplex4 back = reconstruct_J(g, omega);
  CHECK(rel_error(back.matrix(), j.matrix()) < 1e-14);
  const AlmostComplex4 neg = reconstruct_J(g, -omega);
  CHECK(rel_error(neg.matrix(), Mat4(-j.matrix())) < 1e-14);
}

TEST_CASE("reconstruct_J rejects incompatible forms") {
  Vec6 c = Vec6::Zero();
  c[0] = 1.0;  // e0^e1 alone: (g^{-1} w)^2 != -I
  CHECK_THROWS_AS(reconstruct_J(Metric4::identity(), TwoForm4(c)),
                  IncompatiblePair);
}

TEST_CASE("reconstruct_g round trips, signs and scaling") {
  Rng rng(31);
  const auto [g, j] = random_compatible_pair(rng);
  const TwoForm4 omega = reconstruct_omega(g, j);

  const Metric4 back = reconstruct_g(j, omega);
  CHECK(rel_error(back.matrix(), g.matrix()) < 1e-12);

  CHECK_THROWS_AS(reconstruct_g(j.negated(), omega), NotPositive);

  const Metric4 doubled = reconstruct_g(j, omega.scaled(2.0));
  CHECK(rel_error(doubled.matrix(), Mat4(2.0 * g.matrix())) < 1e-12);
}

TEST_CASE("reconstruct_g rejects forms that are not (1,1)") {
  Vec6 c = Vec6::Zero();
  c[1] = 1.0;  // e0^e2 is not (1,1) for the standard structure
  CHECK_THROWS_AS(reconstruct_g(standard_acs(), TwoForm4(c)), NotSymmetric);
}

TEST_CASE("generated pairs round trip through all three reconstructions") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto [g, j] = random_compatible_pair(rng);
    const TwoForm4 omega = reconstruct_omega(g, j);
    CHECK(rel_error(reconstruct_J(g, omega).matrix(), j.matrix()) < 1e-12);
    CHECK(rel_error(reconstruct_g(j, omega).matrix(), g.matrix()) < 1e-12);
  }
}

TEST_CASE("hodge_star_2 euclidean values") {
  const Mat6 star = hodge_star_2(Metric4::identity(), +1);
  Vec6 e01 = Vec6::Zero();
  e01[0] = 1.0;
  Vec6 e23 = Vec6::Zero();
  e23[5] = 1.0;
  CHECK(rel_error(Vec6(star * e01), e23) < 1e-15);
  CHECK(rel_error(Vec6(star * e23), e01) < 1e-15);
}

TEST_CASE("hodge_star_2 is an involution for random metrics") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Metric4 g = random_spd_metric(rng);
    const Mat6 star = hodge_star_2(g, trial % 2 == 0 ? +1 : -1);
    CHECK(rel_error(Mat6(star * star), Mat6(Mat6::Identity())) < 1e-12);
  }
}

TEST_CASE("hodge_star_2 matches the tensor-formula oracle") {
  const Metric4 g = Metric4::spd(Vec4(1, 1, 1, 4).asDiagonal());
  CHECK(rel_error(hodge_star_2(g, +1), star2_oracle(g.matrix(), +1)) < 1e-14);

  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Metric4 gr = random_spd_metric(rng);
    const int orient = trial % 2 == 0 ? +1 : -1;
    CHECK(rel_error(hodge_star_2(gr, orient),
                    star2_oracle(gr.matrix(), orient)) < 1e-12);
  }
}

TEST_CASE("hodge_star_2 eigenspaces are 3+3 and g-orthogonal") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Metric4 g = random_spd_metric(rng);
    const Mat6 star = hodge_star_2(g, +1);
    const Mat6 gram = metric_gram_2(g);
    // star is self-adjoint in the gram inner product: solve the symmetric
    // pencil (gram * star) v = lambda gram v
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat6> es(
        Mat6(0.5 * (gram * star + (gram * star).transpose())), gram);
    int plus = 0, minus = 0;
    for (int i = 0; i < 6; ++i) {
      const double ev = es.eigenvalues()[i];
      CHECK(std::abs(std::abs(ev) - 1.0) < 1e-10);
      (ev > 0 ? plus : minus)++;
    }
    CHECK(plus == 3);
    CHECK(minus == 3);
    // eigenvectors of a symmetric-definite pencil are gram-orthogonal
    const Mat6 v = es.eigenvectors();
    CHECK(rel_error(Mat6(v.transpose() * gram * v), Mat6(Mat6::Identity())) <
          1e-10);
  }
}

TEST_CASE("sd_asd_split basics") {
  const Metric4 g = Metric4::identity();
  Vec6 c = Vec6::Zero();
  c[0] = 1.0;  // e0^e1
  const auto [sd, asd] = sd_asd_split(TwoForm4(c), g, +1);
  Vec6 expect_sd = Vec6::Zero();
  expect_sd[0] = 0.5;
  expect_sd[5] = 0.5;
  Vec6 expect_asd = Vec6::Zero();
  expect_asd[0] = 0.5;
  expect_asd[5] = -0.5;
  CHECK(rel_error(sd.components(), expect_sd) < 1e-15);
  CHECK(rel_error(asd.components(), expect_asd) < 1e-15);

  // a self-dual form splits as (omega, 0)
  const TwoForm4 omega = standard_symplectic_form();
  const auto [sd2, asd2] = sd_asd_split(omega, g, +1);
  CHECK(rel_error(sd2.components(), omega.components()) < 1e-15);
  CHECK(asd2.components().norm() < 1e-15);
}

TEST_CASE("sd_asd_split satisfies pythagoras in the metric inner product") {
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const Metric4 g = random_spd_metric(rng);
    Vec6 c;
    for (int i = 0; i < 6; ++i) c[i] = rng.gaussian();
    const TwoForm4 omega(c);
    const auto [sd, asd] = sd_asd_split(omega, g, +1);
    const Mat6 gram = metric_gram_2(g);
    const auto sq = [&](const TwoForm4& f) {
      return f.components().dot(gram * f.components());
    };
    CHECK(sq(omega) == doctest::Approx(sq(sd) + sq(asd)).epsilon(1e-10));
    // the two parts are orthogonal
    CHECK(std::abs(sd.components().dot(gram * asd.components())) <
          1e-10 * std::max(1.0, sq(omega)));
    // recomposition
    CHECK(rel_error(Vec6(sd.components() + asd.components()), c) < 1e-12);
  }
}

TEST_CASE("classify_cone") {
  CHECK(classify_cone({1, 0, 1}) == ConeClass::Positive);
  CHECK(classify_cone({-1, 0, -1}) == ConeClass::Negative);
  CHECK(classify_cone({1, 1, 1}) == ConeClass::Degenerate);
  CHECK(classify_cone({1, 3, 1}) == ConeClass::Indefinite);
  CHECK(classify_cone({0, 0, 0}) == ConeClass::Degenerate);

  // the four classes partition parameter space
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const ConePoint p{rng.symmetric(2.0), rng.symmetric(2.0),
                      rng.symmetric(2.0)};
    const double disc = p.a * p.c - p.b * p.b;
    const ConeClass cls = classify_cone(p);
    if (disc < 0.0) CHECK(cls == ConeClass::Indefinite);
    if (disc == 0.0) CHECK(cls == ConeClass::Degenerate);
    if (disc > 0.0) {
      CHECK((cls == ConeClass::Positive || cls == ConeClass::Negative));
      CHECK(cls == (p.a + p.c > 0 ? ConeClass::Positive : ConeClass::Negative));
    }
  }
}

TEST_CASE("lobachevsky_normalize") {
  const ConePoint a = lobachevsky_normalize({4, 0, 1});
  CHECK(a.a == doctest::Approx(2.0));
  CHECK(a.b == doctest::Approx(0.0));
  CHECK(a.c == doctest::Approx(0.5));

  const ConePoint unit = lobachevsky_normalize({1, 0, 1});
  CHECK(unit.a == doctest::Approx(1.0));
  CHECK(unit.c == doctest::Approx(1.0));

  // ac - b^2 = 1 already
  const ConePoint fixed = lobachevsky_normalize({2, 1, 1});
  CHECK(fixed.a == doctest::Approx(2.0));
  CHECK(fixed.b == doctest::Approx(1.0));
  CHECK(fixed.c == doctest::Approx(1.0));

  CHECK_THROWS_AS(lobachevsky_normalize({1, 1, 1}), NotInCone);
  CHECK_THROWS_AS(lobachevsky_normalize({-1, 0, -1}), NotInCone);
  CHECK_THROWS_AS(lobachevsky_normalize({1, 3, 1}), NotInCone);

  // idempotent and scale covariant
  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    ConePoint p{rng.uniform(0.2, 3.0), 0.0, rng.uniform(0.2, 3.0)};
    p.b = rng.symmetric(0.9 * std::sqrt(p.a * p.c));
    const ConePoint n1 = lobachevsky_normalize(p);
    const ConePoint n2 = lobachevsky_normalize(n1);
    CHECK(n1.a * n1.c - n1.b * n1.b == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(n1.a - n2.a) + std::abs(n1.b - n2.b) +
              std::abs(n1.c - n2.c) <
          1e-10);
    const double lambda = rng.uniform(0.1, 10.0);
    const ConePoint ns =
        lobachevsky_normalize({lambda * p.a, lambda * p.b, lambda * p.c});
    CHECK(std::abs(ns.a - n1.a) + std::abs(ns.b - n1.b) +
              std::abs(ns.c - n1.c) <
          1e-9);
  }
}

TEST_CASE("cone_coordinates reads the identity as (1,0,1)") {
  const ConePoint p = cone_coordinates(Mat4::Identity(), standard_acs());
  CHECK(p.a == doctest::Approx(1.0));
  CHECK(p.b == doctest::Approx(0.0));
  CHECK(p.c == doctest::Approx(1.0));

  const ConePoint p3 = cone_coordinates(3.0 * Mat4::Identity(), standard_acs());
  CHECK(p3.a == doctest::Approx(3.0));
  CHECK(p3.c == doctest::Approx(3.0));
}

TEST_CASE("cone_coordinates round trips forms built in the block frame") {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [g, j] = random_compatible_pair(rng);
    // the frame used by the read-off: adapted to the inner product that
    // makes J orthogonal, columns reordered to (w0, w1, Jw0, Jw1)
    const Mat4 h =
        0.5 * (Mat4::Identity() + j.matrix().transpose() * j.matrix());
    const Mat4 adapted = adapted_frame(Metric4::spd(h), j);
    Mat4 frame;
    frame.col(0) = adapted.col(0);
    frame.col(1) = adapted.col(2);
    frame.col(2) = adapted.col(1);
    frame.col(3) = adapted.col(3);

    const double a = rng.symmetric(2.0);
    const double b = rng.symmetric(2.0);
    const double c = rng.symmetric(2.0);
    Mat4 block = Mat4::Zero();
    block(0, 0) = block(2, 2) = a;
    block(0, 1) = block(1, 0) = block(2, 3) = block(3, 2) = b;
    block(1, 1) = block(3, 3) = c;

    const Mat4 inv_frame = frame.inverse();
    const Mat4 s = inv_frame.transpose() * block * inv_frame;
    // s is J-invariant by construction and reads back as (a, b, c)
    CHECK(rel_error(j.matrix().transpose() * s * j.matrix(), s) < 1e-9);
    const ConePoint p = cone_coordinates(s, j);
    CHECK(p.a == doctest::Approx(a).epsilon(1e-8));
    CHECK(p.b == doctest::Approx(b).epsilon(1e-8));
    CHECK(p.c == doctest::Approx(c).epsilon(1e-8));

    // classification agrees with the definiteness of the block
    Eigen::SelfAdjointEigenSolver<Mat4> es(s);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo > 1e-9) CHECK(classify_cone(p) == ConeClass::Positive);
    if (hi < -1e-9) CHECK(classify_cone(p) == ConeClass::Negative);
    if (lo < -1e-9 && hi > 1e-9)
      CHECK(classify_cone(p) == ConeClass::Indefinite);
  }
}

TEST_CASE("clifford_action is diagonal with eigenvalues -2i and +2i") {
  Rng rng(41);
  const HermitianTriple triple = random_triple(rng);
  const Cplx i2{0.0, 2.0};

  const SpinorFiber a = clifford_action(triple, {1.0, 0.0});
  CHECK(a.alpha == -i2);
  CHECK(a.beta == Cplx{0.0, 0.0});

  const Cplx beta{0.3, -0.7};
  const SpinorFiber b = clifford_action(triple, {0.0, beta});
  CHECK(b.alpha == Cplx{0.0, 0.0});
  CHECK(std::abs(b.beta - i2 * beta) < 1e-15);

  const SpinorFiber z = clifford_action(triple, {0.0, 0.0});
  CHECK(z.alpha == Cplx{0.0, 0.0});
  CHECK(z.beta == Cplx{0.0, 0.0});

  // acting twice multiplies by -4 on both summands
  const SpinorFiber s{Cplx{0.2, 0.4}, Cplx{-1.0, 0.5}};
  const SpinorFiber twice = clifford_action(triple, clifford_action(triple, s));
  CHECK(std::abs(twice.alpha + 4.0 * s.alpha) < 1e-15);
  CHECK(std::abs(twice.beta + 4.0 * s.beta) < 1e-15);
}

TEST_CASE("sw_quadratic reproduces -omega for the unit function section") {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const HermitianTriple triple = random_triple(rng);
    const TwoForm4 q = sw_quadratic({1.0, 0.0}, triple);
    CHECK(rel_error(q.components(), Vec6(-triple.omega.components())) < 1e-12);

    const TwoForm4 zero = sw_quadratic({0.0, 0.0}, triple);
    CHECK(zero.components().norm() < 1e-15);
  }
}

TEST_CASE("sw_quadratic output is self-dual with omega coefficient |b|^2-|a|^2") {
  Rng rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    const HermitianTriple triple = random_triple(rng);
    const Cplx alpha{rng.gaussian(), rng.gaussian()};
    const Cplx beta{rng.gaussian(), rng.gaussian()};
    const TwoForm4 q = sw_quadratic({alpha, beta}, triple);

    // self-dual in the orientation of the triple
    const int orient = orientation_sign(triple.J);
    const auto [sd, asd] = sd_asd_split(q, triple.g, orient);
    CHECK(asd.components().norm() <=
          1e-9 * std::max(1.0, q.components().norm()));

    // the omega coefficient is |beta|^2 - |alpha|^2
    const Mat6 gram = metric_gram_2(triple.g);
    const Vec6 w = triple.omega.components();
    const double coeff = q.components().dot(gram * w) / w.dot(gram * w);
    CHECK(coeff ==
          doctest::Approx(std::norm(beta) - std::norm(alpha)).epsilon(1e-8));
  }
  // unit alpha against unit beta: trace against omega vanishes
  const HermitianTriple triple = random_triple(rng);
  const TwoForm4 q = sw_quadratic({1.0, Cplx{0.6, 0.8}}, triple);
  const Mat6 gram = metric_gram_2(triple.g);
  const Vec6 w = triple.omega.components();
  CHECK(std::abs(q.components().dot(gram * w)) < 1e-10);
}

TEST_CASE("check_spinc_constraints") {
  CHECK(check_spinc_constraints(0, 0, 0));
  CHECK(check_spinc_constraints(3, 1, 9));
  CHECK_FALSE(check_spinc_constraints(0, 0, 1));
}

TEST_CASE("triple validity, conjugation, and the three listed properties") {
  Rng rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const HermitianTriple triple = random_triple(rng);
    CHECK(triple.valid());

    // conjugation is an involution on valid triples
    const HermitianTriple conj = triple.conjugated();
    CHECK(conj.valid());
    const HermitianTriple twice = conj.conjugated();
    CHECK(rel_error(twice.J.matrix(), triple.J.matrix()) < 1e-15);
    CHECK(rel_error(twice.omega.components(), triple.omega.components()) <
          1e-15);

    // self-dual, type (1,1), nondegenerate
    const int orient = orientation_sign(triple.J);
    const auto [sd, asd] = sd_asd_split(triple.omega, triple.g, orient);
    CHECK(asd.components().norm() <=
          kTolAlg * triple.omega.components().norm());
    const Mat4 wm = triple.omega.matrix();
    const Mat4& jm = triple.J.matrix();
    CHECK(rel_error(jm.transpose() * wm * jm, wm) < kTolAlg);
    CHECK(std::abs(triple.omega.pfaffian()) > 1e-6);
  }
}

TEST_CASE("orientation_sign is metric-free and stable under negation") {
  CHECK(orientation_sign(standard_acs()) == 1);
  CHECK(orientation_sign(standard_acs().negated()) == 1);
  CHECK(orientation_sign(block_acs()) == 1);

  // conjugating by a reflection flips the orientation
  Mat4 r = Mat4::Identity();
  r(3, 3) = -1.0;
  const Mat4 flipped = r * standard_acs().matrix() * r;
  CHECK(orientation_sign(AlmostComplex4::from_matrix(flipped)) == -1);

  Rng rng(59);
  for (int trial = 0; trial < 50; ++trial) {
    const auto [g, j] = random_compatible_pair(rng);
    CHECK(orientation_sign(j) == orientation_sign(j.negated()));
  }
}

TEST_CASE("adapted_frame is g-orthonormal and puts omega in normal form") {
  Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const HermitianTriple triple = random_triple(rng);
    const Mat4 frame = adapted_frame(triple.g, triple.J);
    CHECK(rel_error(Mat4(frame.transpose() * triple.g.matrix() * frame),
                    Mat4(Mat4::Identity())) < 1e-10);
    // columns come in J-pairs
    Mat4 paired;
    paired.col(0) = frame.col(1);
    paired.col(1) = -frame.col(0);
    paired.col(2) = frame.col(3);
    paired.col(3) = -frame.col(2);
    CHECK(rel_error(Mat4(triple.J.matrix() * frame), paired) < 1e-10);
    // omega pulled back to the frame is -(f1^f2 + f3^f4)
    const Mat4 pulled = frame.transpose() * triple.omega.matrix() * frame;
    Mat4 expect = Mat4::Zero();
    expect(0, 1) = -1.0;
    expect(1, 0) = 1.0;
    expect(2, 3) = -1.0;
    expect(3, 2) = 1.0;
    CHECK(rel_error(pulled, expect) < 1e-9);
  }
}

TEST_CASE("two-form rank classification") {
  CHECK(TwoForm4(Vec6::Zero()).rank() == 0);
  Vec6 c = Vec6::Zero();
  c[0] = 1.0;
  CHECK(TwoForm4(c).rank() == 2);
  CHECK(standard_symplectic_form().rank() == 4);
}
