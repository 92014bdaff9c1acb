#include "doctest.h"

#include <cmath>
#include <complex>

#include "ak4/generators.hpp"
#include "ak4/projgeom.hpp"
#include "ak4/rng.hpp"

using namespace ak4;

namespace {

CVec unit6(int k) {
  CVec v = CVec::Zero(6);
  v[k] = 1.0;
  return v;
}

CVec unit4(int k) {
  CVec v = CVec::Zero(4);
  v[k] = 1.0;
  return v;
}

ProjSubspace coordinate_line(int i, int j) {
  CMat cols(4, 2);
  cols.col(0) = unit4(i);
  cols.col(1) = unit4(j);
  return ProjSubspace::from_columns(cols);
}

CVec random_cvec(Rng& rng, int size) {
  CVec v(size);
  for (int i = 0; i < size; ++i) v[i] = Cplx(rng.gaussian(), rng.gaussian());
  return v;
}

ProjSubspace random_line(Rng& rng, int ambient_dim) {
  CMat cols(ambient_dim + 1, 2);
  cols.col(0) = random_cvec(rng, ambient_dim + 1);
  cols.col(1) = random_cvec(rng, ambient_dim + 1);
  return ProjSubspace::from_columns(cols);
}

// theta-invariant line: span of z and theta(z)
ProjSubspace invariant_line(Rng& rng, const RealStructure& theta, int dim) {
  const CVec z = random_cvec(rng, dim + 1);
  CMat cols(dim + 1, 2);
  cols.col(0) = z;
  cols.col(1) = theta.apply_vec(z);
  return ProjSubspace::from_columns(cols);
}

// test-side oracle for common_metric: nullity of the stacked invariance
// constraints on symmetric matrices
int invariance_nullity(const AlmostComplex4& ja, const AlmostComplex4& jb) {
  Eigen::MatrixXd rows(32, 10);
  int basis_at = 0;
  std::array<Mat4, 10> basis;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      Mat4 e = Mat4::Zero();
      e(i, j) = e(j, i) = 1.0;
      basis[basis_at++] = e;
    }
  for (int k = 0; k < 10; ++k) {
    const Mat4 ca =
        ja.matrix().transpose() * basis[k] * ja.matrix() - basis[k];
    const Mat4 cb =
        jb.matrix().transpose() * basis[k] * jb.matrix() - basis[k];
    rows.block<16, 1>(0, k) = Eigen::Map<const Eigen::VectorXd>(ca.data(), 16);
    rows.block<16, 1>(16, k) = Eigen::Map<const Eigen::VectorXd>(cb.data(), 16);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-9 * std::max(1.0, sv(0))) ++rank;
  return 10 - rank;
}

}  // namespace

TEST_CASE("projective points normalize and compare up to scale") {
  Rng rng(3);
  const CVec v = random_cvec(rng, 6);
  const ProjPoint p(v);
  const ProjPoint q(Cplx(0.3, -1.7) * v);
  CHECK(p.same_as(q));
  CHECK(p.coords().norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(ProjPoint(CVec::Zero(4)), BadDimension);

  const ProjPoint r(random_cvec(rng, 6));
  CHECK_FALSE(p.same_as(r));
}

TEST_CASE("pluecker_embed on coordinate lines") {
  const KleinPoint k01 = pluecker_embed(coordinate_line(0, 1));
  CHECK(k01.point().same_as(ProjPoint(unit6(0))));
  const KleinPoint k23 = pluecker_embed(coordinate_line(2, 3));
  CHECK(k23.point().same_as(ProjPoint(unit6(5))));
}

TEST_CASE("pluecker_embed is independent of the basis of the line") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const ProjSubspace line = random_line(rng, 3);
    const KleinPoint k = pluecker_embed(line);
    // random GL(2) change of basis
    CMat mixed(4, 2);
    const Cplx a(rng.gaussian(), rng.gaussian());
    const Cplx b(rng.gaussian(), rng.gaussian());
    const Cplx c(rng.gaussian(), rng.gaussian());
    const Cplx dd(rng.gaussian(), rng.gaussian());
    mixed.col(0) = a * line.basis().col(0) + b * line.basis().col(1);
    mixed.col(1) = c * line.basis().col(0) + dd * line.basis().col(1);
    if (std::abs(a * dd - b * c) < 1e-3) continue;
    const KleinPoint k2 = pluecker_embed(ProjSubspace::from_columns(mixed));
    CHECK(k.point().same_as(k2.point(), 1e-8));
    // Pluecker relation to machine precision
    CHECK(std::abs(klein_form(k.coords())) < 1e-13);
  }
  CHECK_THROWS_AS(pluecker_embed(ProjSubspace::from_columns(CMat(unit4(0)))),
                  BadDimension);
}

TEST_CASE("pluecker_extract inverts the embedding") {
  const ProjSubspace line = pluecker_extract(KleinPoint(ProjPoint(unit6(0))));
  CHECK(line.same_as(coordinate_line(0, 1)));

  Rng rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    const ProjSubspace l = random_line(rng, 3);
    const ProjSubspace back = pluecker_extract(pluecker_embed(l));
    CHECK(back.same_as(l, 1e-8));
  }

  // embed-after-extract is the identity on Klein points
  for (int trial = 0; trial < 100; ++trial) {
    const KleinPoint k = pluecker_embed(random_line(rng, 3));
    const KleinPoint back = pluecker_embed(pluecker_extract(k));
    CHECK(back.point().same_as(k.point(), 1e-8));
  }
}

TEST_CASE("points off the Klein quadric are rejected") {
  CVec bad = unit6(0) + unit6(5);  // q = 1
  CHECK_THROWS_AS(KleinPoint(ProjPoint(bad)), NotOnGrassmannian);
}

TEST_CASE("span of points and subspaces") {
  const ProjPoint p0(unit4(0));
  const ProjPoint p1(unit4(1));
  const ProjSubspace line = span(std::vector<ProjPoint>{p0, p1});
  CHECK(line.proj_dim() == 1);
  CHECK(line.same_as(coordinate_line(0, 1)));

  // a point already on a line does not enlarge the span
  const ProjSubspace same =
      span({ProjObject(p0), ProjObject(coordinate_line(0, 1))});
  CHECK(same.same_as(line));

  // four generic points of CP^5 span a 3-space
  Rng rng(15);
  std::vector<ProjPoint> pts;
  for (int i = 0; i < 4; ++i) pts.emplace_back(random_cvec(rng, 6));
  CHECK(span(pts).proj_dim() == 3);
}

TEST_CASE("intersect covers the incidence cases") {
  const auto point = intersect(coordinate_line(0, 1), coordinate_line(1, 2));
  REQUIRE(point.has_value());
  CHECK(point->proj_dim() == 0);
  CHECK(point->contains(ProjPoint(unit4(1))));

  CHECK_FALSE(
      intersect(coordinate_line(0, 1), coordinate_line(2, 3)).has_value());

  // two distinct planes inside a common CP^3 of CP^5 meet in a line
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    CMat amb(6, 4);
    for (int c = 0; c < 4; ++c) amb.col(c) = random_cvec(rng, 6);
    const ProjSubspace three = ProjSubspace::from_columns(amb);
    CMat pa(6, 3), pb(6, 3);
    for (int c = 0; c < 3; ++c) {
      pa.col(c) = three.basis() * random_cvec(rng, 4);
      pb.col(c) = three.basis() * random_cvec(rng, 4);
    }
    const auto meet = intersect(ProjSubspace::from_columns(pa),
                                ProjSubspace::from_columns(pb));
    REQUIRE(meet.has_value());
    CHECK(meet->proj_dim() == 1);
  }

  // two lines inside a common plane meet in a point
  for (int trial = 0; trial < 50; ++trial) {
    CMat amb(6, 3);
    for (int c = 0; c < 3; ++c) amb.col(c) = random_cvec(rng, 6);
    const ProjSubspace plane = ProjSubspace::from_columns(amb);
    CMat la(6, 2), lb(6, 2);
    for (int c = 0; c < 2; ++c) {
      la.col(c) = plane.basis() * random_cvec(rng, 3);
      lb.col(c) = plane.basis() * random_cvec(rng, 3);
    }
    const auto meet = intersect(ProjSubspace::from_columns(la),
                                ProjSubspace::from_columns(lb));
    REQUIRE(meet.has_value());
    CHECK(meet->proj_dim() == 0);
  }
}

TEST_CASE("real structures square to the identity on points") {
  Rng rng(27);
  const RealStructure std3 = RealStructure::standard(3);
  const RealStructure q3 = RealStructure::quaternionic(3);
  CHECK(std3.is_standard());
  CHECK(q3.is_quaternionic());
  for (int trial = 0; trial < 100; ++trial) {
    const ProjPoint p(random_cvec(rng, 4));
    CHECK(std3.apply(std3.apply(p)).same_as(p));
    CHECK(q3.apply(q3.apply(p)).same_as(p));
  }
  // a non-unitary involution is still recognized as standard
  Mat4 m = Mat4::Identity();
  m(0, 1) = 1.0;
  m(1, 1) = -1.0;
  const RealStructure skew = RealStructure::from_matrix(m.cast<Cplx>());
  CHECK(skew.is_standard());

  CHECK_THROWS_AS(RealStructure::quaternionic(2), BadDimension);
}

TEST_CASE("real_points_on_real_line on coordinate and derived lines") {
  const RealStructure theta = RealStructure::standard(3);

  const auto [a, b] = real_points_on_real_line(coordinate_line(0, 1), theta);
  CHECK(theta.fixes(a));
  CHECK(theta.fixes(b));
  CHECK_FALSE(a.same_as(b));
  CHECK((a.same_as(ProjPoint(unit4(0))) || a.same_as(ProjPoint(unit4(1)))));
  CHECK((b.same_as(ProjPoint(unit4(0))) || b.same_as(ProjPoint(unit4(1)))));

  // the line spanned by e0 + i e1 and e0 - i e1 carries e0 and e1
  const Cplx im(0.0, 1.0);
  CMat cols(4, 2);
  cols.col(0) = unit4(0) + im * unit4(1);
  cols.col(1) = unit4(0) - im * unit4(1);
  const ProjSubspace derived = ProjSubspace::from_columns(cols);
  const auto [r0, r1] = real_points_on_real_line(derived, theta);
  CHECK(theta.fixes(r0));
  CHECK(theta.fixes(r1));
  CHECK_FALSE(r0.same_as(r1));
  CHECK(derived.contains(r0));
  CHECK(derived.contains(r1));
  const bool hits_e0 =
      r0.same_as(ProjPoint(unit4(0))) || r1.same_as(ProjPoint(unit4(0)));
  const bool hits_e1 =
      r0.same_as(ProjPoint(unit4(1))) || r1.same_as(ProjPoint(unit4(1)));
  CHECK(hits_e0);
  CHECK(hits_e1);
}

TEST_CASE("real_points_on_real_line rejections") {
  const RealStructure q3 = RealStructure::quaternionic(3);
  Rng rng(33);
  const ProjSubspace inv = invariant_line(rng, q3, 3);
  CHECK(q3.preserves(inv));
  CHECK_THROWS_AS(real_points_on_real_line(inv, q3), QuaternionicStructure);

  const RealStructure std3 = RealStructure::standard(3);
  // a generic line is not invariant
  CHECK_THROWS_AS(real_points_on_real_line(random_line(rng, 3), std3),
                  NotRealLine);
}

TEST_CASE("fixed points exist for standard structures, never for quaternionic") {
  Rng rng(39);
  const RealStructure std3 = RealStructure::standard(3);
  const RealStructure q3 = RealStructure::quaternionic(3);
  for (int trial = 0; trial < 200; ++trial) {
    const ProjSubspace ls = invariant_line(rng, std3, 3);
    const auto [p, q] = real_points_on_real_line(ls, std3);
    CHECK(std3.fixes(p));
    CHECK(std3.fixes(q));
    CHECK_FALSE(p.same_as(q));

    // displacement scan: tiny for standard, bounded away for quaternionic
    const ProjSubspace lq = invariant_line(rng, q3, 3);
    CHECK(fixed_point_residual_scan(ls, std3, 1024) < 0.2);
    CHECK(fixed_point_residual_scan(lq, q3, 1024) > 1.0);
  }
}

TEST_CASE("acs_to_ruling_line puts the eigenline on the metric quadric") {
  const Metric4 g = Metric4::identity();
  const AlmostComplex4 j = standard_acs();
  const auto [line, quadric] = acs_to_ruling_line(j, g);

  const Cplx im(0.0, 1.0);
  const CVec v0 = unit4(0) + im * (j.matrix() * Vec4::Unit(0)).cast<Cplx>();
  const CVec v2 = unit4(2) + im * (j.matrix() * Vec4::Unit(2)).cast<Cplx>();
  CHECK(line.contains(v0));
  CHECK(line.contains(v2));
  CHECK(quadric.isotropy_residual(line.basis()) < 1e-12);

  // the conjugate line is the eigenline of -J and is also isotropic
  const auto [line_neg, quadric_neg] = acs_to_ruling_line(j.negated(), g);
  CHECK(line_neg.same_as(line.conjugated()));
  CHECK(quadric.isotropy_residual(line_neg.basis()) < 1e-12);

  // the two never intersect
  CHECK_FALSE(intersect(line, line_neg).has_value());

  Mat4 bad = Mat4::Identity();
  bad(0, 0) = 2.0;
  CHECK_THROWS_AS(acs_to_ruling_line(j, Metric4::spd(bad)), IncompatiblePair);
}

TEST_CASE("ruling lines do not meet their conjugates for SPD metrics") {
  Rng rng(45);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [g, j] = random_compatible_pair(rng);
    const auto [line, quadric] = acs_to_ruling_line(j, g);
    CHECK(quadric.isotropy_residual(line.basis()) < 1e-10);
    const ProjSubspace conj = line.conjugated();
    CHECK(quadric.isotropy_residual(conj.basis()) < 1e-10);
    CHECK_FALSE(intersect(line, conj).has_value());
  }
}

TEST_CASE("ruling_line_to_acs round trips") {
  Rng rng(51);
  for (int trial = 0; trial < 300; ++trial) {
    const auto [g, j] = random_compatible_pair(rng);
    const auto [line, quadric] = acs_to_ruling_line(j, g);
    const AlmostComplex4 back = ruling_line_to_acs(line, quadric);
    CHECK(rel_error(back.matrix(), j.matrix()) < 1e-9);
    CHECK(back.compatible_with(g, 1e-8));
    // the eigenline of the reconstruction is the input line
    CHECK(ruling_line(back).same_as(line, 1e-8));
  }

  // the conjugate line reconstructs the negated structure
  const auto [g, j] = random_compatible_pair(rng);
  const auto [line, quadric] = acs_to_ruling_line(j, g);
  const AlmostComplex4 neg = ruling_line_to_acs(line.conjugated(), quadric);
  CHECK(rel_error(neg.matrix(), Mat4(-j.matrix())) < 1e-9);
}

TEST_CASE("ruling_line_to_acs validates its inputs") {
  const Metric4 g = Metric4::identity();
  const QuadricModel quadric{g.matrix().cast<Cplx>(),
                             RealStructure::standard(3)};
  // a real coordinate line is nowhere isotropic for the SPD metric
  CHECK_THROWS_AS(ruling_line_to_acs(coordinate_line(0, 1), quadric),
                  NotIsotropic);

  // an isotropic line of an indefinite quadric can meet its conjugate
  Eigen::Matrix4cd lorentz = Eigen::Matrix4cd::Identity();
  lorentz(3, 3) = -1.0;
  const QuadricModel indefinite{lorentz, RealStructure::standard(3)};
  const Cplx im(0.0, 1.0);
  CMat cols(4, 2);
  cols.col(0) = unit4(0) + unit4(3);       // real isotropic point
  cols.col(1) = unit4(1) + im * unit4(2);  // isotropic, conjugate differs
  const ProjSubspace line = ProjSubspace::from_columns(cols);
  CHECK(indefinite.isotropy_residual(line.basis()) < 1e-12);
  CHECK_THROWS_AS(ruling_line_to_acs(line, indefinite), RealIntersection);
}

TEST_CASE("opposite rulings reconstruct orientation-reversing structures") {
  const Metric4 g = Metric4::identity();
  const AlmostComplex4 j = standard_acs();
  // conjugating by a g-isometric reflection flips the ruling family
  Mat4 r = Mat4::Identity();
  r(3, 3) = -1.0;
  const AlmostComplex4 j_flip = AlmostComplex4::from_matrix(r * j.matrix() * r);
  CHECK(orientation_sign(j) == 1);
  CHECK(orientation_sign(j_flip) == -1);

  const auto [line_flip, quadric] = acs_to_ruling_line(j_flip, g);
  const AlmostComplex4 back = ruling_line_to_acs(line_flip, quadric);
  CHECK(orientation_sign(back) == -1);

  // opposite-family lines intersect same-family ones
  const auto [line, q2] = acs_to_ruling_line(j, g);
  CHECK(intersect(line, line_flip).has_value());
}

TEST_CASE("common_metric finds certificates for trivial and conjugate pairs") {
  Rng rng(57);
  for (int trial = 0; trial < 30; ++trial) {
    const auto [g, j] = random_compatible_pair(rng);
    const auto same = common_metric(j, j);
    REQUIRE(same.has_value());
    CHECK(j.compatible_with(*same));
    CHECK(same->positive_definite());

    const auto conj = common_metric(j, j.negated());
    REQUIRE(conj.has_value());
    CHECK(j.compatible_with(*conj));
  }
}

TEST_CASE("common_metric returns nothing for generic disjoint pairs") {
  Rng rng(63);
  int none_count = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const AlmostComplex4 ja = random_compatible_pair(rng).J;
    const AlmostComplex4 jb = random_compatible_pair(rng).J;
    const int nullity = invariance_nullity(ja, jb);
    const auto found = common_metric(ja, jb);
    if (nullity == 0) {
      CHECK_FALSE(found.has_value());
      ++none_count;
    }
    if (found.has_value()) {
      CHECK(ja.compatible_with(*found));
      CHECK(jb.compatible_with(*found));
    }
  }
  // generic pairs have trivial constraint intersection
  CHECK(none_count >= 25);
}

TEST_CASE("junction short-circuits identical and negated inputs") {
  Rng rng(69);
  const auto [g, j] = random_compatible_pair(rng);
  const JunctionResult same = junction(j, j, Metric4::identity(), 1);
  CHECK(same.shortcut);
  CHECK(rel_error(same.J_junct.matrix(), j.matrix()) < 1e-14);
  CHECK(j.compatible_with(same.g_p));
  CHECK(j.compatible_with(same.g_q));

  const JunctionResult neg = junction(j, j.negated(), Metric4::identity(), 1);
  CHECK(neg.shortcut);
  CHECK(j.compatible_with(neg.g_p));
  CHECK(neg.J_junct.compatible_with(neg.g_q));
}

TEST_CASE("junction rejects opposite orientations") {
  Rng rng(75);
  const GeneratedPair plus = random_compatible_pair_oriented(rng, +1);
  const GeneratedPair minus = random_compatible_pair_oriented(rng, -1);
  CHECK_THROWS_AS(junction(plus.J, minus.J, Metric4::identity(), 1),
                  IncompatibleOrientation);
}

TEST_CASE("junction produces certified intermediate structures") {
  Rng rng(81);
  const Metric4 g_ref = Metric4::identity();
  int successes = 0;
  int degenerate = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const AlmostComplex4 j0 = random_compatible_pair_oriented(rng, +1).J;
    const AlmostComplex4 j1 = random_compatible_pair_oriented(rng, +1).J;
    try {
      const JunctionResult res = junction(j0, j1, g_ref, trial);
      ++successes;
      // independent certificates through the pointwise compatibility check
      CHECK(res.g_p.positive_definite());
      CHECK(res.g_q.positive_definite());
      CHECK(j0.compatible_with(res.g_p, 1e-8));
      CHECK(res.J_junct.compatible_with(res.g_p, 1e-8));
      CHECK(res.J_junct.compatible_with(res.g_q, 1e-8));
      CHECK(j1.compatible_with(res.g_q, 1e-8));
      // the junction structure shares the input orientation
      CHECK(orientation_sign(res.J_junct) == 1);
    } catch (const DegenerateConfiguration&) {
      ++degenerate;
    }
  }
  CHECK(successes + degenerate == 100);
  CHECK(successes >= 95);
}

TEST_CASE("junction accepts a shared reference metric as certificate") {
  // both inputs compatible with g_ref: the compatibility test that validates
  // the constructed metrics also validates g_ref itself
  Rng rng(87);
  const Metric4 g_ref = Metric4::identity();
  const auto draw = [&]() {
    Vec6 c;
    for (int i = 0; i < 6; ++i) c[i] = rng.gaussian();
    return compatible_acs_from_form(g_ref, TwoForm4(c));
  };
  const AlmostComplex4 j0 = draw();
  AlmostComplex4 j1 = draw();
  while (orientation_sign(j1) != orientation_sign(j0)) j1 = draw();
  const JunctionResult res = junction(j0, j1, g_ref, 5);
  CHECK(j0.compatible_with(g_ref));
  CHECK(j1.compatible_with(g_ref));
  CHECK(j0.compatible_with(res.g_p, 1e-8));
  CHECK(res.J_junct.compatible_with(res.g_p, 1e-8));
}

TEST_CASE("junction is deterministic in the seed") {
  Rng rng(93);
  const AlmostComplex4 j0 = random_compatible_pair_oriented(rng, +1).J;
  const AlmostComplex4 j1 = random_compatible_pair_oriented(rng, +1).J;
  const JunctionResult a = junction(j0, j1, Metric4::identity(), 1234);
  const JunctionResult b = junction(j0, j1, Metric4::identity(), 1234);
  CHECK((a.J_junct.matrix() - b.J_junct.matrix()).norm() == 0.0);
  CHECK((a.g_p.matrix() - b.g_p.matrix()).norm() == 0.0);
}
