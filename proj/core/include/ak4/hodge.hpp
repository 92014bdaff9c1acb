#pragma once

// Discrete exterior calculus on a uniform periodic grid over the unit
// 4-torus. Degree-k fields are cochains with one value per k-cell of the
// cubical complex, stored as the component value at the cell midpoint. The
// coboundary d is the central difference between opposite faces (exactly
// nilpotent); metric inner products are assembled voxel by voxel with
// midpoint metric sampling, and d* is the exact adjoint of d in those inner
// products. Harmonic projection solves the two least-squares problems
// min |omega - d rho1| and min |omega - d* rho2| with diagonally
// preconditioned conjugate gradients.
//
// Operator applications are embarrassingly parallel over cells; fields are
// immutable during a solve and concurrent solves on distinct workspaces are
// safe (the per-grid quadrature cache is built under a lock).

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ak4/errors.hpp"
#include "ak4/pointwise.hpp"

namespace ak4 {

// binomial(4, k) for k = 0..4
int cell_combo_count(int degree);

// sorted axis subsets indexing the component slots of a degree-k field;
// degree 2 matches the TwoForm4 component order
const std::vector<std::array<int, 4>>& cell_combos(int degree);

// Gram matrix of the metric inner product on k-forms (indices raised by
// g^{-1}); size C(4,k) x C(4,k)
Eigen::MatrixXd metric_gram_k(const Metric4& g, int degree);

// ---------------------------------------------------------------------------
// Grid4
// ---------------------------------------------------------------------------

// Uniform periodic grid over [0,1)^4 with n cells per axis and one metric
// per vertex. Voxel-center metrics (used by all quadrature) are the average
// of the two main-diagonal corner metrics, a second-order midpoint sample.
class Grid4 {
 public:
  Grid4(int n, const Metric4& constant_metric, int orientation = +1);
  Grid4(int n, std::vector<Metric4> vertex_metrics, int orientation = +1);
  // vertex metric sampled from a smooth field at vertex positions
  Grid4(int n, const std::function<Metric4(const Vec4&)>& field,
        int orientation = +1);

  int n() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  int orientation() const { return orientation_; }
  long vertex_count() const { return count_; }
  bool uniform_metric() const { return uniform_; }

  long flat_index(int i0, int i1, int i2, int i3) const;
  std::array<int, 4> coords(long flat) const;
  long neighbor(long flat, int axis, int step) const;  // periodic shift
  Vec4 vertex_position(long flat) const;

  const Metric4& vertex_metric(long flat) const { return vertex_[flat]; }
  Metric4 voxel_metric(long flat) const;
  // multilinear interpolation of the vertex metrics inside the cell at
  // `flat`, local coordinates in [0,1]^4
  Metric4 metric_in_cell(long flat, const Vec4& local) const;

  // Degree-2 mass block at a voxel and its inverse, cached per grid on first
  // use (one shared block on uniform grids). Each entry samples the metric
  // weight at the midpoint between the two participating cell midpoints, so
  // the assembled quadratic form is a second-order quadrature of the metric
  // inner product on the staggered values.
  const Mat6& mass2(long voxel) const;
  const Mat6& mass2_inv(long voxel) const;
  // mass block for an arbitrary degree, computed on demand
  Eigen::MatrixXd mass_block(long voxel, int degree) const;

 private:
  struct MassCache {
    std::vector<Mat6> mass2;
    std::vector<Mat6> mass2_inv;
  };
  void init(int n, int orientation);
  const MassCache& cache() const;

  int n_ = 0;
  int orientation_ = 1;
  long count_ = 0;
  bool uniform_ = false;
  std::vector<Metric4> vertex_;
  mutable std::shared_ptr<const MassCache> cache_;
  std::shared_ptr<std::mutex> cache_mutex_;
};

// ---------------------------------------------------------------------------
// FormField
// ---------------------------------------------------------------------------

class FormField {
 public:
  FormField(int degree, int n);  // zero field

  int degree() const { return degree_; }
  int n() const { return n_; }
  long cells_per_combo() const { return count_; }

  double at(int combo, long vertex) const {
    return v_[combo * count_ + vertex];
  }
  double& at(int combo, long vertex) { return v_[combo * count_ + vertex]; }

  const Eigen::VectorXd& values() const { return v_; }
  Eigen::VectorXd& values() { return v_; }

  // midpoint sampling of a smooth component function
  static FormField sample(
      int degree, int n,
      const std::function<double(int combo, const Vec4& midpoint)>& fn);

  FormField& operator+=(const FormField& o);
  FormField& operator-=(const FormField& o);
  FormField& operator*=(double s);
  FormField operator+(const FormField& o) const;
  FormField operator-(const FormField& o) const;

 private:
  int degree_;
  int n_;
  long count_;
  Eigen::VectorXd v_;
};

// ---------------------------------------------------------------------------
// operators
// ---------------------------------------------------------------------------

// coboundary, degree k -> k+1; d(d(f)) = 0 exactly
FormField d(const FormField& f);

// transpose of the coboundary in plain coordinates (building block of d*)
FormField d_transpose(const FormField& f);

// metric Hodge star, degree k -> 4-k, assembled per voxel from the pointwise
// star at the midpoint-sampled metric
FormField star(const FormField& f, const Grid4& grid);

// codifferential, degree k -> k-1: the exact adjoint of d in the assembled
// inner products, M_{k-1}^{-1} d^T M_k
FormField d_star(const FormField& f, const Grid4& grid);

// metric inner product and norm of two degree-k fields
double inner(const FormField& a, const FormField& b, const Grid4& grid);
double norm(const FormField& f, const Grid4& grid);

// ---------------------------------------------------------------------------
// harmonic projection
// ---------------------------------------------------------------------------

inline constexpr double kTolSolveDefault = 1e-8;

struct HodgeSplit {
  FormField harmonic;
  FormField exact;
  FormField coexact;
  double residual;  // (|d h| + |d* h|) / |omega|
  int iterations;   // total over both solves
};

// omega = harmonic + exact + coexact, the three parts pairwise orthogonal in
// the metric inner product. Throws SolverDiverged when conjugate gradients
// fails to reach tol_solve within 50 n^2 iterations.
HodgeSplit hodge_decompose(const FormField& omega, const Grid4& grid,
                           double tol_solve = kTolSolveDefault);

// ---------------------------------------------------------------------------
// triple fields and invariants
// ---------------------------------------------------------------------------

// Per-vertex hermitian triples over a grid; omega is reconstructed from
// (g, J) at each vertex.
class TripleField {
 public:
  TripleField(Grid4 grid, std::vector<AlmostComplex4> j_field);

  const Grid4& grid() const { return grid_; }
  const AlmostComplex4& J_at(long v) const { return j_[v]; }
  const TwoForm4& omega_at(long v) const { return omega_[v]; }

  // degree-2 cochain: each face value is the average of the component at the
  // two main-diagonal corners (a midpoint sample to second order)
  FormField assemble_omega() const;

  bool all_valid(double tol = kTolAlg) const;
  TripleField conjugated() const;  // (g, -J, -omega) at every vertex

 private:
  TripleField(Grid4 grid, std::vector<AlmostComplex4> j,
              std::vector<TwoForm4> omega);
  Grid4 grid_;
  std::vector<AlmostComplex4> j_;
  std::vector<TwoForm4> omega_;
};

struct CohomologyClass2 {
  std::array<double, 6> periods;  // over the coordinate 2-tori, order (01,02,03,12,13,23)
  double max_abs_period;
  bool pseudo_symplectic;  // max |period| > tol_ps
};

inline constexpr double kTolPseudoSymplectic = 1e-4;

// periods of the six coordinate 2-tori through the origin cell
std::array<double, 6> periods_of(const FormField& two_form);

// Class of the harmonic part of the assembled form of the field.
CohomologyClass2 tau(const TripleField& field,
                     double tol_solve = kTolSolveDefault,
                     double tol_ps = kTolPseudoSymplectic);

// integral of a ^ b over the torus by cellwise wedge and midpoint quadrature
double wedge_integral(const FormField& a, const FormField& b,
                      const Grid4& grid);

// pointwise (e^f g, J, e^f omega); f is a degree-0 field on the same grid
TripleField conformal_rescale(const TripleField& field, const FormField& f);

struct PositivityResult {
  double value;            // integral of e^f omega ^ omega_H
  double harmonic_square;  // integral of omega_H ^ omega_H
  double min_pointwise;    // min over voxels of <omega, omega_H>_g
  double bound;            // e^{min f} * harmonic_square
};

// Decomposes under the unrescaled metric, then integrates e^f omega ^
// omega_H; reports the cellwise minimum of the pointwise inner product and
// the lower bound it certifies.
PositivityResult positivity_integral(const TripleField& field,
                                     const FormField& f,
                                     double tol_solve = kTolSolveDefault);

// (|d omega|, |d* omega|) in the grid norms; both vanish exactly for the
// constant symplectic field under a flat metric
std::pair<double, double> dstar_omega_diagnostic(const TripleField& field);

struct HarmonicNorm {
  double norm;           // sqrt of the signed square, when nonnegative
  double signed_square;  // integral of omega_H ^ omega_H
};

// Throws NegativeSquare when the signed square drops below -tol_solve.
HarmonicNorm harmonic_norm(const TripleField& field,
                           double tol_solve = kTolSolveDefault);

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------
// Documented container (docs/field-format.md): a text variant and a binary
// variant with little-endian 64-bit floats; headers carry (degree, n,
// orientation) for fields and (n, orientation) for grids.

void save_form(std::ostream& out, const FormField& f, int orientation,
               bool binary);
std::pair<FormField, int> load_form(std::istream& in);

void save_grid(std::ostream& out, const Grid4& grid, bool binary);
Grid4 load_grid(std::istream& in);

void save_form_file(const std::string& path, const FormField& f,
                    int orientation, bool binary);
std::pair<FormField, int> load_form_file(const std::string& path);
void save_grid_file(const std::string& path, const Grid4& grid, bool binary);
Grid4 load_grid_file(const std::string& path);

}  // namespace ak4
