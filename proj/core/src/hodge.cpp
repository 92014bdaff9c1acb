#include "ak4/hodge.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ak4 {

// ---------------------------------------------------------------------------
// cubical combinatorics
// ---------------------------------------------------------------------------

namespace {

constexpr int kBinom[5] = {1, 4, 6, 4, 1};

const std::vector<std::vector<std::array<int, 4>>>& combo_tables() {
  static const std::vector<std::vector<std::array<int, 4>>> tables = [] {
    std::vector<std::vector<std::array<int, 4>>> t(5);
    t[0] = {{-1, -1, -1, -1}};
    for (int a = 0; a < 4; ++a) t[1].push_back({a, -1, -1, -1});
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) t[2].push_back({a, b, -1, -1});
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        for (int c = b + 1; c < 4; ++c) t[3].push_back({a, b, c, -1});
    t[4] = {{0, 1, 2, 3}};
    return t;
  }();
  return tables;
}

int combo_index(int degree, const std::array<int, 4>& axes) {
  const auto& list = combo_tables()[degree];
  for (int i = 0; i < static_cast<int>(list.size()); ++i) {
    if (list[i] == axes) return i;
  }
  return -1;
}

// per (degree, combo, dropped slot): the dropped axis and the remaining combo
struct BoundaryTables {
  std::array<std::vector<std::array<std::pair<int, int>, 4>>, 5> drop;
};

const BoundaryTables& boundary_tables() {
  static const BoundaryTables tables = [] {
    BoundaryTables t;
    for (int deg = 1; deg <= 4; ++deg) {
      const auto& list = combo_tables()[deg];
      t.drop[deg].resize(list.size());
      for (int c = 0; c < static_cast<int>(list.size()); ++c) {
        for (int j = 0; j < deg; ++j) {
          std::array<int, 4> sub = {-1, -1, -1, -1};
          int at = 0;
          for (int m = 0; m < deg; ++m) {
            if (m != j) sub[at++] = list[c][m];
          }
          t.drop[deg][c][j] = {list[c][j], combo_index(deg - 1, sub)};
        }
      }
    }
    return t;
  }();
  return tables;
}

// complement combo and the sign of the permutation (combo, complement)
struct StarTables {
  std::array<std::vector<std::pair<int, int>>, 5> complement;
};

int permutation_sign(const std::vector<int>& perm) {
  int sign = 1;
  for (size_t i = 0; i < perm.size(); ++i)
    for (size_t j = i + 1; j < perm.size(); ++j)
      if (perm[i] > perm[j]) sign = -sign;
  return sign;
}

const StarTables& star_tables() {
  static const StarTables tables = [] {
    StarTables t;
    for (int deg = 0; deg <= 4; ++deg) {
      const auto& list = combo_tables()[deg];
      for (const auto& axes : list) {
        std::vector<int> perm;
        std::array<int, 4> comp = {-1, -1, -1, -1};
        bool used[4] = {false, false, false, false};
        for (int m = 0; m < deg; ++m) {
          perm.push_back(axes[m]);
          used[axes[m]] = true;
        }
        int at = 0;
        for (int a = 0; a < 4; ++a) {
          if (!used[a]) {
            perm.push_back(a);
            comp[at++] = a;
          }
        }
        t.complement[deg].push_back(
            {combo_index(4 - deg, comp), permutation_sign(perm)});
      }
    }
    return t;
  }();
  return tables;
}

// Iterate all grid cells; fn(flat, idx) with idx the integer coordinates.
template <typename Fn>
void for_each_cell(int n, Fn&& fn) {
  int idx[4];
  long flat = 0;
  for (idx[0] = 0; idx[0] < n; ++idx[0])
    for (idx[1] = 0; idx[1] < n; ++idx[1])
      for (idx[2] = 0; idx[2] < n; ++idx[2])
        for (idx[3] = 0; idx[3] < n; ++idx[3], ++flat) fn(flat, idx);
}

long axis_stride(int n, int axis) {
  long s = 1;
  for (int a = 3; a > axis; --a) s *= n;
  return s;
}

}  // namespace

int cell_combo_count(int degree) {
  if (degree < 0 || degree > 4) throw BadDegree("degree out of range");
  return kBinom[degree];
}

const std::vector<std::array<int, 4>>& cell_combos(int degree) {
  if (degree < 0 || degree > 4) throw BadDegree("degree out of range");
  return combo_tables()[degree];
}

Eigen::MatrixXd metric_gram_k(const Metric4& g, int degree) {
  if (degree < 0 || degree > 4) throw BadDegree("degree out of range");
  const Mat4 gi = g.matrix().inverse();
  const auto& combos = cell_combos(degree);
  const int m = kBinom[degree];
  Eigen::MatrixXd gram(m, m);
  for (int r = 0; r < m; ++r) {
    for (int s = 0; s < m; ++s) {
      // determinant of the k x k minor of g^{-1}
      if (degree == 0) {
        gram(r, s) = 1.0;
        continue;
      }
      Eigen::MatrixXd minor(degree, degree);
      for (int i = 0; i < degree; ++i)
        for (int j = 0; j < degree; ++j)
          minor(i, j) = gi(combos[r][i], combos[s][j]);
      gram(r, s) = minor.determinant();
    }
  }
  return gram;
}

// ---------------------------------------------------------------------------
// Grid4
// ---------------------------------------------------------------------------

void Grid4::init(int n, int orientation) {
  if (n < 4) throw BadDimension("Grid4: n >= 4 required");
  n_ = n;
  orientation_ = orientation >= 0 ? 1 : -1;
  count_ = 1;
  for (int i = 0; i < 4; ++i) count_ *= n_;
  cache_mutex_ = std::make_shared<std::mutex>();
}

Grid4::Grid4(int n, const Metric4& constant_metric, int orientation) {
  init(n, orientation);
  if (!constant_metric.positive_definite()) {
    throw NotPositive("Grid4: metric not SPD");
  }
  vertex_.assign(count_, constant_metric);
  uniform_ = true;
}

Grid4::Grid4(int n, std::vector<Metric4> vertex_metrics, int orientation) {
  init(n, orientation);
  vertex_ = std::move(vertex_metrics);
  if (static_cast<long>(vertex_.size()) != count_) {
    throw BadDimension("Grid4: metric field size != n^4");
  }
  uniform_ = true;
  for (const auto& m : vertex_) {
    if (!m.positive_definite()) {
      throw NotPositive("Grid4: metric not SPD at a vertex");
    }
    if (m.matrix() != vertex_.front().matrix()) uniform_ = false;
  }
}

Grid4::Grid4(int n, const std::function<Metric4(const Vec4&)>& field,
             int orientation) {
  init(n, orientation);
  vertex_.reserve(count_);
  const double h = 1.0 / n_;
  for_each_cell(n_, [&](long, const int* idx) {
    vertex_.push_back(
        field(Vec4(idx[0] * h, idx[1] * h, idx[2] * h, idx[3] * h)));
  });
  uniform_ = true;
  for (const auto& m : vertex_) {
    if (!m.positive_definite()) {
      throw NotPositive("Grid4: metric not SPD at a vertex");
    }
    if (m.matrix() != vertex_.front().matrix()) uniform_ = false;
  }
}

long Grid4::flat_index(int i0, int i1, int i2, int i3) const {
  const auto w = [this](int i) { return ((i % n_) + n_) % n_; };
  return ((static_cast<long>(w(i0)) * n_ + w(i1)) * n_ + w(i2)) * n_ + w(i3);
}

std::array<int, 4> Grid4::coords(long flat) const {
  std::array<int, 4> idx;
  idx[3] = static_cast<int>(flat % n_);
  flat /= n_;
  idx[2] = static_cast<int>(flat % n_);
  flat /= n_;
  idx[1] = static_cast<int>(flat % n_);
  flat /= n_;
  idx[0] = static_cast<int>(flat % n_);
  return idx;
}

long Grid4::neighbor(long flat, int axis, int step) const {
  const auto idx = coords(flat);
  std::array<int, 4> moved = idx;
  moved[axis] += step;
  return flat_index(moved[0], moved[1], moved[2], moved[3]);
}

Vec4 Grid4::vertex_position(long flat) const {
  const auto idx = coords(flat);
  const double h = 1.0 / n_;
  return Vec4(idx[0] * h, idx[1] * h, idx[2] * h, idx[3] * h);
}

Metric4 Grid4::voxel_metric(long flat) const {
  if (uniform_) return vertex_.front();
  const auto idx = coords(flat);
  const long opposite =
      flat_index(idx[0] + 1, idx[1] + 1, idx[2] + 1, idx[3] + 1);
  return Metric4::spd(0.5 *
                      (vertex_[flat].matrix() + vertex_[opposite].matrix()));
}

Metric4 Grid4::metric_in_cell(long flat, const Vec4& local) const {
  if (uniform_) return vertex_.front();
  Mat4 acc = Mat4::Zero();
  for (int corner = 0; corner < 16; ++corner) {
    double weight = 1.0;
    long at = flat;
    for (int a = 0; a < 4; ++a) {
      if (corner & (1 << a)) {
        weight *= local[a];
        at = neighbor(at, a, +1);
      } else {
        weight *= 1.0 - local[a];
      }
    }
    if (weight == 0.0) continue;
    acc += weight * vertex_[at].matrix();
  }
  return Metric4::spd(acc);
}

namespace {

// entry (r, s) of sqrt(det g) gram_k(g): the k x k minor determinant of
// g^{-1} at the two combos, weighted by the volume density
double mass_entry_weight(const Mat4& gi, double dens, int degree, int r,
                         int s) {
  if (degree == 0) return dens;
  const auto& combos = cell_combos(degree);
  Eigen::Matrix<double, 4, 4> minor;  // top-left degree x degree used
  for (int i = 0; i < degree; ++i)
    for (int j = 0; j < degree; ++j)
      minor(i, j) = gi(combos[r][i], combos[s][j]);
  double det = 0.0;
  switch (degree) {
    case 1:
      det = minor(0, 0);
      break;
    case 2:
      det = minor(0, 0) * minor(1, 1) - minor(0, 1) * minor(1, 0);
      break;
    case 3:
      det = minor.topLeftCorner<3, 3>().determinant();
      break;
    default:
      det = minor.determinant();
      break;
  }
  return dens * det;
}

}  // namespace

// Each entry integrates alpha_r beta_s W_{rs}(g) over the voxel by a
// midpoint sample: values live at their cell midpoints, the weight at the
// midpoint between them. Falls back to a single center sample if the
// assembled block loses positivity (wildly varying metrics).
static Eigen::MatrixXd staggered_mass_block(const Grid4& grid, long voxel,
                                            int degree) {
  const auto& combos = cell_combos(degree);
  const int m = cell_combo_count(degree);
  const double h4 = std::pow(grid.spacing(), 4);
  Eigen::MatrixXd block(m, m);
  for (int r = 0; r < m; ++r) {
    for (int s = r; s < m; ++s) {
      Vec4 local = Vec4::Zero();
      for (int i = 0; i < degree; ++i) {
        local[combos[r][i]] += 0.25;
        local[combos[s][i]] += 0.25;
      }
      const Metric4 g = grid.metric_in_cell(voxel, local);
      const Mat4 gi = g.matrix().inverse();
      const double dens = g.volume_density();
      block(r, s) = block(s, r) =
          h4 * mass_entry_weight(gi, dens, degree, r, s);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
  if (es.eigenvalues().minCoeff() <= 1e-12 * block.norm()) {
    const Metric4 gc = grid.voxel_metric(voxel);
    block = h4 * gc.volume_density() * metric_gram_k(gc, degree);
  }
  return block;
}

const Grid4::MassCache& Grid4::cache() const {
  std::lock_guard<std::mutex> lock(*cache_mutex_);
  if (!cache_) {
    auto built = std::make_shared<MassCache>();
    const long blocks = uniform_ ? 1 : count_;
    built->mass2.resize(blocks);
    built->mass2_inv.resize(blocks);
    for (long v = 0; v < blocks; ++v) {
      const Mat6 block = staggered_mass_block(*this, v, 2);
      built->mass2[v] = block;
      built->mass2_inv[v] = block.inverse();
    }
    cache_ = std::move(built);
  }
  return *cache_;
}

const Mat6& Grid4::mass2(long voxel) const {
  const MassCache& c = cache();
  return c.mass2[uniform_ ? 0 : voxel];
}

const Mat6& Grid4::mass2_inv(long voxel) const {
  const MassCache& c = cache();
  return c.mass2_inv[uniform_ ? 0 : voxel];
}

Eigen::MatrixXd Grid4::mass_block(long voxel, int degree) const {
  return staggered_mass_block(*this, voxel, degree);
}

// ---------------------------------------------------------------------------
// FormField
// ---------------------------------------------------------------------------

FormField::FormField(int degree, int n) : degree_(degree), n_(n) {
  if (degree < 0 || degree > 4) throw BadDegree("FormField: degree 0..4");
  if (n < 4) throw BadDimension("FormField: n >= 4 required");
  count_ = 1;
  for (int i = 0; i < 4; ++i) count_ *= n_;
  v_ = Eigen::VectorXd::Zero(kBinom[degree] * count_);
}

FormField FormField::sample(
    int degree, int n,
    const std::function<double(int combo, const Vec4& midpoint)>& fn) {
  FormField f(degree, n);
  const auto& combos = cell_combos(degree);
  const double h = 1.0 / n;
  for (int c = 0; c < kBinom[degree]; ++c) {
    Vec4 offset = Vec4::Zero();
    for (int m = 0; m < degree; ++m) offset[combos[c][m]] = 0.5 * h;
    for_each_cell(n, [&](long flat, const int* idx) {
      const Vec4 pos(idx[0] * h + offset[0], idx[1] * h + offset[1],
                     idx[2] * h + offset[2], idx[3] * h + offset[3]);
      f.at(c, flat) = fn(c, pos);
    });
  }
  return f;
}

FormField& FormField::operator+=(const FormField& o) {
  if (degree_ != o.degree_ || n_ != o.n_) throw BadDegree("field mismatch");
  v_ += o.v_;
  return *this;
}

FormField& FormField::operator-=(const FormField& o) {
  if (degree_ != o.degree_ || n_ != o.n_) throw BadDegree("field mismatch");
  v_ -= o.v_;
  return *this;
}

FormField& FormField::operator*=(double s) {
  v_ *= s;
  return *this;
}

FormField FormField::operator+(const FormField& o) const {
  FormField r = *this;
  r += o;
  return r;
}

FormField FormField::operator-(const FormField& o) const {
  FormField r = *this;
  r -= o;
  return r;
}

// ---------------------------------------------------------------------------
// operators
// ---------------------------------------------------------------------------

FormField d(const FormField& f) {
  const int k = f.degree();
  if (k >= 4) throw BadDegree("d: degree must be <= 3");
  const int n = f.n();
  FormField out(k + 1, n);
  const double invh = static_cast<double>(n);
  const auto& drop = boundary_tables().drop[k + 1];
  for (int c = 0; c < kBinom[k + 1]; ++c) {
    for (int j = 0; j <= k; ++j) {
      const auto [axis, sub] = drop[c][j];
      const double sign = (j % 2 == 0) ? invh : -invh;
      const long stride = axis_stride(n, axis);
      const long wrap = stride * (1 - n);
      for_each_cell(n, [&](long flat, const int* idx) {
        const long nb = flat + (idx[axis] == n - 1 ? wrap : stride);
        out.at(c, flat) += sign * (f.at(sub, nb) - f.at(sub, flat));
      });
    }
  }
  return out;
}

FormField d_transpose(const FormField& f) {
  const int m = f.degree();
  if (m < 1) throw BadDegree("d_transpose: degree must be >= 1");
  const int n = f.n();
  FormField out(m - 1, n);
  const double invh = static_cast<double>(n);
  const auto& drop = boundary_tables().drop[m];
  for (int c = 0; c < kBinom[m]; ++c) {
    for (int j = 0; j < m; ++j) {
      const auto [axis, sub] = drop[c][j];
      const double sign = (j % 2 == 0) ? invh : -invh;
      const long stride = axis_stride(n, axis);
      const long wrap = stride * (1 - n);
      for_each_cell(n, [&](long flat, const int* idx) {
        const long nb = flat + (idx[axis] == n - 1 ? wrap : stride);
        const double val = sign * f.at(c, flat);
        out.at(sub, nb) += val;
        out.at(sub, flat) -= val;
      });
    }
  }
  return out;
}

namespace {

void check_grid_match(const FormField& f, const Grid4& grid) {
  if (f.n() != grid.n()) throw BadDimension("field/grid resolution mismatch");
}

// per-voxel block multiply by the cached degree-2 mass matrix or its inverse
// (solver hot path)
FormField apply_mass2_cached(const FormField& f, const Grid4& grid,
                             bool inverse) {
  check_grid_match(f, grid);
  if (f.degree() != 2) throw BadDegree("apply_mass2: degree-2 field required");
  FormField out(2, f.n());
  const long count = f.cells_per_combo();
  for (long v = 0; v < count; ++v) {
    Vec6 x;
    for (int c = 0; c < 6; ++c) x[c] = f.at(c, v);
    const Vec6 y = inverse ? grid.mass2_inv(v) * x : grid.mass2(v) * x;
    for (int c = 0; c < 6; ++c) out.at(c, v) = y[c];
  }
  return out;
}

// on-demand variant for one-shot operators (no cache build)
FormField apply_mass_generic(const FormField& f, const Grid4& grid,
                             bool inverse) {
  check_grid_match(f, grid);
  const int m = kBinom[f.degree()];
  FormField out(f.degree(), f.n());
  const long count = f.cells_per_combo();
  const bool uniform = grid.uniform_metric();
  Eigen::MatrixXd block;
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  if (uniform) {
    block = grid.mass_block(0, f.degree());
    if (inverse) ldlt.compute(block);
  }
  for (long v = 0; v < count; ++v) {
    if (!uniform) {
      block = grid.mass_block(v, f.degree());
      if (inverse) ldlt.compute(block);
    }
    Eigen::VectorXd x(m);
    for (int c = 0; c < m; ++c) x[c] = f.at(c, v);
    const Eigen::VectorXd y =
        inverse ? Eigen::VectorXd(ldlt.solve(x)) : Eigen::VectorXd(block * x);
    for (int c = 0; c < m; ++c) out.at(c, v) = y[c];
  }
  return out;
}

}  // namespace

FormField star(const FormField& f, const Grid4& grid) {
  check_grid_match(f, grid);
  const int k = f.degree();
  const int m = kBinom[k];
  const auto& comp = star_tables().complement[k];
  FormField out(4 - k, f.n());
  const long count = f.cells_per_combo();
  const double orient = grid.orientation();
  const bool uniform = grid.uniform_metric();
  Eigen::MatrixXd gram;
  double dens = 0.0;
  if (uniform) {
    const Metric4 gv = grid.voxel_metric(0);
    gram = metric_gram_k(gv, k);
    dens = gv.volume_density();
  }
  for (long v = 0; v < count; ++v) {
    if (!uniform) {
      const Metric4 gv = grid.voxel_metric(v);
      gram = metric_gram_k(gv, k);
      dens = gv.volume_density();
    }
    Eigen::VectorXd x(m);
    for (int c = 0; c < m; ++c) x[c] = f.at(c, v);
    const Eigen::VectorXd raised = gram * x;
    for (int c = 0; c < m; ++c) {
      const auto [cc, sign] = comp[c];
      out.at(cc, v) = orient * dens * sign * raised[c];
    }
  }
  return out;
}

FormField d_star(const FormField& f, const Grid4& grid) {
  if (f.degree() < 1) throw BadDegree("d_star: degree must be >= 1");
  check_grid_match(f, grid);
  return apply_mass_generic(d_transpose(apply_mass_generic(f, grid, false)),
                            grid, true);
}

double inner(const FormField& a, const FormField& b, const Grid4& grid) {
  if (a.degree() != b.degree() || a.n() != b.n()) {
    throw BadDegree("inner: mismatched fields");
  }
  check_grid_match(a, grid);
  const int m = kBinom[a.degree()];
  const long count = a.cells_per_combo();
  const bool uniform = grid.uniform_metric();
  Eigen::MatrixXd block;
  if (uniform) block = grid.mass_block(0, a.degree());
  double total = 0.0;
  for (long v = 0; v < count; ++v) {
    if (!uniform) block = grid.mass_block(v, a.degree());
    Eigen::VectorXd x(m), y(m);
    for (int c = 0; c < m; ++c) {
      x[c] = a.at(c, v);
      y[c] = b.at(c, v);
    }
    total += x.dot(block * y);
  }
  return total;
}

double norm(const FormField& f, const Grid4& grid) {
  return std::sqrt(std::max(0.0, inner(f, f, grid)));
}

// ---------------------------------------------------------------------------
// conjugate gradients
// ---------------------------------------------------------------------------

namespace {

struct CgOutcome {
  int iterations;
  double relative_residual;
};

// abs_floor: residuals below this are indistinguishable from the rounding
// noise of assembling the right-hand side; treat them as converged (relative
// targets are meaningless once the true component is zero to roundoff).
template <typename ApplyFn>
CgOutcome pcg(const ApplyFn& apply, const Eigen::VectorXd& rhs,
              Eigen::VectorXd& x, const Eigen::VectorXd& diag_inv, double tol,
              double abs_floor, int max_iter) {
  const double rhs_norm = rhs.norm();
  x.setZero();
  if (rhs_norm <= abs_floor) return {0, 0.0};
  const double target = std::max(tol * rhs_norm, abs_floor);

  Eigen::VectorXd r = rhs;
  Eigen::VectorXd z = diag_inv.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd q(rhs.size());
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    apply(p, q);
    const double pq = p.dot(q);
    if (pq <= 0.0) {
      // numerically null search direction on a singular consistent system
      return {it, r.norm() / rhs_norm};
    }
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    if (r.norm() <= target) return {it, r.norm() / rhs_norm};
    z = diag_inv.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw SolverDiverged("pcg: tolerance not reached within max_iter");
}

// Jacobi diagonal of d1^T M2 d1 on 1-cochains (mass cross terms dropped).
Eigen::VectorXd jacobi_exact_system(const Grid4& grid) {
  const int n = grid.n();
  const long count = grid.vertex_count();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(4 * count);
  const double invh2 = static_cast<double>(n) * n;
  const auto& drop = boundary_tables().drop[2];
  for (int c = 0; c < 6; ++c) {
    for (int j = 0; j < 2; ++j) {
      const auto [axis, sub] = drop[c][j];
      const long stride = axis_stride(n, axis);
      const long wrap = stride * (1 - n);
      for_each_cell(n, [&](long flat, const int* idx) {
        const long nb = flat + (idx[axis] == n - 1 ? wrap : stride);
        const double w = invh2 * grid.mass2(flat)(c, c);
        diag[sub * count + flat] += w;
        diag[sub * count + nb] += w;
      });
    }
  }
  return diag.cwiseInverse();
}

// Jacobi diagonal of d2 M2^{-1} d2^T on 3-cochains.
Eigen::VectorXd jacobi_coexact_system(const Grid4& grid) {
  const int n = grid.n();
  const long count = grid.vertex_count();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(4 * count);
  const double invh2 = static_cast<double>(n) * n;
  const auto& drop = boundary_tables().drop[3];
  for (int c = 0; c < 4; ++c) {
    for (int j = 0; j < 3; ++j) {
      const auto [axis, sub] = drop[c][j];
      const long stride = axis_stride(n, axis);
      const long wrap = stride * (1 - n);
      for_each_cell(n, [&](long flat, const int* idx) {
        const long nb = flat + (idx[axis] == n - 1 ? wrap : stride);
        diag[c * count + flat] += invh2 * (grid.mass2_inv(flat)(sub, sub) +
                                           grid.mass2_inv(nb)(sub, sub));
      });
    }
  }
  return diag.cwiseInverse();
}

}  // namespace

HodgeSplit hodge_decompose(const FormField& omega, const Grid4& grid,
                           double tol_solve) {
  if (omega.degree() != 2) throw BadDegree("hodge_decompose: degree-2 input");
  check_grid_match(omega, grid);
  const int n = grid.n();
  const int max_iter = 50 * n * n;

  // exact part: normal equations d^T M2 d rho1 = d^T M2 omega
  FormField rho1(1, n);
  const FormField momega = apply_mass2_cached(omega, grid, false);
  const FormField rhs1 = d_transpose(momega);
  // rounding noise of one coboundary application to the assembled product
  const double floor1 = 1e-13 * n * momega.values().norm();
  const Eigen::VectorXd jac1 = jacobi_exact_system(grid);
  const auto apply1 = [&](const Eigen::VectorXd& xin, Eigen::VectorXd& yout) {
    FormField x(1, n);
    x.values() = xin;
    yout = d_transpose(apply_mass2_cached(d(x), grid, false)).values();
  };
  auto out1 = pcg(apply1, rhs1.values(), rho1.values(), jac1, tol_solve,
                  floor1, max_iter);
  const FormField exact = d(rho1);

  // coexact part: substitute sigma = M3 rho2 and solve
  // d2 M2^{-1} d2^T sigma = d2 omega
  FormField sigma(3, n);
  const FormField rhs2 = d(omega);
  const double floor2 = 1e-13 * n * omega.values().norm();
  const Eigen::VectorXd jac2 = jacobi_coexact_system(grid);
  const auto apply2 = [&](const Eigen::VectorXd& xin, Eigen::VectorXd& yout) {
    FormField x(3, n);
    x.values() = xin;
    yout = d(apply_mass2_cached(d_transpose(x), grid, true)).values();
  };
  auto out2 = pcg(apply2, rhs2.values(), sigma.values(), jac2, tol_solve,
                  floor2, max_iter);
  const FormField coexact = apply_mass2_cached(d_transpose(sigma), grid, true);

  FormField harmonic = omega;
  harmonic -= exact;
  harmonic -= coexact;

  const double omega_norm = norm(omega, grid);
  double residual = 0.0;
  if (omega_norm > 0.0) {
    residual = (norm(d(harmonic), grid) + norm(d_star(harmonic, grid), grid)) /
               omega_norm;
  }
  return HodgeSplit{std::move(harmonic), exact, coexact, residual,
                    out1.iterations + out2.iterations};
}

// ---------------------------------------------------------------------------
// triple fields
// ---------------------------------------------------------------------------

TripleField::TripleField(Grid4 grid, std::vector<AlmostComplex4> j_field)
    : grid_(std::move(grid)), j_(std::move(j_field)) {
  if (static_cast<long>(j_.size()) != grid_.vertex_count()) {
    throw BadDimension("TripleField: J field size != n^4");
  }
  omega_.reserve(j_.size());
  for (long v = 0; v < grid_.vertex_count(); ++v) {
    omega_.push_back(reconstruct_omega(grid_.vertex_metric(v), j_[v]));
  }
}

TripleField::TripleField(Grid4 grid, std::vector<AlmostComplex4> j,
                         std::vector<TwoForm4> omega)
    : grid_(std::move(grid)), j_(std::move(j)), omega_(std::move(omega)) {}

FormField TripleField::assemble_omega() const {
  const int n = grid_.n();
  FormField out(2, n);
  const auto& combos = cell_combos(2);
  for (int c = 0; c < 6; ++c) {
    const int a = combos[c][0];
    const int b = combos[c][1];
    const long sa = axis_stride(n, a);
    const long sb = axis_stride(n, b);
    for_each_cell(n, [&](long flat, const int* idx) {
      long diag = flat + (idx[a] == n - 1 ? sa * (1 - n) : sa);
      diag += (idx[b] == n - 1 ? sb * (1 - n) : sb);
      out.at(c, flat) =
          0.5 * (omega_[flat].components()[c] + omega_[diag].components()[c]);
    });
  }
  return out;
}

bool TripleField::all_valid(double tol) const {
  for (long v = 0; v < grid_.vertex_count(); ++v) {
    const HermitianTriple t{grid_.vertex_metric(v), j_[v], omega_[v]};
    if (!t.valid(tol)) return false;
  }
  return true;
}

TripleField TripleField::conjugated() const {
  std::vector<AlmostComplex4> j;
  std::vector<TwoForm4> omega;
  j.reserve(j_.size());
  omega.reserve(omega_.size());
  for (size_t v = 0; v < j_.size(); ++v) {
    j.push_back(j_[v].negated());
    omega.push_back(-omega_[v]);
  }
  return TripleField(grid_, std::move(j), std::move(omega));
}

std::array<double, 6> periods_of(const FormField& two_form) {
  if (two_form.degree() != 2) throw BadDegree("periods_of: degree-2 field");
  const int n = two_form.n();
  const double h2 = 1.0 / (static_cast<double>(n) * n);
  const auto& combos = cell_combos(2);
  std::array<double, 6> periods{};
  for (int c = 0; c < 6; ++c) {
    const long sa = axis_stride(n, combos[c][0]);
    const long sb = axis_stride(n, combos[c][1]);
    double sum = 0.0;
    for (int ia = 0; ia < n; ++ia) {
      for (int ib = 0; ib < n; ++ib) {
        sum += two_form.at(c, ia * sa + ib * sb);
      }
    }
    periods[c] = sum * h2;
  }
  return periods;
}

CohomologyClass2 tau(const TripleField& field, double tol_solve,
                     double tol_ps) {
  const FormField omega = field.assemble_omega();
  const HodgeSplit split = hodge_decompose(omega, field.grid(), tol_solve);
  CohomologyClass2 cls{};
  cls.periods = periods_of(split.harmonic);
  cls.max_abs_period = 0.0;
  for (double p : cls.periods) {
    cls.max_abs_period = std::max(cls.max_abs_period, std::abs(p));
  }
  cls.pseudo_symplectic = cls.max_abs_period > tol_ps;
  return cls;
}

double wedge_integral(const FormField& a, const FormField& b,
                      const Grid4& grid) {
  if (a.degree() != 2 || b.degree() != 2) {
    throw BadDegree("wedge_integral: degree-2 fields required");
  }
  check_grid_match(a, grid);
  check_grid_match(b, grid);
  const Mat6 pairing = wedge_pairing_2();
  const double h4 = std::pow(grid.spacing(), 4);
  double total = 0.0;
  for (long v = 0; v < grid.vertex_count(); ++v) {
    Vec6 x, y;
    for (int c = 0; c < 6; ++c) {
      x[c] = a.at(c, v);
      y[c] = b.at(c, v);
    }
    total += x.dot(pairing * y);
  }
  return total * h4;
}

TripleField conformal_rescale(const TripleField& field, const FormField& f) {
  if (f.degree() != 0) {
    throw BadDegree("conformal_rescale: scalar field required");
  }
  const Grid4& g = field.grid();
  if (f.n() != g.n()) throw BadDimension("conformal_rescale: grid mismatch");
  std::vector<Metric4> metrics;
  std::vector<AlmostComplex4> j;
  metrics.reserve(g.vertex_count());
  j.reserve(g.vertex_count());
  for (long v = 0; v < g.vertex_count(); ++v) {
    const double factor = std::exp(f.at(0, v));
    metrics.push_back(Metric4::spd(factor * g.vertex_metric(v).matrix()));
    j.push_back(field.J_at(v));
  }
  return TripleField(Grid4(g.n(), std::move(metrics), g.orientation()),
                     std::move(j));
}

PositivityResult positivity_integral(const TripleField& field,
                                     const FormField& f, double tol_solve) {
  if (f.degree() != 0) throw BadDegree("positivity_integral: scalar field");
  const Grid4& grid = field.grid();
  if (f.n() != grid.n()) {
    throw BadDimension("positivity_integral: grid mismatch");
  }
  const int n = grid.n();
  const FormField omega = field.assemble_omega();
  const HodgeSplit split = hodge_decompose(omega, grid, tol_solve);

  const Mat6 pairing = wedge_pairing_2();
  const double h4 = std::pow(grid.spacing(), 4);
  double value = 0.0;
  double min_pointwise = std::numeric_limits<double>::infinity();
  double min_f = std::numeric_limits<double>::infinity();
  for_each_cell(n, [&](long v, const int* idx) {
    const long diag =
        grid.flat_index(idx[0] + 1, idx[1] + 1, idx[2] + 1, idx[3] + 1);
    const double fv = 0.5 * (f.at(0, v) + f.at(0, diag));
    Vec6 x, y;
    for (int c = 0; c < 6; ++c) {
      x[c] = omega.at(c, v);
      y[c] = split.harmonic.at(c, v);
    }
    value += std::exp(fv) * x.dot(pairing * y) * h4;
    const Mat6 gram = metric_gram_2(grid.voxel_metric(v));
    min_pointwise = std::min(min_pointwise, x.dot(gram * y));
    min_f = std::min(min_f, fv);
  });

  const double harmonic_square =
      wedge_integral(split.harmonic, split.harmonic, grid);
  return PositivityResult{value, harmonic_square, min_pointwise,
                          std::exp(min_f) * harmonic_square};
}

std::pair<double, double> dstar_omega_diagnostic(const TripleField& field) {
  const FormField omega = field.assemble_omega();
  const Grid4& grid = field.grid();
  return {norm(d(omega), grid), norm(d_star(omega, grid), grid)};
}

HarmonicNorm harmonic_norm(const TripleField& field, double tol_solve) {
  const FormField omega = field.assemble_omega();
  const HodgeSplit split = hodge_decompose(omega, field.grid(), tol_solve);
  const double square =
      wedge_integral(split.harmonic, split.harmonic, field.grid());
  if (square < -tol_solve) {
    throw NegativeSquare("harmonic_norm: negative wedge square");
  }
  return HarmonicNorm{std::sqrt(std::max(0.0, square)), square};
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

constexpr char kFormMagicText[] = "ak4-form 1";
constexpr char kGridMagicText[] = "ak4-grid 1";
constexpr char kFormMagicBin[] = {'A', 'K', '4', 'F'};
constexpr char kGridMagicBin[] = {'A', 'K', '4', 'G'};

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void write_f64(std::ostream& out, double x) {
  write_u64(out, std::bit_cast<std::uint64_t>(x));
}

double read_f64(std::istream& in) {
  return std::bit_cast<double>(read_u64(in));
}

}  // namespace

void save_form(std::ostream& out, const FormField& f, int orientation,
               bool binary) {
  const long total = cell_combo_count(f.degree()) * f.cells_per_combo();
  if (binary) {
    out.write(kFormMagicBin, 4);
    write_u32(out, 1);
    write_u32(out, static_cast<std::uint32_t>(f.degree()));
    write_u32(out, static_cast<std::uint32_t>(f.n()));
    write_u32(out, orientation >= 0 ? 1u : 0xffffffffu);
    write_u64(out, static_cast<std::uint64_t>(total));
    for (long i = 0; i < total; ++i) write_f64(out, f.values()[i]);
  } else {
    out << kFormMagicText << "\n"
        << f.degree() << " " << f.n() << " " << (orientation >= 0 ? 1 : -1)
        << "\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (long i = 0; i < total; ++i) out << f.values()[i] << "\n";
  }
  if (!out) throw IoError("save_form: write failed");
}

std::pair<FormField, int> load_form(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in) throw IoError("load_form: truncated header");
  if (std::memcmp(magic, kFormMagicBin, 4) == 0) {
    const std::uint32_t version = read_u32(in);
    if (version != 1) throw IoError("load_form: unsupported version");
    const int degree = static_cast<int>(read_u32(in));
    const int n = static_cast<int>(read_u32(in));
    const std::uint32_t orient_raw = read_u32(in);
    const std::uint64_t total = read_u64(in);
    FormField f(degree, n);
    if (total != static_cast<std::uint64_t>(f.values().size())) {
      throw IoError("load_form: value count mismatch");
    }
    for (std::uint64_t i = 0; i < total; ++i) f.values()[i] = read_f64(in);
    if (!in) throw IoError("load_form: truncated values");
    return {std::move(f), orient_raw == 1u ? 1 : -1};
  }
  // text variant: re-read the full first line
  std::string rest;
  std::getline(in, rest);
  const std::string first = std::string(magic, 4) + rest;
  if (first != kFormMagicText) throw IoError("load_form: bad magic");
  int degree = -1, n = -1, orientation = 1;
  in >> degree >> n >> orientation;
  if (!in) throw IoError("load_form: bad header");
  FormField f(degree, n);
  for (long i = 0; i < f.values().size(); ++i) in >> f.values()[i];
  if (!in) throw IoError("load_form: truncated values");
  return {std::move(f), orientation >= 0 ? 1 : -1};
}

void save_grid(std::ostream& out, const Grid4& grid, bool binary) {
  const long count = grid.vertex_count();
  if (binary) {
    out.write(kGridMagicBin, 4);
    write_u32(out, 1);
    write_u32(out, static_cast<std::uint32_t>(grid.n()));
    write_u32(out, grid.orientation() >= 0 ? 1u : 0xffffffffu);
    write_u64(out, static_cast<std::uint64_t>(count) * 16);
    for (long v = 0; v < count; ++v) {
      const Mat4& m = grid.vertex_metric(v).matrix();
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) write_f64(out, m(r, c));
    }
  } else {
    out << kGridMagicText << "\n"
        << grid.n() << " " << grid.orientation() << "\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (long v = 0; v < count; ++v) {
      const Mat4& m = grid.vertex_metric(v).matrix();
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) out << m(r, c) << "\n";
    }
  }
  if (!out) throw IoError("save_grid: write failed");
}

Grid4 load_grid(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in) throw IoError("load_grid: truncated header");
  int n = -1, orientation = 1;
  std::vector<Metric4> metrics;
  if (std::memcmp(magic, kGridMagicBin, 4) == 0) {
    const std::uint32_t version = read_u32(in);
    if (version != 1) throw IoError("load_grid: unsupported version");
    n = static_cast<int>(read_u32(in));
    orientation = read_u32(in) == 1u ? 1 : -1;
    const std::uint64_t total = read_u64(in);
    long count = 1;
    for (int i = 0; i < 4; ++i) count *= n;
    if (total != static_cast<std::uint64_t>(count) * 16) {
      throw IoError("load_grid: value count mismatch");
    }
    metrics.reserve(count);
    for (long v = 0; v < count; ++v) {
      Mat4 m;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m(r, c) = read_f64(in);
      metrics.push_back(Metric4::spd(m));
    }
    if (!in) throw IoError("load_grid: truncated values");
  } else {
    std::string rest;
    std::getline(in, rest);
    if (std::string(magic, 4) + rest != kGridMagicText) {
      throw IoError("load_grid: bad magic");
    }
    in >> n >> orientation;
    if (!in) throw IoError("load_grid: bad header");
    long count = 1;
    for (int i = 0; i < 4; ++i) count *= n;
    metrics.reserve(count);
    for (long v = 0; v < count; ++v) {
      Mat4 m;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) in >> m(r, c);
      metrics.push_back(Metric4::spd(m));
    }
    if (!in) throw IoError("load_grid: truncated values");
  }
  return Grid4(n, std::move(metrics), orientation);
}

void save_form_file(const std::string& path, const FormField& f,
                    int orientation, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("save_form_file: cannot open " + path);
  save_form(out, f, orientation, binary);
}

std::pair<FormField, int> load_form_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_form_file: cannot open " + path);
  return load_form(in);
}

void save_grid_file(const std::string& path, const Grid4& grid, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("save_grid_file: cannot open " + path);
  save_grid(out, grid, binary);
}

Grid4 load_grid_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_grid_file: cannot open " + path);
  return load_grid(in);
}

}  // namespace ak4
