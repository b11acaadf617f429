#pragma once

#include "curtain/common.hpp"
#include "curtain/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace curtain {

/// Non-degenerate simplex in R^d whose d+1 vertices (columns) sum to zero.
template <typename Scalar>
class Simplex {
 public:
  using Vec = VectorX<Scalar>;
  using Mat = MatrixX<Scalar>;

  Simplex() = default;

  /// Validates d+1 points in R^d. With `recenter` the points are translated
  /// so that their barycenter is the origin; otherwise an off-center input
  /// is rejected.
  static Simplex create(Mat vertices, bool recenter = false) {
    const auto d = vertices.rows();
    if (d < 1 || vertices.cols() != d + 1)
      throw Error(ErrorCode::InvalidArgument, "a simplex in R^d needs exactly d+1 vertices");
    const Vec bary = vertices.rowwise().mean();
    const Scalar scale = std::max(Scalar(1), vertices.cwiseAbs().maxCoeff());
    if ((bary * Scalar(d + 1)).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
      if (!recenter) throw Error(ErrorCode::OffCenter, "vertex barycenter is not the origin");
      vertices.colwise() -= bary;
    }
    Simplex s;
    s.vertices_ = std::move(vertices);
    const Scalar mag = s.vertices_.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i <= d; ++i) {
      if (std::abs(s.facet_matrix(i).determinant()) <= Scalar(1e-12) * std::pow(mag, Scalar(d)))
        throw Error(ErrorCode::DegenerateSimplex, "vertices omitting index " + std::to_string(i) +
                                                      " are linearly dependent");
    }
    return s;
  }

  /// Regular simplex with circumradius 1 centered at the origin. The first
  /// vertex is the apex e_d; the rest are the regular (d-1)-simplex lowered
  /// to height -1/d and shrunk to circumradius sqrt(1 - 1/d^2).
  static Simplex regular(Eigen::Index d) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
    return create(regular_vertices(d));
  }

  Eigen::Index dim() const { return vertices_.rows(); }
  Eigen::Index size() const { return vertices_.cols(); }
  const Mat& vertices() const { return vertices_; }
  auto vertex(Eigen::Index i) const { return vertices_.col(i); }

  /// Matrix whose columns are the vertices other than `omit`; spans cone(F_omit).
  Mat facet_matrix(Eigen::Index omit) const {
    Mat m(dim(), dim());
    for (Eigen::Index j = 0, k = 0; j < size(); ++j)
      if (j != omit) m.col(k++) = vertices_.col(j);
    return m;
  }

  Vec barycentric(const Vec& x) const {
    const auto d = dim();
    Mat a(d + 1, d + 1);
    a.topRows(d) = vertices_;
    a.row(d).setOnes();
    Vec rhs(d + 1);
    rhs << x, Scalar(1);
    return a.partialPivLu().solve(rhs);
  }

  bool contains(const Vec& x, Scalar tol = Scalar(1e-12)) const {
    return barycentric(x).minCoeff() >= -tol;
  }

  Scalar volume() const {
    const auto d = dim();
    Mat edges = vertices_.rightCols(d).colwise() - vertices_.col(0);
    return std::abs(edges.determinant()) / factorial(d);
  }

  /// Largest vertex norm.
  Scalar circumradius() const { return vertices_.colwise().norm().maxCoeff(); }

  Scalar diameter() const {
    Scalar best = 0;
    for (Eigen::Index i = 0; i < size(); ++i)
      for (Eigen::Index j = i + 1; j < size(); ++j)
        best = std::max(best, (vertices_.col(i) - vertices_.col(j)).norm());
    return best;
  }

  Simplex scaled(Scalar factor) const {
    Simplex s = *this;
    s.vertices_ *= factor;
    return s;
  }

  bool is_regular(Scalar rel_tol = Scalar(1e-9)) const {
    const Scalar ref = (vertices_.col(0) - vertices_.col(1)).norm();
    for (Eigen::Index i = 0; i < size(); ++i)
      for (Eigen::Index j = i + 1; j < size(); ++j)
        if (std::abs((vertices_.col(i) - vertices_.col(j)).norm() - ref) > rel_tol * ref) return false;
    return true;
  }

  static Scalar factorial(Eigen::Index n) {
    Scalar f = 1;
    for (Eigen::Index k = 2; k <= n; ++k) f *= Scalar(k);
    return f;
  }

 private:
  static Mat regular_vertices(Eigen::Index d) {
    if (d == 1) {
      Mat v(1, 2);
      v << Scalar(-1), Scalar(1);
      return v;
    }
    const Mat base = regular_vertices(d - 1);
    const Scalar shrink = std::sqrt(Scalar(1) - Scalar(1) / (Scalar(d) * Scalar(d)));
    Mat v = Mat::Zero(d, d + 1);
    v(d - 1, 0) = Scalar(1);
    v.block(0, 1, d - 1, d) = shrink * base;
    v.block(d - 1, 1, 1, d).setConstant(Scalar(-1) / Scalar(d));
    return v;
  }

  Mat vertices_;
};

/// Cone {apex + sum lambda_j g_j : lambda_j >= 0}; generators are columns.
template <typename Scalar>
struct SimplicialCone {
  VectorX<Scalar> apex;
  MatrixX<Scalar> generators;

  bool full_dimensional() const { return generators.rows() == generators.cols(); }
};

/// Inward half-spaces whose intersection is the cone: the rows of the inverse
/// generator matrix, anchored at the apex.
template <typename Scalar>
std::vector<HalfSpace<Scalar>> cone_halfspaces(const SimplicialCone<Scalar>& c) {
  const auto d = c.generators.rows();
  if (!c.full_dimensional()) throw Error(ErrorCode::DegenerateCone, "cone is not full-dimensional");
  Eigen::FullPivLU<MatrixX<Scalar>> lu(c.generators);
  const Scalar mag = std::max(c.generators.cwiseAbs().maxCoeff(), Scalar(1e-300));
  if (std::abs(lu.determinant()) <= Scalar(1e-13) * std::pow(mag, Scalar(d)))
    throw Error(ErrorCode::DegenerateCone, "cone generators are linearly dependent");
  const MatrixX<Scalar> inv = lu.inverse();
  std::vector<HalfSpace<Scalar>> out;
  out.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    VectorX<Scalar> n = inv.row(k).transpose();
    out.push_back({n, n.dot(c.apex)});
  }
  return out;
}

/// Complete fan of d+1 simplicial cones with a common apex. Cone i is spanned
/// by the generators other than i. The generators satisfy the positive
/// dependence sum_j weight_j * g_j = 0, which makes the point-location rule
/// a normalized argmin.
///
/// The face fan of a simplex has unit weights and generators a_j. The fan
/// cone(x, F_i) of a point x inside the simplex has generators a_j - x and
/// the barycentric coordinates of x as weights.
template <typename Scalar>
class Fan {
 public:
  using Vec = VectorX<Scalar>;
  using Mat = MatrixX<Scalar>;

  Fan() = default;

  Fan(Vec apex, Mat generators, Vec weights) : apex_(std::move(apex)), gens_(std::move(generators)), weights_(std::move(weights)) {
    const auto d = gens_.rows();
    if (gens_.cols() != d + 1 || weights_.size() != d + 1)
      throw Error(ErrorCode::InvalidArgument, "fan needs d+1 generators and weights");
    weights_.maxCoeff(&pivot_);
    Mat rest(d, d);
    for (Eigen::Index j = 0, k = 0; j <= d; ++j)
      if (j != pivot_) rest.col(k++) = gens_.col(j);
    Eigen::FullPivLU<Mat> lu(rest);
    if (!lu.isInvertible()) throw Error(ErrorCode::DegenerateCone, "fan generators are degenerate");
    solve_ = lu.inverse();
  }

  Eigen::Index dim() const { return gens_.rows(); }
  Eigen::Index size() const { return gens_.cols(); }
  const Vec& apex() const { return apex_; }
  const Mat& generators() const { return gens_; }
  const Vec& weights() const { return weights_; }

  Fan translated_to(const Vec& apex) const {
    Fan f = *this;
    f.apex_ = apex;
    return f;
  }

  SimplicialCone<Scalar> cone(Eigen::Index i) const {
    Mat g(dim(), dim());
    for (Eigen::Index j = 0, k = 0; j < size(); ++j)
      if (j != i) g.col(k++) = gens_.col(j);
    return {apex_, g};
  }

  /// Normalized coefficients of `offset` (a vector from the apex): the unique
  /// representation offset = sum_j t_j g_j whose ratios t_j / weight_j have
  /// minimum zero. Also returns the scale used by the tie tolerance.
  Vec coefficients(const Vec& offset, Scalar* tie_scale = nullptr) const {
    const auto d = dim();
    const Vec partial = solve_ * offset;
    Vec ratio(d + 1);
    for (Eigen::Index j = 0, k = 0; j <= d; ++j)
      ratio(j) = (j == pivot_) ? Scalar(0) : partial(k++) / weights_(j);
    if (tie_scale) *tie_scale = Scalar(1) + ratio.cwiseAbs().maxCoeff();
    return ratio.array() - ratio.minCoeff();
  }

  /// Indices of the maximal cones containing apex + offset.
  std::vector<int> locate(const Vec& offset) const {
    Scalar scale = 1;
    const Vec t = coefficients(offset, &scale);
    std::vector<int> out;
    for (Eigen::Index i = 0; i < t.size(); ++i)
      if (std::abs(t(i)) <= tie_tolerance * scale) out.push_back(static_cast<int>(i));
    return out;
  }

  /// Cone that owns apex + offset under the lowest-index tie policy.
  int owner(const Vec& offset) const {
    Scalar scale = 1;
    const Vec t = coefficients(offset, &scale);
    for (Eigen::Index i = 0; i < t.size(); ++i)
      if (std::abs(t(i)) <= tie_tolerance * scale) return static_cast<int>(i);
    return 0;
  }

  static constexpr Scalar tie_tolerance = Scalar(1e-10);

 private:
  Vec apex_;
  Mat gens_;
  Vec weights_;
  Eigen::Index pivot_{0};
  Mat solve_;
};

/// Face fan {cone(F_i)} of the simplex, apex at the origin.
template <typename Scalar>
Fan<Scalar> face_fan(const Simplex<Scalar>& s) {
  return Fan<Scalar>(VectorX<Scalar>::Zero(s.dim()), s.vertices(), VectorX<Scalar>::Ones(s.size()));
}

/// Fan {cone(x, F_i)} with apex x in the interior of the simplex.
template <typename Scalar>
Fan<Scalar> apex_fan(const Simplex<Scalar>& s, const VectorX<Scalar>& x) {
  const VectorX<Scalar> beta = s.barycentric(x);
  if (beta.minCoeff() <= Scalar(0)) throw Error(ErrorCode::PointOutside, "apex must lie in the open simplex");
  return Fan<Scalar>(x, s.vertices().colwise() - x, beta);
}

/// Set of cone indices of the fan, translated to `apex`, containing v.
template <typename Scalar>
std::vector<int> classify_point(const Fan<Scalar>& fan, const VectorX<Scalar>& apex, const VectorX<Scalar>& v) {
  return fan.locate(v - apex);
}

/// Parallelotope origin + sum_j [0, 1] g_j.
template <typename Scalar>
struct Parallelotope {
  VectorX<Scalar> origin;
  MatrixX<Scalar> generators;

  Scalar volume() const { return std::abs(generators.determinant()); }
};

/// Minkowski sum [0,a_0] + ... + [0,a_d] of the simplex vertices, with its
/// standard cubulation into the parallelotopes C_i spanned by {a_j}_{j != i}.
template <typename Scalar>
struct DeltaZonotope {
  Simplex<Scalar> simplex;
  ConvexPolytope<Scalar> polytope;
  std::vector<Parallelotope<Scalar>> cells;
  Scalar volume{0};

  Eigen::Index dim() const { return simplex.dim(); }
  const MatrixX<Scalar>& vertices() const { return polytope.vertices(); }
  const std::vector<HalfSpace<Scalar>>& facets() const { return polytope.halfspaces(); }
  bool contains(const VectorX<Scalar>& x, Scalar tol = Scalar(-1)) const { return polytope.contains(x, tol); }

  Scalar diameter() const {
    Scalar best = 0;
    const auto& v = vertices();
    for (Eigen::Index i = 0; i < v.cols(); ++i)
      for (Eigen::Index j = i + 1; j < v.cols(); ++j) best = std::max(best, (v.col(i) - v.col(j)).norm());
    return best;
  }

  /// Coordinates t in [0,1]^{d+1} with min t = 0 such that x = sum t_j a_j.
  /// A point lies on the front face of C_i exactly when t_i = 0 and max t = 1.
  VectorX<Scalar> cube_coordinates(const VectorX<Scalar>& x) const {
    return face_fan(simplex).coefficients(x);
  }
};

/// Unit normal of the hyperplane spanned by the vertices other than i and j.
template <typename Scalar>
VectorX<Scalar> pair_normal(const Simplex<Scalar>& s, Eigen::Index i, Eigen::Index j) {
  const auto d = s.dim();
  if (d == 1) return VectorX<Scalar>::Ones(1);
  MatrixX<Scalar> rows(d - 1, d);
  for (Eigen::Index k = 0, r = 0; k < s.size(); ++k)
    if (k != i && k != j) rows.row(r++) = s.vertex(k).transpose();
  Eigen::FullPivLU<MatrixX<Scalar>> lu(rows);
  VectorX<Scalar> n = lu.kernel().col(0);
  return n.normalized();
}

template <typename Scalar>
DeltaZonotope<Scalar> build_zonotope(const Simplex<Scalar>& s) {
  const auto d = s.dim();
  if (d > 6) throw Error(ErrorCode::DimensionTooLarge, "exact zonotope construction is limited to d <= 6");
  const auto m = s.size();

  // Facets come in parallel pairs, one pair per (d-1)-subset of generators.
  std::vector<HalfSpace<Scalar>> facets;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const VectorX<Scalar> n = pair_normal(s, i, j);
      Scalar h = 0;
      for (Eigen::Index k = 0; k < m; ++k) h += std::max(Scalar(0), n.dot(s.vertex(k)));
      facets.push_back({-n, -h});
      facets.push_back({n, -h});
    }

  // Subset sums that are extreme: active facet normals of full rank.
  const Scalar tol = Scalar(1e-10) * std::max(Scalar(1), s.vertices().cwiseAbs().maxCoeff());
  std::vector<VectorX<Scalar>> verts;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    VectorX<Scalar> p = VectorX<Scalar>::Zero(d);
    for (Eigen::Index k = 0; k < m; ++k)
      if (mask & (1u << k)) p += s.vertex(k);
    std::vector<Eigen::Index> active;
    for (std::size_t f = 0; f < facets.size(); ++f)
      if (std::abs(facets[f].signed_distance(p)) <= tol) active.push_back(static_cast<Eigen::Index>(f));
    if (static_cast<Eigen::Index>(active.size()) < d) continue;
    MatrixX<Scalar> a(static_cast<Eigen::Index>(active.size()), d);
    for (std::size_t k = 0; k < active.size(); ++k)
      a.row(static_cast<Eigen::Index>(k)) = facets[static_cast<std::size_t>(active[k])].normal.transpose();
    if (detail::numeric_rank(a, 1e-9) == d) verts.push_back(p);
  }
  MatrixX<Scalar> vm(d, static_cast<Eigen::Index>(verts.size()));
  for (std::size_t k = 0; k < verts.size(); ++k) vm.col(static_cast<Eigen::Index>(k)) = verts[k];

  DeltaZonotope<Scalar> z;
  z.simplex = s;
  z.polytope = ConvexPolytope<Scalar>::from_representation(vm, std::move(facets));
  for (Eigen::Index i = 0; i < m; ++i) z.cells.push_back({VectorX<Scalar>::Zero(d), s.facet_matrix(i)});
  z.volume = Scalar(m) * std::abs(s.facet_matrix(0).determinant());
  return z;
}

/// Intersection of the slabs H_{i,j} between the hyperplanes orthogonal to
/// the edge a_i - a_j through a_i and through a_j.
template <typename Scalar>
ConvexPolytope<Scalar> slab_intersection(const Simplex<Scalar>& s) {
  std::vector<HalfSpace<Scalar>> hs;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    for (Eigen::Index j = i + 1; j < s.size(); ++j) {
      const VectorX<Scalar> e = s.vertex(i) - s.vertex(j);
      const Scalar w = std::abs(s.vertex(i).dot(e));
      hs.push_back({-e, -w});
      hs.push_back({e, -w});
    }
  return ConvexPolytope<Scalar>::from_halfspaces(std::move(hs), s.dim());
}

/// Largest distance between matched vertices of two vertex sets, or +inf
/// when the counts differ. Matching is greedy nearest-neighbour; with
/// well-separated vertices it coincides with the optimal pairing.
template <typename Scalar>
Scalar vertex_set_distance(const MatrixX<Scalar>& a, const MatrixX<Scalar>& b) {
  if (a.cols() != b.cols()) return std::numeric_limits<Scalar>::infinity();
  std::vector<bool> used(static_cast<std::size_t>(b.cols()), false);
  Scalar worst = 0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    Eigen::Index arg = -1;
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const Scalar dist = (a.col(i) - b.col(j)).norm();
      if (dist < best) {
        best = dist;
        arg = j;
      }
    }
    used[static_cast<std::size_t>(arg)] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

template <typename Scalar>
struct DualDifferenceBody {
  ConvexPolytope<Scalar> body;     // intersection of the slabs
  Scalar lambda{0};                // body = lambda * (Delta - Delta)^polar
  Scalar vertex_discrepancy{0};    // against the zonotope vertex set
};

/// Slab description of R_Delta for a regular simplex, with the scale lambda
/// relating it to the polar of the difference body.
template <typename Scalar>
DualDifferenceBody<Scalar> dual_difference_body(const Simplex<Scalar>& s) {
  if (!s.is_regular()) throw Error(ErrorCode::NotRegular, "simplex is not regular");
  DualDifferenceBody<Scalar> out;
  out.body = slab_intersection(s);
  // Every slab half-width <a_i, a_i - a_j> coincides for a regular simplex.
  out.lambda = std::abs(s.vertex(0).dot(s.vertex(0) - s.vertex(1)));
  const auto z = build_zonotope(s);
  out.vertex_discrepancy = vertex_set_distance(out.body.vertices(), z.vertices());
  return out;
}

/// Volume of conv({x} u F_i); equals the i-th barycentric coordinate of x
/// times the simplex volume.
template <typename Scalar>
Scalar pyramid_volume(const Simplex<Scalar>& s, const VectorX<Scalar>& x, Eigen::Index i) {
  if (!s.contains(x)) throw Error(ErrorCode::PointOutside, "apex lies outside the simplex");
  MatrixX<Scalar> edges = s.facet_matrix(i).colwise() - x;
  return std::abs(edges.determinant()) / Simplex<Scalar>::factorial(s.dim());
}

/// One (d-1)-dimensional cell of a curtain: apex + cone{a_j : j not in {nu, mu}}.
template <typename Scalar>
struct WallCell {
  int nu{0};
  int mu{0};
  SimplicialCone<Scalar> cone;
};

/// Delta-curtain x + cone(dF_1 * dF_2) separating the union of the cones
/// indexed by `part` (side 1) from the union of the remaining cones (side 0).
/// F_1 is spanned by the vertices outside `part`, F_2 by those inside.
template <typename Scalar>
struct Curtain {
  VectorX<Scalar> apex;
  std::vector<int> part;
  std::vector<int> complement;
  std::vector<WallCell<Scalar>> walls;

  const std::vector<int>& face1() const { return complement; }
  const std::vector<int>& face2() const { return part; }
};

template <typename Scalar>
Curtain<Scalar> curtain_from_partition(const Simplex<Scalar>& s, const VectorX<Scalar>& apex, std::vector<int> part) {
  const int m = static_cast<int>(s.size());
  std::sort(part.begin(), part.end());
  part.erase(std::unique(part.begin(), part.end()), part.end());
  for (int p : part)
    if (p < 0 || p >= m) throw Error(ErrorCode::InvalidArgument, "partition index out of range");
  if (part.empty() || static_cast<int>(part.size()) == m)
    throw Error(ErrorCode::TrivialPartition, "both sides of the partition must be non-empty");
  Curtain<Scalar> c;
  c.apex = apex;
  c.part = part;
  for (int k = 0; k < m; ++k)
    if (!std::binary_search(part.begin(), part.end(), k)) c.complement.push_back(k);
  for (int nu : c.part)
    for (int mu : c.complement) {
      MatrixX<Scalar> g(s.dim(), s.dim() - 1);
      for (int k = 0, col = 0; k < m; ++k)
        if (k != nu && k != mu) g.col(col++) = s.vertex(k);
      c.walls.push_back({std::min(nu, mu), std::max(nu, mu), {apex, g}});
    }
  std::sort(c.walls.begin(), c.walls.end(),
            [](const auto& a, const auto& b) { return std::pair(a.nu, a.mu) < std::pair(b.nu, b.mu); });
  return c;
}

/// Piecewise linear embedding of the standard simplex onto the front face of
/// the unit cube, sending the barycenter a_I of each face to the cube vertex b_I.
template <typename Scalar>
VectorX<Scalar> front_face_map(const VectorX<Scalar>& t) {
  const auto n = t.size();
  if (n < 1 || t.minCoeff() < Scalar(-1e-12) || std::abs(t.sum() - Scalar(1)) > Scalar(1e-12))
    throw Error(ErrorCode::InvalidBarycentric, "coordinates must be nonnegative and sum to 1");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return t(a) > t(b); });
  VectorX<Scalar> y = VectorX<Scalar>::Zero(n);
  Scalar weight_above = 0;
  // y_{sigma(k)} = sum_{l >= k} c_l with c_l = l (t_{sigma(l)} - t_{sigma(l+1)}).
  for (Eigen::Index k = n; k >= 1; --k) {
    const Scalar next = (k == n) ? Scalar(0) : std::max(Scalar(0), t(order[static_cast<std::size_t>(k)]));
    const Scalar cur = std::max(Scalar(0), t(order[static_cast<std::size_t>(k - 1)]));
    weight_above += Scalar(k) * (cur - next);
    y(order[static_cast<std::size_t>(k - 1)]) = weight_above;
  }
  return y;
}

/// Composite of front_face_map with y -> sum_j y_j a_j onto R_Delta.
template <typename Scalar>
VectorX<Scalar> zonotope_map(const Simplex<Scalar>& s, const VectorX<Scalar>& t) {
  if (t.size() != s.size()) throw Error(ErrorCode::InvalidArgument, "coordinate count must equal d+1");
  return s.vertices() * front_face_map(t);
}

}  // namespace curtain
