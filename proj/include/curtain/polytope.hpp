#pragma once

#include "curtain/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace curtain {

/// Closed half-space {x : normal . x >= offset}. The normal points inward.
template <typename Scalar>
struct HalfSpace {
  VectorX<Scalar> normal;
  Scalar offset{0};

  Scalar signed_distance(const VectorX<Scalar>& x) const { return normal.dot(x) - offset; }
  bool contains(const VectorX<Scalar>& x, Scalar tol = Scalar(0)) const {
    return signed_distance(x) >= -tol;
  }
  HalfSpace complement() const { return {-normal, -offset}; }
};

namespace detail {

template <typename Derived>
Eigen::Index numeric_rank(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-9) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::FullPivLU<MatrixX<typename Derived::Scalar>> lu(m);
  lu.setThreshold(rel_tol);
  return lu.rank();
}

// Orthonormal basis (columns) of the orthogonal complement of a unit vector.
template <typename Scalar>
MatrixX<Scalar> complement_basis(const VectorX<Scalar>& n) {
  const auto d = n.size();
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(n);
  MatrixX<Scalar> q = qr.householderQ() * MatrixX<Scalar>::Identity(d, d);
  return q.rightCols(d - 1);
}

inline bool next_combination(std::vector<int>& idx, int n) {
  const int k = static_cast<int>(idx.size());
  for (int i = k - 1; i >= 0; --i) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

/// Bounded convex polytope kept in both vertex and facet representation.
///
/// Vertices are stored column-wise. Facet half-spaces are irredundant with
/// unit normals. A polytope with fewer than dim+1 affinely independent
/// vertices is treated as empty (zero volume).
template <typename Scalar>
class ConvexPolytope {
 public:
  using Vec = VectorX<Scalar>;
  using Mat = MatrixX<Scalar>;
  using Half = HalfSpace<Scalar>;

  ConvexPolytope() = default;
  explicit ConvexPolytope(Eigen::Index dim) : dim_(dim), vertices_(dim, 0) {}

  static ConvexPolytope from_vertices(const Mat& points);
  static ConvexPolytope from_halfspaces(std::vector<Half> halfspaces, Eigen::Index dim);
  /// Adopts a known vertex set and a superset of its facet half-spaces.
  static ConvexPolytope from_representation(const Mat& vertices, std::vector<Half> halfspaces);

  Eigen::Index dim() const { return dim_; }
  const Mat& vertices() const { return vertices_; }
  const std::vector<Half>& halfspaces() const { return halfspaces_; }
  Eigen::Index num_vertices() const { return vertices_.cols(); }
  bool empty() const { return vertices_.cols() == 0; }

  Scalar tolerance() const { return tol_; }

  bool contains(const Vec& x, Scalar tol = Scalar(-1)) const {
    if (empty()) return false;
    if (tol < 0) tol = tol_;
    return std::all_of(halfspaces_.begin(), halfspaces_.end(),
                       [&](const Half& h) { return h.contains(x, tol); });
  }

  Vec centroid() const { return vertices_.rowwise().mean(); }

  Vec lower() const { return vertices_.rowwise().minCoeff(); }
  Vec upper() const { return vertices_.rowwise().maxCoeff(); }

  ConvexPolytope translated(const Vec& t) const {
    ConvexPolytope out = *this;
    out.vertices_.colwise() += t;
    for (auto& h : out.halfspaces_) h.offset += h.normal.dot(t);
    return out;
  }

  ConvexPolytope scaled(Scalar s) const {
    ConvexPolytope out = *this;
    out.vertices_ *= s;
    for (auto& h : out.halfspaces_) h.offset *= s;
    out.tol_ *= std::abs(s);
    return out;
  }

  /// Intersection with one half-space; may be empty.
  ConvexPolytope clip(const Half& h) const;

  ConvexPolytope clip(const std::vector<Half>& hs) const {
    ConvexPolytope out = *this;
    for (const auto& h : hs) {
      if (out.empty()) break;
      out = out.clip(h);
    }
    return out;
  }

  /// Volume by coning every facet from the vertex centroid; facet measures
  /// are computed recursively in a chart of the facet hyperplane.
  Scalar volume() const;

 private:
  static Scalar default_tol(const Mat& v) {
    if (v.cols() == 0) return Scalar(1e-12);
    const Scalar diam = (v.rowwise().maxCoeff() - v.rowwise().minCoeff()).maxCoeff();
    const Scalar mag = v.cwiseAbs().maxCoeff();
    return Scalar(1e-10) * std::max(diam, Scalar(1e-3) * mag) + Scalar(1e-300);
  }

  static Mat dedupe(const Mat& v, Scalar tol) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < v.cols(); ++i) {
      bool dup = false;
      for (auto j : keep) {
        if ((v.col(i) - v.col(j)).template lpNorm<Eigen::Infinity>() <= tol) {
          dup = true;
          break;
        }
      }
      if (!dup) keep.push_back(i);
    }
    Mat out(v.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = v.col(keep[k]);
    return out;
  }

  // Indices of vertices lying on the hyperplane of h.
  std::vector<Eigen::Index> incident(const Half& h) const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < vertices_.cols(); ++i)
      if (std::abs(h.signed_distance(vertices_.col(i))) <= tol_) out.push_back(i);
    return out;
  }

  Eigen::Index affine_rank(const std::vector<Eigen::Index>& idx) const {
    if (idx.size() < 2) return 0;
    Mat diff(dim_, static_cast<Eigen::Index>(idx.size()) - 1);
    for (std::size_t k = 1; k < idx.size(); ++k)
      diff.col(static_cast<Eigen::Index>(k) - 1) = vertices_.col(idx[k]) - vertices_.col(idx[0]);
    const Scalar scale = std::max(diff.cwiseAbs().maxCoeff(), Scalar(1e-300));
    return detail::numeric_rank(diff / scale, 1e-9);
  }

  // Drops half-spaces that do not support a facet and duplicates; marks the
  // polytope empty when it is not full-dimensional.
  void normalize();

  Eigen::Index dim_{0};
  Mat vertices_;
  std::vector<Half> halfspaces_;
  Scalar tol_{Scalar(1e-12)};
};

template <typename Scalar>
void ConvexPolytope<Scalar>::normalize() {
  if (vertices_.cols() < dim_ + 1) {
    vertices_.resize(dim_, 0);
    halfspaces_.clear();
    return;
  }
  std::vector<Eigen::Index> all(static_cast<std::size_t>(vertices_.cols()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  if (affine_rank(all) < dim_) {
    vertices_.resize(dim_, 0);
    halfspaces_.clear();
    return;
  }
  std::vector<Half> kept;
  for (const auto& h : halfspaces_) {
    auto inc = incident(h);
    if (static_cast<Eigen::Index>(inc.size()) < dim_ || affine_rank(inc) < dim_ - 1) continue;
    bool dup = false;
    for (const auto& k : kept) {
      if ((k.normal - h.normal).template lpNorm<Eigen::Infinity>() <= Scalar(1e-9) &&
          std::abs(k.offset - h.offset) <= tol_) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(h);
  }
  halfspaces_ = std::move(kept);
}

template <typename Scalar>
ConvexPolytope<Scalar> ConvexPolytope<Scalar>::from_vertices(const Mat& points) {
  ConvexPolytope out(points.rows());
  const auto d = points.rows();
  out.tol_ = default_tol(points);
  Mat pts = dedupe(points, out.tol_);
  if (pts.cols() < d + 1) return out;
  if (d == 1) {
    Eigen::Index lo = 0, hi = 0;
    pts.row(0).minCoeff(&lo);
    pts.row(0).maxCoeff(&hi);
    if (pts(0, hi) - pts(0, lo) <= out.tol_) return out;
    out.vertices_.resize(1, 2);
    out.vertices_ << pts(0, lo), pts(0, hi);
    out.halfspaces_ = {Half{Vec::Constant(1, 1), pts(0, lo)}, Half{Vec::Constant(1, -1), -pts(0, hi)}};
    return out;
  }
  const int n = static_cast<int>(pts.cols());
  if (detail::binomial(n, static_cast<int>(d)) > 5e6)
    throw Error(ErrorCode::DimensionTooLarge, "too many points for brute-force hull");

  std::vector<Half> facets;
  std::vector<int> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  do {
    Mat diff(d - 1, d);
    for (Eigen::Index k = 1; k < d; ++k) diff.row(k - 1) = (pts.col(idx[k]) - pts.col(idx[0])).transpose();
    Eigen::FullPivLU<Mat> lu(diff);
    lu.setThreshold(1e-10);
    if (lu.rank() < d - 1) continue;
    Vec normal = lu.kernel().col(0);
    normal.normalize();
    Scalar offset = normal.dot(pts.col(idx[0]));
    Eigen::Array<Scalar, Eigen::Dynamic, 1> s = (pts.transpose() * normal).array() - offset;
    if (s.minCoeff() >= -out.tol_) {
    } else if (s.maxCoeff() <= out.tol_) {
      normal = -normal;
      offset = -offset;
    } else {
      continue;
    }
    facets.push_back(Half{normal, offset});
  } while (detail::next_combination(idx, n));

  // Extreme points are those whose active facet normals span R^d.
  std::vector<Eigen::Index> extreme;
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    std::vector<Vec> active;
    for (const auto& h : facets)
      if (std::abs(h.signed_distance(pts.col(i))) <= out.tol_) active.push_back(h.normal);
    if (static_cast<Eigen::Index>(active.size()) < d) continue;
    Mat a(static_cast<Eigen::Index>(active.size()), d);
    for (std::size_t k = 0; k < active.size(); ++k) a.row(static_cast<Eigen::Index>(k)) = active[k].transpose();
    if (detail::numeric_rank(a, 1e-9) == d) extreme.push_back(i);
  }
  out.vertices_.resize(d, static_cast<Eigen::Index>(extreme.size()));
  for (std::size_t k = 0; k < extreme.size(); ++k) out.vertices_.col(static_cast<Eigen::Index>(k)) = pts.col(extreme[k]);
  out.halfspaces_ = std::move(facets);
  out.normalize();
  return out;
}

template <typename Scalar>
ConvexPolytope<Scalar> ConvexPolytope<Scalar>::from_halfspaces(std::vector<Half> hs, Eigen::Index dim) {
  ConvexPolytope out(dim);
  for (auto& h : hs) {
    const Scalar n = h.normal.norm();
    if (n <= Scalar(0)) throw Error(ErrorCode::InvalidArgument, "zero half-space normal");
    h.normal /= n;
    h.offset /= n;
  }
  const int m = static_cast<int>(hs.size());
  if (m < dim + 1) return out;
  if (detail::binomial(m, static_cast<int>(dim)) > 5e6)
    throw Error(ErrorCode::DimensionTooLarge, "too many half-spaces for vertex enumeration");

  Scalar mag = 0;
  for (const auto& h : hs) mag = std::max(mag, std::abs(h.offset));
  const Scalar feas_tol = Scalar(1e-10) * std::max(mag, Scalar(1e-300));

  std::vector<Vec> found;
  std::vector<int> idx(static_cast<std::size_t>(dim));
  std::iota(idx.begin(), idx.end(), 0);
  do {
    Mat a(dim, dim);
    Vec b(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
      a.row(k) = hs[static_cast<std::size_t>(idx[k])].normal.transpose();
      b(k) = hs[static_cast<std::size_t>(idx[k])].offset;
    }
    Eigen::FullPivLU<Mat> lu(a);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) continue;
    Vec x = lu.solve(b);
    bool feasible = std::all_of(hs.begin(), hs.end(), [&](const Half& h) { return h.contains(x, feas_tol); });
    if (feasible) found.push_back(x);
  } while (detail::next_combination(idx, m));

  Mat v(dim, static_cast<Eigen::Index>(found.size()));
  for (std::size_t k = 0; k < found.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = found[k];
  out.tol_ = default_tol(v);
  out.vertices_ = dedupe(v, out.tol_);
  out.halfspaces_ = std::move(hs);
  out.normalize();
  return out;
}

template <typename Scalar>
ConvexPolytope<Scalar> ConvexPolytope<Scalar>::from_representation(const Mat& vertices, std::vector<Half> hs) {
  ConvexPolytope out(vertices.rows());
  for (auto& h : hs) {
    const Scalar n = h.normal.norm();
    h.normal /= n;
    h.offset /= n;
  }
  out.tol_ = default_tol(vertices);
  out.vertices_ = dedupe(vertices, out.tol_);
  out.halfspaces_ = std::move(hs);
  out.normalize();
  return out;
}

template <typename Scalar>
ConvexPolytope<Scalar> ConvexPolytope<Scalar>::clip(const Half& h_in) const {
  if (empty()) return *this;
  Half h = h_in;
  const Scalar nn = h.normal.norm();
  if (nn <= Scalar(0)) throw Error(ErrorCode::InvalidArgument, "zero half-space normal");
  h.normal /= nn;
  h.offset /= nn;

  const Eigen::Index nv = vertices_.cols();
  Vec s(nv);
  for (Eigen::Index i = 0; i < nv; ++i) s(i) = h.signed_distance(vertices_.col(i));
  if (s.minCoeff() >= -tol_) return *this;
  if (s.maxCoeff() <= tol_) return ConvexPolytope(dim_);

  // Active facet sets; two vertices span an edge when their common active
  // normals have rank dim-1.
  std::vector<std::vector<int>> active(static_cast<std::size_t>(nv));
  for (Eigen::Index i = 0; i < nv; ++i)
    for (std::size_t f = 0; f < halfspaces_.size(); ++f)
      if (std::abs(halfspaces_[f].signed_distance(vertices_.col(i))) <= tol_)
        active[static_cast<std::size_t>(i)].push_back(static_cast<int>(f));

  std::vector<Vec> out;
  for (Eigen::Index i = 0; i < nv; ++i)
    if (s(i) >= -tol_) out.push_back(vertices_.col(i));

  std::vector<int> common;
  for (Eigen::Index i = 0; i < nv; ++i) {
    if (s(i) <= tol_) continue;
    for (Eigen::Index j = 0; j < nv; ++j) {
      if (s(j) >= -tol_) continue;
      const auto& ai = active[static_cast<std::size_t>(i)];
      const auto& aj = active[static_cast<std::size_t>(j)];
      common.clear();
      std::set_intersection(ai.begin(), ai.end(), aj.begin(), aj.end(), std::back_inserter(common));
      if (static_cast<Eigen::Index>(common.size()) < dim_ - 1) continue;
      if (dim_ > 1) {
        Mat a(static_cast<Eigen::Index>(common.size()), dim_);
        for (std::size_t k = 0; k < common.size(); ++k)
          a.row(static_cast<Eigen::Index>(k)) = halfspaces_[static_cast<std::size_t>(common[k])].normal.transpose();
        if (detail::numeric_rank(a, 1e-9) != dim_ - 1) continue;
      }
      const Scalar t = s(i) / (s(i) - s(j));
      out.push_back(vertices_.col(i) + t * (vertices_.col(j) - vertices_.col(i)));
    }
  }

  ConvexPolytope res(dim_);
  Mat v(dim_, static_cast<Eigen::Index>(out.size()));
  for (std::size_t k = 0; k < out.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = out[k];
  res.tol_ = tol_;
  res.vertices_ = dedupe(v, tol_);
  res.halfspaces_ = halfspaces_;
  res.halfspaces_.push_back(h);
  res.normalize();
  return res;
}

template <typename Scalar>
Scalar ConvexPolytope<Scalar>::volume() const {
  if (empty()) return Scalar(0);
  if (dim_ == 1) return vertices_.row(0).maxCoeff() - vertices_.row(0).minCoeff();
  if (dim_ == 2) {
    // Shoelace after angular sort around the centroid.
    const Vec c = centroid();
    std::vector<std::pair<Scalar, Eigen::Index>> order;
    for (Eigen::Index i = 0; i < vertices_.cols(); ++i)
      order.emplace_back(std::atan2(vertices_(1, i) - c(1), vertices_(0, i) - c(0)), i);
    std::sort(order.begin(), order.end());
    Scalar area = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto p = vertices_.col(order[k].second) - c;
      const auto q = vertices_.col(order[(k + 1) % order.size()].second) - c;
      area += p(0) * q(1) - p(1) * q(0);
    }
    return std::abs(area) / 2;
  }
  const Vec c = centroid();
  Scalar total = 0;
  for (std::size_t f = 0; f < halfspaces_.size(); ++f) {
    const Half& h = halfspaces_[f];
    const Scalar height = h.signed_distance(c);
    const auto inc = incident(h);
    const Mat basis = detail::complement_basis<Scalar>(h.normal);
    const Vec origin = vertices_.col(inc.front());

    ConvexPolytope facet(dim_ - 1);
    facet.tol_ = tol_;
    facet.vertices_.resize(dim_ - 1, static_cast<Eigen::Index>(inc.size()));
    for (std::size_t k = 0; k < inc.size(); ++k)
      facet.vertices_.col(static_cast<Eigen::Index>(k)) = basis.transpose() * (vertices_.col(inc[k]) - origin);
    for (std::size_t g = 0; g < halfspaces_.size(); ++g) {
      if (g == f) continue;
      Vec n = basis.transpose() * halfspaces_[g].normal;
      const Scalar len = n.norm();
      if (len <= Scalar(1e-9)) continue;
      facet.halfspaces_.push_back(Half{n / len, (halfspaces_[g].offset - halfspaces_[g].normal.dot(origin)) / len});
    }
    facet.normalize();
    total += height * facet.volume();
  }
  return total / static_cast<Scalar>(dim_);
}

using Polytope = ConvexPolytope<double>;

}  // namespace curtain
